//! Corpus ingest, tokenization, label collapse and deterministic splits.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::keyed_hash;

/// One forum comment / tweet / dialog turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub text: String,
    /// Forum (subreddit) name; empty for corpora without a forum notion.
    #[serde(default)]
    pub forum: String,
    /// Source-taxonomy class name, if the corpus is annotated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Binary target label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "sensitive")]
    Sensitive,
    #[serde(rename = "nonsensitive")]
    Nonsensitive,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Sensitive => "sensitive",
            Label::Nonsensitive => "nonsensitive",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sensitive" => Ok(Label::Sensitive),
            "nonsensitive" => Ok(Label::Nonsensitive),
            other => Err(Error::data(format!("unknown binary label `{other}`"))),
        }
    }
}

/// An ordered sequence of normalized tokens.
///
/// Invariants: no token is empty, no token contains whitespace. The only ways
/// to obtain one are [`tokenize`] and the validating [`TokenSeq::from_tokens`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for t in &tokens {
            if t.is_empty() {
                return Err(Error::data("token sequence contains an empty token"));
            }
            if t.chars().any(char::is_whitespace) {
                return Err(Error::data(format!("token `{t}` contains whitespace")));
            }
        }
        Ok(TokenSeq(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }
}

/// Lowercase, split on Unicode whitespace, and trim non-alphanumeric
/// characters from both ends of each token. Interior characters (commas,
/// apostrophes, anything) survive, so "a,,b" and "you're" stay intact while
/// "stupid!" becomes "stupid". Tokens that trim away entirely are dropped.
///
/// Total and deterministic; `""` tokenizes to an empty sequence.
pub fn tokenize(text: &str) -> TokenSeq {
    let lowered = text.to_lowercase();
    let tokens = lowered
        .split_whitespace()
        .map(|raw| raw.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    TokenSeq(tokens)
}

/// Maps source-taxonomy class names onto the binary label space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    sensitive: BTreeSet<String>,
    nonsensitive: BTreeSet<String>,
}

impl LabelMapping {
    pub fn new<I, J, S, T>(sensitive: I, nonsensitive: J) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let sensitive: BTreeSet<String> = sensitive.into_iter().map(Into::into).collect();
        let nonsensitive: BTreeSet<String> = nonsensitive.into_iter().map(Into::into).collect();
        if let Some(both) = sensitive.intersection(&nonsensitive).next() {
            return Err(Error::config(format!(
                "label class `{both}` is listed as both sensitive and nonsensitive"
            )));
        }
        if sensitive.is_empty() && nonsensitive.is_empty() {
            return Err(Error::config("label mapping has no classes"));
        }
        Ok(LabelMapping {
            sensitive,
            nonsensitive,
        })
    }

    pub fn sensitive_classes(&self) -> impl Iterator<Item = &str> {
        self.sensitive.iter().map(String::as_str)
    }

    pub fn nonsensitive_classes(&self) -> impl Iterator<Item = &str> {
        self.nonsensitive.iter().map(String::as_str)
    }

    pub fn is_sensitive_class(&self, class: &str) -> bool {
        self.sensitive.contains(class)
    }
}

/// Collapse a source class name to the binary label.
///
/// A class in neither set is an error, never a silent drop: a mapping bug
/// must surface.
pub fn collapse_label(gold_label: &str, mapping: &LabelMapping) -> Result<Label> {
    if mapping.sensitive.contains(gold_label) {
        Ok(Label::Sensitive)
    } else if mapping.nonsensitive.contains(gold_label) {
        Ok(Label::Nonsensitive)
    } else {
        Err(Error::data(format!(
            "gold label `{gold_label}` is not covered by the label mapping"
        )))
    }
}

/// Train/dev/test split fractions plus the seed that fixes the assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub dev_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_frac: f64, dev_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_frac,
            dev_frac,
            test_frac,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train", self.train_frac),
            ("dev", self.dev_frac),
            ("test", self.test_frac),
        ] {
            if !(0.0..=1.0).contains(&f) || !f.is_finite() {
                return Err(Error::config(format!(
                    "{name} fraction {f} is outside [0, 1]"
                )));
            }
        }
        let sum = self.train_frac + self.dev_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// The three partitions produced by [`split_dataset`].
#[derive(Debug, Clone, Default)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// Partition `items` into train/dev/test.
///
/// Items are ranked by a stable hash of (seed, id) and cut at boundaries
/// chosen by largest-remainder rounding, so:
/// - membership is a function of the id set and seed only — reordering the
///   input file cannot move an item between partitions;
/// - partition sizes are exact to within the floor/ceiling of `N * frac`.
pub fn split_dataset<T>(
    items: Vec<T>,
    spec: &SplitSpec,
    id_of: impl Fn(&T) -> &str,
) -> Result<Splits<T>> {
    spec.validate()?;

    let mut keyed: Vec<(u64, T)> = items
        .into_iter()
        .map(|item| (keyed_hash(spec.seed, id_of(&item)), item))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| id_of(&a.1).cmp(id_of(&b.1))));

    let n = keyed.len();
    let sizes = largest_remainder_sizes(
        n,
        &[spec.train_frac, spec.dev_frac, spec.test_frac],
    );

    let mut iter = keyed.into_iter().map(|(_, item)| item);
    let train: Vec<T> = iter.by_ref().take(sizes[0]).collect();
    let dev: Vec<T> = iter.by_ref().take(sizes[1]).collect();
    let test: Vec<T> = iter.collect();
    debug_assert_eq!(test.len(), sizes[2]);

    Ok(Splits { train, dev, test })
}

/// Apportion `n` items over fractions: floor each share, then hand the
/// leftover items to the largest fractional remainders (earlier partition
/// wins ties).
fn largest_remainder_sizes(n: usize, fracs: &[f64]) -> Vec<usize> {
    let mut sizes: Vec<usize> = Vec::with_capacity(fracs.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(fracs.len());
    for (i, &f) in fracs.iter().enumerate() {
        let exact = n as f64 * f;
        let fl = exact.floor();
        sizes.push(fl as usize);
        remainders.push((exact - fl, i));
    }
    let assigned: usize = sizes.iter().sum();
    let mut leftover = n - assigned.min(n);
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for (_, idx) in remainders {
        if leftover == 0 {
            break;
        }
        sizes[idx] += 1;
        leftover -= 1;
    }
    sizes
}

/// On-disk corpus formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line: `id` (required), `text` (required),
    /// `forum` (optional, default ""), `label` (optional).
    Jsonl,
    /// `id<TAB>forum<TAB>label<TAB>text`; `label` may be `-` for none.
    Tsv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::config(format!(
                "unknown corpus format `{other}` (expected jsonl or tsv)"
            ))),
        }
    }
}

impl std::fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
        })
    }
}

/// Streaming corpus reader.
///
/// Yields one [`Utterance`] per well-formed record in file order. Malformed
/// records (unparseable line, missing required field, empty id) are skipped
/// and tallied, never yielded; I/O failures are fatal. After iteration,
/// `records() + skipped()` equals the number of input lines.
pub struct CorpusReader<R: BufRead> {
    lines: Lines<R>,
    format: CorpusFormat,
    path: PathBuf,
    records: u64,
    skipped: u64,
}

impl CorpusReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(CorpusReader {
            lines: BufReader::new(file).lines(),
            format,
            path: path.to_path_buf(),
            records: 0,
            skipped: 0,
        })
    }
}

impl<R: BufRead> CorpusReader<R> {
    pub fn from_reader(reader: R, format: CorpusFormat) -> Self {
        CorpusReader {
            lines: reader.lines(),
            format,
            path: PathBuf::from("<memory>"),
            records: 0,
            skipped: 0,
        }
    }

    /// Well-formed records yielded so far.
    pub fn records(&self) -> u64 {
        self.records
    }

    /// Malformed records skipped so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    fn parse_line(&self, line: &str) -> Option<Utterance> {
        let utt = match self.format {
            CorpusFormat::Jsonl => serde_json::from_str::<Utterance>(line).ok()?,
            CorpusFormat::Tsv => {
                let mut parts = line.splitn(4, '\t');
                let id = parts.next()?.to_owned();
                let forum = parts.next()?.to_owned();
                let label = parts.next()?;
                let text = parts.next()?.to_owned();
                Utterance {
                    id,
                    text,
                    forum,
                    label: match label {
                        "-" | "" => None,
                        other => Some(other.to_owned()),
                    },
                }
            }
        };
        if utt.id.is_empty() {
            return None;
        }
        Some(utt)
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Utterance>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.lines.next()? {
                Err(e) => return Some(Err(Error::io(&self.path, e))),
                Ok(line) => match self.parse_line(&line) {
                    Some(utt) => {
                        self.records += 1;
                        return Some(Ok(utt));
                    }
                    None => {
                        self.skipped += 1;
                    }
                },
            }
        }
    }
}

/// Write utterances in a corpus format. Round-trips through [`CorpusReader`].
pub fn write_corpus<'a>(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    utterances: impl IntoIterator<Item = &'a Utterance>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for utt in utterances {
        match format {
            CorpusFormat::Jsonl => {
                let line = serde_json::to_string(utt)
                    .map_err(|e| Error::data(format!("cannot serialize record {}: {e}", utt.id)))?;
                writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
            }
            CorpusFormat::Tsv => {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    utt.id,
                    utt.forum,
                    utt.label.as_deref().unwrap_or("-"),
                    utt.text
                )
                .map_err(|e| Error::io(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    fn read_all(data: &str, format: CorpusFormat) -> (Vec<Utterance>, u64, u64) {
        let mut reader = CorpusReader::from_reader(Cursor::new(data.to_owned()), format);
        let utts: Vec<Utterance> = reader.by_ref().map(|r| r.unwrap()).collect();
        (utts, reader.records(), reader.skipped())
    }

    #[test]
    fn read_single_jsonl_record() {
        let (utts, records, skipped) =
            read_all(r#"{"id":"a","text":"hi","forum":"f"}"#, CorpusFormat::Jsonl);
        assert_eq!(utts.len(), 1);
        assert_eq!(records, 1);
        assert_eq!(skipped, 0);
        assert_eq!(utts[0].id, "a");
        assert_eq!(utts[0].text, "hi");
        assert_eq!(utts[0].forum, "f");
        assert_eq!(utts[0].label, None);
    }

    #[test]
    fn read_empty_file() {
        let (utts, records, skipped) = read_all("", CorpusFormat::Jsonl);
        assert!(utts.is_empty());
        assert_eq!((records, skipped), (0, 0));
    }

    #[test]
    fn read_skips_record_missing_text() {
        let data = concat!(
            r#"{"id":"a","text":"one"}"#,
            "\n",
            r#"{"id":"b","forum":"f"}"#,
            "\n",
            r#"{"id":"c","text":"three"}"#,
            "\n"
        );
        let (utts, records, skipped) = read_all(data, CorpusFormat::Jsonl);
        assert_eq!(utts.len(), 2);
        assert_eq!(records, 2);
        assert_eq!(skipped, 1);
    }

    #[test]
    fn records_plus_skips_equal_line_count() {
        let data = "not json\n{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"\",\"text\":\"y\"}\n{bad\n";
        let (utts, records, skipped) = read_all(data, CorpusFormat::Jsonl);
        assert_eq!(utts.len(), 1);
        assert_eq!(records + skipped, 4);
    }

    #[test]
    fn read_tsv_with_missing_label() {
        let data = "a\tf\t-\thello there\nb\tg\thate\tsome text\twith tab\n";
        let (utts, _, skipped) = read_all(data, CorpusFormat::Tsv);
        assert_eq!(skipped, 0);
        assert_eq!(utts[0].label, None);
        assert_eq!(utts[1].label.as_deref(), Some("hate"));
        // splitn(4) keeps interior tabs inside the text field
        assert_eq!(utts[1].text, "some text\twith tab");
    }

    #[test]
    fn corpus_roundtrip_both_formats() {
        let utts = vec![
            Utterance {
                id: "a1".into(),
                text: "hello world".into(),
                forum: "news".into(),
                label: Some("clean".into()),
            },
            Utterance {
                id: "a2".into(),
                text: "".into(),
                forum: "".into(),
                label: None,
            },
        ];
        for format in [CorpusFormat::Jsonl, CorpusFormat::Tsv] {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("c");
            write_corpus(&path, format, &utts).unwrap();
            let back: Vec<Utterance> = CorpusReader::open(&path, format)
                .unwrap()
                .map(|r| r.unwrap())
                .collect();
            assert_eq!(back, utts, "format {format}");
        }
    }

    #[test]
    fn tokenize_golden_cases() {
        assert_eq!(tokenize("You're STUPID!").tokens(), ["you're", "stupid"]);
        assert!(tokenize("").is_empty());
        // only surrounding punctuation is stripped; "a,,b" keeps its commas
        assert_eq!(tokenize("  a,,b.  c ").tokens(), ["a,,b", "c"]);
        assert!(tokenize("!!! ... --").is_empty());
    }

    #[test]
    fn tokenize_idempotent_on_joined_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alphabet: Vec<char> = "abcXYZ0,.'!?\u{e9}\u{df} \t".chars().collect();
        for _ in 0..300 {
            let len = rng.random_range(0..30);
            let s: String = (0..len)
                .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                .collect();
            let once = tokenize(&s);
            let again = tokenize(&once.tokens().join(" "));
            assert_eq!(once, again, "input {s:?}");
        }
    }

    fn toxic_mapping() -> LabelMapping {
        LabelMapping::new(
            ["toxic", "severe toxic", "obscene", "threat", "insult", "identity hate"],
            ["non-toxic"],
        )
        .unwrap()
    }

    fn twitter_mapping() -> LabelMapping {
        LabelMapping::new(["Hate", "Offensive"], ["Neither"]).unwrap()
    }

    #[test]
    fn collapse_label_examples() {
        assert_eq!(
            collapse_label("threat", &toxic_mapping()).unwrap(),
            Label::Sensitive
        );
        assert_eq!(
            collapse_label("Neither", &twitter_mapping()).unwrap(),
            Label::Nonsensitive
        );
        let err = collapse_label("banana", &twitter_mapping()).unwrap_err();
        assert!(err.to_string().contains("banana"));
    }

    #[test]
    fn label_mapping_rejects_overlap() {
        assert!(LabelMapping::new(["x"], ["x"]).is_err());
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("id-{i}")).collect()
    }

    #[test]
    fn split_ten_items_exact_fractions() {
        let spec = SplitSpec::new(0.8, 0.1, 0.1, 7).unwrap();
        let splits = split_dataset(ids(10), &spec, |s| s).unwrap();
        assert_eq!(
            (splits.train.len(), splits.dev.len(), splits.test.len()),
            (8, 1, 1)
        );
    }

    #[test]
    fn split_membership_ignores_input_order() {
        let spec = SplitSpec::new(0.8, 0.1, 0.1, 7).unwrap();
        let forward = split_dataset(ids(100), &spec, |s| s).unwrap();
        let mut reversed_input = ids(100);
        reversed_input.reverse();
        let reversed = split_dataset(reversed_input, &spec, |s| s).unwrap();

        let set = |v: &Vec<String>| v.iter().cloned().collect::<BTreeSet<_>>();
        assert_eq!(set(&forward.train), set(&reversed.train));
        assert_eq!(set(&forward.dev), set(&reversed.dev));
        assert_eq!(set(&forward.test), set(&reversed.test));
    }

    #[test]
    fn split_sizes_on_twitter_scale_corpus() {
        let spec = SplitSpec::new(0.9, 0.0, 0.1, 13).unwrap();
        let splits = split_dataset(ids(24_783), &spec, |s| s).unwrap();
        assert_eq!(
            (splits.train.len(), splits.dev.len(), splits.test.len()),
            (22_305, 0, 2_478)
        );
    }

    #[test]
    fn split_partitions_disjoint_and_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(0..500);
            let seed = rng.random::<u64>();
            let spec = SplitSpec::new(0.6, 0.25, 0.15, seed).unwrap();
            let input = ids(n);
            let splits = split_dataset(input.clone(), &spec, |s| s).unwrap();
            let mut all: Vec<String> = splits
                .train
                .iter()
                .chain(&splits.dev)
                .chain(&splits.test)
                .cloned()
                .collect();
            assert_eq!(all.len(), n);
            all.sort();
            all.dedup();
            assert_eq!(all.len(), n, "partitions overlap");
            let mut expected = input;
            expected.sort();
            assert_eq!(all, expected, "partitions lose items");
        }
    }

    #[test]
    fn split_rejects_bad_fractions() {
        assert!(SplitSpec::new(0.5, 0.1, 0.1, 0).is_err());
        assert!(SplitSpec::new(1.2, -0.1, -0.1, 0).is_err());
    }
}
