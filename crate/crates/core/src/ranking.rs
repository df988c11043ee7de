//! Forum scoring by blacklist-token density, and threshold partitioning.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::blacklist::{count_matches, Blacklist};
use crate::corpus::{tokenize, Utterance};
use crate::error::{Error, Result};

/// Per-forum blacklist-density statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct ForumScore {
    pub forum: String,
    /// Blacklist-token occurrences summed over the forum's utterances.
    pub blacklist_hits: u64,
    /// All token positions summed over the forum's utterances.
    pub total_tokens: u64,
    /// `blacklist_hits / total_tokens`, or 0 for an empty forum.
    pub density: f64,
}

impl ForumScore {
    pub fn new(forum: String, blacklist_hits: u64, total_tokens: u64) -> Self {
        let density = if total_tokens == 0 {
            0.0
        } else {
            blacklist_hits as f64 / total_tokens as f64
        };
        ForumScore {
            forum,
            blacklist_hits,
            total_tokens,
            density,
        }
    }
}

/// Forums bucketed by density thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForumPartition {
    pub sensitive_forums: BTreeSet<String>,
    pub nonsensitive_forums: BTreeSet<String>,
    pub excluded_forums: BTreeSet<String>,
    pub low_threshold: f64,
    pub high_threshold: f64,
}

/// Tally blacklist hits and token totals per forum.
///
/// Aggregation is a commutative sum of per-utterance counts, so any sharding
/// of the stream gives the same tallies. The result is sorted by density
/// descending, ties broken by forum name ascending.
pub fn score_forums(
    corpus: impl IntoIterator<Item = Result<Utterance>>,
    bl: &Blacklist,
) -> Result<Vec<ForumScore>> {
    let mut tallies: HashMap<String, (u64, u64)> = HashMap::new();
    for utt in corpus {
        let utt = utt?;
        let tokens = tokenize(&utt.text);
        let entry = tallies.entry(utt.forum).or_insert((0, 0));
        entry.0 += count_matches(&tokens, bl);
        entry.1 += tokens.len() as u64;
    }
    let mut scores: Vec<ForumScore> = tallies
        .into_iter()
        .map(|(forum, (hits, total))| ForumScore::new(forum, hits, total))
        .collect();
    scores.sort_by(|a, b| {
        b.density
            .total_cmp(&a.density)
            .then_with(|| a.forum.cmp(&b.forum))
    });
    Ok(scores)
}

/// Bucket scored forums: density < `low` is nonsensitive, density > `high`
/// is sensitive, and the closed band `[low, high]` is excluded. Both
/// comparisons are strict, so boundary densities land in the excluded band.
pub fn partition_forums(scores: &[ForumScore], low: f64, high: f64) -> Result<ForumPartition> {
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
        return Err(Error::config(format!(
            "invalid density thresholds: need 0 <= low < high <= 1, got low={low} high={high}"
        )));
    }
    let mut partition = ForumPartition {
        sensitive_forums: BTreeSet::new(),
        nonsensitive_forums: BTreeSet::new(),
        excluded_forums: BTreeSet::new(),
        low_threshold: low,
        high_threshold: high,
    };
    for s in scores {
        if s.density > high {
            partition.sensitive_forums.insert(s.forum.clone());
        } else if s.density < low {
            partition.nonsensitive_forums.insert(s.forum.clone());
        } else {
            partition.excluded_forums.insert(s.forum.clone());
        }
    }
    Ok(partition)
}

/// Write the score report: `forum<TAB>hits<TAB>total<TAB>density`, in the
/// given (already sorted) order.
pub fn write_score_report(path: impl AsRef<Path>, scores: &[ForumScore]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in scores {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            s.forum, s.blacklist_hits, s.total_tokens, s.density
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a score report back. The density column is recomputed from the
/// integer tallies, so the float formatting in the file is irrelevant.
pub fn read_score_report(path: impl AsRef<Path>) -> Result<Vec<ForumScore>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut scores = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut parts = line.splitn(4, '\t');
        let parse = |field: Option<&str>| -> Result<&str> {
            field.ok_or_else(|| {
                Error::data(format!("{}:{}: malformed score line", path.display(), i + 1))
            })
        };
        let forum = parse(parts.next())?.to_owned();
        let hits: u64 = parse(parts.next())?.parse().map_err(|_| {
            Error::data(format!("{}:{}: bad hit count", path.display(), i + 1))
        })?;
        let total: u64 = parse(parts.next())?.parse().map_err(|_| {
            Error::data(format!("{}:{}: bad token total", path.display(), i + 1))
        })?;
        parse(parts.next())?;
        scores.push(ForumScore::new(forum, hits, total));
    }
    Ok(scores)
}
