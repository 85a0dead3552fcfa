//! Ingestion and validation of the two corpora: labeled tweets and
//! fact-checked articles, both as JSON-lines files.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topics::TopicAssignment;

/// A labeled social post. `misleading` marks posts carrying misinformation;
/// engagement counts are non-critical metadata and default to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub misleading: bool,
    #[serde(default)]
    pub replies: u64,
    #[serde(default)]
    pub retweets: u64,
    #[serde(default)]
    pub likes: u64,
}

/// A fact-checked article. `content` may be empty; title-only matching is
/// still valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactArticle {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub content: String,
    #[serde(default)]
    pub source_site: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_tweets: usize,
    pub n_misleading: usize,
    pub n_articles: usize,
    /// topic label -> (count, percentage). `Unknown` is a reported bucket.
    pub per_topic_counts: BTreeMap<String, (usize, f64)>,
}

pub const UNKNOWN_LABEL: &str = "Unknown";

fn load_jsonl<T, F>(path: &Path, validate: F) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    F: Fn(&T) -> std::result::Result<&str, String>,
{
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line_no,
            reason: e.to_string(),
        })?;
        let id = validate(&record).map_err(|reason| Error::MalformedRecord { line_no, reason })?;
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(records)
}

pub fn load_tweets(path: &Path) -> Result<Vec<Tweet>> {
    load_jsonl(path, |t: &Tweet| {
        if t.text.trim().is_empty() {
            return Err("empty text".to_string());
        }
        Ok(&t.id)
    })
}

pub fn load_articles(path: &Path) -> Result<Vec<FactArticle>> {
    load_jsonl(path, |a: &FactArticle| {
        if a.title.trim().is_empty() {
            return Err("empty title".to_string());
        }
        Ok(&a.id)
    })
}

pub fn save_tweets(path: &Path, tweets: &[Tweet]) -> Result<()> {
    save_jsonl(path, tweets)
}

pub fn save_articles(path: &Path, articles: &[FactArticle]) -> Result<()> {
    save_jsonl(path, articles)
}

pub fn save_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Per-topic counts and percentages over the tweet corpus. Every tweet must
/// have an assignment; an absent primary topic counts under `Unknown`.
pub fn corpus_stats(tweets: &[Tweet], assignments: &[TopicAssignment]) -> Result<CorpusStats> {
    let by_id: HashMap<&str, &TopicAssignment> =
        assignments.iter().map(|a| (a.doc_id.as_str(), a)).collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_misleading = 0;
    for tweet in tweets {
        let assignment = by_id
            .get(tweet.id.as_str())
            .ok_or_else(|| Error::MissingAssignment(tweet.id.clone()))?;
        let label = assignment
            .primary
            .clone()
            .unwrap_or_else(|| UNKNOWN_LABEL.to_string());
        *counts.entry(label).or_insert(0) += 1;
        if tweet.misleading {
            n_misleading += 1;
        }
    }
    let n = tweets.len();
    let per_topic_counts = counts
        .into_iter()
        .map(|(label, c)| (label, (c, 100.0 * c as f64 / n as f64)))
        .collect();
    Ok(CorpusStats {
        n_tweets: n,
        n_misleading,
        n_articles: 0,
        per_topic_counts,
    })
}
