//! Ranking metrics (P@k, MAP@k, MRR@k) with criteria-based relevance
//! judgments, and the report generator covering both approaches.
//!
//! MAP@k uses a 1/k positional divisor; the conventional average-precision
//! variant (divide by the relevant count) is available behind a flag for
//! comparison but is not used in reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::MappingResult;
use crate::rebuttal::{criteria_match, AnnotatedTweet, MatchCriteria, ScoredItem};
use crate::similarity::SentencePairScorer;
use crate::topics::TopicAssignment;

pub type RelevanceVector = Vec<bool>;

pub const EVAL_KS: [usize; 5] = [3, 5, 10, 15, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Approach {
    #[serde(rename = "AMIR_SM")]
    AmirSm,
    #[serde(rename = "AMIR_FC")]
    AmirFc,
}

impl Approach {
    pub fn as_str(&self) -> &'static str {
        match self {
            Approach::AmirSm => "AMIR_SM",
            Approach::AmirFc => "AMIR_FC",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub approach: Approach,
    /// "MRR@3" .. "MAP@20"
    pub metrics: BTreeMap<String, f64>,
}

pub fn precision_at_k(rel: &[bool], k: usize) -> Result<f64> {
    if k == 0 || k > rel.len() {
        return Err(Error::KOutOfRange { k, len: rel.len() });
    }
    let hits = rel[..k].iter().filter(|r| **r).count();
    Ok(hits as f64 / k as f64)
}

fn padded(rel: &[bool], k: usize) -> Vec<bool> {
    let mut v = rel.to_vec();
    v.resize(k, false);
    v.truncate(k);
    v
}

/// Mean over queries of (1/k) * sum_i P@i * rel(i). The positional 1/k
/// divisor is deliberate; see `average_precision_conventional` for the
/// textbook normalization.
pub fn map_at_k(rels: &[RelevanceVector], k: usize) -> Result<f64> {
    if rels.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    if k == 0 {
        return Err(Error::KOutOfRange { k, len: 0 });
    }
    let mut total = 0.0;
    for rel in rels {
        let rel = padded(rel, k);
        let mut ap = 0.0;
        for i in 1..=k {
            if rel[i - 1] {
                ap += precision_at_k(&rel, i)?;
            }
        }
        total += ap / k as f64;
    }
    Ok(total / rels.len() as f64)
}

/// Textbook AP@k: positional sum divided by the number of relevant items in
/// the top k; zero-relevant queries contribute 0.
pub fn map_at_k_conventional(rels: &[RelevanceVector], k: usize) -> Result<f64> {
    if rels.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    if k == 0 {
        return Err(Error::KOutOfRange { k, len: 0 });
    }
    let mut total = 0.0;
    for rel in rels {
        let rel = padded(rel, k);
        let n_rel = rel.iter().filter(|r| **r).count();
        if n_rel == 0 {
            continue;
        }
        let mut ap = 0.0;
        for i in 1..=k {
            if rel[i - 1] {
                ap += precision_at_k(&rel, i)?;
            }
        }
        total += ap / n_rel as f64;
    }
    Ok(total / rels.len() as f64)
}

/// Mean reciprocal rank of the first relevant item within k; queries with no
/// relevant item in the window contribute 0.
pub fn mrr_at_k(rels: &[RelevanceVector], k: usize) -> Result<f64> {
    if rels.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    if k == 0 {
        return Err(Error::KOutOfRange { k, len: 0 });
    }
    let total: f64 = rels
        .iter()
        .map(|rel| {
            padded(rel, k)
                .iter()
                .position(|r| *r)
                .map(|i| 1.0 / (i + 1) as f64)
                .unwrap_or(0.0)
        })
        .sum();
    Ok(total / rels.len() as f64)
}

/// Relevance of ranked counter-tweet candidates: the strict criteria applied
/// as a judgment, not a filter.
pub fn judge_sm(
    mis: &AnnotatedTweet,
    recommended: &[&AnnotatedTweet],
    strict: &MatchCriteria,
) -> Result<RelevanceVector> {
    recommended
        .iter()
        .map(|cand| criteria_match(mis, cand, strict))
        .collect()
}

/// Relevance of ranked articles: primary topic equals the mapped fact-check
/// topic of the tweet's topic, and the score clears the threshold.
pub fn judge_fc(
    mis_assignment: &TopicAssignment,
    ranked: &[ScoredItem],
    article_assignments: &[TopicAssignment],
    mappings: &[MappingResult],
    threshold: f64,
) -> RelevanceVector {
    let mapped = mis_assignment.primary.as_deref().and_then(|topic| {
        mappings
            .iter()
            .find(|m| m.source_topic == topic)
            .and_then(|m| m.target_topic.as_deref())
    });
    let topic_of = |id: &str| {
        article_assignments
            .iter()
            .find(|a| a.doc_id == id)
            .and_then(|a| a.primary.as_deref())
    };
    ranked
        .iter()
        .map(|item| match mapped {
            Some(target) => topic_of(&item.id) == Some(target) && item.score >= threshold,
            None => false,
        })
        .collect()
}

fn rank_pool(mis_text: &str, pool: &[(String, String)], scorer: &dyn SentencePairScorer, k: usize) -> Vec<ScoredItem> {
    let mut items: Vec<ScoredItem> = pool
        .iter()
        .map(|(id, text)| ScoredItem {
            id: id.clone(),
            score: scorer.score_pair(mis_text, text).value,
        })
        .collect();
    items.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    items.truncate(k);
    items
}

fn report_from_rels(approach: Approach, rels: &[RelevanceVector], conventional: bool) -> Result<EvalReport> {
    let mut metrics = BTreeMap::new();
    for k in EVAL_KS {
        metrics.insert(format!("MRR@{k}"), mrr_at_k(rels, k)?);
        let map = if conventional {
            map_at_k_conventional(rels, k)?
        } else {
            map_at_k(rels, k)?
        };
        metrics.insert(format!("MAP@{k}"), map);
    }
    Ok(EvalReport { approach, metrics })
}

/// Approach-1 evaluation: every misleading query is ranked against the whole
/// non-misleading pool by similarity alone, then judged by the strict
/// criteria.
pub fn run_evaluation_sm(
    queries: &[AnnotatedTweet],
    pool: &[AnnotatedTweet],
    strict: &MatchCriteria,
    scorer: &dyn SentencePairScorer,
    conventional: bool,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    let max_k = *EVAL_KS.iter().max().unwrap();
    let texts: Vec<(String, String)> = pool
        .iter()
        .filter(|t| !t.tweet.misleading)
        .map(|t| (t.tweet.id.clone(), t.tweet.text.clone()))
        .collect();
    let mut rels = Vec::with_capacity(queries.len());
    for mis in queries {
        let ranked = rank_pool(&mis.tweet.text, &texts, scorer, max_k);
        let resolved: Vec<&AnnotatedTweet> = ranked
            .iter()
            .filter_map(|item| pool.iter().find(|t| t.tweet.id == item.id))
            .collect();
        rels.push(judge_sm(mis, &resolved, strict)?);
    }
    report_from_rels(Approach::AmirSm, &rels, conventional)
}

/// Approach-2 evaluation: every misleading query is ranked against the full
/// article corpus by title similarity, then judged by mapped topic plus
/// threshold.
pub fn run_evaluation_fc(
    queries: &[(crate::corpus::Tweet, TopicAssignment)],
    articles: &[crate::corpus::FactArticle],
    article_assignments: &[TopicAssignment],
    mappings: &[MappingResult],
    scorer: &dyn SentencePairScorer,
    threshold: f64,
    conventional: bool,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    let max_k = *EVAL_KS.iter().max().unwrap();
    let texts: Vec<(String, String)> = articles
        .iter()
        .map(|a| (a.id.clone(), a.title.clone()))
        .collect();
    let mut rels = Vec::with_capacity(queries.len());
    for (tweet, assignment) in queries {
        let ranked = rank_pool(&tweet.text, &texts, scorer, max_k);
        rels.push(judge_fc(assignment, &ranked, article_assignments, mappings, threshold));
    }
    report_from_rels(Approach::AmirFc, &rels, conventional)
}

/// Aligned-text table, one row per report, columns MRR@k then MAP@k.
pub fn render_report_table(reports: &[EvalReport]) -> String {
    let mut columns = vec!["approach".to_string()];
    for k in EVAL_KS {
        columns.push(format!("MRR@{k}"));
    }
    for k in EVAL_KS {
        columns.push(format!("MAP@{k}"));
    }
    let mut rows: Vec<Vec<String>> = vec![columns.clone()];
    for report in reports {
        let mut row = vec![report.approach.as_str().to_string()];
        for name in &columns[1..] {
            let v = report.metrics.get(name).copied().unwrap_or(f64::NAN);
            row.push(format!("{v:.3}"));
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..columns.len())
        .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:>w$}", w = w))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
