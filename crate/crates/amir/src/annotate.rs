//! Entity recognition with a domain gazetteer (including the custom VAC_TYPE
//! class) layered over a pluggable base tagger, plus lexicon/rule sentiment
//! classification and the NER evaluation harness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::token_spans;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
}

/// Exact-term dictionary mapping lowercase surface forms (multi-word allowed)
/// to entity classes. Term sets are disjoint across classes.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Gazetteer {
    pub classes: BTreeMap<String, BTreeSet<String>>,
}

impl Gazetteer {
    /// TSV file, one `label<TAB>term` per line; blank lines and `#` comments
    /// ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)?;
        let mut gaz = Gazetteer::default();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, term) = line
                .split_once('\t')
                .ok_or(Error::MalformedLine { line_no: idx + 1 })?;
            gaz.insert(label.trim(), term)?;
        }
        Ok(gaz)
    }

    pub fn insert(&mut self, label: &str, term: &str) -> Result<()> {
        let norm = normalize_term(term);
        if norm.is_empty() {
            return Err(Error::ConfigInvalid(format!("empty gazetteer term for {label:?}")));
        }
        for (other, terms) in &self.classes {
            if other != label && terms.contains(&norm) {
                return Err(Error::ConfigInvalid(format!(
                    "term {norm:?} present in both {other:?} and {label:?}"
                )));
            }
        }
        self.classes.entry(label.to_string()).or_default().insert(norm);
        Ok(())
    }

    fn lookup(&self, term: &str) -> Option<&str> {
        self.classes
            .iter()
            .find(|(_, terms)| terms.contains(term))
            .map(|(label, _)| label.as_str())
    }

    /// Longest term length in words, bounding the match window.
    fn max_words(&self) -> usize {
        self.classes
            .values()
            .flatten()
            .map(|t| t.split(' ').count())
            .max()
            .unwrap_or(0)
    }
}

fn normalize_term(term: &str) -> String {
    term.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// External entity tagger that the gazetteer layers over. A `None` provider
/// means gazetteer-only recognition.
pub trait BaseTagger {
    fn tag(&self, text: &str) -> Vec<EntitySpan>;
}

/// Gazetteer longest-match scan (case-insensitive, token-boundary aligned);
/// base-tagger spans fill the non-overlapping remainder. Gazetteer labels
/// always win on overlap.
pub fn recognize(text: &str, gazetteer: &Gazetteer, base: Option<&dyn BaseTagger>) -> Vec<EntitySpan> {
    let spans = token_spans(text);
    let words: Vec<String> = spans.iter().map(|&(s, e)| text[s..e].to_lowercase()).collect();
    let window = gazetteer.max_words();
    let mut out: Vec<EntitySpan> = Vec::new();
    let mut i = 0;
    while i < spans.len() {
        let mut matched: Option<(usize, &str)> = None;
        let upper = (i + window).min(spans.len());
        for j in (i + 1..=upper).rev() {
            let candidate = words[i..j].join(" ");
            if let Some(label) = gazetteer.lookup(&candidate) {
                matched = Some((j, label));
                break;
            }
        }
        if let Some((j, label)) = matched {
            let (start, end) = (spans[i].0, spans[j - 1].1);
            out.push(EntitySpan {
                surface: text[start..end].to_string(),
                start,
                end,
                label: label.to_string(),
            });
            i = j;
        } else {
            i += 1;
        }
    }
    if let Some(tagger) = base {
        for span in tagger.tag(text) {
            let overlaps = out.iter().any(|g| span.start < g.end && g.start < span.end);
            if !overlaps {
                out.push(span);
            }
        }
        out.sort_by(|a, b| a.start.cmp(&b.start).then(a.end.cmp(&b.end)));
    }
    out
}

/// Fraction of documents with at least one recognized entity.
pub fn entity_coverage(
    texts: &[String],
    gazetteer: &Gazetteer,
    base: Option<&dyn BaseTagger>,
) -> (usize, f64) {
    if texts.is_empty() {
        return (0, 0.0);
    }
    let covered = texts
        .iter()
        .filter(|t| !recognize(t, gazetteer, base).is_empty())
        .count();
    (covered, covered as f64 / texts.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NerMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Exact-span-and-label matching, micro-averaged. Accuracy is exact-match
/// spans over gold spans.
pub fn evaluate_ner(predicted: &[Vec<EntitySpan>], gold: &[Vec<EntitySpan>]) -> Result<NerMetrics> {
    if predicted.len() != gold.len() {
        return Err(Error::DocMismatch);
    }
    let mut tp = 0usize;
    let mut n_pred = 0usize;
    let mut n_gold = 0usize;
    for (pred, gold_doc) in predicted.iter().zip(gold) {
        n_pred += pred.len();
        n_gold += gold_doc.len();
        let mut unmatched: Vec<&EntitySpan> = gold_doc.iter().collect();
        for p in pred {
            if let Some(pos) = unmatched
                .iter()
                .position(|g| g.start == p.start && g.end == p.end && g.label == p.label)
            {
                unmatched.remove(pos);
                tp += 1;
            }
        }
    }
    let precision = if n_pred > 0 { tp as f64 / n_pred as f64 } else { 0.0 };
    let recall = if n_gold > 0 { tp as f64 / n_gold as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(NerMetrics {
        accuracy: recall,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentLabel {
    pub polarity: Polarity,
    pub compound: f64,
}

pub const POSITIVE_THRESHOLD: f64 = 0.05;
pub const NEGATIVE_THRESHOLD: f64 = -0.05;

/// Term -> valence table, TSV `term<TAB>valence`, valence in [-4, 4].
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    valence: HashMap<String, f64>,
}

impl SentimentLexicon {
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)?;
        let mut valence = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, value) = line
                .split_once('\t')
                .ok_or(Error::MalformedLine { line_no: idx + 1 })?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::MalformedLine { line_no: idx + 1 })?;
            valence.insert(term.trim().to_lowercase(), value);
        }
        Ok(SentimentLexicon { valence })
    }

    pub fn from_pairs<I: IntoIterator<Item = (S, f64)>, S: Into<String>>(pairs: I) -> Self {
        SentimentLexicon {
            valence: pairs
                .into_iter()
                .map(|(t, v)| (t.into().to_lowercase(), v))
                .collect(),
        }
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.valence.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }
}

const NEGATORS: &[&str] = &[
    "not", "no", "never", "neither", "nor", "cannot", "can't", "won't", "don't", "doesn't",
    "didn't", "isn't", "aren't", "wasn't", "ain't", "without",
];

const BOOSTERS: &[&str] = &[
    "very", "extremely", "really", "absolutely", "incredibly", "totally", "hugely", "so",
];

const NEGATION_FACTOR: f64 = -0.74;
const BOOSTER_INCREMENT: f64 = 0.293;
const NORMALIZATION_ALPHA: f64 = 15.0;
const NEGATION_WINDOW: usize = 3;

/// Valence sum with negation flipping and booster amplification, squashed by
/// sum / sqrt(sum^2 + 15). Polarity follows the fixed +/-0.05 thresholds.
pub fn classify_sentiment(text: &str, lexicon: &SentimentLexicon) -> SentimentLabel {
    let tokens: Vec<String> = token_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect();
    let mut sum = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let mut valence = match lexicon.get(tok) {
            Some(v) => v,
            None => continue,
        };
        if valence == 0.0 {
            continue;
        }
        let window_start = i.saturating_sub(NEGATION_WINDOW);
        for prev in &tokens[window_start..i] {
            if NEGATORS.contains(&prev.as_str()) {
                valence *= NEGATION_FACTOR;
            } else if BOOSTERS.contains(&prev.as_str()) {
                valence += valence.signum() * BOOSTER_INCREMENT;
            }
        }
        sum += valence;
    }
    let compound = if sum == 0.0 {
        0.0
    } else {
        sum / (sum * sum + NORMALIZATION_ALPHA).sqrt()
    };
    SentimentLabel {
        polarity: polarity_of(compound),
        compound,
    }
}

pub fn polarity_of(compound: f64) -> Polarity {
    if compound >= POSITIVE_THRESHOLD {
        Polarity::Positive
    } else if compound <= NEGATIVE_THRESHOLD {
        Polarity::Negative
    } else {
        Polarity::Neutral
    }
}
