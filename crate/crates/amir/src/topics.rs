//! LDA topic modeling of both corpora: collapsed Gibbs fit, topic-count
//! selection by UMass coherence, top-2 topic assignment with Unknown
//! handling, synonym backfill, sub-topic extraction, and the topic
//! co-occurrence graph.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenStream;

/// Fitted LDA state. `phi` is K x V row-stochastic (topic -> word), `theta`
/// is N x K row-stochastic (document -> topic). Refitting with the same seed
/// and inputs reproduces both bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub vocab: Vec<String>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub coherence: f64,
    pub doc_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub doc_id: String,
    /// `None` is the Unknown bucket.
    pub primary: Option<String>,
    pub secondary: Option<String>,
    pub primary_prob: f64,
    pub secondary_prob: f64,
}

/// Human labels per topic index plus per-label synonym lists. The engine
/// never invents label strings; these are curated configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TopicLabelTable {
    pub labels: BTreeMap<usize, String>,
    #[serde(default)]
    pub synonyms: BTreeMap<String, Vec<String>>,
}

impl TopicLabelTable {
    pub fn load(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            labels: BTreeMap<String, String>,
            #[serde(default)]
            synonyms: BTreeMap<String, Vec<String>>,
        }
        let raw: Raw = serde_json::from_str(&fs::read_to_string(path)?)?;
        let mut labels = BTreeMap::new();
        for (k, v) in raw.labels {
            let idx: usize = k.parse().map_err(|_| {
                Error::ConfigInvalid(format!("non-numeric topic index {k:?} in label table"))
            })?;
            labels.insert(idx, v);
        }
        let table = TopicLabelTable {
            labels,
            synonyms: raw.synonyms,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for label in self.labels.values() {
            if !seen.insert(label) {
                return Err(Error::ConfigInvalid(format!("duplicate topic label {label:?}")));
            }
        }
        Ok(())
    }

    /// Every topic index of a K-topic model must be labeled.
    pub fn validate_for_k(&self, k: usize) -> Result<()> {
        for idx in 0..k {
            if !self.labels.contains_key(&idx) {
                return Err(Error::ConfigInvalid(format!("topic index {idx} unlabeled")));
            }
        }
        Ok(())
    }

    pub fn label(&self, idx: usize) -> Option<&str> {
        self.labels.get(&idx).map(String::as_str)
    }
}

pub fn fit_lda(
    docs: &[TokenStream],
    k: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> Result<TopicModel> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    fit_lda_unchecked(docs, k, alpha, beta, iterations, seed)
}

/// Gibbs fit without the K >= 2 guard; sub-topic extraction needs K = 1.
fn fit_lda_unchecked(
    docs: &[TokenStream],
    k: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> Result<TopicModel> {
    if k == 0 {
        return Err(Error::InvalidK(0));
    }
    let (vocab, word_docs) = build_vocab(docs);
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let v = vocab.len();
    let n_docs = docs.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(n_docs);
    let mut n_dk = vec![vec![0usize; k]; n_docs];
    let mut n_kw = vec![vec![0usize; v]; k];
    let mut n_k = vec![0usize; k];

    for (d, words) in word_docs.iter().enumerate() {
        let mut zs = Vec::with_capacity(words.len());
        for &w in words {
            let topic = rng.random_range(0..k);
            zs.push(topic);
            n_dk[d][topic] += 1;
            n_kw[topic][w] += 1;
            n_k[topic] += 1;
        }
        z.push(zs);
    }

    let v_beta = v as f64 * beta;
    let mut weights = vec![0.0f64; k];
    for _sweep in 0..iterations.max(1) {
        for (d, words) in word_docs.iter().enumerate() {
            for (i, &w) in words.iter().enumerate() {
                let old = z[d][i];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (n_dk[d][t] as f64 + alpha) * (n_kw[t][w] as f64 + beta)
                        / (n_k[t] as f64 + v_beta);
                    total += p;
                    weights[t] = total;
                }
                let draw = rng.random::<f64>() * total;
                let new = weights.iter().position(|&cum| draw < cum).unwrap_or(k - 1);

                z[d][i] = new;
                n_dk[d][new] += 1;
                n_kw[new][w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let phi: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let denom = n_k[t] as f64 + v_beta;
            (0..v).map(|w| (n_kw[t][w] as f64 + beta) / denom).collect()
        })
        .collect();
    let theta: Vec<Vec<f64>> = (0..n_docs)
        .map(|d| {
            let n_d: usize = n_dk[d].iter().sum();
            let denom = n_d as f64 + k as f64 * alpha;
            (0..k).map(|t| (n_dk[d][t] as f64 + alpha) / denom).collect()
        })
        .collect();

    let mut model = TopicModel {
        k,
        phi,
        theta,
        vocab,
        alpha,
        beta,
        seed,
        coherence: 0.0,
        doc_ids: docs.iter().map(|d| d.source_id.clone()).collect(),
    };
    model.coherence = coherence(&model, docs, DEFAULT_COHERENCE_TOP_M);
    Ok(model)
}

pub const DEFAULT_COHERENCE_TOP_M: usize = 10;

/// Vocabulary in first-occurrence order plus docs as word-id sequences.
fn build_vocab(docs: &[TokenStream]) -> (Vec<String>, Vec<Vec<usize>>) {
    let mut vocab = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut word_docs = Vec::with_capacity(docs.len());
    for doc in docs {
        let mut ids = Vec::with_capacity(doc.tokens.len());
        for tok in &doc.tokens {
            let id = match index.get(tok.as_str()) {
                Some(&id) => id,
                None => {
                    let id = vocab.len();
                    vocab.push(tok.clone());
                    index.insert(tok.as_str(), id);
                    id
                }
            };
            ids.push(id);
        }
        word_docs.push(ids);
    }
    (vocab, word_docs)
}

/// Top `m` word indices of a phi row, descending weight, ties to the lower
/// word index.
pub fn top_words(model: &TopicModel, topic: usize, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..model.vocab.len()).collect();
    idx.sort_by(|&a, &b| {
        model.phi[topic][b]
            .partial_cmp(&model.phi[topic][a])
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.truncate(m);
    idx
}

/// UMass coherence averaged over topics and word pairs, using the `top_m`
/// words per topic. Pair terms are ln((D(wi,wj)+1)/(D(wj)+1)) with wj the
/// higher-ranked word, so the score is always <= 0 and approaches 0 when top
/// words always co-occur.
pub fn coherence(model: &TopicModel, docs: &[TokenStream], top_m: usize) -> f64 {
    let top_m = top_m.max(2);
    let word_idx: HashMap<&str, usize> = model
        .vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let doc_sets: Vec<HashSet<usize>> = docs
        .iter()
        .map(|d| {
            d.tokens
                .iter()
                .filter_map(|t| word_idx.get(t.as_str()).copied())
                .collect()
        })
        .collect();

    let mut df: HashMap<usize, usize> = HashMap::new();
    let mut codf: HashMap<(usize, usize), usize> = HashMap::new();
    let mut all_top: HashSet<usize> = HashSet::new();
    let per_topic: Vec<Vec<usize>> = (0..model.k)
        .map(|t| top_words(model, t, top_m))
        .collect();
    for words in &per_topic {
        all_top.extend(words.iter().copied());
    }
    for set in &doc_sets {
        for &w in &all_top {
            if set.contains(&w) {
                *df.entry(w).or_insert(0) += 1;
            }
        }
    }
    for words in &per_topic {
        for i in 1..words.len() {
            for j in 0..i {
                let key = pair_key(words[i], words[j]);
                codf.entry(key).or_insert(0);
            }
        }
    }
    for set in &doc_sets {
        for (key, count) in codf.iter_mut() {
            if set.contains(&key.0) && set.contains(&key.1) {
                *count += 1;
            }
        }
    }

    let mut topic_scores = Vec::with_capacity(model.k);
    for words in &per_topic {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 1..words.len() {
            for j in 0..i {
                let co = *codf.get(&pair_key(words[i], words[j])).unwrap_or(&0);
                let dj = *df.get(&words[j]).unwrap_or(&0);
                sum += ((co as f64 + 1.0) / (dj as f64 + 1.0)).ln();
                pairs += 1;
            }
        }
        topic_scores.push(if pairs > 0 { sum / pairs as f64 } else { 0.0 });
    }
    topic_scores.iter().sum::<f64>() / topic_scores.len().max(1) as f64
}

fn pair_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Fit one model per candidate K and keep the most coherent, ties toward the
/// smaller K. `alpha = None` applies the 50/K heuristic per candidate.
pub fn select_k(
    docs: &[TokenStream],
    k_range: (usize, usize),
    alpha: Option<f64>,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> Result<(usize, TopicModel)> {
    let (lo, hi) = k_range;
    if lo > hi {
        return Err(Error::InvalidK(lo));
    }
    let mut best: Option<(usize, TopicModel)> = None;
    for k in lo..=hi {
        let a = alpha.unwrap_or(50.0 / k as f64);
        let model = fit_lda(docs, k, a, beta, iterations, seed)?;
        let better = match &best {
            None => true,
            Some((_, b)) => model.coherence > b.coherence,
        };
        if better {
            best = Some((k, model));
        }
    }
    Ok(best.unwrap())
}

/// Fold a document into a fitted model: deterministic EM over the fixed phi,
/// producing a document-topic row. Empty or fully out-of-vocabulary
/// documents come out uniform.
pub fn infer_theta(model: &TopicModel, doc: &TokenStream) -> Vec<f64> {
    let word_idx: HashMap<&str, usize> = model
        .vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let words: Vec<usize> = doc
        .tokens
        .iter()
        .filter_map(|t| word_idx.get(t.as_str()).copied())
        .collect();
    let k = model.k;
    let mut gamma = vec![1.0 / k as f64; k];
    if words.is_empty() {
        return gamma;
    }
    for _ in 0..50 {
        let mut n_k = vec![0.0f64; k];
        for &w in &words {
            let mut total = 0.0;
            let mut resp = vec![0.0f64; k];
            for t in 0..k {
                let p = model.phi[t][w] * gamma[t];
                resp[t] = p;
                total += p;
            }
            if total > 0.0 {
                for t in 0..k {
                    n_k[t] += resp[t] / total;
                }
            }
        }
        let denom = words.len() as f64 + k as f64 * model.alpha;
        for t in 0..k {
            gamma[t] = (n_k[t] + model.alpha) / denom;
        }
    }
    gamma
}

/// Thresholded top-2 assignment from a document-topic row. Ties break toward
/// the lower topic index.
pub fn assign_from_theta(
    theta_row: &[f64],
    labels: &TopicLabelTable,
    tau_primary: f64,
    tau_secondary: f64,
    doc_id: &str,
) -> TopicAssignment {
    let mut order: Vec<usize> = (0..theta_row.len()).collect();
    order.sort_by(|&a, &b| theta_row[b].partial_cmp(&theta_row[a]).unwrap().then(a.cmp(&b)));
    let (pi, si) = (order[0], order.get(1).copied());
    let p_prob = theta_row[pi];
    let primary = if p_prob >= tau_primary {
        labels.label(pi).map(str::to_string)
    } else {
        None
    };
    let (secondary, s_prob) = match (primary.as_ref(), si) {
        (Some(_), Some(si)) if theta_row[si] >= tau_secondary => {
            (labels.label(si).map(str::to_string), theta_row[si])
        }
        (_, Some(si)) => (None, theta_row[si]),
        _ => (None, 0.0),
    };
    TopicAssignment {
        doc_id: doc_id.to_string(),
        primary,
        secondary,
        primary_prob: p_prob,
        secondary_prob: s_prob,
    }
}

pub fn assign(
    model: &TopicModel,
    labels: &TopicLabelTable,
    tau_primary: f64,
    tau_secondary: f64,
    doc: &TokenStream,
) -> TopicAssignment {
    let row = infer_theta(model, doc);
    assign_from_theta(&row, labels, tau_primary, tau_secondary, &doc.source_id)
}

/// Assign a doc whose normalized tokens contain synonyms of exactly one topic
/// to that topic; zero or multiple matching topics stay Unknown.
pub fn synonym_backfill(unassigned: &[TokenStream], labels: &TopicLabelTable) -> Vec<TopicAssignment> {
    let mut out = Vec::with_capacity(unassigned.len());
    for doc in unassigned {
        let tokens: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        let mut hits: Vec<&str> = Vec::new();
        for (label, syns) in &labels.synonyms {
            if syns.iter().any(|s| tokens.contains(s.as_str())) {
                hits.push(label);
            }
        }
        let primary = if hits.len() == 1 {
            Some(hits[0].to_string())
        } else {
            None
        };
        let primary_prob = if primary.is_some() { 1.0 } else { 0.0 };
        out.push(TopicAssignment {
            doc_id: doc.source_id.clone(),
            primary,
            secondary: None,
            primary_prob,
            secondary_prob: 0.0,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTopic {
    pub index: usize,
    pub top_words: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SubtopicConfig {
    pub max_sub: usize,
    pub min_docs: usize,
    /// None applies the 50/K heuristic per candidate.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub top_words: usize,
}

impl Default for SubtopicConfig {
    fn default() -> Self {
        SubtopicConfig {
            max_sub: 3,
            min_docs: 30,
            alpha: None,
            beta: 0.01,
            iterations: 200,
            seed: 7,
            top_words: 5,
        }
    }
}

/// Nested LDA over the documents whose primary topic equals `topic`.
/// Candidate sub-topic counts run from 1 (the topic is cohesive, a single
/// sub-theme) to `max_sub`; the most coherent wins. Below `min_docs`
/// assigned documents the result is empty.
pub fn extract_subtopics(
    docs: &[TokenStream],
    assignments: &[TopicAssignment],
    topic: &str,
    cfg: &SubtopicConfig,
) -> Result<Vec<SubTopic>> {
    let assigned: HashSet<&str> = assignments
        .iter()
        .filter(|a| a.primary.as_deref() == Some(topic))
        .map(|a| a.doc_id.as_str())
        .collect();
    let subset: Vec<TokenStream> = docs
        .iter()
        .filter(|d| assigned.contains(d.source_id.as_str()))
        .cloned()
        .collect();
    if subset.len() < cfg.min_docs {
        return Ok(Vec::new());
    }
    let mut best: Option<TopicModel> = None;
    for k in 1..=cfg.max_sub.max(1) {
        let alpha = cfg.alpha.unwrap_or(50.0 / k as f64);
        let model = fit_lda_unchecked(&subset, k, alpha, cfg.beta, cfg.iterations, cfg.seed)?;
        let better = match &best {
            None => true,
            Some(b) => model.coherence > b.coherence,
        };
        if better {
            best = Some(model);
        }
    }
    let model = best.unwrap();
    Ok((0..model.k)
        .map(|t| SubTopic {
            index: t,
            top_words: top_words(&model, t, cfg.top_words)
                .into_iter()
                .map(|w| model.vocab[w].clone())
                .collect(),
        })
        .collect())
}

/// Topics as nodes, edges weighted by how often two topics appear as a
/// document's top-two assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceGraph {
    /// topic label -> degree (number of incident edges)
    pub nodes: BTreeMap<String, usize>,
    /// sorted unordered label pair -> co-assignment count
    #[serde(with = "edge_list")]
    pub edges: BTreeMap<(String, String), u64>,
}

/// JSON cannot key objects by pairs; edges serialize as (a, b, weight) rows.
mod edge_list {
    use super::BTreeMap;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        edges: &BTreeMap<(String, String), u64>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let rows: Vec<(&str, &str, u64)> = edges
            .iter()
            .map(|((a, b), &w)| (a.as_str(), b.as_str(), w))
            .collect();
        rows.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<(String, String), u64>, D::Error> {
        let rows: Vec<(String, String, u64)> = Vec::deserialize(de)?;
        Ok(rows.into_iter().map(|(a, b, w)| ((a, b), w)).collect())
    }
}

impl CooccurrenceGraph {
    /// Neighbors of `label` with edge weights, strongest first, ties
    /// alphabetical.
    pub fn neighbors(&self, label: &str) -> Vec<(&str, u64)> {
        let mut out: Vec<(&str, u64)> = self
            .edges
            .iter()
            .filter_map(|((a, b), &w)| {
                if a == label {
                    Some((b.as_str(), w))
                } else if b == label {
                    Some((a.as_str(), w))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(y.0)));
        out
    }

    pub fn total_edge_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Increment the weight of the undirected edge `a`-`b`, creating nodes
    /// and updating degrees as needed. Self-loops are ignored.
    pub fn add_edge(&mut self, a: &str, b: &str) {
        if a == b {
            return;
        }
        let key = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        let new_edge = !self.edges.contains_key(&key);
        *self.edges.entry(key).or_insert(0) += 1;
        if new_edge {
            *self.nodes.entry(a.to_string()).or_insert(0) += 1;
            *self.nodes.entry(b.to_string()).or_insert(0) += 1;
        }
    }
}

pub fn build_cooccurrence_graph(assignments: &[TopicAssignment]) -> CooccurrenceGraph {
    let mut graph = CooccurrenceGraph::default();
    for a in assignments {
        if let Some(p) = &a.primary {
            graph.nodes.entry(p.clone()).or_insert(0);
        }
        if let (Some(p), Some(s)) = (&a.primary, &a.secondary) {
            if p == s {
                continue;
            }
            graph.nodes.entry(s.clone()).or_insert(0);
            let key = if p < s {
                (p.clone(), s.clone())
            } else {
                (s.clone(), p.clone())
            };
            *graph.edges.entry(key).or_insert(0) += 1;
        }
    }
    let mut degrees: BTreeMap<String, usize> = BTreeMap::new();
    for (a, b) in graph.edges.keys() {
        *degrees.entry(a.clone()).or_insert(0) += 1;
        *degrees.entry(b.clone()).or_insert(0) += 1;
    }
    for (label, degree) in degrees {
        graph.nodes.insert(label, degree);
    }
    graph
}
