//! Topic-topic mapping between the misleading-corpus topics and the
//! fact-check-corpus topics: Jensen-Shannon divergence geometry with a 2-D
//! principal-coordinate projection, naive keyword overlap, TF-IDF cosine,
//! and Rank-k mapping-quality scoring.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topics::{top_words, TopicModel};

/// Top-M words of a topic's phi row with their weights, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSignature {
    pub topic_label: String,
    pub keywords: Vec<(String, f64)>,
}

pub const DEFAULT_SIGNATURE_SIZE: usize = 15;

pub fn signature(model: &TopicModel, topic: usize, label: &str, m: usize) -> TopicSignature {
    let keywords = top_words(model, topic, m)
        .into_iter()
        .map(|w| (model.vocab[w].clone(), model.phi[topic][w]))
        .collect();
    TopicSignature {
        topic_label: label.to_string(),
        keywords,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingMethod {
    Distance,
    Naive,
    Tfidf,
}

/// One source-topic mapping. `target_topic` is None when no candidate passed
/// the method's floor. Score semantics differ per method: distance is
/// smaller-better, the others larger-better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingResult {
    pub source_topic: String,
    pub target_topic: Option<String>,
    pub method: MappingMethod,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matched_keywords: Vec<String>,
}

/// Jensen-Shannon divergence with base-2 logarithms: symmetric, in [0, 1].
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for dist in [p, q] {
        if dist.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::NotADistribution);
        }
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotADistribution);
        }
    }
    let kl_to_mid = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(&ai, _)| ai > 0.0)
            .map(|(&ai, &bi)| ai * (ai / (0.5 * (ai + bi))).log2())
            .sum()
    };
    Ok(0.5 * kl_to_mid(p, q) + 0.5 * kl_to_mid(q, p))
}

/// 2-D principal-coordinate embedding of topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicProjection {
    pub coords: Vec<[f64; 2]>,
}

impl TopicProjection {
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }
}

/// Classical multidimensional scaling of the pairwise JS-distance matrix
/// (distance squared = divergence), keeping the two leading principal
/// coordinates.
pub fn project_topics(rows: &[Vec<f64>]) -> Result<TopicProjection> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::DegenerateMatrix);
    }
    let mut d2 = vec![vec![0.0f64; n]; n];
    let mut max_d2 = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = js_divergence(&rows[i], &rows[j])?;
            d2[i][j] = v;
            d2[j][i] = v;
            max_d2 = max_d2.max(v);
        }
    }
    if max_d2 < 1e-15 {
        return Err(Error::DegenerateMatrix);
    }

    // double centering: B = -1/2 J D2 J
    let row_means: Vec<f64> = d2.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = -0.5 * (d2[i][j] - row_means[i] - row_means[j] + grand);
        }
    }

    let (eigvals, eigvecs) = jacobi_eigen(&b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eigvals[c].partial_cmp(&eigvals[a]).unwrap().then(a.cmp(&c)));
    let coords = (0..n)
        .map(|i| {
            let mut point = [0.0f64; 2];
            for (axis, &e) in order.iter().take(2).enumerate() {
                let scale = eigvals[e].max(0.0).sqrt();
                point[axis] = eigvecs[i][e] * scale;
            }
            point
        })
        .collect();
    Ok(TopicProjection { coords })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns).
fn jacobi_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut v = vec![vec![0.0f64; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (aip, aiq) = (a[i][p], a[i][q]);
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let (apj, aqj) = (a[p][j], a[q][j]);
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let (vip, viq) = (v[i][p], v[i][q]);
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigvals = (0..n).map(|i| a[i][i]).collect();
    (eigvals, v)
}

/// Renormalize both models' phi rows over the merged vocabulary; words absent
/// in one model get probability 0 before additive smoothing.
pub fn merged_rows(mis: &TopicModel, fc: &TopicModel) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    const SMOOTHING: f64 = 1e-12;
    let mut merged: Vec<&str> = mis.vocab.iter().map(String::as_str).collect();
    let known: HashSet<&str> = merged.iter().copied().collect();
    for w in &fc.vocab {
        if !known.contains(w.as_str()) {
            merged.push(w);
        }
    }
    let index: HashMap<&str, usize> = merged.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let expand = |model: &TopicModel| -> Vec<Vec<f64>> {
        model
            .phi
            .iter()
            .map(|row| {
                let mut out = vec![0.0f64; merged.len()];
                for (w, &p) in model.vocab.iter().zip(row) {
                    out[index[w.as_str()]] = p;
                }
                let total: f64 = out.iter().map(|&x| x + SMOOTHING).sum();
                out.iter().map(|&x| (x + SMOOTHING) / total).collect()
            })
            .collect()
    };
    (expand(mis), expand(fc))
}

/// Map each misleading topic to the Euclidean-nearest fact-check topic in a
/// joint 2-D projection. Many-to-one is allowed; a nearest distance beyond
/// the cutoff maps to None. The default cutoff is mean + 1 standard
/// deviation of the cross-corpus 2-D distances.
pub fn map_by_distance(
    mis: &TopicModel,
    fc: &TopicModel,
    mis_labels: &[String],
    fc_labels: &[String],
    cutoff: Option<f64>,
) -> Result<Vec<MappingResult>> {
    let (mis_rows, fc_rows) = merged_rows(mis, fc);
    let mut all = mis_rows;
    let n_mis = all.len();
    all.extend(fc_rows);
    let projection = project_topics(&all)?;

    let mut cross: Vec<f64> = Vec::new();
    for i in 0..n_mis {
        for j in n_mis..all.len() {
            cross.push(projection.distance(i, j));
        }
    }
    let cutoff = cutoff.unwrap_or_else(|| {
        let mean = cross.iter().sum::<f64>() / cross.len() as f64;
        let var = cross.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / cross.len() as f64;
        mean + var.sqrt()
    });

    let mut results = Vec::with_capacity(n_mis);
    for (i, source) in mis_labels.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..fc_labels.len() {
            let d = projection.distance(i, n_mis + j);
            let better = match best {
                None => true,
                Some((_, bd)) => d < bd,
            };
            if better {
                best = Some((j, d));
            }
        }
        let (j, d) = best.ok_or(Error::DegenerateMatrix)?;
        results.push(MappingResult {
            source_topic: source.clone(),
            target_topic: (d <= cutoff).then(|| fc_labels[j].clone()),
            method: MappingMethod::Distance,
            score: d,
            matched_keywords: Vec::new(),
        });
    }
    Ok(results)
}

/// Naive keyword mapping: score each candidate by (count of exactly-matching
/// keywords, then summed weight of the matches) lexicographically. Zero
/// matches everywhere maps to None.
pub fn map_by_keywords(
    mis_sigs: &[TopicSignature],
    fc_sigs: &[TopicSignature],
) -> Vec<MappingResult> {
    mis_sigs
        .iter()
        .map(|sig| {
            let source_weights: BTreeMap<&str, f64> = sig
                .keywords
                .iter()
                .map(|(w, f)| (w.as_str(), *f))
                .collect();
            let mut best: Option<(usize, usize, f64, Vec<String>)> = None;
            for (j, cand) in fc_sigs.iter().enumerate() {
                let mut matched: Vec<(&str, f64)> = cand
                    .keywords
                    .iter()
                    .filter(|(w, _)| source_weights.contains_key(w.as_str()))
                    .map(|(w, f)| (w.as_str(), f + source_weights[w.as_str()]))
                    .collect();
                matched.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
                let count = matched.len();
                let freq: f64 = matched.iter().map(|(_, f)| f).sum();
                let better = match &best {
                    None => count > 0,
                    Some((bc, _, bf, _)) => count > *bc || (count == *bc && freq > *bf),
                };
                if better {
                    best = Some((
                        count,
                        j,
                        freq,
                        matched.iter().map(|(w, _)| w.to_string()).collect(),
                    ));
                }
            }
            match best {
                Some((_, j, freq, matched)) => MappingResult {
                    source_topic: sig.topic_label.clone(),
                    target_topic: Some(fc_sigs[j].topic_label.clone()),
                    method: MappingMethod::Naive,
                    score: freq,
                    matched_keywords: matched,
                },
                None => MappingResult {
                    source_topic: sig.topic_label.clone(),
                    target_topic: None,
                    method: MappingMethod::Naive,
                    score: 0.0,
                    matched_keywords: Vec::new(),
                },
            }
        })
        .collect()
}

/// TF-IDF (or binary) cosine over keyword bags. Kept for diagnostics: with
/// few matching keywords the similarity scores are too low to be usable.
pub fn map_by_tfidf(
    mis_sigs: &[TopicSignature],
    fc_sigs: &[TopicSignature],
    weighted: bool,
) -> Vec<MappingResult> {
    let mut df: HashMap<&str, usize> = HashMap::new();
    let n_docs = mis_sigs.len() + fc_sigs.len();
    for sig in mis_sigs.iter().chain(fc_sigs) {
        for (w, _) in &sig.keywords {
            *df.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    let idf = |w: &str| -> f64 {
        let d = *df.get(w).unwrap_or(&0);
        ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0
    };
    let vectorize = |sig: &TopicSignature| -> HashMap<String, f64> {
        sig.keywords
            .iter()
            .map(|(w, f)| {
                let tf = if weighted { *f } else { 1.0 };
                let weight = if weighted { tf * idf(w) } else { 1.0 };
                (w.clone(), weight)
            })
            .collect()
    };
    let cos = |a: &HashMap<String, f64>, b: &HashMap<String, f64>| -> f64 {
        let dot: f64 = a
            .iter()
            .filter_map(|(w, x)| b.get(w).map(|y| x * y))
            .sum();
        let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };

    let fc_vecs: Vec<HashMap<String, f64>> = fc_sigs.iter().map(&vectorize).collect();
    mis_sigs
        .iter()
        .map(|sig| {
            let v = vectorize(sig);
            let mut best: Option<(usize, f64)> = None;
            for (j, fv) in fc_vecs.iter().enumerate() {
                let score = cos(&v, fv);
                let better = match best {
                    None => score > 0.0,
                    Some((_, bs)) => score > bs,
                };
                if better {
                    best = Some((j, score));
                }
            }
            match best {
                Some((j, score)) => MappingResult {
                    source_topic: sig.topic_label.clone(),
                    target_topic: Some(fc_sigs[j].topic_label.clone()),
                    method: MappingMethod::Tfidf,
                    score,
                    matched_keywords: Vec::new(),
                },
                None => MappingResult {
                    source_topic: sig.topic_label.clone(),
                    target_topic: None,
                    method: MappingMethod::Tfidf,
                    score: 0.0,
                    matched_keywords: Vec::new(),
                },
            }
        })
        .collect()
}

/// Mean over mappings of the per-mapping mean rank (1-based position in the
/// target signature's descending keyword order) of each matched word.
pub fn rank_k_quality(mappings: &[MappingResult], fc_sigs: &[TopicSignature]) -> Result<f64> {
    let by_label: HashMap<&str, &TopicSignature> = fc_sigs
        .iter()
        .map(|s| (s.topic_label.as_str(), s))
        .collect();
    let mut per_mapping = Vec::new();
    for mapping in mappings {
        let target = match &mapping.target_topic {
            Some(t) => t,
            None => continue,
        };
        if mapping.matched_keywords.is_empty() {
            continue;
        }
        let sig = match by_label.get(target.as_str()) {
            Some(s) => s,
            None => continue,
        };
        let ranks: Vec<f64> = mapping
            .matched_keywords
            .iter()
            .filter_map(|w| {
                sig.keywords
                    .iter()
                    .position(|(kw, _)| kw == w)
                    .map(|p| (p + 1) as f64)
            })
            .collect();
        if !ranks.is_empty() {
            per_mapping.push(ranks.iter().sum::<f64>() / ranks.len() as f64);
        }
    }
    if per_mapping.is_empty() {
        return Err(Error::NoMatchedKeywords);
    }
    Ok(per_mapping.iter().sum::<f64>() / per_mapping.len() as f64)
}
