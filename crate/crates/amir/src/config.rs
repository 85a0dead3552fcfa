//! Declarative pipeline configuration (TOML) and its validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rebuttal::MatchCriteria;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsConfig {
    pub tweets: PathBuf,
    pub articles: PathBuf,
    pub word_vectors: PathBuf,
    pub gazetteer: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: PathBuf,
    pub tweet_labels: PathBuf,
    pub article_labels: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// None selects 50/K per fit.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_k_min() -> usize {
    2
}
fn default_k_max() -> usize {
    6
}
fn default_beta() -> f64 {
    0.01
}
fn default_iterations() -> usize {
    1000
}
fn default_seed() -> u64 {
    42
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k_min: default_k_min(),
            k_max: default_k_max(),
            alpha: None,
            beta: default_beta(),
            iterations: default_iterations(),
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsConfig {
    /// None selects 1.5/K per model.
    #[serde(default)]
    pub tau_primary: Option<f64>,
    #[serde(default)]
    pub tau_secondary: Option<f64>,
    #[serde(default = "default_specific_threshold")]
    pub specific_threshold: f64,
    /// None selects mean + 1 std of cross-corpus projected distances.
    #[serde(default)]
    pub distance_cutoff: Option<f64>,
}

fn default_specific_threshold() -> f64 {
    0.62
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        ThresholdsConfig {
            tau_primary: None,
            tau_secondary: None,
            specific_threshold: default_specific_threshold(),
            distance_cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendConfig {
    #[serde(default = "default_k_sm")]
    pub k_sm: usize,
    #[serde(default = "default_k_fc")]
    pub k_fc: usize,
}

fn default_k_sm() -> usize {
    10
}
fn default_k_fc() -> usize {
    15
}

impl Default for RecommendConfig {
    fn default() -> Self {
        RecommendConfig {
            k_sm: default_k_sm(),
            k_fc: default_k_fc(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaConfig {
    #[serde(default = "MatchCriteria::strict_default")]
    pub strict: MatchCriteria,
    #[serde(default = "MatchCriteria::relaxed_default")]
    pub relaxed: MatchCriteria,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        CriteriaConfig {
            strict: MatchCriteria::strict_default(),
            relaxed: MatchCriteria::relaxed_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub lda: LdaConfig,
    #[serde(default)]
    pub thresholds: ThresholdsConfig,
    #[serde(default)]
    pub recommend: RecommendConfig,
    #[serde(default)]
    pub criteria: CriteriaConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        let mut config: PipelineConfig = toml::from_str(&content)
            .map_err(|e| Error::ConfigInvalid(format!("parse error: {e}")))?;
        // relative paths resolve against the config file's directory
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        config.validate()?;
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        fix(&mut self.paths.tweets);
        fix(&mut self.paths.articles);
        fix(&mut self.paths.word_vectors);
        fix(&mut self.paths.gazetteer);
        fix(&mut self.paths.lexicon);
        fix(&mut self.paths.stopwords);
        fix(&mut self.paths.tweet_labels);
        fix(&mut self.paths.article_labels);
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ConfigInvalid(msg));
        for (name, p) in [
            ("tweets", &self.paths.tweets),
            ("articles", &self.paths.articles),
            ("word_vectors", &self.paths.word_vectors),
            ("gazetteer", &self.paths.gazetteer),
            ("lexicon", &self.paths.lexicon),
            ("stopwords", &self.paths.stopwords),
            ("tweet_labels", &self.paths.tweet_labels),
            ("article_labels", &self.paths.article_labels),
        ] {
            if !p.is_file() {
                return fail(format!("paths.{name}: no such file: {}", p.display()));
            }
        }
        if self.lda.k_min < 2 || self.lda.k_min > self.lda.k_max {
            return fail(format!(
                "lda: need 2 <= k_min <= k_max, got [{}, {}]",
                self.lda.k_min, self.lda.k_max
            ));
        }
        if self.lda.iterations == 0 {
            return fail("lda.iterations must be >= 1".into());
        }
        if let Some(a) = self.lda.alpha {
            if a <= 0.0 {
                return fail("lda.alpha must be > 0".into());
            }
        }
        if self.lda.beta <= 0.0 {
            return fail("lda.beta must be > 0".into());
        }
        for (name, t) in [
            ("tau_primary", self.thresholds.tau_primary),
            ("tau_secondary", self.thresholds.tau_secondary),
        ] {
            if let Some(t) = t {
                if !(0.0..=1.0).contains(&t) {
                    return fail(format!("thresholds.{name} must be in [0, 1]"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.thresholds.specific_threshold) {
            return fail("thresholds.specific_threshold must be in [0, 1]".into());
        }
        if let Some(c) = self.thresholds.distance_cutoff {
            if c < 0.0 {
                return fail("thresholds.distance_cutoff must be >= 0".into());
            }
        }
        if self.recommend.k_sm == 0 || self.recommend.k_fc == 0 {
            return fail("recommend.k_sm and recommend.k_fc must be >= 1".into());
        }
        // relaxed may not demand topic or sentiment agreement the strict
        // criteria do not; entity counts are exempt (the shipped default
        // deliberately raises the entity floor while dropping the rest)
        if (self.criteria.relaxed.require_topic && !self.criteria.strict.require_topic)
            || (self.criteria.relaxed.require_sentiment && !self.criteria.strict.require_sentiment)
        {
            return fail("criteria.relaxed must be a weakening of criteria.strict".into());
        }
        Ok(())
    }
}
