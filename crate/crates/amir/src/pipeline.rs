//! Stage orchestration. Every stage writes flat JSON/JSONL files plus a
//! manifest recording an input fingerprint and output content hashes, which
//! makes re-runs of up-to-date stages no-ops and detects stale upstream
//! artifacts. A lock file serializes writers over one output directory.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::{classify_sentiment, recognize, Gazetteer, SentimentLexicon};
use crate::config::PipelineConfig;
use crate::corpus::{self, corpus_stats, FactArticle, Tweet};
use crate::error::{Error, Result};
use crate::evaluate::{run_evaluation_fc, run_evaluation_sm, EvalReport};
use crate::mapping::{self, MappingResult, TopicSignature};
use crate::rebuttal::{
    recommend_counter_tweets, tiered_recommend, AnnotatedTweet, ScoredItem, Tier,
};
use crate::similarity::{WordVectorScorer, WordVectorTable};
use crate::textprep::{normalize, tokenize, Stopwords, TokenStream};
use crate::topics::{
    assign_from_theta, build_cooccurrence_graph, select_k, synonym_backfill, CooccurrenceGraph,
    TopicAssignment, TopicLabelTable, TopicModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    FitTopics,
    MapTopics,
    Annotate,
    RecommendSm,
    RecommendFc,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::FitTopics,
        Stage::MapTopics,
        Stage::Annotate,
        Stage::RecommendSm,
        Stage::RecommendFc,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::FitTopics => "fit-topics",
            Stage::MapTopics => "map-topics",
            Stage::Annotate => "annotate",
            Stage::RecommendSm => "recommend-sm",
            Stage::RecommendFc => "recommend-fc",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn deps(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::FitTopics => &[Stage::Ingest],
            Stage::MapTopics => &[Stage::FitTopics],
            Stage::Annotate => &[Stage::Ingest, Stage::FitTopics],
            Stage::RecommendSm => &[Stage::Annotate],
            Stage::RecommendFc => &[Stage::Ingest, Stage::FitTopics, Stage::MapTopics],
            Stage::Evaluate => &[Stage::Ingest, Stage::Annotate, Stage::MapTopics],
        }
    }

    /// Output file names, relative to the output directory.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["tweets.jsonl", "articles.jsonl"],
            Stage::FitTopics => &[
                "tweet_model.json",
                "article_model.json",
                "tweet_assignments.jsonl",
                "article_assignments.jsonl",
                "cooccurrence.json",
                "stats.json",
            ],
            Stage::MapTopics => &["mappings.json", "mappings_keywords.json"],
            Stage::Annotate => &["annotations.jsonl"],
            Stage::RecommendSm => &["recommendations_sm.jsonl"],
            Stage::RecommendFc => &["recommendations_fc.jsonl"],
            Stage::Evaluate => &["report.json", "report.txt"],
        }
    }

    /// Configured source files this stage reads directly.
    fn external_inputs(self, cfg: &PipelineConfig) -> Vec<PathBuf> {
        let p = &cfg.paths;
        match self {
            Stage::Ingest => vec![p.tweets.clone(), p.articles.clone()],
            Stage::FitTopics => vec![
                p.stopwords.clone(),
                p.tweet_labels.clone(),
                p.article_labels.clone(),
            ],
            Stage::MapTopics => vec![],
            Stage::Annotate => vec![p.gazetteer.clone(), p.lexicon.clone()],
            Stage::RecommendSm | Stage::RecommendFc | Stage::Evaluate => {
                vec![p.word_vectors.clone(), p.stopwords.clone()]
            }
        }
    }
}

/// Recommendation output record shared by both approaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRecord {
    pub target_id: String,
    /// "sm" or "fc"
    pub approach: String,
    pub tier: Option<String>,
    pub relaxed: Option<bool>,
    pub items: Vec<ScoredItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    stage: String,
    fingerprint: String,
    outputs: BTreeMap<String, String>,
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(hex_digest(h))
}

fn manifest_path(out_dir: &Path, stage: Stage) -> PathBuf {
    out_dir.join(format!("{}.manifest.json", stage.name()))
}

/// Fingerprint of everything the stage's outputs depend on: the stage name,
/// the non-path configuration, the configured source files, and the upstream
/// output files. Upstream outputs missing on disk reads as a stale pipeline.
fn fingerprint(stage: Stage, cfg: &PipelineConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(stage.name().as_bytes());
    let params = serde_json::to_vec(&(
        &cfg.lda,
        &cfg.thresholds,
        &cfg.recommend,
        &cfg.criteria,
    ))?;
    h.update(&params);
    for path in stage.external_inputs(cfg) {
        if !path.is_file() {
            return Err(Error::ConfigInvalid(format!("missing input {}", path.display())));
        }
        h.update(hash_file(&path)?.as_bytes());
    }
    for dep in stage.deps() {
        for name in dep.outputs() {
            let path = cfg.out_dir.join(name);
            if !path.is_file() {
                return Err(Error::StaleUpstream(format!(
                    "{} needs {} from {}",
                    stage.name(),
                    name,
                    dep.name()
                )));
            }
            h.update(name.as_bytes());
            h.update(hash_file(&path)?.as_bytes());
        }
    }
    Ok(hex_digest(h))
}

/// A stage is fresh when its manifest matches the current fingerprint and
/// every recorded output is still on disk with the recorded hash. All
/// upstream stages must be fresh first.
pub fn stage_fresh(stage: Stage, cfg: &PipelineConfig) -> Result<bool> {
    for dep in stage.deps() {
        if !stage_fresh(*dep, cfg)? {
            return Err(Error::StaleUpstream(format!(
                "{} is stale or missing, rerun it before {}",
                dep.name(),
                stage.name()
            )));
        }
    }
    let path = manifest_path(&cfg.out_dir, stage);
    if !path.is_file() {
        return Ok(false);
    }
    let manifest: Manifest = read_json(&path)?;
    if manifest.fingerprint != fingerprint(stage, cfg)? {
        return Ok(false);
    }
    for (name, hash) in &manifest.outputs {
        let out = cfg.out_dir.join(name);
        if !out.is_file() || &hash_file(&out)? != hash {
            return Ok(false);
        }
    }
    Ok(true)
}

struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(out_dir: &Path) -> Result<LockGuard> {
        let path = out_dir.join(".lock");
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::Io(std::io::Error::new(
                        std::io::ErrorKind::AlreadyExists,
                        format!("lock file {} held by another writer", path.display()),
                    ))
                } else {
                    Error::Io(e)
                }
            })?;
        Ok(LockGuard { path })
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Run one stage. Returns false when the stage was already up to date.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<bool> {
    fs::create_dir_all(&cfg.out_dir)?;
    if stage_fresh(stage, cfg)? {
        return Ok(false);
    }
    let _lock = LockGuard::acquire(&cfg.out_dir)?;
    match stage {
        Stage::Ingest => run_ingest(cfg)?,
        Stage::FitTopics => run_fit_topics(cfg)?,
        Stage::MapTopics => run_map_topics(cfg)?,
        Stage::Annotate => run_annotate(cfg)?,
        Stage::RecommendSm => run_recommend_sm(cfg)?,
        Stage::RecommendFc => run_recommend_fc(cfg)?,
        Stage::Evaluate => run_evaluate(cfg)?,
    }
    let mut outputs = BTreeMap::new();
    for name in stage.outputs() {
        outputs.insert(name.to_string(), hash_file(&cfg.out_dir.join(name))?);
    }
    let manifest = Manifest {
        stage: stage.name().to_string(),
        fingerprint: fingerprint(stage, cfg)?,
        outputs,
    };
    write_json(&manifest_path(&cfg.out_dir, stage), &manifest)?;
    Ok(true)
}

pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<(Stage, bool)>> {
    Stage::ALL
        .into_iter()
        .map(|s| run_stage(s, cfg).map(|ran| (s, ran)))
        .collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line_no: idx + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

fn run_ingest(cfg: &PipelineConfig) -> Result<()> {
    let tweets = corpus::load_tweets(&cfg.paths.tweets)?;
    let articles = corpus::load_articles(&cfg.paths.articles)?;
    corpus::save_tweets(&cfg.out_dir.join("tweets.jsonl"), &tweets)?;
    corpus::save_articles(&cfg.out_dir.join("articles.jsonl"), &articles)?;
    Ok(())
}

fn tweet_streams(tweets: &[Tweet], stopwords: &Stopwords) -> Vec<TokenStream> {
    tweets
        .iter()
        .map(|t| normalize(&tokenize(&t.text), stopwords, true).with_source_id(&t.id))
        .collect()
}

fn article_streams(articles: &[FactArticle], stopwords: &Stopwords) -> Vec<TokenStream> {
    articles
        .iter()
        .map(|a| {
            let text = format!("{} {}", a.title, a.content);
            normalize(&tokenize(&text), stopwords, true).with_source_id(&a.id)
        })
        .collect()
}

fn assignments_for(
    model: &TopicModel,
    labels: &TopicLabelTable,
    cfg: &PipelineConfig,
) -> Vec<TopicAssignment> {
    let tau_p = cfg.thresholds.tau_primary.unwrap_or(1.5 / model.k as f64);
    let tau_s = cfg.thresholds.tau_secondary.unwrap_or(1.5 / model.k as f64);
    model
        .doc_ids
        .iter()
        .zip(&model.theta)
        .map(|(id, row)| assign_from_theta(row, labels, tau_p, tau_s, id))
        .collect()
}

fn run_fit_topics(cfg: &PipelineConfig) -> Result<()> {
    let tweets: Vec<Tweet> = read_jsonl(&cfg.out_dir.join("tweets.jsonl"))?;
    let articles: Vec<FactArticle> = read_jsonl(&cfg.out_dir.join("articles.jsonl"))?;
    let stopwords = Stopwords::load(&cfg.paths.stopwords)?;
    let tweet_labels = TopicLabelTable::load(&cfg.paths.tweet_labels)?;
    let article_labels = TopicLabelTable::load(&cfg.paths.article_labels)?;

    let t_docs = tweet_streams(&tweets, &stopwords);
    let a_docs = article_streams(&articles, &stopwords);
    let range = (cfg.lda.k_min, cfg.lda.k_max);
    let (tk, tweet_model) = select_k(
        &t_docs,
        range,
        cfg.lda.alpha,
        cfg.lda.beta,
        cfg.lda.iterations,
        cfg.lda.seed,
    )?;
    // offset seed so the two corpora never share a sampling trajectory
    let (ak, article_model) = select_k(
        &a_docs,
        range,
        cfg.lda.alpha,
        cfg.lda.beta,
        cfg.lda.iterations,
        cfg.lda.seed + 1,
    )?;
    tweet_labels.validate_for_k(tk)?;
    article_labels.validate_for_k(ak)?;

    let mut tweet_assignments = assignments_for(&tweet_model, &tweet_labels, cfg);
    // synonym backfill rescues Unknown docs naming exactly one topic
    let unassigned: Vec<TokenStream> = tweet_assignments
        .iter()
        .zip(&t_docs)
        .filter(|(a, _)| a.primary.is_none())
        .map(|(_, d)| d.clone())
        .collect();
    for rescue in synonym_backfill(&unassigned, &tweet_labels) {
        if rescue.primary.is_some() {
            if let Some(slot) = tweet_assignments.iter_mut().find(|a| a.doc_id == rescue.doc_id) {
                *slot = rescue;
            }
        }
    }
    let article_assignments = assignments_for(&article_model, &article_labels, cfg);

    let graph = build_cooccurrence_graph(&tweet_assignments);
    let mut stats = corpus_stats(&tweets, &tweet_assignments)?;
    stats.n_articles = articles.len();

    write_json(&cfg.out_dir.join("tweet_model.json"), &tweet_model)?;
    write_json(&cfg.out_dir.join("article_model.json"), &article_model)?;
    corpus::save_jsonl(&cfg.out_dir.join("tweet_assignments.jsonl"), &tweet_assignments)?;
    corpus::save_jsonl(&cfg.out_dir.join("article_assignments.jsonl"), &article_assignments)?;
    write_json(&cfg.out_dir.join("cooccurrence.json"), &graph)?;
    write_json(&cfg.out_dir.join("stats.json"), &stats)?;
    Ok(())
}

fn model_labels(model: &TopicModel, labels: &TopicLabelTable) -> Vec<String> {
    (0..model.k)
        .map(|i| {
            labels
                .label(i)
                .map(str::to_string)
                .unwrap_or_else(|| format!("Topic {i}"))
        })
        .collect()
}

fn run_map_topics(cfg: &PipelineConfig) -> Result<()> {
    let tweet_model: TopicModel = read_json(&cfg.out_dir.join("tweet_model.json"))?;
    let article_model: TopicModel = read_json(&cfg.out_dir.join("article_model.json"))?;
    let tweet_labels = TopicLabelTable::load(&cfg.paths.tweet_labels)?;
    let article_labels = TopicLabelTable::load(&cfg.paths.article_labels)?;
    let mis_names = model_labels(&tweet_model, &tweet_labels);
    let fc_names = model_labels(&article_model, &article_labels);

    let mappings = mapping::map_by_distance(
        &tweet_model,
        &article_model,
        &mis_names,
        &fc_names,
        cfg.thresholds.distance_cutoff,
    )?;
    write_json(&cfg.out_dir.join("mappings.json"), &mappings)?;

    // keyword-overlap mapping retained alongside as a diagnostic
    let sig = |model: &TopicModel, names: &[String]| -> Vec<TopicSignature> {
        (0..model.k)
            .map(|i| mapping::signature(model, i, &names[i], mapping::DEFAULT_SIGNATURE_SIZE))
            .collect()
    };
    let keyword_mappings = mapping::map_by_keywords(
        &sig(&tweet_model, &mis_names),
        &sig(&article_model, &fc_names),
    );
    write_json(&cfg.out_dir.join("mappings_keywords.json"), &keyword_mappings)?;
    Ok(())
}

fn run_annotate(cfg: &PipelineConfig) -> Result<()> {
    let tweets: Vec<Tweet> = read_jsonl(&cfg.out_dir.join("tweets.jsonl"))?;
    let assignments: Vec<TopicAssignment> = read_jsonl(&cfg.out_dir.join("tweet_assignments.jsonl"))?;
    let gazetteer = Gazetteer::load(&cfg.paths.gazetteer)?;
    let lexicon = SentimentLexicon::load(&cfg.paths.lexicon)?;
    let annotated: Vec<AnnotatedTweet> = tweets
        .into_iter()
        .zip(assignments)
        .map(|(tweet, assignment)| {
            let entities = recognize(&tweet.text, &gazetteer, None);
            let sentiment = classify_sentiment(&tweet.text, &lexicon);
            AnnotatedTweet {
                tweet,
                assignment: Some(assignment),
                entities: Some(entities),
                sentiment: Some(sentiment),
            }
        })
        .collect();
    corpus::save_jsonl(&cfg.out_dir.join("annotations.jsonl"), &annotated)?;
    Ok(())
}

fn build_scorer(cfg: &PipelineConfig) -> Result<WordVectorScorer> {
    let table = WordVectorTable::load(&cfg.paths.word_vectors)?;
    let stopwords = Stopwords::load(&cfg.paths.stopwords)?;
    Ok(WordVectorScorer::new(table, stopwords, true))
}

fn run_recommend_sm(cfg: &PipelineConfig) -> Result<()> {
    let annotated: Vec<AnnotatedTweet> = read_jsonl(&cfg.out_dir.join("annotations.jsonl"))?;
    let scorer = build_scorer(cfg)?;
    let mut records = Vec::new();
    for mis in annotated.iter().filter(|t| t.tweet.misleading) {
        let rec = recommend_counter_tweets(
            mis,
            &annotated,
            cfg.recommend.k_sm,
            &cfg.criteria.strict,
            &cfg.criteria.relaxed,
            &scorer,
        )?;
        records.push(RecommendationRecord {
            target_id: rec.target_id,
            approach: "sm".to_string(),
            tier: None,
            relaxed: Some(rec.relaxed),
            items: rec.items,
        });
    }
    corpus::save_jsonl(&cfg.out_dir.join("recommendations_sm.jsonl"), &records)?;
    Ok(())
}

fn tier_name(tier: Tier) -> &'static str {
    match tier {
        Tier::Specific => "Specific",
        Tier::Near => "Near",
        Tier::Broad => "Broad",
    }
}

fn run_recommend_fc(cfg: &PipelineConfig) -> Result<()> {
    let tweets: Vec<Tweet> = read_jsonl(&cfg.out_dir.join("tweets.jsonl"))?;
    let assignments: Vec<TopicAssignment> = read_jsonl(&cfg.out_dir.join("tweet_assignments.jsonl"))?;
    let articles: Vec<FactArticle> = read_jsonl(&cfg.out_dir.join("articles.jsonl"))?;
    let article_assignments: Vec<TopicAssignment> =
        read_jsonl(&cfg.out_dir.join("article_assignments.jsonl"))?;
    let mappings: Vec<MappingResult> = read_json(&cfg.out_dir.join("mappings.json"))?;
    let graph: CooccurrenceGraph = read_json(&cfg.out_dir.join("cooccurrence.json"))?;
    let scorer = build_scorer(cfg)?;

    let mut records = Vec::new();
    for (tweet, assignment) in tweets.iter().zip(&assignments) {
        if !tweet.misleading || assignment.primary.is_none() {
            continue;
        }
        let rec = tiered_recommend(
            tweet,
            assignment,
            &articles,
            &article_assignments,
            &mappings,
            &graph,
            &scorer,
            cfg.thresholds.specific_threshold,
            cfg.recommend.k_fc,
        )?;
        records.push(RecommendationRecord {
            target_id: rec.target_id,
            approach: "fc".to_string(),
            tier: Some(tier_name(rec.tier).to_string()),
            relaxed: None,
            items: rec.items,
        });
    }
    corpus::save_jsonl(&cfg.out_dir.join("recommendations_fc.jsonl"), &records)?;
    Ok(())
}

/// Both evaluation reports from built artifacts. The conventional flag swaps
/// the MAP normalization; reports on disk always use the positional divisor.
pub fn evaluation_reports(cfg: &PipelineConfig, conventional: bool) -> Result<Vec<EvalReport>> {
    let annotated: Vec<AnnotatedTweet> = read_jsonl(&cfg.out_dir.join("annotations.jsonl"))?;
    let articles: Vec<FactArticle> = read_jsonl(&cfg.out_dir.join("articles.jsonl"))?;
    let article_assignments: Vec<TopicAssignment> =
        read_jsonl(&cfg.out_dir.join("article_assignments.jsonl"))?;
    let mappings: Vec<MappingResult> = read_json(&cfg.out_dir.join("mappings.json"))?;
    let scorer = build_scorer(cfg)?;

    let queries: Vec<AnnotatedTweet> = annotated
        .iter()
        .filter(|t| t.tweet.misleading)
        .cloned()
        .collect();
    let sm = run_evaluation_sm(&queries, &annotated, &cfg.criteria.strict, &scorer, conventional)?;

    let fc_queries: Vec<(Tweet, TopicAssignment)> = annotated
        .iter()
        .filter(|t| t.tweet.misleading)
        .filter_map(|t| t.assignment.clone().map(|a| (t.tweet.clone(), a)))
        .collect();
    let fc = run_evaluation_fc(
        &fc_queries,
        &articles,
        &article_assignments,
        &mappings,
        &scorer,
        cfg.thresholds.specific_threshold,
        conventional,
    )?;
    Ok(vec![sm, fc])
}

fn run_evaluate(cfg: &PipelineConfig) -> Result<()> {
    let reports = evaluation_reports(cfg, false)?;
    write_json(&cfg.out_dir.join("report.json"), &reports)?;
    fs::write(
        cfg.out_dir.join("report.txt"),
        crate::evaluate::render_report_table(&reports),
    )?;
    Ok(())
}
