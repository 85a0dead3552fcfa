//! Minimal batch HTTP endpoint over the built pipeline artifacts.
//!
//! `POST /v1/rebuttal` with `{"text", "approach": "sm"|"fc", "k"}` returns a
//! recommendation record; `GET /v1/health` reports artifact hashes. The
//! server is a plain blocking TCP loop; artifacts are immutable once loaded.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;

use serde::Deserialize;
use serde_json::json;

use crate::annotate::{classify_sentiment, recognize, Gazetteer, SentimentLexicon};
use crate::config::PipelineConfig;
use crate::corpus::{FactArticle, Tweet};
use crate::error::{Error, Result};
use crate::mapping::MappingResult;
use crate::pipeline::{RecommendationRecord, Stage};
use crate::rebuttal::{recommend_counter_tweets, tiered_recommend, AnnotatedTweet};
use crate::similarity::{WordVectorScorer, WordVectorTable};
use crate::textprep::{normalize, tokenize, Stopwords};
use crate::topics::{assign, CooccurrenceGraph, TopicAssignment, TopicLabelTable, TopicModel};

struct ServeState {
    annotations: Vec<AnnotatedTweet>,
    articles: Vec<FactArticle>,
    article_assignments: Vec<TopicAssignment>,
    mappings: Vec<MappingResult>,
    graph: CooccurrenceGraph,
    tweet_model: TopicModel,
    tweet_labels: TopicLabelTable,
    gazetteer: Gazetteer,
    lexicon: SentimentLexicon,
    scorer: WordVectorScorer,
    stopwords: Stopwords,
    artifact_hashes: BTreeMap<String, String>,
    cfg: PipelineConfig,
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn read_jsonl_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in std::fs::read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            line_no: idx + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

impl ServeState {
    fn load(cfg: &PipelineConfig) -> Result<ServeState> {
        let out = &cfg.out_dir;
        let mut artifact_hashes = BTreeMap::new();
        for stage in Stage::ALL {
            let manifest: serde_json::Value =
                read_json_file(&out.join(format!("{}.manifest.json", stage.name())))?;
            if let Some(outputs) = manifest.get("outputs").and_then(|o| o.as_object()) {
                for (name, hash) in outputs {
                    artifact_hashes
                        .insert(name.clone(), hash.as_str().unwrap_or_default().to_string());
                }
            }
        }
        Ok(ServeState {
            annotations: read_jsonl_file(&out.join("annotations.jsonl"))?,
            articles: read_jsonl_file(&out.join("articles.jsonl"))?,
            article_assignments: read_jsonl_file(&out.join("article_assignments.jsonl"))?,
            mappings: read_json_file(&out.join("mappings.json"))?,
            graph: read_json_file(&out.join("cooccurrence.json"))?,
            tweet_model: read_json_file(&out.join("tweet_model.json"))?,
            tweet_labels: TopicLabelTable::load(&cfg.paths.tweet_labels)?,
            gazetteer: Gazetteer::load(&cfg.paths.gazetteer)?,
            lexicon: SentimentLexicon::load(&cfg.paths.lexicon)?,
            scorer: WordVectorScorer::new(
                WordVectorTable::load(&cfg.paths.word_vectors)?,
                Stopwords::load(&cfg.paths.stopwords)?,
                true,
            ),
            stopwords: Stopwords::load(&cfg.paths.stopwords)?,
            artifact_hashes,
            cfg: cfg.clone(),
        })
    }

    fn annotate_query(&self, text: &str) -> AnnotatedTweet {
        let stream = normalize(&tokenize(text), &self.stopwords, true).with_source_id("query");
        let k = self.tweet_model.k as f64;
        let tau_p = self.cfg.thresholds.tau_primary.unwrap_or(1.5 / k);
        let tau_s = self.cfg.thresholds.tau_secondary.unwrap_or(1.5 / k);
        let assignment = assign(&self.tweet_model, &self.tweet_labels, tau_p, tau_s, &stream);
        AnnotatedTweet {
            tweet: Tweet {
                id: "query".to_string(),
                text: text.to_string(),
                misleading: true,
                replies: 0,
                retweets: 0,
                likes: 0,
            },
            assignment: Some(assignment),
            entities: Some(recognize(text, &self.gazetteer, None)),
            sentiment: Some(classify_sentiment(text, &self.lexicon)),
        }
    }

    fn rebuttal(&self, text: &str, approach: &str, k: usize) -> Result<RecommendationRecord> {
        let query = self.annotate_query(text);
        match approach {
            "sm" => {
                let rec = recommend_counter_tweets(
                    &query,
                    &self.annotations,
                    k,
                    &self.cfg.criteria.strict,
                    &self.cfg.criteria.relaxed,
                    &self.scorer,
                )?;
                Ok(RecommendationRecord {
                    target_id: rec.target_id,
                    approach: "sm".to_string(),
                    tier: None,
                    relaxed: Some(rec.relaxed),
                    items: rec.items,
                })
            }
            "fc" => {
                let assignment = query.assignment.as_ref().unwrap();
                if assignment.primary.is_none() {
                    // no topic could be inferred; nothing to filter by
                    return Ok(RecommendationRecord {
                        target_id: "query".to_string(),
                        approach: "fc".to_string(),
                        tier: None,
                        relaxed: None,
                        items: Vec::new(),
                    });
                }
                let rec = tiered_recommend(
                    &query.tweet,
                    assignment,
                    &self.articles,
                    &self.article_assignments,
                    &self.mappings,
                    &self.graph,
                    &self.scorer,
                    self.cfg.thresholds.specific_threshold,
                    k,
                )?;
                Ok(RecommendationRecord {
                    target_id: rec.target_id,
                    approach: "fc".to_string(),
                    tier: Some(
                        match rec.tier {
                            crate::rebuttal::Tier::Specific => "Specific",
                            crate::rebuttal::Tier::Near => "Near",
                            crate::rebuttal::Tier::Broad => "Broad",
                        }
                        .to_string(),
                    ),
                    relaxed: None,
                    items: rec.items,
                })
            }
            other => Err(Error::ConfigInvalid(format!("unknown approach {other:?}"))),
        }
    }
}

pub struct Server {
    listener: TcpListener,
    state: Option<ServeState>,
}

#[derive(Deserialize)]
struct RebuttalRequest {
    text: String,
    approach: String,
    #[serde(default)]
    k: Option<usize>,
}

impl Server {
    /// Bind and load artifacts. A failed artifact load still binds; requests
    /// then answer 503 until the pipeline has been built.
    pub fn bind(cfg: &PipelineConfig, addr: &str) -> Result<Server> {
        let listener = TcpListener::bind(addr)?;
        let state = ServeState::load(cfg).ok();
        Ok(Server { listener, state })
    }

    pub fn local_addr(&self) -> std::io::Result<std::net::SocketAddr> {
        self.listener.local_addr()
    }

    pub fn run(self) -> Result<()> {
        for stream in self.listener.incoming() {
            let mut stream = stream?;
            if let Err(e) = self.handle(&mut stream) {
                eprintln!("request error: {e}");
            }
        }
        Ok(())
    }

    fn handle(&self, stream: &mut TcpStream) -> Result<()> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut request_line = String::new();
        reader.read_line(&mut request_line)?;
        let mut parts = request_line.split_whitespace();
        let (method, path) = (
            parts.next().unwrap_or("").to_string(),
            parts.next().unwrap_or("").to_string(),
        );
        let mut content_length = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line)?;
            let line = line.trim();
            if line.is_empty() {
                break;
            }
            if let Some(v) = line.to_lowercase().strip_prefix("content-length:") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
        let mut body = vec![0u8; content_length];
        reader.read_exact(&mut body)?;

        let (status, payload) = self.route(&method, &path, &body);
        let response = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
            payload.len()
        );
        stream.write_all(response.as_bytes())?;
        Ok(())
    }

    fn route(&self, method: &str, path: &str, body: &[u8]) -> (&'static str, String) {
        match (method, path) {
            ("GET", "/v1/health") => match &self.state {
                Some(state) => (
                    "200 OK",
                    json!({"status": "ok", "artifacts": state.artifact_hashes}).to_string(),
                ),
                None => (
                    "503 Service Unavailable",
                    json!({"error": "artifacts not built"}).to_string(),
                ),
            },
            ("POST", "/v1/rebuttal") => {
                let state = match &self.state {
                    Some(s) => s,
                    None => {
                        return (
                            "503 Service Unavailable",
                            json!({"error": "artifacts not built"}).to_string(),
                        )
                    }
                };
                let request: RebuttalRequest = match serde_json::from_slice(body) {
                    Ok(r) => r,
                    Err(e) => {
                        return ("400 Bad Request", json!({"error": e.to_string()}).to_string())
                    }
                };
                if request.text.trim().is_empty() {
                    return ("400 Bad Request", json!({"error": "empty text"}).to_string());
                }
                let default_k = match request.approach.as_str() {
                    "fc" => state.cfg.recommend.k_fc,
                    _ => state.cfg.recommend.k_sm,
                };
                let k = request.k.unwrap_or(default_k);
                if k == 0 {
                    return ("400 Bad Request", json!({"error": "k must be >= 1"}).to_string());
                }
                match state.rebuttal(&request.text, &request.approach, k) {
                    Ok(record) => ("200 OK", serde_json::to_string(&record).unwrap()),
                    Err(Error::ConfigInvalid(msg)) => {
                        ("400 Bad Request", json!({"error": msg}).to_string())
                    }
                    Err(e) => (
                        "500 Internal Server Error",
                        json!({"error": e.to_string()}).to_string(),
                    ),
                }
            }
            _ => ("404 Not Found", json!({"error": "no such route"}).to_string()),
        }
    }
}
