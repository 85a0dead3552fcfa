//! Word-vector store, document embedding, cosine similarity, and the
//! pluggable sentence-pair scorer used for semantic matching.
//!
//! The default provider embeds both texts as mean word vectors and takes
//! their cosine. Heavier models plug in behind [`SentencePairScorer`],
//! optionally through the subprocess line protocol in [`ExternalScorer`].

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::textprep::{self, Stopwords, TokenStream};

/// Token to vector map with a single shared dimension. Tokens are lowercased
/// at load; lookups are case-sensitive afterwards.
#[derive(Debug, Clone, Default)]
pub struct WordVectorTable {
    dimension: Option<usize>,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    /// Text format: one `token v1 v2 ... vD` per line, whitespace separated.
    /// Duplicate tokens keep the last row.
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)?;
        let mut table = WordVectorTable::default();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().ok_or(Error::MalformedLine { line_no })?.to_lowercase();
            let vector: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::MalformedLine { line_no })?;
            if vector.is_empty() {
                return Err(Error::MalformedLine { line_no });
            }
            match table.dimension {
                None => table.dimension = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(Error::InconsistentDimension { line_no });
                }
                Some(_) => {}
            }
            if table.vectors.insert(token.clone(), vector).is_some() {
                eprintln!("warning: duplicate word vector for {token:?}, keeping last");
            }
        }
        Ok(table)
    }

    pub fn from_rows<I: IntoIterator<Item = (S, Vec<f64>)>, S: Into<String>>(rows: I) -> Self {
        let mut table = WordVectorTable::default();
        for (token, vector) in rows {
            if table.dimension.is_none() {
                table.dimension = Some(vector.len());
            }
            table.vectors.insert(token.into().to_lowercase(), vector);
        }
        table
    }

    pub fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbedding {
    pub vector: Vec<f64>,
    pub in_vocab_count: usize,
    pub is_zero: bool,
}

/// Mean of in-vocabulary token vectors; out-of-vocabulary tokens are skipped
/// rather than zero-filled so they do not drag the mean toward the origin.
pub fn embed_document(tokens: &TokenStream, table: &WordVectorTable) -> Result<DocEmbedding> {
    let dim = table.dimension().ok_or(Error::EmptyVocabulary)?;
    let mut sum = vec![0.0; dim];
    let mut count = 0usize;
    for tok in &tokens.tokens {
        if let Some(v) = table.get(tok) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            count += 1;
        }
    }
    if count > 0 {
        for s in &mut sum {
            *s /= count as f64;
        }
    }
    Ok(DocEmbedding {
        vector: sum,
        in_vocab_count: count,
        is_zero: count == 0,
    })
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (norm_a * norm_b)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub value: f64,
    /// True when a degenerate input (empty or fully out-of-vocabulary text)
    /// forced the score to 0 instead of erroring.
    pub degenerate: bool,
}

pub trait SentencePairScorer {
    fn name(&self) -> &str;
    fn score_pair(&self, a: &str, b: &str) -> PairScore;
}

pub fn pair_score(scorer: &dyn SentencePairScorer, a: &str, b: &str) -> f64 {
    scorer.score_pair(a, b).value
}

/// Default provider: tokenize, normalize, embed as mean word vectors, cosine.
pub struct WordVectorScorer {
    table: WordVectorTable,
    stopwords: Stopwords,
    stem: bool,
}

impl WordVectorScorer {
    pub fn new(table: WordVectorTable, stopwords: Stopwords, stem: bool) -> Self {
        WordVectorScorer { table, stopwords, stem }
    }

    fn embed(&self, text: &str) -> Result<DocEmbedding> {
        let stream = textprep::normalize(&textprep::tokenize(text), &self.stopwords, self.stem);
        embed_document(&stream, &self.table)
    }
}

impl SentencePairScorer for WordVectorScorer {
    fn name(&self) -> &str {
        "word-vector-cosine"
    }

    fn score_pair(&self, a: &str, b: &str) -> PairScore {
        let degenerate = PairScore {
            value: 0.0,
            degenerate: true,
        };
        let (ea, eb) = match (self.embed(a), self.embed(b)) {
            (Ok(ea), Ok(eb)) => (ea, eb),
            _ => return degenerate,
        };
        if ea.is_zero || eb.is_zero {
            return degenerate;
        }
        match cosine(&ea.vector, &eb.vector) {
            Ok(value) => PairScore {
                value,
                degenerate: false,
            },
            Err(_) => degenerate,
        }
    }
}

/// Adapter for out-of-process scorers speaking the line protocol
/// `SCORE <len_a> <len_b>\n<textA>\n<textB>\n` -> `OK <float>\n`.
/// Calls are serialized; the child process lives as long as the adapter.
pub struct ExternalScorer {
    name: String,
    child: Mutex<Child>,
}

impl ExternalScorer {
    pub fn spawn(name: &str, program: &str, args: &[&str]) -> Result<Self> {
        let child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        Ok(ExternalScorer {
            name: name.to_string(),
            child: Mutex::new(child),
        })
    }

    fn exchange(&self, a: &str, b: &str) -> Result<f64> {
        let mut child = self.child.lock().expect("scorer lock poisoned");
        let stdin = child.stdin.as_mut().expect("scorer stdin closed");
        write!(stdin, "SCORE {} {}\n{}\n{}\n", a.len(), b.len(), a, b)?;
        stdin.flush()?;
        let stdout = child.stdout.as_mut().expect("scorer stdout closed");
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line)?;
        let value = line
            .trim()
            .strip_prefix("OK ")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or(Error::MalformedLine { line_no: 1 })?;
        Ok(value)
    }
}

impl SentencePairScorer for ExternalScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score_pair(&self, a: &str, b: &str) -> PairScore {
        match self.exchange(a, b) {
            Ok(value) => PairScore {
                value,
                degenerate: false,
            },
            Err(_) => PairScore {
                value: 0.0,
                degenerate: true,
            },
        }
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
