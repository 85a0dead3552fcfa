//! Deterministic text normalization shared by topic modeling, keyword
//! mapping, and embedding.
//!
//! Tokenization splits on whitespace and punctuation boundaries, keeps the
//! `#` prefix on hashtags, treats URLs as single tokens, and preserves
//! internal hyphens. Normalization lowercases, removes stopwords, and
//! optionally stems; hashtag tokens bypass stemming and stop-listing.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenStream {
            tokens,
            source_id: String::new(),
        }
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }
}

fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '\'' || c == '_'
}

/// Byte-offset spans of tokens, for consumers that need positions
/// (entity recognition). `tokenize` slices the same spans.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut chunk_start = 0;
    for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        if c.is_whitespace() {
            if i > chunk_start {
                split_chunk(text, chunk_start, i, &mut spans);
            }
            chunk_start = i + c.len_utf8();
        }
    }
    spans
}

fn split_chunk(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let chunk = &text[start..end];
    if is_url(chunk) {
        spans.push((start, end));
        return;
    }
    let mut tok_start: Option<usize> = None;
    for (off, c) in chunk.char_indices().chain(std::iter::once((chunk.len(), ' '))) {
        let abs = start + off;
        let token_char = is_token_char(c) || (c == '#' && tok_start.is_none());
        if token_char {
            if tok_start.is_none() {
                tok_start = Some(abs);
            }
        } else if let Some(ts) = tok_start.take() {
            push_trimmed(text, ts, abs, spans);
        }
    }
}

/// Strip leading/trailing hyphens and apostrophes so that dash runs and
/// quoted words do not produce junk tokens.
fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let tok = &text[start..end];
    let trimmed = tok.trim_matches(|c| c == '-' || c == '\'');
    if trimmed.is_empty() {
        return;
    }
    let off = tok.find(trimmed).unwrap();
    spans.push((start + off, start + off + trimmed.len()));
}

pub fn tokenize(text: &str) -> TokenStream {
    let tokens = token_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_string())
        .collect();
    TokenStream::new(tokens)
}

/// Stopword set: one lowercase term per line, `#`-prefixed comment lines ignored.
#[derive(Debug, Clone, Default)]
pub struct Stopwords {
    terms: HashSet<String>,
}

impl Stopwords {
    pub fn from_terms<I: IntoIterator<Item = S>, S: Into<String>>(terms: I) -> Self {
        Stopwords {
            terms: terms.into_iter().map(|t| t.into().to_lowercase()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)?;
        Ok(Self::from_terms(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        ))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Lowercase, drop stopwords, optionally stem. Hashtag tokens pass through
/// untouched apart from lowercasing. A token is also dropped when its stemmed
/// form is a stopword, which keeps the whole operation idempotent.
pub fn normalize(stream: &TokenStream, stopwords: &Stopwords, stem_tokens: bool) -> TokenStream {
    let mut out = Vec::with_capacity(stream.tokens.len());
    for tok in &stream.tokens {
        let lower = tok.to_lowercase();
        if lower.starts_with('#') {
            out.push(lower);
            continue;
        }
        if stopwords.contains(&lower) {
            continue;
        }
        let final_tok = if stem_tokens { stem::stem(&lower) } else { lower };
        if final_tok.is_empty() || stopwords.contains(&final_tok) {
            continue;
        }
        out.push(final_tok);
    }
    TokenStream {
        tokens: out,
        source_id: stream.source_id.clone(),
    }
}
