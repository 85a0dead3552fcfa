//! Misinformation rebuttal engine: topic modeling over a tweet corpus and a
//! fact-check corpus, topic-to-topic mapping, entity and sentiment
//! annotation, and two recommendation approaches (counter tweets and
//! fact-check articles) with an offline evaluation harness.

pub mod annotate;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod mapping;
pub mod pipeline;
pub mod rebuttal;
pub mod serve;
pub mod similarity;
pub mod stem;
pub mod textprep;
pub mod topics;

pub use error::{Error, Result};
