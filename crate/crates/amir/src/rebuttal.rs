//! The two recommendation approaches: counter-tweet retrieval over the
//! non-misleading pool, and tiered fact-check article recommendation through
//! the topic mapping with a co-occurrence fallback for unmapped topics.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::{EntitySpan, SentimentLabel};
use crate::corpus::{FactArticle, Tweet};
use crate::error::{Error, Result};
use crate::mapping::MappingResult;
use crate::similarity::SentencePairScorer;
use crate::topics::{CooccurrenceGraph, TopicAssignment};

/// A tweet together with the pipeline annotations the match criteria need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTweet {
    pub tweet: Tweet,
    pub assignment: Option<TopicAssignment>,
    pub entities: Option<Vec<EntitySpan>>,
    pub sentiment: Option<SentimentLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCriteria {
    pub require_topic: bool,
    pub min_shared_entities: usize,
    pub require_sentiment: bool,
}

impl MatchCriteria {
    /// All three criteria: same topic, at least one shared entity, same
    /// sentiment polarity.
    pub fn strict_default() -> Self {
        MatchCriteria {
            require_topic: true,
            min_shared_entities: 1,
            require_sentiment: true,
        }
    }

    /// Fallback when the strict filter empties the pool: only entity overlap,
    /// raised to two shared entities.
    pub fn relaxed_default() -> Self {
        MatchCriteria {
            require_topic: false,
            min_shared_entities: 2,
            require_sentiment: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterTweetRecommendation {
    pub target_id: String,
    pub items: Vec<ScoredItem>,
    pub relaxed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    Specific,
    Near,
    Broad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecommendation {
    pub target_id: String,
    pub items: Vec<ScoredItem>,
    pub tier: Tier,
    /// Fact-check topic the candidates were drawn from; None when even the
    /// fallback found nothing.
    pub used_topic: Option<String>,
}

fn entity_surfaces(spans: &[EntitySpan]) -> HashSet<String> {
    spans.iter().map(|s| s.surface.to_lowercase()).collect()
}

/// True iff `cand` satisfies every enabled criterion against `mis`. Entity
/// overlap compares case-folded surfaces, not entity classes.
fn annotations(t: &AnnotatedTweet) -> Result<(&TopicAssignment, &[EntitySpan], &SentimentLabel)> {
    match (&t.assignment, &t.entities, &t.sentiment) {
        (Some(a), Some(e), Some(s)) => Ok((a, e, s)),
        _ => Err(Error::MissingAnnotation(t.tweet.id.clone())),
    }
}

pub fn criteria_match(mis: &AnnotatedTweet, cand: &AnnotatedTweet, c: &MatchCriteria) -> Result<bool> {
    let (mis_topic, mis_ents, mis_sent) = annotations(mis)?;
    let (cand_topic, cand_ents, cand_sent) = annotations(cand)?;

    if c.require_topic {
        match (&mis_topic.primary, &cand_topic.primary) {
            (Some(a), Some(b)) if a == b => {}
            _ => return Ok(false),
        }
    }
    if c.min_shared_entities > 0 {
        let shared = entity_surfaces(mis_ents)
            .intersection(&entity_surfaces(cand_ents))
            .count();
        if shared < c.min_shared_entities {
            return Ok(false);
        }
    }
    if c.require_sentiment && mis_sent.polarity != cand_sent.polarity {
        return Ok(false);
    }
    Ok(true)
}

fn rank_top_k(mut items: Vec<ScoredItem>, k: usize) -> Vec<ScoredItem> {
    items.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    items.truncate(k);
    items
}

/// Strict filter first; when it yields nothing, retry relaxed and mark the
/// result. Misleading pool entries are always excluded.
pub fn recommend_counter_tweets(
    mis: &AnnotatedTweet,
    pool: &[AnnotatedTweet],
    k: usize,
    strict: &MatchCriteria,
    relaxed: &MatchCriteria,
    scorer: &dyn SentencePairScorer,
) -> Result<CounterTweetRecommendation> {
    let collect = |criteria: &MatchCriteria| -> Result<Vec<ScoredItem>> {
        let mut items = Vec::new();
        for cand in pool {
            if cand.tweet.misleading || cand.tweet.id == mis.tweet.id {
                continue;
            }
            if criteria_match(mis, cand, criteria)? {
                items.push(ScoredItem {
                    id: cand.tweet.id.clone(),
                    score: scorer.score_pair(&mis.tweet.text, &cand.tweet.text).value,
                });
            }
        }
        Ok(rank_top_k(items, k))
    };
    let strict_items = collect(strict)?;
    if !strict_items.is_empty() {
        return Ok(CounterTweetRecommendation {
            target_id: mis.tweet.id.clone(),
            items: strict_items,
            relaxed: false,
        });
    }
    Ok(CounterTweetRecommendation {
        target_id: mis.tweet.id.clone(),
        items: collect(relaxed)?,
        relaxed: true,
    })
}

fn mapped_target<'a>(tweet_topic: &str, mappings: &'a [MappingResult]) -> Option<&'a str> {
    mappings
        .iter()
        .find(|m| m.source_topic == tweet_topic)
        .and_then(|m| m.target_topic.as_deref())
}

/// Article ids whose primary topic equals the fact-check topic mapped from
/// `tweet_topic`; empty when the topic is unmapped.
pub fn filter_articles(
    tweet_topic: &str,
    mappings: &[MappingResult],
    article_assignments: &[TopicAssignment],
) -> Vec<String> {
    match mapped_target(tweet_topic, mappings) {
        Some(target) => article_assignments
            .iter()
            .filter(|a| a.primary.as_deref() == Some(target))
            .map(|a| a.doc_id.clone())
            .collect(),
        None => Vec::new(),
    }
}

fn articles_under_topic(topic: &str, article_assignments: &[TopicAssignment]) -> Vec<String> {
    article_assignments
        .iter()
        .filter(|a| a.primary.as_deref() == Some(topic))
        .map(|a| a.doc_id.clone())
        .collect()
}

/// Three-tier article recommendation. Direct candidates come through the
/// topic mapping; when there are none the co-occurrence graph supplies a
/// neighboring tweet topic whose mapping does have articles (Broad tier).
pub fn tiered_recommend(
    mis: &Tweet,
    mis_assignment: &TopicAssignment,
    articles: &[FactArticle],
    article_assignments: &[TopicAssignment],
    mappings: &[MappingResult],
    cooccurrence: &CooccurrenceGraph,
    scorer: &dyn SentencePairScorer,
    specific_threshold: f64,
    k: usize,
) -> Result<ArticleRecommendation> {
    let tweet_topic = mis_assignment
        .primary
        .as_deref()
        .ok_or_else(|| Error::NoTopicAssignment(mis.id.clone()))?;

    let mut used_topic = mapped_target(tweet_topic, mappings).map(str::to_string);
    let mut candidate_ids = filter_articles(tweet_topic, mappings, article_assignments);
    let mut fallback = false;

    if candidate_ids.is_empty() {
        fallback = true;
        used_topic = None;
        for (neighbor, _) in cooccurrence.neighbors(tweet_topic) {
            if let Some(target) = mapped_target(&neighbor, mappings) {
                let ids = articles_under_topic(target, article_assignments);
                if !ids.is_empty() {
                    used_topic = Some(target.to_string());
                    candidate_ids = ids;
                    break;
                }
            }
        }
    }

    let id_set: HashSet<&str> = candidate_ids.iter().map(String::as_str).collect();
    let items: Vec<ScoredItem> = articles
        .iter()
        .filter(|a| id_set.contains(a.id.as_str()))
        .map(|a| ScoredItem {
            id: a.id.clone(),
            score: scorer.score_pair(&mis.text, &a.title).value,
        })
        .collect();
    let items = rank_top_k(items, k);

    let tier = if fallback {
        Tier::Broad
    } else if items.iter().any(|i| i.score >= specific_threshold) {
        Tier::Specific
    } else {
        Tier::Near
    };
    Ok(ArticleRecommendation {
        target_id: mis.id.clone(),
        items,
        tier,
        used_topic,
    })
}

/// Seeded uniform draw among a topic's misleading tweets.
pub fn pick_target_tweet<'a>(
    topic: &str,
    tweets: &'a [Tweet],
    assignments: &[TopicAssignment],
    seed: u64,
) -> Result<&'a Tweet> {
    let topical: Vec<&Tweet> = tweets
        .iter()
        .zip(assignments)
        .filter(|(t, a)| t.misleading && a.primary.as_deref() == Some(topic))
        .map(|(t, _)| t)
        .collect();
    if topical.is_empty() {
        return Err(Error::EmptyTopic(topic.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(topical[rng.random_range(0..topical.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Polarity;
    use crate::similarity::{PairScore, SentencePairScorer};

    fn span(surface: &str) -> EntitySpan {
        EntitySpan {
            surface: surface.to_string(),
            start: 0,
            end: surface.len(),
            label: "VAC_TYPE".to_string(),
        }
    }

    fn annotated(
        id: &str,
        misleading: bool,
        topic: Option<&str>,
        entities: &[&str],
        polarity: Polarity,
    ) -> AnnotatedTweet {
        AnnotatedTweet {
            tweet: Tweet {
                id: id.to_string(),
                text: format!("text of {id}"),
                misleading,
                replies: 0,
                retweets: 0,
                likes: 0,
            },
            assignment: Some(TopicAssignment {
                doc_id: id.to_string(),
                primary: topic.map(str::to_string),
                secondary: None,
                primary_prob: 0.9,
                secondary_prob: 0.0,
            }),
            entities: Some(entities.iter().map(|e| span(e)).collect()),
            sentiment: Some(SentimentLabel {
                polarity,
                compound: match polarity {
                    Polarity::Positive => 0.5,
                    Polarity::Negative => -0.5,
                    Polarity::Neutral => 0.0,
                },
            }),
        }
    }

    struct FixedScorer(f64);
    impl SentencePairScorer for FixedScorer {
        fn name(&self) -> &str {
            "fixed"
        }
        fn score_pair(&self, _a: &str, _b: &str) -> PairScore {
            PairScore {
                value: self.0,
                degenerate: false,
            }
        }
    }

    /// Scores by candidate id suffix so ranking is controllable per item.
    struct IdScorer;
    impl SentencePairScorer for IdScorer {
        fn name(&self) -> &str {
            "id"
        }
        fn score_pair(&self, _a: &str, b: &str) -> PairScore {
            let digits: String = b.chars().filter(char::is_ascii_digit).collect();
            PairScore {
                value: digits.parse::<f64>().unwrap_or(0.0) / 100.0,
                degenerate: false,
            }
        }
    }

    #[test]
    fn criteria_truth_table() {
        let strict = MatchCriteria::strict_default();
        let mis = annotated("m", true, Some("A"), &["pfizer"], Polarity::Negative);
        // all 8 combinations of topic/entity/sentiment agreement
        for topic_ok in [true, false] {
            for entity_ok in [true, false] {
                for sent_ok in [true, false] {
                    let cand = annotated(
                        "c",
                        false,
                        Some(if topic_ok { "A" } else { "B" }),
                        if entity_ok { &["Pfizer"] } else { &["moderna"] },
                        if sent_ok { Polarity::Negative } else { Polarity::Positive },
                    );
                    let expect = topic_ok && entity_ok && sent_ok;
                    assert_eq!(criteria_match(&mis, &cand, &strict).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn unknown_topic_never_matches_under_topic_requirement() {
        let strict = MatchCriteria::strict_default();
        let mis = annotated("m", true, None, &["pfizer"], Polarity::Negative);
        let cand = annotated("c", false, None, &["pfizer"], Polarity::Negative);
        assert!(!criteria_match(&mis, &cand, &strict).unwrap());
    }

    #[test]
    fn relaxed_two_entities() {
        let relaxed = MatchCriteria::relaxed_default();
        let mis = annotated("m", true, Some("A"), &["pfizer", "booster"], Polarity::Negative);
        let two = annotated("c1", false, Some("B"), &["Pfizer", "Booster"], Polarity::Positive);
        let one = annotated("c2", false, Some("A"), &["pfizer"], Polarity::Negative);
        assert!(criteria_match(&mis, &two, &relaxed).unwrap());
        assert!(!criteria_match(&mis, &one, &relaxed).unwrap());
    }

    #[test]
    fn missing_annotation_errors() {
        let strict = MatchCriteria::strict_default();
        let mis = annotated("m", true, Some("A"), &["pfizer"], Polarity::Negative);
        let mut cand = annotated("c", false, Some("A"), &["pfizer"], Polarity::Negative);
        cand.sentiment = None;
        assert!(matches!(
            criteria_match(&mis, &cand, &strict),
            Err(Error::MissingAnnotation(id)) if id == "c"
        ));
    }

    #[test]
    fn cascade_strict_then_relaxed_then_empty() {
        let strict = MatchCriteria::strict_default();
        let relaxed = MatchCriteria::relaxed_default();
        let scorer = FixedScorer(0.5);
        let mis = annotated("m", true, Some("A"), &["pfizer", "booster"], Polarity::Negative);

        // pool 1: three strict passes among distractors
        let pool1 = vec![
            annotated("c1", false, Some("A"), &["pfizer"], Polarity::Negative),
            annotated("c2", false, Some("A"), &["booster"], Polarity::Negative),
            annotated("c3", false, Some("A"), &["pfizer"], Polarity::Negative),
            annotated("c4", false, Some("B"), &["pfizer"], Polarity::Negative),
            annotated("c5", true, Some("A"), &["pfizer"], Polarity::Negative),
        ];
        let r1 = recommend_counter_tweets(&mis, &pool1, 10, &strict, &relaxed, &scorer).unwrap();
        assert_eq!(r1.items.len(), 3);
        assert!(!r1.relaxed);
        assert!(r1.items.iter().all(|i| i.id != "c5"));

        // pool 2: nobody passes strict, two pass relaxed via 2-entity overlap
        let pool2 = vec![
            annotated("d1", false, Some("B"), &["pfizer", "booster"], Polarity::Positive),
            annotated("d2", false, Some("B"), &["Pfizer", "Booster"], Polarity::Neutral),
            annotated("d3", false, Some("B"), &["pfizer"], Polarity::Positive),
        ];
        let r2 = recommend_counter_tweets(&mis, &pool2, 10, &strict, &relaxed, &scorer).unwrap();
        assert_eq!(r2.items.len(), 2);
        assert!(r2.relaxed);

        // pool 3: empty
        let r3 = recommend_counter_tweets(&mis, &[], 10, &strict, &relaxed, &scorer).unwrap();
        assert!(r3.items.is_empty());
        assert!(r3.relaxed);
    }

    #[test]
    fn ranking_score_desc_id_asc() {
        let strict = MatchCriteria {
            require_topic: false,
            min_shared_entities: 0,
            require_sentiment: false,
        };
        let mis = annotated("m", true, Some("A"), &[], Polarity::Neutral);
        let pool = vec![
            annotated("c10", false, Some("A"), &[], Polarity::Neutral),
            annotated("c30", false, Some("A"), &[], Polarity::Neutral),
            annotated("c20", false, Some("A"), &[], Polarity::Neutral),
        ];
        let r = recommend_counter_tweets(&mis, &pool, 2, &strict, &strict, &IdScorer).unwrap();
        let ids: Vec<&str> = r.items.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, vec!["c30", "c20"]);

        // tie on score falls back to id ascending
        let tie = FixedScorer(0.4);
        let r = recommend_counter_tweets(&mis, &pool, 3, &strict, &strict, &tie).unwrap();
        let ids: Vec<&str> = r.items.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, vec!["c10", "c20", "c30"]);
    }

    fn article_assign(id: &str, topic: &str) -> TopicAssignment {
        TopicAssignment {
            doc_id: id.to_string(),
            primary: Some(topic.to_string()),
            secondary: None,
            primary_prob: 0.9,
            secondary_prob: 0.0,
        }
    }

    fn mapping(source: &str, target: Option<&str>) -> MappingResult {
        MappingResult {
            source_topic: source.to_string(),
            target_topic: target.map(str::to_string),
            method: crate::mapping::MappingMethod::Distance,
            score: 0.1,
            matched_keywords: vec![],
        }
    }

    #[test]
    fn filter_articles_basic() {
        let mappings = vec![mapping("A", Some("X")), mapping("B", None)];
        let assigns = vec![
            article_assign("a1", "X"),
            article_assign("a2", "Y"),
            article_assign("a3", "X"),
        ];
        assert_eq!(filter_articles("A", &mappings, &assigns), vec!["a1", "a3"]);
        assert!(filter_articles("B", &mappings, &assigns).is_empty());
        assert!(filter_articles("Z", &mappings, &assigns).is_empty());
        // mapped but no article under target
        let m2 = vec![mapping("A", Some("W"))];
        assert!(filter_articles("A", &m2, &assigns).is_empty());
    }

    fn article(id: &str, title: &str) -> FactArticle {
        FactArticle {
            id: id.to_string(),
            title: title.to_string(),
            content: String::new(),
            source_site: String::new(),
            published: None,
        }
    }

    fn fixture() -> (Vec<FactArticle>, Vec<TopicAssignment>, Vec<MappingResult>, CooccurrenceGraph) {
        let articles = vec![article("a62", "about X"), article("b40", "about Y")];
        let assigns = vec![article_assign("a62", "X"), article_assign("b40", "Y")];
        let mappings = vec![mapping("A", Some("X")), mapping("B", Some("Y"))];
        let mut graph = CooccurrenceGraph::default();
        graph.add_edge("A", "C");
        graph.add_edge("A", "C");
        graph.add_edge("B", "C");
        (articles, assigns, mappings, graph)
    }

    fn mis_tweet() -> (Tweet, TopicAssignment) {
        (
            Tweet {
                id: "m".into(),
                text: "claim".into(),
                misleading: true,
                replies: 0,
                retweets: 0,
                likes: 0,
            },
            TopicAssignment {
                doc_id: "m".into(),
                primary: Some("A".into()),
                secondary: None,
                primary_prob: 0.9,
                secondary_prob: 0.0,
            },
        )
    }

    #[test]
    fn tier_boundary_inclusive() {
        let (articles, assigns, mappings, graph) = fixture();
        let (mis, assign) = mis_tweet();
        for (score, tier) in [(0.62, Tier::Specific), (0.6199, Tier::Near), (0.65, Tier::Specific)] {
            let r = tiered_recommend(
                &mis,
                &assign,
                &articles,
                &assigns,
                &mappings,
                &graph,
                &FixedScorer(score),
                0.62,
                15,
            )
            .unwrap();
            assert_eq!(r.tier, tier, "score {score}");
            assert_eq!(r.used_topic.as_deref(), Some("X"));
            assert_eq!(r.items.len(), 1);
        }
    }

    #[test]
    fn broad_fallback_via_cooccurrence() {
        let (articles, assigns, mappings, graph) = fixture();
        let (mis, mut assign) = mis_tweet();
        // topic C is unmapped; its strongest neighbor is A (edge weight 2),
        // whose mapping target X has articles
        assign.primary = Some("C".into());
        let r = tiered_recommend(
            &mis,
            &assign,
            &articles,
            &assigns,
            &mappings,
            &graph,
            &FixedScorer(0.37),
            0.62,
            15,
        )
        .unwrap();
        assert_eq!(r.tier, Tier::Broad);
        assert_eq!(r.used_topic.as_deref(), Some("X"));
        assert_eq!(r.items[0].id, "a62");
    }

    #[test]
    fn broad_exhausted_returns_empty() {
        let (articles, assigns, _, graph) = fixture();
        let (mis, mut assign) = mis_tweet();
        assign.primary = Some("Z".into());
        let r = tiered_recommend(
            &mis,
            &assign,
            &articles,
            &assigns,
            &[],
            &graph,
            &FixedScorer(0.5),
            0.62,
            15,
        )
        .unwrap();
        assert_eq!(r.tier, Tier::Broad);
        assert!(r.items.is_empty());
        assert!(r.used_topic.is_none());
    }

    #[test]
    fn no_topic_assignment_errors() {
        let (articles, assigns, mappings, graph) = fixture();
        let (mis, mut assign) = mis_tweet();
        assign.primary = None;
        assert!(matches!(
            tiered_recommend(
                &mis, &assign, &articles, &assigns, &mappings, &graph,
                &FixedScorer(0.5), 0.62, 15,
            ),
            Err(Error::NoTopicAssignment(_))
        ));
    }

    fn topical_tweets() -> (Vec<Tweet>, Vec<TopicAssignment>) {
        let tweets: Vec<Tweet> = (0..6)
            .map(|i| Tweet {
                id: format!("t{i}"),
                text: "x".into(),
                misleading: i < 4,
                replies: 0,
                retweets: 0,
                likes: 0,
            })
            .collect();
        let assigns: Vec<TopicAssignment> = (0..6)
            .map(|i| TopicAssignment {
                doc_id: format!("t{i}"),
                primary: Some("A".to_string()),
                secondary: None,
                primary_prob: 0.9,
                secondary_prob: 0.0,
            })
            .collect();
        (tweets, assigns)
    }

    #[test]
    fn pick_target_deterministic_and_uniform() {
        let (tweets, assigns) = topical_tweets();
        let a = pick_target_tweet("A", &tweets, &assigns, 11).unwrap();
        let b = pick_target_tweet("A", &tweets, &assigns, 11).unwrap();
        assert_eq!(a.id, b.id);
        assert!(a.misleading);

        let mut counts = std::collections::HashMap::new();
        for seed in 0..1000u64 {
            let t = pick_target_tweet("A", &tweets, &assigns, seed).unwrap();
            *counts.entry(t.id.clone()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            let freq = *c as f64 / 1000.0;
            assert!((freq - 0.25).abs() < 0.05, "freq {freq}");
        }
    }

    #[test]
    fn pick_target_single_and_empty() {
        let (tweets, assigns) = topical_tweets();
        let one: Vec<Tweet> = vec![tweets[0].clone()];
        let one_a = vec![assigns[0].clone()];
        assert_eq!(pick_target_tweet("A", &one, &one_a, 99).unwrap().id, "t0");
        assert!(matches!(
            pick_target_tweet("B", &tweets, &assigns, 0),
            Err(Error::EmptyTopic(t)) if t == "B"
        ));
    }
}
