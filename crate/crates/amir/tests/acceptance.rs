//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single PASS/FAIL line; a FAIL line is followed by the panic that caused
//! it.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use amir::annotate::{evaluate_ner, recognize, Gazetteer, Polarity, SentimentLabel};
use amir::config::PipelineConfig;
use amir::corpus::{FactArticle, Tweet};
use amir::evaluate::{
    map_at_k, mrr_at_k, run_evaluation_fc, run_evaluation_sm, Approach, EVAL_KS,
};
use amir::mapping::{
    js_divergence, map_by_distance, map_by_keywords, signature, MappingResult,
    DEFAULT_SIGNATURE_SIZE,
};
use amir::pipeline::{run_all, RecommendationRecord};
use amir::rebuttal::{
    criteria_match, recommend_counter_tweets, tiered_recommend, AnnotatedTweet, MatchCriteria,
    ScoredItem, Tier,
};
use amir::similarity::{PairScore, SentencePairScorer};
use amir::textprep::TokenStream;
use amir::topics::{fit_lda, select_k, CooccurrenceGraph, TopicAssignment, TopicModel};

fn criterion(name: &str, body: impl FnOnce()) {
    let result = catch_unwind(AssertUnwindSafe(body));
    println!(
        "acceptance {name}: {}",
        if result.is_ok() { "PASS" } else { "FAIL" }
    );
    if let Err(cause) = result {
        std::panic::resume_unwind(cause);
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

// ---------------------------------------------------------------- scorers --

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

/// Scores a pair by looking the candidate text up in a fixed table.
struct TableScorer(HashMap<String, f64>);

impl SentencePairScorer for TableScorer {
    fn name(&self) -> &str {
        "table"
    }
    fn score_pair(&self, _a: &str, b: &str) -> PairScore {
        PairScore {
            value: self.0.get(b).copied().unwrap_or(0.0),
            degenerate: false,
        }
    }
}

/// High score iff the two texts share their first token.
struct MarkerScorer;

impl SentencePairScorer for MarkerScorer {
    fn name(&self) -> &str {
        "marker"
    }
    fn score_pair(&self, a: &str, b: &str) -> PairScore {
        let first = |s: &str| s.split_whitespace().next().map(str::to_string);
        PairScore {
            value: if first(a) == first(b) { 1.0 } else { 0.2 },
            degenerate: false,
        }
    }
}

// --------------------------------------------------------------- fixtures --

/// Disjoint-vocabulary planted corpus: `sizes[g]` documents for group g, each
/// of `len` tokens drawn uniformly from that group's 20-word family.
fn planted_docs(
    sizes: &[usize],
    len: usize,
    prefix: &str,
    seed: u64,
) -> (Vec<TokenStream>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut truth = Vec::new();
    for (g, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            let tokens: Vec<String> = (0..len)
                .map(|_| format!("{prefix}{g}w{}", rng.random_range(0..20)))
                .collect();
            docs.push(TokenStream::new(tokens).with_source_id(format!("{prefix}{g}d{i}")));
            truth.push(g);
        }
    }
    (docs, truth)
}

fn purity(model: &TopicModel, truth: &[usize]) -> f64 {
    let argmax = |row: &[f64]| {
        row.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    };
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for (row, &g) in model.theta.iter().zip(truth) {
        *counts.entry((argmax(row), g)).or_insert(0) += 1;
    }
    let mut correct = 0usize;
    for cluster in 0..model.k {
        correct += (0..truth.len())
            .map(|g| counts.get(&(cluster, g)).copied().unwrap_or(0))
            .max()
            .unwrap_or(0);
    }
    correct as f64 / truth.len() as f64
}

fn annotated(
    id: &str,
    text: &str,
    misleading: bool,
    topic: Option<&str>,
    entities: &[&str],
    polarity: Polarity,
) -> AnnotatedTweet {
    AnnotatedTweet {
        tweet: Tweet {
            id: id.to_string(),
            text: text.to_string(),
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
        entities: Some(
            entities
                .iter()
                .map(|e| amir::annotate::EntitySpan {
                    surface: e.to_string(),
                    start: 0,
                    end: e.len(),
                    label: "VAC_TYPE".to_string(),
                })
                .collect(),
        ),
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

fn assignment(id: &str, topic: Option<&str>) -> TopicAssignment {
    TopicAssignment {
        doc_id: id.to_string(),
        primary: topic.map(str::to_string),
        secondary: None,
        primary_prob: 0.9,
        secondary_prob: 0.0,
    }
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

fn mapping(source: &str, target: Option<&str>) -> MappingResult {
    MappingResult {
        source_topic: source.to_string(),
        target_topic: target.map(str::to_string),
        method: amir::mapping::MappingMethod::Distance,
        score: 0.1,
        matched_keywords: vec![],
    }
}

// -------------------------------------------------------------- criteria --

#[test]
fn c01_metric_oracle_equivalence() {
    criterion("01 metric oracle equivalence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let rels: Vec<Vec<bool>> = (0..200)
            .map(|_| {
                let len = rng.random_range(1..=20);
                (0..len).map(|_| rng.random_bool(0.5)).collect()
            })
            .collect();

        // brute-force direct summation, written against the definitions
        let oracle_map = |rels: &[Vec<bool>], k: usize| -> f64 {
            let mut total = 0.0;
            for rel in rels {
                let at = |i: usize| i <= rel.len() && rel[i - 1];
                let mut ap = 0.0;
                for i in 1..=k {
                    if at(i) {
                        let hits = (1..=i).filter(|&j| at(j)).count();
                        ap += hits as f64 / i as f64;
                    }
                }
                total += ap / k as f64;
            }
            total / rels.len() as f64
        };
        let oracle_mrr = |rels: &[Vec<bool>], k: usize| -> f64 {
            let mut total = 0.0;
            for rel in rels {
                for i in 1..=k {
                    if i <= rel.len() && rel[i - 1] {
                        total += 1.0 / i as f64;
                        break;
                    }
                }
            }
            total / rels.len() as f64
        };

        let start = Instant::now();
        for k in 1..=20 {
            let map = map_at_k(&rels, k).unwrap();
            let mrr = mrr_at_k(&rels, k).unwrap();
            assert!((map - oracle_map(&rels, k)).abs() <= 1e-12, "MAP@{k}");
            assert!((mrr - oracle_mrr(&rels, k)).abs() <= 1e-12, "MRR@{k}");
            // singleton query sets as well
            for rel in rels.iter().take(20) {
                let single = std::slice::from_ref(rel);
                assert!((map_at_k(single, k).unwrap() - oracle_map(single, k)).abs() <= 1e-12);
                assert!((mrr_at_k(single, k).unwrap() - oracle_mrr(single, k)).abs() <= 1e-12);
            }
        }
        assert!(start.elapsed().as_secs_f64() < 1.0, "metric oracle too slow");
    });
}

#[test]
fn c02_positional_divisor_hand_value() {
    criterion("02 positional-divisor MAP hand value", || {
        let rels = vec![vec![true, false, true]];
        let map = map_at_k(&rels, 3).unwrap();
        assert!((map - 5.0 / 9.0).abs() <= 1e-12, "got {map}");
    });
}

#[test]
fn c03_js_divergence_properties() {
    criterion("03 JS divergence properties", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let dim = rng.random_range(2..=8);
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                let raw: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-6).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            };
            let p = draw(&mut rng);
            let q = draw(&mut rng);
            let pq = js_divergence(&p, &q).unwrap();
            let qp = js_divergence(&q, &p).unwrap();
            assert_eq!(pq, qp, "symmetry");
            assert!((0.0..=1.0).contains(&pq), "bounds: {pq}");
            assert_eq!(js_divergence(&p, &p).unwrap(), 0.0, "self-divergence");
        }
        assert_eq!(js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let mixed = js_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((mixed - 0.0488).abs() <= 1e-4, "got {mixed}");
    });
}

#[test]
fn c04_lda_invariants() {
    criterion("04 LDA invariants", || {
        let (docs, _) = planted_docs(&[34, 33, 33], 15, "g", 42);
        let start = Instant::now();
        let a = fit_lda(&docs, 3, 0.5, 0.01, 1000, 42).unwrap();
        let b = fit_lda(&docs, 3, 0.5, 0.01, 1000, 42).unwrap();
        assert!(start.elapsed().as_secs_f64() < 30.0, "LDA too slow");
        for row in a.phi.iter().chain(&a.theta) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9, "row sum {sum}");
        }
        assert_eq!(a, b, "seed determinism");
    });
}

#[test]
fn c05_planted_topic_recovery() {
    criterion("05 planted-topic recovery", || {
        let (docs, truth) = planted_docs(&[34, 33, 33], 15, "g", 5);
        let (k, model) = select_k(&docs, (2, 6), Some(0.5), 0.01, 400, 42).unwrap();
        assert_eq!(k, 3, "select_k");
        let p = purity(&model, &truth);
        assert!(p >= 0.9, "purity {p}");
    });
}

#[test]
fn c06_mapping_method_agreement() {
    criterion("06 mapping-method agreement", || {
        // twin corpora over shared families a, b, c; family d exists only on
        // the tweet side
        let (mis_docs, _) = planted_docs(&[20, 20, 20, 20], 15, "m", 3);
        let fc_docs: Vec<TokenStream> = {
            let (docs, _) = planted_docs(&[20, 20, 20], 15, "m", 4);
            docs
        };
        let mis = fit_lda(&mis_docs, 4, 0.5, 0.01, 400, 3).unwrap();
        let fc = fit_lda(&fc_docs, 3, 0.5, 0.01, 400, 4).unwrap();

        // name each fitted topic after the family its top word belongs to
        let family_labels = |model: &TopicModel| -> Vec<String> {
            (0..model.k)
                .map(|t| {
                    let top = amir::topics::top_words(model, t, 1)[0];
                    model.vocab[top][..2].to_uppercase()
                })
                .collect()
        };
        let mis_labels = family_labels(&mis);
        let fc_labels = family_labels(&fc);
        assert_eq!(
            mis_labels.iter().collect::<BTreeSet<_>>().len(),
            4,
            "tweet-side families not separated"
        );

        let by_distance = map_by_distance(&mis, &fc, &mis_labels, &fc_labels, Some(0.5)).unwrap();
        let sigs = |model: &TopicModel, labels: &[String]| {
            (0..model.k)
                .map(|t| signature(model, t, &labels[t], DEFAULT_SIGNATURE_SIZE))
                .collect::<Vec<_>>()
        };
        let by_keywords = map_by_keywords(&sigs(&mis, &mis_labels), &sigs(&fc, &fc_labels));

        let pairs = |ms: &[MappingResult]| -> BTreeSet<(String, Option<String>)> {
            ms.iter()
                .map(|m| (m.source_topic.clone(), m.target_topic.clone()))
                .collect()
        };
        assert_eq!(pairs(&by_distance), pairs(&by_keywords), "methods disagree");
        for m in &by_distance {
            if m.source_topic == "M3" {
                assert!(m.target_topic.is_none(), "decoy must be unmapped");
            } else {
                assert_eq!(m.target_topic.as_deref(), Some(m.source_topic.as_str()));
            }
        }
    });
}

#[test]
fn c07_gazetteer_ner_exact() {
    criterion("07 gazetteer NER exact on synthetic tweets", || {
        let gazetteer = Gazetteer::load(&data_dir().join("gazetteer.tsv")).unwrap();
        let terms = [
            // seed list
            "pfizer", "astrazeneca", "mrna", "astrazenca", "jnj", "oxford", "sputnik", "modern",
            "variants", "#pfizer", "booster", "#astrazeneca", "biontech", "covidshield",
            // augmentation list
            "phizer", "myrna", "zenca", "novavax", "johnsonandjohnson", "johnson", "mirna",
            // multi-word longest-match case
            "johnson and johnson",
        ];
        let mut predicted = Vec::new();
        let mut gold = Vec::new();
        for i in 0..50 {
            let term = terms[i % terms.len()];
            let text = format!("waiting on my {term} appointment this afternoon");
            let start = text.find(term).unwrap();
            gold.push(vec![amir::annotate::EntitySpan {
                surface: term.to_string(),
                start,
                end: start + term.len(),
                label: "VAC_TYPE".to_string(),
            }]);
            let spans = recognize(&text, &gazetteer, None);
            assert_eq!(spans.len(), 1, "expected one span for {term:?}");
            predicted.push(spans);
        }
        let m = evaluate_ner(&predicted, &gold).unwrap();
        assert_eq!((m.precision, m.recall), (1.0, 1.0));
        let self_m = evaluate_ner(&predicted, &predicted).unwrap();
        assert_eq!(
            (self_m.accuracy, self_m.precision, self_m.recall, self_m.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
    });
}

#[test]
fn c08_tier_boundaries_and_worked_examples() {
    criterion("08 tier boundaries and worked examples", || {
        // exact threshold boundary
        let articles = vec![article("a1", "about X")];
        let assigns = vec![assignment("a1", Some("X"))];
        let mappings = vec![mapping("A", Some("X"))];
        let mut graph = CooccurrenceGraph::default();
        graph.add_edge("A", "C");
        let mis = Tweet {
            id: "m".into(),
            text: "claim".into(),
            misleading: true,
            replies: 0,
            retweets: 0,
            likes: 0,
        };
        let on_topic = assignment("m", Some("A"));
        for (score, tier) in [(0.62, Tier::Specific), (0.6199, Tier::Near)] {
            let r = tiered_recommend(
                &mis, &on_topic, &articles, &assigns, &mappings, &graph,
                &FixedScorer(score), 0.62, 15,
            )
            .unwrap();
            assert_eq!(r.tier, tier, "score {score}");
        }
        // unmapped topic C falls back through the co-occurrence edge to A
        let off_topic = assignment("m", Some("C"));
        let r = tiered_recommend(
            &mis, &off_topic, &articles, &assigns, &mappings, &graph,
            &FixedScorer(0.9), 0.62, 15,
        )
        .unwrap();
        assert_eq!(r.tier, Tier::Broad);
        assert_eq!(r.used_topic.as_deref(), Some("X"));

        // three reference cases: 0.65 Specific, 0.59 Near, 0.37 Broad
        let t_fetal = "they all used aborted fetus either in development or testing";
        let t_choice = "i am proud of you for refusing it. Astrazeneca vaccine is dubious";
        let t_warp = "maybe he kept some so he can sell them to the black market";
        let a_fetal = "Johnson & Johnson's COVID-19 vaccine does not contain aborted fetal cells";
        let a_choice = "Experts say the Oxford AstraZeneca COVID-19 vaccine is safe and that \
                        its benefits far outweigh possible risks";
        let a_warp = "No, Trump didn't tweet his blood is a vaccine";
        let articles = vec![article("f1", a_fetal), article("f2", a_choice), article("f3", a_warp)];
        let assigns = vec![
            assignment("f1", Some("FC Efficacy")),
            assignment("f2", Some("FC Choices")),
            assignment("f3", Some("FC Rumors")),
        ];
        let mappings = vec![
            mapping("Vaccine Efficacy", Some("FC Efficacy")),
            mapping("Choices", Some("FC Choices")),
            mapping("Elections", Some("FC Rumors")),
        ];
        let mut graph = CooccurrenceGraph::default();
        graph.add_edge("Operation Warp Speed", "Elections");
        let scorer = TableScorer(HashMap::from([
            (a_fetal.to_string(), 0.65),
            (a_choice.to_string(), 0.59),
            (a_warp.to_string(), 0.37),
        ]));
        let case = |text: &str, topic: &str| {
            let mis = Tweet {
                id: "m".into(),
                text: text.into(),
                misleading: true,
                replies: 0,
                retweets: 0,
                likes: 0,
            };
            tiered_recommend(
                &mis, &assignment("m", Some(topic)), &articles, &assigns, &mappings, &graph,
                &scorer, 0.62, 15,
            )
            .unwrap()
        };
        let specific = case(t_fetal, "Vaccine Efficacy");
        assert_eq!(specific.tier, Tier::Specific);
        assert_eq!(specific.items[0].id, "f1");
        assert!((specific.items[0].score - 0.65).abs() < 1e-12);

        let near = case(t_choice, "Choices");
        assert_eq!(near.tier, Tier::Near);
        assert_eq!(near.items[0].id, "f2");
        assert!((near.items[0].score - 0.59).abs() < 1e-12);

        let broad = case(t_warp, "Operation Warp Speed");
        assert_eq!(broad.tier, Tier::Broad);
        assert_eq!(broad.used_topic.as_deref(), Some("FC Rumors"));
        assert_eq!(broad.items[0].id, "f3");
        assert!((broad.items[0].score - 0.37).abs() < 1e-12);
    });
}

#[test]
fn c09_counter_tweet_contract() {
    criterion("09 counter-tweet criteria and cascade", || {
        let strict = MatchCriteria::strict_default();
        let relaxed = MatchCriteria::relaxed_default();
        let mis = annotated("m", "m text", true, Some("A"), &["pfizer", "booster"], Polarity::Negative);

        // exhaustive truth table over the three agreement axes
        for topic_ok in [true, false] {
            for entity_ok in [true, false] {
                for sent_ok in [true, false] {
                    let cand = annotated(
                        "c",
                        "c text",
                        false,
                        Some(if topic_ok { "A" } else { "B" }),
                        if entity_ok { &["Pfizer"] } else { &["moderna"] },
                        if sent_ok { Polarity::Negative } else { Polarity::Positive },
                    );
                    assert_eq!(
                        criteria_match(&mis, &cand, &strict).unwrap(),
                        topic_ok && entity_ok && sent_ok,
                        "{topic_ok}/{entity_ok}/{sent_ok}"
                    );
                }
            }
        }

        // pool 1: strict filter finds candidates
        let pool = vec![
            annotated("c1", "x", false, Some("A"), &["pfizer"], Polarity::Negative),
            annotated("c2", "x", false, Some("B"), &["pfizer"], Polarity::Negative),
            annotated("c3", "x", true, Some("A"), &["pfizer"], Polarity::Negative),
        ];
        let r = recommend_counter_tweets(&mis, &pool, 10, &strict, &relaxed, &FixedScorer(0.5))
            .unwrap();
        assert!(!r.relaxed);
        assert_eq!(r.items.len(), 1);
        assert_eq!(r.items[0].id, "c1");

        // pool 2: strict empties, relaxed two-entity overlap catches one
        let pool = vec![
            annotated("d1", "x", false, Some("B"), &["pfizer", "Booster"], Polarity::Positive),
            annotated("d2", "x", false, Some("B"), &["pfizer"], Polarity::Positive),
        ];
        let r = recommend_counter_tweets(&mis, &pool, 10, &strict, &relaxed, &FixedScorer(0.5))
            .unwrap();
        assert!(r.relaxed);
        assert_eq!(r.items.len(), 1);
        assert_eq!(r.items[0].id, "d1");

        // pool 3: both filters empty
        let r = recommend_counter_tweets(&mis, &[], 10, &strict, &relaxed, &FixedScorer(0.5))
            .unwrap();
        assert!(r.relaxed);
        assert!(r.items.is_empty());
    });
}

#[test]
fn c10_end_to_end_determinism() {
    criterion("10 end-to-end determinism on the bundled corpus", || {
        let mut cfg = PipelineConfig::load(&data_dir().join("config.toml")).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();

        cfg.out_dir = dir_a.path().to_path_buf();
        let start = Instant::now();
        run_all(&cfg).unwrap();
        assert!(start.elapsed().as_secs_f64() < 60.0, "pipeline too slow");

        cfg.out_dir = dir_b.path().to_path_buf();
        run_all(&cfg).unwrap();

        let tree = |dir: &Path| -> Vec<(String, Vec<u8>)> {
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().to_string(), fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            files
        };
        let (a, b) = (tree(dir_a.path()), tree(dir_b.path()));
        assert_eq!(
            a.iter().map(|(n, _)| n).collect::<Vec<_>>(),
            b.iter().map(|(n, _)| n).collect::<Vec<_>>()
        );
        for ((name, bytes_a), (_, bytes_b)) in a.iter().zip(&b) {
            assert_eq!(bytes_a, bytes_b, "{name} differs between runs");
        }

        // the bundled corpus exercises every tier
        let mut tiers = BTreeSet::new();
        for line in fs::read_to_string(dir_a.path().join("recommendations_fc.jsonl"))
            .unwrap()
            .lines()
        {
            let rec: RecommendationRecord = serde_json::from_str(line).unwrap();
            tiers.extend(rec.tier);
        }
        let expected: BTreeSet<String> =
            ["Specific", "Near", "Broad"].iter().map(|s| s.to_string()).collect();
        assert_eq!(tiers, expected);
    });
}

#[test]
fn c11_report_grid_and_planted_mrr() {
    criterion("11 report grid shape and planted rank-1 MRR", || {
        // approach 1: for each query the marker-matched candidate ranks first
        // and satisfies the strict criteria
        let queries: Vec<AnnotatedTweet> = (0..3)
            .map(|i| {
                annotated(
                    &format!("q{i}"),
                    &format!("marker{i} claim"),
                    true,
                    Some("A"),
                    &["pfizer"],
                    Polarity::Negative,
                )
            })
            .collect();
        let mut pool: Vec<AnnotatedTweet> = (0..3)
            .map(|i| {
                annotated(
                    &format!("r{i}"),
                    &format!("marker{i} rebuttal"),
                    false,
                    Some("A"),
                    &["pfizer"],
                    Polarity::Negative,
                )
            })
            .collect();
        for i in 0..10 {
            pool.push(annotated(
                &format!("z{i}"),
                "unrelated text",
                false,
                Some("B"),
                &[],
                Polarity::Neutral,
            ));
        }
        let strict = MatchCriteria::strict_default();
        let sm = run_evaluation_sm(&queries, &pool, &strict, &MarkerScorer, false).unwrap();

        // approach 2: the marker-matched article ranks first, sits under the
        // mapped topic, and clears the threshold
        let fc_queries: Vec<(Tweet, TopicAssignment)> = (0..3)
            .map(|i| {
                let id = format!("q{i}");
                (
                    Tweet {
                        id: id.clone(),
                        text: format!("marker{i} claim"),
                        misleading: true,
                        replies: 0,
                        retweets: 0,
                        likes: 0,
                    },
                    assignment(&id, Some("A")),
                )
            })
            .collect();
        let mut articles: Vec<FactArticle> = (0..3)
            .map(|i| article(&format!("f{i}"), &format!("marker{i} verdict")))
            .collect();
        let mut article_assignments: Vec<TopicAssignment> =
            (0..3).map(|i| assignment(&format!("f{i}"), Some("X"))).collect();
        for i in 0..10 {
            articles.push(article(&format!("g{i}"), "unrelated title"));
            article_assignments.push(assignment(&format!("g{i}"), Some("Y")));
        }
        let mappings = vec![mapping("A", Some("X"))];
        let fc = run_evaluation_fc(
            &fc_queries,
            &articles,
            &article_assignments,
            &mappings,
            &MarkerScorer,
            0.62,
            false,
        )
        .unwrap();

        assert_eq!(sm.approach, Approach::AmirSm);
        assert_eq!(fc.approach, Approach::AmirFc);
        for report in [&sm, &fc] {
            assert_eq!(report.metrics.len(), 2 * EVAL_KS.len(), "grid size");
            for k in EVAL_KS {
                assert!(report.metrics.contains_key(&format!("MAP@{k}")));
                let mrr = report.metrics[&format!("MRR@{k}")];
                assert_eq!(mrr, 1.0, "MRR@{k} for {:?}", report.approach);
            }
        }
        let table = amir::evaluate::render_report_table(&[sm, fc]);
        assert!(table.contains("AMIR_SM") && table.contains("AMIR_FC"));
        assert!(table.contains("MRR@3") && table.contains("MAP@20"));
    });
}
