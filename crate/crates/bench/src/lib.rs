//! Seeded workloads shared by the benchmarks.

use provthreads_core::{
    build_corpus, Action, Corpus, Document, InteractionEvent, LabelReason, LabeledEvent, LabeledEventLog,
    TokenizerConfig, TopicId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `docs` documents of `doc_len` tokens, each drawn from one of `themes`
/// disjoint 50-term vocabularies.
pub fn themed_corpus(docs: usize, doc_len: usize, themes: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<Vec<String>> = (0..themes)
        .map(|t| (0..50).map(|w| format!("theme{t}word{w:02}")).collect())
        .collect();
    let documents = (0..docs)
        .map(|d| {
            let pool = &vocab[d % themes];
            let words: Vec<&str> = (0..doc_len)
                .map(|_| pool[rng.random_range(0..pool.len())].as_str())
                .collect();
            Document::new(format!("doc{d:05}"), "", words.join(" "))
        })
        .collect();
    build_corpus(documents, TokenizerConfig::default()).expect("themed corpus is non-empty")
}

/// A labeled log of `events` interactions that dwells on a topic for a
/// geometric number of steps before switching; about 5% are unlabeled.
pub fn labeled_log(events: usize, topics: usize, seed: u64) -> LabeledEventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    let mut topic = 0usize;
    let events: Vec<LabeledEvent> = (0..events)
        .map(|i| {
            t += rng.random_range(1_000..200_000);
            if rng.random_bool(0.3) {
                topic = rng.random_range(0..topics);
            }
            let label = (!rng.random_bool(0.05)).then_some(TopicId(topic));
            LabeledEvent {
                event: InteractionEvent::new(format!("e{i:06}"), t, Action::OpenDocument),
                topic: label,
                reason: if label.is_some() {
                    LabelReason::DocumentLabel
                } else {
                    LabelReason::Unlabeled
                },
            }
        })
        .collect();
    LabeledEventLog {
        session_id: "bench".into(),
        duration_ms: t,
        events,
        topic_count: topics,
    }
}
