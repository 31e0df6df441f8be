//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with its
//! runtime and budget; the test fails if any criterion fails. Lines go
//! straight to stderr so they show without `--nocapture`.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use provthreads_cli::{run_pipeline, RunOptions, OUTPUT_FILES};
use provthreads_core::*;
use provthreads_service::{serve_on, SessionConfig, SessionStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

type Outcome = Result<(), String>;

fn report(line: &str) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read_log(rel: &str, session: &str) -> EventLog {
    let bytes = fs::read(fixtures().join(rel)).unwrap();
    parse_event_log(&bytes[..], session).unwrap()
}

fn fixture_lda() -> LdaConfig {
    let mut lda = LdaConfig::with_topics(2);
    lda.seed = 42;
    lda
}

fn burst_session() -> SessionConfig {
    SessionConfig {
        id: "burst".into(),
        corpus: fixtures().join("burst/corpus"),
        log: fixtures().join("burst/burst.jsonl"),
        topics: 3,
        seed: 1,
        alpha: None,
        beta: None,
        iterations: None,
        tau_count: None,
        tau_gap_ms: None,
    }
}

fn burst_analysis() -> Analysis {
    let s = burst_session();
    analyze(
        load_corpus(&s.corpus).unwrap(),
        TokenizerConfig::default(),
        read_log("burst/burst.jsonl", "burst"),
        &s.lda(),
    )
    .unwrap()
}

fn doc_label(analysis: &Analysis, doc: &str) -> TopicId {
    doc_topic_label(&analysis.model, analysis.corpus.doc_index(doc).unwrap()).unwrap()
}

fn labeled_log(seq: &[(Option<usize>, u64)], topic_count: usize) -> LabeledEventLog {
    LabeledEventLog {
        session_id: "synthetic".into(),
        events: seq
            .iter()
            .enumerate()
            .map(|(i, &(topic, ts))| LabeledEvent {
                event: InteractionEvent::new(format!("e{i}"), ts, Action::Note),
                topic: topic.map(TopicId),
                reason: if topic.is_some() {
                    LabelReason::CarriedOver
                } else {
                    LabelReason::Unlabeled
                },
            })
            .collect(),
        topic_count,
        duration_ms: seq.iter().map(|s| s.1).max().unwrap_or(0),
    }
}

fn random_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let vocab: Vec<String> = (0..rng.random_range(8..40)).map(|i| format!("word{i:03}")).collect();
    let docs = (0..rng.random_range(3..15))
        .map(|d| {
            let len = rng.random_range(1..50);
            let words: Vec<&str> = (0..len)
                .map(|_| vocab[rng.random_range(0..vocab.len())].as_str())
                .collect();
            Document::new(format!("d{d:02}"), "", words.join(" "))
        })
        .collect();
    build_corpus(docs, TokenizerConfig::default()).unwrap()
}

fn lda_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for round in 0..20 {
        let corpus = random_corpus(&mut rng);
        let mut cfg = LdaConfig::with_topics(rng.random_range(1..8));
        cfg.seed = rng.random();
        let model = fit_lda(&corpus, &cfg).map_err(|e| e.to_string())?;
        for (name, rows) in [("phi", model.phi()), ("theta", model.theta())] {
            for (r, row) in rows.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                ensure!((sum - 1.0).abs() <= 1e-9, "corpus {round}: {name}[{r}] sums to {sum}");
            }
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let docs = load_corpus(&fixtures().join("corpus_small")).unwrap();
    let corpus = build_corpus(docs, TokenizerConfig::default()).unwrap();
    let a = fit_lda(&corpus, &fixture_lda()).unwrap();
    let b = fit_lda(&corpus, &fixture_lda()).unwrap();
    let bits =
        |m: &TopicModel| -> Vec<u64> { m.phi().iter().chain(m.theta()).flatten().map(|x| x.to_bits()).collect() };
    ensure!(bits(&a) == bits(&b), "fit_lda estimates differ between runs");
    ensure!(
        a.assignments() == b.assignments(),
        "fit_lda assignments differ between runs"
    );

    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    for dir in &dirs {
        let opts = RunOptions::new(
            fixtures().join("corpus_small"),
            fixtures().join("session_main.jsonl"),
            dir.path(),
            fixture_lda(),
        );
        run_pipeline(&opts).map_err(|e| format!("{e:#}"))?;
    }
    for name in OUTPUT_FILES {
        let x = fs::read(dirs[0].path().join(name)).unwrap();
        let y = fs::read(dirs[1].path().join(name)).unwrap();
        ensure!(x == y, "{name} differs between pipeline runs");
    }
    Ok(())
}

fn synthetic_recovery() -> Outcome {
    let x: Vec<String> = (0..15).map(|i| format!("alpha{i:02}")).collect();
    let y: Vec<String> = (0..15).map(|i| format!("omega{i:02}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut docs = Vec::new();
    let mut classes = Vec::new();
    for d in 0..40 {
        let class = d % 2;
        let pool = if class == 0 { &x } else { &y };
        let words: Vec<&str> = (0..rng.random_range(30..60))
            .map(|_| pool[rng.random_range(0..pool.len())].as_str())
            .collect();
        docs.push(Document::new(format!("doc{d:02}"), "", words.join(" ")));
        classes.push(class);
    }
    let corpus = build_corpus(docs, TokenizerConfig::default()).unwrap();
    let mut cfg = LdaConfig::with_topics(2);
    cfg.iterations = 500;
    let model = fit_lda(&corpus, &cfg).unwrap();
    let labels: Vec<usize> = (0..40).map(|d| doc_topic_label(&model, d).unwrap().0).collect();
    // Purity: each topic votes for its majority class.
    let mut votes: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (l, c) in labels.iter().zip(&classes) {
        *votes.entry(*l).or_default().entry(*c).or_default() += 1;
    }
    let correct: usize = votes.values().map(|v| v.values().copied().max().unwrap_or(0)).sum();
    let purity = correct as f64 / 40.0;
    ensure!(purity >= 0.9, "purity {purity}");
    Ok(())
}

fn oracle_equivalence() -> Outcome {
    let gaps = [5_000u64, 150_000];
    let mut checked = 0usize;
    for params in [
        SegmentationParams::default(),
        SegmentationParams {
            tau_count: 2,
            tau_gap_ms: 120_000,
        },
    ] {
        for len in 0..=8u32 {
            // The first event's gap never matters, so it is fixed.
            let combos = if len == 0 { 1 } else { 3 * 6usize.pow(len - 1) };
            for code in 0..combos {
                let mut c = code;
                let mut t = 0u64;
                let mut seq = Vec::with_capacity(len as usize);
                for i in 0..len {
                    let topic = c % 3;
                    c /= 3;
                    if i > 0 {
                        t += gaps[c % 2];
                        c /= 2;
                    }
                    seq.push((Some(topic), t));
                }
                let got: Vec<(BTreeSet<usize>, Vec<usize>)> = segment(&labeled_log(&seq, 3), &params)
                    .segments
                    .iter()
                    .map(|s| {
                        (
                            s.topic_group.iter().map(|t| t.0).collect(),
                            s.events.iter().map(|e| e.event_index).collect(),
                        )
                    })
                    .collect();
                let want = oracle::reference_segments(&seq, params.tau_count, params.tau_gap_ms);
                ensure!(got == want, "mismatch on {seq:?} with {params:?}");
                checked += 1;
            }
        }
    }
    report(&format!("     {checked} sequences checked"));
    Ok(())
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for round in 0..100 {
        let k = rng.random_range(1..6);
        let mut t = 0;
        let seq: Vec<(Option<usize>, u64)> = (0..rng.random_range(0..80))
            .map(|_| {
                t += rng.random_range(0..200_000);
                let topic = if rng.random_bool(0.1) {
                    None
                } else {
                    Some(rng.random_range(0..k))
                };
                (topic, t)
            })
            .collect();
        let log = labeled_log(&seq, k);
        let params = SegmentationParams {
            tau_count: rng.random_range(1..5),
            tau_gap_ms: rng.random_range(0..200_000),
        };
        let coverage = coverage_series(&log);
        let seg = segment(&log, &params);
        for topic in 0..k {
            let within: usize = seg
                .segments
                .iter()
                .map(|s| s.per_topic_counts().get(&TopicId(topic)).copied().unwrap_or(0))
                .sum();
            let height = coverage.final_height(TopicId(topic));
            ensure!(
                height == within,
                "log {round}: topic {topic} coverage {height} != segment total {within}"
            );
        }
        let mut seen: Vec<usize> = seg
            .segments
            .iter()
            .flat_map(|s| s.events.iter().map(|e| e.event_index))
            .collect();
        seen.sort_unstable();
        let labeled: Vec<usize> = seq
            .iter()
            .enumerate()
            .filter(|(_, s)| s.0.is_some())
            .map(|(i, _)| i)
            .collect();
        ensure!(
            seen == labeled,
            "log {round}: segments do not partition the labeled events"
        );
    }
    Ok(())
}

fn burst_behavior() -> Outcome {
    let analysis = burst_analysis();
    let (a, b, c) = (
        doc_label(&analysis, "astro_1"),
        doc_label(&analysis, "cook_1"),
        doc_label(&analysis, "sail_1"),
    );
    ensure!(a != b && b != c && a != c, "themes not separated: {a} {b} {c}");
    let views = analysis
        .views(&MergeMap::identity(), &SegmentationParams::default())
        .unwrap();
    let groups: Vec<BTreeSet<TopicId>> = views
        .segmentation
        .segments
        .iter()
        .map(|s| s.topic_group.clone())
        .collect();
    let want = vec![BTreeSet::from([a]), BTreeSet::from([a, b]), BTreeSet::from([c])];
    ensure!(groups == want, "segments {groups:?}, expected {want:?}");
    Ok(())
}

fn merge_semantics() -> Outcome {
    let analysis = burst_analysis();
    let (a, b) = (doc_label(&analysis, "astro_1"), doc_label(&analysis, "cook_1"));
    let params = SegmentationParams::default();
    let base = analysis.views(&MergeMap::identity(), &params).unwrap();
    ensure!(
        base.segmentation.len() == 3,
        "base has {} segments",
        base.segmentation.len()
    );

    let k = analysis.model.topic_count();
    let merges = MergeMap::identity()
        .compose(&MergeMap::from_pairs([(b, a)]), k)
        .unwrap();
    let merged = analysis.views(&merges, &params).unwrap();
    ensure!(
        merged.segmentation.len() == 2,
        "merged has {} segments",
        merged.segmentation.len()
    );
    ensure!(
        merged.labeled.events.iter().all(|e| e.topic != Some(b)),
        "topic {b} still labels events"
    );
    ensure!(
        merged.segmentation.segments.iter().all(|s| !s.topic_group.contains(&b)),
        "topic {b} still in a topic group"
    );

    let same = analysis
        .views(
            &MergeMap::identity().compose(&MergeMap::identity(), k).unwrap(),
            &params,
        )
        .unwrap();
    ensure!(same == base, "identity merge changed the views");

    let store = SessionStore::new(None);
    store.load(&burst_session()).map_err(|e| e.to_string())?;
    let before = store.snapshot("burst").unwrap();
    let cyclic = MergeMap::from_pairs([(a, b), (b, a)]);
    ensure!(store.merge("burst", &cyclic).is_err(), "cyclic merge accepted");
    let after = store.snapshot("burst").unwrap();
    ensure!(Arc::ptr_eq(&before, &after), "rejected merge replaced the snapshot");
    ensure!(after.views == base, "rejected merge changed the views");
    Ok(())
}

fn path_point_count(d: &str) -> usize {
    d.matches('M').count() + d.matches('V').count()
}

fn svg_validity() -> Outcome {
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    let docs = load_corpus(&fixtures().join("corpus_small")).unwrap();
    let analysis = analyze(
        docs,
        TokenizerConfig::default(),
        read_log("session_main.jsonl", "session_main"),
        &fixture_lda(),
    )
    .unwrap();
    let views = analysis
        .views(&MergeMap::identity(), &SegmentationParams::default())
        .unwrap();
    for view in [View::Coverage, View::Segments] {
        let file = golden.join(format!("session_main_{}.svg", view.as_str()));
        let text = fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
        let doc = roxmltree::Document::parse(&text).map_err(|e| format!("{}: {e}", file.display()))?;
        let paths: BTreeMap<String, usize> = doc
            .descendants()
            .filter(|n| {
                n.has_tag_name("path")
                    && n.attribute("class")
                        .is_some_and(|c| c.split(' ').any(|w| w == "thread"))
            })
            .map(|n| {
                (
                    n.attribute("id").unwrap_or("").to_string(),
                    path_point_count(n.attribute("d").unwrap_or("")),
                )
            })
            .collect();
        let geometry = views.geometry(view);
        let expected: BTreeMap<String, usize> = geometry
            .threads
            .iter()
            .map(|t| (t.path_id(view), t.polyline.len()))
            .collect();
        ensure!(
            paths.len() == geometry.threads.len(),
            "{}: {} paths, {} threads",
            view.as_str(),
            paths.len(),
            geometry.threads.len()
        );
        ensure!(paths == expected, "{}: per-path point counts differ", view.as_str());
    }
    Ok(())
}

fn service_consistency() -> Outcome {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    runtime.block_on(async {
        let state = TempDir::new().unwrap();
        let store = SessionStore::new(Some(state.path().to_path_buf()));
        store.load(&burst_session()).map_err(|e| e.to_string())?;
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let server = tokio::spawn(serve_on(listener, Arc::new(store), async {
            let _ = stopped.await;
        }));
        let client = reqwest::Client::new();
        let get = |path: String| {
            let client = client.clone();
            let url = format!("{base}{path}");
            async move {
                let resp = client.get(url).send().await.unwrap();
                (resp.status().as_u16(), resp.json::<Value>().await.unwrap())
            }
        };

        let (status, list) = get("/api/sessions".into()).await;
        ensure!(
            status == 200 && list["sessions"][0]["session_id"] == "burst",
            "list: {status} {list}"
        );
        let segment_count = |g: &Value| -> usize {
            let ids: BTreeSet<u64> = g["threads"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| t["segment_index"].as_u64().unwrap())
                .collect();
            ids.len()
        };
        let (_, threads) = get("/api/sessions/burst/threads?view=segments".into()).await;
        ensure!(
            segment_count(&threads) == 3,
            "expected 3 segments, got {}",
            segment_count(&threads)
        );
        let topic = |v: &Value| v["topic"].as_u64().unwrap();
        let a = topic(&get("/api/sessions/burst/events/b01".into()).await.1);
        let b = topic(&get("/api/sessions/burst/events/b06".into()).await.1);

        let resp = client
            .post(format!("{base}/api/sessions/burst/merges"))
            .json(&json!({"merges": [{"source": b, "target": a}]}))
            .send()
            .await
            .unwrap();
        ensure!(resp.status().as_u16() == 200, "merge returned {}", resp.status());
        let (_, threads) = get("/api/sessions/burst/threads?view=segments".into()).await;
        ensure!(
            segment_count(&threads) == 2,
            "expected 2 segments after merge, got {}",
            segment_count(&threads)
        );
        ensure!(
            topic(&get("/api/sessions/burst/events/b06".into()).await.1) == a,
            "stale event label after merge"
        );

        for (path, want_status, want_code) in [
            (
                "/api/sessions/ghost/threads?view=segments".to_string(),
                404,
                "unknown_session",
            ),
            (
                "/api/sessions/burst/threads?view=radial".to_string(),
                400,
                "unknown_view",
            ),
            ("/api/sessions/burst/topics/99/terms".to_string(), 404, "unknown_topic"),
            (format!("/api/sessions/burst/topics/{b}/terms"), 404, "unknown_topic"),
        ] {
            let (status, body) = get(path.clone()).await;
            ensure!(
                status == want_status && body["error"] == want_code,
                "{path}: {status} {body}"
            );
        }
        let _ = stop.send(());
        server.await.unwrap().map_err(|e| e.to_string())?;
        Ok(())
    })
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("lda normalization", lda_normalization, Duration::from_secs(30)),
        ("determinism", determinism, Duration::from_secs(20)),
        ("synthetic topic recovery", synthetic_recovery, Duration::from_secs(10)),
        (
            "segmentation oracle equivalence",
            oracle_equivalence,
            Duration::from_secs(120),
        ),
        ("conservation between views", conservation, Duration::from_secs(60)),
        ("burst behavior", burst_behavior, Duration::from_secs(60)),
        ("merge semantics", merge_semantics, Duration::from_secs(60)),
        ("svg validity", svg_validity, Duration::from_secs(60)),
        ("service consistency", service_consistency, Duration::from_secs(10)),
    ];
    let mut failed = Vec::new();
    report("");
    for (name, check, budget) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed <= budget {
                Ok(())
            } else {
                Err(format!("over budget ({budget:?})"))
            }
        });
        let timing = format!("({:.2}s, budget {}s)", elapsed.as_secs_f64(), budget.as_secs());
        match &outcome {
            Ok(()) => report(&format!("PASS {name} {timing}")),
            Err(why) => {
                report(&format!("FAIL {name} {timing}: {why}"));
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
