//! Batch pipeline behind `provthreads run`.
//!
//! Every option can come from a TOML file whose keys match the flag names
//! with underscores (`tau_count`, `tau_gap_ms`, ...). Flags win over the
//! file; relative paths in the file resolve against its directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use provthreads_core::{
    analyze, export_svg, load_corpus, parse_event_log, LdaConfig, MergeMap, SegmentationParams, SvgOptions,
    TokenizerConfig, View,
};
use serde::Deserialize;

/// File names written by [`run_pipeline`], in write order.
pub const OUTPUT_FILES: [&str; 5] = [
    "model.json",
    "labeled.jsonl",
    "segmentation.json",
    "coverage.svg",
    "segments.svg",
];

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub corpus: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub topics: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub tau_count: Option<usize>,
    pub tau_gap_ms: Option<u64>,
}

impl RunSettings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut settings: RunSettings = toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let message = e.message().trim().to_string();
            match line {
                Some(line) => anyhow::anyhow!("invalid config {}: line {line}: {message}", path.display()),
                None => anyhow::anyhow!("invalid config {}: {message}", path.display()),
            }
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut settings.corpus, &mut settings.log, &mut settings.out]
            .into_iter()
            .flatten()
        {
            *p = base.join(&*p);
        }
        Ok(settings)
    }

    /// Fields set in `self` win over those in `fallback`.
    pub fn or(self, fallback: RunSettings) -> RunSettings {
        RunSettings {
            corpus: self.corpus.or(fallback.corpus),
            log: self.log.or(fallback.log),
            out: self.out.or(fallback.out),
            topics: self.topics.or(fallback.topics),
            seed: self.seed.or(fallback.seed),
            alpha: self.alpha.or(fallback.alpha),
            beta: self.beta.or(fallback.beta),
            iterations: self.iterations.or(fallback.iterations),
            tau_count: self.tau_count.or(fallback.tau_count),
            tau_gap_ms: self.tau_gap_ms.or(fallback.tau_gap_ms),
        }
    }

    pub fn resolve(self) -> Result<RunOptions> {
        let (Some(corpus), Some(log), Some(out)) = (self.corpus, self.log, self.out) else {
            bail!("--corpus, --log and --out are required (as flags or config keys)");
        };
        let mut lda = LdaConfig::with_topics(self.topics.unwrap_or(LdaConfig::default().topics));
        lda.seed = self.seed.unwrap_or(lda.seed);
        lda.alpha = self.alpha.unwrap_or(lda.alpha);
        lda.beta = self.beta.unwrap_or(lda.beta);
        lda.iterations = self.iterations.unwrap_or(lda.iterations);
        let d = SegmentationParams::default();
        Ok(RunOptions {
            corpus,
            log,
            out,
            lda,
            params: SegmentationParams {
                tau_count: self.tau_count.unwrap_or(d.tau_count),
                tau_gap_ms: self.tau_gap_ms.unwrap_or(d.tau_gap_ms),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub corpus: PathBuf,
    pub log: PathBuf,
    pub out: PathBuf,
    pub lda: LdaConfig,
    pub params: SegmentationParams,
}

impl RunOptions {
    pub fn new(corpus: impl Into<PathBuf>, log: impl Into<PathBuf>, out: impl Into<PathBuf>, lda: LdaConfig) -> Self {
        RunOptions {
            corpus: corpus.into(),
            log: log.into(),
            out: out.into(),
            lda,
            params: SegmentationParams::default(),
        }
    }
}

fn json_text<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("exports serialize");
    text.push('\n');
    text
}

/// Runs the whole pipeline and writes [`OUTPUT_FILES`] into `opts.out`.
/// Returns the written paths.
pub fn run_pipeline(opts: &RunOptions) -> Result<Vec<PathBuf>> {
    for (what, path) in [("corpus", &opts.corpus), ("log", &opts.log)] {
        if !path.exists() {
            bail!("{what} path {} does not exist", path.display());
        }
    }
    let docs = load_corpus(&opts.corpus)?;
    let session_id = opts
        .log
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "session".to_string());
    let bytes = fs::read(&opts.log).with_context(|| format!("cannot read log {}", opts.log.display()))?;
    let log = parse_event_log(&bytes[..], &session_id).with_context(|| format!("in {}", opts.log.display()))?;
    let analysis = analyze(docs, TokenizerConfig::default(), log, &opts.lda)?;
    let views = analysis.views(&MergeMap::identity(), &opts.params)?;

    let svg = SvgOptions::default();
    let contents = [
        json_text(&analysis.model.export(&analysis.corpus)),
        views.labeled.to_jsonl(),
        json_text(&views.segmentation.export()),
        export_svg(&views.geometry(View::Coverage), &svg)?,
        export_svg(&views.geometry(View::Segments), &svg)?,
    ];
    fs::create_dir_all(&opts.out).with_context(|| format!("cannot create {}", opts.out.display()))?;
    let mut written = Vec::new();
    for (name, body) in OUTPUT_FILES.iter().zip(contents) {
        let path = opts.out.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
