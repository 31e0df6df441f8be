//! End-to-end analysis of one session: corpus, model, labels and views.

use thiserror::Error;

use crate::corpus::{build_corpus, Corpus, CorpusError, Document, TokenizerConfig};
use crate::geometry::{thread_geometry, GeometrySource, ThreadGeometry, View};
use crate::ingest::{EventLog, IngestError};
use crate::labeling::{label_events, LabeledEventLog};
use crate::merge::{MergeError, MergeMap};
use crate::segmentation::{coverage_series, segment, CoverageSeries, Segmentation, SegmentationParams};
use crate::topicmodel::{fit_lda, LdaConfig, TopicModel, TopicModelError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] TopicModelError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error("invalid segmentation parameters: {0}")]
    Params(String),
}

/// Fitted state for one session. Immutable once built.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub corpus: Corpus,
    pub model: TopicModel,
    pub log: EventLog,
    pub labeled: LabeledEventLog,
}

pub fn analyze(
    documents: Vec<Document>,
    tokenizer: TokenizerConfig,
    log: EventLog,
    lda: &LdaConfig,
) -> Result<Analysis, PipelineError> {
    let corpus = build_corpus(documents, tokenizer)?;
    let model = fit_lda(&corpus, lda)?;
    let labeled = label_events(&log, &model, &corpus);
    Ok(Analysis {
        corpus,
        model,
        log,
        labeled,
    })
}

/// Both views under a given merge map and parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Views {
    pub merges: MergeMap,
    pub params: SegmentationParams,
    /// The labeled log after applying `merges`.
    pub labeled: LabeledEventLog,
    pub coverage: CoverageSeries,
    pub segmentation: Segmentation,
}

impl Views {
    pub fn geometry(&self, view: View) -> ThreadGeometry {
        let source = match view {
            View::Coverage => GeometrySource::Coverage(&self.coverage),
            View::Segments => GeometrySource::Segments(&self.segmentation),
        };
        thread_geometry(&self.labeled, source)
    }
}

impl Analysis {
    pub fn views(&self, merges: &MergeMap, params: &SegmentationParams) -> Result<Views, PipelineError> {
        params.validate().map_err(PipelineError::Params)?;
        merges.validate(self.model.topic_count())?;
        let labeled = self.labeled.relabel(|t| merges.resolve(t));
        Ok(Views {
            merges: merges.clone(),
            params: *params,
            coverage: coverage_series(&labeled),
            segmentation: segment(&labeled, params),
            labeled,
        })
    }
}
