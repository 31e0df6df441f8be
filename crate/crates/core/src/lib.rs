//! Analytic provenance threads: topic-label an analyst's interaction log,
//! segment it into topic-focus stages and lay it out as timeline threads.
//!
//! The pipeline runs [`ingest`] → [`corpus`] → [`topicmodel`] →
//! [`labeling`] → [`segmentation`] → [`geometry`]; [`pipeline::analyze`]
//! wires the stages together for one session.

pub mod corpus;
pub mod geometry;
pub mod ingest;
pub mod labeling;
pub mod merge;
pub mod pipeline;
pub mod segmentation;
pub mod topicmodel;

pub use corpus::{build_corpus, load_corpus, tokenize, Corpus, CorpusError, Document, TokenizerConfig};
pub use geometry::{export_svg, thread_geometry, GeometryError, GeometrySource, SvgOptions, ThreadGeometry, View};
pub use ingest::{parse_event_log, validate_log, Action, EventLog, IngestError, InteractionEvent, ValidationReport};
pub use labeling::{label_events, LabelReason, LabeledEvent, LabeledEventLog};
pub use merge::{merged_topic_terms, MergeError, MergeMap};
pub use pipeline::{analyze, Analysis, PipelineError, Views};
pub use segmentation::{
    coverage_series, resegment_with_merge, segment, CoverageSeries, Segment, Segmentation, SegmentationParams,
};
pub use topicmodel::{
    doc_topic_label, fit_lda, keyword_topic, query_topic, topic_terms, LdaConfig, TopicId, TopicModel, TopicModelError,
};
