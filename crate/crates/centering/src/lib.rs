//! Discourse-entity resolution over pre-annotated corpora: a centering
//! engine whose attentional state is a small bounded cache backed by an
//! unbounded main memory, next to a focus-stack baseline the comparison
//! tooling runs side by side.

pub mod analysis;
pub mod cache;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod model;
pub mod run;
pub mod segment;
pub mod stack;
pub mod synthetic;

pub use analysis::{
    classify_return_pop, competing_antecedents, detect_iru, pop_survey, CompetingSets,
    CompetitionMode, Narrowing, PopReport, PopSurvey,
};

pub use cache::{
    default_tier_order, is_linearly_recent, CacheItem, CacheState, InsertOutcome, ItemKind,
    MainMemory, RetrievalCue, RetrievalEvent, RetrievalTier, DEFAULT_CACHE_CAPACITY,
    DEFAULT_RECENCY_WINDOW,
};
pub use corpus::{
    compare_models, emit_annotations, emit_corpus, parse_corpus, parse_corpus_str,
    transition_distribution, write_corpus, AnaphorComparison, CorpusFile, DistributionTable,
    ModelComparison, TablePartition, SCHEMA_VERSION,
};
pub use engine::{
    cb_rank_filter, create_reference_markers, expand_pronoun, expand_via_cache,
    process_discourse, resolve_utterance, rule1_filter, Anchor, CenteringResult, DiscourseRun,
    EngineConfig, EngineMode, RejectedBy, Rule1Mode,
};
pub use error::{Error, Result};
pub use run::{
    corpus_distribution, emit_corpus_annotations, process_corpus, process_corpus_sequential,
    CorpusRun,
};
pub use model::{
    cf_for_binding, classify_transition, project_cf_complex, rank_cf, Agreement, BoundaryEvidence,
    BoundaryRelation, CenteringState, Discourse, DiscourseEntity, EntityId, Gender, GramFunction,
    MarkerForm, MarkerIndex, Number, Prominence, PropositionTag, RankingConfig, ReferenceMarker,
    SegmentBoundary, Tense, Transition, Utterance,
};
pub use segment::{
    derive_segments, detect_boundaries, link_return_target, previous_utterance,
    split_utterance_units, ClauseAnnotation, ClauseRelation, ReturnLink, Segment, Segmentation,
    SentenceAnnotation, SplitOutcome,
};
pub use stack::{
    classify_configuration, is_hierarchically_recent, replay, replay_with, BoundaryKind, CbForm,
    ConfigValue, ConfigurationType, FocusSpace, FocusStack, PoppedSpace, StackReplay,
};
pub use synthetic::{apply_cache_op, random_cache_ops, random_corpus, random_discourse, CacheOp};
