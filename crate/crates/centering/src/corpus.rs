//! Corpus file format and the reporting layer: validated loading, stable
//! annotation emission, transition distribution tables, and the cache-vs-
//! stack comparison report.
//!
//! The on-disk format is line-delimited JSON for diffable fixtures: a header
//! object carrying the schema version, then one discourse per line. A single
//! pretty-printed document with the same fields is accepted too.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{process_discourse, CenteringResult, DiscourseRun, EngineConfig};
use crate::error::{Error, Result};
use crate::model::{
    BoundaryEvidence, Discourse, EntityId, MarkerIndex, Transition, Utterance,
};
use crate::segment::detect_boundaries;
use crate::stack::{classify_configuration, replay, ConfigurationType, StackReplay};

/// Current schema version. Files are accepted when their major version
/// matches.
pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub version: String,
    pub discourses: Vec<Discourse>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CorpusHeader {
    version: String,
}

/// Load and fully validate a corpus file.
pub fn parse_corpus(path: &Path) -> Result<CorpusFile> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus_str(&text)
}

/// Parse from text: line-delimited (header line, then one discourse per
/// line) or a single document. All validation and loader bookkeeping
/// (contraindex symmetrization, first mentions, marker indices) happens
/// here.
pub fn parse_corpus_str(text: &str) -> Result<CorpusFile> {
    let mut corpus = if let Ok(whole) = serde_json::from_str::<CorpusFile>(text) {
        whole
    } else {
        parse_lines(text)?
    };
    validate(&mut corpus)?;
    Ok(corpus)
}

fn parse_lines(text: &str) -> Result<CorpusFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((ln, header_line)) = lines.next() else {
        return Err(Error::schema("line 1", "empty corpus file"));
    };
    let header: CorpusHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::schema(format!("line {}", ln + 1), format!("bad header: {e}")))?;
    let mut discourses = Vec::new();
    for (ln, line) in lines {
        let d: Discourse = serde_json::from_str(line)
            .map_err(|e| Error::schema(format!("line {}", ln + 1), e.to_string()))?;
        discourses.push(d);
    }
    Ok(CorpusFile {
        version: header.version,
        discourses,
    })
}

/// Serialize back to the line-delimited form. Field order is fixed by the
/// type definitions and map keys are sorted, so identical corpora emit
/// byte-identical text.
pub fn emit_corpus(corpus: &CorpusFile) -> Result<String> {
    let mut out = String::new();
    let header = CorpusHeader {
        version: corpus.version.clone(),
    };
    out.push_str(&serde_json::to_string(&header)?);
    out.push('\n');
    for d in &corpus.discourses {
        out.push_str(&serde_json::to_string(d)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_corpus(corpus: &CorpusFile, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, emit_corpus(corpus)?)?)
}

fn version_major(version: &str) -> Option<u64> {
    let mut parts = version.split('.');
    let major = parts.next()?.parse().ok()?;
    let _minor: u64 = parts.next()?.parse().ok()?;
    let _patch: u64 = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some(major)
}

fn validate(corpus: &mut CorpusFile) -> Result<()> {
    match version_major(&corpus.version) {
        Some(1) => {}
        Some(other) => {
            return Err(Error::schema(
                "header",
                format!("unsupported schema major version {other}"),
            ))
        }
        None => {
            return Err(Error::schema(
                "header",
                format!("version {:?} is not a semver triple", corpus.version),
            ))
        }
    }
    let mut discourse_ids = BTreeSet::new();
    for d in &mut corpus.discourses {
        if !discourse_ids.insert(d.id.clone()) {
            return Err(Error::schema(
                format!("discourse {}", d.id),
                "duplicate discourse id",
            ));
        }
        validate_discourse(d)?;
    }
    Ok(())
}

fn validate_discourse(d: &mut Discourse) -> Result<()> {
    let at = |rest: &str| format!("discourse {} {rest}", d.id);
    let mut entity_ids = BTreeSet::new();
    for e in &d.entities {
        if !entity_ids.insert(e.id.clone()) {
            return Err(Error::schema(
                at(&format!("entity {}", e.id)),
                "duplicate entity id",
            ));
        }
    }
    for (slot, u) in d.utterances.iter().enumerate() {
        if u.index != slot + 1 {
            return Err(Error::schema(
                at(&format!("utterance {}", u.index)),
                format!("indices must be contiguous from 1; expected {}", slot + 1),
            ));
        }
    }
    for u in &d.utterances {
        let here = at(&format!("utterance {}", u.index));
        if u.is_prompt && !u.markers.is_empty() {
            return Err(Error::schema(here, "prompts carry no markers"));
        }
        let mut marker_ids = BTreeSet::new();
        let mut conjunct_sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for m in &u.markers {
            let at_marker = format!("{here} marker {}", m.id);
            if !marker_ids.insert(m.id.clone()) {
                return Err(Error::schema(at_marker, "duplicate marker id"));
            }
            if m.pleonastic {
                return Err(Error::schema(
                    at_marker,
                    "pleonastic markers are excluded at annotation time",
                ));
            }
            if !(1..=3).contains(&m.agreement.person) {
                return Err(Error::schema(
                    at_marker,
                    format!("person {} is not 1, 2, or 3", m.agreement.person),
                ));
            }
            if let Some(e) = &m.entity {
                if !entity_ids.contains(e) {
                    return Err(Error::schema(
                        at_marker,
                        format!("links to unregistered entity {e}"),
                    ));
                }
            }
            if let Some(g) = &m.conjunct_group {
                *conjunct_sizes.entry(g.as_str()).or_default() += 1;
            }
            for c in &m.contraindices {
                if c == &m.id {
                    return Err(Error::schema(at_marker, "contraindexed with itself"));
                }
                if !u.markers.iter().any(|x| &x.id == c) {
                    return Err(Error::schema(
                        at_marker,
                        format!("contraindex names missing marker {c}"),
                    ));
                }
            }
        }
        for (g, n) in conjunct_sizes {
            if n < 2 {
                return Err(Error::schema(
                    here.clone(),
                    format!("conjunct group {g} has a single member"),
                ));
            }
        }
        let mut prop_ids = BTreeSet::new();
        for p in &u.propositions {
            let at_prop = format!("{here} proposition {}", p.id);
            if !prop_ids.insert(p.id.clone()) {
                return Err(Error::schema(at_prop, "duplicate proposition id"));
            }
            for a in &p.args {
                if !entity_ids.contains(a) {
                    return Err(Error::schema(
                        at_prop,
                        format!("argument names unregistered entity {a}"),
                    ));
                }
            }
        }
        if let Some(target) = u.prev_override {
            if target >= u.index || d.utterance(target).is_none() {
                return Err(Error::schema(
                    here,
                    format!("previous-utterance override {target} must name an earlier utterance"),
                ));
            }
        }
    }
    let mut boundary_befores = BTreeSet::new();
    for b in &d.boundaries {
        let here = at(&format!("boundary before {}", b.before));
        if d.utterance(b.before).is_none() {
            return Err(Error::schema(here, "names a missing utterance"));
        }
        if !boundary_befores.insert(b.before) {
            return Err(Error::schema(here, "duplicate boundary position"));
        }
    }

    // Loader bookkeeping, after everything checked out.
    for ui in 0..d.utterances.len() {
        let u = &mut d.utterances[ui];
        let pairs: Vec<(String, String)> = u
            .markers
            .iter()
            .flat_map(|m| {
                m.contraindices
                    .iter()
                    .map(|c| (c.clone(), m.id.clone()))
                    .collect::<Vec<_>>()
            })
            .collect();
        for (target, source) in pairs {
            if let Some(t) = u.markers.iter_mut().find(|m| m.id == target) {
                t.contraindices.insert(source);
            }
        }
        let mut next_pronominal = 0u32;
        let mut next_indefinite = 0u32;
        for m in &mut u.markers {
            m.index = Some(if m.form.is_pronominal() {
                next_pronominal += 1;
                MarkerIndex::Pronominal(next_pronominal)
            } else if m.indefinite {
                next_indefinite += 1;
                MarkerIndex::Indefinite(next_indefinite)
            } else {
                MarkerIndex::Surface(m.surface.clone())
            });
        }
    }
    let first_mentions: BTreeMap<EntityId, usize> = d
        .utterances
        .iter()
        .flat_map(|u| {
            u.markers
                .iter()
                .filter_map(|m| m.entity.clone().map(|e| (e, u.index)))
                .collect::<Vec<_>>()
        })
        .fold(BTreeMap::new(), |mut acc, (e, idx)| {
            acc.entry(e).or_insert(idx);
            acc
        });
    for e in &mut d.entities {
        if e.first_mention.is_none() {
            e.first_mention = first_mentions.get(&e.id).copied();
        }
    }
    Ok(())
}

/// Which row of the transition table an utterance lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TablePartition {
    /// Segment-initial with cue-word "now" evidence.
    SegmentInitial,
    Other,
}

/// One row of transition counts. All five transitions are always present as
/// keys so emission is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub partition: TablePartition,
    pub counts: BTreeMap<Transition, usize>,
    pub total: usize,
}

impl DistributionTable {
    pub fn new(partition: TablePartition) -> Self {
        DistributionTable {
            partition,
            counts: Transition::all().into_iter().map(|t| (t, 0)).collect(),
            total: 0,
        }
    }

    fn bump(&mut self, t: Transition) {
        *self.counts.entry(t).or_default() += 1;
        self.total += 1;
    }

    /// Counts in rank order: CONTINUE, RETAIN, SMOOTH-SHIFT, ROUGH-SHIFT,
    /// NO-CB.
    pub fn row(&self) -> [usize; 5] {
        let mut row = [0; 5];
        for (i, t) in Transition::all().into_iter().enumerate() {
            row[i] = self.counts.get(&t).copied().unwrap_or(0);
        }
        row
    }

    pub fn absorb(&mut self, other: &DistributionTable) {
        for (t, n) in &other.counts {
            *self.counts.entry(*t).or_default() += n;
        }
        self.total += other.total;
    }
}

/// Split a discourse's transitions into the segment-initial-now row and the
/// rest. Detection runs fresh so annotated and cue-derived boundaries both
/// count.
pub fn transition_distribution(
    d: &Discourse,
    results: &[CenteringResult],
) -> (DistributionTable, DistributionTable) {
    let boundaries = detect_boundaries(d);
    let now_initial: BTreeSet<usize> = boundaries
        .iter()
        .filter(|b| b.evidence.contains(&BoundaryEvidence::CueNow))
        .map(|b| b.before)
        .collect();
    let mut initial = DistributionTable::new(TablePartition::SegmentInitial);
    let mut other = DistributionTable::new(TablePartition::Other);
    for r in results {
        if now_initial.contains(&r.state.utterance) {
            initial.bump(r.state.transition);
        } else {
            other.bump(r.state.transition);
        }
    }
    (initial, other)
}

/// One anaphor contrasted across the two attention models.
#[derive(Debug, Clone, Serialize)]
pub struct AnaphorComparison {
    pub utterance: usize,
    pub marker: String,
    pub surface: String,
    /// What the cache-model engine bound the anaphor to, if anything.
    pub cache_resolution: Option<EntityId>,
    /// Whether the focus stack still held that entity when the utterance
    /// came up. Absent when the anaphor went unresolved.
    pub stack_accessible: Option<bool>,
    /// Resolved by the cache model to an entity the stack had already lost.
    pub diverges: bool,
    /// A retrieval from main memory produced the winning candidate.
    pub via_retrieval: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelComparison {
    pub discourse: String,
    pub anaphors: Vec<AnaphorComparison>,
    pub agreements: usize,
    pub divergences: usize,
    pub retrieval_events: usize,
}

/// Run the cache model and the stack baseline over the same discourse and
/// contrast them anaphor by anaphor. Divergence means the engine resolved a
/// pronoun to an entity sitting in a popped space.
pub fn compare_models(d: &Discourse, config: &EngineConfig) -> Result<ModelComparison> {
    let run = process_discourse(d, config)?;
    let stack = replay(d)?;
    let mut anaphors = Vec::new();
    let mut agreements = 0;
    let mut divergences = 0;
    let mut retrieval_events = 0;
    for r in &run.results {
        retrieval_events += r.retrieval_events.len();
        let Some(u) = d.utterance(r.state.utterance) else {
            continue;
        };
        let markers = crate::engine::create_reference_markers(u, d)?;
        for m in markers {
            if !m.form.is_pronominal() || m.agreement.person != 3 {
                continue;
            }
            let resolution = r.bindings.get(&m.id).cloned();
            let accessible = resolution
                .as_ref()
                .map(|e| stack.accessible(r.state.utterance, e));
            let diverges = matches!(accessible, Some(false));
            let via_retrieval = resolution.as_ref().is_some_and(|e| {
                r.retrieval_events
                    .iter()
                    .any(|ev| ev.candidates.contains(e))
            });
            match accessible {
                Some(true) => agreements += 1,
                Some(false) => divergences += 1,
                None => {}
            }
            anaphors.push(AnaphorComparison {
                utterance: r.state.utterance,
                marker: m.id.clone(),
                surface: m.surface.clone(),
                cache_resolution: resolution,
                stack_accessible: accessible,
                diverges,
                via_retrieval,
            });
        }
    }
    Ok(ModelComparison {
        discourse: d.id.clone(),
        anaphors,
        agreements,
        divergences,
        retrieval_events,
    })
}

#[derive(Debug, Serialize)]
struct AnnotationRecord<'a> {
    discourse: &'a str,
    utterance: usize,
    label: String,
    cb: &'a Option<EntityId>,
    cf: &'a [EntityId],
    transition: Transition,
    bindings: &'a BTreeMap<String, EntityId>,
    ambiguous: bool,
    rule1_violation: bool,
    retrieval_events: &'a [crate::cache::RetrievalEvent],
    #[serde(skip_serializing_if = "Option::is_none")]
    configuration: Option<ConfigurationType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<TraceDetail>,
}

#[derive(Debug, Serialize)]
struct TraceDetail {
    anchors_generated: usize,
    rejected: Vec<RejectedAnchor>,
}

#[derive(Debug, Serialize)]
struct RejectedAnchor {
    cb: Option<EntityId>,
    transition: Transition,
    rejected_by: crate::engine::RejectedBy,
}

fn configuration_for(
    d: &Discourse,
    run: &DiscourseRun,
    stack: &StackReplay,
    utterance: usize,
) -> Option<ConfigurationType> {
    if utterance <= 1 {
        return None;
    }
    let prev = utterance - 1;
    let cb_prev = run.state(prev)?.cb.clone();
    classify_configuration(prev, utterance, cb_prev.as_ref(), d, stack).ok()
}

/// One JSON line per resolved utterance, in discourse order. Identical
/// inputs produce byte-identical output; trace mode adds the anchor ledger.
pub fn emit_annotations(d: &Discourse, run: &DiscourseRun, trace: bool) -> Result<String> {
    let stack = replay(d)?;
    let mut out = String::new();
    for r in &run.results {
        let label = d
            .utterance(r.state.utterance)
            .map(|u| u.display_label())
            .unwrap_or_else(|| r.state.utterance.to_string());
        let record = AnnotationRecord {
            discourse: &d.id,
            utterance: r.state.utterance,
            label,
            cb: &r.state.cb,
            cf: &r.state.cf,
            transition: r.state.transition,
            bindings: &r.bindings,
            ambiguous: r.ambiguous,
            rule1_violation: r.rule1_violation,
            retrieval_events: &r.retrieval_events,
            configuration: configuration_for(d, run, &stack, r.state.utterance),
            trace: trace.then(|| TraceDetail {
                anchors_generated: r.anchors_generated,
                rejected: r
                    .anchors_filtered
                    .iter()
                    .map(|(a, why)| RejectedAnchor {
                        cb: a.cb.clone(),
                        transition: a.transition,
                        rejected_by: *why,
                    })
                    .collect(),
            }),
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&record)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Agreement, DiscourseEntity, Gender, GramFunction, MarkerForm, Number, ReferenceMarker,
    };

    fn minimal_corpus_text() -> String {
        let d = Discourse {
            id: "d1".into(),
            entities: vec![DiscourseEntity {
                id: EntityId::new("susan"),
                canonical: "Susan".into(),
                agreement: Agreement::new(Gender::F, Number::Sg),
                selectional_tags: BTreeSet::new(),
                first_mention: None,
                prominence: Default::default(),
            }],
            utterances: vec![Utterance {
                index: 1,
                label: None,
                speaker: None,
                markers: vec![{
                    let mut m = ReferenceMarker::new(
                        "m1",
                        "Susan",
                        MarkerForm::ProperName,
                        Agreement::new(Gender::F, Number::Sg),
                        GramFunction::Subject,
                    );
                    m.entity = Some(EntityId::new("susan"));
                    m
                }],
                propositions: Vec::new(),
                cue_words: Vec::new(),
                tense: Default::default(),
                is_prompt: false,
                clarification: false,
                prev_override: None,
            }],
            boundaries: Vec::new(),
            all_sisters: false,
        };
        let corpus = CorpusFile {
            version: SCHEMA_VERSION.into(),
            discourses: vec![d],
        };
        emit_corpus(&corpus).unwrap()
    }

    #[test]
    fn line_delimited_and_single_document_both_parse() {
        let text = minimal_corpus_text();
        let lines = parse_corpus_str(&text).unwrap();
        assert_eq!(lines.discourses.len(), 1);
        let single = serde_json::to_string_pretty(&lines).unwrap();
        let reparsed = parse_corpus_str(&single).unwrap();
        assert_eq!(lines, reparsed);
    }

    #[test]
    fn round_trip_is_stable() {
        let text = minimal_corpus_text();
        let once = parse_corpus_str(&text).unwrap();
        let twice = parse_corpus_str(&emit_corpus(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(emit_corpus(&once).unwrap(), emit_corpus(&twice).unwrap());
    }

    #[test]
    fn loader_symmetrizes_contraindices_and_fills_first_mentions() {
        let mut once = parse_corpus_str(&minimal_corpus_text()).unwrap();
        assert_eq!(once.discourses[0].entities[0].first_mention, Some(1));
        // Build a two-marker utterance with one-directional contraindexing.
        let d = &mut once.discourses[0];
        let mut she = ReferenceMarker::new(
            "m2",
            "she",
            MarkerForm::Pronoun,
            Agreement::new(Gender::F, Number::Sg),
            GramFunction::DirectObject,
        );
        she.contraindices.insert("m1".into());
        d.utterances[0].markers.push(she);
        let text = emit_corpus(&once).unwrap();
        let loaded = parse_corpus_str(&text).unwrap();
        let m1 = loaded.discourses[0].utterances[0].marker("m1").unwrap();
        assert!(m1.contraindices.contains("m2"));
        let m2 = loaded.discourses[0].utterances[0].marker("m2").unwrap();
        assert_eq!(m2.index, Some(MarkerIndex::Pronominal(1)));
    }

    #[test]
    fn bad_references_carry_locations() {
        let mut corpus = parse_corpus_str(&minimal_corpus_text()).unwrap();
        corpus.discourses[0].utterances[0].markers[0].entity = Some(EntityId::new("ghost"));
        let text = emit_corpus(&corpus).unwrap();
        let err = parse_corpus_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("discourse d1 utterance 1 marker m1"), "{msg}");
        assert!(msg.contains("ghost"), "{msg}");
    }

    #[test]
    fn pleonastic_and_gapped_indices_are_rejected() {
        let mut corpus = parse_corpus_str(&minimal_corpus_text()).unwrap();
        corpus.discourses[0].utterances[0].markers[0].pleonastic = true;
        let err = parse_corpus_str(&emit_corpus(&corpus).unwrap()).unwrap_err();
        assert!(err.to_string().contains("pleonastic"));

        let mut corpus = parse_corpus_str(&minimal_corpus_text()).unwrap();
        corpus.discourses[0].utterances[0].index = 3;
        let err = parse_corpus_str(&emit_corpus(&corpus).unwrap()).unwrap_err();
        assert!(err.to_string().contains("contiguous"));
    }

    #[test]
    fn wrong_schema_version_is_refused() {
        let mut corpus = parse_corpus_str(&minimal_corpus_text()).unwrap();
        corpus.version = "2.0.0".into();
        let err = parse_corpus_str(&emit_corpus(&corpus).unwrap()).unwrap_err();
        assert!(err.to_string().contains("major version 2"));
        corpus.version = "not-a-version".into();
        let err = parse_corpus_str(&emit_corpus(&corpus).unwrap()).unwrap_err();
        assert!(err.to_string().contains("semver"));
    }

    #[test]
    fn empty_discourse_list_is_a_valid_corpus() {
        let text = format!("{}\n", serde_json::to_string(&CorpusHeader {
            version: SCHEMA_VERSION.into(),
        }).unwrap());
        let corpus = parse_corpus_str(&text).unwrap();
        assert!(corpus.discourses.is_empty());
    }

    #[test]
    fn distribution_matches_a_brute_force_recount() {
        let corpus = parse_corpus_str(&minimal_corpus_text()).unwrap();
        let d = &corpus.discourses[0];
        let run = process_discourse(d, &EngineConfig::default()).unwrap();
        let (initial, other) = transition_distribution(d, &run.results);
        let mut recount = 0;
        for r in &run.results {
            recount += 1;
            let row = if initial.counts.get(&r.state.transition).copied().unwrap_or(0) > 0
                && initial.total > 0
            {
                &initial
            } else {
                &other
            };
            assert!(row.counts.values().sum::<usize>() == row.total);
        }
        assert_eq!(initial.total + other.total, recount);
        let (zero_a, zero_b) = transition_distribution(d, &[]);
        assert_eq!(zero_a.total + zero_b.total, 0);
        assert_eq!(zero_a.row(), [0; 5]);
    }

    #[test]
    fn annotation_emission_is_deterministic_and_traceable() {
        let corpus = parse_corpus_str(&minimal_corpus_text()).unwrap();
        let d = &corpus.discourses[0];
        let run = process_discourse(d, &EngineConfig::default()).unwrap();
        let plain_a = emit_annotations(d, &run, false).unwrap();
        let plain_b = emit_annotations(d, &run, false).unwrap();
        assert_eq!(plain_a, plain_b);
        assert_eq!(plain_a.lines().count(), 1);
        assert!(!plain_a.contains("anchors_generated"));
        let traced = emit_annotations(d, &run, true).unwrap();
        assert!(traced.contains("anchors_generated"));
    }

    #[test]
    fn comparison_over_a_flat_discourse_has_no_divergence() {
        let mut corpus = parse_corpus_str(&minimal_corpus_text()).unwrap();
        let d = &mut corpus.discourses[0];
        d.utterances.push(Utterance {
            index: 2,
            label: None,
            speaker: None,
            markers: vec![ReferenceMarker::new(
                "m2",
                "she",
                MarkerForm::Pronoun,
                Agreement::new(Gender::F, Number::Sg),
                GramFunction::Subject,
            )],
            propositions: Vec::new(),
            cue_words: Vec::new(),
            tense: Default::default(),
            is_prompt: false,
            clarification: false,
            prev_override: None,
        });
        let report = compare_models(d, &EngineConfig::default()).unwrap();
        assert_eq!(report.divergences, 0);
        assert_eq!(report.agreements, 1);
        let a = &report.anaphors[0];
        assert_eq!(a.cache_resolution, Some(EntityId::new("susan")));
        assert_eq!(a.stack_accessible, Some(true));
        assert!(!a.via_retrieval);
    }
}
