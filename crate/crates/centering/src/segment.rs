//! Utterance-unit splitting and segment-boundary detection.
//!
//! A unit is a clause with a finite verb; coordinated clauses each form a
//! unit in production order, while subordinate clauses fold into the unit of
//! their superordinate clause. The fold preserves ranking by stamping folded
//! markers with a clause stratum, so a complex utterance's forward centers
//! are the main clause's list with each subordinate's appended. Because
//! subordinates never become units, the main clause is automatically what a
//! following utterance sees as its predecessor.
//!
//! Boundary detection is evidence-driven: discourse-initial cue words,
//! clarification questions, and annotated judgements each contribute, and
//! signals landing before the same utterance merge into one boundary.
//! Return pops are linked to their target segment by shared-proposition or
//! tense evidence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BoundaryEvidence, BoundaryRelation, Discourse, PropositionTag, ReferenceMarker,
    SegmentBoundary, Tense, Utterance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClauseRelation {
    Main,
    Coordinate,
    Subordinate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseAnnotation {
    pub finite: bool,
    pub relation: ClauseRelation,
    #[serde(default)]
    pub markers: Vec<ReferenceMarker>,
    #[serde(default)]
    pub propositions: Vec<PropositionTag>,
    #[serde(default)]
    pub cue_words: Vec<String>,
    #[serde(default)]
    pub tense: Tense,
}

/// One annotated sentence, pre-split into clauses. `number` carries a
/// corpus-assigned sentence number used only for unit labels; unit indices
/// are always sequential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    #[serde(default)]
    pub number: Option<usize>,
    #[serde(default)]
    pub speaker: Option<String>,
    /// Prompts ("yeah", "okay") have no finite clause yet still occupy a
    /// turn; they become prompt utterances instead of being skipped.
    #[serde(default)]
    pub prompt: bool,
    #[serde(default)]
    pub clarification: bool,
    #[serde(default)]
    pub clauses: Vec<ClauseAnnotation>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitOutcome {
    pub utterances: Vec<Utterance>,
    /// One entry per sentence that produced no unit.
    pub warnings: Vec<String>,
}

const UNIT_SUFFIXES: &str = "abcdefghijklmnopqrstuvwxyz";

/// Split annotated sentences into utterance units: one per finite main or
/// coordinate clause, subordinates folded into their superordinate unit.
/// Sentences with no finite main clause are skipped with a warning, except
/// prompts, which become empty prompt utterances.
pub fn split_utterance_units(sentences: &[SentenceAnnotation]) -> Result<SplitOutcome> {
    let mut out = SplitOutcome::default();
    let mut next_index = 1usize;
    for (snum, sentence) in sentences.iter().enumerate() {
        let label_base = sentence.number.unwrap_or(snum + 1).to_string();
        if sentence.prompt {
            out.utterances.push(Utterance {
                index: next_index,
                label: Some(label_base),
                speaker: sentence.speaker.clone(),
                markers: Vec::new(),
                propositions: Vec::new(),
                cue_words: Vec::new(),
                tense: Tense::Unmarked,
                is_prompt: true,
                clarification: false,
                prev_override: None,
            });
            next_index += 1;
            continue;
        }
        let mains = sentence
            .clauses
            .iter()
            .filter(|c| c.relation == ClauseRelation::Main)
            .count();
        if mains > 1 {
            return Err(Error::Validation(format!(
                "sentence {label_base} has {mains} main clauses; exactly one is allowed"
            )));
        }
        // Unit seeds are the finite main/coordinate clauses, in order.
        let seeds: Vec<usize> = sentence
            .clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| c.finite && c.relation != ClauseRelation::Subordinate)
            .map(|(i, _)| i)
            .collect();
        if seeds.is_empty() {
            out.warnings.push(format!(
                "sentence {label_base} has no finite main or coordinate clause; skipped"
            ));
            continue;
        }
        // Each subordinate clause attaches to the nearest preceding seed, or
        // to the first seed when it opens the sentence.
        let mut attached: Vec<Vec<usize>> = vec![Vec::new(); seeds.len()];
        for (ci, clause) in sentence.clauses.iter().enumerate() {
            if clause.relation != ClauseRelation::Subordinate {
                continue;
            }
            let slot = seeds
                .iter()
                .rposition(|&s| s < ci)
                .unwrap_or(0);
            attached[slot].push(ci);
        }
        let multi = seeds.len() > 1;
        for (unit_pos, (&seed, subs)) in seeds.iter().zip(&attached).enumerate() {
            let seed_clause = &sentence.clauses[seed];
            let mut markers = Vec::new();
            for m in &seed_clause.markers {
                let mut m = m.clone();
                m.clause_stratum = 0;
                markers.push(m);
            }
            let mut propositions = seed_clause.propositions.clone();
            let mut cue_words = seed_clause.cue_words.clone();
            for (k, &ci) in subs.iter().enumerate() {
                let sub = &sentence.clauses[ci];
                for m in &sub.markers {
                    let mut m = m.clone();
                    m.clause_stratum = (k + 1) as u32;
                    markers.push(m);
                }
                propositions.extend(sub.propositions.iter().cloned());
                if ci < seed {
                    // A sentence-initial subordinate precedes the main clause
                    // on the surface; its cue words come first.
                    let mut front = sub.cue_words.clone();
                    front.extend(cue_words);
                    cue_words = front;
                } else {
                    cue_words.extend(sub.cue_words.iter().cloned());
                }
            }
            let label = if multi {
                let suffix = UNIT_SUFFIXES
                    .chars()
                    .nth(unit_pos)
                    .ok_or_else(|| {
                        Error::Validation(format!("sentence {label_base} has too many units"))
                    })?;
                format!("{label_base}{suffix}")
            } else {
                label_base.clone()
            };
            out.utterances.push(Utterance {
                index: next_index,
                label: Some(label),
                speaker: sentence.speaker.clone(),
                markers,
                propositions,
                cue_words,
                tense: seed_clause.tense,
                is_prompt: false,
                clarification: sentence.clarification && unit_pos == 0,
                prev_override: None,
            });
            next_index += 1;
        }
    }
    Ok(out)
}

/// The utterance whose centering data feeds `u`: the override target when
/// annotated, otherwise the nearest earlier non-prompt utterance. Prompts
/// transmit state unchanged, so they are skipped. `None` at discourse start.
pub fn previous_utterance<'a>(u: &Utterance, d: &'a Discourse) -> Option<&'a Utterance> {
    if let Some(target) = u.prev_override {
        if target < u.index {
            if let Some(t) = d.utterance(target) {
                if !t.is_prompt {
                    return Some(t);
                }
            }
        }
    }
    let pos = d.utterances.iter().position(|x| x.index == u.index)?;
    d.utterances[..pos].iter().rev().find(|x| !x.is_prompt)
}

fn relation_strength(r: BoundaryRelation) -> u8 {
    match r {
        BoundaryRelation::ReturnPop => 4,
        BoundaryRelation::Subordinate => 3,
        BoundaryRelation::Interruption => 2,
        BoundaryRelation::Sister => 1,
        BoundaryRelation::Unknown => 0,
    }
}

fn merge_boundary(
    map: &mut BTreeMap<usize, SegmentBoundary>,
    before: usize,
    relation: BoundaryRelation,
    evidence: Vec<BoundaryEvidence>,
    return_target: Option<usize>,
) {
    let entry = map.entry(before).or_insert_with(|| SegmentBoundary {
        before,
        relation: BoundaryRelation::Unknown,
        evidence: Vec::new(),
        return_target: None,
    });
    if relation_strength(relation) > relation_strength(entry.relation) {
        entry.relation = relation;
    }
    for ev in evidence {
        if !entry.evidence.contains(&ev) {
            entry.evidence.push(ev);
        }
    }
    if entry.return_target.is_none() {
        entry.return_target = return_target;
    }
}

/// Collect segment boundaries from every evidence source: annotated
/// judgements pass through, utterance-initial cue words and clarification
/// flags add theirs. Signals at the same position merge, with the more
/// structurally specific relation winning. Adding evidence can only add
/// boundaries or sharpen existing ones, never remove any.
pub fn detect_boundaries(d: &Discourse) -> Vec<SegmentBoundary> {
    let mut map: BTreeMap<usize, SegmentBoundary> = BTreeMap::new();
    for b in &d.boundaries {
        merge_boundary(&mut map, b.before, b.relation, b.evidence.clone(), b.return_target);
    }
    let first = match d.utterances.first() {
        Some(u) => u.index,
        None => return Vec::new(),
    };
    for u in &d.utterances {
        if u.index == first {
            continue;
        }
        match u.initial_cue().as_deref() {
            Some("anyway") => merge_boundary(
                &mut map,
                u.index,
                BoundaryRelation::ReturnPop,
                vec![BoundaryEvidence::CueAnyway],
                None,
            ),
            Some("now") => merge_boundary(
                &mut map,
                u.index,
                BoundaryRelation::Subordinate,
                vec![BoundaryEvidence::CueNow],
                None,
            ),
            _ => {}
        }
        if u.clarification {
            merge_boundary(
                &mut map,
                u.index,
                BoundaryRelation::Subordinate,
                vec![BoundaryEvidence::ClarificationQuestion],
                None,
            );
        }
    }
    map.into_values().collect()
}

/// One segment's linear extent. `start..=end` are utterance indices; during
/// interruptions the enclosing segment's span simply ends, and a return pop
/// opens a fresh resumption segment parented under the pop target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    pub start: usize,
    pub end: usize,
    pub parent: Option<usize>,
    pub relation: BoundaryRelation,
    pub evidence: Vec<BoundaryEvidence>,
}

/// How a return pop chose its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnLink {
    pub target: usize,
    /// `None` means no IRU or tense evidence fired and the enclosing segment
    /// was used as the default.
    pub evidence: Option<BoundaryEvidence>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    /// Resolved pop targets, keyed by the boundary's `before` index.
    pub return_links: BTreeMap<usize, ReturnLink>,
}

impl Segmentation {
    pub fn segment_of(&self, utterance_index: usize) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|s| s.start <= utterance_index && utterance_index <= s.end)
    }

    pub fn segment(&self, id: usize) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    /// Last non-prompt utterance inside a segment's linear span.
    pub fn final_non_prompt<'a>(&self, id: usize, d: &'a Discourse) -> Option<&'a Utterance> {
        let seg = self.segment(id)?;
        d.utterances
            .iter()
            .rev()
            .find(|u| seg.start <= u.index && u.index <= seg.end && !u.is_prompt)
    }
}

fn shares_proposition(a: &Utterance, b: &Utterance) -> bool {
    a.propositions
        .iter()
        .any(|p| b.propositions.iter().any(|q| q.id == p.id))
}

/// Pick the target segment for a return pop. Prior segments are scanned most
/// recent first, skipping the segment being closed; a segment qualifies when
/// its final utterance shares a proposition with the boundary's first
/// utterance, or matches its tense across a tense-change break. Without
/// evidence the enclosing segment wins with the evidence left unknown.
pub fn link_return_target(
    b: &SegmentBoundary,
    d: &Discourse,
    seg: &Segmentation,
) -> Result<ReturnLink> {
    let at = b.before;
    let opening = d
        .utterance(at)
        .ok_or_else(|| Error::Validation(format!("boundary before unknown utterance {at}")))?;
    let closed = seg
        .segments
        .iter()
        .filter(|s| s.end < at)
        .max_by_key(|s| s.end);
    let Some(closed) = closed else {
        return Err(Error::DanglingReturn { before: at });
    };
    let mut candidates: Vec<&Segment> = seg
        .segments
        .iter()
        .filter(|s| s.end < at && s.id != closed.id)
        .collect();
    candidates.sort_by(|a, b| b.end.cmp(&a.end));
    for cand in &candidates {
        let Some(fu) = seg.final_non_prompt(cand.id, d) else {
            continue;
        };
        if shares_proposition(opening, fu) {
            return Ok(ReturnLink {
                target: cand.id,
                evidence: Some(BoundaryEvidence::Iru),
            });
        }
        if opening.tense != Tense::Unmarked && fu.tense == opening.tense {
            // The break itself must show a tense change: the utterance right
            // after the candidate's span moved to a different tense.
            let changed = d
                .utterances
                .iter()
                .filter(|u| u.index > cand.end && !u.is_prompt)
                .min_by_key(|u| u.index)
                .is_some_and(|u| u.tense != fu.tense);
            if changed {
                return Ok(ReturnLink {
                    target: cand.id,
                    evidence: Some(BoundaryEvidence::TenseChange),
                });
            }
        }
    }
    if let Some(parent) = closed.parent {
        return Ok(ReturnLink {
            target: parent,
            evidence: None,
        });
    }
    match candidates.first() {
        Some(most_recent) => Ok(ReturnLink {
            target: most_recent.id,
            evidence: None,
        }),
        None => Err(Error::DanglingReturn { before: at }),
    }
}

/// Materialize segments from boundaries. Sister boundaries replace the
/// current segment at its level, subordinates and interruptions nest, and
/// return pops close everything above their target before opening a
/// resumption segment under it. A corpus flagged all-sisters gets a flat
/// hierarchy regardless of boundary relations.
pub fn derive_segments(d: &Discourse, boundaries: &[SegmentBoundary]) -> Result<Segmentation> {
    let mut seg = Segmentation::default();
    let Some(first) = d.utterances.first() else {
        return Ok(seg);
    };
    let last_index = d.utterances.last().map(|u| u.index).unwrap_or(first.index);
    let mut sorted: Vec<&SegmentBoundary> = boundaries.iter().collect();
    sorted.sort_by_key(|b| b.before);
    for w in sorted.windows(2) {
        if w[0].before == w[1].before {
            return Err(Error::Validation(format!(
                "two boundaries before utterance {}; merge them first",
                w[0].before
            )));
        }
    }
    seg.segments.push(Segment {
        id: 1,
        start: first.index,
        end: last_index,
        parent: None,
        relation: BoundaryRelation::Unknown,
        evidence: Vec::new(),
    });
    // Stack of open segment ids; the top is always the segment currently
    // receiving utterances.
    let mut stack: Vec<usize> = vec![1];
    for b in sorted {
        if b.before <= first.index {
            // An explicit opening boundary for the first segment carries no
            // structure; keep its evidence.
            let first_seg = &mut seg.segments[0];
            for ev in &b.evidence {
                if !first_seg.evidence.contains(ev) {
                    first_seg.evidence.push(*ev);
                }
            }
            continue;
        }
        if b.before > last_index || d.utterance(b.before).is_none() {
            return Err(Error::Validation(format!(
                "boundary before unknown utterance {}",
                b.before
            )));
        }
        let top_id = *stack.last().expect("stack holds the base segment");
        seg.segments
            .iter_mut()
            .find(|s| s.id == top_id)
            .expect("open segment exists")
            .end = b.before - 1;
        let relation = if d.all_sisters {
            BoundaryRelation::Sister
        } else {
            b.relation
        };
        let parent = match relation {
            BoundaryRelation::Sister | BoundaryRelation::Unknown => {
                stack.pop();
                stack.last().copied()
            }
            BoundaryRelation::Subordinate | BoundaryRelation::Interruption => Some(top_id),
            BoundaryRelation::ReturnPop => {
                let link = match b.return_target {
                    Some(target) => ReturnLink {
                        target,
                        evidence: None,
                    },
                    None => link_return_target(b, d, &seg)?,
                };
                if !stack.contains(&link.target) {
                    return Err(Error::Structure(format!(
                        "return pop before utterance {} targets segment {}, which is not open",
                        b.before, link.target
                    )));
                }
                while *stack.last().expect("target is on the stack") != link.target {
                    stack.pop();
                }
                seg.return_links.insert(b.before, link.clone());
                Some(link.target)
            }
        };
        let id = seg.segments.len() + 1;
        seg.segments.push(Segment {
            id,
            start: b.before,
            end: last_index,
            parent,
            relation,
            evidence: b.evidence.clone(),
        });
        stack.push(id);
    }
    Ok(seg)
}
