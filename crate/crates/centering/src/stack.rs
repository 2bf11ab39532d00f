//! Focus-stack baseline: attentional state as a stack of focus spaces tied
//! to segments.
//!
//! A subordinate segment pushes a space, a sister replaces the top, and a
//! return pop closes every space above its target. The stack answers one
//! question, entity accessibility, and does no pronoun resolution itself;
//! the comparison against the bounded-cache model contrasts accessibility
//! predictions only.
//!
//! The module also carries the eight-cell configuration grid: boundary kind
//! (sister, subordinate, pop with hierarchical recency, pop with linear
//! recency) crossed with the form realizing the previous utterance's
//! backward center (pronoun or full NP).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundaryRelation, Discourse, EntityId, SegmentBoundary};
use crate::segment::{derive_segments, detect_boundaries, Segmentation};

/// One focus space: the entities introduced while its segment was current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusSpace {
    pub segment: usize,
    pub entities: BTreeSet<EntityId>,
    pub opened_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoppedSpace {
    pub space: FocusSpace,
    pub popped_at: usize,
}

/// The stack proper. Never empty while a discourse is open; the base space
/// belongs to the first segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusStack {
    spaces: Vec<FocusSpace>,
    pub popped_log: Vec<PoppedSpace>,
}

impl FocusStack {
    pub fn new(base_segment: usize, opened_at: usize) -> Self {
        FocusStack {
            spaces: vec![FocusSpace {
                segment: base_segment,
                entities: BTreeSet::new(),
                opened_at,
            }],
            popped_log: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.spaces.len()
    }

    pub fn spaces(&self) -> &[FocusSpace] {
        &self.spaces
    }

    pub fn on_stack(&self, segment: usize) -> bool {
        self.spaces.iter().any(|s| s.segment == segment)
    }

    /// Segment ids bottom-up.
    pub fn segment_ids(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.segment).collect()
    }

    fn pop_into_log(&mut self, popped_at: usize) -> Result<()> {
        let space = self.spaces.pop().ok_or_else(|| {
            Error::Structure("focus stack underflow: popped past the base space".into())
        })?;
        self.popped_log.push(PoppedSpace { space, popped_at });
        Ok(())
    }

    /// Apply one boundary. Sisters replace the top space, subordinates and
    /// interruptions nest, return pops close everything above their target.
    /// A pop needs its `return_target` resolved to a segment that is still
    /// on the stack.
    pub fn apply_boundary(&mut self, b: &SegmentBoundary, new_segment: usize) -> Result<()> {
        match b.relation {
            BoundaryRelation::Sister | BoundaryRelation::Unknown => {
                self.pop_into_log(b.before)?;
            }
            BoundaryRelation::Subordinate | BoundaryRelation::Interruption => {}
            BoundaryRelation::ReturnPop => {
                let target = b.return_target.ok_or_else(|| {
                    Error::Structure(format!(
                        "return pop before utterance {} has no resolved target",
                        b.before
                    ))
                })?;
                if !self.on_stack(target) {
                    return Err(Error::Structure(format!(
                        "return pop before utterance {} targets segment {target}, which is not on the stack",
                        b.before
                    )));
                }
                while self
                    .spaces
                    .last()
                    .is_some_and(|top| top.segment != target)
                {
                    self.pop_into_log(b.before)?;
                }
            }
        }
        self.spaces.push(FocusSpace {
            segment: new_segment,
            entities: BTreeSet::new(),
            opened_at: b.before,
        });
        Ok(())
    }

    /// Entities of every space still on the stack. Popped spaces are gone:
    /// that is the model's whole claim.
    pub fn accessible_entities(&self) -> BTreeSet<EntityId> {
        self.spaces
            .iter()
            .flat_map(|s| s.entities.iter().cloned())
            .collect()
    }

    pub fn add_entities<I: IntoIterator<Item = EntityId>>(&mut self, entities: I) {
        if let Some(top) = self.spaces.last_mut() {
            top.entities.extend(entities);
        }
    }
}

/// A full pass of the stack model over one discourse: per-utterance stack
/// and accessibility snapshots, taken after boundary application but before
/// the utterance's own entities enter.
#[derive(Debug, Clone, PartialEq)]
pub struct StackReplay {
    pub segmentation: Segmentation,
    pub stack_at: BTreeMap<usize, Vec<usize>>,
    pub accessible_at: BTreeMap<usize, BTreeSet<EntityId>>,
    pub final_stack: FocusStack,
}

impl StackReplay {
    pub fn accessible(&self, utterance: usize, entity: &EntityId) -> bool {
        self.accessible_at
            .get(&utterance)
            .is_some_and(|set| set.contains(entity))
    }
}

/// Run the stack model over a discourse using detected boundaries.
pub fn replay(d: &Discourse) -> Result<StackReplay> {
    let boundaries = detect_boundaries(d);
    let segmentation = derive_segments(d, &boundaries)?;
    replay_with(d, segmentation)
}

/// Run the stack model over a prepared segmentation.
pub fn replay_with(d: &Discourse, segmentation: Segmentation) -> Result<StackReplay> {
    let mut stack_at = BTreeMap::new();
    let mut accessible_at = BTreeMap::new();
    let Some(first) = d.utterances.first() else {
        return Ok(StackReplay {
            segmentation,
            stack_at,
            accessible_at,
            final_stack: FocusStack::new(1, 0),
        });
    };
    let mut stack = FocusStack::new(1, first.index);
    for u in &d.utterances {
        if let Some(seg) = segmentation
            .segments
            .iter()
            .find(|s| s.start == u.index && s.id != 1)
        {
            let boundary = SegmentBoundary {
                before: seg.start,
                relation: seg.relation,
                evidence: seg.evidence.clone(),
                return_target: segmentation
                    .return_links
                    .get(&seg.start)
                    .map(|l| l.target),
            };
            stack.apply_boundary(&boundary, seg.id)?;
        }
        stack_at.insert(u.index, stack.segment_ids());
        accessible_at.insert(u.index, stack.accessible_entities());
        let entities: Vec<EntityId> = u
            .markers
            .iter()
            .filter_map(|m| d.gold_entity(m))
            .collect();
        stack.add_entities(entities);
    }
    Ok(StackReplay {
        segmentation,
        stack_at,
        accessible_at,
        final_stack: stack,
    })
}

/// Hierarchical recency: `i` is hierarchically recent when `j` is processed
/// iff `i`'s segment is still on the stack at `j` and no later utterance of
/// that segment intervenes.
pub fn is_hierarchically_recent(i: usize, j: usize, replay: &StackReplay) -> Result<bool> {
    if i >= j {
        return Err(Error::Contract(format!(
            "hierarchical recency needs i < j, got i={i}, j={j}"
        )));
    }
    let seg_i = replay
        .segmentation
        .segment_of(i)
        .ok_or_else(|| Error::Contract(format!("utterance {i} is outside every segment")))?;
    let on_stack = replay
        .stack_at
        .get(&j)
        .ok_or_else(|| Error::Contract(format!("utterance {j} was never processed")))?
        .contains(&seg_i.id);
    if !on_stack {
        return Ok(false);
    }
    let intervenes = i + 1 < j && (i + 1..j).any(|k| seg_i.start <= k && k <= seg_i.end);
    Ok(!intervenes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CbForm {
    Pronoun,
    FullNp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Sister,
    Subordinate,
    PopHierarchical,
    PopLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigValue {
    Type1,
    Type2,
    Type3,
    Type4,
    Type5,
    Type6,
    Type7,
    Type8,
    WithinSegment,
}

/// The classified cell for one utterance pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationType {
    pub value: ConfigValue,
    pub boundary_kind: Option<BoundaryKind>,
    pub cb_form: CbForm,
}

fn grid(kind: BoundaryKind, form: CbForm) -> ConfigValue {
    match (kind, form) {
        (BoundaryKind::Sister, CbForm::Pronoun) => ConfigValue::Type1,
        (BoundaryKind::Sister, CbForm::FullNp) => ConfigValue::Type2,
        (BoundaryKind::Subordinate, CbForm::Pronoun) => ConfigValue::Type3,
        (BoundaryKind::Subordinate, CbForm::FullNp) => ConfigValue::Type4,
        (BoundaryKind::PopHierarchical, CbForm::Pronoun) => ConfigValue::Type5,
        (BoundaryKind::PopHierarchical, CbForm::FullNp) => ConfigValue::Type6,
        (BoundaryKind::PopLinear, CbForm::Pronoun) => ConfigValue::Type7,
        (BoundaryKind::PopLinear, CbForm::FullNp) => ConfigValue::Type8,
    }
}

/// Classify the pair (U_{n-1}, U_n) into the eight-cell grid. `cb_prev` is
/// the backward center in force at U_{n-1}; it must be realized in U_n for
/// the pair to be classifiable, and the first marker realizing it fixes the
/// form. Pairs inside one segment classify as within-segment.
pub fn classify_configuration(
    prev_index: usize,
    curr_index: usize,
    cb_prev: Option<&EntityId>,
    d: &Discourse,
    replay: &StackReplay,
) -> Result<ConfigurationType> {
    if prev_index >= curr_index {
        return Err(Error::Contract(format!(
            "pair must be ordered, got ({prev_index}, {curr_index})"
        )));
    }
    let curr = d.utterance(curr_index).ok_or_else(|| Error::Resolution {
        utterance: curr_index,
        message: "pair names an unknown utterance".into(),
    })?;
    let cb = cb_prev.ok_or_else(|| Error::Resolution {
        utterance: curr_index,
        message: "previous utterance has no backward center; pair is not classifiable".into(),
    })?;
    let realizing = curr
        .markers
        .iter()
        .find(|m| d.gold_entity(m).as_ref() == Some(cb))
        .ok_or_else(|| Error::Resolution {
            utterance: curr_index,
            message: format!("backward center {cb} is not realized; pair is not classifiable"),
        })?;
    let cb_form = if realizing.form.is_pronominal() {
        CbForm::Pronoun
    } else {
        CbForm::FullNp
    };
    let seg_prev = replay
        .segmentation
        .segment_of(prev_index)
        .ok_or_else(|| Error::Contract(format!("utterance {prev_index} is outside every segment")))?;
    let seg_curr = replay
        .segmentation
        .segment_of(curr_index)
        .ok_or_else(|| Error::Contract(format!("utterance {curr_index} is outside every segment")))?;
    if seg_prev.id == seg_curr.id {
        return Ok(ConfigurationType {
            value: ConfigValue::WithinSegment,
            boundary_kind: None,
            cb_form,
        });
    }
    let kind = match seg_curr.relation {
        BoundaryRelation::Sister | BoundaryRelation::Unknown => BoundaryKind::Sister,
        BoundaryRelation::Subordinate | BoundaryRelation::Interruption => BoundaryKind::Subordinate,
        BoundaryRelation::ReturnPop => {
            if is_hierarchically_recent(prev_index, curr_index, replay)? {
                BoundaryKind::PopHierarchical
            } else {
                BoundaryKind::PopLinear
            }
        }
    };
    Ok(ConfigurationType {
        value: grid(kind, cb_form),
        boundary_kind: Some(kind),
        cb_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Agreement, BoundaryEvidence, Gender, GramFunction, MarkerForm, Number, PropositionTag,
        ReferenceMarker, Tense, Utterance,
    };

    fn boundary(before: usize, relation: BoundaryRelation) -> SegmentBoundary {
        SegmentBoundary {
            before,
            relation,
            evidence: vec![BoundaryEvidence::HumanJudgement],
            return_target: None,
        }
    }

    #[test]
    fn sister_boundary_replaces_the_top_space() {
        let mut s = FocusStack::new(1, 1);
        s.add_entities([EntityId::new("a")]);
        s.apply_boundary(&boundary(3, BoundaryRelation::Sister), 2)
            .unwrap();
        assert_eq!(s.depth(), 1);
        assert_eq!(s.popped_log.len(), 1);
        assert!(!s.accessible_entities().contains(&EntityId::new("a")));
    }

    #[test]
    fn subordinate_boundary_nests_and_keeps_parent_entities_accessible() {
        let mut s = FocusStack::new(1, 1);
        s.add_entities([EntityId::new("a")]);
        s.apply_boundary(&boundary(3, BoundaryRelation::Subordinate), 2)
            .unwrap();
        s.add_entities([EntityId::new("b")]);
        assert_eq!(s.depth(), 2);
        let acc = s.accessible_entities();
        assert!(acc.contains(&EntityId::new("a")));
        assert!(acc.contains(&EntityId::new("b")));
    }

    #[test]
    fn return_pop_closes_everything_above_its_target() {
        let mut s = FocusStack::new(1, 1);
        s.apply_boundary(&boundary(2, BoundaryRelation::Subordinate), 2)
            .unwrap();
        s.apply_boundary(&boundary(3, BoundaryRelation::Subordinate), 3)
            .unwrap();
        s.add_entities([EntityId::new("deep")]);
        let mut pop = boundary(5, BoundaryRelation::ReturnPop);
        pop.return_target = Some(1);
        s.apply_boundary(&pop, 4).unwrap();
        assert_eq!(s.segment_ids(), vec![1, 4]);
        assert_eq!(s.popped_log.len(), 2);
        assert!(!s.accessible_entities().contains(&EntityId::new("deep")));
    }

    #[test]
    fn return_pop_to_an_absent_segment_is_a_structure_error() {
        let mut s = FocusStack::new(1, 1);
        let mut pop = boundary(2, BoundaryRelation::ReturnPop);
        pop.return_target = Some(9);
        assert!(s.apply_boundary(&pop, 2).is_err());
    }

    fn marker(id: &str, entity: &str, form: MarkerForm) -> ReferenceMarker {
        let mut m = ReferenceMarker::new(
            id,
            entity,
            form,
            Agreement::new(Gender::M, Number::Sg),
            GramFunction::Subject,
        );
        m.entity = Some(EntityId::new(entity));
        m
    }

    fn utterance(index: usize, markers: Vec<ReferenceMarker>) -> Utterance {
        Utterance {
            index,
            label: None,
            speaker: None,
            markers,
            propositions: Vec::new(),
            cue_words: Vec::new(),
            tense: Tense::Unmarked,
            is_prompt: false,
            clarification: false,
            prev_override: None,
        }
    }

    /// Segments: 1 = utts 1..2, interruption 2 = utts 3..4, resumption 3 at
    /// utt 5 popping back to segment 1. The interruption introduces "guest";
    /// after the pop it must be gone while "host" survives.
    fn interruption_discourse() -> Discourse {
        let mut u3 = utterance(3, vec![marker("m3", "guest", MarkerForm::ProperName)]);
        u3.cue_words = vec!["now".into()];
        let mut u5 = utterance(5, vec![marker("m5", "host", MarkerForm::Pronoun)]);
        u5.cue_words = vec!["anyway".into()];
        u5.propositions = vec![PropositionTag {
            id: "p-visit".into(),
            predicate: "visit".into(),
            args: Vec::new(),
        }];
        let mut u2 = utterance(2, vec![marker("m2", "host", MarkerForm::Pronoun)]);
        u2.propositions = u5.propositions.clone();
        Discourse {
            id: "t".into(),
            entities: Vec::new(),
            utterances: vec![
                utterance(1, vec![marker("m1", "host", MarkerForm::ProperName)]),
                u2,
                u3,
                utterance(4, vec![marker("m4", "guest", MarkerForm::Pronoun)]),
                u5,
            ],
            boundaries: Vec::new(),
            all_sisters: false,
        }
    }

    #[test]
    fn replay_reports_popped_entities_inaccessible() {
        let d = interruption_discourse();
        let r = replay(&d).unwrap();
        assert!(r.accessible(4, &EntityId::new("guest")));
        assert!(!r.accessible(5, &EntityId::new("guest")));
        assert!(r.accessible(5, &EntityId::new("host")));
        // Opened spaces end up either on the stack or in the popped log.
        let open = r.final_stack.depth();
        let popped = r.final_stack.popped_log.len();
        assert_eq!(open + popped, r.segmentation.segments.len());
    }

    #[test]
    fn hierarchical_recency_follows_the_stack_not_the_line() {
        let d = interruption_discourse();
        let r = replay(&d).unwrap();
        // Utterance 2 closes segment 1, which is back on top at 5.
        assert!(is_hierarchically_recent(2, 5, &r).unwrap());
        // Utterance 4 sits in the popped interruption.
        assert!(!is_hierarchically_recent(4, 5, &r).unwrap());
        // Adjacent pair inside one segment.
        assert!(is_hierarchically_recent(1, 2, &r).unwrap());
        assert!(is_hierarchically_recent(5, 5, &r).is_err());
    }

    #[test]
    fn classify_pop_cells_by_recency_and_form() {
        let d = interruption_discourse();
        let r = replay(&d).unwrap();
        // Pop target's last utterance, realized by a pronoun at 5: Type 5.
        let host = EntityId::new("host");
        let c = classify_configuration(2, 5, Some(&host), &d, &r).unwrap();
        assert_eq!(c.value, ConfigValue::Type5);
        assert_eq!(c.boundary_kind, Some(BoundaryKind::PopHierarchical));
        // The popped segment's utterance as U_{n-1}: linear recency, but the
        // center it carries is not realized at 5, so it is unclassifiable.
        let guest = EntityId::new("guest");
        assert!(classify_configuration(4, 5, Some(&guest), &d, &r).is_err());
        // Within-segment pair.
        let c = classify_configuration(1, 2, Some(&host), &d, &r).unwrap();
        assert_eq!(c.value, ConfigValue::WithinSegment);
    }

    #[test]
    fn classify_sister_and_subordinate_cells() {
        // Sister: 1..2 | 3 with a full NP re-realizing the center.
        let mut u3 = utterance(3, vec![marker("m3", "host", MarkerForm::Description)]);
        u3.cue_words = Vec::new();
        let mut d = Discourse {
            id: "t".into(),
            entities: Vec::new(),
            utterances: vec![
                utterance(1, vec![marker("m1", "host", MarkerForm::ProperName)]),
                utterance(2, vec![marker("m2", "host", MarkerForm::Pronoun)]),
                u3,
            ],
            boundaries: vec![SegmentBoundary {
                before: 3,
                relation: BoundaryRelation::Sister,
                evidence: vec![BoundaryEvidence::HumanJudgement],
                return_target: None,
            }],
            all_sisters: false,
        };
        let r = replay(&d).unwrap();
        let host = EntityId::new("host");
        let c = classify_configuration(2, 3, Some(&host), &d, &r).unwrap();
        assert_eq!(c.value, ConfigValue::Type2);

        // Same shape with a subordinate boundary and a pronoun: Type 3.
        d.boundaries[0].relation = BoundaryRelation::Subordinate;
        d.utterances[2].markers[0].form = MarkerForm::Pronoun;
        let r = replay(&d).unwrap();
        let c = classify_configuration(2, 3, Some(&host), &d, &r).unwrap();
        assert_eq!(c.value, ConfigValue::Type3);
    }

    #[test]
    fn pop_linear_cell_when_the_popped_segment_supplies_the_center() {
        // Segment 2 (utts 3..4) is popped at 5, but 5 realizes the popped
        // segment's center with a pronoun: Type 7.
        let mut d = interruption_discourse();
        d.utterances[4].markers[0] = marker("m5", "guest", MarkerForm::Pronoun);
        let r = replay(&d).unwrap();
        let guest = EntityId::new("guest");
        let c = classify_configuration(4, 5, Some(&guest), &d, &r).unwrap();
        assert_eq!(c.value, ConfigValue::Type7);
        assert_eq!(c.boundary_kind, Some(BoundaryKind::PopLinear));
    }
}
