//! Utterance-by-utterance anaphora resolution: candidate expansion, anchor
//! generation, the two centering filters, and the cache update that follows
//! acceptance.
//!
//! Two generation modes share the expansion stage. Interleaved mode builds
//! anchors one transition group at a time, best-ranked group first, and stops
//! inside the first group that contains a passer, so dispreferred groups are
//! never materialized. Exhaustive mode builds the full Cb x binding cross
//! product up front, including contraindexed combinations and Cb candidates
//! the utterance never realizes, and lets the filters sort it out. Both modes
//! accept the same anchor; only the amount of work differs.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cache::{
    CacheItem, CacheState, ItemKind, MainMemory, RetrievalCue, RetrievalEvent, RetrievalTier,
    default_tier_order, DEFAULT_CACHE_CAPACITY, DEFAULT_RECENCY_WINDOW,
};
use crate::error::{Error, Result};
use crate::model::{
    cf_for_binding, classify_transition, CenteringState, Discourse, EntityId, Gender, MarkerForm,
    MarkerIndex, Number, RankingConfig, ReferenceMarker, Transition, Utterance,
};
use crate::segment::previous_utterance;

/// How anchors are generated and tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    Interleaved,
    Exhaustive,
}

/// Whether an anchor that realizes its Cb without a pronoun (while the
/// utterance does pronominalize something) is rejected outright or merely
/// ranked behind the anchors that obey the rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule1Mode {
    Strict,
    Preference,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub mode: EngineMode,
    pub cache_capacity: usize,
    pub recency_window: usize,
    pub rule1: Rule1Mode,
    /// Emission detail only; resolution results are identical either way.
    pub trace: bool,
    pub ranking: RankingConfig,
    pub tier_order: Vec<RetrievalTier>,
    /// With the store disabled, candidates displaced from the cache are gone
    /// for good and pronouns that need them stay unresolved.
    pub memory_store: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: EngineMode::Interleaved,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            recency_window: DEFAULT_RECENCY_WINDOW,
            rule1: Rule1Mode::Strict,
            trace: false,
            ranking: RankingConfig::default(),
            tier_order: default_tier_order(),
            memory_store: true,
        }
    }
}

/// One proposed interpretation of an utterance: a Cb (possibly NIL), a ranked
/// Cf list, and the pronoun bindings that produce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    pub cb: Option<EntityId>,
    pub cf: Vec<EntityId>,
    /// Marker id to entity, for every marker that resolved.
    pub bindings: BTreeMap<String, EntityId>,
    pub transition: Transition,
}

/// Which filter rejected an anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectedBy {
    /// Two contraindexed markers bound to the same entity. Only exhaustive
    /// mode produces such anchors; interleaved expansion never builds them.
    Contraindexing,
    /// The Cb is not the highest-ranked element of the previous Cf realized
    /// in this utterance.
    CbRank,
    /// The utterance pronominalizes something but no pronoun realizes the Cb.
    PronominalCb,
}

/// Outcome of resolving one utterance.
#[derive(Debug, Clone, Serialize)]
pub struct CenteringResult {
    pub state: CenteringState,
    pub bindings: BTreeMap<String, EntityId>,
    pub anchors_generated: usize,
    pub anchors_filtered: Vec<(Anchor, RejectedBy)>,
    /// Two or more anchors of the accepted transition rank passed every
    /// filter.
    pub ambiguous: bool,
    /// The accepted anchor does not realize its Cb as a pronoun even though
    /// the utterance contains pronouns. Set by preference mode whenever a
    /// demoted anchor wins, and by strict mode when every group empties and
    /// the engine falls back to the best anchor that failed only that rule.
    pub rule1_violation: bool,
    pub retrieval_events: Vec<RetrievalEvent>,
    pub mode: EngineMode,
    /// Cache contents after the update step, most recent first.
    pub cache_after: Vec<String>,
}

/// A whole discourse processed front to back. `state_by_index` also covers
/// prompt utterances, which inherit their predecessor's state but get no
/// result row of their own.
#[derive(Debug, Clone)]
pub struct DiscourseRun {
    pub results: Vec<CenteringResult>,
    pub state_by_index: BTreeMap<usize, CenteringState>,
    pub cache: CacheState,
    pub memory: MainMemory,
}

impl DiscourseRun {
    pub fn state(&self, utterance: usize) -> Option<&CenteringState> {
        self.state_by_index.get(&utterance)
    }

    pub fn result(&self, utterance: usize) -> Option<&CenteringResult> {
        self.results.iter().find(|r| r.state.utterance == utterance)
    }
}

/// Build the working marker list for an utterance: pleonastic markers are
/// dropped, conjunction groups collapse into one composite marker, and every
/// marker receives its display index (A series for pronominals, X series for
/// indefinites, the surface string otherwise).
pub fn create_reference_markers(u: &Utterance, d: &Discourse) -> Result<Vec<ReferenceMarker>> {
    let mut merged: Vec<ReferenceMarker> = Vec::new();
    let mut groups_done: BTreeSet<String> = BTreeSet::new();
    for m in &u.markers {
        if m.pleonastic {
            continue;
        }
        let Some(group) = &m.conjunct_group else {
            merged.push(m.clone());
            continue;
        };
        if !groups_done.insert(group.clone()) {
            continue;
        }
        let members: Vec<&ReferenceMarker> = u
            .markers
            .iter()
            .filter(|x| !x.pleonastic && x.conjunct_group.as_ref() == Some(group))
            .collect();
        merged.push(merge_conjuncts(group, &members, d));
    }
    let mut next_pronominal = 0u32;
    let mut next_indefinite = 0u32;
    for m in &mut merged {
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
    Ok(merged)
}

/// A conjunction of markers refers as one plural composite. The composite
/// binds to the entity registered under the group id when there is one;
/// agreement is plural with the members' shared gender or Unknown.
fn merge_conjuncts(group: &str, members: &[&ReferenceMarker], d: &Discourse) -> ReferenceMarker {
    let first = members[0];
    let gender = members
        .iter()
        .map(|m| m.agreement.gender)
        .reduce(|a, b| if a == b { a } else { Gender::Unknown })
        .unwrap_or(Gender::Unknown);
    let person = members.iter().map(|m| m.agreement.person).min().unwrap_or(3);
    let form = if members.iter().all(|m| m.form.is_pronominal()) {
        first.form
    } else {
        MarkerForm::Description
    };
    let mut composite = ReferenceMarker::new(
        group,
        members
            .iter()
            .map(|m| m.surface.as_str())
            .collect::<Vec<_>>()
            .join(" and "),
        form,
        crate::model::Agreement {
            gender,
            number: Number::Pl,
            person,
        },
        members.iter().map(|m| m.function).min().unwrap_or(first.function),
    );
    for m in members {
        composite
            .selectional_tags
            .extend(m.selectional_tags.iter().cloned());
        composite
            .discourse_tags
            .extend(m.discourse_tags.iter().cloned());
        composite
            .contraindices
            .extend(m.contraindices.iter().cloned());
    }
    for m in members {
        composite.contraindices.remove(&m.id);
    }
    composite.clause_stratum = members.iter().map(|m| m.clause_stratum).min().unwrap_or(0);
    let group_entity = EntityId::new(group);
    composite.entity = d.entity(&group_entity).map(|e| e.id.clone());
    composite
}

/// Candidate antecedents for a pronominal marker drawn from the previous Cf,
/// in Cf order: agreement must be compatible, the marker's required tags must
/// be covered, and entities already bound to a contraindexed marker are
/// skipped. Contraindices are read off this marker's own list; corpus loading
/// stores them symmetrically, and the engine's enumerator checks both
/// directions regardless.
pub fn expand_pronoun(
    m: &ReferenceMarker,
    prev_cf: &[EntityId],
    d: &Discourse,
    partial: &BTreeMap<String, EntityId>,
) -> Result<Vec<EntityId>> {
    if !m.form.is_pronominal() {
        return Err(Error::Contract(format!(
            "marker {} is not pronominal and does not expand",
            m.id
        )));
    }
    let required = m.required_tags();
    let mut out = Vec::new();
    for e_id in prev_cf {
        let Some(e) = d.entity(e_id) else {
            return Err(Error::Structure(format!(
                "cf entity {e_id} is not registered in the discourse"
            )));
        };
        if !m.agreement.compatible(&e.agreement) {
            continue;
        }
        if !e.satisfies(&required) {
            continue;
        }
        if m.contraindices.iter().any(|c| partial.get(c) == Some(e_id)) {
            continue;
        }
        if !out.contains(e_id) {
            out.push(e_id.clone());
        }
    }
    Ok(out)
}

/// Fallback candidates for a pronoun the previous Cf cannot supply. Resident
/// cache entities are matched first, most recently used first; only when the
/// cache has nothing does a retrieval cue go out to main memory. The cue
/// carries the pronoun's agreement and required tags plus the utterance's
/// proposition ids, so an informationally redundant restatement can pull its
/// participants back. The returned event, if any, must be recorded by the
/// caller even when retrieval found nothing.
pub fn expand_via_cache(
    m: &ReferenceMarker,
    u: &Utterance,
    cache: &mut CacheState,
    memory: &mut MainMemory,
    config: &EngineConfig,
) -> Result<(Vec<EntityId>, Option<RetrievalEvent>)> {
    if !m.form.is_pronominal() {
        return Err(Error::Contract(format!(
            "marker {} is not pronominal and does not expand",
            m.id
        )));
    }
    let required = m.required_tags();
    let mut candidates = Vec::new();
    for item in cache.snapshot() {
        if item.kind != ItemKind::Entity {
            continue;
        }
        let Some(agreement) = item.agreement else {
            continue;
        };
        if !m.agreement.compatible(&agreement) {
            continue;
        }
        if !required.is_subset(&item.tags) {
            continue;
        }
        candidates.push(EntityId::new(item.id.as_str()));
    }
    if !candidates.is_empty() {
        return Ok((candidates, None));
    }
    if !config.memory_store {
        return Ok((Vec::new(), None));
    }
    let cue = RetrievalCue {
        agreement: Some(m.agreement),
        selectional_tags: required,
        predicates: BTreeSet::new(),
        proposition_ids: u.propositions.iter().map(|p| p.id.clone()).collect(),
    };
    let event = cache.retrieve(memory, &cue, &config.tier_order, u.index)?;
    let candidates = event.candidates.clone();
    Ok((candidates, Some(event)))
}

/// The Cb must be the highest-ranked element of the previous Cf that the
/// anchor realizes. When nothing from the previous Cf is realized, only a
/// NIL Cb passes.
pub fn cb_rank_filter(anchor: &Anchor, prev_cf: &[EntityId]) -> bool {
    let head = prev_cf.iter().find(|e| anchor.cf.contains(e));
    match (&anchor.cb, head) {
        (None, None) => true,
        (Some(cb), Some(h)) => cb == h,
        _ => false,
    }
}

/// If the utterance realizes anything as a third-person pronoun, some pronoun
/// must realize the Cb. A NIL Cb passes vacuously, as does a pronoun-free
/// utterance. First and second person pronouns are deictic and always
/// pronominal no matter what is centered, so they carry no force here.
pub fn rule1_filter(anchor: &Anchor, pronouns: &[&ReferenceMarker]) -> bool {
    if pronouns.is_empty() {
        return true;
    }
    match &anchor.cb {
        None => true,
        Some(cb) => pronouns
            .iter()
            .any(|p| anchor.bindings.get(&p.id) == Some(cb)),
    }
}

enum SlotOptions {
    /// Non-pronominal markers and deictic person pronouns resolve to a single
    /// entity (or nothing) before generation starts.
    Fixed(Option<EntityId>),
    /// Third-person pronominal candidates in preference order.
    Choice(Vec<EntityId>),
}

struct Slot {
    marker: ReferenceMarker,
    options: SlotOptions,
}

/// Per-marker candidate computation. Retrieval happens here, before any new
/// material from this utterance is inserted, and every retrieval attempt is
/// recorded whether or not it found anything.
fn expansion_slots(
    u: &Utterance,
    d: &Discourse,
    prev: &CenteringState,
    cache: &mut CacheState,
    memory: &mut MainMemory,
    config: &EngineConfig,
    events: &mut Vec<RetrievalEvent>,
) -> Result<Vec<Slot>> {
    let markers = create_reference_markers(u, d)?;
    let mut slots = Vec::new();
    for m in markers {
        let options = if !m.form.is_pronominal() {
            match d.gold_entity(&m) {
                Some(e) => SlotOptions::Fixed(Some(e)),
                None => {
                    return Err(Error::Resolution {
                        utterance: u.index,
                        message: format!(
                            "marker {} ({:?}) has neither an annotation link nor a canonical match",
                            m.id, m.surface
                        ),
                    })
                }
            }
        } else if m.agreement.person != 3 {
            // Speaker and addressee are supplied by the annotation, not by
            // centering.
            SlotOptions::Fixed(m.entity.clone())
        } else {
            let base = expand_pronoun(&m, &prev.cf, d, &BTreeMap::new())?;
            if base.is_empty() {
                let (candidates, event) = expand_via_cache(&m, u, cache, memory, config)?;
                if let Some(ev) = event {
                    events.push(ev);
                }
                SlotOptions::Choice(candidates)
            } else {
                SlotOptions::Choice(base)
            }
        };
        slots.push(Slot { marker: m, options });
    }
    Ok(slots)
}

/// One fully enumerated binding with everything acceptance needs precomputed.
struct BoundSet {
    bindings: BTreeMap<String, EntityId>,
    /// Candidate positions per Choice slot in utterance order; an unbound
    /// slot records usize::MAX so preferred bindings sort first.
    positions: Vec<usize>,
    cf: Vec<EntityId>,
    /// Bound entity ids in slot order, the final tie-break key.
    entities: Vec<String>,
}

fn slot_blocked(
    slots: &[Slot],
    idx: usize,
    e: &EntityId,
    bindings: &BTreeMap<String, EntityId>,
) -> bool {
    let m = &slots[idx].marker;
    if m.contraindices.iter().any(|c| bindings.get(c) == Some(e)) {
        return true;
    }
    slots.iter().any(|s| {
        s.marker.contraindices.contains(&m.id) && bindings.get(&s.marker.id) == Some(e)
    })
}

fn enumerate_rec(
    slots: &[Slot],
    idx: usize,
    honor_contraindices: bool,
    bindings: &mut BTreeMap<String, EntityId>,
    positions: &mut Vec<usize>,
    out: &mut Vec<(BTreeMap<String, EntityId>, Vec<usize>)>,
) {
    if idx == slots.len() {
        out.push((bindings.clone(), positions.clone()));
        return;
    }
    match &slots[idx].options {
        SlotOptions::Fixed(Some(e)) => {
            bindings.insert(slots[idx].marker.id.clone(), e.clone());
            enumerate_rec(slots, idx + 1, honor_contraindices, bindings, positions, out);
            bindings.remove(&slots[idx].marker.id);
        }
        SlotOptions::Fixed(None) => {
            enumerate_rec(slots, idx + 1, honor_contraindices, bindings, positions, out);
        }
        SlotOptions::Choice(candidates) => {
            let mut any = false;
            for (pos, e) in candidates.iter().enumerate() {
                if honor_contraindices && slot_blocked(slots, idx, e, bindings) {
                    continue;
                }
                any = true;
                bindings.insert(slots[idx].marker.id.clone(), e.clone());
                positions.push(pos);
                enumerate_rec(slots, idx + 1, honor_contraindices, bindings, positions, out);
                positions.pop();
                bindings.remove(&slots[idx].marker.id);
            }
            if !any {
                // No candidate survives in this branch; the pronoun stays
                // unresolved rather than killing the branch.
                positions.push(usize::MAX);
                enumerate_rec(slots, idx + 1, honor_contraindices, bindings, positions, out);
                positions.pop();
            }
        }
    }
}

/// Depth-first enumeration in candidate-preference order, so binding tuples
/// come out lexicographically by preference position.
fn enumerate_bindings(
    slots: &[Slot],
    honor_contraindices: bool,
    marker_list: &[ReferenceMarker],
    ranking: &RankingConfig,
) -> Result<Vec<BoundSet>> {
    let mut raw = Vec::new();
    let mut bindings = BTreeMap::new();
    let mut positions = Vec::new();
    enumerate_rec(slots, 0, honor_contraindices, &mut bindings, &mut positions, &mut raw);
    let mut out = Vec::with_capacity(raw.len());
    for (bindings, positions) in raw {
        let cf = cf_for_binding(marker_list, &bindings, ranking)?;
        let entities = slots
            .iter()
            .filter_map(|s| bindings.get(&s.marker.id).map(|e| e.as_str().to_string()))
            .collect();
        out.push(BoundSet {
            bindings,
            positions,
            cf,
            entities,
        });
    }
    Ok(out)
}

fn binding_violates(slots: &[Slot], bindings: &BTreeMap<String, EntityId>) -> bool {
    for s in slots.iter() {
        let Some(e) = bindings.get(&s.marker.id) else {
            continue;
        };
        for c in &s.marker.contraindices {
            if bindings.get(c) == Some(e) {
                return true;
            }
        }
    }
    false
}

/// Within-group preference: previous-Cf rank of the proposed Cb (absent or
/// NIL ranks worst), then binding preference positions, then bound entity
/// ids, then the Cb id itself for anchors the previous Cf cannot separate.
type AnchorKey = (usize, Vec<usize>, Vec<String>, String);

fn weigh(prev: &CenteringState, b: &BoundSet, cb: Option<&EntityId>, group: Transition) -> (Anchor, AnchorKey) {
    let anchor = Anchor {
        cb: cb.cloned(),
        cf: b.cf.clone(),
        bindings: b.bindings.clone(),
        transition: group,
    };
    let rank = cb
        .and_then(|c| prev.cf.iter().position(|e| e == c))
        .unwrap_or(usize::MAX);
    let cb_id = cb.map(|c| c.as_str().to_string()).unwrap_or_default();
    (anchor, (rank, b.positions.clone(), b.entities.clone(), cb_id))
}

/// All anchors whose transition from `prev` is exactly `group`, sorted by
/// preference. The five groups partition the (Cb, binding) space over
/// realized Cb candidates plus NIL; `classify_transition` agrees with the
/// group on every anchor built here.
fn build_group(group: Transition, prev: &CenteringState, bounds: &[BoundSet]) -> Vec<(Anchor, AnchorKey)> {
    let mut out = Vec::new();
    for b in bounds {
        let cp = b.cf.first();
        match group {
            Transition::Continue => {
                if let Some(cp) = cp {
                    if prev.cb.is_none() || prev.cb.as_ref() == Some(cp) {
                        out.push(weigh(prev, b, Some(cp), group));
                    }
                }
            }
            Transition::Retain => {
                if let Some(pc) = &prev.cb {
                    if b.cf.contains(pc) && cp != Some(pc) {
                        out.push(weigh(prev, b, Some(pc), group));
                    }
                }
            }
            Transition::SmoothShift => {
                if let (Some(pc), Some(cp)) = (&prev.cb, cp) {
                    if cp != pc {
                        out.push(weigh(prev, b, Some(cp), group));
                    }
                }
            }
            Transition::RoughShift => {
                for c in &b.cf {
                    if Some(c) != cp && prev.cb.as_ref() != Some(c) {
                        out.push(weigh(prev, b, Some(c), group));
                    }
                }
            }
            Transition::NoCb => {
                out.push(weigh(prev, b, None, group));
            }
        }
    }
    out.sort_by(|a, b| a.1.cmp(&b.1));
    out
}

struct Acceptance {
    anchor: Anchor,
    generated: usize,
    filtered: Vec<(Anchor, RejectedBy)>,
    ambiguous: bool,
    rule1_violation: bool,
}

/// Groups are materialized in transition rank order and the search stops at
/// the first group with a passer; the passers of that group decide ambiguity.
/// In strict mode, anchors that failed only the pronoun rule are remembered,
/// and if every group empties the best of them is accepted with the
/// violation flagged. That pool is never empty when the search gets there:
/// whenever the previous Cf is realized at all, the anchor whose Cb is the
/// highest realized element passes the rank filter, and it was generated in
/// whichever group matches its transition.
fn accept_interleaved(
    prev: &CenteringState,
    bounds: &[BoundSet],
    pronouns: &[&ReferenceMarker],
    config: &EngineConfig,
) -> Result<Acceptance> {
    let mut generated = 0;
    let mut filtered: Vec<(Anchor, RejectedBy)> = Vec::new();
    let mut pool: Vec<Anchor> = Vec::new();
    for group in Transition::all() {
        let anchors = build_group(group, prev, bounds);
        generated += anchors.len();
        let mut passers: Vec<(bool, AnchorKey, Anchor)> = Vec::new();
        for (anchor, key) in anchors {
            if !cb_rank_filter(&anchor, &prev.cf) {
                filtered.push((anchor, RejectedBy::CbRank));
                continue;
            }
            let obeys = rule1_filter(&anchor, pronouns);
            match (config.rule1, obeys) {
                (Rule1Mode::Strict, false) => {
                    pool.push(anchor.clone());
                    filtered.push((anchor, RejectedBy::PronominalCb));
                }
                (Rule1Mode::Strict, true) => passers.push((false, key, anchor)),
                (Rule1Mode::Preference, obeys) => passers.push((!obeys, key, anchor)),
            }
        }
        if !passers.is_empty() {
            passers.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
            let ambiguous = passers.len() >= 2;
            let (violation, _, anchor) = passers.swap_remove(0);
            return Ok(Acceptance {
                anchor,
                generated,
                filtered,
                ambiguous,
                rule1_violation: violation,
            });
        }
    }
    let Some(best) = pool.first().cloned() else {
        return Err(Error::Contract(
            "no anchor passed the center-rank filter; the NIL group should have".into(),
        ));
    };
    let ambiguous = pool
        .iter()
        .filter(|a| a.transition == best.transition)
        .count()
        >= 2;
    Ok(Acceptance {
        anchor: best,
        generated,
        filtered,
        ambiguous,
        rule1_violation: true,
    })
}

/// The original cross product: every Cb candidate from the previous Cf, the
/// current expansion sets, and NIL, against every binding including the
/// contraindexed ones. Contraindexing, Cb rank, and the pronoun rule then
/// run as filters over the lot.
fn accept_exhaustive(
    prev: &CenteringState,
    slots: &[Slot],
    bounds: &[BoundSet],
    pronouns: &[&ReferenceMarker],
    config: &EngineConfig,
) -> Result<Acceptance> {
    let mut cands: Vec<Option<EntityId>> = Vec::new();
    let mut seen: BTreeSet<EntityId> = BTreeSet::new();
    for e in &prev.cf {
        if seen.insert(e.clone()) {
            cands.push(Some(e.clone()));
        }
    }
    for s in slots {
        match &s.options {
            SlotOptions::Fixed(Some(e)) => {
                if seen.insert(e.clone()) {
                    cands.push(Some(e.clone()));
                }
            }
            SlotOptions::Fixed(None) => {}
            SlotOptions::Choice(list) => {
                for e in list {
                    if seen.insert(e.clone()) {
                        cands.push(Some(e.clone()));
                    }
                }
            }
        }
    }
    cands.push(None);

    let violating: Vec<bool> = bounds
        .iter()
        .map(|b| binding_violates(slots, &b.bindings))
        .collect();
    let mut generated = 0;
    let mut filtered: Vec<(Anchor, RejectedBy)> = Vec::new();
    let mut passers: Vec<(u8, bool, AnchorKey, Anchor)> = Vec::new();
    let mut pool: Vec<(u8, AnchorKey, Anchor)> = Vec::new();
    for cb in &cands {
        for (bi, b) in bounds.iter().enumerate() {
            generated += 1;
            let transition = match cb {
                None => Transition::NoCb,
                Some(c) if b.cf.contains(c) => classify_transition(prev, Some(c), &b.cf)?,
                // An unrealized Cb candidate: label it with the worst
                // centered transition; the rank filter rejects it anyway.
                Some(_) => Transition::RoughShift,
            };
            let (anchor, key) = weigh_with(prev, b, cb.as_ref(), transition);
            if violating[bi] {
                filtered.push((anchor, RejectedBy::Contraindexing));
                continue;
            }
            if !cb_rank_filter(&anchor, &prev.cf) {
                filtered.push((anchor, RejectedBy::CbRank));
                continue;
            }
            let obeys = rule1_filter(&anchor, pronouns);
            match (config.rule1, obeys) {
                (Rule1Mode::Strict, false) => {
                    pool.push((transition.rank(), key, anchor.clone()));
                    filtered.push((anchor, RejectedBy::PronominalCb));
                }
                (Rule1Mode::Strict, true) => passers.push((transition.rank(), false, key, anchor)),
                (Rule1Mode::Preference, obeys) => {
                    passers.push((transition.rank(), !obeys, key, anchor))
                }
            }
        }
    }
    if !passers.is_empty() {
        passers.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
        let best_rank = passers[0].0;
        let ambiguous = passers.iter().filter(|p| p.0 == best_rank).count() >= 2;
        let (_, violation, _, anchor) = passers.swap_remove(0);
        return Ok(Acceptance {
            anchor,
            generated,
            filtered,
            ambiguous,
            rule1_violation: violation,
        });
    }
    if pool.is_empty() {
        return Err(Error::Contract(
            "no anchor passed the center-rank filter; the NIL group should have".into(),
        ));
    }
    pool.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    let best_rank = pool[0].0;
    let ambiguous = pool.iter().filter(|p| p.0 == best_rank).count() >= 2;
    let (_, _, anchor) = pool.swap_remove(0);
    Ok(Acceptance {
        anchor,
        generated,
        filtered,
        ambiguous,
        rule1_violation: true,
    })
}

fn weigh_with(
    prev: &CenteringState,
    b: &BoundSet,
    cb: Option<&EntityId>,
    transition: Transition,
) -> (Anchor, AnchorKey) {
    let (mut anchor, key) = weigh(prev, b, cb, transition);
    anchor.transition = transition;
    (anchor, key)
}

/// Resolve one non-prompt utterance against the previous centering state,
/// then fold the accepted interpretation into the cache: retrieval already
/// happened during expansion, so the update step touches this utterance's
/// propositions first and then its Cf entities from lowest rank to highest,
/// leaving the Cp as the most recent item.
pub fn resolve_utterance(
    u: &Utterance,
    d: &Discourse,
    prev: &CenteringState,
    cache: &mut CacheState,
    memory: &mut MainMemory,
    config: &EngineConfig,
) -> Result<CenteringResult> {
    if u.is_prompt {
        return Err(Error::Contract(format!(
            "utterance {} is a prompt; the prior state carries over unchanged",
            u.index
        )));
    }
    let mut events: Vec<RetrievalEvent> = Vec::new();
    let slots = expansion_slots(u, d, prev, cache, memory, config, &mut events)?;
    let marker_list: Vec<ReferenceMarker> = slots.iter().map(|s| s.marker.clone()).collect();
    let pronouns: Vec<&ReferenceMarker> = marker_list
        .iter()
        .filter(|m| m.form.is_pronominal() && m.agreement.person == 3)
        .collect();
    let bounds = match config.mode {
        EngineMode::Interleaved => enumerate_bindings(&slots, true, &marker_list, &config.ranking)?,
        EngineMode::Exhaustive => {
            // The cross product ignores contraindexing (those anchors are
            // post-filtered), but a pronoun left with no candidate by
            // blocking yields an unbound reading that only shows up under
            // honoring; fold those in so both modes weigh the same
            // interpretations.
            let mut all = enumerate_bindings(&slots, false, &marker_list, &config.ranking)?;
            for b in enumerate_bindings(&slots, true, &marker_list, &config.ranking)? {
                if !all
                    .iter()
                    .any(|x| x.bindings == b.bindings && x.positions == b.positions)
                {
                    all.push(b);
                }
            }
            all
        }
    };
    let acceptance = match config.mode {
        EngineMode::Interleaved => accept_interleaved(prev, &bounds, &pronouns, config)?,
        EngineMode::Exhaustive => accept_exhaustive(prev, &slots, &bounds, &pronouns, config)?,
    };

    for p in &u.propositions {
        if cache.contains(&p.id) {
            cache.access(&p.id)?;
        } else {
            cache.insert(
                memory,
                vec![CacheItem::proposition(
                    p.id.as_str(),
                    p.predicate.as_str(),
                    p.args.clone(),
                )],
            )?;
        }
    }
    for e in acceptance.anchor.cf.iter().rev() {
        if cache.contains(e.as_str()) {
            cache.access(e.as_str())?;
        } else {
            let Some(ent) = d.entity(e) else {
                return Err(Error::Structure(format!(
                    "cf entity {e} is not registered in the discourse"
                )));
            };
            cache.insert(
                memory,
                vec![CacheItem::entity(
                    e.as_str(),
                    ent.agreement,
                    ent.selectional_tags.clone(),
                )],
            )?;
        }
    }

    let state = CenteringState {
        utterance: u.index,
        cb: acceptance.anchor.cb.clone(),
        cf: acceptance.anchor.cf.clone(),
        transition: acceptance.anchor.transition,
    };
    Ok(CenteringResult {
        state,
        bindings: acceptance.anchor.bindings,
        anchors_generated: acceptance.generated,
        anchors_filtered: acceptance.filtered,
        ambiguous: acceptance.ambiguous,
        rule1_violation: acceptance.rule1_violation,
        retrieval_events: events,
        mode: config.mode,
        cache_after: cache.snapshot().iter().map(|it| it.id.clone()).collect(),
    })
}

/// Process a discourse front to back. Prompts inherit the state of their
/// predecessor without a result row; everything else resolves against the
/// state of its previous utterance, which subordination overrides and prompt
/// skipping may place further back than the linear predecessor.
pub fn process_discourse(d: &Discourse, config: &EngineConfig) -> Result<DiscourseRun> {
    let mut cache = CacheState::new(config.cache_capacity)?;
    let mut memory = MainMemory::default();
    let mut state_by_index: BTreeMap<usize, CenteringState> = BTreeMap::new();
    let mut results = Vec::new();
    for u in &d.utterances {
        let prev = match previous_utterance(u, d) {
            Some(p) => state_by_index
                .get(&p.index)
                .cloned()
                .unwrap_or_else(CenteringState::initial),
            None => CenteringState::initial(),
        };
        if u.is_prompt {
            let mut inherited = prev;
            inherited.utterance = u.index;
            state_by_index.insert(u.index, inherited);
            continue;
        }
        let r = resolve_utterance(u, d, &prev, &mut cache, &mut memory, config)?;
        state_by_index.insert(u.index, r.state.clone());
        results.push(r);
    }
    Ok(DiscourseRun {
        results,
        state_by_index,
        cache,
        memory,
    })
}
