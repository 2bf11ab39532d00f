//! Bounded model of attentional state: a small cache of discourse items in
//! front of an unbounded main memory.
//!
//! Items are discourse entities and propositions, one cache slot each. The
//! replacement policy is least-recently-used among non-retained items;
//! displacement is silent storage into main memory, never deletion, so the
//! union of cache and memory is conserved across operations. Retrieval pulls
//! items back by cue, trying the most specific cue tier first: a shared
//! proposition (informational redundancy), then agreement plus selectional
//! tags, then agreement alone. A retrieval is adequate when exactly one
//! entity matches at the most specific non-empty tier.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Agreement, EntityId};

pub const DEFAULT_CACHE_CAPACITY: usize = 7;
pub const DEFAULT_RECENCY_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    Entity,
    Proposition,
}

/// One attentional item. Entity items carry agreement and capability tags;
/// proposition items carry predicate and argument ids. The metadata rides
/// along so a displaced item can still be found by cue in main memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheItem {
    pub id: String,
    pub kind: ItemKind,
    #[serde(default)]
    pub agreement: Option<Agreement>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default)]
    pub predicate: Option<String>,
    #[serde(default)]
    pub args: Vec<EntityId>,
    /// Logical clock value of the most recent access.
    pub last_access: u64,
}

impl CacheItem {
    pub fn entity(id: impl Into<String>, agreement: Agreement, tags: BTreeSet<String>) -> Self {
        CacheItem {
            id: id.into(),
            kind: ItemKind::Entity,
            agreement: Some(agreement),
            tags,
            predicate: None,
            args: Vec::new(),
            last_access: 0,
        }
    }

    pub fn proposition(id: impl Into<String>, predicate: impl Into<String>, args: Vec<EntityId>) -> Self {
        CacheItem {
            id: id.into(),
            kind: ItemKind::Proposition,
            agreement: None,
            tags: BTreeSet::new(),
            predicate: Some(predicate.into()),
            args,
            last_access: 0,
        }
    }
}

/// Bounded attentional cache. Occupancy never exceeds `capacity`; retained
/// items are immune to displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheState {
    pub capacity: usize,
    items: Vec<CacheItem>,
    retained: BTreeSet<String>,
    clock: u64,
}

/// Unbounded store behind the cache. Holds every item ever displaced and not
/// since retrieved.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MainMemory {
    items: Vec<CacheItem>,
}

impl MainMemory {
    pub fn new() -> Self {
        MainMemory::default()
    }

    pub fn store(&mut self, item: CacheItem) {
        self.items.retain(|it| it.id != item.id);
        self.items.push(item);
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.iter().any(|it| it.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&CacheItem> {
        self.items.iter().find(|it| it.id == id)
    }

    pub fn remove(&mut self, id: &str) -> Option<CacheItem> {
        let pos = self.items.iter().position(|it| it.id == id)?;
        Some(self.items.remove(pos))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.items.iter().map(|it| it.id.clone()).collect()
    }

    /// Stored items, most recently displaced first.
    pub fn by_recency(&self) -> Vec<&CacheItem> {
        let mut v: Vec<&CacheItem> = self.items.iter().collect();
        v.sort_by(|a, b| b.last_access.cmp(&a.last_access).then(a.id.cmp(&b.id)));
        v
    }
}

/// Outcome of an insert batch: what got displaced into memory, and which of
/// the batch's own items spilled straight through because every resident
/// item was retained.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InsertOutcome {
    pub displaced: Vec<String>,
    pub spilled: Vec<String>,
}

/// Cue tiers in decreasing specificity. The scan order is configurable but
/// defaults to this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetrievalTier {
    Iru,
    AgreementSelectional,
    Agreement,
}

pub fn default_tier_order() -> Vec<RetrievalTier> {
    vec![
        RetrievalTier::Iru,
        RetrievalTier::AgreementSelectional,
        RetrievalTier::Agreement,
    ]
}

/// Retrieval cue assembled from a pronoun and its utterance: agreement
/// features, required tags from the verb frame and the dialogue, and the ids
/// of any propositions the utterance shares with earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrievalCue {
    #[serde(default)]
    pub agreement: Option<Agreement>,
    #[serde(default)]
    pub selectional_tags: BTreeSet<String>,
    #[serde(default)]
    pub predicates: BTreeSet<String>,
    #[serde(default)]
    pub proposition_ids: BTreeSet<String>,
}

impl RetrievalCue {
    pub fn is_empty(&self) -> bool {
        self.agreement.is_none()
            && self.selectional_tags.is_empty()
            && self.predicates.is_empty()
            && self.proposition_ids.is_empty()
    }
}

/// Record of one retrieval attempt. `retrieved` lists items moved from
/// memory into the cache; `displaced` lists what that re-insertion pushed
/// out; `candidates` are the entity ids that matched the deciding tier, most
/// recent first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalEvent {
    pub at_utterance: usize,
    pub cue: RetrievalCue,
    pub tier: Option<RetrievalTier>,
    pub retrieved: Vec<String>,
    pub displaced: Vec<String>,
    pub candidates: Vec<EntityId>,
    pub adequate: bool,
}

impl CacheState {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("cache capacity must be at least 1".into()));
        }
        Ok(CacheState {
            capacity,
            items: Vec::new(),
            retained: BTreeSet::new(),
            clock: 0,
        })
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.iter().any(|it| it.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&CacheItem> {
        self.items.iter().find(|it| it.id == id)
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.items.iter().map(|it| it.id.clone()).collect()
    }

    pub fn retained(&self) -> &BTreeSet<String> {
        &self.retained
    }

    /// Refresh an item's recency. Missing ids are a miss signal; the caller
    /// decides whether to fall through to retrieval.
    pub fn access(&mut self, id: &str) -> Result<()> {
        let clock = self.tick();
        match self.items.iter_mut().find(|it| it.id == id) {
            Some(it) => {
                it.last_access = clock;
                Ok(())
            }
            None => Err(Error::CacheMiss(id.to_string())),
        }
    }

    /// Toggle an item's retention pin. Retained items are immune to
    /// displacement until released.
    pub fn retain(&mut self, id: &str, on: bool) -> Result<()> {
        if !self.contains(id) {
            return Err(Error::CacheMiss(id.to_string()));
        }
        if on {
            self.retained.insert(id.to_string());
        } else {
            self.retained.remove(id);
        }
        Ok(())
    }

    /// Insert items that are not already resident, displacing
    /// least-recently-used non-retained items into memory as needed. A new
    /// item that cannot stay because everything older is retained spills to
    /// memory immediately; the outcome flags it.
    pub fn insert(
        &mut self,
        memory: &mut MainMemory,
        new_items: Vec<CacheItem>,
    ) -> Result<InsertOutcome> {
        let mut batch_ids: BTreeSet<String> = BTreeSet::new();
        for it in &new_items {
            if self.contains(&it.id) {
                return Err(Error::Contract(format!(
                    "insert of resident item {}; access it instead",
                    it.id
                )));
            }
            if !batch_ids.insert(it.id.clone()) {
                return Err(Error::Contract(format!(
                    "duplicate item {} in one insert batch",
                    it.id
                )));
            }
        }
        let mut outcome = InsertOutcome::default();
        for mut it in new_items {
            it.last_access = self.tick();
            memory.remove(&it.id);
            self.items.push(it);
            while self.items.len() > self.capacity {
                let victim = self
                    .items
                    .iter()
                    .filter(|c| !self.retained.contains(&c.id))
                    .min_by(|a, b| a.last_access.cmp(&b.last_access))
                    .map(|c| c.id.clone());
                match victim {
                    Some(vid) => {
                        let pos = self.items.iter().position(|c| c.id == vid).unwrap();
                        let evicted = self.items.remove(pos);
                        if batch_ids.contains(&evicted.id) {
                            outcome.spilled.push(evicted.id.clone());
                        } else {
                            outcome.displaced.push(evicted.id.clone());
                        }
                        memory.store(evicted);
                    }
                    None => {
                        // Everything resident is retained, including more
                        // items than capacity allows; this cannot happen
                        // because retention requires residency and residency
                        // is bounded.
                        return Err(Error::Structure(
                            "cache over capacity with no displaceable item".into(),
                        ));
                    }
                }
            }
        }
        Ok(outcome)
    }

    /// Retrieve items from main memory by cue. Tiers are scanned in the given
    /// order; the first tier with any match decides the outcome. Matched
    /// memory items move into the cache (possibly displacing others), matched
    /// resident items are merely accessed. An event is always produced, empty
    /// and inadequate when nothing matches anywhere.
    pub fn retrieve(
        &mut self,
        memory: &mut MainMemory,
        cue: &RetrievalCue,
        tier_order: &[RetrievalTier],
        at_utterance: usize,
    ) -> Result<RetrievalEvent> {
        if cue.is_empty() {
            return Err(Error::Contract("retrieval cue with no content".into()));
        }
        let mut event = RetrievalEvent {
            at_utterance,
            cue: cue.clone(),
            tier: None,
            retrieved: Vec::new(),
            displaced: Vec::new(),
            candidates: Vec::new(),
            adequate: false,
        };
        for &tier in tier_order {
            let (candidates, item_ids) = self.match_tier(memory, cue, tier);
            if candidates.is_empty() {
                continue;
            }
            event.tier = Some(tier);
            event.candidates = candidates;
            let mut to_insert = Vec::new();
            for id in item_ids {
                if self.contains(&id) {
                    self.access(&id)?;
                } else if let Some(item) = memory.remove(&id) {
                    to_insert.push(item);
                }
            }
            event.retrieved = to_insert.iter().map(|it| it.id.clone()).collect();
            let outcome = self.insert(memory, to_insert)?;
            event.displaced = outcome.displaced;
            event.adequate = event.candidates.len() == 1;
            return Ok(event);
        }
        Ok(event)
    }

    /// Candidate entities and the full item set matched by one tier, without
    /// mutating anything. Candidates come back most recent first.
    fn match_tier(
        &self,
        memory: &MainMemory,
        cue: &RetrievalCue,
        tier: RetrievalTier,
    ) -> (Vec<EntityId>, Vec<String>) {
        let mut scored: Vec<(u64, EntityId)> = Vec::new();
        let mut item_ids: Vec<String> = Vec::new();
        let everywhere = |id: &str| -> Option<&CacheItem> { memory.get(id).or_else(|| self.get(id)) };
        match tier {
            RetrievalTier::Iru => {
                if cue.proposition_ids.is_empty() && cue.predicates.is_empty() {
                    return (Vec::new(), Vec::new());
                }
                // Only propositions that fell out of the cache make a
                // retrieval cue; a resident proposition means the content is
                // already in attention.
                for prop in memory.by_recency() {
                    if prop.kind != ItemKind::Proposition {
                        continue;
                    }
                    let by_id = cue.proposition_ids.contains(&prop.id);
                    let by_pred = prop
                        .predicate
                        .as_ref()
                        .is_some_and(|p| cue.predicates.contains(p));
                    if !by_id && !by_pred {
                        continue;
                    }
                    item_ids.push(prop.id.clone());
                    for arg in &prop.args {
                        let Some(item) = everywhere(arg.as_str()) else {
                            continue;
                        };
                        if let (Some(cue_agr), Some(item_agr)) = (&cue.agreement, &item.agreement) {
                            if !cue_agr.compatible(item_agr) {
                                continue;
                            }
                        }
                        if !scored.iter().any(|(_, e)| e == arg) {
                            scored.push((item.last_access, arg.clone()));
                            item_ids.push(item.id.clone());
                        }
                    }
                }
            }
            RetrievalTier::AgreementSelectional => {
                let Some(cue_agr) = &cue.agreement else {
                    return (Vec::new(), Vec::new());
                };
                if cue.selectional_tags.is_empty() {
                    return (Vec::new(), Vec::new());
                }
                for item in memory.by_recency() {
                    if item.kind != ItemKind::Entity {
                        continue;
                    }
                    let Some(agr) = &item.agreement else { continue };
                    if cue_agr.compatible(agr) && cue.selectional_tags.is_subset(&item.tags) {
                        scored.push((item.last_access, EntityId::new(item.id.clone())));
                        item_ids.push(item.id.clone());
                    }
                }
            }
            RetrievalTier::Agreement => {
                let Some(cue_agr) = &cue.agreement else {
                    return (Vec::new(), Vec::new());
                };
                for item in memory.by_recency() {
                    if item.kind != ItemKind::Entity {
                        continue;
                    }
                    let Some(agr) = &item.agreement else { continue };
                    if cue_agr.compatible(agr) {
                        scored.push((item.last_access, EntityId::new(item.id.clone())));
                        item_ids.push(item.id.clone());
                    }
                }
            }
        }
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        item_ids.dedup();
        (scored.into_iter().map(|(_, e)| e).collect(), item_ids)
    }

    /// Resident items in recency order, most recent first. Clock values are
    /// unique, so the order is total.
    pub fn snapshot(&self) -> Vec<&CacheItem> {
        let mut v: Vec<&CacheItem> = self.items.iter().collect();
        v.sort_by(|a, b| b.last_access.cmp(&a.last_access));
        v
    }
}

/// Linear recency: utterance `i` is linearly recent for a later utterance
/// `j` when at most `window` units separate them.
pub fn is_linearly_recent(i: usize, j: usize, window: usize) -> Result<bool> {
    if i >= j {
        return Err(Error::Contract(format!(
            "linear recency needs i < j, got i={i}, j={j}"
        )));
    }
    Ok(j - i <= window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gender, Number};

    fn ent(id: &str) -> CacheItem {
        CacheItem::entity(id, Agreement::new(Gender::F, Number::Sg), BTreeSet::new())
    }

    #[test]
    fn insert_displaces_least_recent_into_memory() {
        let mut cache = CacheState::new(2).unwrap();
        let mut memory = MainMemory::new();
        cache.insert(&mut memory, vec![ent("a"), ent("b")]).unwrap();
        cache.access("a").unwrap();
        let out = cache.insert(&mut memory, vec![ent("c")]).unwrap();
        assert_eq!(out.displaced, vec!["b".to_string()]);
        assert!(cache.contains("a") && cache.contains("c"));
        assert!(memory.contains("b"));
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn retained_items_survive_displacement() {
        let mut cache = CacheState::new(2).unwrap();
        let mut memory = MainMemory::new();
        cache.insert(&mut memory, vec![ent("a"), ent("b")]).unwrap();
        cache.retain("a", true).unwrap();
        cache.access("b").unwrap();
        let out = cache.insert(&mut memory, vec![ent("c")]).unwrap();
        // "a" is the LRU but is pinned; "b" goes instead.
        assert_eq!(out.displaced, vec!["b".to_string()]);
        assert!(cache.contains("a"));
    }

    #[test]
    fn released_item_is_displaceable_again() {
        let mut cache = CacheState::new(2).unwrap();
        let mut memory = MainMemory::new();
        cache.insert(&mut memory, vec![ent("a"), ent("b")]).unwrap();
        cache.retain("a", true).unwrap();
        cache.retain("a", false).unwrap();
        cache.access("b").unwrap();
        let out = cache.insert(&mut memory, vec![ent("c")]).unwrap();
        assert_eq!(out.displaced, vec!["a".to_string()]);
    }

    #[test]
    fn insert_with_everything_retained_spills_the_new_item() {
        let mut cache = CacheState::new(2).unwrap();
        let mut memory = MainMemory::new();
        cache.insert(&mut memory, vec![ent("a"), ent("b")]).unwrap();
        cache.retain("a", true).unwrap();
        cache.retain("b", true).unwrap();
        let out = cache.insert(&mut memory, vec![ent("c")]).unwrap();
        assert!(out.displaced.is_empty());
        assert_eq!(out.spilled, vec!["c".to_string()]);
        assert!(memory.contains("c"));
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn inserting_resident_id_is_a_contract_error() {
        let mut cache = CacheState::new(2).unwrap();
        let mut memory = MainMemory::new();
        cache.insert(&mut memory, vec![ent("a")]).unwrap();
        assert!(cache.insert(&mut memory, vec![ent("a")]).is_err());
    }

    #[test]
    fn access_miss_is_signalled() {
        let mut cache = CacheState::new(2).unwrap();
        assert!(matches!(cache.access("ghost"), Err(Error::CacheMiss(_))));
    }

    #[test]
    fn snapshot_is_recency_descending() {
        let mut cache = CacheState::new(3).unwrap();
        let mut memory = MainMemory::new();
        cache
            .insert(&mut memory, vec![ent("a"), ent("b"), ent("c")])
            .unwrap();
        cache.access("a").unwrap();
        let order: Vec<&str> = cache.snapshot().iter().map(|it| it.id.as_str()).collect();
        assert_eq!(order, vec!["a", "c", "b"]);
    }

    #[test]
    fn retrieval_by_agreement_tier_restores_item_and_reports_candidates() {
        let mut cache = CacheState::new(1).unwrap();
        let mut memory = MainMemory::new();
        cache.insert(&mut memory, vec![ent("daughter")]).unwrap();
        // Push the daughter out.
        cache
            .insert(
                &mut memory,
                vec![CacheItem::entity(
                    "name",
                    Agreement::new(Gender::N, Number::Sg),
                    BTreeSet::new(),
                )],
            )
            .unwrap();
        assert!(!cache.contains("daughter"));
        let cue = RetrievalCue {
            agreement: Some(Agreement::new(Gender::F, Number::Sg)),
            ..Default::default()
        };
        let event = cache
            .retrieve(&mut memory, &cue, &default_tier_order(), 8)
            .unwrap();
        assert_eq!(event.tier, Some(RetrievalTier::Agreement));
        assert_eq!(event.retrieved, vec!["daughter".to_string()]);
        assert!(event.adequate);
        assert!(cache.contains("daughter"));
        assert_eq!(event.displaced, vec!["name".to_string()]);
    }

    #[test]
    fn retrieval_with_no_match_returns_empty_inadequate_event() {
        let mut cache = CacheState::new(2).unwrap();
        let mut memory = MainMemory::new();
        let cue = RetrievalCue {
            agreement: Some(Agreement::new(Gender::M, Number::Sg)),
            ..Default::default()
        };
        let event = cache
            .retrieve(&mut memory, &cue, &default_tier_order(), 1)
            .unwrap();
        assert!(event.retrieved.is_empty());
        assert!(!event.adequate);
        assert_eq!(event.tier, None);
    }

    #[test]
    fn iru_tier_beats_agreement_tier() {
        let mut cache = CacheState::new(1).unwrap();
        let mut memory = MainMemory::new();
        memory.store(CacheItem::entity(
            "boy",
            Agreement::new(Gender::M, Number::Sg),
            BTreeSet::new(),
        ));
        memory.store(CacheItem::entity(
            "man",
            Agreement::new(Gender::M, Number::Sg),
            BTreeSet::new(),
        ));
        memory.store(CacheItem::proposition(
            "p-falls",
            "falls-over",
            vec![EntityId::new("boy")],
        ));
        let cue = RetrievalCue {
            agreement: Some(Agreement::new(Gender::M, Number::Sg)),
            proposition_ids: ["p-falls".to_string()].into(),
            ..Default::default()
        };
        let event = cache
            .retrieve(&mut memory, &cue, &default_tier_order(), 9)
            .unwrap();
        assert_eq!(event.tier, Some(RetrievalTier::Iru));
        assert_eq!(event.candidates, vec![EntityId::new("boy")]);
        assert!(event.adequate);
        // The shared proposition and its argument both came back.
        assert!(event.retrieved.contains(&"p-falls".to_string()));
        assert!(event.retrieved.contains(&"boy".to_string()));
    }

    #[test]
    fn linear_recency_window() {
        assert!(is_linearly_recent(5, 7, 3).unwrap());
        assert!(!is_linearly_recent(1, 7, 3).unwrap());
        assert!(is_linearly_recent(1, 2, 3).unwrap());
        assert!(is_linearly_recent(4, 7, 3).unwrap());
        assert!(!is_linearly_recent(3, 7, 3).unwrap());
        assert!(is_linearly_recent(7, 7, 3).is_err());
    }
}
