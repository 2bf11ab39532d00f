//! Seeded generators: randomized discourses for cross-checking the two
//! engine modes against each other, and cache operation traces for
//! exercising the bounded store against a reference simulation. Everything
//! here is deterministic under a fixed seed.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cache::{CacheItem, CacheState, MainMemory};
use crate::corpus::{CorpusFile, SCHEMA_VERSION};
use crate::error::Result;
use crate::model::{
    Agreement, Discourse, DiscourseEntity, EntityId, Gender, GramFunction, MarkerForm, Number,
    PropositionTag, ReferenceMarker, Utterance,
};

const NAMES: [&str; 4] = ["Ana", "Ben", "Cora", "Dev"];
const TAGS: [&str; 4] = ["person", "animate", "vehicle", "tool"];
const PREDICATES: [&str; 4] = ["sees", "greets", "fixes", "leaves"];

fn pronoun_surface(a: &Agreement) -> &'static str {
    match (a.number, a.gender) {
        (Number::Pl, _) => "they",
        (_, Gender::M) => "he",
        (_, Gender::F) => "she",
        _ => "it",
    }
}

/// One random discourse: up to 4 entities and up to 8 utterances. The first
/// utterance names everything outright; later ones pronominalize freely, so
/// ambiguity, contraindexed co-arguments, and unresolvable pronouns all
/// occur.
pub fn random_discourse(rng: &mut ChaCha8Rng, id: &str) -> Discourse {
    let n_entities = rng.gen_range(1..=4);
    let entities: Vec<DiscourseEntity> = (0..n_entities)
        .map(|i| {
            let gender = match rng.gen_range(0..3) {
                0 => Gender::F,
                1 => Gender::M,
                _ => Gender::N,
            };
            let number = if rng.gen_bool(0.15) {
                Number::Pl
            } else {
                Number::Sg
            };
            let mut tags = BTreeSet::new();
            for t in TAGS {
                if rng.gen_bool(0.25) {
                    tags.insert(t.to_string());
                }
            }
            DiscourseEntity {
                id: EntityId::new(format!("e{i}")),
                canonical: NAMES[i].to_string(),
                agreement: Agreement::new(gender, number),
                selectional_tags: tags,
                first_mention: None,
                prominence: Default::default(),
            }
        })
        .collect();

    let n_utts = rng.gen_range(1..=8);
    let functions = [
        GramFunction::Subject,
        GramFunction::DirectObject,
        GramFunction::Oblique,
    ];
    let mut utterances = Vec::new();
    for u in 1..=n_utts {
        let n_markers = rng.gen_range(1..=3.min(n_entities.max(1)));
        let mut markers: Vec<ReferenceMarker> = Vec::new();
        for k in 0..n_markers {
            let e = &entities[rng.gen_range(0..n_entities)];
            let pronominal = u > 1 && rng.gen_bool(0.5);
            let mut m = if pronominal {
                ReferenceMarker::new(
                    format!("u{u}m{k}"),
                    pronoun_surface(&e.agreement),
                    MarkerForm::Pronoun,
                    e.agreement.clone(),
                    functions[k],
                )
            } else {
                let mut m = ReferenceMarker::new(
                    format!("u{u}m{k}"),
                    e.canonical.clone(),
                    MarkerForm::ProperName,
                    e.agreement.clone(),
                    functions[k],
                );
                m.entity = Some(e.id.clone());
                m
            };
            // Co-arguments of one predication are usually disjoint in
            // reference; block the pronoun against earlier mentions.
            for prior in &markers {
                let chance = if m.form.is_pronominal() && prior.form.is_pronominal() {
                    0.6
                } else if m.form.is_pronominal() || prior.form.is_pronominal() {
                    0.3
                } else {
                    0.0
                };
                if rng.gen_bool(chance) {
                    m.contraindices.insert(prior.id.clone());
                }
            }
            markers.push(m);
        }
        // Mirror the loader: contraindexing is symmetric.
        let pairs: Vec<(String, String)> = markers
            .iter()
            .flat_map(|m| {
                m.contraindices
                    .iter()
                    .map(|c| (c.clone(), m.id.clone()))
                    .collect::<Vec<_>>()
            })
            .collect();
        for (target, source) in pairs {
            if let Some(t) = markers.iter_mut().find(|m| m.id == target) {
                t.contraindices.insert(source);
            }
        }
        let mut propositions = Vec::new();
        if rng.gen_bool(0.4) {
            let args: Vec<EntityId> = markers
                .iter()
                .filter_map(|m| m.entity.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            propositions.push(PropositionTag {
                id: format!("p{u}"),
                predicate: PREDICATES[rng.gen_range(0..PREDICATES.len())].to_string(),
                args,
            });
        }
        utterances.push(Utterance {
            index: u,
            label: None,
            speaker: None,
            markers,
            propositions,
            cue_words: Vec::new(),
            tense: Default::default(),
            is_prompt: false,
            clarification: false,
            prev_override: None,
        });
    }
    Discourse {
        id: id.to_string(),
        entities,
        utterances,
        boundaries: Vec::new(),
        all_sisters: false,
    }
}

/// A reproducible corpus of random discourses.
pub fn random_corpus(seed: u64, count: usize) -> CorpusFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let discourses = (0..count)
        .map(|i| random_discourse(&mut rng, &format!("gen-{i:03}")))
        .collect();
    CorpusFile {
        version: SCHEMA_VERSION.into(),
        discourses,
    }
}

/// One step of a cache workout.
#[derive(Debug, Clone, PartialEq)]
pub enum CacheOp {
    /// Batch insert; ids already resident are accessed instead, matching
    /// how the engine folds an utterance in.
    Insert(Vec<String>),
    Access(String),
    Retain(String, bool),
}

/// A random operation trace over a small id pool, so accesses frequently
/// hit and retention interacts with displacement.
pub fn random_cache_ops(rng: &mut ChaCha8Rng, len: usize) -> Vec<CacheOp> {
    let pool: Vec<String> = (0..12).map(|i| format!("item-{i:02}")).collect();
    let mut pick = |rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())].clone();
    (0..len)
        .map(|_| match rng.gen_range(0..100) {
            0..=44 => CacheOp::Access(pick(rng)),
            45..=79 => {
                let n = rng.gen_range(1..=4);
                let mut ids = BTreeSet::new();
                while ids.len() < n {
                    ids.insert(pick(rng));
                }
                CacheOp::Insert(ids.into_iter().collect())
            }
            80..=91 => CacheOp::Retain(pick(rng), true),
            _ => CacheOp::Retain(pick(rng), false),
        })
        .collect()
}

/// Drive one op into the store. Accesses and retentions of absent ids are
/// dropped; resident members of an insert batch become accesses. Identical
/// rules are what a reference simulation must apply.
pub fn apply_cache_op(cache: &mut CacheState, memory: &mut MainMemory, op: &CacheOp) -> Result<()> {
    match op {
        CacheOp::Insert(ids) => {
            let mut fresh = Vec::new();
            for id in ids {
                if cache.contains(id) {
                    cache.access(id)?;
                } else {
                    fresh.push(CacheItem::entity(
                        id.clone(),
                        Agreement::new(Gender::Unknown, Number::Sg),
                        BTreeSet::new(),
                    ));
                }
            }
            if !fresh.is_empty() {
                cache.insert(memory, fresh)?;
            }
        }
        CacheOp::Access(id) => {
            if cache.contains(id) {
                cache.access(id)?;
            }
        }
        CacheOp::Retain(id, on) => {
            if cache.contains(id) {
                cache.retain(id, *on)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{process_discourse, EngineConfig};

    #[test]
    fn generation_is_deterministic_under_a_seed() {
        let a = random_corpus(7, 5);
        let b = random_corpus(7, 5);
        assert_eq!(a, b);
        let c = random_corpus(8, 5);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_corpora_survive_the_validating_loader() {
        let corpus = random_corpus(42, 20);
        let text = crate::corpus::emit_corpus(&corpus).unwrap();
        let loaded = crate::corpus::parse_corpus_str(&text).unwrap();
        assert_eq!(loaded.discourses.len(), 20);
    }

    #[test]
    fn generated_discourses_process_under_both_modes() {
        let corpus = random_corpus(11, 10);
        for d in &corpus.discourses {
            let mut config = EngineConfig::default();
            process_discourse(d, &config).unwrap();
            config.mode = crate::engine::EngineMode::Exhaustive;
            process_discourse(d, &config).unwrap();
        }
    }

    #[test]
    fn op_traces_apply_cleanly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ops = random_cache_ops(&mut rng, 200);
        let mut cache = CacheState::new(5).unwrap();
        let mut memory = MainMemory::default();
        for op in &ops {
            apply_cache_op(&mut cache, &mut memory, op).unwrap();
            assert!(cache.len() <= 5);
        }
        assert!(cache.len() + memory.len() > 0);
    }
}
