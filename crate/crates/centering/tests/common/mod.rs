//! Shared helpers for the integration suites: fixture loading and the
//! independent reference implementations the engine is checked against.

use std::collections::BTreeSet;
use std::path::PathBuf;

use centering::{CacheOp, CorpusFile, Discourse};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> CorpusFile {
    centering::parse_corpus(&fixture_path(name))
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn single_discourse(name: &str) -> Discourse {
    let corpus = load_fixture(name);
    assert_eq!(corpus.discourses.len(), 1, "{name} should hold one discourse");
    corpus.discourses.into_iter().next().unwrap()
}

/// Reference model of the bounded store: a flat recency list with a retained
/// set, evicting the least recently stamped unretained id. Written against
/// the operation semantics alone, not against the cache implementation.
pub struct LruSim {
    capacity: usize,
    clock: u64,
    resident: Vec<(String, u64)>,
    retained: BTreeSet<String>,
    pub memory: BTreeSet<String>,
}

impl LruSim {
    pub fn new(capacity: usize) -> Self {
        LruSim {
            capacity,
            clock: 0,
            resident: Vec::new(),
            retained: BTreeSet::new(),
            memory: BTreeSet::new(),
        }
    }

    fn stamp(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn contents(&self) -> BTreeSet<String> {
        self.resident.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn retained(&self) -> &BTreeSet<String> {
        &self.retained
    }

    pub fn len(&self) -> usize {
        self.resident.len()
    }

    fn touch(&mut self, id: &str) {
        let s = self.stamp();
        if let Some(slot) = self.resident.iter_mut().find(|(i, _)| i == id) {
            slot.1 = s;
        }
    }

    pub fn apply(&mut self, op: &CacheOp) {
        match op {
            CacheOp::Access(id) => {
                // Misses are dropped, mirroring the driver.
                if self.contents().contains(id) {
                    self.touch(id);
                }
            }
            CacheOp::Retain(id, on) => {
                if self.contents().contains(id) {
                    if *on {
                        self.retained.insert(id.clone());
                    } else {
                        self.retained.remove(id);
                    }
                }
            }
            CacheOp::Insert(ids) => {
                for id in ids {
                    if self.contents().contains(id) {
                        self.touch(id);
                        continue;
                    }
                    let s = self.stamp();
                    self.memory.remove(id);
                    self.resident.push((id.clone(), s));
                    while self.resident.len() > self.capacity {
                        let victim = self
                            .resident
                            .iter()
                            .filter(|(i, _)| !self.retained.contains(i))
                            .min_by_key(|(_, s)| *s)
                            .map(|(i, _)| i.clone())
                            .expect("an unretained resident must exist");
                        let pos = self.resident.iter().position(|(i, _)| *i == victim).unwrap();
                        let (evicted, _) = self.resident.remove(pos);
                        self.memory.insert(evicted);
                    }
                }
            }
        }
    }
}

/// Count transitions per partition straight off the results, bypassing the
/// table type entirely.
pub fn recount_rows(
    d: &Discourse,
    results: &[centering::CenteringResult],
) -> ([usize; 5], [usize; 5]) {
    let now_initial: BTreeSet<usize> = centering::detect_boundaries(d)
        .into_iter()
        .filter(|b| b.evidence.contains(&centering::BoundaryEvidence::CueNow))
        .map(|b| b.before)
        .collect();
    let mut initial = [0usize; 5];
    let mut other = [0usize; 5];
    for r in results {
        let slot = (r.state.transition.rank() - 1) as usize;
        if now_initial.contains(&r.state.utterance) {
            initial[slot] += 1;
        } else {
            other[slot] += 1;
        }
    }
    (initial, other)
}
