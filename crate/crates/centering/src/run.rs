//! Whole-corpus processing. Discourses are independent, so the corpus maps
//! over them in parallel when the `parallel` feature is on; the sequential
//! path is always compiled and is what the feature-off build uses.

use crate::corpus::{
    emit_annotations, transition_distribution, CorpusFile, DistributionTable, TablePartition,
};
use crate::engine::{process_discourse, DiscourseRun, EngineConfig};
use crate::error::Result;

/// One discourse's engine output, tagged with its id. Corpus order is
/// preserved regardless of scheduling.
pub struct CorpusRun {
    pub discourse: String,
    pub run: DiscourseRun,
}

/// Sequential mapping, available under every feature set.
pub fn process_corpus_sequential(
    corpus: &CorpusFile,
    config: &EngineConfig,
) -> Result<Vec<CorpusRun>> {
    corpus
        .discourses
        .iter()
        .map(|d| {
            Ok(CorpusRun {
                discourse: d.id.clone(),
                run: process_discourse(d, config)?,
            })
        })
        .collect()
}

#[cfg(feature = "parallel")]
pub fn process_corpus(corpus: &CorpusFile, config: &EngineConfig) -> Result<Vec<CorpusRun>> {
    use rayon::prelude::*;
    corpus
        .discourses
        .par_iter()
        .map(|d| {
            Ok(CorpusRun {
                discourse: d.id.clone(),
                run: process_discourse(d, config)?,
            })
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn process_corpus(corpus: &CorpusFile, config: &EngineConfig) -> Result<Vec<CorpusRun>> {
    process_corpus_sequential(corpus, config)
}

/// Aggregate the two transition rows over a whole corpus.
pub fn corpus_distribution(
    corpus: &CorpusFile,
    runs: &[CorpusRun],
) -> (DistributionTable, DistributionTable) {
    let mut initial = DistributionTable::new(TablePartition::SegmentInitial);
    let mut other = DistributionTable::new(TablePartition::Other);
    for cr in runs {
        let Some(d) = corpus.discourses.iter().find(|d| d.id == cr.discourse) else {
            continue;
        };
        let (i, o) = transition_distribution(d, &cr.run.results);
        initial.absorb(&i);
        other.absorb(&o);
    }
    (initial, other)
}

/// Annotation lines for every discourse, in corpus order.
pub fn emit_corpus_annotations(
    corpus: &CorpusFile,
    runs: &[CorpusRun],
    trace: bool,
) -> Result<String> {
    let mut out = String::new();
    for cr in runs {
        let Some(d) = corpus.discourses.iter().find(|d| d.id == cr.discourse) else {
            continue;
        };
        out.push_str(&emit_annotations(d, &cr.run, trace)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::random_corpus;

    #[test]
    fn parallel_and_sequential_paths_agree() {
        let corpus = random_corpus(19, 12);
        let config = EngineConfig::default();
        let par = process_corpus(&corpus, &config).unwrap();
        let seq = process_corpus_sequential(&corpus, &config).unwrap();
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.discourse, b.discourse);
            assert_eq!(a.run.results.len(), b.run.results.len());
            for (ra, rb) in a.run.results.iter().zip(&b.run.results) {
                assert_eq!(ra.state, rb.state);
                assert_eq!(ra.bindings, rb.bindings);
            }
        }
        let ann_a = emit_corpus_annotations(&corpus, &par, false).unwrap();
        let ann_b = emit_corpus_annotations(&corpus, &seq, false).unwrap();
        assert_eq!(ann_a, ann_b);
    }

    #[test]
    fn corpus_rows_absorb_every_resolved_utterance() {
        let corpus = random_corpus(23, 8);
        let runs = process_corpus(&corpus, &EngineConfig::default()).unwrap();
        let resolved: usize = runs.iter().map(|r| r.run.results.len()).sum();
        let (initial, other) = corpus_distribution(&corpus, &runs);
        assert_eq!(initial.total + other.total, resolved);
        assert_eq!(
            initial.counts.values().sum::<usize>() + other.counts.values().sum::<usize>(),
            resolved
        );
    }
}
