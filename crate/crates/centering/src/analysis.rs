//! Return-pop analytics: how often the pronoun opening a pop competes with
//! other entities, under three successively stricter cue definitions, and
//! how often an informationally redundant restatement stands in for a cue.
//!
//! Everything here reads immutable processing results; nothing feeds back
//! into resolution.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::engine::{process_discourse, CenteringResult, EngineConfig};
use crate::error::{Error, Result};
use crate::model::{
    BoundaryRelation, Discourse, DiscourseEntity, EntityId, Prominence, ReferenceMarker,
    SegmentBoundary, Utterance,
};

/// How much of a pronoun's context the retrieval cue is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompetitionMode {
    /// Gender and number alone.
    AgreementOnly,
    /// Plus the verb frame's selectional requirements.
    PlusSelectional,
    /// Plus requirements the dialogue itself established.
    PlusDiscourseSelectional,
}

/// The three competing-antecedent sets for one pronoun. Strictly nested:
/// each mode only ever removes candidates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetingSets {
    pub agreement_only: BTreeSet<EntityId>,
    pub plus_selectional: BTreeSet<EntityId>,
    pub plus_discourse_selectional: BTreeSet<EntityId>,
}

impl CompetingSets {
    pub fn chain_holds(&self) -> bool {
        self.plus_discourse_selectional
            .is_subset(&self.plus_selectional)
            && self.plus_selectional.is_subset(&self.agreement_only)
    }
}

/// Adequacy report for one return pop.
#[derive(Debug, Clone, Serialize)]
pub struct PopReport {
    pub boundary: SegmentBoundary,
    /// First third-person pronominal marker of the pop-opening utterance;
    /// absent when the pop is carried by a restatement alone.
    pub pronoun: Option<ReferenceMarker>,
    pub competing: CompetingSets,
    /// Index of the most recent prior utterance sharing propositional
    /// content with the pop-opening utterance.
    pub iru: Option<usize>,
    pub adequate_cue: bool,
    /// Competitors that never served as the center, when the strictest cue
    /// still leaves real competition.
    pub prominence_note: Option<Vec<EntityId>>,
}

/// Entities that could be what the pronoun means, as far as the given cue
/// definition can tell. The true antecedent is a member too; ambiguity means
/// the set has at least two elements.
pub fn competing_antecedents(
    m: &ReferenceMarker,
    registry: &[DiscourseEntity],
    mode: CompetitionMode,
) -> BTreeSet<EntityId> {
    let required = match mode {
        CompetitionMode::AgreementOnly => BTreeSet::new(),
        CompetitionMode::PlusSelectional => m.selectional_tags.clone(),
        CompetitionMode::PlusDiscourseSelectional => m.required_tags(),
    };
    registry
        .iter()
        .filter(|e| m.agreement.compatible(&e.agreement))
        .filter(|e| e.satisfies(&required))
        .map(|e| e.id.clone())
        .collect()
}

/// The most recent prior utterance restating propositional content of `u`:
/// a shared tag id with identical predicate and arguments. Paraphrase
/// detection is out of scope; annotation gives paraphrases the same tag id.
/// Never matches `u` itself.
pub fn detect_iru<'a>(u: &Utterance, history: &'a [Utterance]) -> Option<&'a Utterance> {
    history
        .iter()
        .rev()
        .filter(|h| h.index != u.index)
        .find(|h| shares_proposition(u, h))
}

fn shares_proposition(a: &Utterance, b: &Utterance) -> bool {
    a.propositions.iter().any(|p| {
        b.propositions
            .iter()
            .any(|q| p.id == q.id && p.predicate == q.predicate && p.args == q.args)
    })
}

/// Was the entity ever the center up to (not including) the boundary? The
/// annotation can assert it outright; otherwise the processing results
/// decide.
fn prominent(
    e: &EntityId,
    d: &Discourse,
    results: &[CenteringResult],
    before: usize,
) -> bool {
    if d.entity(e)
        .is_some_and(|ent| ent.prominence == Prominence::WasCb)
    {
        return true;
    }
    results
        .iter()
        .any(|r| r.state.utterance < before && r.state.cb.as_ref() == Some(e))
}

/// Assemble the adequacy report for one return pop. A cue is adequate when
/// the strictest competing set has at most one member or a restatement
/// carries the content back; with `prominence_gates` set, competitors that
/// were never the center are not counted against adequacy.
pub fn classify_return_pop(
    b: &SegmentBoundary,
    d: &Discourse,
    results: &[CenteringResult],
    prominence_gates: bool,
) -> Result<PopReport> {
    if b.relation != BoundaryRelation::ReturnPop {
        return Err(Error::Contract(format!(
            "boundary before utterance {} is not a return pop",
            b.before
        )));
    }
    let Some(u) = d.utterance(b.before) else {
        return Err(Error::Structure(format!(
            "boundary names utterance {} which does not exist",
            b.before
        )));
    };
    let pronoun = u
        .markers
        .iter()
        .find(|m| m.form.is_pronominal() && m.agreement.person == 3 && !m.pleonastic)
        .cloned();
    let history: Vec<Utterance> = d
        .utterances
        .iter()
        .filter(|h| h.index < b.before)
        .cloned()
        .collect();
    let iru = detect_iru(u, &history).map(|h| h.index);
    let competing = match &pronoun {
        Some(m) => CompetingSets {
            agreement_only: competing_antecedents(m, &d.entities, CompetitionMode::AgreementOnly),
            plus_selectional: competing_antecedents(m, &d.entities, CompetitionMode::PlusSelectional),
            plus_discourse_selectional: competing_antecedents(
                m,
                &d.entities,
                CompetitionMode::PlusDiscourseSelectional,
            ),
        },
        None => CompetingSets {
            agreement_only: BTreeSet::new(),
            plus_selectional: BTreeSet::new(),
            plus_discourse_selectional: BTreeSet::new(),
        },
    };
    let strictest = &competing.plus_discourse_selectional;
    let never_prominent: Vec<EntityId> = strictest
        .iter()
        .filter(|e| !prominent(e, d, results, b.before))
        .cloned()
        .collect();
    let prominence_note = if strictest.len() >= 2 && !never_prominent.is_empty() {
        Some(never_prominent.clone())
    } else {
        None
    };
    let effective = if prominence_gates {
        strictest.len() - never_prominent.len()
    } else {
        strictest.len()
    };
    let adequate_cue = effective <= 1 || iru.is_some();
    Ok(PopReport {
        boundary: b.clone(),
        pronoun,
        competing,
        iru,
        adequate_cue,
        prominence_note,
    })
}

/// Survey table over every annotated return pop in a corpus.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PopSurvey {
    pub total: usize,
    /// Pops whose pronoun has agreement-level competition (two or more
    /// matching entities) vs the rest.
    pub competing: usize,
    pub non_competing: usize,
    pub with_iru: usize,
    pub without_iru: usize,
    /// How many pops still compete as the cue definition tightens.
    pub narrowing: Narrowing,
    pub reports: Vec<PopReport>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Narrowing {
    pub agreement_only: usize,
    pub plus_selectional: usize,
    pub plus_discourse_selectional: usize,
}

/// Process every discourse and classify its annotated return pops. The
/// engine run supplies center history for the prominence check; annotated
/// prominence is honored either way.
pub fn pop_survey(
    discourses: &[Discourse],
    config: &EngineConfig,
    prominence_gates: bool,
) -> Result<PopSurvey> {
    let mut survey = PopSurvey::default();
    for d in discourses {
        let run = process_discourse(d, config)?;
        for b in &d.boundaries {
            if b.relation != BoundaryRelation::ReturnPop {
                continue;
            }
            let report = classify_return_pop(b, d, &run.results, prominence_gates)?;
            survey.total += 1;
            if report.competing.agreement_only.len() >= 2 {
                survey.competing += 1;
            } else {
                survey.non_competing += 1;
            }
            if report.iru.is_some() {
                survey.with_iru += 1;
            } else {
                survey.without_iru += 1;
            }
            if report.competing.agreement_only.len() >= 2 {
                survey.narrowing.agreement_only += 1;
            }
            if report.competing.plus_selectional.len() >= 2 {
                survey.narrowing.plus_selectional += 1;
            }
            if report.competing.plus_discourse_selectional.len() >= 2 {
                survey.narrowing.plus_discourse_selectional += 1;
            }
            survey.reports.push(report);
        }
    }
    Ok(survey)
}
