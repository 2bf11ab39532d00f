//! Core discourse model: utterances, reference markers, discourse entities,
//! centering data structures, and the transition taxonomy.
//!
//! A discourse is a contiguous sequence of utterance units over a registry of
//! discourse entities. Reference markers are pre-annotated NPs; pronouns and
//! zero pronouns are resolved by the engine, full NPs resolve through their
//! gold link or by canonical-string match. Centering state per utterance is a
//! backward-looking center (Cb), a ranked list of forward-looking centers
//! (Cf), and the preferred center (Cp), which is always the head of Cf.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a discourse entity. Unique within one discourse.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(s: impl Into<String>) -> Self {
        EntityId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gender {
    M,
    F,
    N,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Number {
    Sg,
    Pl,
}

/// Morphological agreement bundle. Gender `Unknown` is compatible with
/// anything; number is always annotated and matches strictly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agreement {
    pub gender: Gender,
    pub number: Number,
    #[serde(default = "default_person")]
    pub person: u8,
}

fn default_person() -> u8 {
    3
}

impl Agreement {
    pub fn new(gender: Gender, number: Number) -> Self {
        Agreement {
            gender,
            number,
            person: 3,
        }
    }

    /// True when a pronoun carrying `self` could cospecify an entity carrying
    /// `other`. Unknown gender on either side is a wildcard.
    pub fn compatible(&self, other: &Agreement) -> bool {
        let gender_ok = self.gender == Gender::Unknown
            || other.gender == Gender::Unknown
            || self.gender == other.gender;
        gender_ok && self.number == other.number
    }
}

/// Surface form category of a reference marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerForm {
    Pronoun,
    ZeroPronoun,
    Description,
    ProperName,
    DeicticNp,
}

impl MarkerForm {
    /// Pronouns and zero pronouns are what Rule 1 and the expansion machinery
    /// treat as pronominal.
    pub fn is_pronominal(self) -> bool {
        matches!(self, MarkerForm::Pronoun | MarkerForm::ZeroPronoun)
    }
}

/// Grammatical function of a marker, the primary key for Cf ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramFunction {
    Subject,
    DirectObject,
    IndirectObject,
    Oblique,
    Other,
}

/// Discourse-wide index assigned to each marker: pronominal markers draw from
/// the A series, indefinites from the X series, and everything else is keyed
/// by its surface string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerIndex {
    Pronominal(u32),
    Indefinite(u32),
    Surface(String),
}

impl fmt::Display for MarkerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkerIndex::Pronominal(n) => write!(f, "A{n}"),
            MarkerIndex::Indefinite(n) => write!(f, "X{n}"),
            MarkerIndex::Surface(s) => f.write_str(s),
        }
    }
}

/// One pre-annotated referring expression inside an utterance.
///
/// `selectional_tags` are requirements projected by the verb frame (only some
/// entities can be bolted or ridden); `discourse_tags` are requirements that
/// arise from the dialogue itself (only one boy has been riding a bike). Both
/// sets must be covered by a candidate entity's tags for the candidate to
/// survive expansion; they are kept apart because competing-antecedent
/// analysis applies them in separate modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMarker {
    pub id: String,
    pub surface: String,
    pub form: MarkerForm,
    #[serde(flatten)]
    pub agreement: Agreement,
    pub function: GramFunction,
    #[serde(default)]
    pub selectional_tags: BTreeSet<String>,
    #[serde(default)]
    pub discourse_tags: BTreeSet<String>,
    /// Ids of markers in the same utterance this one cannot cospecify with.
    #[serde(default)]
    pub contraindices: BTreeSet<String>,
    /// Marks an indefinite NP ("an Alfa Romeo"); routes the marker into the
    /// X index series.
    #[serde(default)]
    pub indefinite: bool,
    /// Pleonastic "it" carries no reference. The loader refuses files that
    /// keep such markers; marker creation drops them if one sneaks through.
    #[serde(default)]
    pub pleonastic: bool,
    /// Members of a conjunction group share a tag and are merged into one
    /// composite marker when reference markers are created.
    #[serde(default)]
    pub conjunct_group: Option<String>,
    /// Gold annotation link. Required for non-pronominal markers that have no
    /// canonical-string match; evaluation-only for pronominal markers.
    #[serde(default)]
    pub entity: Option<EntityId>,
    /// 0 for markers of the utterance's own main or coordinate clause, k for
    /// markers folded in from its k-th subordinate clause. Forward-center
    /// ranking sorts by stratum first, so a complex utterance's list is the
    /// main clause's ranking with each subordinate's appended.
    #[serde(default)]
    pub clause_stratum: u32,
    /// Assigned during loading, not part of the file format.
    #[serde(skip)]
    pub index: Option<MarkerIndex>,
}

impl ReferenceMarker {
    pub fn new(
        id: impl Into<String>,
        surface: impl Into<String>,
        form: MarkerForm,
        agreement: Agreement,
        function: GramFunction,
    ) -> Self {
        ReferenceMarker {
            id: id.into(),
            surface: surface.into(),
            form,
            agreement,
            function,
            selectional_tags: BTreeSet::new(),
            discourse_tags: BTreeSet::new(),
            contraindices: BTreeSet::new(),
            indefinite: false,
            pleonastic: false,
            conjunct_group: None,
            entity: None,
            clause_stratum: 0,
            index: None,
        }
    }

    /// Union of verb-frame and dialogue-derived requirements; this is what
    /// pronoun expansion and retrieval-cue construction apply.
    pub fn required_tags(&self) -> BTreeSet<String> {
        self.selectional_tags
            .union(&self.discourse_tags)
            .cloned()
            .collect()
    }
}

/// Registered discourse entity. `selectional_tags` is a capability set; an
/// entity satisfies a marker when the marker's required tags are a subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscourseEntity {
    pub id: EntityId,
    pub canonical: String,
    #[serde(flatten)]
    pub agreement: Agreement,
    #[serde(default)]
    pub selectional_tags: BTreeSet<String>,
    /// First utterance index that mentions the entity; derived at load time
    /// when absent from the file.
    #[serde(default)]
    pub first_mention: Option<usize>,
    #[serde(default)]
    pub prominence: Prominence,
}

impl DiscourseEntity {
    pub fn satisfies(&self, required: &BTreeSet<String>) -> bool {
        required.is_subset(&self.selectional_tags)
    }
}

/// Whether the entity has ever served as a backward-looking center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prominence {
    WasCb,
    #[default]
    NeverCb,
}

/// Proposition annotation: predicate plus entity arguments. Two utterances
/// sharing a tag id (paraphrases are annotated with the same id) stand in the
/// informational-redundancy relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionTag {
    pub id: String,
    pub predicate: String,
    #[serde(default)]
    pub args: Vec<EntityId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tense {
    Present,
    SimplePast,
    PastImperfect,
    Future,
    Unmarked,
}

impl Default for Tense {
    fn default() -> Self {
        Tense::Unmarked
    }
}

/// One utterance unit: a finite main or coordinate clause with any folded-in
/// subordinate material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    /// Position in the discourse, contiguous from 1.
    pub index: usize,
    /// Display label preserving source numbering ("29a", "33b"). Defaults to
    /// the index when absent.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub speaker: Option<String>,
    #[serde(default)]
    pub markers: Vec<ReferenceMarker>,
    #[serde(default)]
    pub propositions: Vec<PropositionTag>,
    /// Cue words in surface order; only an utterance-initial cue (first slot)
    /// is boundary evidence.
    #[serde(default)]
    pub cue_words: Vec<String>,
    #[serde(default)]
    pub tense: Tense,
    /// Prompts (yeah, okay, uh huh) transmit the previous state unchanged and
    /// carry no markers of their own.
    #[serde(default)]
    pub is_prompt: bool,
    /// Annotation flag for clarification questions; drives subordinate
    /// boundary detection.
    #[serde(default)]
    pub clarification: bool,
    /// Overrides the linear predecessor (subordination annotated at the
    /// utterance level); must name an earlier index.
    #[serde(default)]
    pub prev_override: Option<usize>,
}

impl Utterance {
    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.index.to_string())
    }

    pub fn marker(&self, id: &str) -> Option<&ReferenceMarker> {
        self.markers.iter().find(|m| m.id == id)
    }

    /// First cue word, lowercased, if any. Medial cues never match because
    /// they are not in the first slot.
    pub fn initial_cue(&self) -> Option<String> {
        self.cue_words.first().map(|c| c.to_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryRelation {
    Sister,
    Subordinate,
    ReturnPop,
    Interruption,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryEvidence {
    CueNow,
    CueAnyway,
    ClarificationQuestion,
    HumanJudgement,
    TaskSubgoal,
    TenseChange,
    Iru,
}

/// A segment boundary sits before an utterance; `before == 1` opens the first
/// segment explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentBoundary {
    pub before: usize,
    pub relation: BoundaryRelation,
    /// Everything that argued for this boundary; detection merges coinciding
    /// signals instead of emitting duplicate boundaries.
    pub evidence: Vec<BoundaryEvidence>,
    /// Only meaningful for return pops: id of the target segment.
    #[serde(default)]
    pub return_target: Option<usize>,
}

/// A complete annotated discourse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discourse {
    pub id: String,
    #[serde(default)]
    pub entities: Vec<DiscourseEntity>,
    pub utterances: Vec<Utterance>,
    #[serde(default)]
    pub boundaries: Vec<SegmentBoundary>,
    /// Pear-story corpora are analyzed with every segment a sister of the
    /// previous one.
    #[serde(default)]
    pub all_sisters: bool,
}

impl Discourse {
    pub fn entity(&self, id: &EntityId) -> Option<&DiscourseEntity> {
        self.entities.iter().find(|e| &e.id == id)
    }

    pub fn utterance(&self, index: usize) -> Option<&Utterance> {
        // Indices are contiguous from 1, so this is a direct slot after
        // validation; fall back to a scan for hand-built values.
        match self.utterances.get(index.wrapping_sub(1)) {
            Some(u) if u.index == index => Some(u),
            _ => self.utterances.iter().find(|u| u.index == index),
        }
    }

    pub fn utterance_by_label(&self, label: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.display_label() == label)
    }

    pub fn entity_by_canonical(&self, canonical: &str) -> Option<&DiscourseEntity> {
        self.entities
            .iter()
            .find(|e| e.canonical.eq_ignore_ascii_case(canonical))
    }

    /// Annotation-level resolution of a marker: the gold link when present,
    /// else a canonical-string match for non-pronominal forms. Pronouns
    /// without a gold link stay unresolved here; resolving them is the
    /// engine's job.
    pub fn gold_entity(&self, m: &ReferenceMarker) -> Option<EntityId> {
        if let Some(e) = &m.entity {
            return Some(e.clone());
        }
        if !m.form.is_pronominal() {
            return self.entity_by_canonical(&m.surface).map(|e| e.id.clone());
        }
        None
    }
}

/// The five centering transitions, ordered from most to least coherent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transition {
    Continue,
    Retain,
    SmoothShift,
    RoughShift,
    NoCb,
}

impl Transition {
    /// Preference rank: lower is better. Continue 1 through NoCb 5.
    pub fn rank(self) -> u8 {
        match self {
            Transition::Continue => 1,
            Transition::Retain => 2,
            Transition::SmoothShift => 3,
            Transition::RoughShift => 4,
            Transition::NoCb => 5,
        }
    }

    pub fn all() -> [Transition; 5] {
        [
            Transition::Continue,
            Transition::Retain,
            Transition::SmoothShift,
            Transition::RoughShift,
            Transition::NoCb,
        ]
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Transition::Continue => "CONTINUE",
            Transition::Retain => "RETAIN",
            Transition::SmoothShift => "SMOOTH-SHIFT",
            Transition::RoughShift => "ROUGH-SHIFT",
            Transition::NoCb => "NO-CB",
        };
        f.write_str(s)
    }
}

/// Centering state after processing one utterance. The preferred center is
/// not stored: it is by definition the head of `cf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringState {
    pub utterance: usize,
    pub cb: Option<EntityId>,
    pub cf: Vec<EntityId>,
    pub transition: Transition,
}

impl CenteringState {
    /// State "before the discourse": no Cb, empty Cf. Used as the predecessor
    /// of the first utterance.
    pub fn initial() -> Self {
        CenteringState {
            utterance: 0,
            cb: None,
            cf: Vec::new(),
            transition: Transition::NoCb,
        }
    }

    pub fn cp(&self) -> Option<&EntityId> {
        self.cf.first()
    }
}

/// Cf ranking configuration: grammatical functions in descending rank order.
/// Ties fall back to surface order, which marker storage order preserves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingConfig {
    pub order: Vec<GramFunction>,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig {
            order: vec![
                GramFunction::Subject,
                GramFunction::DirectObject,
                GramFunction::IndirectObject,
                GramFunction::Oblique,
                GramFunction::Other,
            ],
        }
    }
}

impl RankingConfig {
    pub fn rank_of(&self, f: GramFunction) -> Result<usize> {
        self.order
            .iter()
            .position(|&g| g == f)
            .ok_or_else(|| Error::Config(format!("grammatical function {f:?} not in ranking order")))
    }
}

/// Rank a marker list into a Cf list of entity ids using the given binding.
/// Markers bound to the same entity collapse into its highest-ranked slot.
/// Markers absent from the binding (unresolved pronouns) contribute nothing.
pub fn cf_for_binding(
    markers: &[ReferenceMarker],
    binding: &BTreeMap<String, EntityId>,
    ranking: &RankingConfig,
) -> Result<Vec<EntityId>> {
    let mut ranked: Vec<(u32, usize, usize, &EntityId)> = Vec::new();
    for (pos, m) in markers.iter().enumerate() {
        let Some(e) = binding.get(&m.id) else {
            continue;
        };
        ranked.push((m.clause_stratum, ranking.rank_of(m.function)?, pos, e));
    }
    // Clause stratum outranks everything: a folded subordinate clause's
    // centers rank below the main clause's whole list. Within a stratum,
    // function rank first, surface position second.
    ranked.sort_by_key(|&(s, r, pos, _)| (s, r, pos));
    let mut cf = Vec::new();
    for (_, _, _, e) in ranked {
        if !cf.contains(e) {
            cf.push(e.clone());
        }
    }
    Ok(cf)
}

/// Rank the Cf list of an utterance whose markers are all resolved through
/// gold annotation links. The engine uses [`cf_for_binding`] with its own
/// bindings; this entry point serves annotation-complete corpora and tests.
pub fn rank_cf(utterance: &Utterance, ranking: &RankingConfig) -> Result<Vec<EntityId>> {
    let mut binding = BTreeMap::new();
    for m in &utterance.markers {
        if let Some(e) = &m.entity {
            binding.insert(m.id.clone(), e.clone());
        }
    }
    cf_for_binding(&utterance.markers, &binding, ranking)
}

/// Cf projection for a complex sentence: the main clause's Cf followed by
/// each subordinate clause's Cf in order, first occurrence of an entity wins.
pub fn project_cf_complex(main: &[EntityId], subordinates: &[Vec<EntityId>]) -> Vec<EntityId> {
    let mut cf: Vec<EntityId> = Vec::new();
    for e in main.iter().chain(subordinates.iter().flatten()) {
        if !cf.contains(e) {
            cf.push(e.clone());
        }
    }
    cf
}

/// Classify the transition from `prev` to a proposed (cb, cf) pair.
///
/// The taxonomy is evaluated in rank order and is total: a previous Cb of NIL
/// is absorbed by CONTINUE when the proposed Cb heads its own Cf, while a
/// non-head Cb after a NIL Cb falls through to ROUGH-SHIFT. A proposed Cb
/// must be a member of the proposed Cf.
pub fn classify_transition(
    prev: &CenteringState,
    cb: Option<&EntityId>,
    cf: &[EntityId],
) -> Result<Transition> {
    if let Some(c) = cb {
        if !cf.contains(c) {
            return Err(Error::Contract(format!(
                "proposed cb {c} is not in the proposed cf list"
            )));
        }
    }
    let cp = cf.first();
    let t = match cb {
        None => Transition::NoCb,
        Some(c) => {
            let same_as_prev = prev.cb.as_ref() == Some(c);
            let prev_nil = prev.cb.is_none();
            let is_cp = cp == Some(c);
            if (same_as_prev || prev_nil) && is_cp {
                Transition::Continue
            } else if same_as_prev {
                Transition::Retain
            } else if is_cp {
                Transition::SmoothShift
            } else {
                Transition::RoughShift
            }
        }
    };
    Ok(t)
}
