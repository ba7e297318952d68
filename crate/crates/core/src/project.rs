//! The project: every artefact of a study plus the journal of decisions that
//! produced it.
//!
//! State changes only through [`Project::apply`], which validates an
//! [`Action`], applies it and appends a [`DecisionRecord`]. Replaying the
//! journal from an empty project rebuilds the same state.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{AlignmentError, AlignmentMap, GodetFragment};
use crate::corpus::{validate_criterion, Corpus, CorpusError, Criterion, SourceText, Span};
use crate::delphi::{generate_questionnaire, DelphiBallot, DelphiError, DEFAULT_K};
use crate::matcher::{check_current, MatchError, SuggestionKey, SuggestionKind};
use crate::ontology::{
    Alternative, GodetOntology, MyChoiceDataset, OntologyError, PropertyInstance,
};
use crate::structural::{InfluenceRelation, StructuralError};

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error(transparent)]
    Delphi(#[from] DelphiError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("actor must not be empty")]
    EmptyActor,
    #[error("journal entry {found} out of sequence; expected {expected}")]
    Sequence { expected: u64, found: u64 },
    #[error("journal entry {seq} cannot be replayed: {source}")]
    Replay {
        seq: u64,
        #[source]
        source: Box<ProjectError>,
    },
}

impl ProjectError {
    /// Whether the error comes from acting on an outdated view.
    pub fn is_stale(&self) -> bool {
        matches!(self, ProjectError::Match(MatchError::Stale(_)))
    }
}

/// Decided and dismissed suggestions, in canonical form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionLog {
    #[serde(default)]
    pub accepted: BTreeSet<SuggestionKey>,
    #[serde(default)]
    pub rejected: BTreeSet<SuggestionKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelphiState {
    pub k: usize,
    pub rounds: u32,
    #[serde(default)]
    pub ballots: Vec<DelphiBallot>,
}

impl Default for DelphiState {
    fn default() -> Self {
        DelphiState {
            k: DEFAULT_K,
            rounds: 2,
            ballots: Vec::new(),
        }
    }
}

impl DelphiState {
    pub fn ballots_of_round(&self, round: u32) -> Vec<DelphiBallot> {
        self.ballots
            .iter()
            .filter(|b| b.round == round)
            .cloned()
            .collect()
    }
}

mod corpus_document {
    use super::*;
    use crate::corpus::CorpusDocument;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(corpus: &Corpus, s: S) -> Result<S::Ok, S::Error> {
        corpus.to_document().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Corpus, D::Error> {
        let doc = CorpusDocument::deserialize(d)?;
        Corpus::from_parts(
            doc.sources,
            doc.criteria.into_iter().map(Criterion::from).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Every derived artefact of a study.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectState {
    #[serde(with = "corpus_document")]
    pub corpus: Corpus,
    pub ontology: GodetOntology,
    #[serde(default)]
    pub relations: Vec<InfluenceRelation>,
    #[serde(default)]
    pub mychoice: MyChoiceDataset,
    #[serde(default)]
    pub alignment: AlignmentMap,
    #[serde(default)]
    pub suggestions: SuggestionLog,
    #[serde(default)]
    pub delphi: DelphiState,
}

impl ProjectState {
    pub fn godet_fragment(&self) -> GodetFragment {
        GodetFragment {
            corpus: self.corpus.clone(),
            ontology: self.ontology.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "payload", rename_all = "snake_case")]
pub enum Action {
    AddSource {
        source: SourceText,
    },
    AddCriterion {
        id: String,
        raw_text: String,
        source_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        span: Option<Span>,
    },
    CreateConcept {
        id: String,
        label: String,
    },
    CreateVariable {
        id: String,
        label: String,
    },
    /// `previous_concept_id` is filled in when the action is applied.
    AssignCriterion {
        criterion_id: String,
        concept_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        previous_concept_id: Option<String>,
    },
    MergeConcepts {
        survivor_id: String,
        absorbed_id: String,
        keep_label: String,
    },
    AttachVariable {
        concept_id: String,
        variable_id: String,
    },
    DefineModality {
        variable_id: String,
        label: String,
    },
    /// Replaces the key flag on every variable.
    MarkKeys {
        variable_ids: Vec<String>,
    },
    AcceptSuggestion {
        suggestion_id: String,
    },
    RejectSuggestion {
        suggestion_id: String,
    },
    AddRelation {
        relation: InfluenceRelation,
    },
    SetAlternative {
        alternative: Alternative,
    },
    AddMcriterion {
        id: String,
        label: String,
    },
    AddAim {
        id: String,
        label: String,
        mcriterion_id: String,
    },
    AddArgument {
        instance: PropertyInstance,
    },
    MapMcriterion {
        mcriterion_id: String,
        variable_id: String,
    },
    ResolveParent {
        concept_id: String,
        variable_id: String,
    },
    ChooseMcriterion {
        concept_id: String,
        mcriterion_id: String,
    },
    LinkConceptAim {
        concept_id: String,
        aim_id: String,
    },
    ConfigureDelphi {
        k: usize,
        rounds: u32,
    },
    SubmitBallot {
        ballot: DelphiBallot,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::AddSource { .. } => "add_source",
            Action::AddCriterion { .. } => "add_criterion",
            Action::CreateConcept { .. } => "create_concept",
            Action::CreateVariable { .. } => "create_variable",
            Action::AssignCriterion { .. } => "assign_criterion",
            Action::MergeConcepts { .. } => "merge_concepts",
            Action::AttachVariable { .. } => "attach_variable",
            Action::DefineModality { .. } => "define_modality",
            Action::MarkKeys { .. } => "mark_keys",
            Action::AcceptSuggestion { .. } => "accept_suggestion",
            Action::RejectSuggestion { .. } => "reject_suggestion",
            Action::AddRelation { .. } => "add_relation",
            Action::SetAlternative { .. } => "set_alternative",
            Action::AddMcriterion { .. } => "add_mcriterion",
            Action::AddAim { .. } => "add_aim",
            Action::AddArgument { .. } => "add_argument",
            Action::MapMcriterion { .. } => "map_mcriterion",
            Action::ResolveParent { .. } => "resolve_parent",
            Action::ChooseMcriterion { .. } => "choose_mcriterion",
            Action::LinkConceptAim { .. } => "link_concept_aim",
            Action::ConfigureDelphi { .. } => "configure_delphi",
            Action::SubmitBallot { .. } => "submit_ballot",
        }
    }
}

mod timestamp {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&t.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&text)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub seq: u64,
    pub actor: String,
    #[serde(with = "timestamp")]
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Project {
    state: ProjectState,
    journal: Vec<DecisionRecord>,
}

fn sync_concept_ids<'a>(
    corpus: &mut Corpus,
    ontology: &GodetOntology,
    criteria: impl IntoIterator<Item = &'a String>,
) {
    for id in criteria {
        if let Some(c) = corpus.criteria.get_mut(id) {
            c.concept_id = ontology.assignments.get(id).cloned();
        }
    }
}

fn merge(
    state: &mut ProjectState,
    survivor: &str,
    absorbed: &str,
    keep_label: &str,
) -> Result<(), ProjectError> {
    let moved: Vec<String> = state
        .ontology
        .concept(absorbed)?
        .criterion_ids
        .iter()
        .cloned()
        .collect();
    state.ontology.merge_concepts(survivor, absorbed, keep_label)?;
    sync_concept_ids(&mut state.corpus, &state.ontology, &moved);
    for r in &mut state.relations {
        if r.from_concept == absorbed {
            r.from_concept = survivor.to_owned();
        }
        if r.to_concept == absorbed {
            r.to_concept = survivor.to_owned();
        }
    }
    state.relations.retain(|r| r.from_concept != r.to_concept);
    let alignment = &mut state.alignment;
    alignment.parent_resolutions.remove(absorbed);
    alignment.mcriterion_choices.remove(absorbed);
    alignment.concept_aim_links = std::mem::take(&mut alignment.concept_aim_links)
        .into_iter()
        .map(|(c, a)| if c == absorbed { (survivor.to_owned(), a) } else { (c, a) })
        .collect();
    Ok(())
}

/// Validates and applies one action. Every branch checks before it mutates,
/// so a failed action leaves the state untouched.
fn apply_action(state: &mut ProjectState, action: &mut Action) -> Result<(), ProjectError> {
    match action {
        Action::AddSource { source } => {
            let location = format!("/sources/{}", state.corpus.sources.len());
            if !crate::corpus::is_token(&source.id) {
                return Err(CorpusError::InvalidId {
                    location: format!("{location}/id"),
                    id: source.id.clone(),
                }
                .into());
            }
            if state.corpus.sources.contains_key(&source.id) {
                return Err(CorpusError::DuplicateId {
                    location: format!("{location}/id"),
                    id: source.id.clone(),
                }
                .into());
            }
            state.corpus.sources.insert(source.id.clone(), source.clone());
        }
        Action::AddCriterion {
            id,
            raw_text,
            source_id,
            span,
        } => {
            let mut criterion = Criterion::new(id.clone(), raw_text.clone(), source_id.clone());
            criterion.span = *span;
            let location = format!("/criteria/{}", state.corpus.criteria.len());
            validate_criterion(&state.corpus, &criterion, &location)?;
            state.corpus.criteria.insert(id.clone(), criterion);
        }
        Action::CreateConcept { id, label } => state.ontology.create_concept(id, label)?,
        Action::CreateVariable { id, label } => state.ontology.create_variable(id, label)?,
        Action::AssignCriterion {
            criterion_id,
            concept_id,
            previous_concept_id,
        } => {
            *previous_concept_id =
                state
                    .ontology
                    .assign_criterion(&state.corpus, criterion_id, concept_id)?;
            sync_concept_ids(&mut state.corpus, &state.ontology, [&*criterion_id]);
        }
        Action::MergeConcepts {
            survivor_id,
            absorbed_id,
            keep_label,
        } => merge(state, survivor_id, absorbed_id, keep_label)?,
        Action::AttachVariable {
            concept_id,
            variable_id,
        } => {
            state.ontology.attach_variable(concept_id, variable_id)?;
        }
        Action::DefineModality { variable_id, label } => {
            state.ontology.define_modality(variable_id, label)?
        }
        Action::MarkKeys { variable_ids } => {
            let keys: BTreeSet<String> = variable_ids.iter().cloned().collect();
            state.ontology.set_key_variables(&keys)?;
        }
        Action::AcceptSuggestion { suggestion_id } => {
            let key: SuggestionKey = suggestion_id.parse()?;
            check_current(
                &key,
                &state.ontology,
                &state.corpus,
                &state.suggestions.rejected,
            )?;
            match key.kind {
                SuggestionKind::CriterionToConcept => {
                    state
                        .ontology
                        .assign_criterion(&state.corpus, &key.subject_id, &key.target_id)?;
                    sync_concept_ids(&mut state.corpus, &state.ontology, [&key.subject_id]);
                }
                SuggestionKind::ConceptMerge => {
                    let label = state.ontology.concept(&key.target_id)?.label.clone();
                    merge(state, &key.target_id, &key.subject_id, &label)?;
                }
            }
            state.suggestions.accepted.insert(key.canonical());
        }
        Action::RejectSuggestion { suggestion_id } => {
            let key: SuggestionKey = suggestion_id.parse()?;
            check_current(
                &key,
                &state.ontology,
                &state.corpus,
                &state.suggestions.rejected,
            )?;
            state.suggestions.rejected.insert(key.canonical());
        }
        Action::AddRelation { relation } => {
            relation.check_shape()?;
            for c in [&relation.from_concept, &relation.to_concept] {
                if !state.ontology.concepts.contains_key(c) {
                    return Err(StructuralError::UnknownConcept(c.clone()).into());
                }
            }
            if !state.corpus.sources.contains_key(&relation.source_id) {
                return Err(StructuralError::UnknownSource(relation.source_id.clone()).into());
            }
            state.relations.push(relation.clone());
        }
        Action::SetAlternative { alternative } => {
            if !crate::corpus::is_token(&alternative.id) {
                return Err(OntologyError::InvalidId(alternative.id.clone()).into());
            }
            if alternative.label.trim().is_empty() {
                return Err(OntologyError::EmptyLabel.into());
            }
            state.mychoice.alternative = alternative.clone();
        }
        Action::AddMcriterion { id, label } => state.mychoice.add_mcriterion(id, label)?,
        Action::AddAim {
            id,
            label,
            mcriterion_id,
        } => state.mychoice.add_aim(id, label, mcriterion_id)?,
        Action::AddArgument { instance } => {
            if !state.corpus.sources.contains_key(&instance.stakeholder_id) {
                return Err(OntologyError::UnknownStakeholder(instance.stakeholder_id.clone()).into());
            }
            state.mychoice.add_instance(instance.clone())?
        }
        Action::MapMcriterion {
            mcriterion_id,
            variable_id,
        } => {
            if !state.mychoice.mcriteria.contains_key(mcriterion_id) {
                return Err(OntologyError::UnknownMCriterion(mcriterion_id.clone()).into());
            }
            state.ontology.variable(variable_id)?;
            state
                .alignment
                .mcriterion_to_variable
                .insert(mcriterion_id.clone(), variable_id.clone());
        }
        Action::ResolveParent {
            concept_id,
            variable_id,
        } => {
            let concept = state.ontology.concept(concept_id)?;
            if !concept.variable_ids.contains(variable_id) {
                return Err(AlignmentError::BadResolution {
                    concept: concept_id.clone(),
                    variable: variable_id.clone(),
                }
                .into());
            }
            state
                .alignment
                .parent_resolutions
                .insert(concept_id.clone(), variable_id.clone());
        }
        Action::ChooseMcriterion {
            concept_id,
            mcriterion_id,
        } => {
            state.ontology.concept(concept_id)?;
            if !state.mychoice.mcriteria.contains_key(mcriterion_id) {
                return Err(OntologyError::UnknownMCriterion(mcriterion_id.clone()).into());
            }
            state
                .alignment
                .mcriterion_choices
                .insert(concept_id.clone(), mcriterion_id.clone());
        }
        Action::LinkConceptAim { concept_id, aim_id } => {
            state.ontology.concept(concept_id)?;
            if !state.mychoice.aims.contains_key(aim_id) {
                return Err(OntologyError::UnknownAim(aim_id.clone()).into());
            }
            state
                .alignment
                .concept_aim_links
                .insert((concept_id.clone(), aim_id.clone()));
        }
        Action::ConfigureDelphi { k, rounds } => {
            if *k == 0 {
                return Err(DelphiError::ZeroK.into());
            }
            if *rounds == 0 {
                return Err(DelphiError::BadRound {
                    round: 0,
                    rounds: 0,
                }
                .into());
            }
            state.delphi.k = *k;
            state.delphi.rounds = *rounds;
        }
        Action::SubmitBallot { ballot } => {
            let rounds = state.delphi.rounds;
            if ballot.round == 0 || ballot.round > rounds {
                return Err(DelphiError::BadRound {
                    round: ballot.round,
                    rounds,
                }
                .into());
            }
            generate_questionnaire(&state.ontology, state.delphi.k)?.validate(ballot)?;
            if state
                .delphi
                .ballots
                .iter()
                .any(|b| b.round == ballot.round && b.respondent_id == ballot.respondent_id)
            {
                return Err(DelphiError::DuplicateRespondent {
                    respondent: ballot.respondent_id.clone(),
                    round: ballot.round,
                }
                .into());
            }
            state.delphi.ballots.push(ballot.clone());
        }
    }
    Ok(())
}

impl Project {
    pub fn new() -> Self {
        Project::default()
    }

    pub fn state(&self) -> &ProjectState {
        &self.state
    }

    pub fn journal(&self) -> &[DecisionRecord] {
        &self.journal
    }

    /// Sequence number of the last decision; 0 for an empty journal.
    pub fn seq(&self) -> u64 {
        self.journal.last().map_or(0, |r| r.seq)
    }

    pub fn apply(&mut self, actor: &str, action: Action) -> Result<&DecisionRecord, ProjectError> {
        self.apply_at(actor, Utc::now(), action)
    }

    pub fn apply_at(
        &mut self,
        actor: &str,
        timestamp: DateTime<Utc>,
        mut action: Action,
    ) -> Result<&DecisionRecord, ProjectError> {
        if actor.trim().is_empty() {
            return Err(ProjectError::EmptyActor);
        }
        apply_action(&mut self.state, &mut action)?;
        // stored timestamps have millisecond precision; keep memory and disk identical
        let timestamp = DateTime::from_timestamp_millis(timestamp.timestamp_millis())
            .expect("timestamp in range");
        self.journal.push(DecisionRecord {
            seq: self.seq() + 1,
            actor: actor.to_owned(),
            timestamp,
            action,
        });
        Ok(self.journal.last().expect("just pushed"))
    }

    /// Rebuilds a project from its journal alone.
    pub fn replay(journal: &[DecisionRecord]) -> Result<Project, ProjectError> {
        let mut project = Project::new();
        for record in journal {
            let expected = project.seq() + 1;
            if record.seq != expected {
                return Err(ProjectError::Sequence {
                    expected,
                    found: record.seq,
                });
            }
            project
                .apply_at(&record.actor, record.timestamp, record.action.clone())
                .map_err(|e| ProjectError::Replay {
                    seq: record.seq,
                    source: Box::new(e),
                })?;
        }
        Ok(project)
    }

    /// Decisions per action kind.
    pub fn action_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for r in &self.journal {
            *out.entry(r.action.name()).or_default() += 1;
        }
        out
    }
}
