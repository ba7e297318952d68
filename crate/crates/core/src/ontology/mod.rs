//! The two ontology schemas and their edit operations.
//!
//! The Godet side groups criteria into concepts and concepts into variables;
//! a concept may belong to several variables. The MyChoice side
//! ([`mychoice`]) files properties under aims and each aim under exactly one
//! criterion. Mutations here are plain validated state transitions; the
//! journal in [`crate::project`] is what records and replays them.

pub mod mychoice;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{is_token, normalize, Corpus, CriterionId};

pub use mychoice::{
    Aim, Alternative, Evaluation, MCriterion, MyChoiceDataset, Property, PropertyInstance,
    Weight,
};

pub type ConceptId = String;
pub type VariableId = String;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("unknown criterion {0:?}")]
    UnknownCriterion(String),
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unknown aim {0:?}")]
    UnknownAim(String),
    #[error("unknown MyChoice criterion {0:?}")]
    UnknownMCriterion(String),
    #[error("unknown stakeholder source {0:?}")]
    UnknownStakeholder(String),
    #[error("id {0:?} already exists")]
    DuplicateId(String),
    #[error("invalid id {0:?}")]
    InvalidId(String),
    #[error("label must not be empty")]
    EmptyLabel,
    #[error("cannot merge concept {0:?} with itself")]
    SelfMerge(String),
    #[error("variable {variable:?} already has modality {label:?}")]
    DuplicateModality { variable: String, label: String },
    #[error("MyChoice criterion label {0:?} is already used")]
    DuplicateMCriterionLabel(String),
    #[error("aim {aim:?} already holds ({denomination:?}, {value:?}, {evaluation}) from {stakeholder:?}")]
    DuplicateArgument {
        aim: String,
        denomination: String,
        value: String,
        evaluation: Evaluation,
        stakeholder: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modality {
    pub label: String,
    pub variable_id: VariableId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: VariableId,
    pub label: String,
    #[serde(default)]
    pub modalities: Vec<Modality>,
    #[serde(default)]
    pub is_key: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub label: String,
    /// Labels absorbed through merges; they keep feeding the matcher.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub aliases: BTreeSet<String>,
    #[serde(default)]
    pub criterion_ids: BTreeSet<CriterionId>,
    #[serde(default)]
    pub variable_ids: BTreeSet<VariableId>,
}

impl Concept {
    /// Every label the concept is known by, normalized.
    pub fn registered_labels(&self) -> BTreeSet<String> {
        std::iter::once(&self.label)
            .chain(&self.aliases)
            .map(|l| normalize(l))
            .collect()
    }
}

/// Godet-side ontology: concepts, variables and criterion assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GodetOntology {
    pub concepts: BTreeMap<ConceptId, Concept>,
    pub variables: BTreeMap<VariableId, Variable>,
    /// criterion → concept; a criterion belongs to at most one concept.
    pub assignments: BTreeMap<CriterionId, ConceptId>,
}

fn check_new_id<V>(map: &BTreeMap<String, V>, id: &str) -> Result<(), OntologyError> {
    if !is_token(id) {
        return Err(OntologyError::InvalidId(id.to_owned()));
    }
    if map.contains_key(id) {
        return Err(OntologyError::DuplicateId(id.to_owned()));
    }
    Ok(())
}

fn check_label(label: &str) -> Result<(), OntologyError> {
    if label.trim().is_empty() {
        Err(OntologyError::EmptyLabel)
    } else {
        Ok(())
    }
}

impl GodetOntology {
    pub fn concept(&self, id: &str) -> Result<&Concept, OntologyError> {
        self.concepts
            .get(id)
            .ok_or_else(|| OntologyError::UnknownConcept(id.to_owned()))
    }

    pub fn variable(&self, id: &str) -> Result<&Variable, OntologyError> {
        self.variables
            .get(id)
            .ok_or_else(|| OntologyError::UnknownVariable(id.to_owned()))
    }

    pub fn concept_of(&self, criterion_id: &str) -> Option<&ConceptId> {
        self.assignments.get(criterion_id)
    }

    pub fn create_concept(&mut self, id: &str, label: &str) -> Result<(), OntologyError> {
        check_new_id(&self.concepts, id)?;
        check_label(label)?;
        self.concepts.insert(
            id.to_owned(),
            Concept {
                id: id.to_owned(),
                label: label.to_owned(),
                aliases: BTreeSet::new(),
                criterion_ids: BTreeSet::new(),
                variable_ids: BTreeSet::new(),
            },
        );
        Ok(())
    }

    pub fn create_variable(&mut self, id: &str, label: &str) -> Result<(), OntologyError> {
        check_new_id(&self.variables, id)?;
        check_label(label)?;
        self.variables.insert(
            id.to_owned(),
            Variable {
                id: id.to_owned(),
                label: label.to_owned(),
                modalities: Vec::new(),
                is_key: false,
            },
        );
        Ok(())
    }

    /// Moves a criterion into a concept, returning its previous concept.
    pub fn assign_criterion(
        &mut self,
        corpus: &Corpus,
        criterion_id: &str,
        concept_id: &str,
    ) -> Result<Option<ConceptId>, OntologyError> {
        if !corpus.criteria.contains_key(criterion_id) {
            return Err(OntologyError::UnknownCriterion(criterion_id.to_owned()));
        }
        self.concept(concept_id)?;
        let previous = self
            .assignments
            .insert(criterion_id.to_owned(), concept_id.to_owned());
        if let Some(prev) = &previous {
            if let Some(c) = self.concepts.get_mut(prev) {
                c.criterion_ids.remove(criterion_id);
            }
        }
        self.concepts
            .get_mut(concept_id)
            .expect("checked above")
            .criterion_ids
            .insert(criterion_id.to_owned());
        Ok(previous)
    }

    /// Folds `absorbed` into `survivor`; the survivor keeps `keep_label` and
    /// registers every other label as an alias.
    pub fn merge_concepts(
        &mut self,
        survivor: &str,
        absorbed: &str,
        keep_label: &str,
    ) -> Result<ConceptId, OntologyError> {
        if survivor == absorbed {
            return Err(OntologyError::SelfMerge(survivor.to_owned()));
        }
        self.concept(survivor)?;
        self.concept(absorbed)?;
        check_label(keep_label)?;
        let gone = self.concepts.remove(absorbed).expect("checked above");
        for criterion in &gone.criterion_ids {
            self.assignments
                .insert(criterion.clone(), survivor.to_owned());
        }
        let kept = self.concepts.get_mut(survivor).expect("checked above");
        let mut labels: BTreeSet<String> = kept.aliases.clone();
        labels.extend(gone.aliases);
        labels.insert(kept.label.clone());
        labels.insert(gone.label);
        labels.remove(keep_label);
        kept.aliases = labels;
        kept.label = keep_label.to_owned();
        kept.criterion_ids.extend(gone.criterion_ids);
        kept.variable_ids.extend(gone.variable_ids);
        Ok(survivor.to_owned())
    }

    /// Returns whether the membership is new.
    pub fn attach_variable(
        &mut self,
        concept_id: &str,
        variable_id: &str,
    ) -> Result<bool, OntologyError> {
        self.variable(variable_id)?;
        let concept = self
            .concepts
            .get_mut(concept_id)
            .ok_or_else(|| OntologyError::UnknownConcept(concept_id.to_owned()))?;
        Ok(concept.variable_ids.insert(variable_id.to_owned()))
    }

    pub fn define_modality(&mut self, variable_id: &str, label: &str) -> Result<(), OntologyError> {
        check_label(label)?;
        let variable = self
            .variables
            .get_mut(variable_id)
            .ok_or_else(|| OntologyError::UnknownVariable(variable_id.to_owned()))?;
        if variable.modalities.iter().any(|m| m.label == label) {
            return Err(OntologyError::DuplicateModality {
                variable: variable_id.to_owned(),
                label: label.to_owned(),
            });
        }
        variable.modalities.push(Modality {
            label: label.to_owned(),
            variable_id: variable_id.to_owned(),
        });
        Ok(())
    }

    pub fn set_key_variables(&mut self, keys: &BTreeSet<VariableId>) -> Result<(), OntologyError> {
        if let Some(unknown) = keys.iter().find(|k| !self.variables.contains_key(*k)) {
            return Err(OntologyError::UnknownVariable(unknown.clone()));
        }
        for v in self.variables.values_mut() {
            v.is_key = keys.contains(&v.id);
        }
        Ok(())
    }

    /// Concepts holding at least one criterion and one variable, and variables
    /// holding at least one modality.
    pub fn unfinished(&self) -> (Vec<&ConceptId>, Vec<&VariableId>) {
        let concepts = self
            .concepts
            .values()
            .filter(|c| c.criterion_ids.is_empty() || c.variable_ids.is_empty())
            .map(|c| &c.id)
            .collect();
        let variables = self
            .variables
            .values()
            .filter(|v| v.modalities.is_empty())
            .map(|v| &v.id)
            .collect();
        (concepts, variables)
    }
}

/// Size summary of one side of the ontology.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OntologyStats {
    pub criteria: usize,
    pub assigned_criteria: usize,
    pub concepts: usize,
    pub variables: usize,
    pub mean_criteria_per_concept: f64,
    pub max_criteria_per_concept: usize,
    pub mean_variables_per_concept: f64,
    pub max_variables_per_concept: usize,
}

fn mean(total: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total as f64 / n as f64
    }
}

impl OntologyStats {
    fn from_sizes(criteria: usize, variables: usize, concept_sizes: &[(usize, usize)]) -> Self {
        let assigned: usize = concept_sizes.iter().map(|(c, _)| c).sum();
        let memberships: usize = concept_sizes.iter().map(|(_, v)| v).sum();
        OntologyStats {
            criteria,
            assigned_criteria: assigned,
            concepts: concept_sizes.len(),
            variables,
            mean_criteria_per_concept: mean(assigned, concept_sizes.len()),
            max_criteria_per_concept: concept_sizes.iter().map(|(c, _)| *c).max().unwrap_or(0),
            mean_variables_per_concept: mean(memberships, concept_sizes.len()),
            max_variables_per_concept: concept_sizes.iter().map(|(_, v)| *v).max().unwrap_or(0),
        }
    }
}

pub fn godet_stats(corpus: &Corpus, ontology: &GodetOntology) -> OntologyStats {
    let sizes: Vec<_> = ontology
        .concepts
        .values()
        .map(|c| (c.criterion_ids.len(), c.variable_ids.len()))
        .collect();
    OntologyStats::from_sizes(corpus.criteria.len(), ontology.variables.len(), &sizes)
}

/// MyChoice counts in Godet vocabulary: properties are criteria, aims are
/// concepts, MyChoice criteria are variables. A property with several values
/// counts once.
pub fn mychoice_stats(dataset: &MyChoiceDataset) -> OntologyStats {
    let mut per_aim: BTreeMap<&str, usize> =
        dataset.aims.keys().map(|a| (a.as_str(), 0)).collect();
    let properties = dataset.properties();
    for p in &properties {
        *per_aim.entry(p.aim_id).or_default() += 1;
    }
    let sizes: Vec<_> = per_aim.values().map(|n| (*n, 1)).collect();
    OntologyStats::from_sizes(properties.len(), dataset.mcriteria.len(), &sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Criterion, SourceKind, SourceText};

    fn corpus(criteria: &[(&str, &str)]) -> Corpus {
        Corpus::from_parts(
            vec![SourceText {
                id: "s1".into(),
                kind: SourceKind::Interview,
                title: "breeder".into(),
                stakeholder_category: None,
                date: None,
            }],
            criteria
                .iter()
                .map(|(id, text)| Criterion::new(*id, *text, "s1"))
                .collect(),
        )
        .unwrap()
    }

    fn production_costs() -> (Corpus, GodetOntology) {
        let corpus = corpus(&[
            ("c1", "labour cost"),
            ("c2", "cost of labour"),
            ("c3", "need for investments"),
        ]);
        let mut o = GodetOntology::default();
        o.create_variable("v-prod", "production costs").unwrap();
        o.create_concept("k-labour", "labour cost").unwrap();
        o.create_concept("k-invest", "need for investments").unwrap();
        o.attach_variable("k-labour", "v-prod").unwrap();
        o.attach_variable("k-invest", "v-prod").unwrap();
        (corpus, o)
    }

    #[test]
    fn assign_criteria_under_production_costs() {
        let (corpus, mut o) = production_costs();
        assert_eq!(o.assign_criterion(&corpus, "c1", "k-labour").unwrap(), None);
        o.assign_criterion(&corpus, "c2", "k-labour").unwrap();
        o.assign_criterion(&corpus, "c3", "k-invest").unwrap();
        assert_eq!(o.concepts["k-labour"].criterion_ids.len(), 2);
        assert_eq!(o.concept_of("c3"), Some(&"k-invest".to_string()));
        let concepts_of_var: Vec<_> = o
            .concepts
            .values()
            .filter(|c| c.variable_ids.contains("v-prod"))
            .map(|c| c.label.as_str())
            .collect();
        assert_eq!(concepts_of_var, ["need for investments", "labour cost"]);
    }

    #[test]
    fn reassignment_moves_and_reports_previous() {
        let (corpus, mut o) = production_costs();
        o.assign_criterion(&corpus, "c1", "k-labour").unwrap();
        let prev = o.assign_criterion(&corpus, "c1", "k-invest").unwrap();
        assert_eq!(prev.as_deref(), Some("k-labour"));
        assert!(o.concepts["k-labour"].criterion_ids.is_empty());
        assert!(o.concepts["k-invest"].criterion_ids.contains("c1"));
        // same concept again leaves state unchanged
        let before = o.clone();
        o.assign_criterion(&corpus, "c1", "k-invest").unwrap();
        assert_eq!(o, before);
    }

    #[test]
    fn assign_to_unknown_concept() {
        let (corpus, mut o) = production_costs();
        assert_eq!(
            o.assign_criterion(&corpus, "c1", "nope"),
            Err(OntologyError::UnknownConcept("nope".into()))
        );
        assert_eq!(
            o.assign_criterion(&corpus, "zz", "k-labour"),
            Err(OntologyError::UnknownCriterion("zz".into()))
        );
    }

    #[test]
    fn merge_unions_criteria_and_variables() {
        let corpus = corpus(&[("c1", "a"), ("c2", "b"), ("c3", "c")]);
        let mut o = GodetOntology::default();
        o.create_variable("V1", "one").unwrap();
        o.create_variable("V2", "two").unwrap();
        o.create_concept("a", "alpha").unwrap();
        o.create_concept("b", "beta").unwrap();
        o.assign_criterion(&corpus, "c1", "a").unwrap();
        o.assign_criterion(&corpus, "c2", "a").unwrap();
        o.assign_criterion(&corpus, "c3", "b").unwrap();
        o.attach_variable("a", "V1").unwrap();
        o.attach_variable("b", "V1").unwrap();
        o.attach_variable("b", "V2").unwrap();
        let kept = o.merge_concepts("a", "b", "alpha").unwrap();
        assert_eq!(kept, "a");
        let a = &o.concepts["a"];
        assert_eq!(
            a.criterion_ids,
            ["c1", "c2", "c3"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(
            a.variable_ids,
            ["V1", "V2"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(a.aliases, ["beta".to_string()].into_iter().collect());
        assert!(!o.concepts.contains_key("b"));
        assert_eq!(o.assignments["c3"], "a");
    }

    #[test]
    fn self_merge_is_rejected() {
        let mut o = GodetOntology::default();
        o.create_concept("a", "alpha").unwrap();
        assert_eq!(
            o.merge_concepts("a", "a", "alpha"),
            Err(OntologyError::SelfMerge("a".into()))
        );
        assert_eq!(
            o.merge_concepts("a", "b", "alpha"),
            Err(OntologyError::UnknownConcept("b".into()))
        );
    }

    #[test]
    fn attach_second_variable_and_repeat() {
        let (_, mut o) = production_costs();
        o.create_variable("v-comp", "competitiveness").unwrap();
        assert!(o.attach_variable("k-labour", "v-comp").unwrap());
        assert!(!o.attach_variable("k-labour", "v-comp").unwrap());
        assert_eq!(o.concepts["k-labour"].variable_ids.len(), 2);
        assert_eq!(
            o.attach_variable("k-labour", "v-none"),
            Err(OntologyError::UnknownVariable("v-none".into()))
        );
    }

    #[test]
    fn modalities_of_production_costs() {
        let (_, mut o) = production_costs();
        o.define_modality("v-prod", "production costs mastered").unwrap();
        o.define_modality("v-prod", "fluctuating production costs").unwrap();
        assert_eq!(o.variables["v-prod"].modalities.len(), 2);
        assert_eq!(
            o.define_modality("v-prod", "production costs mastered"),
            Err(OntologyError::DuplicateModality {
                variable: "v-prod".into(),
                label: "production costs mastered".into()
            })
        );
        o.create_variable("v-new", "fresh").unwrap();
        o.define_modality("v-new", "only").unwrap();
        assert_eq!(o.variables["v-new"].modalities.len(), 1);
    }

    #[test]
    fn empty_stats_are_zero() {
        let s = godet_stats(&Corpus::default(), &GodetOntology::default());
        assert_eq!(s, OntologyStats::default());
        let m = mychoice_stats(&MyChoiceDataset::default());
        assert_eq!(m, OntologyStats::default());
    }

    #[test]
    fn stats_means_and_maxima() {
        let (corpus, mut o) = production_costs();
        o.assign_criterion(&corpus, "c1", "k-labour").unwrap();
        o.assign_criterion(&corpus, "c2", "k-labour").unwrap();
        o.assign_criterion(&corpus, "c3", "k-invest").unwrap();
        o.create_variable("v2", "other").unwrap();
        o.attach_variable("k-invest", "v2").unwrap();
        let s = godet_stats(&corpus, &o);
        assert_eq!(s.criteria, 3);
        assert_eq!(s.concepts, 2);
        assert_eq!(s.variables, 2);
        assert_eq!(s.mean_criteria_per_concept, 1.5);
        assert_eq!(s.max_criteria_per_concept, 2);
        assert_eq!(s.mean_variables_per_concept, 1.5);
        assert_eq!(s.max_variables_per_concept, 2);
    }
}
