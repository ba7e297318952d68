//! Ontology structuring, structural analysis and consultation tools for
//! collaborative prospective studies.
//!
//! A study moves from a corpus of interviews and documents ([`corpus`]),
//! through a shared ontology of concepts and variables ([`ontology`],
//! helped by [`matcher`]), to a MICMAC analysis of variable influence
//! ([`structural`]) and a Delphi confirmation of the key variables
//! ([`delphi`]). [`alignment`] converts between the Godet ontology and the
//! MyChoice argument schema, on which [`acceptability`] computes stakeholder
//! attitudes. Every change is recorded by [`project`] and persisted by
//! [`store`]; [`service`] exposes the project to concurrent users.

pub mod acceptability;
pub mod alignment;
pub mod corpus;
pub mod delphi;
pub mod matcher;
pub mod ontology;
pub mod project;
pub mod service;
pub mod store;
pub mod structural;
pub mod synthetic;

pub use acceptability::{attitude, attitude_matrix, Attitude, AttitudeError, Scope};
pub use alignment::{
    alignment_report, godet_to_mychoice, mychoice_to_godet, AlignmentError, AlignmentMap,
    AlignmentReport, GodetFragment,
};
pub use corpus::{Corpus, CorpusError, Criterion, SourceKind, SourceText};
pub use delphi::{aggregate, confirm_keys, generate_questionnaire, DelphiBallot, DelphiError, Tally};
pub use matcher::{Matcher, Suggestion, SuggestionKey, SuggestionKind};
pub use ontology::{
    Aim, Alternative, Concept, Evaluation, GodetOntology, MCriterion, Modality, MyChoiceDataset,
    OntologyError, OntologyStats, PropertyInstance, Variable, Weight,
};
pub use project::{Action, DecisionRecord, Project, ProjectError, ProjectState};
pub use store::StoreError;
pub use structural::{
    build_matrix, key_variables, micmac, InfluenceMatrix, InfluenceRelation, Quadrant,
    StructuralError, StructuralScores,
};
