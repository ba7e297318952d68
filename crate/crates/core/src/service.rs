//! Transport-independent multi-user access to one project.
//!
//! A [`Workbench`] owns the project behind a lock. Reads see a consistent
//! snapshot; each decision is applied under the write lock, persisted, and
//! only then made visible. Two users acting on the same suggestion are
//! serialized: the second finds it stale and gets a conflict.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::acceptability::attitude_matrix;
use crate::alignment::alignment_report;
use crate::delphi::{aggregate, generate_questionnaire, DelphiError};
use crate::matcher::{MatchError, Matcher, DEFAULT_THRESHOLD};
use crate::ontology::{godet_stats, mychoice_stats, OntologyError};
use crate::project::{Action, DecisionRecord, Project, ProjectError};
use crate::store::{self, StoreError};
use crate::structural::{
    build_matrix, key_variables, micmac, quadrant_plot, StructuralError, StructuralScores,
    DEFAULT_K_MAX, DEFAULT_N_KEYS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Facilitator,
    Stakeholder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub actor: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, error: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            error,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "bad_request", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(401, "unauthorized", "a valid session token is required")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(403, "forbidden", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "not_found", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(409, "conflict", message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(422, "invalid", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status, self.error, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<ProjectError> for ApiError {
    fn from(e: ProjectError) -> Self {
        let message = e.to_string();
        match e {
            ProjectError::Match(MatchError::Stale(_)) | ProjectError::Sequence { .. } => {
                ApiError::conflict(message)
            }
            ProjectError::Match(MatchError::BadId(_) | MatchError::BadThreshold(_)) => {
                ApiError::bad_request(message)
            }
            ProjectError::Ontology(
                OntologyError::UnknownCriterion(_)
                | OntologyError::UnknownConcept(_)
                | OntologyError::UnknownVariable(_)
                | OntologyError::UnknownAim(_)
                | OntologyError::UnknownMCriterion(_)
                | OntologyError::UnknownStakeholder(_),
            )
            | ProjectError::Structural(
                StructuralError::UnknownConcept(_) | StructuralError::UnknownSource(_),
            ) => ApiError::not_found(message),
            ProjectError::Delphi(DelphiError::DuplicateRespondent { .. }) => {
                ApiError::conflict(message)
            }
            _ => ApiError::invalid(message),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::new(500, "storage", e.to_string())
    }
}

/// Analysis defaults applied when a request does not override them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub threshold: f64,
    pub k_max: usize,
    pub n_keys: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            threshold: DEFAULT_THRESHOLD,
            k_max: DEFAULT_K_MAX,
            n_keys: DEFAULT_N_KEYS,
        }
    }
}

pub struct Workbench {
    project: RwLock<Project>,
    path: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Session>>,
    counter: AtomicU64,
    matcher: Matcher,
    pub settings: Settings,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("responses serialize")
}

impl Workbench {
    /// With a `path`, every accepted decision is saved before it is visible.
    pub fn new(project: Project, path: Option<PathBuf>, settings: Settings) -> Self {
        Workbench {
            project: RwLock::new(project),
            path,
            sessions: RwLock::new(BTreeMap::new()),
            counter: AtomicU64::new(0),
            matcher: Matcher::default(),
            settings,
        }
    }

    pub fn snapshot(&self) -> Project {
        self.read().clone()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Project> {
        self.project.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn open_session(&self, actor: &str, role: Role) -> Result<Session, ApiError> {
        if actor.trim().is_empty() {
            return Err(ApiError::invalid("actor must not be empty"));
        }
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or_default();
        let digest = Sha256::digest(format!("{actor}:{n}:{nanos}:{:p}", self));
        let session = Session {
            token: hex::encode(&digest[..16]),
            actor: actor.to_owned(),
            role,
        };
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session.token.clone(), session.clone());
        Ok(session)
    }

    pub fn session(&self, token: Option<&str>) -> Result<Session, ApiError> {
        let token = token.ok_or_else(ApiError::unauthorized)?;
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(token)
            .cloned()
            .ok_or_else(ApiError::unauthorized)
    }

    /// Applies one decision on behalf of a session. `expected_seq`, when
    /// given, must equal the journal head the client last saw.
    pub fn decide(
        &self,
        session: &Session,
        action: Action,
        expected_seq: Option<u64>,
    ) -> Result<DecisionRecord, ApiError> {
        match (&action, session.role) {
            (_, Role::Facilitator) => {}
            (Action::SubmitBallot { ballot }, Role::Stakeholder) => {
                if ballot.respondent_id != session.actor {
                    return Err(ApiError::forbidden(
                        "stakeholders may only submit their own ballot",
                    ));
                }
            }
            (Action::AddArgument { instance }, Role::Stakeholder) => {
                if instance.stakeholder_id != session.actor {
                    return Err(ApiError::forbidden(
                        "stakeholders may only submit their own arguments",
                    ));
                }
            }
            (other, Role::Stakeholder) => {
                return Err(ApiError::forbidden(format!(
                    "{} requires the facilitator role",
                    other.name()
                )))
            }
        }
        let mut guard = self.project.write().unwrap_or_else(|e| e.into_inner());
        if let Some(seq) = expected_seq {
            if seq != guard.seq() {
                return Err(ApiError::conflict(format!(
                    "project is at decision {}, request expected {seq}",
                    guard.seq()
                )));
            }
        }
        let mut next = guard.clone();
        let record = next.apply(&session.actor, action)?.clone();
        if let Some(path) = &self.path {
            store::save(&next, path)?;
        }
        *guard = next;
        Ok(record)
    }

    pub fn summary(&self) -> Value {
        let p = self.read();
        let s = p.state();
        json!({
            "seq": p.seq(),
            "sources": s.corpus.counts(),
            "godet": godet_stats(&s.corpus, &s.ontology),
            "mychoice": mychoice_stats(&s.mychoice),
            "relations": s.relations.len(),
            "decisions": p.action_counts(),
        })
    }

    pub fn corpus(&self) -> Value {
        to_value(&self.read().state().corpus.to_document())
    }

    pub fn ontology(&self) -> Value {
        to_value(&self.read().state().ontology)
    }

    pub fn suggestions(&self, threshold: Option<f64>, limit: Option<usize>) -> Result<Value, ApiError> {
        let p = self.read();
        let s = p.state();
        let batch = self
            .matcher
            .suggest(
                &s.ontology,
                &s.corpus,
                &s.suggestions.rejected,
                threshold.unwrap_or(self.settings.threshold),
                limit.unwrap_or(50),
            )
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(json!({ "seq": p.seq(), "suggestions": batch }))
    }

    pub fn matrix(&self) -> Result<Value, ApiError> {
        let p = self.read();
        let m = build_matrix(&p.state().ontology, &p.state().relations)
            .map_err(|e| ApiError::invalid(e.to_string()))?;
        Ok(to_value(&m))
    }

    fn structural(&self, k_max: Option<usize>) -> Result<StructuralScores, ApiError> {
        let p = self.read();
        let invalid = |e: StructuralError| ApiError::invalid(e.to_string());
        let m = build_matrix(&p.state().ontology, &p.state().relations).map_err(invalid)?;
        micmac(&m, k_max.unwrap_or(self.settings.k_max)).map_err(invalid)
    }

    pub fn scores(&self, k_max: Option<usize>) -> Result<Value, ApiError> {
        Ok(to_value(&self.structural(k_max)?))
    }

    /// Key variables plus the quadrant plot data with keys highlighted.
    pub fn keys(&self, k_max: Option<usize>, n_keys: Option<usize>) -> Result<Value, ApiError> {
        let scores = self.structural(k_max)?;
        let n = n_keys.unwrap_or(self.settings.n_keys);
        let keys = key_variables(&scores, n).map_err(|e| ApiError::invalid(e.to_string()))?;
        let ids = keys.iter().cloned().collect();
        Ok(json!({ "keys": keys, "plot": quadrant_plot(&scores, &ids) }))
    }

    pub fn questionnaire(&self) -> Result<Value, ApiError> {
        let p = self.read();
        let q = generate_questionnaire(&p.state().ontology, p.state().delphi.k)
            .map_err(|e| ApiError::invalid(e.to_string()))?;
        Ok(to_value(&q))
    }

    pub fn tally(&self, round: u32, invited: Option<usize>) -> Result<Value, ApiError> {
        let p = self.read();
        let s = p.state();
        let invalid = |e: DelphiError| ApiError::invalid(e.to_string());
        let q = generate_questionnaire(&s.ontology, s.delphi.k).map_err(invalid)?;
        let mut t = aggregate(&q, &s.delphi.ballots_of_round(round), invited).map_err(invalid)?;
        t.round = round;
        Ok(to_value(&t))
    }

    pub fn attitudes(&self) -> Result<Value, ApiError> {
        let p = self.read();
        let ds = &p.state().mychoice;
        let table = attitude_matrix(ds, &ds.alternative.id)
            .map_err(|e| ApiError::invalid(e.to_string()))?;
        Ok(to_value(&table))
    }

    pub fn alignment_report(&self) -> Value {
        let p = self.read();
        let s = p.state();
        to_value(&alignment_report(&s.godet_fragment(), &s.mychoice, &s.alignment))
    }

    pub fn journal(&self, since: u64) -> Value {
        let p = self.read();
        let records: Vec<_> = p.journal().iter().filter(|r| r.seq > since).collect();
        json!({ "seq": p.seq(), "records": records })
    }
}

/// One HTTP endpoint of the service.
#[derive(Debug, Clone, Copy)]
pub struct Endpoint {
    pub method: &'static str,
    pub path: &'static str,
    pub summary: &'static str,
    /// Least role allowed; `None` for endpoints open without a session.
    /// Facilitators may call every endpoint.
    pub role: Option<Role>,
}

pub const ENDPOINTS: &[Endpoint] = &[
    Endpoint {
        method: "post",
        path: "/sessions",
        summary: "Open a named session as facilitator or stakeholder",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/project",
        summary: "Project summary and statistics",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/corpus",
        summary: "Sources and criteria",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/ontology",
        summary: "Concepts, variables and assignments",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/suggestions",
        summary: "Ranked matcher suggestions (threshold, limit)",
        role: None,
    },
    Endpoint {
        method: "post",
        path: "/suggestions/{id}/accept",
        summary: "Accept a suggestion",
        role: Some(Role::Facilitator),
    },
    Endpoint {
        method: "post",
        path: "/suggestions/{id}/reject",
        summary: "Reject a suggestion",
        role: Some(Role::Facilitator),
    },
    Endpoint {
        method: "post",
        path: "/actions",
        summary: "Apply any journal action",
        role: Some(Role::Facilitator),
    },
    Endpoint {
        method: "get",
        path: "/matrix",
        summary: "Direct influence matrix between variables",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/scores",
        summary: "MICMAC influence and dependence scores (k_max)",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/keys",
        summary: "Key variables and quadrant plot data (k_max, n_keys)",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/delphi/questionnaire",
        summary: "Current Delphi questionnaire",
        role: None,
    },
    Endpoint {
        method: "post",
        path: "/ballots",
        summary: "Submit one's own Delphi ballot",
        role: Some(Role::Stakeholder),
    },
    Endpoint {
        method: "get",
        path: "/delphi/ranking",
        summary: "Approval counts and ranking for a round (round, invited)",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/attitudes",
        summary: "Stakeholder attitude table",
        role: None,
    },
    Endpoint {
        method: "post",
        path: "/arguments",
        summary: "Submit one's own MyChoice property instance",
        role: Some(Role::Stakeholder),
    },
    Endpoint {
        method: "get",
        path: "/alignment/report",
        summary: "Godet and MyChoice comparison",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/journal",
        summary: "Decision records after a sequence number (since)",
        role: None,
    },
    Endpoint {
        method: "get",
        path: "/openapi.json",
        summary: "This description",
        role: None,
    },
];

/// An OpenAPI 3 description generated from [`ENDPOINTS`].
pub fn openapi() -> Value {
    let mut paths = serde_json::Map::new();
    for e in ENDPOINTS {
        let entry = paths
            .entry(e.path.to_owned())
            .or_insert_with(|| json!({}));
        let mut op = json!({
            "summary": e.summary,
            "responses": {
                "200": { "description": "success" },
                "400": { "description": "malformed request" },
                "404": { "description": "unknown entity" },
                "409": { "description": "stale view or concurrent decision" },
                "422": { "description": "rejected by validation" }
            }
        });
        if let Some(role) = e.role {
            op["security"] = json!([{ "session": [] }]);
            op["x-role"] = to_value(&role);
            op["responses"]["401"] = json!({ "description": "missing or unknown session" });
            op["responses"]["403"] = json!({ "description": "role not allowed" });
        }
        if e.path.contains("{id}") {
            op["parameters"] = json!([{ "name": "id", "in": "path", "required": true, "schema": { "type": "string" } }]);
        }
        entry[e.method] = op;
    }
    json!({
        "openapi": "3.0.3",
        "info": { "title": "prospect", "version": env!("CARGO_PKG_VERSION") },
        "components": {
            "securitySchemes": { "session": { "type": "http", "scheme": "bearer" } }
        },
        "paths": paths,
    })
}
