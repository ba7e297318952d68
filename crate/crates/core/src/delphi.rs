//! Delphi consultation over the variable set: questionnaire generation,
//! ballot validation, approval counts and confirmation of key variables.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{GodetOntology, VariableId};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelphiError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the {n} variables on offer")]
    KTooLarge { k: usize, n: usize },
    #[error("ballot from {respondent:?} selects {got} variables; exactly {expected} are required")]
    WrongCount {
        respondent: String,
        expected: usize,
        got: usize,
    },
    #[error("ballot from {respondent:?} selects unknown variable {variable:?}")]
    UnknownVariable { respondent: String, variable: String },
    #[error("ballot from {respondent:?} selects {variable:?} twice")]
    DuplicateChoice { respondent: String, variable: String },
    #[error("respondent {respondent:?} already voted in round {round}")]
    DuplicateRespondent { respondent: String, round: u32 },
    #[error("ballots mix rounds {0} and {1}")]
    MixedRounds(u32, u32),
    #[error("round {round} is outside 1..={rounds}")]
    BadRound { round: u32, rounds: u32 },
    #[error("respondent id must not be empty")]
    EmptyRespondent,
    #[error("unknown variable {0:?} in the key set")]
    UnknownKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionOption {
    pub variable_id: VariableId,
    pub label: String,
    pub modalities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub k: usize,
    pub options: Vec<QuestionOption>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelphiBallot {
    pub respondent_id: String,
    pub round: u32,
    pub chosen_variable_ids: Vec<VariableId>,
}

/// One option per variable, in variable id order.
pub fn generate_questionnaire(ontology: &GodetOntology, k: usize) -> Result<Questionnaire, DelphiError> {
    let n = ontology.variables.len();
    if k == 0 {
        return Err(DelphiError::ZeroK);
    }
    if k > n {
        return Err(DelphiError::KTooLarge { k, n });
    }
    Ok(Questionnaire {
        k,
        options: ontology
            .variables
            .values()
            .map(|v| QuestionOption {
                variable_id: v.id.clone(),
                label: v.label.clone(),
                modalities: v.modalities.iter().map(|m| m.label.clone()).collect(),
            })
            .collect(),
    })
}

impl Questionnaire {
    pub fn validate(&self, ballot: &DelphiBallot) -> Result<(), DelphiError> {
        let respondent = || ballot.respondent_id.clone();
        if ballot.respondent_id.trim().is_empty() {
            return Err(DelphiError::EmptyRespondent);
        }
        let offered: BTreeSet<&str> = self.options.iter().map(|o| o.variable_id.as_str()).collect();
        let mut seen = BTreeSet::new();
        for v in &ballot.chosen_variable_ids {
            if !offered.contains(v.as_str()) {
                return Err(DelphiError::UnknownVariable {
                    respondent: respondent(),
                    variable: v.clone(),
                });
            }
            if !seen.insert(v) {
                return Err(DelphiError::DuplicateChoice {
                    respondent: respondent(),
                    variable: v.clone(),
                });
            }
        }
        if seen.len() != self.k {
            return Err(DelphiError::WrongCount {
                respondent: respondent(),
                expected: self.k,
                got: seen.len(),
            });
        }
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut s = format!(
            "Select exactly {} of the following {} variables.\n\n",
            self.k,
            self.options.len()
        );
        for (i, o) in self.options.iter().enumerate() {
            s.push_str(&format!("[ ] {:>2}. {} ({})\n", i + 1, o.label, o.variable_id));
            for m in &o.modalities {
                s.push_str(&format!("        - {m}\n"));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedVariable {
    pub rank: usize,
    pub variable_id: VariableId,
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub round: u32,
    pub k: usize,
    pub ballots: usize,
    pub invited: Option<usize>,
    pub response_rate: Option<f64>,
    pub counts: BTreeMap<VariableId, usize>,
    /// By count descending, then label ascending.
    pub ranking: Vec<RankedVariable>,
}

/// Approval counts for one round. Every ballot is validated first; an empty
/// round counts as round 1 with all counts zero.
pub fn aggregate(
    questionnaire: &Questionnaire,
    ballots: &[DelphiBallot],
    invited: Option<usize>,
) -> Result<Tally, DelphiError> {
    let round = ballots.first().map_or(1, |b| b.round);
    let mut respondents = BTreeSet::new();
    for b in ballots {
        if b.round != round {
            return Err(DelphiError::MixedRounds(round, b.round));
        }
        questionnaire.validate(b)?;
        if !respondents.insert(&b.respondent_id) {
            return Err(DelphiError::DuplicateRespondent {
                respondent: b.respondent_id.clone(),
                round,
            });
        }
    }
    let mut counts: BTreeMap<VariableId, usize> = questionnaire
        .options
        .iter()
        .map(|o| (o.variable_id.clone(), 0))
        .collect();
    for b in ballots {
        for v in &b.chosen_variable_ids {
            *counts.get_mut(v).expect("validated") += 1;
        }
    }
    let mut ranking: Vec<RankedVariable> = questionnaire
        .options
        .iter()
        .map(|o| RankedVariable {
            rank: 0,
            variable_id: o.variable_id.clone(),
            label: o.label.clone(),
            count: counts[&o.variable_id],
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.variable_id.cmp(&b.variable_id))
    });
    for (i, r) in ranking.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(Tally {
        round,
        k: questionnaire.k,
        ballots: ballots.len(),
        invited,
        response_rate: invited
            .filter(|n| *n > 0)
            .map(|n| ballots.len() as f64 / n as f64),
        counts,
        ranking,
    })
}

impl Tally {
    /// The sheet returned to participants between rounds.
    pub fn feedback_sheet(&self) -> String {
        let mut s = format!("Round {} results: {} ballots", self.round, self.ballots);
        if let (Some(n), Some(rate)) = (self.invited, self.response_rate) {
            s.push_str(&format!(" from {n} invited ({:.0}% response)", rate * 100.0));
        }
        s.push_str(&format!(", {} choices each.\n\n", self.k));
        for r in &self.ranking {
            s.push_str(&format!(
                "{:>3}. {:<40} {:>3} votes\n",
                r.rank, r.label, r.count
            ));
        }
        s
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "variable_id", "label", "count"])?;
        for r in &self.ranking {
            w.write_record([
                r.rank.to_string(),
                r.variable_id.clone(),
                r.label.clone(),
                r.count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    /// Structural keys that made the consultation's top |keys|.
    pub confirmed: Vec<VariableId>,
    /// Structural keys outside the consultation's top |keys|.
    pub demotions: Vec<VariableId>,
    /// Consultation top |keys| entries that are not structural keys.
    pub promotions: Vec<VariableId>,
}

/// Compares the consultation's top |keys| with the structural key set.
pub fn confirm_keys(tally: &Tally, keys: &[VariableId]) -> Result<Confirmation, DelphiError> {
    if let Some(k) = keys.iter().find(|k| !tally.counts.contains_key(*k)) {
        return Err(DelphiError::UnknownKey(k.clone()));
    }
    let top: Vec<&VariableId> = tally
        .ranking
        .iter()
        .take(keys.len())
        .map(|r| &r.variable_id)
        .collect();
    let key_set: BTreeSet<&VariableId> = keys.iter().collect();
    Ok(Confirmation {
        confirmed: keys.iter().filter(|k| top.contains(k)).cloned().collect(),
        demotions: keys.iter().filter(|k| !top.contains(k)).cloned().collect(),
        promotions: top
            .into_iter()
            .filter(|v| !key_set.contains(v))
            .cloned()
            .collect(),
    })
}
