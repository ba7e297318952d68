//! Influence/dependence analysis.
//!
//! Relations are recorded between concepts and lifted to a variable×variable
//! matrix `D`. Direct and indirect influence come from the powers of `D`:
//! the row sums of `D^k` measure how much a variable drives the system
//! through paths of length `k`, the column sums how much it depends on it.
//! Powers are taken until the weak orders of both sums stop changing.
//!
//! All arithmetic is on integers, with overflow reported as an error.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ConceptId, GodetOntology, VariableId};

pub const DEFAULT_K_MAX: usize = 8;
pub const DEFAULT_N_KEYS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("relation endpoints without any variable: {}", .0.join(", "))]
    Unplaced(Vec<ConceptId>),
    #[error("relation references unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("relation references unknown source {0:?}")]
    UnknownSource(String),
    #[error("a concept cannot influence itself ({0:?})")]
    SelfRelation(String),
    #[error("relation weight {0} outside 1..=3")]
    BadWeight(u8),
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("diagonal entry {0} is not zero")]
    NonZeroDiagonal(usize),
    #[error("K_max must be at least 1")]
    KMaxZero,
    #[error("matrix power {0} overflows 128-bit integers")]
    Overflow(usize),
    #[error("asked for {asked} key variables among {available}")]
    TooManyKeys { asked: usize, available: usize },
    #[error("malformed matrix CSV: {0}")]
    Csv(String),
}

/// A directed influence between two concepts, as read in one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfluenceRelation {
    pub from_concept: ConceptId,
    pub to_concept: ConceptId,
    pub weight: u8,
    pub source_id: String,
}

impl InfluenceRelation {
    pub fn check_shape(&self) -> Result<(), StructuralError> {
        if self.from_concept == self.to_concept {
            return Err(StructuralError::SelfRelation(self.from_concept.clone()));
        }
        if !(1..=3).contains(&self.weight) {
            return Err(StructuralError::BadWeight(self.weight));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRef {
    pub id: VariableId,
    pub label: String,
}

/// Direct influence matrix: `values[i][j]` is the influence of variable `i`
/// on variable `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfluenceMatrix {
    pub variables: Vec<VariableRef>,
    pub values: Vec<Vec<u64>>,
}

impl InfluenceMatrix {
    pub fn zeros(variables: Vec<VariableRef>) -> Self {
        let n = variables.len();
        InfluenceMatrix {
            variables,
            values: vec![vec![0; n]; n],
        }
    }

    /// Variables named `v0, v1, ...` around raw values.
    pub fn from_values(values: Vec<Vec<u64>>) -> Self {
        let variables = (0..values.len())
            .map(|i| VariableRef {
                id: format!("v{i}"),
                label: format!("v{i}"),
            })
            .collect();
        InfluenceMatrix { variables, values }
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn validate(&self) -> Result<(), StructuralError> {
        let rows = self.values.len();
        if rows != self.variables.len() {
            return Err(StructuralError::NotSquare {
                rows,
                row: 0,
                len: self.variables.len(),
            });
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != rows {
                return Err(StructuralError::NotSquare {
                    rows,
                    row: i,
                    len: row.len(),
                });
            }
            if row[i] != 0 {
                return Err(StructuralError::NonZeroDiagonal(i));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["variable".to_owned()];
        header.extend(self.variables.iter().map(|v| v.label.clone()));
        w.write_record(&header)?;
        for (v, row) in self.variables.iter().zip(&self.values) {
            let mut record = vec![v.label.clone()];
            record.extend(row.iter().map(u64::to_string));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). Variable ids
    /// are taken from `ids_by_label` when a label is known there, otherwise
    /// the label doubles as id.
    pub fn read_csv(
        input: impl std::io::Read,
        ids_by_label: &BTreeMap<String, VariableId>,
    ) -> Result<Self, StructuralError> {
        let err = |e: &dyn std::fmt::Display| StructuralError::Csv(e.to_string());
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut records = r.records();
        let header = records
            .next()
            .ok_or_else(|| StructuralError::Csv("empty input".into()))?
            .map_err(|e| err(&e))?;
        let labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut values = Vec::new();
        for (i, rec) in records.enumerate() {
            let rec = rec.map_err(|e| err(&e))?;
            if rec.get(0) != labels.get(i).map(String::as_str) {
                return Err(StructuralError::Csv(format!(
                    "row {} is labelled {:?}, expected {:?}",
                    i + 2,
                    rec.get(0).unwrap_or(""),
                    labels.get(i).map(String::as_str).unwrap_or("")
                )));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|c| c.parse::<u64>().map_err(|e| err(&format!("row {}: {e}", i + 2))))
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        let variables = labels
            .into_iter()
            .map(|label| VariableRef {
                id: ids_by_label.get(&label).cloned().unwrap_or_else(|| label.clone()),
                label,
            })
            .collect();
        let m = InfluenceMatrix { variables, values };
        m.validate()?;
        Ok(m)
    }
}

/// Lifts concept relations to variables. A relation whose endpoints belong
/// to several variables contributes once to every (from, to) variable pair;
/// pairs inside one variable are dropped.
pub fn build_matrix(
    ontology: &GodetOntology,
    relations: &[InfluenceRelation],
) -> Result<InfluenceMatrix, StructuralError> {
    let mut unplaced = BTreeSet::new();
    for r in relations {
        for c in [&r.from_concept, &r.to_concept] {
            match ontology.concepts.get(c) {
                None => return Err(StructuralError::UnknownConcept(c.clone())),
                Some(concept) if concept.variable_ids.is_empty() => {
                    unplaced.insert(c.clone());
                }
                Some(_) => {}
            }
        }
    }
    if !unplaced.is_empty() {
        return Err(StructuralError::Unplaced(unplaced.into_iter().collect()));
    }
    let variables: Vec<VariableRef> = ontology
        .variables
        .values()
        .map(|v| VariableRef {
            id: v.id.clone(),
            label: v.label.clone(),
        })
        .collect();
    let index: BTreeMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.as_str(), i))
        .collect();
    let mut m = InfluenceMatrix::zeros(variables.clone());
    for r in relations {
        let from = &ontology.concepts[&r.from_concept].variable_ids;
        let to = &ontology.concepts[&r.to_concept].variable_ids;
        for vf in from {
            for vt in to {
                if vf != vt {
                    m.values[index[vf.as_str()]][index[vt.as_str()]] += u64::from(r.weight);
                }
            }
        }
    }
    Ok(m)
}

/// Reads `from_concept, to_concept, weight, source_id` rows, checking
/// each relation's shape. Endpoints are resolved when the relations are
/// applied to a project.
pub fn read_relations_csv(input: impl std::io::Read) -> Result<Vec<InfluenceRelation>, StructuralError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<InfluenceRelation>().enumerate() {
        let relation = row.map_err(|e| StructuralError::Csv(format!("row {}: {e}", i + 2)))?;
        relation.check_shape()?;
        out.push(relation);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    Driver,
    Relay,
    Dependent,
    Autonomous,
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quadrant::Driver => "driver",
            Quadrant::Relay => "relay",
            Quadrant::Dependent => "dependent",
            Quadrant::Autonomous => "autonomous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableScore {
    pub variable_id: VariableId,
    pub label: String,
    pub influence: u128,
    pub dependence: u128,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralScores {
    pub k_used: usize,
    pub converged: bool,
    /// Medians doubled, so they stay integral.
    pub influence_median_x2: u128,
    pub dependence_median_x2: u128,
    pub scores: Vec<VariableScore>,
}

type Square = Vec<Vec<u128>>;

fn multiply(a: &Square, b: &Square) -> Option<Square> {
    let n = a.len();
    let mut out = vec![vec![0u128; n]; n];
    for i in 0..n {
        for m in 0..n {
            let x = a[i][m];
            if x == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] = out[i][j].checked_add(x.checked_mul(b[m][j])?)?;
            }
        }
    }
    Some(out)
}

fn row_sums(p: &Square) -> Option<Vec<u128>> {
    p.iter()
        .map(|r| r.iter().try_fold(0u128, |acc, x| acc.checked_add(*x)))
        .collect()
}

fn col_sums(p: &Square) -> Option<Vec<u128>> {
    let n = p.len();
    (0..n)
        .map(|j| p.iter().try_fold(0u128, |acc, r| acc.checked_add(r[j])))
        .collect()
}

/// Competition ranks: how many entries are strictly larger. Two vectors with
/// equal ranks induce the same weak order.
pub fn weak_ranks(values: &[u128]) -> Vec<usize> {
    values
        .iter()
        .map(|x| values.iter().filter(|y| *y > x).count())
        .collect()
}

fn twice_median(values: &[u128]) -> u128 {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid] * 2
    } else {
        v[mid - 1] + v[mid]
    }
}

pub fn quadrant(influence: u128, dependence: u128, infl_x2: u128, dep_x2: u128) -> Quadrant {
    let high_infl = influence * 2 > infl_x2;
    let high_dep = dependence * 2 > dep_x2;
    match (high_infl, high_dep) {
        (true, true) => Quadrant::Relay,
        (true, false) => Quadrant::Driver,
        (false, true) => Quadrant::Dependent,
        (false, false) => Quadrant::Autonomous,
    }
}

/// Powers `D, D², …` until the weak orders of row sums and of column sums are
/// identical for two consecutive powers, the next power vanishes, or `k_max`
/// is reached. Scores are the row/column sums of the last power taken.
pub fn micmac(d: &InfluenceMatrix, k_max: usize) -> Result<StructuralScores, StructuralError> {
    d.validate()?;
    if k_max == 0 {
        return Err(StructuralError::KMaxZero);
    }
    let base: Square = d
        .values
        .iter()
        .map(|r| r.iter().map(|x| u128::from(*x)).collect())
        .collect();
    let sums = |p: &Square, k: usize| -> Result<(Vec<u128>, Vec<u128>), StructuralError> {
        Ok((
            row_sums(p).ok_or(StructuralError::Overflow(k))?,
            col_sums(p).ok_or(StructuralError::Overflow(k))?,
        ))
    };

    let mut power = base.clone();
    let mut k = 1;
    let (mut infl, mut dep) = sums(&power, k)?;
    let mut converged = false;
    loop {
        // a vanishing next power carries no further indirect influence
        let next = multiply(&power, &base).ok_or(StructuralError::Overflow(k + 1))?;
        let (next_infl, next_dep) = sums(&next, k + 1)?;
        if next_infl.iter().all(|x| *x == 0) {
            converged = true;
            break;
        }
        if k == k_max {
            break;
        }
        let stable = weak_ranks(&next_infl) == weak_ranks(&infl)
            && weak_ranks(&next_dep) == weak_ranks(&dep);
        power = next;
        infl = next_infl;
        dep = next_dep;
        k += 1;
        if stable {
            converged = true;
            break;
        }
    }

    let infl_x2 = twice_median(&infl);
    let dep_x2 = twice_median(&dep);
    let scores = d
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| VariableScore {
            variable_id: v.id.clone(),
            label: v.label.clone(),
            influence: infl[i],
            dependence: dep[i],
            quadrant: quadrant(infl[i], dep[i], infl_x2, dep_x2),
        })
        .collect();
    Ok(StructuralScores {
        k_used: k,
        converged,
        influence_median_x2: infl_x2,
        dependence_median_x2: dep_x2,
        scores,
    })
}

fn key_order(a: &VariableScore, b: &VariableScore) -> Ordering {
    (b.influence + b.dependence)
        .cmp(&(a.influence + a.dependence))
        .then_with(|| b.influence.cmp(&a.influence))
        .then_with(|| a.label.cmp(&b.label))
        .then_with(|| a.variable_id.cmp(&b.variable_id))
}

/// Variables ranked by influence + dependence, then influence, then label.
pub fn rank_variables(scores: &StructuralScores) -> Vec<&VariableScore> {
    let mut ranked: Vec<&VariableScore> = scores.scores.iter().collect();
    ranked.sort_by(|a, b| key_order(a, b));
    ranked
}

pub fn key_variables(
    scores: &StructuralScores,
    n_keys: usize,
) -> Result<Vec<VariableId>, StructuralError> {
    if n_keys > scores.scores.len() {
        return Err(StructuralError::TooManyKeys {
            asked: n_keys,
            available: scores.scores.len(),
        });
    }
    Ok(rank_variables(scores)
        .into_iter()
        .take(n_keys)
        .map(|s| s.variable_id.clone())
        .collect())
}

pub fn write_scores_csv(
    scores: &StructuralScores,
    keys: &BTreeSet<VariableId>,
    out: impl std::io::Write,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable_id", "label", "influence", "dependence", "quadrant", "is_key"])?;
    for s in &scores.scores {
        w.write_record([
            s.variable_id.clone(),
            s.label.clone(),
            s.influence.to_string(),
            s.dependence.to_string(),
            s.quadrant.to_string(),
            keys.contains(&s.variable_id).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Scatter data for the quadrant view.
#[derive(Debug, Clone, Serialize)]
pub struct QuadrantPlot {
    pub k_used: usize,
    pub converged: bool,
    pub influence_median: f64,
    pub dependence_median: f64,
    pub points: Vec<QuadrantPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadrantPoint {
    pub variable_id: VariableId,
    pub label: String,
    pub influence: u128,
    pub dependence: u128,
    pub quadrant: Quadrant,
    pub is_key: bool,
}

pub fn quadrant_plot(scores: &StructuralScores, keys: &BTreeSet<VariableId>) -> QuadrantPlot {
    QuadrantPlot {
        k_used: scores.k_used,
        converged: scores.converged,
        influence_median: scores.influence_median_x2 as f64 / 2.0,
        dependence_median: scores.dependence_median_x2 as f64 / 2.0,
        points: scores
            .scores
            .iter()
            .map(|s| QuadrantPoint {
                variable_id: s.variable_id.clone(),
                label: s.label.clone(),
                influence: s.influence,
                dependence: s.dependence,
                quadrant: s.quadrant,
                is_key: keys.contains(&s.variable_id),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relations_csv_rows_are_checked() {
        let good = "from_concept,to_concept,weight,source_id\nk1, k2, 3, s1\nk2,k1,1,d1\n";
        let rels = read_relations_csv(good.as_bytes()).unwrap();
        assert_eq!(rels.len(), 2);
        assert_eq!(rels[0].to_concept, "k2");
        assert_eq!(rels[0].weight, 3);
        let heavy = "from_concept,to_concept,weight,source_id\nk1,k2,4,s1\n";
        assert_eq!(read_relations_csv(heavy.as_bytes()), Err(StructuralError::BadWeight(4)));
        let self_loop = "from_concept,to_concept,weight,source_id\nk1,k1,1,s1\n";
        assert!(matches!(
            read_relations_csv(self_loop.as_bytes()),
            Err(StructuralError::SelfRelation(_))
        ));
        let garbled = "from_concept,to_concept,weight,source_id\nk1,k2,heavy,s1\n";
        assert!(matches!(read_relations_csv(garbled.as_bytes()), Err(StructuralError::Csv(m)) if m.starts_with("row 2")));
    }

    fn concept_ontology() -> GodetOntology {
        let mut o = GodetOntology::default();
        for v in ["V1", "V2", "V3"] {
            o.create_variable(v, &format!("label {v}")).unwrap();
        }
        for c in ["a", "b", "c", "free"] {
            o.create_concept(c, c).unwrap();
        }
        o.attach_variable("a", "V1").unwrap();
        o.attach_variable("a", "V2").unwrap();
        o.attach_variable("b", "V3").unwrap();
        o.attach_variable("c", "V2").unwrap();
        o
    }

    fn rel(from: &str, to: &str, weight: u8) -> InfluenceRelation {
        InfluenceRelation {
            from_concept: from.into(),
            to_concept: to.into(),
            weight,
            source_id: "s1".into(),
        }
    }

    #[test]
    fn no_relations_zero_matrix() {
        let m = build_matrix(&concept_ontology(), &[]).unwrap();
        assert_eq!(m.values, vec![vec![0; 3]; 3]);
    }

    #[test]
    fn single_relation_between_single_variables() {
        let m = build_matrix(&concept_ontology(), &[rel("c", "b", 2)]).unwrap();
        // V2 -> V3
        assert_eq!(m.values, vec![vec![0, 0, 0], vec![0, 0, 2], vec![0, 0, 0]]);
    }

    #[test]
    fn multi_membership_expands_to_every_pair() {
        let m = build_matrix(&concept_ontology(), &[rel("a", "b", 1)]).unwrap();
        assert_eq!(m.values[0][2], 1);
        assert_eq!(m.values[1][2], 1);
        assert_eq!(m.values.iter().flatten().sum::<u64>(), 2);
    }

    #[test]
    fn intra_variable_projection_dropped() {
        // a in {V1,V2}, c in {V2}: V2->V2 dropped, V1->V2 kept
        let m = build_matrix(&concept_ontology(), &[rel("a", "c", 3)]).unwrap();
        assert_eq!(m.values[0][1], 3);
        assert_eq!(m.values[1][1], 0);
    }

    #[test]
    fn unplaced_endpoints_listed() {
        let err = build_matrix(&concept_ontology(), &[rel("free", "b", 1), rel("a", "free", 1)])
            .unwrap_err();
        assert_eq!(err, StructuralError::Unplaced(vec!["free".into()]));
    }

    #[test]
    fn zero_matrix_scores() {
        let s = micmac(&InfluenceMatrix::from_values(vec![vec![0; 3]; 3]), 8).unwrap();
        assert_eq!(s.k_used, 1);
        assert!(s.converged);
        assert!(s.scores.iter().all(|v| v.influence == 0 && v.dependence == 0));
    }

    #[test]
    fn single_edge_stops_at_first_power() {
        let s = micmac(&InfluenceMatrix::from_values(vec![vec![0, 1], vec![0, 0]]), 8).unwrap();
        assert_eq!(s.k_used, 1);
        assert_eq!((s.scores[0].influence, s.scores[0].dependence), (1, 0));
        assert_eq!((s.scores[1].influence, s.scores[1].dependence), (0, 1));
    }

    #[test]
    fn three_cycle_is_uniform() {
        let d = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]];
        let s = micmac(&InfluenceMatrix::from_values(d), 8).unwrap();
        assert!(s.converged);
        assert_eq!(s.k_used, 2);
        for v in &s.scores {
            assert_eq!((v.influence, v.dependence), (1, 1));
        }
    }

    #[test]
    fn k_max_one_without_nilpotence_is_not_converged() {
        let d = vec![vec![0, 1], vec![1, 0]];
        let s = micmac(&InfluenceMatrix::from_values(d), 1).unwrap();
        assert_eq!(s.k_used, 1);
        assert!(!s.converged);
    }

    #[test]
    fn rejects_bad_shapes() {
        let ragged = InfluenceMatrix::from_values(vec![vec![0, 1], vec![0]]);
        assert!(matches!(micmac(&ragged, 3), Err(StructuralError::NotSquare { .. })));
        let diag = InfluenceMatrix::from_values(vec![vec![1]]);
        assert_eq!(micmac(&diag, 3), Err(StructuralError::NonZeroDiagonal(0)));
        let ok = InfluenceMatrix::from_values(vec![vec![0]]);
        assert_eq!(micmac(&ok, 0), Err(StructuralError::KMaxZero));
    }

    #[test]
    fn overflow_is_reported() {
        let n = 12;
        let big = u64::MAX / 2;
        let d: Vec<Vec<u64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0 } else { big }).collect())
            .collect();
        assert!(matches!(
            micmac(&InfluenceMatrix::from_values(d), 8),
            Err(StructuralError::Overflow(_))
        ));
    }

    #[test]
    fn all_zero_keys_follow_label_order() {
        let mut m = InfluenceMatrix::from_values(vec![vec![0; 3]; 3]);
        m.variables[0].label = "zeta".into();
        m.variables[1].label = "alpha".into();
        m.variables[2].label = "mu".into();
        let s = micmac(&m, 8).unwrap();
        assert_eq!(key_variables(&s, 2).unwrap(), ["v1", "v2"]);
        assert!(key_variables(&s, 4).is_err());
    }

    #[test]
    fn dominant_variable_ranks_first() {
        // hub v2 talks to every leaf (weight 2) and hears from every leaf
        let d = vec![
            vec![0, 1, 1, 0],
            vec![0, 0, 1, 0],
            vec![2, 2, 0, 2],
            vec![0, 0, 1, 0],
        ];
        let m = InfluenceMatrix::from_values(d);
        let direct = micmac(&m, 1).unwrap();
        // hand sums: row 2 = 6, column 2 = 3; best leaf: row 0 = 2, column 1 = 3
        assert_eq!((direct.scores[2].influence, direct.scores[2].dependence), (6, 3));
        for k_max in 1..=8 {
            let s = micmac(&m, k_max).unwrap();
            assert_eq!(key_variables(&s, 1).unwrap(), ["v2"], "k_max {k_max}");
        }
    }

    #[test]
    fn quadrants_split_on_medians() {
        // medians: influence {0,1,2,3} -> 1.5, dependence {3,2,1,0} -> 1.5
        assert_eq!(quadrant(3, 3, 3, 3), Quadrant::Relay);
        assert_eq!(quadrant(3, 0, 3, 3), Quadrant::Driver);
        assert_eq!(quadrant(0, 3, 3, 3), Quadrant::Dependent);
        assert_eq!(quadrant(1, 1, 3, 3), Quadrant::Autonomous);
    }

    #[test]
    fn csv_round_trip() {
        let m = build_matrix(&concept_ontology(), &[rel("a", "b", 2), rel("b", "c", 1)]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let ids: BTreeMap<String, VariableId> = m
            .variables
            .iter()
            .map(|v| (v.label.clone(), v.id.clone()))
            .collect();
        assert_eq!(InfluenceMatrix::read_csv(&buf[..], &ids).unwrap(), m);
        let bad = "variable,a,b\na,0,1\nb,2\n";
        assert!(InfluenceMatrix::read_csv(bad.as_bytes(), &ids).is_err());
    }

    fn matrix_strategy(max_n: usize) -> impl Strategy<Value = Vec<Vec<u64>>> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(0u64..=3, n), n).prop_map(|mut m| {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = 0;
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn scaling_keeps_ranking(d in matrix_strategy(6), c in 1u64..5) {
            let base = micmac(&InfluenceMatrix::from_values(d.clone()), 8).unwrap();
            let scaled: Vec<Vec<u64>> = d.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
            let s = micmac(&InfluenceMatrix::from_values(scaled), 8).unwrap();
            prop_assert_eq!(s.k_used, base.k_used);
            let ids = |s: &StructuralScores| rank_variables(s).iter().map(|v| v.variable_id.clone()).collect::<Vec<_>>();
            prop_assert_eq!(ids(&s), ids(&base));
        }

        #[test]
        fn permutation_equivariance(d in matrix_strategy(6), seed in any::<u64>()) {
            let n = d.len();
            let mut perm: Vec<usize> = (0..n).collect();
            // deterministic shuffle from the seed
            let mut x = seed;
            for i in (1..n).rev() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (x >> 33) as usize % (i + 1));
            }
            let m = InfluenceMatrix::from_values(d.clone());
            let mut p = m.clone();
            for i in 0..n {
                p.variables[i] = m.variables[perm[i]].clone();
                for j in 0..n {
                    p.values[i][j] = m.values[perm[i]][perm[j]];
                }
            }
            let a = micmac(&m, 8).unwrap();
            let b = micmac(&p, 8).unwrap();
            prop_assert_eq!(a.k_used, b.k_used);
            for (score, &from) in b.scores.iter().zip(&perm) {
                prop_assert_eq!(score, &a.scores[from]);
            }
            let k = n.min(3);
            let ka: BTreeSet<_> = key_variables(&a, k).unwrap().into_iter().collect();
            let kb: BTreeSet<_> = key_variables(&b, k).unwrap().into_iter().collect();
            prop_assert_eq!(ka, kb);
        }

        #[test]
        fn row_and_column_totals_agree(d in matrix_strategy(6)) {
            let base: Square = d.iter().map(|r| r.iter().map(|x| *x as u128).collect()).collect();
            let mut p = base.clone();
            for _ in 0..5 {
                let rows: u128 = row_sums(&p).unwrap().iter().sum();
                let cols: u128 = col_sums(&p).unwrap().iter().sum();
                prop_assert_eq!(rows, cols);
                p = multiply(&p, &base).unwrap();
            }
        }
    }
}
