//! A stakeholder's attitude toward an alternative: the share of their
//! argument weight that evaluates it positively, at aim, MyChoice criterion
//! or global scope.
//!
//! Values are computed exactly over rationals and converted to `f64` once.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ontology::{Evaluation, MyChoiceDataset, PropertyInstance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttitudeError {
    #[error("stakeholder {stakeholder:?} has no arguments at scope {scope}")]
    NoEvidence { stakeholder: String, scope: Scope },
    #[error("unknown alternative {0:?}")]
    UnknownAlternative(String),
    #[error("unknown scope target {0}")]
    UnknownScope(Scope),
    #[error("scope must be `global`, `mcriterion:<id>` or `aim:<id>`, got {0:?}")]
    BadScope(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Global,
    MCriterion(String),
    Aim(String),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::MCriterion(id) => write!(f, "mcriterion:{id}"),
            Scope::Aim(id) => write!(f, "aim:{id}"),
        }
    }
}

impl FromStr for Scope {
    type Err = AttitudeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "global" => Ok(Scope::Global),
            Some(("mcriterion", id)) if !id.is_empty() => Ok(Scope::MCriterion(id.to_owned())),
            Some(("aim", id)) if !id.is_empty() => Ok(Scope::Aim(id.to_owned())),
            _ => Err(AttitudeError::BadScope(s.to_owned())),
        }
    }
}

impl Serialize for Scope {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// How instance weights combine into an aim value, and how aim values
/// combine into wider scopes.
pub trait Aggregation {
    /// `instances` is never empty.
    fn aim_value(&self, instances: &[&PropertyInstance]) -> BigRational;
    /// `parts` is never empty.
    fn combine(&self, parts: &[BigRational]) -> BigRational;
}

/// Positive weight over total weight within an aim; unweighted mean of the
/// parts above that.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeightedShare;

fn rational(w: crate::ontology::Weight) -> BigRational {
    let r = w.ratio();
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl Aggregation for WeightedShare {
    fn aim_value(&self, instances: &[&PropertyInstance]) -> BigRational {
        let mut positive = BigRational::zero();
        let mut total = BigRational::zero();
        for p in instances {
            let w = rational(p.weight);
            if p.evaluation == Evaluation::Positive {
                positive += &w;
            }
            total += w;
        }
        positive / total
    }

    fn combine(&self, parts: &[BigRational]) -> BigRational {
        let sum: BigRational = parts.iter().cloned().sum();
        sum / BigRational::from_integer(BigInt::from(parts.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attitude {
    pub stakeholder_id: String,
    pub alternative_id: String,
    pub scope: Scope,
    pub value: f64,
    /// The exact value as a reduced fraction.
    pub exact: String,
}

fn exact_string(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn exact_attitude(
    strategy: &dyn Aggregation,
    dataset: &MyChoiceDataset,
    stakeholder: &str,
    scope: &Scope,
) -> Result<Option<BigRational>, AttitudeError> {
    let mut by_aim: BTreeMap<&str, Vec<&PropertyInstance>> = BTreeMap::new();
    for p in dataset.instances.values() {
        if p.stakeholder_id == stakeholder {
            by_aim.entry(&p.aim_id).or_default().push(p);
        }
    }
    let aim_value = |aim: &str| by_aim.get(aim).map(|ps| strategy.aim_value(ps));
    let mcriterion_value = |m: &str| {
        let parts: Vec<BigRational> = dataset.aims_of(m).filter_map(|a| aim_value(&a.id)).collect();
        (!parts.is_empty()).then(|| strategy.combine(&parts))
    };
    Ok(match scope {
        Scope::Aim(id) => {
            if !dataset.aims.contains_key(id) {
                return Err(AttitudeError::UnknownScope(scope.clone()));
            }
            aim_value(id)
        }
        Scope::MCriterion(id) => {
            if !dataset.mcriteria.contains_key(id) {
                return Err(AttitudeError::UnknownScope(scope.clone()));
            }
            mcriterion_value(id)
        }
        Scope::Global => {
            let parts: Vec<BigRational> = dataset
                .mcriteria
                .keys()
                .filter_map(|m| mcriterion_value(m))
                .collect();
            (!parts.is_empty()).then(|| strategy.combine(&parts))
        }
    })
}

pub fn attitude(
    dataset: &MyChoiceDataset,
    stakeholder: &str,
    alternative: &str,
    scope: &Scope,
) -> Result<Attitude, AttitudeError> {
    attitude_with(&WeightedShare, dataset, stakeholder, alternative, scope)
}

pub fn attitude_with(
    strategy: &dyn Aggregation,
    dataset: &MyChoiceDataset,
    stakeholder: &str,
    alternative: &str,
    scope: &Scope,
) -> Result<Attitude, AttitudeError> {
    if dataset.alternative.id != alternative {
        return Err(AttitudeError::UnknownAlternative(alternative.to_owned()));
    }
    let exact = exact_attitude(strategy, dataset, stakeholder, scope)?.ok_or_else(|| {
        AttitudeError::NoEvidence {
            stakeholder: stakeholder.to_owned(),
            scope: scope.clone(),
        }
    })?;
    Ok(Attitude {
        stakeholder_id: stakeholder.to_owned(),
        alternative_id: alternative.to_owned(),
        scope: scope.clone(),
        value: exact.to_f64().expect("value lies in [0, 1]"),
        exact: exact_string(&exact),
    })
}

/// Stakeholder × scope table; cells without evidence are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeTable {
    pub alternative_id: String,
    pub scopes: Vec<Scope>,
    pub rows: Vec<AttitudeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeRow {
    pub stakeholder_id: String,
    pub values: Vec<Option<f64>>,
}

/// Global value plus one column per MyChoice criterion.
pub fn attitude_matrix(
    dataset: &MyChoiceDataset,
    alternative: &str,
) -> Result<AttitudeTable, AttitudeError> {
    if dataset.alternative.id != alternative {
        return Err(AttitudeError::UnknownAlternative(alternative.to_owned()));
    }
    let scopes: Vec<Scope> = std::iter::once(Scope::Global)
        .chain(dataset.mcriteria.keys().cloned().map(Scope::MCriterion))
        .collect();
    let rows = dataset
        .stakeholders()
        .into_iter()
        .map(|s| AttitudeRow {
            stakeholder_id: s.to_owned(),
            values: scopes
                .iter()
                .map(|scope| match attitude(dataset, s, alternative, scope) {
                    Ok(a) => Some(a.value),
                    Err(_) => None,
                })
                .collect(),
        })
        .collect();
    Ok(AttitudeTable {
        alternative_id: alternative.to_owned(),
        scopes,
        rows,
    })
}

impl AttitudeTable {
    /// Empty cells stay empty.
    pub fn write_csv(&self, out: impl std::io::Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["stakeholder".to_owned()];
        header.extend(self.scopes.iter().map(Scope::to_string));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.stakeholder_id.clone()];
            record.extend(
                row.values
                    .iter()
                    .map(|v| v.map(|x| format!("{x:.4}")).unwrap_or_default()),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Weight;

    fn dataset(instances: &[(&str, &str, Evaluation, Weight)]) -> MyChoiceDataset {
        let mut ds = MyChoiceDataset::default();
        ds.add_mcriterion("m1", "economy").unwrap();
        ds.add_mcriterion("m2", "environment").unwrap();
        ds.add_aim("a1", "lower costs", "m1").unwrap();
        ds.add_aim("a2", "raise income", "m1").unwrap();
        ds.add_aim("a3", "protect water", "m2").unwrap();
        for (i, (aim, who, eval, w)) in instances.iter().enumerate() {
            ds.add_instance(PropertyInstance {
                id: format!("p{i}"),
                denomination: format!("property {i}"),
                value: String::new(),
                evaluation: *eval,
                aim_id: aim.to_string(),
                stakeholder_id: who.to_string(),
                weight: *w,
            })
            .unwrap();
        }
        ds
    }

    const ALT: &str = "business-as-usual";
    use Evaluation::{Negative as N, Positive as P};

    #[test]
    fn three_of_four_positive_is_three_quarters() {
        let ds = dataset(&[
            ("a1", "s1", P, Weight::ONE),
            ("a1", "s1", P, Weight::ONE),
            ("a1", "s1", P, Weight::ONE),
            ("a1", "s1", N, Weight::ONE),
        ]);
        let a = attitude(&ds, "s1", ALT, &Scope::Aim("a1".into())).unwrap();
        assert_eq!(a.value, 0.75);
        assert_eq!(a.exact, "3/4");
    }

    #[test]
    fn weights_count_proportionally() {
        let ds = dataset(&[
            ("a1", "s1", P, Weight::new(3, 1).unwrap()),
            ("a1", "s1", N, Weight::ONE),
        ]);
        let a = attitude(&ds, "s1", ALT, &Scope::Aim("a1".into())).unwrap();
        assert_eq!(a.exact, "3/4");
    }

    #[test]
    fn wider_scopes_average_their_parts() {
        let ds = dataset(&[
            ("a1", "s1", P, Weight::ONE),
            ("a2", "s1", N, Weight::ONE),
            ("a3", "s1", P, Weight::ONE),
        ]);
        let m1 = attitude(&ds, "s1", ALT, &Scope::MCriterion("m1".into())).unwrap();
        assert_eq!(m1.exact, "1/2");
        let g = attitude(&ds, "s1", ALT, &Scope::Global).unwrap();
        assert_eq!(g.exact, "3/4");
    }

    #[test]
    fn no_evidence_is_an_error_not_zero() {
        let ds = dataset(&[("a1", "s1", P, Weight::ONE)]);
        assert!(matches!(
            attitude(&ds, "s1", ALT, &Scope::Aim("a3".into())),
            Err(AttitudeError::NoEvidence { .. })
        ));
        assert!(matches!(
            attitude(&ds, "s2", ALT, &Scope::Global),
            Err(AttitudeError::NoEvidence { .. })
        ));
        assert!(matches!(
            attitude(&ds, "s1", "other", &Scope::Global),
            Err(AttitudeError::UnknownAlternative(_))
        ));
        assert!(matches!(
            attitude(&ds, "s1", ALT, &Scope::Aim("zz".into())),
            Err(AttitudeError::UnknownScope(_))
        ));
    }

    #[test]
    fn scope_parsing() {
        assert_eq!("global".parse::<Scope>().unwrap(), Scope::Global);
        assert_eq!("aim:a1".parse::<Scope>().unwrap(), Scope::Aim("a1".into()));
        assert_eq!(
            "mcriterion:m1".parse::<Scope>().unwrap(),
            Scope::MCriterion("m1".into())
        );
        assert!("aim:".parse::<Scope>().is_err());
        assert!("everything".parse::<Scope>().is_err());
    }

    #[test]
    fn matrix_leaves_missing_cells_empty() {
        let ds = dataset(&[("a1", "s1", P, Weight::ONE), ("a3", "s2", N, Weight::ONE)]);
        let table = attitude_matrix(&ds, ALT).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].values, vec![Some(1.0), Some(1.0), None]);
        assert_eq!(table.rows[1].values, vec![Some(0.0), None, Some(0.0)]);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().collect::<Vec<_>>(),
            [
                "stakeholder,global,mcriterion:m1,mcriterion:m2",
                "s1,1.0000,1.0000,",
                "s2,0.0000,,0.0000"
            ]
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn value_in_unit_interval_and_flip_complements(
                evals in proptest::collection::vec((any::<bool>(), 1u64..5, 1u64..4), 1..12)
            ) {
                let rows: Vec<(&str, &str, Evaluation, Weight)> = evals
                    .iter()
                    .map(|(pos, n, d)| ("a1", "s1", if *pos { P } else { N }, Weight::new(*n, *d).unwrap()))
                    .collect();
                let ds = dataset(&rows);
                let a = attitude(&ds, "s1", ALT, &Scope::Aim("a1".into())).unwrap();
                prop_assert!((0.0..=1.0).contains(&a.value));
                let flipped: Vec<_> = rows.iter().map(|(x, s, e, w)| (*x, *s, e.flipped(), *w)).collect();
                let b = attitude(&dataset(&flipped), "s1", ALT, &Scope::Aim("a1".into())).unwrap();
                prop_assert!((a.value + b.value - 1.0).abs() < 1e-12);
            }

            #[test]
            fn uniform_rescaling_leaves_value_unchanged(
                evals in proptest::collection::vec((any::<bool>(), 1u64..5), 1..10),
                factor in 1u64..7,
            ) {
                let rows: Vec<(&str, &str, Evaluation, Weight)> = evals
                    .iter()
                    .map(|(pos, n)| ("a1", "s1", if *pos { P } else { N }, Weight::new(*n, 1).unwrap()))
                    .collect();
                let scaled: Vec<_> = rows
                    .iter()
                    .map(|(x, s, e, w)| (*x, *s, *e, w.scaled(factor, 2).unwrap()))
                    .collect();
                let a = attitude(&dataset(&rows), "s1", ALT, &Scope::Aim("a1".into())).unwrap();
                let b = attitude(&dataset(&scaled), "s1", ALT, &Scope::Aim("a1".into())).unwrap();
                prop_assert_eq!(a.exact, b.exact);
            }
        }
    }
}
