//! MyChoice-side schema: criteria, aims, and evaluated property instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::CheckedMul;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::OntologyError;
use crate::corpus::{is_token, normalize, SourceId};

pub type MCriterionId = String;
pub type AimId = String;
pub type PropertyId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Positive,
    Negative,
}

impl Evaluation {
    pub fn symbol(self) -> char {
        match self {
            Evaluation::Positive => '+',
            Evaluation::Negative => '-',
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Evaluation::Positive => Evaluation::Negative,
            Evaluation::Negative => Evaluation::Positive,
        }
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Strictly positive rational weight of a property instance, written `"3/2"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(Ratio<u64>);

impl Weight {
    pub const ONE: Weight = Weight(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Option<Weight> {
        (numer > 0 && denom > 0).then(|| Weight(Ratio::new(numer, denom)))
    }

    pub fn ratio(self) -> Ratio<u64> {
        self.0
    }

    pub fn is_one(&self) -> bool {
        *self == Weight::ONE
    }

    /// `None` on overflow.
    pub fn scaled(self, numer: u64, denom: u64) -> Option<Weight> {
        let factor = Weight::new(numer, denom)?;
        self.0.checked_mul(&factor.0).map(Weight)
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ONE
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Weight {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("weight must be a positive rational like \"3/2\", got {s:?}");
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: u64 = n.parse().map_err(|_| bad())?;
        let d: u64 = d.parse().map_err(|_| bad())?;
        Weight::new(n, d).ok_or_else(bad)
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(n) => Weight::new(n, 1)
                .ok_or_else(|| serde::de::Error::custom("weight must be positive")),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MCriterion {
    pub id: MCriterionId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aim {
    pub id: AimId,
    pub label: String,
    pub mcriterion_id: MCriterionId,
}

/// One stakeholder's statement: a property's value and its evaluation with
/// respect to the alternative under study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyInstance {
    pub id: PropertyId,
    pub denomination: String,
    pub value: String,
    pub evaluation: Evaluation,
    pub aim_id: AimId,
    pub stakeholder_id: SourceId,
    #[serde(default, skip_serializing_if = "Weight::is_one")]
    pub weight: Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub id: String,
    pub label: String,
}

impl Alternative {
    pub fn business_as_usual() -> Self {
        Alternative {
            id: "business-as-usual".into(),
            label: "pursuing business as usual".into(),
        }
    }
}

/// A property: one denomination under one aim, with all its stated values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Property<'a> {
    pub aim_id: &'a str,
    pub denomination: &'a str,
    pub instances: Vec<&'a PropertyInstance>,
}

/// MyChoice arguments gathered for one alternative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MyChoiceDataset {
    pub alternative: Alternative,
    #[serde(default)]
    pub mcriteria: BTreeMap<MCriterionId, MCriterion>,
    #[serde(default)]
    pub aims: BTreeMap<AimId, Aim>,
    #[serde(default)]
    pub instances: BTreeMap<PropertyId, PropertyInstance>,
}

impl Default for MyChoiceDataset {
    fn default() -> Self {
        MyChoiceDataset {
            alternative: Alternative::business_as_usual(),
            mcriteria: BTreeMap::new(),
            aims: BTreeMap::new(),
            instances: BTreeMap::new(),
        }
    }
}

impl MyChoiceDataset {
    pub fn add_mcriterion(&mut self, id: &str, label: &str) -> Result<(), OntologyError> {
        if !is_token(id) {
            return Err(OntologyError::InvalidId(id.to_owned()));
        }
        if self.mcriteria.contains_key(id) {
            return Err(OntologyError::DuplicateId(id.to_owned()));
        }
        if label.trim().is_empty() {
            return Err(OntologyError::EmptyLabel);
        }
        if self.mcriteria.values().any(|m| m.label == label) {
            return Err(OntologyError::DuplicateMCriterionLabel(label.to_owned()));
        }
        self.mcriteria.insert(
            id.to_owned(),
            MCriterion {
                id: id.to_owned(),
                label: label.to_owned(),
            },
        );
        Ok(())
    }

    pub fn add_aim(&mut self, id: &str, label: &str, mcriterion_id: &str) -> Result<(), OntologyError> {
        if !is_token(id) {
            return Err(OntologyError::InvalidId(id.to_owned()));
        }
        if self.aims.contains_key(id) {
            return Err(OntologyError::DuplicateId(id.to_owned()));
        }
        if label.trim().is_empty() {
            return Err(OntologyError::EmptyLabel);
        }
        if !self.mcriteria.contains_key(mcriterion_id) {
            return Err(OntologyError::UnknownMCriterion(mcriterion_id.to_owned()));
        }
        self.aims.insert(
            id.to_owned(),
            Aim {
                id: id.to_owned(),
                label: label.to_owned(),
                mcriterion_id: mcriterion_id.to_owned(),
            },
        );
        Ok(())
    }

    /// Previously registered aim whose label matches after normalization.
    pub fn find_aim(&self, label: &str) -> Option<&Aim> {
        let wanted = normalize(label);
        self.aims.values().find(|a| normalize(&a.label) == wanted)
    }

    pub fn add_instance(&mut self, instance: PropertyInstance) -> Result<(), OntologyError> {
        if !is_token(&instance.id) {
            return Err(OntologyError::InvalidId(instance.id));
        }
        if self.instances.contains_key(&instance.id) {
            return Err(OntologyError::DuplicateId(instance.id));
        }
        if !self.aims.contains_key(&instance.aim_id) {
            return Err(OntologyError::UnknownAim(instance.aim_id));
        }
        if instance.denomination.trim().is_empty() {
            return Err(OntologyError::EmptyLabel);
        }
        let clash = self.instances.values().any(|p| {
            p.aim_id == instance.aim_id
                && p.denomination == instance.denomination
                && p.value == instance.value
                && p.evaluation == instance.evaluation
                && p.stakeholder_id == instance.stakeholder_id
        });
        if clash {
            return Err(OntologyError::DuplicateArgument {
                aim: instance.aim_id,
                denomination: instance.denomination,
                value: instance.value,
                evaluation: instance.evaluation,
                stakeholder: instance.stakeholder_id,
            });
        }
        self.instances.insert(instance.id.clone(), instance);
        Ok(())
    }

    /// Instances grouped into properties by (aim, normalized denomination).
    pub fn properties(&self) -> Vec<Property<'_>> {
        let mut groups: BTreeMap<(&str, String), Vec<&PropertyInstance>> = BTreeMap::new();
        for p in self.instances.values() {
            groups
                .entry((p.aim_id.as_str(), normalize(&p.denomination)))
                .or_default()
                .push(p);
        }
        groups
            .into_iter()
            .map(|((aim_id, _), instances)| Property {
                aim_id,
                denomination: instances[0].denomination.as_str(),
                instances,
            })
            .collect()
    }

    pub fn aims_of(&self, mcriterion_id: &str) -> impl Iterator<Item = &Aim> {
        let id = mcriterion_id.to_owned();
        self.aims.values().filter(move |a| a.mcriterion_id == id)
    }

    pub fn stakeholders(&self) -> BTreeSet<&str> {
        self.instances
            .values()
            .map(|p| p.stakeholder_id.as_str())
            .collect()
    }
}
