//! Conversion between the Godet and MyChoice schemas.
//!
//! The two schemas differ in two ways. A MyChoice property with several
//! values is one property, where Godet counts one criterion per value; and a
//! MyChoice aim has exactly one parent criterion, where a Godet concept may
//! sit in several variables. Going from Godet to MyChoice therefore needs a
//! facilitator decision for every multi-variable concept
//! ([`AlignmentMap::parent_resolutions`]); the memberships not chosen are
//! dropped and reported.
//!
//! Godet criteria carry property statements in their text as
//! `denomination = value (+)`, optionally followed by `[w=3/2]`. A bare
//! phrase reads as a property without value, evaluated positively.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Criterion};
use crate::ontology::mychoice::{AimId, MCriterionId};
use crate::ontology::{
    godet_stats, mychoice_stats, ConceptId, Evaluation, GodetOntology, MCriterion,
    MyChoiceDataset, OntologyError, OntologyStats, PropertyInstance, Variable, VariableId,
    Weight,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("concepts need a parent decision before conversion: {}", .0.join(", "))]
    Unresolved(Vec<ConceptId>),
    #[error("concepts need a MyChoice criterion choice within a combined variable: {}", .0.join(", "))]
    AmbiguousMCriterion(Vec<ConceptId>),
    #[error("MyChoice criteria missing from the map: {}", .0.join(", "))]
    Unmapped(Vec<MCriterionId>),
    #[error("variables not covered by the map: {}", .0.join(", "))]
    NotSurjective(Vec<VariableId>),
    #[error("map targets unknown variables: {}", .0.join(", "))]
    UnknownVariables(Vec<VariableId>),
    #[error("map names MyChoice criteria missing from the catalogue: {}", .0.join(", "))]
    UnknownMCriteria(Vec<MCriterionId>),
    #[error("resolution for concept {concept:?} picks {variable:?}, which is not one of its variables")]
    BadResolution { concept: ConceptId, variable: VariableId },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

/// The facilitator's correspondence between the two schemas.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentMap {
    pub mcriterion_to_variable: BTreeMap<MCriterionId, VariableId>,
    #[serde(default)]
    pub parent_resolutions: BTreeMap<ConceptId, VariableId>,
    /// For concepts whose variable combines several MyChoice criteria: which
    /// one the concept's aim files under.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mcriterion_choices: BTreeMap<ConceptId, MCriterionId>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub concept_aim_links: BTreeSet<(ConceptId, AimId)>,
}

impl AlignmentMap {
    /// MyChoice criteria mapped onto each variable.
    pub fn preimages(&self) -> BTreeMap<&VariableId, Vec<&MCriterionId>> {
        let mut out: BTreeMap<&VariableId, Vec<&MCriterionId>> = BTreeMap::new();
        for (m, v) in &self.mcriterion_to_variable {
            out.entry(v).or_default().push(m);
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("map serializes");
        s.push('\n');
        s
    }
}

/// A self-contained Godet ontology with the criteria it groups.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GodetFragment {
    pub corpus: Corpus,
    pub ontology: GodetOntology,
}

/// A property statement carried in a Godet criterion's text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Argument {
    pub denomination: String,
    pub value: String,
    pub evaluation: Evaluation,
    pub weight: Weight,
}

pub fn format_argument(arg: &Argument) -> String {
    if arg.value.is_empty() && arg.evaluation == Evaluation::Positive && arg.weight.is_one() {
        return arg.denomination.clone();
    }
    let mut s = format!("{} = ", arg.denomination);
    if !arg.value.is_empty() {
        s.push_str(&arg.value);
        s.push(' ');
    }
    s.push('(');
    s.push(arg.evaluation.symbol());
    s.push(')');
    if !arg.weight.is_one() {
        s.push_str(&format!(" [w={}]", arg.weight));
    }
    s
}

pub fn parse_argument(raw: &str) -> Argument {
    let bare = || Argument {
        denomination: raw.trim().to_owned(),
        value: String::new(),
        evaluation: Evaluation::Positive,
        weight: Weight::ONE,
    };
    let mut body = raw.trim();
    let mut weight = Weight::ONE;
    if let Some(stripped) = body.strip_suffix(']') {
        if let Some(idx) = stripped.rfind("[w=") {
            match stripped[idx + 3..].parse::<Weight>() {
                Ok(w) => {
                    weight = w;
                    body = stripped[..idx].trim_end();
                }
                Err(_) => return bare(),
            }
        }
    }
    let evaluation = if let Some(b) = body.strip_suffix("(+)") {
        body = b;
        Evaluation::Positive
    } else if let Some(b) = body.strip_suffix("(-)").or_else(|| body.strip_suffix("(−)")) {
        body = b;
        Evaluation::Negative
    } else {
        return bare();
    };
    let (denomination, value) = match body.split_once('=') {
        Some((d, v)) => (d.trim(), v.trim()),
        None => (body.trim(), ""),
    };
    if denomination.is_empty() {
        return bare();
    }
    Argument {
        denomination: denomination.to_owned(),
        value: value.to_owned(),
        evaluation,
        weight,
    }
}

/// What a Godet → MyChoice conversion had to leave behind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConversionNotes {
    /// (concept, variable) memberships not carried over.
    pub dropped_memberships: Vec<(ConceptId, VariableId)>,
    /// Criteria outside any concept, not converted.
    pub unassigned_criteria: Vec<String>,
}

fn check_targets(
    map: &AlignmentMap,
    variables: &BTreeMap<VariableId, Variable>,
) -> Result<(), AlignmentError> {
    let unknown: BTreeSet<_> = map
        .mcriterion_to_variable
        .values()
        .filter(|v| !variables.contains_key(*v))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(AlignmentError::UnknownVariables(unknown.into_iter().collect()));
    }
    Ok(())
}

/// Surjectivity of the map onto `variables`.
pub fn check_surjective(
    map: &AlignmentMap,
    variables: &BTreeMap<VariableId, Variable>,
) -> Result<(), AlignmentError> {
    check_targets(map, variables)?;
    let image: BTreeSet<&VariableId> = map.mcriterion_to_variable.values().collect();
    let missing: Vec<_> = variables
        .keys()
        .filter(|v| !image.contains(v))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(AlignmentError::NotSurjective(missing));
    }
    Ok(())
}

/// Each concept becomes an aim under one MyChoice criterion; each criterion
/// becomes a property instance. `catalogue` supplies MyChoice criterion labels.
pub fn godet_to_mychoice(
    godet: &GodetFragment,
    map: &AlignmentMap,
    catalogue: &BTreeMap<MCriterionId, MCriterion>,
    alternative: &crate::ontology::Alternative,
) -> Result<(MyChoiceDataset, ConversionNotes), AlignmentError> {
    check_surjective(map, &godet.ontology.variables)?;
    let unknown: Vec<_> = map
        .mcriterion_to_variable
        .keys()
        .filter(|m| !catalogue.contains_key(*m))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(AlignmentError::UnknownMCriteria(unknown));
    }

    let mut notes = ConversionNotes::default();
    let mut unresolved = Vec::new();
    let mut parents: BTreeMap<&ConceptId, &VariableId> = BTreeMap::new();
    for concept in godet.ontology.concepts.values() {
        let resolution = map.parent_resolutions.get(&concept.id);
        let chosen = match (concept.variable_ids.len(), resolution) {
            (0, _) => None,
            (_, Some(v)) => {
                if !concept.variable_ids.contains(v) {
                    return Err(AlignmentError::BadResolution {
                        concept: concept.id.clone(),
                        variable: v.clone(),
                    });
                }
                Some(v)
            }
            (1, None) => concept.variable_ids.iter().next(),
            (_, None) => None,
        };
        match chosen {
            Some(v) => {
                for other in concept.variable_ids.iter().filter(|o| *o != v) {
                    notes
                        .dropped_memberships
                        .push((concept.id.clone(), other.clone()));
                }
                parents.insert(&concept.id, v);
            }
            None => unresolved.push(concept.id.clone()),
        }
    }
    if !unresolved.is_empty() {
        return Err(AlignmentError::Unresolved(unresolved));
    }

    let preimages = map.preimages();
    let mut ambiguous = Vec::new();
    let mut aim_parent: BTreeMap<&ConceptId, &MCriterionId> = BTreeMap::new();
    for (concept, variable) in &parents {
        let candidates = &preimages[variable];
        let pick = if candidates.len() == 1 {
            Some(candidates[0])
        } else {
            map.mcriterion_choices
                .get(*concept)
                .filter(|m| candidates.contains(m))
        };
        match pick {
            Some(m) => {
                aim_parent.insert(concept, m);
            }
            None => ambiguous.push((*concept).clone()),
        }
    }
    if !ambiguous.is_empty() {
        return Err(AlignmentError::AmbiguousMCriterion(ambiguous));
    }

    let mut dataset = MyChoiceDataset {
        alternative: alternative.clone(),
        ..MyChoiceDataset::default()
    };
    for m in map.mcriterion_to_variable.keys() {
        let entry = &catalogue[m];
        dataset.add_mcriterion(&entry.id, &entry.label)?;
    }
    for concept in godet.ontology.concepts.values() {
        dataset.add_aim(&concept.id, &concept.label, aim_parent[&concept.id])?;
        for criterion_id in &concept.criterion_ids {
            let Some(criterion) = godet.corpus.criteria.get(criterion_id) else {
                return Err(OntologyError::UnknownCriterion(criterion_id.clone()).into());
            };
            let arg = parse_argument(&criterion.raw_text);
            dataset.add_instance(PropertyInstance {
                id: criterion.id.clone(),
                denomination: arg.denomination,
                value: arg.value,
                evaluation: arg.evaluation,
                aim_id: concept.id.clone(),
                stakeholder_id: criterion.source_id.clone(),
                weight: arg.weight,
            })?;
        }
    }
    notes.unassigned_criteria = godet
        .corpus
        .criteria
        .keys()
        .filter(|c| !godet.ontology.assignments.contains_key(*c))
        .cloned()
        .collect();
    Ok((dataset, notes))
}

/// Each (property, value, evaluation) becomes one Godet criterion; each aim a
/// concept with a single variable. Returns the map extended with the
/// concept↔aim links and the MyChoice criterion choices needed to go back.
pub fn mychoice_to_godet(
    dataset: &MyChoiceDataset,
    map: &AlignmentMap,
    variables: &BTreeMap<VariableId, Variable>,
) -> Result<(GodetFragment, AlignmentMap), AlignmentError> {
    let unmapped: Vec<_> = dataset
        .mcriteria
        .keys()
        .filter(|m| !map.mcriterion_to_variable.contains_key(*m))
        .cloned()
        .collect();
    if !unmapped.is_empty() {
        return Err(AlignmentError::Unmapped(unmapped));
    }
    check_targets(map, variables)?;

    let preimages = map.preimages();
    let mut fragment = GodetFragment::default();
    let mut out_map = map.clone();
    for m in dataset.mcriteria.keys() {
        let v = &map.mcriterion_to_variable[m];
        fragment
            .ontology
            .variables
            .entry(v.clone())
            .or_insert_with(|| variables[v].clone());
    }
    for aim in dataset.aims.values() {
        let variable = map.mcriterion_to_variable[&aim.mcriterion_id].clone();
        fragment.ontology.create_concept(&aim.id, &aim.label)?;
        fragment
            .ontology
            .concepts
            .get_mut(&aim.id)
            .expect("just created")
            .variable_ids
            .insert(variable.clone());
        out_map
            .concept_aim_links
            .insert((aim.id.clone(), aim.id.clone()));
        if preimages[&variable].len() > 1 {
            out_map
                .mcriterion_choices
                .insert(aim.id.clone(), aim.mcriterion_id.clone());
        }
    }
    for p in dataset.instances.values() {
        let mut criterion = Criterion::new(
            p.id.clone(),
            format_argument(&Argument {
                denomination: p.denomination.clone(),
                value: p.value.clone(),
                evaluation: p.evaluation,
                weight: p.weight,
            }),
            p.stakeholder_id.clone(),
        );
        criterion.concept_id = Some(p.aim_id.clone());
        fragment
            .ontology
            .assignments
            .insert(p.id.clone(), p.aim_id.clone());
        fragment
            .ontology
            .concepts
            .get_mut(&p.aim_id)
            .ok_or_else(|| OntologyError::UnknownAim(p.aim_id.clone()))?
            .criterion_ids
            .insert(p.id.clone());
        fragment.corpus.criteria.insert(p.id.clone(), criterion);
    }
    Ok((fragment, out_map))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiParentConcept {
    pub concept_id: ConceptId,
    pub variables: Vec<VariableId>,
    pub resolution: Option<VariableId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CombinedVariable {
    pub variable_id: VariableId,
    pub mcriteria: Vec<MCriterionId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub godet: OntologyStats,
    pub mychoice: OntologyStats,
    pub unmapped_mcriteria: Vec<MCriterionId>,
    pub uncovered_variables: Vec<VariableId>,
    pub unknown_targets: Vec<VariableId>,
    pub multi_parent_concepts: Vec<MultiParentConcept>,
    pub combined_variables: Vec<CombinedVariable>,
}

impl AlignmentReport {
    /// Items that block a conversion.
    pub fn discrepancies(&self) -> usize {
        self.unmapped_mcriteria.len()
            + self.uncovered_variables.len()
            + self.unknown_targets.len()
            + self
                .multi_parent_concepts
                .iter()
                .filter(|c| c.resolution.is_none())
                .count()
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let row = |name: &str, st: &OntologyStats| {
            format!(
                "{name:<10} criteria {:>5}  concepts {:>5}  variables {:>3}\n",
                st.criteria, st.concepts, st.variables
            )
        };
        s.push_str(&row("godet", &self.godet));
        s.push_str(&row("mychoice", &self.mychoice));
        let list = |items: &[String]| {
            if items.is_empty() {
                "none".to_owned()
            } else {
                items.join(", ")
            }
        };
        s.push_str(&format!("unmapped MyChoice criteria: {}\n", list(&self.unmapped_mcriteria)));
        s.push_str(&format!("uncovered variables: {}\n", list(&self.uncovered_variables)));
        s.push_str(&format!("unknown map targets: {}\n", list(&self.unknown_targets)));
        s.push_str(&format!("multi-parent concepts: {}\n", self.multi_parent_concepts.len()));
        for c in &self.multi_parent_concepts {
            s.push_str(&format!(
                "  {} in {} -> {}\n",
                c.concept_id,
                c.variables.join(", "),
                c.resolution.as_deref().unwrap_or("UNRESOLVED")
            ));
        }
        s.push_str(&format!("combined variables: {}\n", self.combined_variables.len()));
        for g in &self.combined_variables {
            s.push_str(&format!("  {} <- {}\n", g.variable_id, g.mcriteria.join(", ")));
        }
        s.push_str(&format!("discrepancies: {}\n", self.discrepancies()));
        s
    }
}

pub fn alignment_report(
    godet: &GodetFragment,
    mychoice: &MyChoiceDataset,
    map: &AlignmentMap,
) -> AlignmentReport {
    let image: BTreeSet<&VariableId> = map.mcriterion_to_variable.values().collect();
    AlignmentReport {
        godet: godet_stats(&godet.corpus, &godet.ontology),
        mychoice: mychoice_stats(mychoice),
        unmapped_mcriteria: mychoice
            .mcriteria
            .keys()
            .filter(|m| !map.mcriterion_to_variable.contains_key(*m))
            .cloned()
            .collect(),
        uncovered_variables: godet
            .ontology
            .variables
            .keys()
            .filter(|v| !image.contains(v))
            .cloned()
            .collect(),
        unknown_targets: image
            .iter()
            .filter(|v| !godet.ontology.variables.contains_key(**v))
            .map(|v| (*v).clone())
            .collect(),
        multi_parent_concepts: godet
            .ontology
            .concepts
            .values()
            .filter(|c| c.variable_ids.len() > 1)
            .map(|c| MultiParentConcept {
                concept_id: c.id.clone(),
                variables: c.variable_ids.iter().cloned().collect(),
                resolution: map
                    .parent_resolutions
                    .get(&c.id)
                    .filter(|v| c.variable_ids.contains(*v))
                    .cloned(),
            })
            .collect(),
        combined_variables: map
            .preimages()
            .into_iter()
            .filter(|(_, ms)| ms.len() > 1)
            .map(|(v, ms)| CombinedVariable {
                variable_id: v.clone(),
                mcriteria: ms.into_iter().cloned().collect(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Alternative;

    fn variables(ids: &[&str]) -> BTreeMap<VariableId, Variable> {
        ids.iter()
            .map(|id| {
                (
                    id.to_string(),
                    Variable {
                        id: id.to_string(),
                        label: format!("variable {id}"),
                        modalities: vec![],
                        is_key: false,
                    },
                )
            })
            .collect()
    }

    fn catalogue(ids: &[&str]) -> BTreeMap<MCriterionId, MCriterion> {
        ids.iter()
            .map(|id| {
                (
                    id.to_string(),
                    MCriterion {
                        id: id.to_string(),
                        label: format!("criterion {id}"),
                    },
                )
            })
            .collect()
    }

    /// (concept id, its variables, its (criterion id, text) pairs)
    type ConceptShape<'a> = (&'a str, &'a [&'a str], &'a [(&'a str, &'a str)]);

    fn fragment(concepts: &[ConceptShape], vars: &[&str]) -> GodetFragment {
        let mut f = GodetFragment::default();
        f.ontology.variables = variables(vars);
        for (cid, cvars, criteria) in concepts {
            f.ontology.create_concept(cid, &format!("concept {cid}")).unwrap();
            for v in *cvars {
                f.ontology.attach_variable(cid, v).unwrap();
            }
            for (crid, text) in *criteria {
                f.corpus
                    .criteria
                    .insert(crid.to_string(), Criterion::new(*crid, *text, "s1"));
                f.ontology.assignments.insert(crid.to_string(), cid.to_string());
                f.ontology
                    .concepts
                    .get_mut(*cid)
                    .unwrap()
                    .criterion_ids
                    .insert(crid.to_string());
            }
        }
        f
    }

    fn map(pairs: &[(&str, &str)]) -> AlignmentMap {
        AlignmentMap {
            mcriterion_to_variable: pairs
                .iter()
                .map(|(m, v)| (m.to_string(), v.to_string()))
                .collect(),
            ..AlignmentMap::default()
        }
    }

    #[test]
    fn argument_text_forms() {
        let a = parse_argument("production costs=mastered(+)");
        assert_eq!(a.denomination, "production costs");
        assert_eq!(a.value, "mastered");
        assert_eq!(a.evaluation, Evaluation::Positive);
        assert_eq!(format_argument(&a), "production costs = mastered (+)");
        let b = parse_argument("production costs = fluctuating (−) [w=3/2]");
        assert_eq!(b.evaluation, Evaluation::Negative);
        assert_eq!(b.weight, Weight::new(3, 2).unwrap());
        assert_eq!(format_argument(&b), "production costs = fluctuating (-) [w=3/2]");
        let bare = parse_argument("labour cost");
        assert_eq!(bare.value, "");
        assert_eq!(format_argument(&bare), "labour cost");
        let no_value = parse_argument("animal welfare (-)");
        assert_eq!(no_value.denomination, "animal welfare");
        assert_eq!(format_argument(&no_value), "animal welfare = (-)");
        assert_eq!(parse_argument(&format_argument(&no_value)), no_value);
    }

    #[test]
    fn two_values_collapse_into_one_property() {
        let f = fragment(
            &[(
                "k1",
                &["V1"],
                &[
                    ("c1", "production costs=mastered(+)"),
                    ("c2", "production costs=fluctuating(-)"),
                ],
            )],
            &["V1"],
        );
        let (ds, notes) =
            godet_to_mychoice(&f, &map(&[("m1", "V1")]), &catalogue(&["m1"]), &Alternative::business_as_usual())
                .unwrap();
        let props = ds.properties();
        assert_eq!(props.len(), 1);
        let pairs: Vec<_> = props[0]
            .instances
            .iter()
            .map(|p| (p.value.as_str(), p.evaluation))
            .collect();
        assert_eq!(
            pairs,
            [("mastered", Evaluation::Positive), ("fluctuating", Evaluation::Negative)]
        );
        assert_eq!(ds.aims["k1"].mcriterion_id, "m1");
        assert!(notes.dropped_memberships.is_empty());
    }

    #[test]
    fn multi_parent_needs_resolution() {
        let f = fragment(&[("k1", &["V1", "V2"], &[("c1", "x")])], &["V1", "V2"]);
        let mut m = map(&[("m1", "V1"), ("m2", "V2")]);
        let cat = catalogue(&["m1", "m2"]);
        let alt = Alternative::business_as_usual();
        assert_eq!(
            godet_to_mychoice(&f, &m, &cat, &alt).unwrap_err(),
            AlignmentError::Unresolved(vec!["k1".into()])
        );
        m.parent_resolutions.insert("k1".into(), "V1".into());
        let (ds, notes) = godet_to_mychoice(&f, &m, &cat, &alt).unwrap();
        assert_eq!(ds.aims["k1"].mcriterion_id, "m1");
        assert_eq!(notes.dropped_memberships, vec![("k1".to_string(), "V2".to_string())]);
        // back again: V2 membership is gone
        let (back, _) = mychoice_to_godet(&ds, &m, &f.ontology.variables).unwrap();
        assert_eq!(
            back.ontology.concepts["k1"].variable_ids,
            ["V1".to_string()].into_iter().collect()
        );
    }

    #[test]
    fn resolution_must_name_a_parent() {
        let f = fragment(&[("k1", &["V1", "V2"], &[])], &["V1", "V2", "V3"]);
        let mut m = map(&[("m1", "V1"), ("m2", "V2"), ("m3", "V3")]);
        m.parent_resolutions.insert("k1".into(), "V3".into());
        assert!(matches!(
            godet_to_mychoice(&f, &m, &catalogue(&["m1", "m2", "m3"]), &Alternative::business_as_usual()),
            Err(AlignmentError::BadResolution { .. })
        ));
    }

    #[test]
    fn combined_variable_needs_choice() {
        let f = fragment(&[("k1", &["V1"], &[("c1", "x")])], &["V1"]);
        let mut m = map(&[("m1", "V1"), ("m2", "V1")]);
        let cat = catalogue(&["m1", "m2"]);
        let alt = Alternative::business_as_usual();
        assert_eq!(
            godet_to_mychoice(&f, &m, &cat, &alt).unwrap_err(),
            AlignmentError::AmbiguousMCriterion(vec!["k1".into()])
        );
        m.mcriterion_choices.insert("k1".into(), "m2".into());
        let (ds, _) = godet_to_mychoice(&f, &m, &cat, &alt).unwrap();
        assert_eq!(ds.aims["k1"].mcriterion_id, "m2");
    }

    #[test]
    fn non_surjective_map_rejected_before_conversion() {
        let f = fragment(&[("k1", &["V1"], &[])], &["V1", "V2"]);
        assert_eq!(
            godet_to_mychoice(&f, &map(&[("m1", "V1")]), &catalogue(&["m1"]), &Alternative::business_as_usual())
                .unwrap_err(),
            AlignmentError::NotSurjective(vec!["V2".into()])
        );
    }

    #[test]
    fn property_values_become_criteria() {
        let mut ds = MyChoiceDataset::default();
        ds.add_mcriterion("m1", "costs").unwrap();
        ds.add_aim("a1", "control costs", "m1").unwrap();
        for (id, value, eval) in [
            ("p1", "mastered", Evaluation::Positive),
            ("p2", "fluctuating", Evaluation::Negative),
        ] {
            ds.add_instance(PropertyInstance {
                id: id.into(),
                denomination: "production costs".into(),
                value: value.into(),
                evaluation: eval,
                aim_id: "a1".into(),
                stakeholder_id: "s1".into(),
                weight: Weight::ONE,
            })
            .unwrap();
        }
        let (f, _) = mychoice_to_godet(&ds, &map(&[("m1", "V1")]), &variables(&["V1"])).unwrap();
        assert_eq!(f.corpus.criteria.len(), 2);
        assert_eq!(f.ontology.concepts["a1"].criterion_ids.len(), 2);
        assert_eq!(f.corpus.criteria["p2"].raw_text, "production costs = fluctuating (-)");
    }

    #[test]
    fn sixteen_criteria_combine_into_twelve_variables() {
        let mut ds = MyChoiceDataset::default();
        let mut m = AlignmentMap::default();
        for i in 0..16 {
            let id = format!("m{i:02}");
            ds.add_mcriterion(&id, &format!("criterion {i}")).unwrap();
            m.mcriterion_to_variable
                .insert(id, format!("V{:02}", i.min(11)));
        }
        let vars: Vec<String> = (0..12).map(|i| format!("V{i:02}")).collect();
        let vars = variables(&vars.iter().map(String::as_str).collect::<Vec<_>>());
        let (f, _) = mychoice_to_godet(&ds, &m, &vars).unwrap();
        assert_eq!(f.ontology.variables.len(), 12);
    }

    #[test]
    fn empty_dataset_gives_empty_fragment() {
        let (f, _) =
            mychoice_to_godet(&MyChoiceDataset::default(), &AlignmentMap::default(), &BTreeMap::new())
                .unwrap();
        assert_eq!(f, GodetFragment::default());
    }

    #[test]
    fn unmapped_mcriterion_rejected_and_reported() {
        let mut ds = MyChoiceDataset::default();
        ds.add_mcriterion("m1", "a").unwrap();
        ds.add_mcriterion("m2", "b").unwrap();
        let m = map(&[("m1", "V1")]);
        assert_eq!(
            mychoice_to_godet(&ds, &m, &variables(&["V1"])).unwrap_err(),
            AlignmentError::Unmapped(vec!["m2".into()])
        );
        let f = fragment(&[("k1", &["V1"], &[])], &["V1"]);
        let report = alignment_report(&f, &ds, &m);
        assert_eq!(report.unmapped_mcriteria, vec!["m2".to_string()]);
        assert_eq!(report.discrepancies(), 1);
    }

    #[test]
    fn identical_toy_ontologies_have_no_discrepancies() {
        let f = fragment(&[("k1", &["V1"], &[("c1", "price = high (-)")])], &["V1"]);
        let m = map(&[("m1", "V1")]);
        let (ds, _) = godet_to_mychoice(&f, &m, &catalogue(&["m1"]), &Alternative::business_as_usual()).unwrap();
        let report = alignment_report(&f, &ds, &m);
        assert_eq!(report.discrepancies(), 0);
        assert_eq!(report.godet.criteria, report.mychoice.criteria);
        assert_eq!(report.godet.concepts, report.mychoice.concepts);
        assert_eq!(report.godet.variables, report.mychoice.variables);
    }

    #[test]
    fn map_json_shape() {
        let m = AlignmentMap::from_json(
            r#"{"mcriterion_to_variable": {"m1": "V1"}, "parent_resolutions": {"k1": "V1"}}"#,
        )
        .unwrap();
        assert_eq!(m.mcriterion_to_variable["m1"], "V1");
        assert_eq!(AlignmentMap::from_json(&m.to_json()).unwrap(), m);
    }
}
