//! A deterministic synthetic study with the corpus statistics of the
//! pig-farming prospective study: 21 texts, 626 criteria in 169 concepts
//! under 12 variables on the Godet side; 313 properties in 237 aims under 16
//! criteria on the MyChoice side, combined onto the same 12 variables.
//!
//! The content is invented; only the shape is meant to match.

use chrono::{DateTime, Duration, TimeZone, Utc};

use crate::alignment::AlignmentMap;
use crate::corpus::{SourceKind, SourceText};
use crate::ontology::{Evaluation, PropertyInstance, Weight};
use crate::project::{Action, Project};
use crate::structural::InfluenceRelation;

pub const FACILITATOR: &str = "facilitator";

const VARIABLES: [(&str, [&str; 2]); 12] = [
    (
        "production costs",
        ["production costs mastered", "fluctuating production costs"],
    ),
    ("animal welfare", ["welfare standards raised", "welfare standards unchanged"]),
    ("environmental regulation", ["regulation tightened", "regulation stable"]),
    ("market prices", ["prices remunerative", "prices volatile"]),
    ("consumer expectations", ["demand for local quality", "demand for low prices"]),
    ("farm succession", ["farms taken over", "farms abandoned"]),
    ("technical innovation", ["innovation adopted", "innovation resisted"]),
    ("feed supply", ["feed produced locally", "feed imported"]),
    ("sanitary risks", ["risks contained", "recurring epidemics"]),
    ("territorial integration", ["farms accepted locally", "conflicts with neighbours"]),
    ("public support", ["subsidies maintained", "subsidies withdrawn"]),
    ("working conditions", ["attractive jobs", "labour shortage"]),
];

const TOPICS: [&str; 13] = [
    "labour", "feed", "energy", "water", "soil", "manure", "pork", "land", "building",
    "veterinary", "transport", "slaughter", "packaging",
];

const ASPECTS: [&str; 13] = [
    "cost", "price", "quality", "availability", "regulation", "management", "investment",
    "risk", "efficiency", "demand", "supply", "standard", "waste",
];

const CRITERION_FORMS: [&str; 8] = [
    "{t} {a}",
    "{a} of {t}",
    "{t} {a}s",
    "the {t} {a}",
    "high {t} {a}",
    "rising {t} {a}",
    "{t} {a} issues",
    "concerns about {t} {a}",
];

const MCRITERIA: [&str; 16] = [
    "economic viability",
    "animal health and welfare",
    "environmental impact",
    "income stability",
    "product quality",
    "generational renewal",
    "technical performance",
    "resource autonomy",
    "biosecurity",
    "social acceptance",
    "policy framework",
    "quality of work life",
    "investment capacity",
    "ethical acceptability",
    "pollution control",
    "market access",
];

const AIM_VERBS: [&str; 16] = [
    "reduce", "improve", "secure", "maintain", "develop", "limit", "protect", "control",
    "increase", "promote", "preserve", "stabilise", "support", "share", "anticipate", "adapt",
];

const AIM_OBJECTS: [&str; 15] = [
    "farm income",
    "herd health",
    "water quality",
    "local sales",
    "working time",
    "feed autonomy",
    "odour nuisance",
    "meat quality",
    "public image",
    "market outlets",
    "energy use",
    "land access",
    "young farmers",
    "antibiotic use",
    "neighbour relations",
];

const VALUES: [&str; 6] = ["low", "high", "stable", "uncertain", "rising", "falling"];

fn variable_id(i: usize) -> String {
    format!("V{:02}", i + 1)
}

fn concept_id(j: usize) -> String {
    format!("k{:03}", j + 1)
}

fn concept_label(j: usize) -> String {
    if j == 12 {
        return "need for investments".into();
    }
    format!("{} {}", TOPICS[j / 13], ASPECTS[j % 13])
}

/// Criteria per concept: one concept of 24, then 98 of 4 and 70 of 3.
fn concept_size(j: usize) -> usize {
    match j {
        0 => 24,
        1..=98 => 4,
        _ => 3,
    }
}

/// Every eleventh concept after the first also belongs to a second variable.
fn variables_of(j: usize) -> Vec<usize> {
    let primary = j % 12;
    if j % 11 == 5 {
        vec![primary, (primary + 5) % 12]
    } else {
        vec![primary]
    }
}

fn source_ids() -> Vec<String> {
    (1..=12)
        .map(|i| format!("s{i:02}"))
        .chain((1..=9).map(|i| format!("d{i:02}")))
        .collect()
}

/// Property counts per aim: one aim of 12, then 65 of 2 and 171 of 1.
fn aim_size(k: usize) -> usize {
    match k {
        0 => 12,
        1..=65 => 2,
        _ => 1,
    }
}

/// MyChoice criteria 13..16 share variables V01..V04 with criteria 1..4.
pub fn mcriterion_variable(m: usize) -> usize {
    m % 12
}

struct Builder {
    project: Project,
    clock: DateTime<Utc>,
}

impl Builder {
    fn apply(&mut self, action: Action) {
        self.clock += Duration::seconds(1);
        self.project
            .apply_at(FACILITATOR, self.clock, action)
            .expect("synthetic actions are valid");
    }
}

/// The complete synthetic project, journal included. Identical on every call.
pub fn reference_project() -> Project {
    let mut b = Builder {
        project: Project::new(),
        clock: Utc.with_ymd_and_hms(2026, 1, 5, 9, 0, 0).unwrap(),
    };
    let sources = source_ids();
    for (i, id) in sources.iter().enumerate() {
        let interview = i < 12;
        b.apply(Action::AddSource {
            source: SourceText {
                id: id.clone(),
                kind: if interview {
                    SourceKind::Interview
                } else {
                    SourceKind::Document
                },
                title: if interview {
                    format!("Interview {}", i + 1)
                } else {
                    format!("Sector report {}", i - 11)
                },
                stakeholder_category: interview.then(|| {
                    ["pig farmer", "cooperative advisor", "local resident", "veterinarian"][i % 4]
                        .to_owned()
                }),
                date: None,
            },
        });
    }

    for (i, (label, modalities)) in VARIABLES.iter().enumerate() {
        b.apply(Action::CreateVariable {
            id: variable_id(i),
            label: (*label).into(),
        });
        for m in modalities {
            b.apply(Action::DefineModality {
                variable_id: variable_id(i),
                label: (*m).into(),
            });
        }
    }

    let mut criterion_no = 0;
    for j in 0..169 {
        b.apply(Action::CreateConcept {
            id: concept_id(j),
            label: concept_label(j),
        });
        for v in variables_of(j) {
            b.apply(Action::AttachVariable {
                concept_id: concept_id(j),
                variable_id: variable_id(v),
            });
        }
        let (t, a) = (TOPICS[j / 13], ASPECTS[j % 13]);
        for n in 0..concept_size(j) {
            criterion_no += 1;
            let id = format!("c{criterion_no:03}");
            let text = if j == 12 {
                ["need for investments", "investment needs", "investing in buildings"][n % 3]
                    .to_owned()
            } else {
                CRITERION_FORMS[n % CRITERION_FORMS.len()]
                    .replace("{t}", t)
                    .replace("{a}", a)
            };
            b.apply(Action::AddCriterion {
                id: id.clone(),
                raw_text: text,
                source_id: sources[(criterion_no * 5) % sources.len()].clone(),
                span: None,
            });
            b.apply(Action::AssignCriterion {
                criterion_id: id,
                concept_id: concept_id(j),
                previous_concept_id: None,
            });
        }
    }

    // Influence relations between single-variable concepts. Four hub
    // variables drive and depend on the others; the rest form a weak ring.
    let representative = |v: usize, nth: usize| -> String {
        let j = (0..169)
            .filter(|j| variables_of(*j) == vec![v])
            .nth(nth)
            .expect("each variable has single-variable concepts");
        concept_id(j)
    };
    let hubs = [0usize, 3, 6, 9];
    let mut relation_no = 0;
    let mut relate = |b: &mut Builder, from: String, to: String, weight: u8| {
        relation_no += 1;
        b.apply(Action::AddRelation {
            relation: InfluenceRelation {
                from_concept: from,
                to_concept: to,
                weight,
                source_id: sources[relation_no % 12].clone(),
            },
        });
    };
    for (h_rank, &h) in hubs.iter().enumerate() {
        for v in (0..12).filter(|v| !hubs.contains(v)) {
            let weight = if (h_rank + v) % 2 == 0 { 3 } else { 2 };
            relate(&mut b, representative(h, 0), representative(v, 0), weight);
            relate(&mut b, representative(v, 1), representative(h, 1), 1);
        }
    }
    let others: Vec<usize> = (0..12).filter(|v| !hubs.contains(v)).collect();
    for (i, v) in others.iter().enumerate() {
        let next = others[(i + 1) % others.len()];
        relate(&mut b, representative(*v, 2), representative(next, 2), 1 + (i % 3) as u8);
    }
    relate(&mut b, representative(0, 2), representative(3, 2), 2);
    relate(&mut b, representative(6, 2), representative(9, 2), 1);

    // MyChoice side.
    for (m, label) in MCRITERIA.iter().enumerate() {
        b.apply(Action::AddMcriterion {
            id: format!("m{:02}", m + 1),
            label: (*label).into(),
        });
    }
    let mut property_no = 0;
    let mut instance_no = 0;
    for k in 0..237 {
        let aim_id = format!("a{:03}", k + 1);
        let label = format!(
            "{} {}",
            AIM_VERBS[k % AIM_VERBS.len()],
            AIM_OBJECTS[(k / AIM_VERBS.len()) % AIM_OBJECTS.len()]
        );
        b.apply(Action::AddAim {
            id: aim_id.clone(),
            label,
            mcriterion_id: format!("m{:02}", k % 16 + 1),
        });
        for n in 0..aim_size(k) {
            property_no += 1;
            let denomination = format!(
                "{} {}",
                TOPICS[(property_no * 7) % TOPICS.len()],
                ASPECTS[(property_no + n) % ASPECTS.len()]
            );
            // every fifth property carries two values
            let values = if property_no % 5 == 0 { 2 } else { 1 };
            for v in 0..values {
                instance_no += 1;
                let evaluation = if ((instance_no + instance_no / 12) % 3 == 0) ^ (v == 1) {
                    Evaluation::Negative
                } else {
                    Evaluation::Positive
                };
                b.apply(Action::AddArgument {
                    instance: PropertyInstance {
                        id: format!("p{instance_no:03}"),
                        denomination: denomination.clone(),
                        value: VALUES[(property_no + v) % VALUES.len()].into(),
                        evaluation,
                        aim_id: aim_id.clone(),
                        stakeholder_id: sources[instance_no % 12].clone(),
                        weight: if instance_no % 8 == 0 {
                            Weight::new(3, 2).expect("positive")
                        } else {
                            Weight::ONE
                        },
                    },
                });
            }
        }
    }

    // Alignment decisions.
    for m in 0..16 {
        b.apply(Action::MapMcriterion {
            mcriterion_id: format!("m{:02}", m + 1),
            variable_id: variable_id(mcriterion_variable(m)),
        });
    }
    for j in 0..169 {
        let vars = variables_of(j);
        if vars.len() > 1 {
            b.apply(Action::ResolveParent {
                concept_id: concept_id(j),
                variable_id: variable_id(vars[0]),
            });
        }
        if vars[0] < 4 {
            // V01..V04 each combine two MyChoice criteria
            let m = if j % 2 == 0 { vars[0] } else { vars[0] + 12 };
            b.apply(Action::ChooseMcriterion {
                concept_id: concept_id(j),
                mcriterion_id: format!("m{:02}", m + 1),
            });
        }
    }
    b.apply(Action::ConfigureDelphi { k: 5, rounds: 2 });
    b.project
}

/// The alignment map of [`reference_project`], as shipped next to it.
pub fn reference_alignment() -> AlignmentMap {
    reference_project().state().alignment.clone()
}
