//! The benchmarked workloads must be valid inputs, or the timings measure
//! error paths.

use std::collections::BTreeSet;

use prospect_core::matcher::Matcher;
use prospect_core::store;
use prospect_core::structural::{build_matrix, micmac};
use prospect_core::synthetic::reference_project;

#[test]
fn reference_workloads_succeed() {
    let p = reference_project();
    let s = p.state();
    let m = build_matrix(&s.ontology, &s.relations).unwrap();
    assert_eq!(m.len(), 12);
    assert_eq!(micmac(&m, 8).unwrap().scores.len(), 12);
    let batch = Matcher::default()
        .suggest(&s.ontology, &s.corpus, &BTreeSet::new(), 0.6, 50)
        .unwrap();
    assert_eq!(batch.len(), 50);
    assert_eq!(store::from_bytes(&store::to_bytes(&p)).unwrap().seq(), p.seq());
}
