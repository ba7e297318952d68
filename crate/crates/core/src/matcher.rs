//! Grouping suggestions by text similarity.
//!
//! The matcher never changes the ontology by itself: it proposes
//! criterion→concept assignments and concept merges, and a facilitator
//! accepts or rejects each one. A concept is scored through its whole label
//! registry (its label, labels absorbed by earlier merges, and the texts of
//! its criteria), so the registry grows as merges are accepted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize, Corpus};
use crate::ontology::GodetOntology;

pub const DEFAULT_THRESHOLD: f64 = 0.6;

const ENGLISH: &str = include_str!("../data/stopwords_en.txt");
const FRENCH: &str = include_str!("../data/stopwords_fr.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("suggestion {0} is stale; refresh the batch")]
    Stale(String),
    #[error("malformed suggestion id {0:?}")]
    BadId(String),
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(String),
}

/// Normalized stop words removed before token comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(BTreeSet<String>);

impl StopWords {
    pub fn empty() -> Self {
        StopWords(BTreeSet::new())
    }

    pub fn english() -> Self {
        Self::parse(ENGLISH)
    }

    pub fn french() -> Self {
        Self::parse(FRENCH)
    }

    /// One word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .map(normalize)
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    pub fn from_reader(reader: impl BufRead) -> std::io::Result<Self> {
        let mut text = String::new();
        for line in reader.lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        Ok(Self::parse(&text))
    }

    pub fn union(mut self, other: StopWords) -> Self {
        self.0.extend(other.0);
        self
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

impl Default for StopWords {
    fn default() -> Self {
        StopWords::english().union(StopWords::french())
    }
}

fn default_stop_words() -> &'static StopWords {
    static WORDS: OnceLock<StopWords> = OnceLock::new();
    WORDS.get_or_init(StopWords::default)
}

/// A normalized text with its content-token set, ready for scoring.
#[derive(Debug, Clone)]
pub struct Prepared {
    text: String,
    chars: usize,
    tokens: BTreeSet<String>,
}

impl Prepared {
    pub fn new(normalized: &str, stop_words: &StopWords) -> Self {
        Prepared {
            text: normalized.to_owned(),
            chars: normalized.chars().count(),
            tokens: normalized
                .split(' ')
                .filter(|t| !t.is_empty() && !stop_words.contains(t))
                .map(str::to_owned)
                .collect(),
        }
    }
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let common = a.intersection(b).count();
    common as f64 / (a.len() + b.len() - common) as f64
}

/// `1 - |len_a - len_b| / max_len` bounds the edit score from above.
fn edit_upper_bound(a: &Prepared, b: &Prepared) -> f64 {
    let longest = a.chars.max(b.chars);
    if longest == 0 {
        1.0
    } else {
        1.0 - a.chars.abs_diff(b.chars) as f64 / longest as f64
    }
}

fn edit_score(a: &Prepared, b: &Prepared) -> f64 {
    strsim::normalized_levenshtein(&a.text, &b.text)
}

/// Full similarity of two prepared texts.
pub fn score_prepared(a: &Prepared, b: &Prepared) -> f64 {
    jaccard(&a.tokens, &b.tokens).max(edit_score(a, b))
}

/// Similarity, computed exactly only when it can reach `floor`; otherwise
/// some value below `floor` is returned.
fn score_at_least(a: &Prepared, b: &Prepared, floor: f64) -> f64 {
    let jac = jaccard(&a.tokens, &b.tokens);
    if jac >= 1.0 {
        return 1.0;
    }
    if edit_upper_bound(a, b) < floor.max(jac) {
        return jac;
    }
    jac.max(edit_score(a, b))
}

/// Text similarity in [0, 1] over normalized inputs: the larger of the
/// token-set Jaccard index (stop words removed) and one minus the
/// length-normalized Levenshtein distance.
pub fn similarity(a: &str, b: &str) -> f64 {
    similarity_with(a, b, default_stop_words())
}

pub fn similarity_with(a: &str, b: &str, stop_words: &StopWords) -> f64 {
    score_prepared(&Prepared::new(a, stop_words), &Prepared::new(b, stop_words))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    CriterionToConcept,
    ConceptMerge,
}

impl SuggestionKind {
    fn tag(self) -> &'static str {
        match self {
            SuggestionKind::CriterionToConcept => "c2c",
            SuggestionKind::ConceptMerge => "merge",
        }
    }
}

/// Identity of a suggested pair, stable across batches.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SuggestionKey {
    pub kind: SuggestionKind,
    pub subject_id: String,
    pub target_id: String,
}

impl SuggestionKey {
    /// Merge pairs are unordered; this is the form used for suppression.
    pub fn canonical(&self) -> SuggestionKey {
        let mut key = self.clone();
        if key.kind == SuggestionKind::ConceptMerge && key.subject_id > key.target_id {
            std::mem::swap(&mut key.subject_id, &mut key.target_id);
        }
        key
    }
}

impl fmt::Display for SuggestionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.kind.tag(), self.subject_id, self.target_id)
    }
}

impl FromStr for SuggestionKey {
    type Err = MatchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MatchError::BadId(s.to_owned());
        let mut parts = s.split(':');
        let kind = match parts.next() {
            Some("c2c") => SuggestionKind::CriterionToConcept,
            Some("merge") => SuggestionKind::ConceptMerge,
            _ => return Err(bad()),
        };
        let subject_id = parts.next().filter(|p| !p.is_empty()).ok_or_else(bad)?;
        let target_id = parts.next().filter(|p| !p.is_empty()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(SuggestionKey {
            kind,
            subject_id: subject_id.to_owned(),
            target_id: target_id.to_owned(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub id: String,
    pub kind: SuggestionKind,
    pub subject_id: String,
    pub target_id: String,
    pub subject_label: String,
    pub target_label: String,
    pub score: f64,
    pub rank: usize,
}

impl Suggestion {
    pub fn key(&self) -> SuggestionKey {
        SuggestionKey {
            kind: self.kind,
            subject_id: self.subject_id.clone(),
            target_id: self.target_id.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Matcher {
    pub stop_words: StopWords,
}

impl Default for Matcher {
    fn default() -> Self {
        Matcher {
            stop_words: default_stop_words().clone(),
        }
    }
}

struct Registry<'a> {
    id: &'a str,
    label: &'a str,
    texts: Vec<Prepared>,
}

fn best(a: &[Prepared], b: &[Prepared], floor: f64) -> f64 {
    let mut top = 0.0f64;
    for x in a {
        for y in b {
            top = top.max(score_at_least(x, y, floor.max(top)));
            if top >= 1.0 {
                return 1.0;
            }
        }
    }
    top
}

impl Matcher {
    pub fn new(stop_words: StopWords) -> Self {
        Matcher { stop_words }
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        similarity_with(a, b, &self.stop_words)
    }

    fn registries<'a>(&self, ontology: &'a GodetOntology, corpus: &'a Corpus) -> Vec<Registry<'a>> {
        ontology
            .concepts
            .values()
            .map(|c| {
                let mut texts: BTreeSet<String> = c.registered_labels();
                texts.extend(
                    c.criterion_ids
                        .iter()
                        .filter_map(|id| corpus.criteria.get(id))
                        .map(|cr| cr.normalized_text.clone()),
                );
                Registry {
                    id: &c.id,
                    label: &c.label,
                    texts: texts
                        .iter()
                        .map(|t| Prepared::new(t, &self.stop_words))
                        .collect(),
                }
            })
            .collect()
    }

    /// Ranked suggestions with score ≥ `threshold`, at most `limit` of them.
    pub fn suggest(
        &self,
        ontology: &GodetOntology,
        corpus: &Corpus,
        rejected: &BTreeSet<SuggestionKey>,
        threshold: f64,
        limit: usize,
    ) -> Result<Vec<Suggestion>, MatchError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(MatchError::BadThreshold(threshold.to_string()));
        }
        let registries = self.registries(ontology, corpus);
        let mut found: Vec<Suggestion> = Vec::new();
        let mut push = |kind, subject: (&str, &str), target: (&str, &str), score: f64| {
            let key = SuggestionKey {
                kind,
                subject_id: subject.0.to_owned(),
                target_id: target.0.to_owned(),
            };
            if score >= threshold && !rejected.contains(&key.canonical()) {
                found.push(Suggestion {
                    id: key.to_string(),
                    kind,
                    subject_id: key.subject_id,
                    target_id: key.target_id,
                    subject_label: subject.1.to_owned(),
                    target_label: target.1.to_owned(),
                    score,
                    rank: 0,
                });
            }
        };

        for criterion in corpus.criteria.values() {
            if ontology.assignments.contains_key(&criterion.id) {
                continue;
            }
            let prepared = [Prepared::new(&criterion.normalized_text, &self.stop_words)];
            for reg in &registries {
                let score = best(&prepared, &reg.texts, threshold);
                push(
                    SuggestionKind::CriterionToConcept,
                    (&criterion.id, &criterion.normalized_text),
                    (reg.id, reg.label),
                    score,
                );
            }
        }

        for (i, a) in registries.iter().enumerate() {
            for b in &registries[i + 1..] {
                let score = best(&a.texts, &b.texts, threshold);
                let (s, t) = if (a.label, a.id) <= (b.label, b.id) {
                    (a, b)
                } else {
                    (b, a)
                };
                push(
                    SuggestionKind::ConceptMerge,
                    (s.id, s.label),
                    (t.id, t.label),
                    score,
                );
            }
        }

        found.sort_by(|x, y| {
            y.score
                .total_cmp(&x.score)
                .then_with(|| x.subject_label.cmp(&y.subject_label))
                .then_with(|| x.target_label.cmp(&y.target_label))
                .then_with(|| x.id.cmp(&y.id))
        });
        found.truncate(limit);
        for (i, s) in found.iter_mut().enumerate() {
            s.rank = i + 1;
        }
        Ok(found)
    }
}

/// Checks that a suggested pair still applies to the current ontology.
pub fn check_current(
    key: &SuggestionKey,
    ontology: &GodetOntology,
    corpus: &Corpus,
    rejected: &BTreeSet<SuggestionKey>,
) -> Result<(), MatchError> {
    let stale = || MatchError::Stale(key.to_string());
    if rejected.contains(&key.canonical()) {
        return Err(stale());
    }
    match key.kind {
        SuggestionKind::CriterionToConcept => {
            if !corpus.criteria.contains_key(&key.subject_id)
                || ontology.assignments.contains_key(&key.subject_id)
                || !ontology.concepts.contains_key(&key.target_id)
            {
                return Err(stale());
            }
        }
        SuggestionKind::ConceptMerge => {
            if key.subject_id == key.target_id
                || !ontology.concepts.contains_key(&key.subject_id)
                || !ontology.concepts.contains_key(&key.target_id)
            {
                return Err(stale());
            }
        }
    }
    Ok(())
}

/// CSV export for offline review.
pub fn write_csv(suggestions: &[Suggestion], out: impl std::io::Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rank",
        "id",
        "kind",
        "subject_id",
        "subject_label",
        "target_id",
        "target_label",
        "score",
    ])?;
    for s in suggestions {
        w.write_record([
            s.rank.to_string(),
            s.id.clone(),
            s.kind.tag().to_owned(),
            s.subject_id.clone(),
            s.subject_label.clone(),
            s.target_id.clone(),
            s.target_label.clone(),
            format!("{:.6}", s.score),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Number of concepts holding exactly one criterion.
pub fn singleton_count(ontology: &GodetOntology) -> usize {
    ontology
        .concepts
        .values()
        .filter(|c| c.criterion_ids.len() == 1)
        .count()
}

/// Histogram of suggestion scores in tenths, used by the text report.
pub fn score_histogram(suggestions: &[Suggestion]) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for s in suggestions {
        *h.entry((s.score * 10.0).floor().min(9.0) as u32).or_default() += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Criterion, SourceKind, SourceText};
    use proptest::prelude::*;

    #[test]
    fn reordered_phrase_with_stop_word() {
        assert_eq!(similarity("labour cost", "cost of labour"), 1.0);
    }

    #[test]
    fn identical_text() {
        assert_eq!(similarity("prix du porc", "prix du porc"), 1.0);
        assert_eq!(similarity("", ""), 1.0);
    }

    #[test]
    fn disjoint_text_scores_zero() {
        // Levenshtein 3 over length 3, no common token
        assert_eq!(similarity("abc", "xyz"), 0.0);
        assert!(similarity("abc", "xyz") < DEFAULT_THRESHOLD);
    }

    #[test]
    fn edit_branch_wins_on_typos() {
        // one substitution over 11 characters
        let s = similarity("labour cost", "labour cast");
        assert!((s - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn jaccard_branch_partial() {
        // {feed, price} vs {feed, price, volatility}: 2/3
        let s = similarity("feed price", "volatility of feed price");
        assert!(s >= 2.0 / 3.0 - 1e-12);
    }

    #[test]
    fn stop_words_are_configurable() {
        let none = Matcher::new(StopWords::empty());
        assert!(none.similarity("labour cost", "cost of labour") < 1.0);
        let custom = StopWords::parse("# comment\nOf\n");
        assert!(custom.contains("of"));
    }

    proptest! {
        #[test]
        fn similarity_symmetric_and_bounded(a in "[a-e ]{0,12}", b in "[a-e ]{0,12}") {
            let a = normalize(&a);
            let b = normalize(&b);
            let x = similarity(&a, &b);
            prop_assert_eq!(x, similarity(&b, &a));
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn pruned_score_matches_full_above_floor(a in "[a-d ]{0,10}", b in "[a-d ]{0,10}", floor in 0.0f64..1.0) {
            let sw = StopWords::default();
            let (pa, pb) = (Prepared::new(&normalize(&a), &sw), Prepared::new(&normalize(&b), &sw));
            let full = score_prepared(&pa, &pb);
            let pruned = score_at_least(&pa, &pb, floor);
            if full >= floor {
                prop_assert_eq!(pruned, full);
            } else {
                prop_assert!(pruned < floor);
            }
        }
    }

    #[test]
    fn suggestion_id_round_trip() {
        let key: SuggestionKey = "merge:k1:k2".parse().unwrap();
        assert_eq!(key.to_string(), "merge:k1:k2");
        assert!("merge:k1".parse::<SuggestionKey>().is_err());
        assert!("swap:a:b".parse::<SuggestionKey>().is_err());
    }

    fn fixture() -> (Corpus, GodetOntology) {
        let corpus = Corpus::from_parts(
            vec![SourceText {
                id: "s1".into(),
                kind: SourceKind::Interview,
                title: "t".into(),
                stakeholder_category: None,
                date: None,
            }],
            vec![
                Criterion::new("c1", "labour cost", "s1"),
                Criterion::new("c2", "Cost of labour", "s1"),
                Criterion::new("c3", "animal welfare", "s1"),
            ],
        )
        .unwrap();
        let mut o = GodetOntology::default();
        o.create_concept("k1", "labour cost").unwrap();
        o.create_concept("k2", "welfare of animal").unwrap();
        (corpus, o)
    }

    #[test]
    fn suggest_ranks_and_limits() {
        let (corpus, o) = fixture();
        let m = Matcher::default();
        let all = m
            .suggest(&o, &corpus, &BTreeSet::new(), 0.0, usize::MAX)
            .unwrap();
        // 3 criteria x 2 concepts + 1 merge pair
        assert_eq!(all.len(), 7);
        assert_eq!(all.iter().map(|s| s.rank).collect::<Vec<_>>(), (1..=7).collect::<Vec<_>>());
        let top = m.suggest(&o, &corpus, &BTreeSet::new(), 0.0, 5).unwrap();
        assert_eq!(top, all[..5]);
        let exact = m.suggest(&o, &corpus, &BTreeSet::new(), 1.0, usize::MAX).unwrap();
        let ids: Vec<_> = exact.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["c2c:c3:k2", "c2c:c2:k1", "c2c:c1:k1"]);
    }

    #[test]
    fn rejected_pairs_are_suppressed() {
        let (corpus, o) = fixture();
        let m = Matcher::default();
        let rejected: BTreeSet<_> = ["c2c:c1:k1".parse::<SuggestionKey>().unwrap()]
            .into_iter()
            .collect();
        let batch = m.suggest(&o, &corpus, &rejected, 0.5, usize::MAX).unwrap();
        assert!(batch.iter().all(|s| s.id != "c2c:c1:k1"));
        assert!(check_current(&"c2c:c1:k1".parse().unwrap(), &o, &corpus, &rejected).is_err());
    }

    #[test]
    fn bad_threshold() {
        let (corpus, o) = fixture();
        assert!(Matcher::default()
            .suggest(&o, &corpus, &BTreeSet::new(), 1.5, 1)
            .is_err());
    }
}
