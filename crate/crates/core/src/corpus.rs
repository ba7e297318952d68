//! Source texts and the verbatim criteria lifted from them.
//!
//! A corpus is the raw material of a study: every interview transcript or
//! document read is a [`SourceText`], and every word or phrase extracted from
//! it is a [`Criterion`]. Criteria are kept per occurrence, so the same phrase
//! said by two stakeholders yields two records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub type SourceId = String;
pub type CriterionId = String;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{location}: malformed corpus: {message}")]
    Malformed { location: String, message: String },
    #[error("{location}: duplicate id {id:?}")]
    DuplicateId { location: String, id: String },
    #[error("{location}: criterion {criterion:?} references unknown source {source_id:?}")]
    DanglingSource {
        location: String,
        criterion: String,
        source_id: String,
    },
    #[error("{location}: invalid id {id:?} (ids are non-empty tokens of [A-Za-z0-9._-])")]
    InvalidId { location: String, id: String },
    #[error("{location}: criterion {criterion:?} has empty raw text")]
    EmptyCriterion { location: String, criterion: String },
    #[error("{location}: span ({start}, {end}) is not a valid range")]
    InvalidSpan {
        location: String,
        start: usize,
        end: usize,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Ids are short opaque tokens so they can travel in URLs and CSV cells.
pub fn is_token(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Interview,
    Document,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceKind::Interview => f.write_str("interview"),
            SourceKind::Document => f.write_str("document"),
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "interview" => Ok(SourceKind::Interview),
            "document" => Ok(SourceKind::Document),
            other => Err(format!("unknown source kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceText {
    pub id: SourceId,
    pub kind: SourceKind,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stakeholder_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
}

/// Character offsets `[start, end)` of a criterion inside its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub id: CriterionId,
    pub raw_text: String,
    pub normalized_text: String,
    pub source_id: SourceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    /// Projection of the ontology's assignment; the ontology is authoritative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
}

impl Criterion {
    pub fn new(
        id: impl Into<String>,
        raw_text: impl Into<String>,
        source_id: impl Into<String>,
    ) -> Self {
        let raw_text = raw_text.into();
        Criterion {
            id: id.into(),
            normalized_text: normalize(&raw_text),
            raw_text,
            source_id: source_id.into(),
            span: None,
            concept_id: None,
        }
    }
}

/// Per-kind source counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SourceCounts {
    pub interviews: usize,
    pub documents: usize,
    pub total: usize,
}

/// An immutable snapshot of sources and criteria, ordered by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub sources: BTreeMap<SourceId, SourceText>,
    pub criteria: BTreeMap<CriterionId, Criterion>,
}

impl Corpus {
    pub fn source(&self, id: &str) -> Option<&SourceText> {
        self.sources.get(id)
    }

    pub fn criterion(&self, id: &str) -> Option<&Criterion> {
        self.criteria.get(id)
    }

    pub fn counts(&self) -> SourceCounts {
        let interviews = self
            .sources
            .values()
            .filter(|s| s.kind == SourceKind::Interview)
            .count();
        SourceCounts {
            interviews,
            documents: self.sources.len() - interviews,
            total: self.sources.len(),
        }
    }

    /// Builds a corpus from ordered lists, reporting the first violation with
    /// a JSON-pointer style location.
    pub fn from_parts(
        sources: Vec<SourceText>,
        criteria: Vec<Criterion>,
    ) -> Result<Corpus, CorpusError> {
        let mut corpus = Corpus::default();
        for (i, source) in sources.into_iter().enumerate() {
            let location = format!("/sources/{i}/id");
            if !is_token(&source.id) {
                return Err(CorpusError::InvalidId {
                    location,
                    id: source.id,
                });
            }
            if corpus.sources.contains_key(&source.id) {
                return Err(CorpusError::DuplicateId {
                    location,
                    id: source.id,
                });
            }
            corpus.sources.insert(source.id.clone(), source);
        }
        for (i, mut criterion) in criteria.into_iter().enumerate() {
            validate_criterion(&corpus, &criterion, &format!("/criteria/{i}"))?;
            criterion.normalized_text = normalize(&criterion.raw_text);
            corpus.criteria.insert(criterion.id.clone(), criterion);
        }
        Ok(corpus)
    }

    /// The exchange-format document for this corpus.
    pub fn to_document(&self) -> CorpusDocument {
        CorpusDocument {
            sources: self.sources.values().cloned().collect(),
            criteria: self
                .criteria
                .values()
                .cloned()
                .map(CriterionRecord::from)
                .collect(),
        }
    }
}

/// Checks a criterion against an existing corpus before insertion.
pub fn validate_criterion(
    corpus: &Corpus,
    criterion: &Criterion,
    location: &str,
) -> Result<(), CorpusError> {
    if !is_token(&criterion.id) {
        return Err(CorpusError::InvalidId {
            location: format!("{location}/id"),
            id: criterion.id.clone(),
        });
    }
    if corpus.criteria.contains_key(&criterion.id) {
        return Err(CorpusError::DuplicateId {
            location: format!("{location}/id"),
            id: criterion.id.clone(),
        });
    }
    if criterion.raw_text.trim().is_empty() {
        return Err(CorpusError::EmptyCriterion {
            location: format!("{location}/raw_text"),
            criterion: criterion.id.clone(),
        });
    }
    if !corpus.sources.contains_key(&criterion.source_id) {
        return Err(CorpusError::DanglingSource {
            location: format!("{location}/source_id"),
            criterion: criterion.id.clone(),
            source_id: criterion.source_id.clone(),
        });
    }
    if let Some(span) = criterion.span {
        if span.start > span.end {
            return Err(CorpusError::InvalidSpan {
                location: format!("{location}/span"),
                start: span.start,
                end: span.end,
            });
        }
    }
    Ok(())
}

/// Standalone corpus document: `{"sources": [...], "criteria": [...]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub sources: Vec<SourceText>,
    #[serde(default)]
    pub criteria: Vec<CriterionRecord>,
}

/// A criterion as written in exchange files; `normalized_text` is recomputed on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionRecord {
    pub id: CriterionId,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_text: Option<String>,
    pub source_id: SourceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
}

impl From<CriterionRecord> for Criterion {
    fn from(r: CriterionRecord) -> Self {
        Criterion {
            normalized_text: normalize(&r.raw_text),
            id: r.id,
            raw_text: r.raw_text,
            source_id: r.source_id,
            span: r.span,
            concept_id: r.concept_id,
        }
    }
}

impl From<Criterion> for CriterionRecord {
    fn from(c: Criterion) -> Self {
        CriterionRecord {
            id: c.id,
            raw_text: c.raw_text,
            normalized_text: Some(c.normalized_text),
            source_id: c.source_id,
            span: c.span,
            concept_id: c.concept_id,
        }
    }
}

/// Parses a corpus from JSON text. Accepts either a bare corpus document or a
/// whole project file, in which case its `corpus` section is used.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CorpusError::Malformed {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
    let (value, prefix) = match value.get("project").and_then(|p| p.get("corpus")) {
        Some(section) => (section.clone(), "/project/corpus"),
        None => (value, ""),
    };
    let doc: CorpusDocument = serde_path_to_error::deserialize(value).map_err(|e| {
        CorpusError::Malformed {
            location: format!("{prefix}{}", crate::store::json_pointer(e.path())),
            message: e.inner().to_string(),
        }
    })?;
    Corpus::from_parts(
        doc.sources,
        doc.criteria.into_iter().map(Criterion::from).collect(),
    )
    .map_err(|e| prefix_location(e, prefix))
}

fn prefix_location(err: CorpusError, prefix: &str) -> CorpusError {
    if prefix.is_empty() {
        return err;
    }
    let fix = |l: String| format!("{prefix}{l}");
    match err {
        CorpusError::Malformed { location, message } => CorpusError::Malformed {
            location: fix(location),
            message,
        },
        CorpusError::DuplicateId { location, id } => CorpusError::DuplicateId {
            location: fix(location),
            id,
        },
        CorpusError::DanglingSource {
            location,
            criterion,
            source_id,
        } => CorpusError::DanglingSource {
            location: fix(location),
            criterion,
            source_id,
        },
        CorpusError::InvalidId { location, id } => CorpusError::InvalidId {
            location: fix(location),
            id,
        },
        CorpusError::EmptyCriterion {
            location,
            criterion,
        } => CorpusError::EmptyCriterion {
            location: fix(location),
            criterion,
        },
        CorpusError::InvalidSpan {
            location,
            start,
            end,
        } => CorpusError::InvalidSpan {
            location: fix(location),
            start,
            end,
        },
        other => other,
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let doc = corpus.to_document();
    let mut text = serde_json::to_string_pretty(&doc).expect("corpus serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Deserialize)]
struct CsvCriterionRow {
    criterion_id: String,
    raw_text: String,
    source_id: String,
    #[serde(default)]
    span_start: Option<usize>,
    #[serde(default)]
    span_end: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct CsvSourceRow {
    id: String,
    kind: String,
    title: String,
    #[serde(default)]
    stakeholder_category: Option<String>,
    #[serde(default)]
    date: Option<String>,
}

/// Reads `id, kind, title, stakeholder_category, date` rows.
pub fn read_sources_csv(reader: impl std::io::Read) -> Result<Vec<SourceText>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CsvSourceRow>().enumerate() {
        let location = format!("row {}", i + 2);
        let row = row.map_err(|e| CorpusError::Malformed {
            location: location.clone(),
            message: e.to_string(),
        })?;
        let kind = row.kind.parse().map_err(|message| CorpusError::Malformed {
            location: location.clone(),
            message,
        })?;
        let date = match row.date.filter(|d| !d.is_empty()) {
            Some(d) => Some(d.parse::<NaiveDate>().map_err(|e| CorpusError::Malformed {
                location: location.clone(),
                message: format!("bad date {d:?}: {e}"),
            })?),
            None => None,
        };
        out.push(SourceText {
            id: row.id,
            kind,
            title: row.title,
            stakeholder_category: row.stakeholder_category.filter(|s| !s.is_empty()),
            date,
        });
    }
    Ok(out)
}

/// Reads `criterion_id, raw_text, source_id, span_start, span_end` rows.
pub fn read_criteria_csv(reader: impl std::io::Read) -> Result<Vec<Criterion>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::Headers).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CsvCriterionRow>().enumerate() {
        let location = format!("row {}", i + 2);
        let row = row.map_err(|e| CorpusError::Malformed {
            location: location.clone(),
            message: e.to_string(),
        })?;
        let span = match (row.span_start, row.span_end) {
            (Some(start), Some(end)) => Some(Span { start, end }),
            (None, None) => None,
            _ => {
                return Err(CorpusError::Malformed {
                    location,
                    message: "span_start and span_end must be given together".into(),
                })
            }
        };
        let mut criterion = Criterion::new(row.criterion_id, row.raw_text, row.source_id);
        criterion.span = span;
        out.push(criterion);
    }
    Ok(out)
}

/// Canonical comparison form of a phrase: lower case, diacritics folded,
/// ligatures expanded, every non-alphanumeric character turned into a single
/// separating space.
pub fn normalize(raw: &str) -> String {
    let mut folded = String::with_capacity(raw.len());
    for c in raw.nfkd().filter(|c| !is_combining_mark(*c)) {
        for lower in c.to_lowercase() {
            // lower-casing can reintroduce marks (e.g. U+0130)
            for d in lower.nfkd().filter(|c| !is_combining_mark(*c)) {
                match d {
                    'œ' => folded.push_str("oe"),
                    'æ' => folded.push_str("ae"),
                    'ß' => folded.push_str("ss"),
                    'ø' => folded.push('o'),
                    'đ' => folded.push('d'),
                    'ł' => folded.push('l'),
                    _ => folded.push(d),
                }
            }
        }
    }
    let mut out = String::with_capacity(folded.len());
    let mut pending_space = false;
    for c in folded.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Ids of criteria sharing one normalized text, for duplicate inspection.
pub fn duplicate_groups(corpus: &Corpus) -> Vec<Vec<CriterionId>> {
    let mut by_text: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in corpus.criteria.values() {
        by_text
            .entry(c.normalized_text.as_str())
            .or_default()
            .insert(c.id.as_str());
    }
    by_text
        .into_values()
        .filter(|ids| ids.len() > 1)
        .map(|ids| ids.into_iter().map(str::to_owned).collect())
        .collect()
}
