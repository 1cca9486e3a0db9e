use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{Concreteness, CorpusError, GoldLabel, Sentence, TargetSpan};

/// Lemma → concreteness score.
pub type Lexicon = BTreeMap<String, Concreteness>;

fn open(path: &Path) -> Result<File, CorpusError> {
    File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize, CorpusError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or(CorpusError::MissingColumn(name))
}

fn header_error(e: csv::Error) -> CorpusError {
    CorpusError::MalformedRow {
        row: 0,
        field: "header",
        reason: e.to_string(),
    }
}

/// Reads a tab-separated corpus with columns
/// `id, text, span_start, span_end, lemma, gold`.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Sentence>, CorpusError> {
    parse_corpus(open(path.as_ref())?)
}

pub fn parse_corpus<R: Read>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(header_error)?.clone();
    let idx_id = column(&headers, "id")?;
    let idx_text = column(&headers, "text")?;
    let idx_start = column(&headers, "span_start")?;
    let idx_end = column(&headers, "span_end")?;
    let idx_lemma = column(&headers, "lemma")?;
    let idx_gold = column(&headers, "gold")?;

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CorpusError::MalformedRow {
            row,
            field: "record",
            reason: e.to_string(),
        })?;
        let field = |idx: usize, name: &'static str| {
            record.get(idx).ok_or(CorpusError::MalformedRow {
                row,
                field: name,
                reason: "missing".into(),
            })
        };
        let id = field(idx_id, "id")?.trim();
        if id.is_empty() {
            return Err(CorpusError::MalformedRow {
                row,
                field: "id",
                reason: "empty".into(),
            });
        }
        let text = field(idx_text, "text")?;
        let parse_offset = |idx: usize, name: &'static str| -> Result<usize, CorpusError> {
            field(idx, name)?
                .trim()
                .parse::<usize>()
                .map_err(|e| CorpusError::MalformedRow {
                    row,
                    field: name,
                    reason: e.to_string(),
                })
        };
        let start = parse_offset(idx_start, "span_start")?;
        let end = parse_offset(idx_end, "span_end")?;
        let lemma = field(idx_lemma, "lemma")?.trim();
        if lemma.is_empty() {
            return Err(CorpusError::MalformedRow {
                row,
                field: "lemma",
                reason: "empty".into(),
            });
        }
        let gold: GoldLabel =
            field(idx_gold, "gold")?
                .parse()
                .map_err(|reason| CorpusError::MalformedRow {
                    row,
                    field: "gold",
                    reason,
                })?;
        let span = TargetSpan::new(start, end);
        if !span.fits(text.chars().count()) {
            return Err(CorpusError::SpanOutOfBounds { row });
        }
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateId {
                id: id.to_string(),
                row,
            });
        }
        out.push(Sentence {
            id: id.to_string(),
            text: text.to_string(),
            lemma: lemma.to_string(),
            target_span: span,
            gold,
            concreteness: None,
        });
    }
    Ok(out)
}

/// Reads a comma-separated lexicon with columns `lemma, concreteness`.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, CorpusError> {
    parse_lexicon(open(path.as_ref())?)
}

pub fn parse_lexicon<R: Read>(reader: R) -> Result<Lexicon, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(header_error)?.clone();
    let idx_lemma = column(&headers, "lemma")?;
    let idx_score = column(&headers, "concreteness")?;
    let mut lexicon = Lexicon::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CorpusError::MalformedRow {
            row,
            field: "record",
            reason: e.to_string(),
        })?;
        let lemma = record.get(idx_lemma).unwrap_or("").trim();
        if lemma.is_empty() {
            return Err(CorpusError::MalformedRow {
                row,
                field: "lemma",
                reason: "empty".into(),
            });
        }
        let score = record
            .get(idx_score)
            .unwrap_or("")
            .trim()
            .parse::<f64>()
            .map_err(|e| e.to_string())
            .and_then(Concreteness::new)
            .map_err(|reason| CorpusError::MalformedRow {
                row,
                field: "concreteness",
                reason,
            })?;
        if lexicon.insert(lemma.to_string(), score).is_some() {
            return Err(CorpusError::DuplicateLemma {
                lemma: lemma.to_string(),
                row,
            });
        }
    }
    Ok(lexicon)
}

/// Attaches lemma-level concreteness to every sentence. Fails without a
/// partial result if any lemma is absent from the lexicon.
pub fn join_concreteness(
    sentences: Vec<Sentence>,
    lexicon: &Lexicon,
) -> Result<Vec<Sentence>, CorpusError> {
    let missing: BTreeSet<&str> = sentences
        .iter()
        .filter(|s| !lexicon.contains_key(&s.lemma))
        .map(|s| s.lemma.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingLemmas(
            missing.into_iter().map(str::to_string).collect(),
        ));
    }
    Ok(sentences
        .into_iter()
        .map(|s| {
            let c = lexicon[&s.lemma];
            s.with_concreteness(c)
        })
        .collect())
}
