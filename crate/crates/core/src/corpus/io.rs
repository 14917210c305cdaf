use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::document::{Document, OutcomeRecord, PiRecord, Reference};
use super::CorpusError;

/// On-disk record: one JSON object per line.
#[derive(Debug, Default, Serialize, Deserialize)]
struct Record {
    id: Option<String>,
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    year: Option<i32>,
    #[serde(default)]
    funded: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grant_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    applied_amount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    awarded_amount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi: Option<PiRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bibliography: Option<Vec<Reference>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcomes: Option<OutcomeRecord>,
}

fn invalid(line: usize, msg: impl Into<String>) -> CorpusError {
    CorpusError::Invalid { line, msg: msg.into() }
}

fn into_document(rec: Record, line: usize) -> Result<Document, CorpusError> {
    let id = rec.id.ok_or(CorpusError::MissingField { line, field: "id" })?;
    let text = rec.text.ok_or(CorpusError::MissingField { line, field: "text" })?;
    let mut doc = Document::from_text(id, text);
    doc.year = rec.year.unwrap_or(0);
    doc.funded = rec.funded;
    doc.program = rec.program.unwrap_or_default();
    doc.grant_type = rec.grant_type.unwrap_or_default();
    for (name, amount) in [("applied_amount", rec.applied_amount), ("awarded_amount", rec.awarded_amount)] {
        if let Some(a) = amount {
            if !(a.is_finite() && a >= 0.0) {
                return Err(invalid(line, format!("{name} must be a non-negative number")));
            }
        }
    }
    doc.applied_amount = rec.applied_amount;
    doc.awarded_amount = rec.awarded_amount;
    let pi = rec.pi.unwrap_or_default();
    if pi.prior_successes > pi.prior_applications {
        return Err(invalid(line, "pi.prior_successes exceeds pi.prior_applications"));
    }
    doc.pi = pi;
    if let Some(bib) = &rec.bibliography {
        if rec.year.is_some() {
            if let Some(r) = bib.iter().find(|r| r.pub_year > doc.year) {
                return Err(invalid(
                    line,
                    format!("reference to {} ({}) is newer than the document ({})", r.journal_id, r.pub_year, doc.year),
                ));
            }
        }
    }
    doc.bibliography = rec.bibliography;
    if let Some(o) = &rec.outcomes {
        if !o.jifs.is_empty() && o.jifs.len() as u64 != o.publication_count {
            return Err(invalid(line, "outcomes.jifs length differs from outcomes.publication_count"));
        }
        if o.jifs.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
            return Err(invalid(line, "outcomes.jifs must be positive"));
        }
    }
    doc.outcomes = rec.outcomes;
    Ok(doc)
}

/// Reads a line-delimited corpus. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn load_corpus<R: BufRead>(source: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        let doc = into_document(rec, lineno)?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId { line: lineno, id: doc.id });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes documents in the same format [`load_corpus`] reads.
pub fn write_corpus<W: Write>(mut sink: W, docs: &[Document]) -> Result<(), CorpusError> {
    for d in docs {
        let rec = Record {
            id: Some(d.id.clone()),
            text: Some(d.raw_text.clone()),
            year: Some(d.year),
            funded: d.funded,
            program: Some(d.program.clone()),
            grant_type: Some(d.grant_type.clone()),
            applied_amount: d.applied_amount,
            awarded_amount: d.awarded_amount,
            pi: Some(d.pi.clone()),
            bibliography: d.bibliography.clone(),
            outcomes: d.outcomes.clone(),
        };
        serde_json::to_writer(&mut sink, &rec).map_err(|e| CorpusError::Malformed { line: 0, msg: e.to_string() })?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}
