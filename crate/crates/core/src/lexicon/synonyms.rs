use std::collections::BTreeMap;

use super::{check_single_token, Lexicon, LexiconError};

/// Curated partial synonym table covering the common terms.
pub const STARTER_SYNONYMS: &str = include_str!("../../data/synonyms_starter.tsv");

/// Promotional term → neutral single-token synonyms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymTable {
    map: BTreeMap<String, Vec<String>>,
    provenance: Option<String>,
}

impl SynonymTable {
    pub fn get(&self, term: &str) -> Option<&[String]> {
        self.map.get(term).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    /// Built from in-memory entries with the same checks as the file loader.
    pub fn from_entries<I, K, V>(entries: I, lexicon: &Lexicon) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: IntoIterator,
        V::Item: AsRef<str>,
    {
        let mut table = SynonymTable::default();
        for (i, (k, v)) in entries.into_iter().enumerate() {
            let syns: Vec<String> = v.into_iter().map(|s| s.as_ref().to_string()).collect();
            table.insert(k.as_ref(), &syns, lexicon, i + 1)?;
        }
        Ok(table)
    }

    fn insert(&mut self, key: &str, syns: &[String], lexicon: &Lexicon, line: usize) -> Result<(), LexiconError> {
        let err = |msg: String| LexiconError::Synonym { line, msg };
        let key = key.trim().to_lowercase();
        if !lexicon.contains(&key) {
            return Err(err(format!("{key:?} is not a lexicon term")));
        }
        if self.map.contains_key(&key) {
            return Err(err(format!("duplicate entry for {key:?}")));
        }
        let mut out: Vec<String> = Vec::with_capacity(syns.len());
        for s in syns {
            let s = s.trim().to_lowercase();
            if s.is_empty() {
                continue;
            }
            if lexicon.contains(&s) {
                return Err(err(format!("synonym {s:?} of {key:?} is itself promotional")));
            }
            check_single_token(&s).map_err(&err)?;
            if !out.contains(&s) {
                out.push(s);
            }
        }
        if out.is_empty() {
            return Err(err(format!("{key:?} has no synonyms")));
        }
        self.map.insert(key, out);
        Ok(())
    }
}

/// Parses `term<TAB>syn1,syn2,...` lines. A `# provenance: ...` comment is
/// kept as the table's provenance note.
pub fn load_synonym_table(src: &str, lexicon: &Lexicon) -> Result<SynonymTable, LexiconError> {
    let mut table = SynonymTable::default();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if let Some(p) = comment.trim().strip_prefix("provenance:") {
                table.provenance = Some(p.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (key, rest) = line.split_once('\t').ok_or_else(|| LexiconError::Synonym {
            line: i + 1,
            msg: "expected term<TAB>synonyms".into(),
        })?;
        let syns: Vec<String> = rest.split(',').map(str::to_string).collect();
        table.insert(key, &syns, lexicon, i + 1)?;
    }
    Ok(table)
}
