use std::collections::HashMap;
use std::io::Read;

use super::LexiconError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub valence: f64,
    pub arousal: f64,
    pub concreteness: Option<f64>,
    pub frequency_weight: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingField {
    Valence,
    Arousal,
    Concreteness,
}

impl Rating {
    pub fn field(&self, f: RatingField) -> Option<f64> {
        match f {
            RatingField::Valence => Some(self.valence),
            RatingField::Arousal => Some(self.arousal),
            RatingField::Concreteness => self.concreteness,
        }
    }
}

/// Word ratings, looked up case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingLexicon {
    map: HashMap<String, Rating>,
}

impl RatingLexicon {
    pub fn get(&self, word: &str) -> Option<&Rating> {
        match self.map.get(word) {
            Some(r) => Some(r),
            None => self.map.get(&word.to_lowercase()),
        }
    }

    pub fn insert(&mut self, word: &str, rating: Rating) -> Option<Rating> {
        self.map.insert(word.to_lowercase(), rating)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rating)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl FromIterator<(String, Rating)> for RatingLexicon {
    fn from_iter<T: IntoIterator<Item = (String, Rating)>>(iter: T) -> Self {
        let mut lex = RatingLexicon::default();
        for (w, r) in iter {
            lex.insert(&w, r);
        }
        lex
    }
}

/// Reads `word,valence,arousal[,concreteness][,weight]` with a header row.
/// Empty optional cells become `None`; a repeated word keeps its last row
/// and adds a warning. Row numbers in errors count the header as row 1.
pub fn load_rating_lexicon<R: Read>(source: R) -> Result<(RatingLexicon, Vec<String>), LexiconError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(source);
    let headers = rdr.headers().map_err(|e| LexiconError::RatingFile(e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(LexiconError::RatingFile("empty file".into()));
    }
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.to_lowercase().as_str()));
    let word_col = col(&["word"]).ok_or_else(|| LexiconError::RatingFile("missing \"word\" column".into()))?;
    let val_col = col(&["valence"]).ok_or_else(|| LexiconError::RatingFile("missing \"valence\" column".into()))?;
    let aro_col = col(&["arousal"]).ok_or_else(|| LexiconError::RatingFile("missing \"arousal\" column".into()))?;
    let conc_col = col(&["concreteness"]);
    let weight_col = col(&["weight", "frequency_weight"]);

    let mut lex = RatingLexicon::default();
    let mut warnings = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| LexiconError::Rating { row, msg: e.to_string() })?;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let word = cell(word_col).to_lowercase();
        if word.is_empty() {
            return Err(LexiconError::Rating { row, msg: "empty word".into() });
        }
        let number = |c: usize, name: &str| -> Result<Option<f64>, LexiconError> {
            let s = cell(c);
            if s.is_empty() {
                return Ok(None);
            }
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(LexiconError::Rating { row, msg: format!("{name} {s:?} is not a finite number") }),
            }
        };
        let required = |c: usize, name: &str| -> Result<f64, LexiconError> {
            number(c, name)?.ok_or_else(|| LexiconError::Rating { row, msg: format!("missing {name}") })
        };
        let rating = Rating {
            valence: required(val_col, "valence")?,
            arousal: required(aro_col, "arousal")?,
            concreteness: conc_col.map(|c| number(c, "concreteness")).transpose()?.flatten(),
            frequency_weight: weight_col.map(|c| number(c, "weight")).transpose()?.flatten(),
        };
        if let Some(w) = rating.frequency_weight {
            if w <= 0.0 {
                return Err(LexiconError::Rating { row, msg: "weight must be positive".into() });
            }
        }
        if lex.insert(&word, rating).is_some() {
            warnings.push(format!("row {row}: duplicate word {word:?}, last row wins"));
        }
    }
    if lex.is_empty() {
        return Err(LexiconError::RatingFile("no rating rows".into()));
    }
    Ok((lex, warnings))
}
