//! Tabular input and model specifications.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use super::{Design, Family, InferenceError, INTERCEPT};
use crate::stats::linalg::Matrix;
use crate::Scalar;

/// String-valued table with a header row. Numeric interpretation happens
/// per column on demand.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn is_missing(s: &str) -> bool {
    matches!(s.trim(), "" | "NA" | "na" | "NaN" | "nan" | "null")
}

impl DataTable {
    pub fn new(headers: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, InferenceError> {
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != headers.len()) {
            return Err(InferenceError::Invalid(format!("row {} has the wrong number of fields", i + 1)));
        }
        Ok(DataTable { headers, rows })
    }

    /// Reads CSV with a header; lines starting with `#` are skipped.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, InferenceError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| InferenceError::Invalid(format!("csv header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| InferenceError::Invalid(format!("csv row {}: {e}", i + 2)))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(DataTable { headers, rows })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), InferenceError> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| InferenceError::Invalid(format!("csv write: {e}"));
        wr.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            wr.write_record(r).map_err(io)?;
        }
        wr.flush().map_err(|e| InferenceError::Invalid(format!("csv write: {e}")))
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, InferenceError> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| InferenceError::UnknownColumn(name.to_string()))
    }

    pub fn text(&self, name: &str) -> Result<Vec<&str>, InferenceError> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    /// Parsed values; blanks and `NA` are `None`.
    pub fn numeric(&self, name: &str) -> Result<Vec<Option<f64>>, InferenceError> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s = r[j].trim();
                if is_missing(s) {
                    return Ok(None);
                }
                match s {
                    "true" | "TRUE" | "True" => return Ok(Some(1.0)),
                    "false" | "FALSE" | "False" => return Ok(Some(0.0)),
                    _ => {}
                }
                s.parse::<f64>().map(Some).map_err(|_| InferenceError::BadValue {
                    column: name.to_string(),
                    row: i + 1,
                    msg: format!("not a number: {s:?}"),
                })
            })
            .collect()
    }

    /// Replaces column `name`, or appends it.
    pub fn set_column(&mut self, name: &str, values: Vec<String>) -> Result<(), InferenceError> {
        if values.len() != self.rows.len() {
            return Err(InferenceError::LengthMismatch { rows: self.rows.len(), outcome: values.len() });
        }
        let j = match self.headers.iter().position(|h| h == name) {
            Some(j) => j,
            None => {
                self.headers.push(name.to_string());
                self.rows.iter_mut().for_each(|r| r.push(String::new()));
                self.headers.len() - 1
            }
        };
        for (r, v) in self.rows.iter_mut().zip(values) {
            r[j] = v;
        }
        Ok(())
    }

    /// Inner join on `key`, keeping this table's row order. Columns of
    /// `other` whose names already exist here are ignored.
    pub fn join(&self, other: &DataTable, key: &str) -> Result<DataTable, InferenceError> {
        let ka = self.column_index(key)?;
        let kb = other.column_index(key)?;
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, r) in other.rows.iter().enumerate() {
            if index.insert(r[kb].as_str(), i).is_some() {
                return Err(InferenceError::Invalid(format!("duplicate join key {:?}", r[kb])));
            }
        }
        let extra: Vec<usize> = (0..other.headers.len()).filter(|&j| !self.headers.contains(&other.headers[j])).collect();
        let mut headers = self.headers.clone();
        headers.extend(extra.iter().map(|&j| other.headers[j].clone()));
        let rows = self
            .rows
            .iter()
            .filter_map(|r| {
                index.get(r[ka].as_str()).map(|&i| {
                    let mut row = r.clone();
                    row.extend(extra.iter().map(|&j| other.rows[i][j].clone()));
                    row
                })
            })
            .collect();
        Ok(DataTable { headers, rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeFilter {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginsSpec {
    pub focal: String,
    pub grid: Vec<f64>,
}

/// Model definition read from `key = value` lines:
///
/// ```text
/// outcome = funded
/// predictors = promo_fraction, log_publications
/// categorical_fe = year, program
/// family = logit
/// reference.year = 2016
/// filter = promo_fraction:0:0.1
/// margins.focal = promo_fraction
/// margins.grid = 0:0.03:0.005
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub outcome: String,
    pub predictors: Vec<String>,
    pub categorical_fe: Vec<String>,
    pub family: Family,
    pub intercept: bool,
    pub reference_levels: BTreeMap<String, String>,
    pub filters: Vec<RangeFilter>,
    pub margins: Option<MarginsSpec>,
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}"));
    if parts.len() == 3 {
        let (a, b, s) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(s > 0.0) || b < a {
            return Err("grid needs start <= stop and a positive step".into());
        }
        let steps = ((b - a) / s + 1e-9).floor() as usize;
        if steps > 100_000 {
            return Err("grid too fine".into());
        }
        return Ok((0..=steps).map(|i| a + i as f64 * s).collect());
    }
    let g: Vec<f64> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(num).collect::<Result<_, _>>()?;
    if g.is_empty() {
        return Err("empty grid".into());
    }
    Ok(g)
}

impl ModelSpec {
    pub fn new(outcome: &str, predictors: &[&str], family: Family) -> Self {
        ModelSpec {
            outcome: outcome.to_string(),
            predictors: predictors.iter().map(|s| s.to_string()).collect(),
            categorical_fe: Vec::new(),
            family,
            intercept: true,
            reference_levels: BTreeMap::new(),
            filters: Vec::new(),
            margins: None,
        }
    }

    pub fn parse(src: &str) -> Result<ModelSpec, InferenceError> {
        let mut outcome = None;
        let mut family = None;
        let mut spec = ModelSpec::new("", &[], Family::Logit);
        let mut focal = None;
        let mut grid = None;
        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| InferenceError::Spec { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .or_else(|| line.split_once(':').filter(|(k, _)| !k.contains(' ')))
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "outcome" => outcome = Some(v.to_string()),
                "predictors" => spec.predictors.extend(list(v)),
                "categorical_fe" | "fixed_effects" => spec.categorical_fe.extend(list(v)),
                "family" => family = Some(Family::parse(v).ok_or_else(|| err(format!("unknown family {v:?}")))?),
                "intercept" => {
                    spec.intercept = match v {
                        "true" | "yes" | "1" => true,
                        "false" | "no" | "0" => false,
                        _ => return Err(err(format!("intercept must be true or false, got {v:?}"))),
                    }
                }
                "filter" => {
                    let parts: Vec<&str> = v.rsplitn(3, ':').collect();
                    if parts.len() != 3 {
                        return Err(err("filter must be column:min:max".into()));
                    }
                    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("bad filter bound {s:?}")));
                    let (max, min) = (num(parts[0])?, num(parts[1])?);
                    if min > max {
                        return Err(err("filter min exceeds max".into()));
                    }
                    spec.filters.push(RangeFilter { column: parts[2].trim().to_string(), min, max });
                }
                "margins.focal" => focal = Some(v.to_string()),
                "margins.grid" => grid = Some(parse_grid(v).map_err(err)?),
                _ => {
                    if let Some(col) = k.strip_prefix("reference.") {
                        spec.reference_levels.insert(col.to_string(), v.to_string());
                    } else {
                        return Err(err(format!("unknown key {k:?}")));
                    }
                }
            }
        }
        spec.outcome = outcome.ok_or(InferenceError::Spec { line: 0, msg: "missing outcome".into() })?;
        spec.family = family.ok_or(InferenceError::Spec { line: 0, msg: "missing family".into() })?;
        spec.margins = match (focal, grid) {
            (Some(focal), Some(grid)) => Some(MarginsSpec { focal, grid }),
            (None, None) => None,
            _ => return Err(InferenceError::Spec { line: 0, msg: "margins needs both focal and grid".into() }),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |msg: String| Err(InferenceError::Spec { line: 0, msg });
        if self.outcome.is_empty() {
            return bad("missing outcome".into());
        }
        if self.predictors.contains(&self.outcome) || self.categorical_fe.contains(&self.outcome) {
            return bad(format!("outcome {:?} also appears among the regressors", self.outcome));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in self.predictors.iter().chain(&self.categorical_fe) {
            if !seen.insert(c) {
                return bad(format!("column {c:?} listed twice"));
            }
        }
        if self.predictors.is_empty() && self.categorical_fe.is_empty() && !self.intercept {
            return bad("model has no regressors".into());
        }
        for c in self.reference_levels.keys() {
            if !self.categorical_fe.contains(c) {
                return bad(format!("reference level given for non-categorical column {c:?}"));
            }
        }
        Ok(())
    }
}

/// Design, outcome and bookkeeping produced by [`build_design`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData<T> {
    pub design: Design<T>,
    pub y: Vec<T>,
    /// Source row index of each observation.
    pub rows: Vec<usize>,
    pub dropped_filter: usize,
    pub dropped_missing: usize,
    /// Per categorical column: reference level and all levels.
    pub levels: BTreeMap<String, (String, Vec<String>)>,
}

fn sort_levels(levels: &mut [String]) {
    if levels.iter().all(|l| l.parse::<f64>().is_ok()) {
        levels.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    } else {
        levels.sort();
    }
}

/// Applies filters, drops rows with missing values and dummy-codes the
/// categorical columns (`column[level]`, reference level omitted).
pub fn build_design<T: Scalar>(table: &DataTable, spec: &ModelSpec) -> Result<ModelData<T>, InferenceError> {
    spec.validate()?;
    let y_all = table.numeric(&spec.outcome)?;
    let preds: Vec<Vec<Option<f64>>> = spec.predictors.iter().map(|p| table.numeric(p)).collect::<Result<_, _>>()?;
    let cats: Vec<Vec<&str>> = spec.categorical_fe.iter().map(|c| table.text(c)).collect::<Result<_, _>>()?;
    let filters: Vec<(Vec<Option<f64>>, &RangeFilter)> =
        spec.filters.iter().map(|f| table.numeric(&f.column).map(|v| (v, f))).collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let (mut dropped_filter, mut dropped_missing) = (0, 0);
    for i in 0..table.n_rows() {
        if !filters.iter().all(|(v, f)| v[i].is_some_and(|x| x >= f.min && x <= f.max)) {
            dropped_filter += 1;
            continue;
        }
        if y_all[i].is_none() || preds.iter().any(|c| c[i].is_none()) || cats.iter().any(|c| is_missing(c[i])) {
            dropped_missing += 1;
            continue;
        }
        rows.push(i);
    }
    if rows.is_empty() {
        return Err(InferenceError::Empty);
    }

    let mut levels = BTreeMap::new();
    let mut dummy_sets = Vec::new();
    for (c, name) in cats.iter().zip(&spec.categorical_fe) {
        let mut lv: Vec<String> = rows.iter().map(|&i| c[i].trim().to_string()).collect();
        sort_levels(&mut lv);
        lv.dedup();
        let reference = match spec.reference_levels.get(name) {
            Some(r) if lv.contains(r) => r.clone(),
            Some(r) => {
                return Err(InferenceError::Spec { line: 0, msg: format!("reference level {r:?} not observed in {name:?}") })
            }
            None => lv[0].clone(),
        };
        let others: Vec<String> = lv.iter().filter(|l| **l != reference).cloned().collect();
        dummy_sets.push(others);
        levels.insert(name.clone(), (reference, lv));
    }

    let mut names = Vec::new();
    if spec.intercept {
        names.push(INTERCEPT.to_string());
    }
    names.extend(spec.predictors.iter().cloned());
    for (name, others) in spec.categorical_fe.iter().zip(&dummy_sets) {
        names.extend(others.iter().map(|l| format!("{name}[{l}]")));
    }
    let n = rows.len();
    let mut x = Matrix::zeros(n, names.len());
    for (r, &i) in rows.iter().enumerate() {
        let mut j = 0;
        if spec.intercept {
            x[(r, 0)] = T::one();
            j = 1;
        }
        for c in &preds {
            x[(r, j)] = T::of(c[i].unwrap_or(0.0));
            j += 1;
        }
        for (c, others) in cats.iter().zip(&dummy_sets) {
            let v = c[i].trim();
            for l in others {
                if l == v {
                    x[(r, j)] = T::one();
                }
                j += 1;
            }
        }
    }
    let y = rows.iter().map(|&i| T::of(y_all[i].unwrap_or(0.0))).collect();
    Ok(ModelData { design: Design::new(x, names), y, rows, dropped_filter, dropped_missing, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> DataTable {
        DataTable::from_csv(
            "id,y,x,year\n# comment\na,1,0.5,2017\nb,0,0.1,2016\nc,1,NA,2016\nd,0,0.3,2018\ne,1,0.9,2017\n".as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn spec_round_trip() {
        let s = ModelSpec::parse(
            "outcome = y\npredictors = x\ncategorical_fe = year\nfamily = logit\nreference.year = 2017\n\
             filter = x:0:1\nmargins.focal = x\nmargins.grid = 0:0.5:0.25\n",
        )
        .unwrap();
        assert_eq!(s.family, Family::Logit);
        assert_eq!(s.margins.unwrap().grid, vec![0.0, 0.25, 0.5]);
        assert!(ModelSpec::parse("outcome = y\npredictors = y\nfamily = ols").is_err());
        assert!(matches!(ModelSpec::parse("outcome = y\nbogus = 1\nfamily = ols"), Err(InferenceError::Spec { line: 2, .. })));
    }

    #[test]
    fn dummies_and_missing_rows() {
        let mut spec = ModelSpec::new("y", &["x"], Family::Ols);
        spec.categorical_fe.push("year".into());
        let d: ModelData<f64> = build_design(&table(), &spec).unwrap();
        assert_eq!(d.dropped_missing, 1);
        assert_eq!(d.design.names, vec!["(intercept)", "x", "year[2017]", "year[2018]"]);
        assert_eq!(d.rows, vec![0, 1, 3, 4]);
        spec.reference_levels.insert("year".into(), "2018".into());
        let d: ModelData<f64> = build_design(&table(), &spec).unwrap();
        assert_eq!(d.design.names[2..], ["year[2016]", "year[2017]"]);
        spec.reference_levels.insert("year".into(), "1999".into());
        assert!(build_design::<f64>(&table(), &spec).is_err());
    }

    #[test]
    fn join_keeps_left_columns() {
        let right = DataTable::from_csv("id,z,y\na,5,9\nd,6,9\n".as_bytes()).unwrap();
        let j = table().join(&right, "id").unwrap();
        assert_eq!(j.headers(), ["id", "y", "x", "year", "z"]);
        assert_eq!(j.n_rows(), 2);
        assert_eq!(j.numeric("y").unwrap(), vec![Some(1.0), Some(0.0)]);
    }
}
