use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::args::{Format, Opts};
use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let fail = |e: std::io::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut f = fs::File::create(&tmp).map_err(fail)?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(fail)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}

/// CSV with optional leading `# key=value` lines to a JSON document
/// `{"metadata": {...}, "rows": [{...}]}`. Cells that parse as finite
/// numbers become numbers, blanks become null.
pub fn csv_to_json(text: &str) -> Result<Value, CliError> {
    let mut metadata = Map::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix('#') {
            Some(meta) => {
                let meta = meta.trim();
                match meta.split_once('=') {
                    Some((k, v)) => metadata.insert(k.trim().to_string(), cell(v.trim())),
                    None => metadata.insert(meta.to_string(), Value::Bool(true)),
                };
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::Data(format!("report conversion: {e}")))?.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("report conversion: {e}")))?;
        let obj: Map<String, Value> = headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), cell(v))).collect();
        rows.push(Value::Object(obj));
    }
    Ok(serde_json::json!({ "metadata": metadata, "rows": rows }))
}

fn cell(v: &str) -> Value {
    if v.is_empty() {
        return Value::Null;
    }
    match v {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if let Ok(i) = v.parse::<i64>() {
        return Value::from(i);
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map_or(Value::String(v.into()), Value::Number),
        _ => Value::String(v.to_string()),
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    tool_version: &'a str,
    seed: u64,
    config_hash: String,
    settings: Value,
    input_hashes: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
    timestamp: u64,
}

/// Inputs read and outputs written by one invocation.
pub struct Run {
    pub command: &'static str,
    pub opts: Opts,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    pub fn new(command: &'static str, opts: Opts) -> Result<Self, CliError> {
        fs::create_dir_all(&opts.out).map_err(|e| CliError::Data(format!("{}: {e}", opts.out.display())))?;
        Ok(Run { command, opts, inputs: BTreeMap::new(), outputs: BTreeMap::new() })
    }

    /// Reads a text input and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{}: not valid UTF-8", path.display())))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.opts.out.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.path(name), bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes a CSV report as `<stem>.csv` or `<stem>.json` per `--format`.
    pub fn write_table(&mut self, stem: &str, csv_bytes: Vec<u8>) -> Result<(), CliError> {
        match self.opts.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &csv_bytes),
            Format::Json => {
                let text = String::from_utf8(csv_bytes).map_err(|_| CliError::Data("report is not UTF-8".into()))?;
                let mut out = serde_json::to_vec_pretty(&csv_to_json(&text)?).expect("JSON value serializes");
                out.push(b'\n');
                self.write(&format!("{stem}.json"), &out)
            }
        }
    }

    /// Writes `manifest.json` describing the invocation.
    pub fn finish(self) -> Result<Vec<String>, CliError> {
        let settings = serde_json::to_value(&self.opts).expect("options serialize");
        let canonical = serde_json::to_vec(&settings).expect("options serialize");
        let timestamp = match std::env::var("SOURCE_DATE_EPOCH") {
            Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("SOURCE_DATE_EPOCH={s:?} is not an integer")))?,
            Err(_) => SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let manifest = Manifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: self.opts.seed,
            config_hash: sha256_hex(&canonical),
            settings,
            input_hashes: &self.inputs,
            outputs: &self.outputs,
            timestamp,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&self.path("manifest.json"), &bytes)?;
        let mut names: Vec<String> = self.outputs.keys().cloned().collect();
        names.push("manifest.json".into());
        Ok(names)
    }
}
