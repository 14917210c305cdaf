//! Reference external scorer: the valence baseline behind the
//! line-delimited JSON protocol.
//!
//! Usage: `promolex-scorer --ratings FILE [--batch N]`

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use promolex::experiment::BaselineValenceScorer;
use promolex::lexicon::load_rating_lexicon;
use serde_json::{json, Value};

fn usage(msg: &str) -> ExitCode {
    eprintln!("promolex-scorer: {msg}\nusage: promolex-scorer --ratings FILE [--batch N]");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut ratings = None;
    let mut batch = 32u64;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--ratings" => ratings = it.next().cloned(),
            "--batch" => match it.next().and_then(|v| v.parse().ok()).filter(|&b| b > 0) {
                Some(b) => batch = b,
                None => return usage("--batch needs a positive integer"),
            },
            other => return usage(&format!("unknown argument {other:?}")),
        }
    }
    let Some(path) = ratings else { return usage("--ratings is required") };
    let file = match std::fs::File::open(&path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("promolex-scorer: {path}: {e}");
            return ExitCode::from(2);
        }
    };
    let scorer = match load_rating_lexicon(file).map_err(|e| e.to_string()).and_then(|(r, _)| {
        BaselineValenceScorer::new(r).map_err(|e| e.to_string())
    }) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("promolex-scorer: {path}: {e}");
            return ExitCode::from(2);
        }
    };

    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Value>(&line) {
            Ok(v) if v.get("hello").is_some() => json!({ "hello": 1, "batch": batch }),
            Ok(v) => {
                let id = v.get("id").cloned().unwrap_or(Value::Null);
                let text = v.get("text").and_then(Value::as_str).unwrap_or("");
                let s = scorer.score(text);
                json!({ "id": id, "positive": s.positive, "neutral": s.neutral, "negative": s.negative })
            }
            Err(e) => json!({ "error": e.to_string() }),
        };
        if writeln!(stdout, "{reply}").and_then(|_| stdout.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}
