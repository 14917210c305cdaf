use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::tokenize;
use crate::lexicon::RatingLexicon;

/// Allowed slack on `positive + neutral + negative = 1`.
pub const SCORE_SUM_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_SCORER_TIMEOUT: Duration = Duration::from_secs(60);

/// Sentence used by the determinism probe at handshake.
const PROBE_SENTENCE: &str = "This critical study will provide new information about the regulation of growth.";

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer: {0}")]
    Config(String),
    #[error("could not start scorer {command:?}: {msg}")]
    Spawn { command: String, msg: String },
    #[error("scorer protocol violation: {0}")]
    Protocol(String),
    #[error("scorer timed out after {0:?}")]
    Timeout(Duration),
    #[error("scorer returned an invalid score for sentence {index} ({snippet:?}): {msg}")]
    InvalidScore { index: usize, snippet: String, msg: String },
    #[error("scorer is nondeterministic: the probe sentence scored {first:?} then {second:?}")]
    Nondeterministic { first: SentimentScore, second: SentimentScore },
    #[error("scorer i/o: {0}")]
    Io(String),
}

/// Confidence for the three sentiment labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentScore {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
}

impl SentimentScore {
    pub const UNIFORM: SentimentScore = SentimentScore { positive: 1.0 / 3.0, neutral: 1.0 / 3.0, negative: 1.0 / 3.0 };

    pub fn new(positive: f64, neutral: f64, negative: f64) -> Result<Self, String> {
        let s = SentimentScore { positive, neutral, negative };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), String> {
        for (name, v) in [("positive", self.positive), ("neutral", self.neutral), ("negative", self.negative)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} is not a probability"));
            }
        }
        let sum = self.positive + self.neutral + self.negative;
        if (sum - 1.0).abs() > SCORE_SUM_TOLERANCE {
            return Err(format!("probabilities sum to {sum}"));
        }
        Ok(())
    }
}

/// A sentence-level sentiment model. Implementations must be deterministic:
/// the same sentence always gets the same score.
pub trait SentenceScorer: Send + Sync {
    /// One score per sentence, in input order.
    fn score_batch(&self, sentences: &[&str]) -> Result<Vec<SentimentScore>, ScorerError>;

    /// Short configuration string for reports and manifests.
    fn descriptor(&self) -> String;
}

fn snippet(s: &str) -> String {
    let mut out: String = s.chars().take(60).collect();
    if out.len() < s.len() {
        out.push_str("...");
    }
    out
}

/// Scores every sentence, checking the result count and each score.
pub fn score_sentences<S: SentenceScorer + ?Sized>(
    scorer: &S,
    sentences: &[&str],
) -> Result<Vec<SentimentScore>, ScorerError> {
    if sentences.is_empty() {
        return Ok(Vec::new());
    }
    let scores = scorer.score_batch(sentences)?;
    if scores.len() != sentences.len() {
        return Err(ScorerError::Protocol(format!(
            "{} scores returned for {} sentences",
            scores.len(),
            sentences.len()
        )));
    }
    for (i, (s, text)) in scores.iter().zip(sentences).enumerate() {
        s.check().map_err(|msg| ScorerError::InvalidScore { index: i, snippet: snippet(text), msg })?;
    }
    Ok(scores)
}

/// Valence-lexicon stand-in for a trained sentiment model.
///
/// `positive = logistic((mean valence of rated tokens - midpoint) / scale)`;
/// the remaining mass goes to neutral and negative in the fixed proportion
/// `neutral_share : 1 - neutral_share`. Sentences without rated tokens get
/// the uniform score.
#[derive(Debug, Clone)]
pub struct BaselineValenceScorer {
    ratings: RatingLexicon,
    pub midpoint: f64,
    pub scale: f64,
    pub neutral_share: f64,
}

impl BaselineValenceScorer {
    /// Midpoint 5 and scale 1 suit the usual 1-9 valence norms.
    pub fn new(ratings: RatingLexicon) -> Result<Self, ScorerError> {
        Self::with_params(ratings, 5.0, 1.0, 0.5)
    }

    pub fn with_params(ratings: RatingLexicon, midpoint: f64, scale: f64, neutral_share: f64) -> Result<Self, ScorerError> {
        if ratings.is_empty() {
            return Err(ScorerError::Config("the valence scorer needs a non-empty rating lexicon".into()));
        }
        if !midpoint.is_finite() || !(scale.is_finite() && scale > 0.0) {
            return Err(ScorerError::Config(format!("bad midpoint/scale {midpoint}/{scale}")));
        }
        if !(0.0..=1.0).contains(&neutral_share) {
            return Err(ScorerError::Config(format!("neutral share {neutral_share} outside [0, 1]")));
        }
        Ok(BaselineValenceScorer { ratings, midpoint, scale, neutral_share })
    }

    pub fn score(&self, sentence: &str) -> SentimentScore {
        let mut sum = 0.0;
        let mut n = 0usize;
        for tok in tokenize(sentence) {
            if let Some(r) = self.ratings.get(&tok.lower) {
                sum += r.valence;
                n += 1;
            }
        }
        if n == 0 {
            return SentimentScore::UNIFORM;
        }
        let z = (sum / n as f64 - self.midpoint) / self.scale;
        let positive = 1.0 / (1.0 + (-z).exp());
        let rest = 1.0 - positive;
        let neutral = self.neutral_share * rest;
        SentimentScore { positive, neutral, negative: rest - neutral }
    }
}

impl SentenceScorer for BaselineValenceScorer {
    fn score_batch(&self, sentences: &[&str]) -> Result<Vec<SentimentScore>, ScorerError> {
        Ok(sentences.iter().map(|s| self.score(s)).collect())
    }

    fn descriptor(&self) -> String {
        format!(
            "baseline_valence(midpoint={}, scale={}, neutral_share={}, rated_words={})",
            self.midpoint,
            self.scale,
            self.neutral_share,
            self.ratings.len()
        )
    }
}

struct Process {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

impl Process {
    fn send(&mut self, payload: &str) -> Result<(), ScorerError> {
        let stdin = self.stdin.as_mut().ok_or_else(|| ScorerError::Protocol("scorer input closed".into()))?;
        stdin
            .write_all(payload.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| ScorerError::Io(format!("writing to scorer: {e}")))
    }

    fn recv(&self, deadline: Instant, timeout: Duration) -> Result<String, ScorerError> {
        let left = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(left) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(ScorerError::Io(format!("reading from scorer: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(ScorerError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ScorerError::Protocol("scorer closed its output".into())),
        }
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        self.stdin.take();
        let until = Instant::now() + Duration::from_millis(500);
        while Instant::now() < until {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A scorer running as a child process speaking newline-delimited JSON.
///
/// Handshake: `{"hello":1}` answered by `{"hello":1,"batch":B}`. Then up to
/// B requests `{"id","text"}` are written at a time and the matching
/// `{"id","positive","neutral","negative"}` responses are collected in any
/// order. The process is a serialized resource.
pub struct ExternalProcessScorer {
    command: String,
    batch: usize,
    timeout: Duration,
    process: Mutex<Process>,
}

impl std::fmt::Debug for ExternalProcessScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalProcessScorer")
            .field("command", &self.command)
            .field("batch", &self.batch)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalProcessScorer {
    /// Starts `sh -c command`, performs the handshake and checks that a probe
    /// sentence scores identically twice.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ScorerError> {
        if command.trim().is_empty() {
            return Err(ScorerError::Config("empty scorer command".into()));
        }
        let spawn_err = |msg: String| ScorerError::Spawn { command: command.to_string(), msg };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| spawn_err(e.to_string()))?;
        let stdin = child.stdin.take().ok_or_else(|| spawn_err("no stdin".into()))?;
        let stdout = child.stdout.take().ok_or_else(|| spawn_err("no stdout".into()))?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut process = Process { child, stdin: Some(stdin), lines: rx, next_id: 0 };

        process.send("{\"hello\":1}\n")?;
        let reply = process.recv(Instant::now() + timeout, timeout)?;
        let v: Value = serde_json::from_str(&reply)
            .map_err(|e| ScorerError::Protocol(format!("handshake reply {reply:?} is not JSON: {e}")))?;
        if v.get("hello").and_then(Value::as_u64) != Some(1) {
            return Err(ScorerError::Protocol(format!("handshake reply {reply:?} lacks \"hello\": 1")));
        }
        let batch = match v.get("batch").and_then(Value::as_u64) {
            Some(b) if b >= 1 => b as usize,
            _ => return Err(ScorerError::Protocol(format!("handshake reply {reply:?} lacks a positive \"batch\""))),
        };

        let scorer = ExternalProcessScorer { command: command.to_string(), batch, timeout, process: Mutex::new(process) };
        let first = scorer.score_batch(&[PROBE_SENTENCE])?[0];
        let second = scorer.score_batch(&[PROBE_SENTENCE])?[0];
        if first != second {
            return Err(ScorerError::Nondeterministic { first, second });
        }
        Ok(scorer)
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    fn run_chunk(&self, p: &mut Process, chunk: &[&str], offset: usize) -> Result<Vec<SentimentScore>, ScorerError> {
        let first_id = p.next_id;
        p.next_id += chunk.len() as u64;
        let mut payload = String::new();
        for (k, text) in chunk.iter().enumerate() {
            let req = json!({ "id": (first_id + k as u64).to_string(), "text": text });
            payload.push_str(&req.to_string());
            payload.push('\n');
        }
        p.send(&payload)?;

        let deadline = Instant::now() + self.timeout;
        let mut out: Vec<Option<SentimentScore>> = vec![None; chunk.len()];
        let mut pending = chunk.len();
        while pending > 0 {
            let line = p.recv(deadline, self.timeout)?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(&line)
                .map_err(|e| ScorerError::Protocol(format!("response {line:?} is not JSON: {e}")))?;
            let id = match v.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => return Err(ScorerError::Protocol(format!("response {line:?} has no id"))),
            };
            let k = id
                .parse::<u64>()
                .ok()
                .and_then(|n| n.checked_sub(first_id))
                .map(|k| k as usize)
                .filter(|&k| k < chunk.len())
                .ok_or_else(|| ScorerError::Protocol(format!("response for unknown id {id:?}")))?;
            let bad = |msg: String| ScorerError::InvalidScore { index: offset + k, snippet: snippet(chunk[k]), msg };
            if out[k].is_some() {
                return Err(bad(format!("duplicate response for id {id}")));
            }
            let field = |name: &str| {
                v.get(name).and_then(Value::as_f64).ok_or_else(|| bad(format!("missing or non-numeric {name:?}")))
            };
            let score = SentimentScore { positive: field("positive")?, neutral: field("neutral")?, negative: field("negative")? };
            score.check().map_err(bad)?;
            out[k] = Some(score);
            pending -= 1;
        }
        Ok(out.into_iter().map(|s| s.expect("all ids answered")).collect())
    }
}

impl SentenceScorer for ExternalProcessScorer {
    fn score_batch(&self, sentences: &[&str]) -> Result<Vec<SentimentScore>, ScorerError> {
        let mut p = self.process.lock().map_err(|_| ScorerError::Protocol("scorer lock poisoned".into()))?;
        let mut out = Vec::with_capacity(sentences.len());
        for (c, chunk) in sentences.chunks(self.batch).enumerate() {
            out.extend(self.run_chunk(&mut p, chunk, c * self.batch)?);
        }
        Ok(out)
    }

    fn descriptor(&self) -> String {
        format!("external_process(command={:?}, batch={}, timeout_s={})", self.command, self.batch, self.timeout.as_secs_f64())
    }
}

/// Either scorer kind behind one type.
#[derive(Debug)]
pub enum ScorerHandle {
    BaselineValence(BaselineValenceScorer),
    ExternalProcess(ExternalProcessScorer),
}

impl ScorerHandle {
    pub fn kind(&self) -> &'static str {
        match self {
            ScorerHandle::BaselineValence(_) => "baseline_valence",
            ScorerHandle::ExternalProcess(_) => "external_process",
        }
    }
}

impl SentenceScorer for ScorerHandle {
    fn score_batch(&self, sentences: &[&str]) -> Result<Vec<SentimentScore>, ScorerError> {
        match self {
            ScorerHandle::BaselineValence(s) => s.score_batch(sentences),
            ScorerHandle::ExternalProcess(s) => s.score_batch(sentences),
        }
    }

    fn descriptor(&self) -> String {
        match self {
            ScorerHandle::BaselineValence(s) => s.descriptor(),
            ScorerHandle::ExternalProcess(s) => s.descriptor(),
        }
    }
}

pub fn baseline_valence_scorer(ratings: RatingLexicon) -> Result<ScorerHandle, ScorerError> {
    BaselineValenceScorer::new(ratings).map(ScorerHandle::BaselineValence)
}

pub fn external_scorer(command: &str, timeout: Duration) -> Result<ScorerHandle, ScorerError> {
    ExternalProcessScorer::spawn(command, timeout).map(ScorerHandle::ExternalProcess)
}
