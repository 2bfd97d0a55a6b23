//! LLM-as-judge scoring through an OpenAI-compatible chat-completions endpoint.
//!
//! The API key is read from `UAG_JUDGE_API_KEY` only. Samples go into the user
//! message, numbered and fenced, so they cannot change the system rubric.

use std::env;
use std::thread;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const API_KEY_ENV: &str = "UAG_JUDGE_API_KEY";
pub const MODEL_ENV: &str = "UAG_JUDGE_MODEL";
pub const DEFAULT_MODEL: &str = "gpt-4.1-2025-04-14";

const DIVERSITY_RUBRIC: &str = "You are a text diversity evaluator.

Below are {n} numbered text samples. Your task is to assess how diverse they are in terms of perspective, style, plot structure, and language variation.

Your output must be a JSON object with:
- \"diversity_score\": a float between 0.0 and 1.0 (where 0 = all samples are nearly identical, and 1 = samples are maximally diverse)
- \"justification\": a one-sentence explanation of your reasoning

Scoring guidance:
- 0.0: All samples are structurally and semantically almost identical.
- 0.1–0.3: Slight variation in phrasing or detail, but mostly follow the same template.
- 0.4–0.6: Notable variation in perspective, tone, setting, or content development.
- 0.7–0.9: Substantial differences in narrative framing, imaginative detail, or genre shifts.
- 1.0: Samples are maximally different in form, function, and voice.

Return only a valid JSON object and nothing else.";

const DEGENERATION_RUBRIC: &str = "You are a strict judge of text degeneration.

Degeneration includes garbled tokens, random symbols, language mixing, nonsense, broken Unicode, repetitive babble, or clear loss of coherence.
Don't judge the repetitiveness across answers, assess the individual quality and average them.
Rate on 0.0~1.0: 0.0 clean/coherent, 1.0 severely degenerated.
Consider ALL provided answers jointly and set the score to reflect the average observed degeneration.
Return pure JSON: {score: <float>, reason: <short>}";

/// Image rubrics. Kept as templates; images are not attached by this client.
pub const IMAGE_DIVERSITY_RUBRIC: &str = "You are a strict judge of IMAGE DIVERSITY.

You will be given multiple images that were generated from the SAME text prompt.
Judge how different these images are from each other in content, composition, style, and color palette.
Return ONLY a JSON object: {score: <float 0.0~1.0>, reason: <short>}.
0.0 = nearly identical; 1.0 = maximally diverse.
Do NOT evaluate prompt-image alignment; only cross-image diversity.";

pub const IMAGE_QUALITY_RUBRIC: &str = "You are a strict judge of IMAGE GENERATION QUALITY.

You will receive multiple images that were generated from the SAME text prompt.
Rate EACH image individually on a 0.0–1.0 scale for: coherence, absence of artifacts, composition, lighting, and overall aesthetics.
Do NOT compare images to each other; judge absolute quality per image.
Return ONLY JSON of the form:
{
  per_image: [{idx: <int>, score: <float 0.0~1.0>, reason: <short>}, ...],
  score_mean: <float>
}
Keep reasons short.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeKind {
    Diversity,
    Degeneration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub score: f64,
    pub reason: String,
    pub kind: JudgeKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JudgeError {
    #[error("no JSON object in judge response")]
    NoJson,
    #[error("judge response has no score field")]
    MissingScore,
    #[error("judge score {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("malformed chat completion: {0}")]
    MalformedCompletion(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("no samples to judge")]
    NoSamples,
    #[error("invalid judge configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    fn new(role: &str, content: String) -> Self {
        Self { role: role.into(), content }
    }
}

/// System rubric plus a user message holding the numbered samples.
pub fn build_rubric_prompt<S: AsRef<str>>(kind: JudgeKind, samples: &[S]) -> Vec<ChatMessage> {
    let system = match kind {
        JudgeKind::Diversity => DIVERSITY_RUBRIC.replace("{n}", &samples.len().to_string()),
        JudgeKind::Degeneration => DEGENERATION_RUBRIC.to_string(),
    };
    let mut user = String::new();
    for (i, s) in samples.iter().enumerate() {
        // Fence each sample; a sample cannot close its own fence because the
        // marker carries the sample number.
        user.push_str(&format!("<sample {n}>\n{}\n</sample {n}>\n", s.as_ref(), n = i + 1));
    }
    user.push_str("Respond with the JSON object only.");
    vec![ChatMessage::new("system", system), ChatMessage::new("user", user)]
}

/// Byte ranges of balanced `{...}` spans, in order of their opening brace.
fn brace_spans(text: &str) -> impl Iterator<Item = &str> {
    let bytes = text.as_bytes();
    (0..bytes.len()).filter(move |&i| bytes[i] == b'{').filter_map(move |start| {
        let (mut depth, mut in_str, mut escaped) = (0usize, false, false);
        for (k, &b) in bytes[start..].iter().enumerate() {
            if in_str {
                match (escaped, b) {
                    (true, _) => escaped = false,
                    (false, b'\\') => escaped = true,
                    (false, b'"') => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return text.get(start..start + k + 1);
                    }
                }
                _ => {}
            }
        }
        None
    })
}

fn bare_key_pattern() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"([{,]\s*)([A-Za-z_][A-Za-z0-9_]*)\s*:"#).expect("valid pattern"))
}

/// First parseable JSON object; bare keys such as `{score: 0.5}` are accepted.
fn first_object(text: &str) -> Option<serde_json::Map<String, Value>> {
    brace_spans(text).find_map(|span| {
        let parsed = serde_json::from_str::<Value>(span)
            .ok()
            .or_else(|| serde_json::from_str(&bare_key_pattern().replace_all(span, r#"$1"$2":"#)).ok());
        match parsed {
            Some(Value::Object(map)) => Some(map),
            _ => None,
        }
    })
}

fn as_score(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Extracts the verdict from free text. Scores outside `[0, 1]` are errors,
/// never clamped.
pub fn parse_judge_response(text: &str, kind: JudgeKind) -> Result<JudgeScore, JudgeError> {
    let obj = first_object(text).ok_or(JudgeError::NoJson)?;
    let score = ["diversity_score", "score"]
        .iter()
        .find_map(|k| obj.get(*k))
        .ok_or(JudgeError::MissingScore)?;
    let score = as_score(score).ok_or(JudgeError::MissingScore)?;
    if !(0.0..=1.0).contains(&score) {
        return Err(JudgeError::OutOfRange(score));
    }
    let reason = ["reason", "justification"]
        .iter()
        .find_map(|k| obj.get(*k))
        .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
        .unwrap_or_default();
    Ok(JudgeScore { score, reason, kind })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeConfig {
    /// Endpoint root; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    /// First retry delay; doubles on each further retry.
    pub backoff: Duration,
}

impl JudgeConfig {
    /// Model from `UAG_JUDGE_MODEL` (default `gpt-4.1-2025-04-14`), key from
    /// `UAG_JUDGE_API_KEY`.
    pub fn from_env(base_url: &str) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            model_name: env::var(MODEL_ENV).unwrap_or_else(|_| DEFAULT_MODEL.to_string()),
            api_key: env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.timeout.is_zero() {
            return Err(JudgeError::InvalidConfig("timeout must be > 0".into()));
        }
        if self.base_url.is_empty() {
            return Err(JudgeError::InvalidConfig("empty base_url".into()));
        }
        Ok(())
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Request body: model, messages, temperature 0.
pub fn request_body(cfg: &JudgeConfig, messages: &[ChatMessage]) -> Value {
    json!({ "model": cfg.model_name, "messages": messages, "temperature": 0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeOutcome {
    pub score: JudgeScore,
    pub attempts: u32,
}

enum Attempt {
    Retry(String),
    Done(Result<String, JudgeError>),
}

#[derive(Debug, Clone)]
pub struct JudgeClient {
    cfg: JudgeConfig,
    agent: ureq::Agent,
}

impl JudgeClient {
    pub fn new(cfg: JudgeConfig) -> Result<Self, JudgeError> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { cfg, agent })
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.cfg
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut req = self.agent.post(self.cfg.endpoint());
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string();
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        let text = match text {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if !(200..300).contains(&status) {
            return Attempt::Done(Err(JudgeError::MalformedCompletion(format!("HTTP {status}: {text}"))));
        }
        Attempt::Done(completion_content(&text))
    }

    /// Scores `samples`, retrying transport failures, HTTP 429 and 5xx with
    /// exponential backoff.
    pub fn judge<S: AsRef<str>>(&self, kind: JudgeKind, samples: &[S]) -> Result<JudgeOutcome, JudgeError> {
        if samples.is_empty() {
            return Err(JudgeError::NoSamples);
        }
        let body = request_body(&self.cfg, &build_rubric_prompt(kind, samples));
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Attempt::Done(content) => {
                    let score = parse_judge_response(&content?, kind)?;
                    return Ok(JudgeOutcome { score, attempts });
                }
                Attempt::Retry(message) if attempts > self.cfg.max_retries => {
                    return Err(JudgeError::Transport { attempts, message });
                }
                Attempt::Retry(_) => thread::sleep(self.cfg.backoff * 2u32.saturating_pow(attempts - 1)),
            }
        }
    }
}

/// `choices[0].message.content` of a chat completion.
fn completion_content(text: &str) -> Result<String, JudgeError> {
    let v: Value = serde_json::from_str(text).map_err(|e| JudgeError::MalformedCompletion(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| JudgeError::MalformedCompletion("missing choices[0].message.content".into()))
}

/// One-shot form of [`JudgeClient::judge`].
pub fn judge_corpus<S: AsRef<str>>(cfg: &JudgeConfig, kind: JudgeKind, samples: &[S]) -> Result<JudgeScore, JudgeError> {
    Ok(JudgeClient::new(cfg.clone())?.judge(kind, samples)?.score)
}
