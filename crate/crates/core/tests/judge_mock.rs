mod common;

use std::time::Duration;

use common::{completion, dead_url, serve};
use serde_json::Value;
use uag::judge::{judge_corpus, JudgeClient, JudgeConfig, JudgeError, JudgeKind};

fn config(url: &str, max_retries: u32) -> JudgeConfig {
    JudgeConfig {
        base_url: url.to_string(),
        model_name: "judge-model".into(),
        api_key: Some("test-key".into()),
        timeout: Duration::from_secs(5),
        max_retries,
        backoff: Duration::from_millis(1),
    }
}

#[test]
fn fixed_verdict_round_trip() {
    let server = serve(vec![(200, completion(r#"{"diversity_score": 0.7, "justification": "varied"}"#))]);
    let samples = ["a tale", "another tale"];
    let score = judge_corpus(&config(&server.url, 0), JudgeKind::Diversity, &samples).unwrap();
    assert_eq!((score.score, score.reason.as_str(), score.kind), (0.7, "varied", JudgeKind::Diversity));

    let req = server.last();
    assert_eq!(req.request_line, "POST /chat/completions HTTP/1.1");
    assert_eq!(req.header("authorization"), Some("Bearer test-key"));
    let body: Value = serde_json::from_str(&req.body).unwrap();
    assert_eq!(body["model"], "judge-model");
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert!(body["messages"][0]["content"].as_str().unwrap().contains("Below are 2 numbered text samples."));
    assert!(body["messages"][1]["content"].as_str().unwrap().contains("<sample 2>\nanother tale\n</sample 2>"));
}

#[test]
fn degeneration_rubric_round_trip() {
    let server = serve(vec![(200, completion("Verdict: {\"score\": 0.2, \"reason\": \"mostly clean\"}"))]);
    let score = judge_corpus(&config(&server.url, 0), JudgeKind::Degeneration, &["fine text"]).unwrap();
    assert_eq!(score.score, 0.2);
    let body: Value = serde_json::from_str(&server.last().body).unwrap();
    assert!(body["messages"][0]["content"].as_str().unwrap().contains("Return pure JSON"));
}

#[test]
fn retries_until_success() {
    let ok = completion(r#"{"score": 0.4, "reason": "ok"}"#);
    let server = serve(vec![(503, "busy".into()), (500, "oops".into()), (200, ok)]);
    let client = JudgeClient::new(config(&server.url, 3)).unwrap();
    let outcome = client.judge(JudgeKind::Degeneration, &["x"]).unwrap();
    assert_eq!(outcome.attempts, 3);
    assert_eq!(outcome.score.score, 0.4);
    assert_eq!(server.hits(), 3);
}

#[test]
fn rate_limit_is_retried() {
    let server = serve(vec![(429, "slow down".into()), (200, completion(r#"{"score": 0.0}"#))]);
    let outcome = JudgeClient::new(config(&server.url, 1)).unwrap().judge(JudgeKind::Degeneration, &["x"]).unwrap();
    assert_eq!(outcome.attempts, 2);
}

#[test]
fn no_retries_means_one_attempt() {
    let server = serve(vec![(500, "down".into())]);
    let err = judge_corpus(&config(&server.url, 0), JudgeKind::Diversity, &["x"]).unwrap_err();
    assert!(matches!(err, JudgeError::Transport { attempts: 1, .. }), "{err:?}");
    assert_eq!(server.hits(), 1);

    let err = judge_corpus(&config(&dead_url(), 2), JudgeKind::Diversity, &["x"]).unwrap_err();
    assert!(matches!(err, JudgeError::Transport { attempts: 3, .. }), "{err:?}");
}

#[test]
fn malformed_responses_surface_as_parse_errors() {
    let server = serve(vec![(200, completion("I cannot decide."))]);
    assert_eq!(judge_corpus(&config(&server.url, 2), JudgeKind::Diversity, &["x"]), Err(JudgeError::NoJson));
    assert_eq!(server.hits(), 1, "parse failures are not retried");

    let server = serve(vec![(200, completion(r#"{"score": 1.5, "reason": "x"}"#))]);
    assert_eq!(judge_corpus(&config(&server.url, 0), JudgeKind::Diversity, &["x"]), Err(JudgeError::OutOfRange(1.5)));

    let server = serve(vec![(200, "not a completion".into())]);
    let err = judge_corpus(&config(&server.url, 0), JudgeKind::Diversity, &["x"]).unwrap_err();
    assert!(matches!(err, JudgeError::MalformedCompletion(_)));

    let server = serve(vec![(401, r#"{"error": "bad key"}"#.into())]);
    let err = judge_corpus(&config(&server.url, 3), JudgeKind::Diversity, &["x"]).unwrap_err();
    assert!(matches!(err, JudgeError::MalformedCompletion(_)));
    assert_eq!(server.hits(), 1);
}

#[test]
fn empty_sample_list_is_rejected_before_sending() {
    let server = serve(vec![(200, completion(r#"{"score": 0.5}"#))]);
    let none: [&str; 0] = [];
    assert_eq!(judge_corpus(&config(&server.url, 0), JudgeKind::Diversity, &none), Err(JudgeError::NoSamples));
    assert_eq!(server.hits(), 0);
}
