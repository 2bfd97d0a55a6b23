//! Builds judge prompts and parses verdicts without touching the network.

use uag::judge::{build_rubric_prompt, parse_judge_response, request_body, JudgeConfig, JudgeKind};

fn main() {
    let samples = ["The fox ran home.", "A storm rolled over the hills.", "The fox ran home again."];
    for kind in [JudgeKind::Diversity, JudgeKind::Degeneration] {
        let messages = build_rubric_prompt(kind, &samples);
        println!("== {kind:?}");
        for m in &messages {
            let first = m.content.lines().next().unwrap_or_default();
            println!("  {:<6} {} ({} lines)", m.role, first, m.content.lines().count());
        }
    }

    let cfg = JudgeConfig::from_env("http://localhost:8080/v1");
    let body = request_body(&cfg, &build_rubric_prompt(JudgeKind::Diversity, &samples));
    println!("endpoint {} model {}", cfg.endpoint(), body["model"]);

    let replies = [
        r#"{"diversity_score": 0.55, "justification": "two near duplicates"}"#,
        "Sure! ```json\n{score: 0.2, reason: \"mild repetition\"}\n```",
        r#"{"score": 1.7}"#,
        "I cannot rate these.",
    ];
    for reply in replies {
        println!("{:<60} -> {:?}", reply.replace('\n', " "), parse_judge_response(reply, JudgeKind::Diversity));
    }
}
