use std::sync::Arc;

use metaevolve::llm::{LlmClient, LlmError, LlmRequest, LlmResponse, ScriptedClient};
use metaevolve::meta::{
    meta_train, score_rule, select_deployment_rule, training_suite, MetaArchive, MetaOptions, ScoreSettings,
};
use metaevolve::problems::{SharedProblem, SphereRing};
use metaevolve::ruledsl::{builtin_rule, parse, RuleOrigin, RuleSource, BUILTIN_SOURCES};

const TYPE_ERROR_RULE: &str = "offspring = bincross(x, r1, r2);\n";

fn builtin_text(name: &str) -> &'static str {
    BUILTIN_SOURCES.iter().find(|(n, _)| *n == name).unwrap().1
}

fn fenced(text: &str) -> String {
    format!("Here is my rule.\n```rule\n{text}```\n")
}

fn scenario_client() -> ScriptedClient {
    ScriptedClient::new([
        fenced(builtin_text("no_op")),
        fenced(builtin_text("de_rand_1_bin")),
        fenced(TYPE_ERROR_RULE),
    ])
    .unwrap()
}

struct Failing;

impl LlmClient for Failing {
    fn complete(&self, _: &LlmRequest) -> Result<LlmResponse, LlmError> {
        Err(LlmError::Transport {
            attempts: 4,
            message: "connection refused".into(),
        })
    }
}

#[test]
fn scripted_scenario_ranks_de_first() {
    let suite = training_suite(5, 2, 10).unwrap();
    let client = scenario_client();
    let archive = meta_train(&client, &suite, 2, 3, 11, &MetaOptions::default()).unwrap();
    assert_eq!(client.calls(), 6);
    assert_eq!(archive.history.len(), 6);
    assert_eq!(archive.history.iter().filter(|r| r.failed()).count(), 2);
    assert_eq!(archive.elites[0].text, builtin_text("de_rand_1_bin"));
    assert_eq!(select_deployment_rule(&archive).unwrap(), builtin_rule("de_rand_1_bin").unwrap());
    for r in &archive.history {
        if let Some(a) = r.aggregate {
            assert!(a > 0.0 && a <= 1.0);
        }
    }

    let again = meta_train(&scenario_client(), &suite, 2, 3, 11, &MetaOptions::default()).unwrap();
    assert_eq!(serde_json::to_string(&archive).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn errors_are_fed_back_verbatim() {
    let suite = training_suite(1, 1, 5).unwrap();
    let client = ScriptedClient::new([fenced(TYPE_ERROR_RULE)]).unwrap();
    let archive = meta_train(&client, &suite, 2, 1, 3, &MetaOptions::default()).unwrap();
    let error = archive.history[0].parse_failure.clone().unwrap();
    assert!(error.contains("type error"), "{error}");
    let requests = client.requests();
    assert!(!requests[0].user_message.contains(&error));
    assert!(requests[1].user_message.contains(&error));
}

#[test]
fn zero_iterations_give_empty_archive() {
    let suite = training_suite(1, 2, 5).unwrap();
    let archive = meta_train(&scenario_client(), &suite, 0, 5, 3, &MetaOptions::default()).unwrap();
    assert!(archive.history.is_empty());
    assert!(meta_train(&scenario_client(), &[], 1, 5, 3, &MetaOptions::default()).is_err());
    assert!(meta_train(&scenario_client(), &suite, 1, 0, 3, &MetaOptions::default()).is_err());
}

#[test]
fn transport_failure_skips_iteration() {
    let suite = training_suite(1, 2, 5).unwrap();
    let archive = meta_train(&Failing, &suite, 2, 3, 3, &MetaOptions::default()).unwrap();
    assert!(archive.history.is_empty());
    assert_eq!(archive.iterations_done, 2);
    assert_eq!(archive.events.iter().filter(|e| e.kind == "llm-error").count(), 2);
}

#[test]
fn prose_response_records_extraction_failure() {
    let suite = training_suite(1, 1, 5).unwrap();
    let client = ScriptedClient::new(["I suggest DE."]).unwrap();
    let archive = meta_train(&client, &suite, 1, 2, 3, &MetaOptions::default()).unwrap();
    assert!(archive.history.is_empty());
    assert_eq!(client.calls(), 2);
    assert!(archive.events.iter().any(|e| e.kind == "extraction-failure"));
}

#[test]
fn one_response_can_carry_every_rule() {
    let suite = training_suite(1, 1, 5).unwrap();
    let text = format!("{}{}", fenced(builtin_text("de_best_1_bin")), fenced(builtin_text("no_op")));
    let client = ScriptedClient::new([text]).unwrap();
    let archive = meta_train(&client, &suite, 1, 2, 3, &MetaOptions::default()).unwrap();
    assert_eq!(client.calls(), 1);
    assert_eq!(archive.history.len(), 2);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let suite = training_suite(2, 2, 5).unwrap();
    let all = format!("{}{}", fenced(builtin_text("de_best_1_bin")), fenced(TYPE_ERROR_RULE));
    let client = || ScriptedClient::new([all.clone()]).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let options = MetaOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..MetaOptions::default()
    };
    meta_train(&client(), &suite, 1, 2, 9, &options).unwrap();
    let resumed_client = client();
    let resumed = meta_train(&resumed_client, &suite, 3, 2, 9, &options).unwrap();
    assert_eq!(resumed_client.calls(), 2);
    let straight = meta_train(&client(), &suite, 3, 2, 9, &MetaOptions::default()).unwrap();
    assert_eq!(resumed, straight);
    assert_eq!(MetaArchive::load(&dir.path().join("archive.json")).unwrap(), straight);
    for it in 0..3 {
        let t = std::fs::read_to_string(dir.path().join(format!("transcripts/{it}.txt"))).unwrap();
        assert!(t.contains("=== SYSTEM ===") && t.contains("=== RESPONSE 1 ==="));
    }
}

#[test]
fn de_outscores_no_op_on_sphere_ring() {
    let suite: Vec<SharedProblem> = vec![Arc::new(SphereRing::new(10))];
    let settings = ScoreSettings {
        runs_per_problem: 3,
        inner_budget: 5000,
        population: 50,
    };
    let mut archive = MetaArchive::new(3);
    for name in ["no_op", "de_rand_1_bin"] {
        let src = RuleSource::new(builtin_text(name), RuleOrigin::Builtin);
        archive.push(score_rule(&src, &suite, &settings, 4, 0).unwrap());
    }
    assert!(archive.history[1].aggregate > archive.history[0].aggregate);
    assert_eq!(archive.history[1].aggregate, Some(1.0));

    let bad = score_rule(&RuleSource::new("offspring = ;", RuleOrigin::Llm), &suite, &settings, 4, 0).unwrap();
    assert!(bad.parse_failure.is_some() && bad.per_problem.is_empty() && bad.aggregate.is_none());

    let alone = score_rule(&RuleSource::new("offspring = best;", RuleOrigin::Llm), &suite, &settings, 4, 0).unwrap();
    assert_eq!(alone.aggregate, Some(1.0));
    assert_eq!(parse(&alone.text).unwrap(), parse("offspring = best;").unwrap());
}
