//! The JSON line protocol of `lflogic serve`: request handling, goal
//! renderings, undo, and agreement with the REPL display.

use std::io::{Cursor, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use lflogic::protocol::{serve, Response};
use lflogic::repl;
use lflogic::session::Session;
use serde_json::json;

fn theory(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("theories").join(name).display().to_string()
}

/// Runs `requests` through an in-process server.
fn exchange(requests: &[serde_json::Value]) -> Vec<Response> {
    let input: String = requests.iter().map(|r| format!("{}\n", r)).collect();
    let mut out = Vec::new();
    serve(&mut Session::new(), Cursor::new(input), &mut out, std::io::sink()).expect("serving succeeds");
    String::from_utf8(out).expect("utf-8").lines().map(|l| serde_json::from_str(l).expect("responses are JSON")).collect()
}

/// The opening of the uniqueness proof, one tactic per request.
fn uniqueness_steps() -> Vec<&'static str> {
    vec![
        "Schema c := {T:o}(x:tm, y: of x T).",
        "Theorem type_uniq : ctx G:c. forall E T1 T2 D1 D2 : o. {G |- E : tm} => {G |- T1 : tp} => {G |- T2 : tp} => {G |- D1 : of E T1} => {G |- D2 : of E T2} => exists D : o. {G |- D : eq T1 T2}.",
        "induction on 4.",
        "intros.",
        "case H4.",
    ]
}

#[test]
fn responses_follow_the_wire_format() {
    let resps = exchange(&[json!({"id": 1, "op": "load", "arg": theory("stlc.lfs")}), json!({"id": 2, "op": "tactic", "arg": uniqueness_steps()[..2].join(" ")}), json!({"id": 3, "op": "quit"})]);
    assert_eq!(resps.len(), 3);
    assert_eq!(resps[0].id, json!(1));
    assert!(resps[0].ok && resps[0].goals.is_empty() && resps[0].error.is_none());
    assert_eq!(resps[1].goals.len(), 1);
    let raw = serde_json::to_value(&resps[1]).expect("serializes");
    let goal = &raw["goals"][0];
    assert!(goal["gid"].is_u64() && goal["rendering"].is_string() && goal["hyps"].is_array());
    assert!(raw.get("error").is_none());
}

#[test]
fn case_on_the_first_derivation_yields_four_goals() {
    let mut reqs = vec![json!({"id": 0, "op": "load", "arg": [theory("stlc.lfs")]})];
    for (k, step) in uniqueness_steps().iter().enumerate() {
        reqs.push(json!({"id": k + 1, "op": "tactic", "arg": step}));
    }
    let resps = exchange(&reqs);
    assert!(resps.iter().all(|r| r.ok), "{:?}", resps);
    let last = resps.last().expect("responses");
    assert_eq!(last.goals.len(), 4);
    let hyps: Vec<&str> = last.goals[0].hyps.iter().map(|h| h.name.as_str()).collect();
    assert!(hyps.contains(&"IH") && hyps.contains(&"H5"), "{:?}", hyps);
}

#[test]
fn errors_leave_the_state_unchanged() {
    let resps = exchange(&[
        json!({"id": 1, "op": "load", "arg": theory("stlc.lfs")}),
        json!({"id": 2, "op": "tactic", "arg": uniqueness_steps()[..3].join(" ")}),
        json!({"id": 3, "op": "tactic", "arg": "case H99."}),
        json!({"id": 4, "op": "frobnicate"}),
        json!({"id": 5, "op": "tactic", "arg": 17}),
    ]);
    for r in &resps[2..] {
        assert!(!r.ok && r.error.is_some());
        assert_eq!(r.goals, resps[1].goals);
    }
    let bad = exchange(&[json!("not a request")]);
    assert!(!bad[0].ok && bad[0].error.as_deref().unwrap_or("").starts_with("bad request"));
}

#[test]
fn undo_restores_byte_identical_renderings() {
    let mut reqs = vec![json!({"id": 0, "op": "load", "arg": theory("stlc.lfs")})];
    for step in uniqueness_steps() {
        reqs.push(json!({"id": 1, "op": "tactic", "arg": step}));
        reqs.push(json!({"id": 2, "op": "state"}));
    }
    let forward = exchange(&reqs);
    for _ in 0..3 {
        reqs.push(json!({"id": 3, "op": "undo"}));
        reqs.push(json!({"id": 4, "op": "state"}));
    }
    let all = exchange(&reqs);
    let states: Vec<&Response> = all.iter().filter(|r| r.display.is_some()).collect();
    let n = uniqueness_steps().len();
    // After k undos the state is the one before the last k tactics.
    for k in 1..=3 {
        let back = states[n - 1 + k];
        let before = states[n - 1 - k];
        assert_eq!(serde_json::to_string(back).unwrap().replace("\"id\":4", ""), serde_json::to_string(before).unwrap().replace("\"id\":2", ""));
    }
    assert_eq!(forward.len() + 6, all.len());
}

#[test]
fn state_agrees_with_the_repl_display() {
    let steps = uniqueness_steps();
    for prefix in 1..=steps.len() {
        let mut session = Session::new();
        session.load_path(std::path::Path::new(&theory("stlc.lfs"))).expect("signature loads");
        let mut input = String::new();
        for s in &steps[..prefix] {
            input.push_str(s);
            input.push('\n');
        }
        input.push_str("state.\n");
        let mut out = Vec::new();
        repl::run(&mut session, Cursor::new(input), &mut out, false).expect("repl runs");
        let repl_text = String::from_utf8(out).expect("utf-8");
        let mut reqs = vec![json!({"id": 0, "op": "load", "arg": theory("stlc.lfs")})];
        for s in &steps[..prefix] {
            reqs.push(json!({"id": 1, "op": "tactic", "arg": s}));
        }
        reqs.push(json!({"id": 2, "op": "state"}));
        let resps = exchange(&reqs);
        let display = resps.last().and_then(|r| r.display.clone()).expect("state has a display");
        assert!(repl_text.ends_with(&display), "after {} steps:\n{}\nvs\n{}", prefix, repl_text, display);
        // Every goal rendering appears verbatim in the display of its state.
        let Some(current) = resps.last().unwrap().goals.first() else {
            assert_eq!(display, "No proof in progress.\n");
            continue;
        };
        assert!(display.contains(&current.rendering));
        for h in &current.hyps {
            assert!(display.contains(&format!("{} : {}", h.name, h.rendering)), "{} missing from\n{}", h.name, display);
        }
    }
}

#[test]
fn the_binary_serves_until_quit() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lflogic"))
        .args(["serve", &theory("stlc.lfs")])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("binary starts");
    let mut stdin = child.stdin.take().expect("stdin");
    writeln!(stdin, "{}", json!({"id": "a", "op": "tactic", "arg": "Theorem t : {|- unit : tp}."})).unwrap();
    writeln!(stdin, "{}", json!({"id": "b", "op": "tactic", "arg": "search."})).unwrap();
    writeln!(stdin, "{}", json!({"id": "c", "op": "quit"})).unwrap();
    writeln!(stdin, "{}", json!({"id": "d", "op": "state"})).unwrap();
    drop(stdin);
    let out = child.wait_with_output().expect("binary finishes");
    assert!(out.status.success());
    let resps: Vec<Response> = String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("JSON")).collect();
    assert_eq!(resps.len(), 3, "requests after quit are not answered");
    assert_eq!(resps[0].goals.len(), 1);
    assert!(resps[1].ok && resps[1].goals.is_empty());
}
