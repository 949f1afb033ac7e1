//! The `lflogic` binary: batch checking, exit codes, flags and the REPL.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

fn theory(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("theories").join(name)
}

fn lflogic(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lflogic"));
    c.args(args);
    c
}

fn run_with_input(args: &[&str], input: &str) -> Output {
    let mut child = lflogic(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().expect("binary starts");
    child.stdin.take().expect("stdin").write_all(input.as_bytes()).expect("input written");
    child.wait_with_output().expect("binary finishes")
}

fn script(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lflogic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let p = dir.join(name);
    std::fs::write(&p, text).expect("script written");
    p
}

#[test]
fn uniqueness_development_checks() {
    let (sig, uniq) = (theory("stlc.lfs"), theory("uniqueness.ath"));
    let start = Instant::now();
    let out = lflogic(&["check", sig.to_str().unwrap(), uniq.to_str().unwrap()]).output().expect("binary runs");
    assert!(start.elapsed() < Duration::from_secs(5));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{}", stdout);
    assert!(stdout.contains("type_uniq proved"));
}

#[test]
fn failing_search_exits_with_one_and_names_the_goal() {
    let bogus = script("bogus.ath", "% T is arbitrary, so it need not be a type.\nTheorem bogus : forall T : o. {|- T : tp}.\nintros.\nsearch.\n");
    let out = lflogic(&["check", theory("stlc.lfs").to_str().unwrap(), bogus.to_str().unwrap()]).output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout.contains("bogus FAILED"), "{}", stdout);
    assert!(stdout.contains("search failed on goal") && stdout.contains("{· ⊢ T : tp}"), "{}", stdout);
}

#[test]
fn a_failing_theorem_does_not_stop_later_ones() {
    let text = "Theorem broken : forall T : o. {|- T : tp}.\nintros.\nsearch.\nTheorem fine : {|- unit : tp}.\nsearch.\n";
    let out = lflogic(&["check", theory("stlc.lfs").to_str().unwrap(), script("two.ath", text).to_str().unwrap()]).output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout.contains("broken FAILED"));
    assert!(stdout.contains("fine proved"));
}

#[test]
fn search_depth_bounds_search() {
    let args = |d: &'static str| ["--search-depth", d, "check"];
    let (sig, uniq) = (theory("stlc.lfs"), theory("uniqueness.ath"));
    let code = |d| {
        let mut a: Vec<&str> = args(d).to_vec();
        a.extend([sig.to_str().unwrap(), uniq.to_str().unwrap()]);
        lflogic(&a).output().expect("binary runs").status.code()
    };
    assert_eq!(code("1"), Some(1));
    assert_eq!(code("2"), Some(0));
}

#[test]
fn trace_reports_rule_applications() {
    let out = lflogic(&["--trace", "check", theory("stlc.lfs").to_str().unwrap(), theory("uniqueness.ath").to_str().unwrap()]).output().expect("binary runs");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr.lines().any(|l| l.starts_with("trace: goal 0: ind")), "{}", stderr);
    assert!(stderr.contains("ctx-R"));
}

#[test]
fn unreadable_file_is_reported() {
    let out = lflogic(&["check", "/nonexistent/file.ath"]).output().expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repl_shows_states_and_undo_restores_them() {
    let input = "Schema c := {T:o}(x:tm, y: of x T).\nTheorem t : forall T : o. {|- T : tp} => {|- T : tp}.\nintros.\nundo.\nintros.\nsearch.\n";
    let out = run_with_input(&["repl", theory("stlc.lfs").to_str().unwrap()], input);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout.contains("Schema c declared."));
    let states: Vec<&str> = stdout.split("t: 1 subgoal remaining.").collect();
    // Theorem, intros, undo, intros: the undo state equals the opening one
    // and the second intros equals the first.
    assert_eq!(states.len(), 5, "{}", stdout);
    assert_eq!(states[1], states[3]);
    assert_eq!(states[2], states[4].split("Theorem t proved.").next().unwrap());
    assert!(stdout.contains("Proof of t completed."));
}
