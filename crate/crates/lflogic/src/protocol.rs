//! The JSON line protocol used by `lflogic serve`.
//!
//! Each request is one JSON object per line:
//! `{"id": 1, "op": "load" | "tactic" | "undo" | "state" | "quit", "arg": ...}`.
//! Each response is one line:
//! `{"id": 1, "ok": true, "goals": [{"gid", "rendering", "hyps": [...]}], "error"?: "..."}`.
//! `load` takes a path or a list of paths; `tactic` takes the text of one
//! or more commands. `state` responses also carry `display`, the text the
//! REPL shows for the same state.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::session::{GoalView, Session};

/// A protocol request.
#[derive(Clone, Debug, Deserialize)]
pub struct Request {
    #[serde(default)]
    pub id: Value,
    pub op: String,
    #[serde(default)]
    pub arg: Value,
}

/// A protocol response.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Response {
    pub id: Value,
    pub ok: bool,
    pub goals: Vec<GoalJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub display: Option<String>,
}

/// Goal as transmitted; mirrors `GoalView`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GoalJson {
    pub gid: usize,
    pub rendering: String,
    pub hyps: Vec<HypJson>,
    pub nominals: String,
    pub vars: String,
    pub ctxvars: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct HypJson {
    pub name: String,
    pub rendering: String,
}

impl From<GoalView> for GoalJson {
    fn from(g: GoalView) -> GoalJson {
        GoalJson {
            gid: g.gid,
            rendering: g.rendering,
            hyps: g.hyps.into_iter().map(|h| HypJson { name: h.name, rendering: h.rendering }).collect(),
            nominals: g.nominals,
            vars: g.vars,
            ctxvars: g.ctxvars,
        }
    }
}

fn paths(arg: &Value) -> Result<Vec<String>, String> {
    match arg {
        Value::String(s) => Ok(vec![s.clone()]),
        Value::Array(xs) => xs.iter().map(|x| x.as_str().map(str::to_string).ok_or_else(|| "load expects paths".to_string())).collect(),
        _ => Err("load expects a path or a list of paths".into()),
    }
}

/// Handles one request. The boolean is true when the session should end.
pub fn handle(session: &mut Session, req: &Request) -> (Response, bool) {
    let mut quit = false;
    let mut display = None;
    let result: Result<(), String> = match req.op.as_str() {
        "load" => paths(&req.arg).and_then(|ps| {
            for p in ps {
                let report = session.load_path(Path::new(&p)).map_err(|e| e.to_string())?;
                if !report.success() {
                    let mut msgs = report.errors.clone();
                    msgs.extend(report.theorems.iter().filter(|t| !t.proved).map(|t| format!("{}: {}", t.name, t.message.clone().unwrap_or_default())));
                    return Err(msgs.join("; "));
                }
            }
            Ok(())
        }),
        "tactic" => match req.arg.as_str() {
            Some(text) => session.exec_text(text).map(|_| ()).map_err(|e| e.to_string()),
            None => Err("tactic expects the command text as a string".into()),
        },
        "undo" => session.exec_text("undo.").map(|_| ()).map_err(|e| e.to_string()),
        "state" => {
            display = Some(session.display());
            Ok(())
        }
        "quit" => {
            quit = true;
            Ok(())
        }
        other => Err(format!("unknown op `{}`", other)),
    };
    let goals = session.goals().into_iter().map(GoalJson::from).collect();
    let resp = match result {
        Ok(()) => Response { id: req.id.clone(), ok: true, goals, error: None, display },
        Err(e) => Response { id: req.id.clone(), ok: false, goals, error: Some(e), display },
    };
    (resp, quit)
}

/// Serves requests line by line until `quit` or end of input. Trace lines
/// go to `trace` when tracing is enabled.
pub fn serve(session: &mut Session, input: impl BufRead, mut output: impl Write, mut trace: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (resp, quit) = match serde_json::from_str::<Request>(&line) {
            Ok(req) => handle(session, &req),
            Err(e) => (
                Response { id: Value::Null, ok: false, goals: session.goals().into_iter().map(GoalJson::from).collect(), error: Some(format!("bad request: {}", e)), display: None },
                false,
            ),
        };
        for t in session.take_trace() {
            writeln!(trace, "{}", t)?;
        }
        writeln!(output, "{}", serde_json::to_string(&resp).expect("responses serialize"))?;
        output.flush()?;
        if quit {
            break;
        }
    }
    Ok(())
}
