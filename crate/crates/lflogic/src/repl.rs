//! The interactive loop. Input is accumulated until it ends with a period,
//! then executed; after every command the current proof state is shown.

use std::io::{BufRead, Write};

use crate::session::{Outcome, Session};

/// Runs the loop until end of input or `quit.`.
pub fn run(session: &mut Session, input: impl BufRead, mut output: impl Write, interactive: bool) -> std::io::Result<()> {
    let mut buf = String::new();
    let prompt = |out: &mut dyn Write, cont: bool| -> std::io::Result<()> {
        if interactive {
            write!(out, "{}", if cont { "   .. " } else { "lflogic> " })?;
            out.flush()?;
        }
        Ok(())
    };
    prompt(&mut output, false)?;
    for line in input.lines() {
        let line = line?;
        buf.push_str(&line);
        buf.push('\n');
        let text = strip_comment_lines(&buf);
        let trimmed = text.trim();
        if trimmed.is_empty() {
            buf.clear();
            prompt(&mut output, false)?;
            continue;
        }
        if !trimmed.ends_with('.') {
            prompt(&mut output, true)?;
            continue;
        }
        if trimmed == "quit." {
            return Ok(());
        }
        if trimmed == "state." {
            write!(output, "{}", session.display())?;
        } else {
            match session.exec_text(&buf) {
                Ok(outcomes) => {
                    for t in session.take_trace() {
                        writeln!(output, "trace: {}", t)?;
                    }
                    for o in &outcomes {
                        match o {
                            Outcome::Declared(n) => writeln!(output, "Schema {} declared.", n)?,
                            Outcome::Proved(n) => writeln!(output, "Theorem {} proved.", n)?,
                            _ => {}
                        }
                    }
                    write!(output, "{}", session.display())?;
                }
                Err(e) => {
                    session.take_trace();
                    writeln!(output, "Error: {}", e)?;
                }
            }
        }
        buf.clear();
        prompt(&mut output, false)?;
    }
    Ok(())
}

fn strip_comment_lines(s: &str) -> String {
    s.lines().map(|l| l.split('%').next().unwrap_or("")).collect::<Vec<_>>().join("\n")
}
