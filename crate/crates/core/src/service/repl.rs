use std::io::{BufRead, Write};

use super::{label_success, DialogService, ServiceError, SessionStatus};

/// Line-based chat on one session: each input line is a user turn. A
/// line `:rate C N` rates an ended session. Returns the session id.
pub fn run_repl(
    service: &DialogService,
    input: &mut dyn BufRead,
    output: &mut dyn Write,
    seed: Option<u64>,
) -> Result<String, ServiceError> {
    let s = service.create_session(None, seed)?;
    writeln!(output, "goal: {}", s.goal.describe())?;
    writeln!(output, "system: {}", s.greeting)?;
    let mut line = String::new();
    loop {
        write!(output, "> ")?;
        output.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix(":rate") {
            let nums: Vec<u8> = rest.split_whitespace().filter_map(|x| x.parse().ok()).collect();
            match nums.as_slice() {
                [c, n] => match service.rate_session(&s.id, *c, *n) {
                    Ok(r) => writeln!(output, "rated {} {}", r.correctness, r.naturalness)?,
                    Err(e) => writeln!(output, "error: {e}")?,
                },
                _ => writeln!(output, "usage: :rate <correctness> <naturalness>")?,
            }
            continue;
        }
        match service.process_turn(&s.id, text, None) {
            Ok(ex) => writeln!(output, "system: {}", ex.reply)?,
            Err(e) => writeln!(output, "error: {e}")?,
        }
        let cur = service.session(&s.id)?;
        if cur.status == SessionStatus::Ended {
            let label = label_success(&cur, service.indexer())?;
            writeln!(output, "session ended ({})", if label.success { "success" } else { "no matching schedule" })?;
        }
    }
    Ok(s.id)
}
