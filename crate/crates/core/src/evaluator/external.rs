//! Subprocess objective protocol.
//!
//! The command runs under `sh -c`. It receives one JSON object mapping factor
//! names to raw values on stdin and must exit 0 with the objective value on
//! the last non-empty line of stdout.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::space::Config;

const POLL_INTERVAL: Duration = Duration::from_millis(2);

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ExternalOutcome {
    Value(f64),
    Failed(String),
    TimedOut,
}

/// Last non-empty line of `stdout`, parsed as a finite real.
pub(crate) fn parse_last_line(stdout: &str) -> Result<f64, String> {
    let line = stdout
        .lines()
        .map(str::trim)
        .rfind(|l| !l.is_empty())
        .ok_or_else(|| "command produced no output".to_string())?;
    match line.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(format!("non-finite objective value {v}")),
        Err(_) => Err(format!("cannot parse `{line}` as a real number")),
    }
}

pub(crate) fn run_external(command: &str, params: &Config, timeout: Duration) -> ExternalOutcome {
    let payload = match serde_json::to_string(params) {
        Ok(p) => p,
        Err(e) => return ExternalOutcome::Failed(format!("cannot encode parameters: {e}")),
    };
    let mut child = match Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return ExternalOutcome::Failed(format!("spawn failed: {e}")),
    };

    let mut stdin = child.stdin.take().expect("stdin is piped");
    let writer = thread::spawn(move || {
        // The command may exit without reading its input.
        let _ = stdin.write_all(payload.as_bytes());
        let _ = stdin.write_all(b"\n");
    });
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });

    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                // The reader finishes once the pipe closes; grandchildren that
                // inherited stdout could keep it open, so it is not joined.
                let _ = writer.join();
                return ExternalOutcome::TimedOut;
            }
            Ok(None) => thread::sleep(POLL_INTERVAL),
            Err(e) => return ExternalOutcome::Failed(format!("wait failed: {e}")),
        }
    };
    let _ = writer.join();
    let output = match reader.join() {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => return ExternalOutcome::Failed(format!("reading stdout failed: {e}")),
        Err(_) => return ExternalOutcome::Failed("stdout reader panicked".into()),
    };
    if !status.success() {
        return ExternalOutcome::Failed(format!("command exited with {status}"));
    }
    match parse_last_line(&output) {
        Ok(v) => ExternalOutcome::Value(v),
        Err(e) => ExternalOutcome::Failed(e),
    }
}
