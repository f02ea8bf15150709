use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::Value as Json;

const SCRIPT: &str = include_str!("worker.py");
const STARTUP_LIMIT: Duration = Duration::from_secs(120);

/// Interpreter used for sessions: `$DSEVAL_PYTHON` or `python3`.
pub fn python_command() -> String {
    std::env::var("DSEVAL_PYTHON").unwrap_or_else(|_| "python3".to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum WorkerFailure {
    #[error("worker exceeded its deadline")]
    Deadline,
    #[error("worker exited: {0}")]
    Died(String),
    #[error("worker protocol error: {0}")]
    Protocol(String),
}

pub(crate) struct Worker {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<String>,
    stderr_tail: Arc<Mutex<VecDeque<String>>>,
}

impl Worker {
    pub(crate) fn spawn(python: &str, workdir: &Path) -> Result<Worker, WorkerFailure> {
        let mut child = Command::new(python)
            .arg("-u")
            .arg("-c")
            .arg(SCRIPT)
            .current_dir(workdir)
            .env("PYTHONHASHSEED", "0")
            .env("PYTHONDONTWRITEBYTECODE", "1")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| WorkerFailure::Died(format!("cannot start `{python}`: {e}")))?;

        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let stderr = child.stderr.take().expect("stderr piped");

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let tail = Arc::new(Mutex::new(VecDeque::new()));
        let tail_writer = Arc::clone(&tail);
        thread::spawn(move || {
            for line in BufReader::new(stderr).lines() {
                let Ok(line) = line else { break };
                log::trace!("worker stderr: {line}");
                let mut t = tail_writer.lock().unwrap();
                if t.len() >= 40 {
                    t.pop_front();
                }
                t.push_back(line);
            }
        });

        let mut worker = Worker {
            child,
            stdin,
            replies: rx,
            stderr_tail: tail,
        };
        worker.request(&serde_json::json!({"op": "ping"}), Some(STARTUP_LIMIT))?;
        Ok(worker)
    }

    fn stderr_summary(&self) -> String {
        let tail = self.stderr_tail.lock().unwrap();
        tail.iter().cloned().collect::<Vec<_>>().join("\n")
    }

    /// Sends one request and waits for its reply. On deadline expiry the
    /// process is killed and must not be reused.
    pub(crate) fn request(&mut self, req: &Json, deadline: Option<Duration>) -> Result<Json, WorkerFailure> {
        let mut line = serde_json::to_string(req).map_err(|e| WorkerFailure::Protocol(e.to_string()))?;
        line.push('\n');
        if let Err(e) = self.stdin.write_all(line.as_bytes()).and_then(|_| self.stdin.flush()) {
            return Err(WorkerFailure::Died(format!("{e}; stderr: {}", self.stderr_summary())));
        }
        let reply = match deadline {
            Some(d) => match self.replies.recv_timeout(d) {
                Ok(r) => r,
                Err(RecvTimeoutError::Timeout) => {
                    self.kill();
                    return Err(WorkerFailure::Deadline);
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(WorkerFailure::Died(self.stderr_summary()));
                }
            },
            None => self
                .replies
                .recv()
                .map_err(|_| WorkerFailure::Died(self.stderr_summary()))?,
        };
        let value: Json = serde_json::from_str(&reply).map_err(|e| WorkerFailure::Protocol(format!("{e}: {reply}")))?;
        if value.get("ok").and_then(Json::as_bool) != Some(true) {
            let msg = value.get("error").and_then(Json::as_str).unwrap_or("unknown failure");
            return Err(WorkerFailure::Protocol(msg.to_string()));
        }
        Ok(value)
    }

    pub(crate) fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.kill();
    }
}
