//! Bridge to a classifier running in a child process.
//!
//! Line-oriented UTF-8 protocol over the child's stdin/stdout:
//!
//! ```text
//! child  -> VOCAB <label> <label> ...
//! child  -> READY
//! parent -> CLASSIFY <absolute path to 16-bit mono WAV>
//! child  -> LABEL <label>          (or ERROR <reason>)
//! parent -> QUIT
//! ```
//!
//! One request is in flight per process; calls through a shared handle are
//! serialized.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::audio::{save_wav, AudioSignal};

use super::{Classifier, ClassifierError, ClassifierHandle, Label};

pub const DEFAULT_RESPONSE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ExternalOptions {
    /// Limit for the `VOCAB`/`READY` handshake.
    pub handshake_timeout: Duration,
    /// Limit for each `LABEL` response.
    pub response_timeout: Duration,
}

impl Default for ExternalOptions {
    fn default() -> Self {
        Self { handshake_timeout: DEFAULT_RESPONSE_TIMEOUT, response_timeout: DEFAULT_RESPONSE_TIMEOUT }
    }
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    broken: Option<String>,
    requests: u64,
}

impl Session {
    fn fail(&mut self, reason: String) -> ClassifierError {
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.stdin = None;
        self.broken = Some(reason.clone());
        ClassifierError::AdapterFailure(reason)
    }
}

pub struct ExternalClassifier {
    command: String,
    vocabulary: Vec<Label>,
    session: Mutex<Session>,
    workdir: tempfile::TempDir,
    response_timeout: Duration,
}

/// Spawns `command[0]` with the remaining elements as arguments.
pub fn spawn_external(command: &[String]) -> Result<ClassifierHandle, ClassifierError> {
    Ok(ClassifierHandle::new(ExternalClassifier::spawn(command, ExternalOptions::default())?))
}

impl ExternalClassifier {
    pub fn spawn(command: &[String], options: ExternalOptions) -> Result<Self, ClassifierError> {
        let display = command.join(" ");
        let (program, args) = command
            .split_first()
            .ok_or_else(|| ClassifierError::InvalidConfig("empty classifier command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ClassifierError::Spawn { command: display.clone(), source })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout was piped");

        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("classifier-stdout".into())
            .spawn(move || {
                let mut reader = BufReader::new(stdout);
                let mut line = String::new();
                loop {
                    line.clear();
                    match reader.read_line(&mut line) {
                        Ok(0) | Err(_) => break,
                        Ok(_) => {
                            if tx.send(line.trim_end_matches(['\r', '\n']).to_owned()).is_err() {
                                break;
                            }
                        }
                    }
                }
            })
            .map_err(|source| ClassifierError::Spawn { command: display.clone(), source })?;

        let mut session = Session { child, stdin, lines: rx, broken: None, requests: 0 };
        let vocabulary = match handshake(&mut session, options.handshake_timeout) {
            Ok(v) => v,
            Err(e) => {
                let _ = session.child.kill();
                let _ = session.child.wait();
                return Err(e);
            }
        };
        let workdir = tempfile::Builder::new().prefix("noiseflood-req").tempdir().map_err(|e| {
            ClassifierError::AdapterFailure(format!("cannot create request directory: {e}"))
        })?;
        Ok(Self {
            command: display,
            vocabulary,
            session: Mutex::new(session),
            workdir,
            response_timeout: options.response_timeout,
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn request_path(&self, n: u64) -> PathBuf {
        self.workdir.path().join(format!("request-{n}.wav"))
    }
}

fn handshake(session: &mut Session, timeout: Duration) -> Result<Vec<Label>, ClassifierError> {
    let deadline = Instant::now() + timeout;
    let mut vocabulary: Option<Vec<Label>> = None;
    loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        let line = match session.lines.recv_timeout(remaining) {
            Ok(line) => line,
            Err(RecvTimeoutError::Timeout) => return Err(ClassifierError::HandshakeTimeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(ClassifierError::AdapterFailure("process exited during handshake".into()))
            }
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        match (words.next(), vocabulary.is_some()) {
            (Some("VOCAB"), false) => {
                let labels: Vec<Label> = words.map(Label::from).collect();
                if labels.is_empty() {
                    return Err(ClassifierError::ProtocolViolation("empty VOCAB line".into()));
                }
                vocabulary = Some(labels);
            }
            (Some("READY"), true) => return Ok(vocabulary.unwrap()),
            _ => {
                return Err(ClassifierError::ProtocolViolation(format!(
                    "unexpected handshake line `{line}`"
                )))
            }
        }
    }
}

impl Classifier for ExternalClassifier {
    fn vocabulary(&self) -> &[Label] {
        &self.vocabulary
    }

    fn classify(&self, x: &AudioSignal) -> Result<Label, ClassifierError> {
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(reason) = &session.broken {
            return Err(ClassifierError::AdapterFailure(format!("session unusable: {reason}")));
        }
        session.requests += 1;
        let path = self.request_path(session.requests);
        save_wav(x, &path)?;
        let result = exchange(&mut session, &path, self.response_timeout, &self.vocabulary);
        let _ = std::fs::remove_file(&path);
        result
    }
}

fn exchange(
    session: &mut Session,
    path: &std::path::Path,
    timeout: Duration,
    vocabulary: &[Label],
) -> Result<Label, ClassifierError> {
    let written = match session.stdin.as_mut() {
        Some(stdin) => writeln!(stdin, "CLASSIFY {}", path.display()).and_then(|_| stdin.flush()),
        None => Err(std::io::Error::other("stdin closed")),
    };
    if let Err(e) = written {
        return Err(session.fail(format!("cannot write request: {e}")));
    }
    let line = match session.lines.recv_timeout(timeout) {
        Ok(line) => line,
        Err(RecvTimeoutError::Timeout) => {
            session.fail(format!("no response within {timeout:?}"));
            return Err(ClassifierError::ResponseTimeout(timeout));
        }
        Err(RecvTimeoutError::Disconnected) => return Err(session.fail("process exited".into())),
    };
    let line = line.trim();
    if let Some(label) = line.strip_prefix("LABEL ") {
        let label = Label::from(label.trim());
        if vocabulary.contains(&label) {
            Ok(label)
        } else {
            Err(ClassifierError::ProtocolViolation(format!("label `{label}` is not in the declared vocabulary")))
        }
    } else if let Some(reason) = line.strip_prefix("ERROR") {
        Err(ClassifierError::Remote(reason.trim().to_owned()))
    } else {
        let err = ClassifierError::ProtocolViolation(format!("unexpected response `{line}`"));
        session.fail(format!("protocol desynchronized after `{line}`"));
        Err(err)
    }
}

impl Drop for ExternalClassifier {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        if let Some(mut stdin) = session.stdin.take() {
            let _ = writeln!(stdin, "QUIT");
            let _ = stdin.flush();
        }
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            match session.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) => thread::sleep(Duration::from_millis(10)),
                Err(_) => break,
            }
        }
        let _ = session.child.kill();
        let _ = session.child.wait();
    }
}
