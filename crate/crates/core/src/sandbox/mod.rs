//! Isolated execution of generated Python programs.
//!
//! Every program runs in its own interpreter process, in its own process
//! group and a fresh temporary working directory that is removed afterwards.
//! A small driver script executes the program and reports the terminal
//! exception type on a private channel, so classification never depends on
//! parsing tracebacks. The driver also installs an audit hook that refuses
//! file writes outside the working directory, sockets and process spawning.
//! This guards against accidents, not against a determined attacker.

mod batch;
mod process;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{run_batch, BatchOutput, HarnessFailure, Job, ResultKey};

use process::run_with_timeout;

const DRIVER_SOURCE: &str = include_str!("driver.py");
const SENTINEL: &str = "__SOBENCH_RESULT__";

/// Environment variable naming the interpreter binary.
pub const INTERPRETER_ENV: &str = "SOBENCH_PYTHON";

/// Checks that a program compiles, without running any of it.
const SYNTAX_CHECK: &str = r#"import json, sys
src = sys.stdin.buffer.read()
try:
    compile(src, "program.py", "exec", dont_inherit=True)
except (SyntaxError, ValueError) as exc:
    print(json.dumps({"ok": False, "kind": type(exc).__name__, "message": str(getattr(exc, "msg", exc)), "line": getattr(exc, "lineno", None)}))
else:
    print(json.dumps({"ok": True}))
"#;

/// Failures of the harness itself. These are never recorded as program
/// outcomes.
#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("interpreter `{path}` is unusable: {message}")]
    Interpreter { path: PathBuf, message: String },
    #[error("cannot spawn interpreter: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("cannot wait for interpreter: {0}")]
    Wait(#[source] std::io::Error),
    #[error("cannot prepare sandbox directory: {0}")]
    Workspace(#[source] std::io::Error),
    #[error("driver protocol violation: {0}")]
    Protocol(String),
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    SyntaxError,
    RuntimeError,
    TestFailure,
    Timeout,
    Correct,
}

impl Outcome {
    pub const ALL: [Outcome; 5] =
        [Outcome::SyntaxError, Outcome::RuntimeError, Outcome::TestFailure, Outcome::Timeout, Outcome::Correct];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::SyntaxError => "syntax_error",
            Outcome::RuntimeError => "runtime_error",
            Outcome::TestFailure => "test_failure",
            Outcome::Timeout => "timeout",
            Outcome::Correct => "correct",
        }
    }

    /// Timeouts are reported with runtime errors in S/R/T/C tables.
    pub fn folded(self) -> Outcome {
        match self {
            Outcome::Timeout => Outcome::RuntimeError,
            other => other,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Outcome::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLimits {
    pub wall_timeout: Duration,
    /// Address-space cap in bytes; 0 disables it.
    pub memory_cap: u64,
    /// Parent directory for per-run working directories. System temp dir
    /// when unset.
    pub temp_root: Option<PathBuf>,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits { wall_timeout: Duration::from_secs(10), memory_cap: 512 * 1024 * 1024, temp_root: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxFailure {
    /// `SyntaxError`, `IndentationError`, `TabError` or `ValueError`.
    pub kind: String,
    pub message: String,
    pub line: Option<u32>,
}

/// Classification of one run, without its identifying key.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub outcome: Outcome,
    pub exception_name: Option<String>,
    pub duration: Duration,
    pub stderr_tail: String,
}

impl RunOutcome {
    fn syntax(failure: SyntaxFailure) -> Self {
        RunOutcome {
            outcome: Outcome::SyntaxError,
            exception_name: Some(failure.kind),
            duration: Duration::ZERO,
            stderr_tail: failure.message,
        }
    }
}

/// One row of the results JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub task_id: String,
    pub sample_index: u32,
    pub temperature: f64,
    pub outcome: Outcome,
    #[serde(rename = "exception")]
    pub exception_name: Option<String>,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    #[serde(skip)]
    pub stderr_tail: String,
}

/// Something that can compile-check and run a program. [`PythonSandbox`] is
/// the standard implementation; stricter isolation can be swapped in.
pub trait Executor: Sync {
    fn check_syntax(&self, source: &str) -> Result<Result<(), SyntaxFailure>, SandboxError>;

    /// Runs a program that passed [`Executor::check_syntax`].
    fn execute(&self, source: &str, limits: &ExecLimits) -> Result<RunOutcome, SandboxError>;
}

/// Syntax check first; programs that fail it are never executed.
pub fn evaluate(executor: &dyn Executor, source: &str, limits: &ExecLimits) -> Result<RunOutcome, SandboxError> {
    match executor.check_syntax(source)? {
        Err(failure) => Ok(RunOutcome::syntax(failure)),
        Ok(()) => executor.execute(source, limits),
    }
}

#[derive(Debug, Clone)]
pub struct PythonSandbox {
    interpreter: PathBuf,
    version: String,
}

#[derive(Deserialize)]
struct SyntaxReply {
    ok: bool,
    kind: Option<String>,
    message: Option<String>,
    line: Option<u32>,
}

#[derive(Deserialize)]
struct DriverReply {
    status: String,
    exception: Option<String>,
}

impl PythonSandbox {
    /// Probes the interpreter and requires Python 3.8 or newer (audit hooks).
    pub fn new(interpreter: impl Into<PathBuf>) -> Result<Self, SandboxError> {
        let interpreter = interpreter.into();
        let unusable = |message: String| SandboxError::Interpreter { path: interpreter.clone(), message };
        let output = Command::new(&interpreter)
            .arg("-c")
            .arg("import sys; print('%d.%d.%d' % sys.version_info[:3])")
            .output()
            .map_err(|e| unusable(e.to_string()))?;
        if !output.status.success() {
            return Err(unusable(String::from_utf8_lossy(&output.stderr).trim().to_string()));
        }
        let version = String::from_utf8_lossy(&output.stdout).trim().to_string();
        let mut parts = version.split('.').map(|p| p.parse::<u32>().unwrap_or(0));
        let (major, minor) = (parts.next().unwrap_or(0), parts.next().unwrap_or(0));
        if (major, minor) < (3, 8) {
            return Err(unusable(format!("Python {version} is too old; 3.8+ is required")));
        }
        Ok(PythonSandbox { interpreter, version })
    }

    /// Uses `$SOBENCH_PYTHON`, falling back to `python3` on `PATH`.
    pub fn from_env() -> Result<Self, SandboxError> {
        let interpreter = std::env::var_os(INTERPRETER_ENV).unwrap_or_else(|| OsString::from("python3"));
        Self::new(PathBuf::from(interpreter))
    }

    pub fn interpreter(&self) -> &Path {
        &self.interpreter
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    fn base_command(&self, workdir: &Path) -> Command {
        let mut cmd = Command::new(&self.interpreter);
        cmd.arg("-I")
            .arg("-B")
            .current_dir(workdir)
            .env_clear()
            .env("HOME", workdir)
            .env("TMPDIR", workdir)
            .env("LANG", "C.UTF-8")
            .env("PATH", "/usr/bin:/bin");
        cmd
    }
}

impl Executor for PythonSandbox {
    fn check_syntax(&self, source: &str) -> Result<Result<(), SyntaxFailure>, SandboxError> {
        let dir = tempfile::Builder::new()
            .prefix("sobench-syntax-")
            .tempdir()
            .map_err(SandboxError::Workspace)?;
        let mut cmd = self.base_command(dir.path());
        cmd.arg("-c").arg(SYNTAX_CHECK);
        let out = run_with_timeout(cmd, Some(source.as_bytes()), Duration::from_secs(30))?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        let line = stdout.lines().last().unwrap_or("");
        let reply: SyntaxReply = serde_json::from_str(line).map_err(|_| {
            SandboxError::Protocol(format!("syntax check produced no verdict; stderr: {}", out.stderr_tail.trim()))
        })?;
        if reply.ok {
            Ok(Ok(()))
        } else {
            Ok(Err(SyntaxFailure {
                kind: reply.kind.unwrap_or_else(|| "SyntaxError".into()),
                message: reply.message.unwrap_or_default(),
                line: reply.line,
            }))
        }
    }

    fn execute(&self, source: &str, limits: &ExecLimits) -> Result<RunOutcome, SandboxError> {
        let mut builder = tempfile::Builder::new();
        builder.prefix("sobench-run-");
        let root = match &limits.temp_root {
            Some(root) => builder.tempdir_in(root),
            None => builder.tempdir(),
        }
        .map_err(SandboxError::Workspace)?;
        let workdir = root.path().join("work");
        std::fs::create_dir(&workdir).map_err(SandboxError::Workspace)?;
        let driver = root.path().join("driver.py");
        let program = root.path().join("program.py");
        std::fs::write(&driver, DRIVER_SOURCE).map_err(SandboxError::Workspace)?;
        std::fs::write(&program, source).map_err(SandboxError::Workspace)?;

        let mut cmd = self.base_command(&workdir);
        cmd.arg(&driver).arg(&program).arg(limits.memory_cap.to_string());
        let out = run_with_timeout(cmd, None, limits.wall_timeout)?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        let reply = stdout
            .lines()
            .rev()
            .find_map(|l| l.strip_prefix(SENTINEL))
            .and_then(|json| serde_json::from_str::<DriverReply>(json).ok());

        let (outcome, exception_name) = match (&reply, out.timed_out) {
            (_, true) => (Outcome::Timeout, None),
            (Some(r), false) => match r.status.as_str() {
                "ok" => (Outcome::Correct, None),
                "syntax" => (Outcome::SyntaxError, r.exception.clone()),
                "exception" if r.exception.as_deref() == Some("AssertionError") => {
                    (Outcome::TestFailure, r.exception.clone())
                }
                "exception" => (Outcome::RuntimeError, r.exception.clone()),
                other => return Err(SandboxError::Protocol(format!("unknown driver status `{other}`"))),
            },
            (None, false) => {
                // Killed or exited before the driver could report.
                let name = match (out.signal(), out.status.and_then(|s| s.code())) {
                    (Some(libc::SIGKILL), _) => "MemoryError".to_string(),
                    (Some(sig), _) => format!("Signal{sig}"),
                    (None, Some(code)) => format!("ExitCode{code}"),
                    (None, None) => "Unknown".to_string(),
                };
                (Outcome::RuntimeError, Some(name))
            }
        };
        Ok(RunOutcome { outcome, exception_name, duration: out.elapsed, stderr_tail: out.stderr_tail })
    }
}
