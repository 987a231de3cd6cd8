use std::collections::VecDeque;
use std::io::{Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::SandboxError;

pub(crate) const STDERR_TAIL_BYTES: usize = 2048;
const STDOUT_LIMIT_BYTES: usize = 64 * 1024;
const POLL_INTERVAL: Duration = Duration::from_millis(5);

pub(crate) struct ProcessOutput {
    pub status: Option<ExitStatus>,
    pub timed_out: bool,
    pub stdout: Vec<u8>,
    pub stderr_tail: String,
    pub elapsed: Duration,
}

impl ProcessOutput {
    pub fn signal(&self) -> Option<i32> {
        self.status.and_then(|s| s.signal())
    }
}

/// Reads a pipe to EOF keeping only the last `limit` bytes.
fn drain_tail<R: Read + Send + 'static>(mut pipe: R, limit: usize) -> JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut tail: VecDeque<u8> = VecDeque::with_capacity(limit.min(8192));
        let mut chunk = [0u8; 8192];
        loop {
            match pipe.read(&mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    tail.extend(&chunk[..n]);
                    let excess = tail.len().saturating_sub(limit);
                    tail.drain(..excess);
                }
            }
        }
        tail.into_iter().collect()
    })
}

fn kill_group(child: &Child) {
    let pid = child.id() as libc::pid_t;
    // The child leads its own process group.
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
}

/// True once the child has terminated; leaves it unreaped.
fn exited_without_reaping(child: &Child) -> Result<bool, SandboxError> {
    let mut info: libc::siginfo_t = unsafe { std::mem::zeroed() };
    let rc = unsafe {
        libc::waitid(
            libc::P_PID,
            child.id() as libc::id_t,
            &mut info,
            libc::WEXITED | libc::WNOHANG | libc::WNOWAIT,
        )
    };
    if rc != 0 {
        return Err(SandboxError::Wait(std::io::Error::last_os_error()));
    }
    Ok(unsafe { info.si_pid() } != 0)
}

/// Runs `command` in a new process group, feeding `stdin`, and kills the
/// whole group once `timeout` elapses.
pub(crate) fn run_with_timeout(
    mut command: Command,
    stdin: Option<&[u8]>,
    timeout: Duration,
) -> Result<ProcessOutput, SandboxError> {
    command
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);

    let start = Instant::now();
    let mut child = command.spawn().map_err(SandboxError::Spawn)?;
    let stdout = drain_tail(child.stdout.take().expect("piped stdout"), STDOUT_LIMIT_BYTES);
    let stderr = drain_tail(child.stderr.take().expect("piped stderr"), STDERR_TAIL_BYTES);

    if let (Some(input), Some(mut pipe)) = (stdin, child.stdin.take()) {
        let input = input.to_vec();
        thread::spawn(move || {
            let _ = pipe.write_all(&input);
        });
    }

    let mut timed_out = false;
    loop {
        match exited_without_reaping(&child) {
            Ok(true) => break,
            Ok(false) => {}
            Err(err) => {
                kill_group(&child);
                let _ = child.wait();
                return Err(err);
            }
        }
        if start.elapsed() >= timeout {
            timed_out = true;
            break;
        }
        thread::sleep(POLL_INTERVAL);
    }
    // The child is either still running or a zombie, so its pid (and group
    // id) cannot have been recycled yet. Killing the group also reaps any
    // stragglers still holding the output pipes.
    kill_group(&child);
    let status = child.wait().ok();
    let elapsed = start.elapsed();
    let stdout = stdout.join().unwrap_or_default();
    let stderr = stderr.join().unwrap_or_default();
    Ok(ProcessOutput {
        status,
        timed_out,
        stdout,
        stderr_tail: String::from_utf8_lossy(&stderr).into_owned(),
        elapsed,
    })
}
