//! Runs an existing console program as a query handler.
//!
//! Output lines become results: `"608660 Seattle, ..."` is weight 608660 with
//! label `"Seattle, ..."`; a line without a leading integer is weight 0.
//!
//! In oneshot mode the program is started once per query with the query
//! substituted into its arguments. In session mode one long-lived child reads
//! one query per stdin line and answers with zero or more lines followed by a
//! blank line.

use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::result::QueryResult;

pub const QUERY_PLACEHOLDER: &str = "{query}";
pub const QUERY_ENV: &str = "NIFTY_QUERY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Oneshot,
    Session,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oneshot" => Ok(Mode::Oneshot),
            "session" => Ok(Mode::Session),
            other => Err(format!("unknown mode {other:?} (expected oneshot or session)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramSpec {
    pub argv: Vec<String>,
    pub mode: Mode,
    pub timeout: Duration,
    pub workdir: Option<PathBuf>,
}

impl ProgramSpec {
    pub fn new(argv: Vec<String>, mode: Mode, timeout: Duration) -> Result<Self, String> {
        if argv.first().map_or(true, |a| a.is_empty()) {
            return Err("program command must be nonempty".into());
        }
        if timeout.is_zero() {
            return Err("program timeout must be at least 1 ms".into());
        }
        Ok(Self {
            argv,
            mode,
            timeout,
            workdir: None,
        })
    }

    /// Arguments with `{query}` substituted; the query is appended when no
    /// argument mentions the placeholder.
    pub fn argv_for(&self, query: &str) -> Vec<String> {
        let mut argv: Vec<String> = self
            .argv
            .iter()
            .map(|a| a.replace(QUERY_PLACEHOLDER, query))
            .collect();
        if !self.argv.iter().any(|a| a.contains(QUERY_PLACEHOLDER)) {
            argv.push(query.to_string());
        }
        argv
    }

    fn command(&self, argv: &[String]) -> Command {
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..]);
        if let Some(dir) = &self.workdir {
            cmd.current_dir(dir);
        }
        cmd
    }
}

#[derive(Debug)]
pub enum SubprocessError {
    Spawn { program: String, source: io::Error },
    Timeout,
    Failed { status: String, stderr: String },
    Io(io::Error),
}

impl fmt::Display for SubprocessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubprocessError::Spawn { program, source } => {
                write!(f, "cannot start {program:?}: {source}")
            }
            SubprocessError::Timeout => f.write_str("program timed out"),
            SubprocessError::Failed { status, stderr } => {
                write!(f, "program failed ({status})")?;
                let stderr = stderr.trim();
                if !stderr.is_empty() {
                    write!(f, ": {stderr}")?;
                }
                Ok(())
            }
            SubprocessError::Io(e) => write!(f, "program I/O error: {e}"),
        }
    }
}

impl std::error::Error for SubprocessError {}

/// One output line as a result; `None` for blank lines.
pub fn parse_line(line: &str) -> Option<QueryResult> {
    let line = line.trim();
    if line.is_empty() {
        return None;
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if rest.starts_with(char::is_whitespace) {
            if let Ok(weight) = line[..digits].parse::<u64>() {
                return Some(QueryResult::new(weight, rest.trim_start()));
            }
        }
    }
    Some(QueryResult::new(0, line))
}

pub fn parse_output(stdout: &str) -> Vec<QueryResult> {
    stdout.lines().filter_map(parse_line).collect()
}

fn read_all_in_background(mut r: impl Read + Send + 'static) -> Receiver<Vec<u8>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        let _ = tx.send(buf);
    });
    rx
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

/// Spawns the program once for `query` and parses its standard output.
pub fn run_oneshot(spec: &ProgramSpec, query: &str) -> Result<Vec<QueryResult>, SubprocessError> {
    let deadline = Instant::now() + spec.timeout;
    let argv = spec.argv_for(query);
    let mut child = spec
        .command(&argv)
        .env(QUERY_ENV, query)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SubprocessError::Spawn {
            program: argv[0].clone(),
            source,
        })?;
    let stdout = read_all_in_background(child.stdout.take().expect("piped"));
    let stderr = read_all_in_background(child.stderr.take().expect("piped"));

    let status = loop {
        match child.try_wait().map_err(SubprocessError::Io)? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                kill(&mut child);
                return Err(SubprocessError::Timeout);
            }
            None => thread::sleep(Duration::from_millis(2)),
        }
    };
    // A grandchild may still hold the pipes open; don't wait past the deadline.
    let remaining = deadline.saturating_duration_since(Instant::now());
    let out = stdout
        .recv_timeout(remaining)
        .map_err(|_| SubprocessError::Timeout)?;
    if !status.success() {
        let err = stderr
            .recv_timeout(Duration::from_millis(50))
            .unwrap_or_default();
        return Err(SubprocessError::Failed {
            status: status.to_string(),
            stderr: String::from_utf8_lossy(&err).into_owned(),
        });
    }
    Ok(parse_output(&String::from_utf8_lossy(&out)))
}

struct Live {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<io::Result<String>>,
}

impl Live {
    fn start(spec: &ProgramSpec) -> Result<Self, SubprocessError> {
        let mut child = spec
            .command(&spec.argv)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| SubprocessError::Spawn {
                program: spec.argv[0].clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let stderr = child.stderr.take().expect("piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let program = spec.argv[0].clone();
        thread::spawn(move || {
            for line in BufReader::new(stderr).lines().map_while(Result::ok) {
                eprintln!("[{program}] {line}");
            }
        });
        Ok(Self { child, stdin, lines })
    }
}

/// A long-lived child answering one query at a time.
pub struct Session {
    spec: ProgramSpec,
    live: Mutex<Option<Live>>,
}

impl Session {
    pub fn new(spec: ProgramSpec) -> Self {
        Self {
            spec,
            live: Mutex::new(None),
        }
    }

    /// PID of the current child, if one is running.
    pub fn pid(&self) -> Option<u32> {
        self.live
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .as_ref()
            .map(|l| l.child.id())
    }

    /// Sends `query` and collects the answer block. On timeout or a broken
    /// child the process is killed and a fresh one starts on the next query.
    pub fn query(&self, query: &str) -> Result<Vec<QueryResult>, SubprocessError> {
        let mut guard = self.live.lock().unwrap_or_else(|e| e.into_inner());
        let deadline = Instant::now() + self.spec.timeout;
        if guard.is_none() {
            *guard = Some(Live::start(&self.spec)?);
        }
        let live = guard.as_mut().expect("started above");
        let result = Self::exchange(live, query, deadline);
        if result.is_err() {
            if let Some(mut dead) = guard.take() {
                kill(&mut dead.child);
            }
        }
        result
    }

    fn exchange(
        live: &mut Live,
        query: &str,
        deadline: Instant,
    ) -> Result<Vec<QueryResult>, SubprocessError> {
        let line: String = query.replace(['\r', '\n'], " ");
        writeln!(live.stdin, "{line}")
            .and_then(|_| live.stdin.flush())
            .map_err(|e| broken(live, e.to_string()))?;
        let mut results = Vec::new();
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            match live.lines.recv_timeout(remaining) {
                Ok(Ok(line)) if line.trim().is_empty() => return Ok(results),
                Ok(Ok(line)) => results.extend(parse_line(&line)),
                Ok(Err(e)) => return Err(broken(live, e.to_string())),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(broken(live, "child closed its output mid-answer".into()))
                }
                Err(RecvTimeoutError::Timeout) => return Err(SubprocessError::Timeout),
            }
        }
    }
}

fn broken(live: &mut Live, detail: String) -> SubprocessError {
    let status = match live.child.try_wait() {
        Ok(Some(status)) => status.to_string(),
        _ => "running".to_string(),
    };
    SubprocessError::Failed {
        status,
        stderr: detail,
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Some(mut live) = self.live.get_mut().unwrap_or_else(|e| e.into_inner()).take() {
            kill(&mut live.child);
        }
    }
}
