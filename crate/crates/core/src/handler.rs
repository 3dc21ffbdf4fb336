//! Query handlers: the built-in kernels and the wrapped-program adapter.

use std::fmt;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::autocomplete::TermIndex;
use crate::grammar::{Grammar, DEFAULT_MAX_DEPTH};
use crate::http::QueryParams;
use crate::letters::LetterInventory;
use crate::result::{LinkTemplate, QueryResult};
use crate::subprocess::{run_oneshot, Mode, ProgramSpec, Session, SubprocessError};

/// Largest `max` a client may ask for.
pub const MAX_RESULTS_LIMIT: usize = 1000;

/// A decoded `/query` request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub text: String,
    pub max: usize,
    pub seed: Option<u64>,
}

impl Query {
    pub fn new(text: impl Into<String>, max: usize) -> Self {
        Self {
            text: text.into(),
            max,
            seed: None,
        }
    }

    /// Reads `q`, `max` and `seed`. A missing `q` is the empty query.
    pub fn from_params(params: &QueryParams, default_max: usize) -> Result<Self, HandlerError> {
        if let Some((pair, e)) = params.rejected().first() {
            return Err(HandlerError::BadQuery(format!("cannot decode {pair:?}: {e}")));
        }
        let max = match params.get("max") {
            None => default_max,
            Some(raw) => match raw.parse::<usize>() {
                Ok(n) if (1..=MAX_RESULTS_LIMIT).contains(&n) => n,
                _ => {
                    return Err(HandlerError::BadQuery(format!(
                        "max must be an integer from 1 to {MAX_RESULTS_LIMIT}, got {raw:?}"
                    )))
                }
            },
        };
        let seed = params
            .get("seed")
            .map(|raw| {
                raw.parse::<u64>().map_err(|_| {
                    HandlerError::BadQuery(format!("seed must be an unsigned 64-bit integer, got {raw:?}"))
                })
            })
            .transpose()?;
        Ok(Self {
            text: params.get("q").unwrap_or_default().to_string(),
            max,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HandlerError {
    BadQuery(String),
    Failure(String),
    Timeout,
}

impl HandlerError {
    pub fn status(&self) -> u16 {
        match self {
            HandlerError::BadQuery(_) => 400,
            HandlerError::Failure(_) => 502,
            HandlerError::Timeout => 504,
        }
    }
}

impl fmt::Display for HandlerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HandlerError::BadQuery(why) => write!(f, "bad query: {why}"),
            HandlerError::Failure(why) => write!(f, "handler failed: {why}"),
            HandlerError::Timeout => f.write_str("handler timed out"),
        }
    }
}

impl std::error::Error for HandlerError {}

impl From<SubprocessError> for HandlerError {
    fn from(e: SubprocessError) -> Self {
        match e {
            SubprocessError::Timeout => HandlerError::Timeout,
            other => HandlerError::Failure(other.to_string()),
        }
    }
}

pub type HandlerOutcome = Result<Vec<QueryResult>, HandlerError>;

/// Maps a query to ranked results. Called concurrently from server workers.
pub trait Handler: Send + Sync {
    fn name(&self) -> &str;

    fn handle(&self, query: &Query) -> HandlerOutcome;

    /// True when `handle` enforces its own deadline, so the server need not
    /// run it on a watchdog thread.
    fn self_timed(&self) -> bool {
        false
    }
}

impl<H: Handler + ?Sized> Handler for Arc<H> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn handle(&self, query: &Query) -> HandlerOutcome {
        (**self).handle(query)
    }

    fn self_timed(&self) -> bool {
        (**self).self_timed()
    }
}

pub struct AutocompleteHandler {
    index: TermIndex,
    links: Option<LinkTemplate>,
}

impl AutocompleteHandler {
    pub fn new(index: TermIndex, links: Option<LinkTemplate>) -> Self {
        Self { index, links }
    }

    pub fn index(&self) -> &TermIndex {
        &self.index
    }
}

impl Handler for AutocompleteHandler {
    fn name(&self) -> &str {
        "autocomplete"
    }

    fn handle(&self, query: &Query) -> HandlerOutcome {
        if query.text.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self
            .index
            .top_matches(&query.text, query.max)
            .into_iter()
            .map(|t| {
                let link = self.links.as_ref().map(|l| l.apply(&t.text));
                let row = QueryResult::new(t.weight, t.text);
                match link {
                    Some(link) => row.with_link(link),
                    None => row,
                }
            })
            .collect())
    }
}

/// Canonical inventory string, then one `letter: count` row per letter.
pub struct LettersHandler;

impl Handler for LettersHandler {
    fn name(&self) -> &str {
        "letters"
    }

    fn handle(&self, query: &Query) -> HandlerOutcome {
        if query.text.is_empty() {
            return Ok(Vec::new());
        }
        let inv = LetterInventory::from_text(&query.text);
        let mut rows = vec![QueryResult::new(0, inv.canonical_string())];
        rows.extend(inv.iter().map(|(c, n)| QueryResult::new(0, format!("{c}: {n}"))));
        Ok(rows)
    }
}

pub const DEFAULT_START: &str = "s";

/// Random sentences; the query names the start symbol.
pub struct SentenceHandler {
    grammar: Grammar,
    allow_seed: bool,
    max_depth: usize,
}

impl SentenceHandler {
    pub fn new(grammar: Grammar, allow_seed: bool) -> Self {
        Self {
            grammar,
            allow_seed,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

impl Handler for SentenceHandler {
    fn name(&self) -> &str {
        "rsg"
    }

    fn handle(&self, query: &Query) -> HandlerOutcome {
        let text = query.text.trim();
        let start = if text.is_empty() {
            DEFAULT_START
        } else {
            text.strip_prefix('<')
                .and_then(|t| t.strip_suffix('>'))
                .unwrap_or(text)
        };
        if !self.grammar.contains(start) {
            return Err(HandlerError::BadQuery(format!("no rule for <{start}>")));
        }
        let seed = match query.seed {
            Some(_) if !self.allow_seed => {
                return Err(HandlerError::BadQuery("the seed parameter is disabled".into()))
            }
            Some(seed) => seed,
            None => clock_seed(),
        };
        self.grammar
            .generate(start, query.max, seed, self.max_depth)
            .map_err(|e| HandlerError::Failure(e.to_string()))
            .map(|sentences| {
                sentences
                    .into_iter()
                    .filter(|s| !s.is_empty())
                    .map(|s| QueryResult::new(0, s))
                    .collect()
            })
    }
}

enum Runner {
    Oneshot(ProgramSpec),
    Session(Session),
}

/// A wrapped console program.
pub struct ProgramHandler {
    runner: Runner,
}

impl ProgramHandler {
    pub fn new(spec: ProgramSpec) -> Self {
        let runner = match spec.mode {
            Mode::Oneshot => Runner::Oneshot(spec),
            Mode::Session => Runner::Session(Session::new(spec)),
        };
        Self { runner }
    }

    /// PID of the session child, when running in session mode.
    pub fn session_pid(&self) -> Option<u32> {
        match &self.runner {
            Runner::Session(s) => s.pid(),
            Runner::Oneshot(_) => None,
        }
    }
}

impl Handler for ProgramHandler {
    fn name(&self) -> &str {
        "program"
    }

    fn handle(&self, query: &Query) -> HandlerOutcome {
        if query.text.is_empty() {
            return Ok(Vec::new());
        }
        let mut rows = match &self.runner {
            Runner::Oneshot(spec) => run_oneshot(spec, &query.text)?,
            Runner::Session(session) => session.query(&query.text)?,
        };
        rows.truncate(query.max);
        Ok(rows)
    }

    fn self_timed(&self) -> bool {
        true
    }
}
