//! Command-line configuration and app startup.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use crate::autocomplete::TermIndex;
use crate::grammar::Grammar;
use crate::handler::{AutocompleteHandler, Handler, LettersHandler, ProgramHandler, SentenceHandler};
use crate::result::LinkTemplate;
use crate::server::{Router, Server};
use crate::subprocess::{Mode, ProgramSpec};

pub const USAGE: &str = "\
usage: nifty serve --handler <autocomplete|letters|rsg|program> [options]

options:
  --host <addr>          listen address (default 127.0.0.1, env HOST)
  --port <n>             listen port, 1-65535 (default 8080, env PORT)
  --handler <name>       autocomplete, letters, rsg or program
  --data <file>          terms TSV (autocomplete) or grammar file (rsg)
  --cmd <arg>            program argument; repeat to build the command line
  --mode <mode>          oneshot (default) or session, for --handler program
  --static <dir>         directory of frontend files (default web)
  --max-results <n>      default number of results (default 5)
  --timeout-ms <n>       per-request handler timeout (default 2000)
  --seedless             reject the seed query parameter (rsg)
  --link-template <url>  https URL containing {query} for result links
  --help                 print this message
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandlerKind {
    Autocomplete,
    Letters,
    Rsg,
    Program,
}

impl FromStr for HandlerKind {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s {
            "autocomplete" => Ok(HandlerKind::Autocomplete),
            "letters" => Ok(HandlerKind::Letters),
            "rsg" => Ok(HandlerKind::Rsg),
            "program" => Ok(HandlerKind::Program),
            other => Err(UsageError(format!(
                "unknown handler {other:?} (expected autocomplete, letters, rsg or program)"
            ))),
        }
    }
}

impl fmt::Display for HandlerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HandlerKind::Autocomplete => "autocomplete",
            HandlerKind::Letters => "letters",
            HandlerKind::Rsg => "rsg",
            HandlerKind::Program => "program",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppConfig {
    pub host: String,
    pub port: u16,
    pub handler: HandlerKind,
    pub data_path: Option<PathBuf>,
    pub program: Vec<String>,
    pub mode: Mode,
    pub static_root: Option<PathBuf>,
    pub max_results: usize,
    pub timeout_ms: u64,
    pub seedless: bool,
    pub link_template: Option<LinkTemplate>,
}

impl AppConfig {
    pub fn new(handler: HandlerKind) -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            handler,
            data_path: None,
            program: Vec::new(),
            mode: Mode::Oneshot,
            static_root: Some(PathBuf::from("web")),
            max_results: 5,
            timeout_ms: 2000,
            seedless: false,
            link_template: None,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    fn validate(&self) -> Result<(), UsageError> {
        match self.handler {
            HandlerKind::Autocomplete | HandlerKind::Rsg if self.data_path.is_none() => {
                return Err(UsageError(format!("--handler {} requires --data <file>", self.handler)))
            }
            HandlerKind::Program if self.program.is_empty() => {
                return Err(UsageError("--handler program requires --cmd <program>".into()))
            }
            _ => {}
        }
        if self.port == 0 {
            return Err(UsageError("--port must be between 1 and 65535".into()));
        }
        if self.max_results == 0 {
            return Err(UsageError("--max-results must be at least 1".into()));
        }
        if self.timeout_ms == 0 {
            return Err(UsageError("--timeout-ms must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Serve(AppConfig),
    Help,
}

fn number<T: FromStr>(flag: &str, raw: &str) -> Result<T, UsageError> {
    raw.parse()
        .map_err(|_| UsageError(format!("{flag} expects a number, got {raw:?}")))
}

/// Parses arguments (without the program name), reading `HOST`/`PORT` from
/// the process environment as soft defaults.
pub fn parse_args(argv: &[String]) -> Result<Command, UsageError> {
    parse_args_with_env(argv, |k| std::env::var(k).ok())
}

/// Like [`parse_args`] with an explicit environment. Flags beat the
/// environment, which beats built-in defaults.
pub fn parse_args_with_env(
    argv: &[String],
    env: impl Fn(&str) -> Option<String>,
) -> Result<Command, UsageError> {
    if argv.iter().any(|a| a == "--help" || a == "-h") {
        return Ok(Command::Help);
    }
    let mut args = argv.iter();
    match args.next().map(String::as_str) {
        Some("serve") => {}
        Some(other) => return Err(UsageError(format!("unknown command {other:?}"))),
        None => return Err(UsageError("missing command (try `serve`)".into())),
    }

    let mut handler: Option<HandlerKind> = None;
    let mut cfg = AppConfig::new(HandlerKind::Letters);
    if let Some(host) = env("HOST").filter(|h| !h.is_empty()) {
        cfg.host = host;
    }
    let mut port: Option<String> = env("PORT").filter(|p| !p.is_empty());
    let mut port_from_flag = false;

    while let Some(flag) = args.next() {
        if flag == "--seedless" {
            cfg.seedless = true;
            continue;
        }
        let mut value = || {
            args.next()
                .cloned()
                .ok_or_else(|| UsageError(format!("{flag} expects a value")))
        };
        match flag.as_str() {
            "--host" => cfg.host = value()?,
            "--port" => {
                port = Some(value()?);
                port_from_flag = true;
            }
            "--handler" => handler = Some(value()?.parse()?),
            "--data" => cfg.data_path = Some(PathBuf::from(value()?)),
            "--cmd" => cfg.program.push(value()?),
            "--mode" => cfg.mode = value()?.parse().map_err(UsageError)?,
            "--static" => cfg.static_root = Some(PathBuf::from(value()?)),
            "--max-results" => cfg.max_results = number(flag, &value()?)?,
            "--timeout-ms" => cfg.timeout_ms = number(flag, &value()?)?,
            "--link-template" => {
                cfg.link_template = Some(LinkTemplate::new(&value()?).map_err(UsageError)?)
            }
            other => return Err(UsageError(format!("unknown flag {other:?}"))),
        }
    }

    if let Some(raw) = port {
        let source = if port_from_flag { "--port" } else { "PORT" };
        cfg.port = raw
            .parse()
            .ok()
            .filter(|p: &u16| *p >= 1)
            .ok_or_else(|| UsageError(format!("{source} must be between 1 and 65535, got {raw:?}")))?;
    }
    cfg.handler = handler.ok_or_else(|| UsageError("--handler is required".into()))?;
    cfg.validate()?;
    Ok(Command::Serve(cfg))
}

#[derive(Debug)]
pub struct StartupError(pub String);

impl fmt::Display for StartupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for StartupError {}

fn read_data(cfg: &AppConfig) -> Result<(String, String), StartupError> {
    let path = cfg.data_path.as_ref().expect("validated");
    let shown = path.display().to_string();
    fs::read_to_string(path)
        .map(|text| (shown.clone(), text))
        .map_err(|e| StartupError(format!("cannot read {shown}: {e}")))
}

/// Loads data files and constructs the configured handler.
pub fn build_handler(cfg: &AppConfig) -> Result<Arc<dyn Handler>, StartupError> {
    Ok(match cfg.handler {
        HandlerKind::Autocomplete => {
            let (path, text) = read_data(cfg)?;
            let index = TermIndex::load_tsv(&text)
                .map_err(|e| StartupError(format!("{path}: {e}")))?;
            let links = cfg.link_template.clone().unwrap_or_default();
            Arc::new(AutocompleteHandler::new(index, Some(links)))
        }
        HandlerKind::Letters => Arc::new(LettersHandler),
        HandlerKind::Rsg => {
            let (path, text) = read_data(cfg)?;
            let grammar =
                Grammar::parse(&text).map_err(|e| StartupError(format!("{path}: {e}")))?;
            Arc::new(SentenceHandler::new(grammar, !cfg.seedless))
        }
        HandlerKind::Program => {
            let spec = ProgramSpec::new(cfg.program.clone(), cfg.mode, cfg.timeout())
                .map_err(StartupError)?;
            Arc::new(ProgramHandler::new(spec))
        }
    })
}

pub fn build_router(cfg: &AppConfig) -> Result<Router, StartupError> {
    let mut router = Router::for_handler(build_handler(cfg)?);
    router.static_root = cfg.static_root.clone();
    router.default_max = cfg.max_results;
    router.timeout = cfg.timeout();
    Ok(router)
}

/// Builds the handler, then binds. Data errors surface before the port is taken.
pub fn bind(cfg: &AppConfig) -> Result<Server, StartupError> {
    let router = build_router(cfg)?;
    Server::bind((cfg.host.as_str(), cfg.port), router).map_err(|e| {
        StartupError(format!("cannot listen on {}:{}: {e}", cfg.host, cfg.port))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(a: &[&str]) -> Vec<String> {
        a.iter().map(|s| s.to_string()).collect()
    }

    fn parse(a: &[&str]) -> Result<Command, UsageError> {
        parse_args_with_env(&args(a), |_| None)
    }

    fn serve(a: &[&str]) -> AppConfig {
        match parse(a).unwrap() {
            Command::Serve(cfg) => cfg,
            Command::Help => panic!("help"),
        }
    }

    #[test]
    fn defaults() {
        let cfg = serve(&["serve", "--handler", "autocomplete", "--data", "cities.tsv"]);
        assert_eq!(cfg.port, 8080);
        assert_eq!(cfg.host, "127.0.0.1");
        assert_eq!(cfg.max_results, 5);
        assert_eq!(cfg.timeout_ms, 2000);
        assert_eq!(cfg.static_root, Some(PathBuf::from("web")));
        assert_eq!(cfg.data_path, Some(PathBuf::from("cities.tsv")));
    }

    #[test]
    fn missing_pairings() {
        let err = parse(&["serve", "--handler", "rsg"]).unwrap_err();
        assert!(err.0.contains("--data"), "{err}");
        let err = parse(&["serve", "--handler", "program"]).unwrap_err();
        assert!(err.0.contains("--cmd"), "{err}");
        assert!(parse(&["serve"]).unwrap_err().0.contains("--handler"));
    }

    #[test]
    fn cmd_accumulates() {
        let cfg = serve(&[
            "serve", "--handler", "program", "--cmd", "./a.out", "--cmd", "{query}", "--mode",
            "oneshot",
        ]);
        assert_eq!(cfg.program, ["./a.out", "{query}"]);
        assert_eq!(cfg.mode, Mode::Oneshot);
    }

    #[test]
    fn later_flags_win() {
        let cfg = serve(&["serve", "--handler", "rsg", "--port", "1", "--handler", "letters", "--port", "9000"]);
        assert_eq!(cfg.handler, HandlerKind::Letters);
        assert_eq!(cfg.port, 9000);
    }

    #[test]
    fn bad_values() {
        for bad in [
            &["serve", "--handler", "letters", "--port", "http"][..],
            &["serve", "--handler", "letters", "--port", "0"],
            &["serve", "--handler", "letters", "--port", "70000"],
            &["serve", "--handler", "letters", "--max-results", "0"],
            &["serve", "--handler", "letters", "--timeout-ms", "-5"],
            &["serve", "--handler", "letters", "--bogus"],
            &["serve", "--handler", "letters", "--host"],
            &["serve", "--handler", "nope"],
            &["serve", "--handler", "program", "--cmd", "x", "--mode", "daemon"],
            &["serve", "--handler", "letters", "--link-template", "http://x/{query}"],
            &["launch"],
            &[],
        ] {
            assert!(parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn help_anywhere() {
        assert_eq!(parse(&["--help"]).unwrap(), Command::Help);
        assert_eq!(parse(&["serve", "--bogus", "--help"]).unwrap(), Command::Help);
    }

    #[test]
    fn env_is_a_soft_default() {
        let env = |k: &str| match k {
            "HOST" => Some("0.0.0.0".to_string()),
            "PORT" => Some("9999".to_string()),
            _ => None,
        };
        let from_env = match parse_args_with_env(&args(&["serve", "--handler", "letters"]), env).unwrap() {
            Command::Serve(c) => c,
            _ => unreachable!(),
        };
        assert_eq!((from_env.host.as_str(), from_env.port), ("0.0.0.0", 9999));
        let flags = match parse_args_with_env(
            &args(&["serve", "--handler", "letters", "--port", "7000", "--host", "::1"]),
            env,
        )
        .unwrap()
        {
            Command::Serve(c) => c,
            _ => unreachable!(),
        };
        assert_eq!((flags.host.as_str(), flags.port), ("::1", 7000));
        let bad_env = |k: &str| (k == "PORT").then(|| "abc".to_string());
        let err = parse_args_with_env(&args(&["serve", "--handler", "letters"]), bad_env).unwrap_err();
        assert!(err.0.contains("PORT"));
    }

    #[test]
    fn startup_errors_name_the_problem() {
        let mut cfg = AppConfig::new(HandlerKind::Autocomplete);
        cfg.data_path = Some(PathBuf::from("/definitely/missing/cities.tsv"));
        let err = build_handler(&cfg).err().unwrap();
        assert!(err.0.contains("/definitely/missing/cities.tsv"));

        let dir = tempfile::tempdir().unwrap();
        let grammar = dir.path().join("bad.txt");
        fs::write(&grammar, "<s> ::= a\n<s> oops\n").unwrap();
        let mut cfg = AppConfig::new(HandlerKind::Rsg);
        cfg.data_path = Some(grammar);
        let err = build_handler(&cfg).err().unwrap();
        assert!(err.0.contains("line 2"), "{err}");
    }
}
