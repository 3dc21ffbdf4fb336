//! Console autocomplete over a `weight<TAB>label` file.
//!
//! ```text
//! nifty-autocomplete [--max N] [--prompt] cities.tsv [QUERY]
//! ```
//!
//! With a query argument it prints the matches once and exits. Without one
//! it reads queries from standard input, answering each with its matches and
//! a blank line, which is the session protocol `nifty serve --mode session`
//! expects.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use nifty_core::autocomplete::TermIndex;

fn print_matches(out: &mut impl Write, index: &TermIndex, query: &str, max: usize) -> io::Result<()> {
    let matches = index.top_matches(query, max);
    let width = matches
        .iter()
        .map(|t| t.weight.to_string().len())
        .max()
        .unwrap_or(0);
    for term in matches {
        writeln!(out, "{:>width$} {}", term.weight, term.text)?;
    }
    Ok(())
}

fn run(args: Vec<String>) -> Result<(), String> {
    let mut max = 5;
    let mut prompt = false;
    let mut positional = Vec::new();
    let mut args = args.into_iter();
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--max" => {
                max = args
                    .next()
                    .and_then(|n| n.parse().ok())
                    .filter(|&n| n >= 1)
                    .ok_or("--max expects a positive integer")?;
            }
            "--prompt" => prompt = true,
            _ => positional.push(arg),
        }
    }
    let (path, query) = match positional.as_slice() {
        [path] => (path, None),
        [path, query] => (path, Some(query)),
        _ => return Err("usage: nifty-autocomplete [--max N] [--prompt] FILE [QUERY]".into()),
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let index = TermIndex::load_tsv(&text).map_err(|e| format!("{path}: {e}"))?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let io_err = |e: io::Error| e.to_string();
    if let Some(query) = query {
        return print_matches(&mut out, &index, query, max).map_err(io_err);
    }
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        if prompt {
            write!(out, "Query: ").and_then(|_| out.flush()).map_err(io_err)?;
        }
        let Some(line) = lines.next() else {
            return Ok(());
        };
        let line = line.map_err(io_err)?;
        let query = line.trim_end_matches('\r');
        if !query.is_empty() {
            print_matches(&mut out, &index, query, max).map_err(io_err)?;
        }
        writeln!(out).and_then(|_| out.flush()).map_err(io_err)?;
    }
}

fn main() -> ExitCode {
    match run(std::env::args().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
