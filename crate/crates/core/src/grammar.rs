//! Context-free grammars and seeded random sentence generation.
//!
//! File format, one rule per line:
//!
//! ```text
//! # comment
//! <s>  ::= <np> <vp>
//! <np> ::= the <n> | a <n>
//! ```
//!
//! Tokens are whitespace-separated; `<name>` tokens are nonterminals.

use std::collections::BTreeMap;
use std::fmt;

use crate::rng::SplitMix64;

pub const DEFAULT_MAX_DEPTH: usize = 100;
/// Upper bound on terminals in one sentence.
pub const MAX_SENTENCE_TOKENS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(String),
    /// Name without the angle brackets.
    NonTerminal(String),
}

impl Symbol {
    fn parse(token: &str) -> Self {
        match token.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
            Some(name) if !name.is_empty() => Symbol::NonTerminal(name.to_string()),
            _ => Symbol::Terminal(token.to_string()),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Terminal(t) => f.write_str(t),
            Symbol::NonTerminal(n) => write!(f, "<{n}>"),
        }
    }
}

pub type Production = Vec<Symbol>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrammarError {
    Format { line: usize, message: String },
    /// Referenced but undefined nonterminals, bracketed, in first-use order.
    Open(Vec<String>),
}

impl fmt::Display for GrammarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarError::Format { line, message } => write!(f, "line {line}: {message}"),
            GrammarError::Open(names) => {
                write!(f, "undefined nonterminals: {}", names.join(", "))
            }
        }
    }
}

impl std::error::Error for GrammarError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpandError {
    UnknownStart(String),
    DepthExceeded { max_depth: usize },
    TooLong,
}

impl fmt::Display for ExpandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpandError::UnknownStart(s) => write!(f, "no rule for start symbol <{s}>"),
            ExpandError::DepthExceeded { max_depth } => write!(
                f,
                "expansion nested deeper than {max_depth} levels (unbounded recursion?)"
            ),
            ExpandError::TooLong => {
                write!(f, "sentence longer than {MAX_SENTENCE_TOKENS} tokens")
            }
        }
    }
}

impl std::error::Error for ExpandError {}

/// An expansion failure for the `index`-th sentence of a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateError {
    pub index: usize,
    pub source: ExpandError,
}

impl fmt::Display for GenerateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sentence {}: {}", self.index, self.source)
    }
}

impl std::error::Error for GenerateError {}

/// A closed grammar: every referenced nonterminal has at least one production.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Grammar {
    rules: BTreeMap<String, Vec<Production>>,
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut rules: BTreeMap<String, Vec<Production>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| GrammarError::Format { line: i + 1, message };
            let (lhs, rhs) = line
                .split_once("::=")
                .ok_or_else(|| err("expected `<name> ::= ...`".into()))?;
            let name = match Symbol::parse(lhs.trim()) {
                Symbol::NonTerminal(n) if !lhs.trim().contains(char::is_whitespace) => n,
                _ => return Err(err(format!("rule name {:?} is not a <nonterminal>", lhs.trim()))),
            };
            let mut productions = Vec::new();
            for alt in rhs.split('|') {
                let prod: Production = alt.split_whitespace().map(Symbol::parse).collect();
                if prod.is_empty() {
                    return Err(err(format!("empty production in rule <{name}>")));
                }
                productions.push(prod);
            }
            rules.entry(name).or_default().extend(productions);
        }

        let grammar = Self { rules };
        let mut undefined: Vec<String> = Vec::new();
        for prod in grammar.rules.values().flatten() {
            for sym in prod {
                if let Symbol::NonTerminal(n) = sym {
                    let shown = sym.to_string();
                    if !grammar.rules.contains_key(n) && !undefined.contains(&shown) {
                        undefined.push(shown);
                    }
                }
            }
        }
        if undefined.is_empty() {
            Ok(grammar)
        } else {
            Err(GrammarError::Open(undefined))
        }
    }

    pub fn contains(&self, nonterminal: &str) -> bool {
        self.rules.contains_key(nonterminal)
    }

    pub fn productions(&self, nonterminal: &str) -> Option<&[Production]> {
        self.rules.get(nonterminal).map(Vec::as_slice)
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.rules.values().flatten().flatten().filter_map(|s| match s {
            Symbol::Terminal(t) => Some(t.as_str()),
            Symbol::NonTerminal(_) => None,
        })
    }

    /// Expands `start` leftmost-first. At every nonterminal the production
    /// index is `rng.next_u64() % productions.len()`; the start symbol sits
    /// at depth 1.
    pub fn expand(
        &self,
        start: &str,
        rng: &mut SplitMix64,
        max_depth: usize,
    ) -> Result<String, ExpandError> {
        if !self.contains(start) {
            return Err(ExpandError::UnknownStart(start.to_string()));
        }
        if max_depth < 1 {
            return Err(ExpandError::DepthExceeded { max_depth });
        }
        let mut words: Vec<&str> = Vec::new();
        let mut stack: Vec<(&Symbol, usize)> =
            self.choose(start, rng).iter().rev().map(|s| (s, 2)).collect();
        while let Some((sym, depth)) = stack.pop() {
            match sym {
                Symbol::Terminal(t) => {
                    if words.len() == MAX_SENTENCE_TOKENS {
                        return Err(ExpandError::TooLong);
                    }
                    words.push(t);
                }
                Symbol::NonTerminal(n) => {
                    if depth > max_depth {
                        return Err(ExpandError::DepthExceeded { max_depth });
                    }
                    let prod = self.choose(n, rng);
                    stack.extend(prod.iter().rev().map(|s| (s, depth + 1)));
                }
            }
        }
        Ok(words.join(" "))
    }

    fn choose(&self, nonterminal: &str, rng: &mut SplitMix64) -> &Production {
        let prods = &self.rules[nonterminal];
        &prods[rng.below(prods.len())]
    }

    /// `n` sentences from one generator seeded with `seed`.
    pub fn generate(
        &self,
        start: &str,
        n: usize,
        seed: u64,
        max_depth: usize,
    ) -> Result<Vec<String>, GenerateError> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|index| {
                self.expand(start, &mut rng, max_depth)
                    .map_err(|source| GenerateError { index, source })
            })
            .collect()
    }
}
