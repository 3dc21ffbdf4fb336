//! Weighted prefix search over a sorted term list.
//!
//! Terms are kept sorted by their case-folded text so that every prefix
//! matches a contiguous slice, located with two binary searches. The best
//! `k` terms of that slice are then picked with a bounded heap.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub weight: u64,
    pub text: String,
}

impl Term {
    pub fn new(weight: u64, text: impl Into<String>) -> Self {
        Self {
            weight,
            text: text.into(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.weight, self.text)
    }
}

/// Per-character Unicode lowercase.
pub fn fold(text: &str) -> String {
    text.chars().flat_map(char::to_lowercase).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    term: Term,
}

/// Immutable, sorted autocomplete vocabulary.
#[derive(Debug, Clone, Default)]
pub struct TermIndex {
    entries: Vec<Entry>,
}

impl TermIndex {
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut entries: Vec<Entry> = terms
            .into_iter()
            .map(|term| Entry {
                key: fold(&term.text),
                term,
            })
            .collect();
        entries.sort_by(|a, b| a.key.cmp(&b.key).then_with(|| a.term.text.cmp(&b.term.text)));
        Self { entries }
    }

    /// Parses `weight<TAB>text` lines. Blank lines are skipped and labels
    /// are trimmed.
    pub fn load_tsv(tsv: &str) -> Result<Self, FormatError> {
        let mut terms = Vec::new();
        for (i, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: &str| FormatError {
                line: i + 1,
                message: message.to_string(),
            };
            let (weight, text) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `weight<TAB>text`"))?;
            let weight = weight.trim();
            if weight.starts_with('-') {
                return Err(err("weight must be nonnegative"));
            }
            let weight: u64 = weight
                .parse()
                .map_err(|_| err("weight is not an integer"))?;
            let text = text.trim();
            if text.is_empty() {
                return Err(err("empty term text"));
            }
            terms.push(Term::new(weight, text));
        }
        Ok(Self::new(terms))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Term> {
        self.entries.get(i).map(|e| &e.term)
    }

    /// Terms in index order.
    pub fn terms(&self) -> impl ExactSizeIterator<Item = &Term> {
        self.entries.iter().map(|e| &e.term)
    }

    pub fn is_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| {
            (w[0].key.as_str(), w[0].term.text.as_str()) <= (w[1].key.as_str(), w[1].term.text.as_str())
        })
    }

    /// Half-open range of terms whose folded text starts with the folded
    /// prefix. The empty prefix matches everything.
    pub fn match_range(&self, prefix: &str) -> Range<usize> {
        let prefix = fold(prefix);
        let lo = self.entries.partition_point(|e| e.key.as_str() < prefix.as_str());
        let hi = lo
            + self.entries[lo..].partition_point(|e| e.key.starts_with(prefix.as_str()));
        lo..hi
    }

    /// The `k` heaviest matches, ties broken by folded then raw text.
    pub fn top_matches(&self, prefix: &str, k: usize) -> Vec<Term> {
        assert!(k >= 1, "k must be positive");
        let range = self.match_range(prefix);
        let mut heap: BinaryHeap<Ranked<'_>> = BinaryHeap::with_capacity(k + 1);
        for entry in &self.entries[range] {
            let candidate = Ranked(entry);
            if heap.len() < k {
                heap.push(candidate);
            } else if heap.peek().is_some_and(|worst| candidate < *worst) {
                heap.pop();
                heap.push(candidate);
            }
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|r| r.0.term.clone())
            .collect()
    }
}

/// Orders better-ranked entries first, so a max-heap keeps the worst on top.
struct Ranked<'a>(&'a Entry);

impl Ord for Ranked<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        Reverse(self.0.term.weight)
            .cmp(&Reverse(other.0.term.weight))
            .then_with(|| self.0.key.cmp(&other.0.key))
            .then_with(|| self.0.term.text.cmp(&other.0.term.text))
    }
}

impl PartialOrd for Ranked<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Ranked<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked<'_> {}
