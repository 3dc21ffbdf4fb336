use std::fmt;
use std::ops::Add;

/// Case-insensitive count of the ASCII letters in a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LetterInventory {
    counts: [u64; 26],
}

fn slot(c: char) -> Option<usize> {
    c.is_ascii_alphabetic()
        .then(|| (c.to_ascii_lowercase() as u8 - b'a') as usize)
}

impl LetterInventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_text(text: &str) -> Self {
        let mut inv = Self::new();
        for i in text.chars().filter_map(slot) {
            inv.counts[i] += 1;
        }
        inv
    }

    /// Count for `letter`; zero for anything that is not an ASCII letter.
    pub fn get(&self, letter: char) -> u64 {
        slot(letter).map_or(0, |i| self.counts[i])
    }

    /// # Panics
    /// If `letter` is not an ASCII letter.
    pub fn set(&mut self, letter: char, count: u64) {
        let i = slot(letter).unwrap_or_else(|| panic!("{letter:?} is not a letter"));
        self.counts[i] = count;
    }

    pub fn size(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    /// `(letter, count)` pairs with nonzero counts, a to z.
    pub fn iter(&self) -> impl Iterator<Item = (char, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| ((b'a' + i as u8) as char, n))
    }

    /// `None` when `other` is not contained in `self`.
    pub fn subtract(&self, other: &Self) -> Option<Self> {
        let mut out = *self;
        for (slot, &n) in out.counts.iter_mut().zip(&other.counts) {
            *slot = slot.checked_sub(n)?;
        }
        Some(out)
    }

    /// Letters in alphabetical order, each repeated by its count, in brackets.
    pub fn canonical_string(&self) -> String {
        self.to_string()
    }
}

impl Add for LetterInventory {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(rhs.counts) {
            *a += b;
        }
        self
    }
}

impl fmt::Display for LetterInventory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (c, n) in self.iter() {
            for _ in 0..n {
                write!(f, "{c}")?;
            }
        }
        f.write_str("]")
    }
}
