use super::percent::{percent_decode, DecodeError};

/// Decoded query-string pairs in first-occurrence key order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryParams {
    entries: Vec<(String, Vec<String>)>,
    rejected: Vec<(String, DecodeError)>,
}

impl QueryParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: String, value: String) {
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some((_, values)) => values.push(value),
            None => self.entries.push((key, vec![value])),
        }
    }

    /// First value for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.get_all(key).first().map(String::as_str)
    }

    pub fn get_all(&self, key: &str) -> &[String] {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.entries.iter().any(|(k, _)| k == key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Raw pairs that failed to decode, with the reason.
    pub fn rejected(&self) -> &[(String, DecodeError)] {
        &self.rejected
    }
}

/// Parses `application/x-www-form-urlencoded` text.
///
/// A pair that fails to decode is dropped and recorded in
/// [`QueryParams::rejected`]; the remaining pairs are still returned.
pub fn parse_query_string(raw_query: &str) -> QueryParams {
    let mut params = QueryParams::new();
    for pair in raw_query.split('&').filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
        let decoded = percent_decode(key, true)
            .and_then(|k| percent_decode(value, true).map(|v| (k, v)));
        match decoded {
            Ok((k, v)) => params.push(k, v),
            Err(e) => params.rejected.push((pair.to_string(), e)),
        }
    }
    params
}
