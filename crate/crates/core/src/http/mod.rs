//! HTTP/1.1 message parsing and serialization over plain byte buffers.
//!
//! Only the subset the query server needs is supported: one request per
//! connection, `Content-Length` bodies, no chunked transfer coding.

mod percent;
mod query;
mod request;
mod response;

pub use percent::{percent_decode, percent_encode, DecodeError};
pub use query::{parse_query_string, QueryParams};
pub use request::{expected_len, parse_request, HttpRequest, MAX_BODY_BYTES, MAX_HEAD_BYTES};
pub use response::{reason_phrase, HttpResponse};

use std::fmt;

/// Ordered header list with case-insensitive lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Headers(Vec<(String, String)>);

impl Headers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.0.push((name.into(), value.into()));
    }

    /// Replaces every header named `name` with a single entry.
    pub fn set(&mut self, name: &str, value: impl Into<String>) {
        self.remove(name);
        self.push(name, value);
    }

    pub fn remove(&mut self, name: &str) {
        self.0.retain(|(n, _)| !n.eq_ignore_ascii_case(name));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.0
            .iter()
            .filter(move |(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Why a message could not be parsed. Each kind maps to an error status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Malformed(String),
    HeadTooLarge,
    BodyTooLarge,
    UnsupportedTransferEncoding,
}

impl ParseError {
    pub fn status(&self) -> u16 {
        match self {
            ParseError::Malformed(_) => 400,
            ParseError::HeadTooLarge | ParseError::BodyTooLarge => 413,
            ParseError::UnsupportedTransferEncoding => 501,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Malformed(why) => write!(f, "malformed request: {why}"),
            ParseError::HeadTooLarge => {
                write!(f, "request head exceeds {MAX_HEAD_BYTES} bytes")
            }
            ParseError::BodyTooLarge => {
                write!(f, "request body exceeds {MAX_BODY_BYTES} bytes")
            }
            ParseError::UnsupportedTransferEncoding => {
                f.write_str("transfer encodings are not supported")
            }
        }
    }
}

impl std::error::Error for ParseError {}

pub(crate) fn malformed(why: impl Into<String>) -> ParseError {
    ParseError::Malformed(why.into())
}

/// RFC 9110 `tchar`.
pub(crate) fn is_token(s: &str) -> bool {
    !s.is_empty()
        && s.bytes().all(|b| {
            b.is_ascii_alphanumeric() || b"!#$%&'*+-.^_`|~".contains(&b)
        })
}

pub(crate) fn find_head_end(raw: &[u8]) -> Option<usize> {
    raw.windows(4).position(|w| w == b"\r\n\r\n").map(|i| i + 4)
}

/// Splits a head into CRLF-terminated lines, refusing bare CR or LF.
pub(crate) fn head_lines(head: &[u8]) -> Result<Vec<&str>, ParseError> {
    let text = std::str::from_utf8(head).map_err(|_| malformed("head is not UTF-8"))?;
    let text = text
        .strip_suffix("\r\n\r\n")
        .ok_or_else(|| malformed("head not terminated by CRLFCRLF"))?;
    let lines: Vec<&str> = text.split("\r\n").collect();
    if lines.iter().any(|l| l.contains(['\r', '\n'])) {
        return Err(malformed("bare CR or LF in head"));
    }
    Ok(lines)
}

/// Parses `Name: value` lines after the start line.
pub(crate) fn parse_header_lines(lines: &[&str]) -> Result<Headers, ParseError> {
    let mut headers = Headers::new();
    for line in lines {
        if line.starts_with([' ', '\t']) {
            return Err(malformed("obsolete header line folding"));
        }
        let (name, value) = line
            .split_once(':')
            .ok_or_else(|| malformed("header line without ':'"))?;
        if !is_token(name) {
            return Err(malformed(format!("invalid header name {name:?}")));
        }
        headers.push(name, value.trim_matches([' ', '\t']));
    }
    Ok(headers)
}

/// Reads a single agreed-upon `Content-Length`, if any.
pub(crate) fn content_length(headers: &Headers) -> Result<Option<usize>, ParseError> {
    let mut found: Option<usize> = None;
    for value in headers.get_all("content-length") {
        if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("invalid Content-Length"));
        }
        let n: usize = value
            .parse()
            .map_err(|_| malformed("Content-Length out of range"))?;
        if found.is_some_and(|prev| prev != n) {
            return Err(malformed("conflicting Content-Length headers"));
        }
        found = Some(n);
    }
    Ok(found)
}
