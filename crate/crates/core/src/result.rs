//! Ranked result rows and their JSON wire form.
//!
//! Every handler answers with a [`ResultPage`]; the frontend only ever sees
//! `{"query": ..., "results": [{"weight": ..., "label": ..., "link": ...}]}`.

use std::fmt::Write as _;

use crate::http::percent_encode;

pub const DEFAULT_LINK_TEMPLATE: &str = "https://www.google.com/maps/search/?api=1&query={query}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub weight: u64,
    pub label: String,
    pub link: Option<String>,
}

impl QueryResult {
    /// # Panics
    /// If `label` is empty.
    pub fn new(weight: u64, label: impl Into<String>) -> Self {
        let label = label.into();
        assert!(!label.is_empty(), "result label must be nonempty");
        Self {
            weight,
            label,
            link: None,
        }
    }

    /// # Panics
    /// If `link` is not an `https://` URL.
    pub fn with_link(mut self, link: impl Into<String>) -> Self {
        let link = link.into();
        assert!(link.starts_with("https://"), "links must use https");
        self.link = Some(link);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResultPage {
    pub query: String,
    /// Most relevant first.
    pub results: Vec<QueryResult>,
}

pub(crate) fn write_json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Serializes a page with a fixed key order. `link` is omitted when absent.
pub fn encode_page(page: &ResultPage) -> String {
    let mut out = String::with_capacity(32 + page.results.len() * 64);
    out.push_str("{\"query\":");
    write_json_string(&mut out, &page.query);
    out.push_str(",\"results\":[");
    for (i, r) in page.results.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{{\"weight\":{},\"label\":", r.weight);
        write_json_string(&mut out, &r.label);
        if let Some(link) = &r.link {
            out.push_str(",\"link\":");
            write_json_string(&mut out, link);
        }
        out.push('}');
    }
    out.push_str("]}");
    out
}

/// Substitutes the percent-encoded label into a `{query}` URL template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkTemplate(String);

impl LinkTemplate {
    pub fn new(template: &str) -> Result<Self, String> {
        if !template.starts_with("https://") {
            return Err(format!("link template {template:?} must start with https://"));
        }
        if !template.contains("{query}") {
            return Err(format!("link template {template:?} must contain {{query}}"));
        }
        Ok(Self(template.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn apply(&self, label: &str) -> String {
        self.0.replace("{query}", &percent_encode(label))
    }
}

impl Default for LinkTemplate {
    fn default() -> Self {
        Self(DEFAULT_LINK_TEMPLATE.to_string())
    }
}

/// Google Maps search link for a place label.
pub fn map_link(label: &str) -> String {
    LinkTemplate::default().apply(label)
}
