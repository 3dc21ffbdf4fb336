use super::{
    content_length, find_head_end, head_lines, malformed, parse_header_lines, Headers,
    ParseError,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub reason: String,
    pub headers: Headers,
    pub body: Vec<u8>,
}

pub fn reason_phrase(status: u16) -> &'static str {
    match status {
        200 => "OK",
        204 => "No Content",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        408 => "Request Timeout",
        413 => "Content Too Large",
        500 => "Internal Server Error",
        501 => "Not Implemented",
        502 => "Bad Gateway",
        503 => "Service Unavailable",
        504 => "Gateway Timeout",
        _ => "Unknown",
    }
}

impl HttpResponse {
    pub fn new(status: u16) -> Self {
        assert!((100..=599).contains(&status), "status {status} out of range");
        Self {
            status,
            reason: reason_phrase(status).to_string(),
            headers: Headers::new(),
            body: Vec::new(),
        }
    }

    /// Control characters in `name` and CR/LF in `value` are replaced with
    /// spaces so the serialized head stays well-formed.
    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        let name: String = name
            .chars()
            .map(|c| if c.is_control() || c == ' ' { '-' } else { c })
            .collect();
        let value: String = value
            .chars()
            .map(|c| if c == '\r' || c == '\n' { ' ' } else { c })
            .collect();
        self.headers.set(&name, value);
        self
    }

    pub fn with_body(mut self, content_type: &str, body: impl Into<Vec<u8>>) -> Self {
        self.body = body.into();
        self.with_header("Content-Type", content_type)
    }

    pub fn json(status: u16, body: impl Into<Vec<u8>>) -> Self {
        Self::new(status).with_body("application/json; charset=utf-8", body)
    }

    /// A JSON `{"error": ...}` body carrying `message`.
    pub fn error(status: u16, message: &str) -> Self {
        let mut body = String::from("{\"error\":");
        crate::result::write_json_string(&mut body, message);
        body.push('}');
        Self::json(status, body)
    }

    /// Wire bytes. `Content-Length` always reflects the actual body.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(128 + self.body.len());
        out.extend_from_slice(format!("HTTP/1.1 {} {}\r\n", self.status, self.reason).as_bytes());
        for (name, value) in self.headers.iter() {
            if name.eq_ignore_ascii_case("content-length") {
                continue;
            }
            out.extend_from_slice(format!("{name}: {value}\r\n").as_bytes());
        }
        out.extend_from_slice(format!("Content-Length: {}\r\n\r\n", self.body.len()).as_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    /// Parses a serialized response; the inverse of [`HttpResponse::serialize`].
    pub fn parse(raw: &[u8]) -> Result<Self, ParseError> {
        let end = find_head_end(raw).ok_or_else(|| malformed("incomplete response head"))?;
        let lines = head_lines(&raw[..end])?;
        let (status_line, header_lines) = lines.split_first().expect("split yields one line");
        let mut parts = status_line.splitn(3, ' ');
        let version = parts.next().unwrap_or_default();
        if !version.starts_with("HTTP/1.") {
            return Err(malformed("bad status line"));
        }
        let status: u16 = parts
            .next()
            .filter(|s| s.len() == 3)
            .and_then(|s| s.parse().ok())
            .filter(|s| (100..=599).contains(s))
            .ok_or_else(|| malformed("bad status code"))?;
        let reason = parts.next().unwrap_or_default().to_string();
        let headers = parse_header_lines(header_lines)?;
        let body = &raw[end..];
        let body = match content_length(&headers)? {
            Some(n) if n > body.len() => return Err(malformed("body shorter than Content-Length")),
            Some(n) => &body[..n],
            None => body,
        };
        Ok(Self {
            status,
            reason,
            headers,
            body: body.to_vec(),
        })
    }
}
