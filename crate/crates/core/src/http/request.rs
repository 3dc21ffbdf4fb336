use super::{
    content_length, find_head_end, head_lines, is_token, malformed, parse_header_lines,
    parse_query_string, percent_decode, Headers, ParseError, QueryParams,
};

pub const MAX_HEAD_BYTES: usize = 16 * 1024;
pub const MAX_BODY_BYTES: usize = 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub method: String,
    /// Percent-decoded path; always starts with `/`, never has a `..` segment.
    pub target_path: String,
    /// Everything after the first `?`, still encoded.
    pub raw_query: String,
    pub version: String,
    pub headers: Headers,
    pub body: Vec<u8>,
}

impl HttpRequest {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name)
    }

    pub fn query_params(&self) -> QueryParams {
        parse_query_string(&self.raw_query)
    }
}

struct Head {
    method: String,
    target_path: String,
    raw_query: String,
    version: String,
    headers: Headers,
    len: usize,
    content_length: usize,
}

fn parse_head(raw: &[u8]) -> Result<Head, ParseError> {
    let end = match find_head_end(raw) {
        Some(end) if end > MAX_HEAD_BYTES => return Err(ParseError::HeadTooLarge),
        Some(end) => end,
        None if raw.len() > MAX_HEAD_BYTES => return Err(ParseError::HeadTooLarge),
        None => return Err(malformed("incomplete request head")),
    };
    let lines = head_lines(&raw[..end])?;
    let (request_line, header_lines) = lines.split_first().expect("split yields one line");

    let parts: Vec<&str> = request_line.split(' ').collect();
    let [method, target, version] = parts[..] else {
        return Err(malformed("request line must be `METHOD target HTTP/1.1`"));
    };
    if !is_token(method) {
        return Err(malformed("invalid method"));
    }
    if version != "HTTP/1.1" && version != "HTTP/1.0" {
        return Err(malformed(format!("unsupported version {version:?}")));
    }
    if !target.starts_with('/') {
        return Err(malformed("target must be an absolute path"));
    }
    let (raw_path, raw_query) = target.split_once('?').unwrap_or((target, ""));
    let target_path = percent_decode(raw_path, false)
        .map_err(|e| malformed(format!("bad path encoding: {e}")))?;
    if target_path.split('/').any(|seg| seg == "..") {
        return Err(malformed("path contains a `..` segment"));
    }
    if target_path.contains(['\0', '\\']) {
        return Err(malformed("path contains a forbidden character"));
    }

    let headers = parse_header_lines(header_lines)?;
    if headers.contains("transfer-encoding") {
        return Err(ParseError::UnsupportedTransferEncoding);
    }
    let content_length = content_length(&headers)?.unwrap_or(0);
    if content_length > MAX_BODY_BYTES {
        return Err(ParseError::BodyTooLarge);
    }

    Ok(Head {
        method: method.to_string(),
        target_path,
        raw_query: raw_query.to_string(),
        version: version.to_string(),
        headers,
        len: end,
        content_length,
    })
}

/// Total message length once the head has arrived, `None` while it is
/// still incomplete. Lets a reader know how many more bytes to wait for.
pub fn expected_len(raw: &[u8]) -> Result<Option<usize>, ParseError> {
    if find_head_end(raw).is_none() {
        return if raw.len() > MAX_HEAD_BYTES {
            Err(ParseError::HeadTooLarge)
        } else {
            Ok(None)
        };
    }
    let head = parse_head(raw)?;
    Ok(Some(head.len + head.content_length))
}

/// Parses one complete request. Bytes past `Content-Length` are ignored.
pub fn parse_request(raw: &[u8]) -> Result<HttpRequest, ParseError> {
    let head = parse_head(raw)?;
    let rest = &raw[head.len..];
    if rest.len() < head.content_length {
        return Err(malformed("body shorter than Content-Length"));
    }
    Ok(HttpRequest {
        method: head.method,
        target_path: head.target_path,
        raw_query: head.raw_query,
        version: head.version,
        headers: head.headers,
        body: rest[..head.content_length].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_query_get() {
        let req = parse_request(b"GET /query?q=Sea HTTP/1.1\r\nHost: a\r\n\r\n").unwrap();
        assert_eq!(req.method, "GET");
        assert_eq!(req.target_path, "/query");
        assert_eq!(req.raw_query, "q=Sea");
        assert_eq!(req.version, "HTTP/1.1");
        assert_eq!(req.header("host"), Some("a"));
        assert!(req.body.is_empty());
    }

    #[test]
    fn missing_version_is_malformed() {
        assert!(matches!(
            parse_request(b"GET /\r\n\r\n"),
            Err(ParseError::Malformed(_))
        ));
    }

    #[test]
    fn reads_body_by_content_length() {
        let req = parse_request(b"POST /x HTTP/1.1\r\nContent-Length: 3\r\n\r\nabcdef").unwrap();
        assert_eq!(req.body, b"abc");
        assert_eq!(
            expected_len(b"POST /x HTTP/1.1\r\nContent-Length: 3\r\n\r\n"),
            Ok(Some(42))
        );
    }

    #[test]
    fn short_body_is_malformed() {
        assert!(parse_request(b"POST /x HTTP/1.1\r\nContent-Length: 5\r\n\r\nab").is_err());
    }

    #[test]
    fn path_is_decoded_query_is_not() {
        let req = parse_request(b"GET /a%20b?q=Seal+Beach%21 HTTP/1.1\r\n\r\n").unwrap();
        assert_eq!(req.target_path, "/a b");
        assert_eq!(req.raw_query, "q=Seal+Beach%21");
        assert_eq!(req.query_params().get("q"), Some("Seal Beach!"));
    }

    #[test]
    fn rejects_traversal_even_when_encoded() {
        for raw in [
            &b"GET /../secret HTTP/1.1\r\n\r\n"[..],
            b"GET /a/%2E%2E/secret HTTP/1.1\r\n\r\n",
            b"GET /a/.. HTTP/1.1\r\n\r\n",
        ] {
            assert!(matches!(parse_request(raw), Err(ParseError::Malformed(_))));
        }
        // a dotted file name is not a traversal
        assert!(parse_request(b"GET /a..b HTTP/1.1\r\n\r\n").is_ok());
    }

    #[test]
    fn error_statuses() {
        let chunked = b"POST /x HTTP/1.1\r\nTransfer-Encoding: chunked\r\n\r\n";
        assert_eq!(parse_request(chunked).unwrap_err().status(), 501);

        let big_body = format!("POST /x HTTP/1.1\r\nContent-Length: {}\r\n\r\n", MAX_BODY_BYTES + 1);
        assert_eq!(parse_request(big_body.as_bytes()).unwrap_err().status(), 413);

        let mut big_head = b"GET / HTTP/1.1\r\nX-Pad: ".to_vec();
        big_head.extend(std::iter::repeat(b'a').take(MAX_HEAD_BYTES));
        assert_eq!(expected_len(&big_head), Err(ParseError::HeadTooLarge));
        big_head.extend(b"\r\n\r\n");
        assert_eq!(parse_request(&big_head).unwrap_err().status(), 413);
    }

    #[test]
    fn rejects_bad_head_shapes() {
        for raw in [
            &b"GET / HTTP/2.0\r\n\r\n"[..],
            b"GET  / HTTP/1.1\r\n\r\n",
            b"GET / HTTP/1.1 extra\r\n\r\n",
            b"G\tT / HTTP/1.1\r\n\r\n",
            b"GET query HTTP/1.1\r\n\r\n",
            b"GET / HTTP/1.1\r\nNoColon\r\n\r\n",
            b"GET / HTTP/1.1\r\nA: b\r\n folded\r\n\r\n",
            b"GET / HTTP/1.1\r\nBad Name: x\r\n\r\n",
            b"GET / HTTP/1.1\r\nContent-Length: abc\r\n\r\n",
            b"GET / HTTP/1.1\nHost: a\r\n\r\n",
            b"GET /%ZZ HTTP/1.1\r\n\r\n",
            b"GET / HTTP/1.1\r\nHost: a\r\n",
            b"\xff\xfe / HTTP/1.1\r\n\r\n",
            b"",
        ] {
            assert_eq!(parse_request(raw).unwrap_err().status(), 400, "{raw:?}");
        }
    }

    #[test]
    fn header_name_case_does_not_matter() {
        let a = parse_request(b"GET / HTTP/1.1\r\nX-Thing: 1\r\n\r\n").unwrap();
        let b = parse_request(b"GET / HTTP/1.1\r\nx-thing: 1\r\n\r\n").unwrap();
        assert_eq!(a.header("X-THING"), b.header("X-THING"));
        assert_eq!(a.header("x-thing"), Some("1"));
    }

    proptest! {
        #[test]
        fn never_panics_on_arbitrary_bytes(raw in proptest::collection::vec(any::<u8>(), 0..4096)) {
            let _ = parse_request(&raw);
            let _ = expected_len(&raw);
        }

        #[test]
        fn never_panics_on_mutated_requests(
            prefix in "[A-Z]{0,6} /[a-z%0-9?=&+.]{0,20} HTTP/1\\.[01]",
            headers in proptest::collection::vec("[A-Za-z-]{0,8}:? ?[ -~]{0,12}", 0..5),
            body in proptest::collection::vec(any::<u8>(), 0..32),
        ) {
            let mut raw = prefix.into_bytes();
            for h in headers {
                raw.extend(b"\r\n");
                raw.extend(h.into_bytes());
            }
            raw.extend(b"\r\n\r\n");
            raw.extend(body);
            if let Ok(req) = parse_request(&raw) {
                prop_assert!(req.target_path.starts_with('/'));
                prop_assert!(!req.target_path.split('/').any(|s| s == ".."));
            }
        }
    }
}
