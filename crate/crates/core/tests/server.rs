use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use nifty_core::config::{self, AppConfig, HandlerKind};
use nifty_core::handler::{AutocompleteHandler, ProgramHandler};
use nifty_core::result::LinkTemplate;
use nifty_core::subprocess::{Mode, ProgramSpec};
use nifty_core::{HttpResponse, Router, Server, ServerHandle, TermIndex};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn send(addr: SocketAddr, raw: &[u8]) -> HttpResponse {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    stream.write_all(raw).unwrap();
    let _ = stream.shutdown(Shutdown::Write);
    let mut buf = Vec::new();
    stream.read_to_end(&mut buf).unwrap();
    HttpResponse::parse(&buf).unwrap_or_else(|e| panic!("{e}: {:?}", String::from_utf8_lossy(&buf)))
}

fn get(addr: SocketAddr, target: &str) -> HttpResponse {
    send(addr, format!("GET {target} HTTP/1.1\r\nHost: test\r\n\r\n").as_bytes())
}

fn start(router: Router) -> ServerHandle {
    Server::bind("127.0.0.1:0", router).unwrap().spawn().unwrap()
}

fn cities_server() -> ServerHandle {
    let mut cfg = AppConfig::new(HandlerKind::Autocomplete);
    cfg.data_path = Some(data("cities.tsv"));
    cfg.static_root = None;
    start(config::build_router(&cfg).unwrap())
}

fn rows(resp: &HttpResponse) -> Vec<(u64, String)> {
    let v: Value = serde_json::from_slice(&resp.body).unwrap();
    v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["weight"].as_u64().unwrap(), r["label"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn autocomplete_over_socket() {
    let server = cities_server();
    let resp = get(server.addr(), "/query?q=Sea&max=5");
    assert_eq!(resp.status, 200);
    assert!(resp.headers.get("content-type").unwrap().starts_with("application/json"));
    assert_eq!(resp.headers.get("access-control-allow-origin"), Some("*"));
    assert_eq!(resp.headers.get("connection"), Some("close"));
    let got = rows(&resp);
    assert_eq!(got[0], (608660, "Seattle, Washington, United States".to_string()));
    assert_eq!(got.len(), 5);

    let v: Value = serde_json::from_slice(&resp.body).unwrap();
    assert_eq!(v["query"], "Sea");
    assert_eq!(
        v["results"][0]["link"],
        "https://www.google.com/maps/search/?api=1&query=Seattle%2C%20Washington%2C%20United%20States"
    );

    assert!(rows(&get(server.addr(), "/query?q=")).is_empty());
    assert!(rows(&get(server.addr(), "/query")).is_empty());
    assert!(rows(&get(server.addr(), "/query?q=Zzzz")).is_empty());
    assert_eq!(rows(&get(server.addr(), "/query?q=seal+b")).len(), 1);
    assert_eq!(rows(&get(server.addr(), "/query?q=sea&max=2")).len(), 2);
    assert_eq!(get(server.addr(), "/query?q=sea&max=0").status, 400);
    assert_eq!(get(server.addr(), "/query?q=%ZZ").status, 400);
    assert_eq!(get(server.addr(), "/nope").status, 404);
}

#[test]
fn custom_link_template() {
    let index = TermIndex::load_tsv("5\tOslo, Norway").unwrap();
    let links = LinkTemplate::new("https://maps.example/?q={query}").unwrap();
    let server = start(Router::for_handler(Arc::new(AutocompleteHandler::new(index, Some(links)))));
    let v: Value = serde_json::from_slice(&get(server.addr(), "/query?q=o").body).unwrap();
    assert_eq!(v["results"][0]["link"], "https://maps.example/?q=Oslo%2C%20Norway");
}

#[test]
fn wrong_method_and_bad_requests() {
    let server = cities_server();
    let resp = send(server.addr(), b"POST /query HTTP/1.1\r\nContent-Length: 2\r\n\r\nhi");
    assert_eq!(resp.status, 405);
    assert_eq!(resp.headers.get("allow"), Some("GET"));

    for (raw, status) in [
        (&b"GET /\r\n\r\n"[..], 400),
        (b"GET /../etc/passwd HTTP/1.1\r\n\r\n", 400),
        (b"POST /query HTTP/1.1\r\nTransfer-Encoding: chunked\r\n\r\n0\r\n\r\n", 501),
        (b"POST /query HTTP/1.1\r\nContent-Length: 9999999\r\n\r\n", 413),
        (b"POST /query HTTP/1.1\r\nContent-Length: 10\r\n\r\nabc", 400),
    ] {
        let resp = send(server.addr(), raw);
        assert_eq!(resp.status, status, "{:?}", String::from_utf8_lossy(raw));
        assert!(resp.headers.contains("access-control-allow-origin"));
        assert!(resp.headers.contains("content-length"));
    }
    // still serving
    assert_eq!(get(server.addr(), "/query?q=Sea").status, 200);
}

#[test]
fn client_that_disconnects_early() {
    let server = cities_server();
    for _ in 0..5 {
        let mut s = TcpStream::connect(server.addr()).unwrap();
        s.write_all(b"GET /query?q=Se").unwrap();
        drop(s);
        drop(TcpStream::connect(server.addr()).unwrap());
    }
    assert_eq!(get(server.addr(), "/query?q=Sea").status, 200);
}

#[test]
fn static_frontend_and_api_share_an_origin() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<!doctype html>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let mut cfg = AppConfig::new(HandlerKind::Letters);
    cfg.static_root = Some(dir.path().to_path_buf());
    let server = start(config::build_router(&cfg).unwrap());

    let index = get(server.addr(), "/");
    assert_eq!(index.status, 200);
    assert_eq!(index.body, b"<!doctype html>");
    assert!(index.headers.get("content-type").unwrap().starts_with("text/html"));
    let js = get(server.addr(), "/app.js");
    assert!(js.headers.get("content-type").unwrap().starts_with("text/javascript"));
    assert_eq!(get(server.addr(), "/style.css").status, 404);

    let letters = rows(&get(server.addr(), "/query?q=Hello"));
    let labels: Vec<&str> = letters.iter().map(|(_, l)| l.as_str()).collect();
    assert_eq!(labels, ["[ehllo]", "e: 1", "h: 1", "l: 2", "o: 1"]);
}

#[test]
fn sentences_over_http() {
    let mut cfg = AppConfig::new(HandlerKind::Rsg);
    cfg.data_path = Some(data("sentences.txt"));
    let server = start(config::build_router(&cfg).unwrap());
    let a = get(server.addr(), "/query?q=&seed=42&max=3");
    assert_eq!(a.status, 200);
    assert_eq!(rows(&a).len(), 3);
    assert_eq!(a.body, get(server.addr(), "/query?q=&seed=42&max=3").body);
    assert_eq!(rows(&get(server.addr(), "/query?q=%3Cn%3E&max=1")).len(), 1);
    assert_eq!(get(server.addr(), "/query?q=missing").status, 400);
    assert_eq!(get(server.addr(), "/query?seed=abc").status, 400);

    cfg.seedless = true;
    let seedless = start(config::build_router(&cfg).unwrap());
    assert_eq!(get(seedless.addr(), "/query?seed=1").status, 400);
    assert_eq!(get(seedless.addr(), "/query").status, 200);
}

#[test]
fn session_program_keeps_one_child() {
    let script = "while read q; do if [ \"$q\" = slow ]; then sleep 5; fi; echo \"7 $q\"; echo; done";
    let spec = ProgramSpec::new(
        vec!["sh".into(), "-c".into(), script.into()],
        Mode::Session,
        Duration::from_millis(300),
    )
    .unwrap();
    let handler = Arc::new(ProgramHandler::new(spec));
    let server = start(Router::for_handler(handler.clone()));

    assert_eq!(rows(&get(server.addr(), "/query?q=one")), [(7, "one".to_string())]);
    let pid = handler.session_pid().unwrap();
    assert_eq!(rows(&get(server.addr(), "/query?q=two")), [(7, "two".to_string())]);
    assert_eq!(handler.session_pid(), Some(pid));

    assert_eq!(get(server.addr(), "/query?q=slow").status, 504);
    assert_eq!(rows(&get(server.addr(), "/query?q=three")), [(7, "three".to_string())]);
    assert_ne!(handler.session_pid(), Some(pid));

    // concurrent requests are serialized onto the one child
    let addr = server.addr();
    let threads: Vec<_> = (0..8)
        .map(|i| thread::spawn(move || rows(&get(addr, &format!("/query?q=c{i}")))))
        .collect();
    for (i, t) in threads.into_iter().enumerate() {
        assert_eq!(t.join().unwrap(), [(7, format!("c{i}"))]);
    }
}

#[test]
fn failing_program_is_bad_gateway() {
    let spec = ProgramSpec::new(
        vec!["sh".into(), "-c".into(), "echo oops >&2; exit 1".into()],
        Mode::Oneshot,
        Duration::from_secs(2),
    )
    .unwrap();
    let server = start(Router::for_handler(Arc::new(ProgramHandler::new(spec))));
    assert_eq!(get(server.addr(), "/query?q=x").status, 502);

    let spec = ProgramSpec::new(vec!["/no/such/binary".into()], Mode::Oneshot, Duration::from_secs(2)).unwrap();
    let server = start(Router::for_handler(Arc::new(ProgramHandler::new(spec))));
    assert_eq!(get(server.addr(), "/query?q=x").status, 502);
}

#[test]
fn more_clients_than_workers() {
    let mut cfg = AppConfig::new(HandlerKind::Autocomplete);
    cfg.data_path = Some(data("cities.tsv"));
    let router = config::build_router(&cfg).unwrap();
    let server = Server::bind("127.0.0.1:0", router).unwrap().with_workers(2).spawn().unwrap();
    let addr = server.addr();
    let expected = get(addr, "/query?q=S").body;
    let threads: Vec<_> = (0..20)
        .map(|_| thread::spawn(move || get(addr, "/query?q=S").body))
        .collect();
    for t in threads {
        assert_eq!(t.join().unwrap(), expected);
    }
}
