//! The HTTP front: routing, static files and the connection loop.

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::handler::{Handler, HandlerError, HandlerOutcome, Query};
use crate::http::{expected_len, parse_request, HttpRequest, HttpResponse, ParseError};
use crate::result::{encode_page, ResultPage};

pub const QUERY_PATH: &str = "/query";
pub const DEFAULT_WORKERS: usize = 16;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(2000);
/// How long a client may take to send its request.
pub const READ_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub method: String,
    pub path: String,
    pub handler: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateRoute(pub String, pub String);

impl fmt::Display for DuplicateRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "route {} {} registered twice", self.0, self.1)
    }
}

impl std::error::Error for DuplicateRoute {}

/// Registered query routes plus the shared settings needed to answer them.
#[derive(Clone)]
pub struct Router {
    routes: Vec<Route>,
    handlers: Vec<(String, Arc<dyn Handler>)>,
    pub static_root: Option<PathBuf>,
    pub default_max: usize,
    pub timeout: Duration,
}

impl Router {
    pub fn new() -> Self {
        Self {
            routes: Vec::new(),
            handlers: Vec::new(),
            static_root: None,
            default_max: 5,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    /// Router serving `handler` on `GET /query`.
    pub fn for_handler(handler: Arc<dyn Handler>) -> Self {
        let mut router = Self::new();
        router
            .add("GET", QUERY_PATH, handler)
            .expect("fresh router has no routes");
        router
    }

    pub fn add(
        &mut self,
        method: &str,
        path: &str,
        handler: Arc<dyn Handler>,
    ) -> Result<(), DuplicateRoute> {
        if self.routes.iter().any(|r| r.method == method && r.path == path) {
            return Err(DuplicateRoute(method.into(), path.into()));
        }
        let name = handler.name().to_string();
        self.routes.push(Route {
            method: method.into(),
            path: path.into(),
            handler: name.clone(),
        });
        if !self.handlers.iter().any(|(n, _)| *n == name) {
            self.handlers.push((name, handler));
        }
        Ok(())
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    fn handler(&self, name: &str) -> Option<&Arc<dyn Handler>> {
        self.handlers.iter().find(|(n, _)| n == name).map(|(_, h)| h)
    }

    /// Answers one parsed request. Never panics on handler faults.
    pub fn dispatch(&self, request: &HttpRequest) -> HttpResponse {
        let on_path: Vec<&Route> = self
            .routes
            .iter()
            .filter(|r| r.path == request.target_path)
            .collect();
        let response = if on_path.is_empty() {
            if request.method == "GET" {
                match &self.static_root {
                    Some(root) => serve_static(&request.target_path, root),
                    None => HttpResponse::error(404, "not found"),
                }
            } else {
                HttpResponse::error(404, "not found")
            }
        } else {
            match on_path.iter().find(|r| r.method == request.method) {
                Some(route) => self.answer_query(route, request),
                None => {
                    let allow: Vec<&str> = on_path.iter().map(|r| r.method.as_str()).collect();
                    HttpResponse::error(405, "method not allowed")
                        .with_header("Allow", &allow.join(", "))
                }
            }
        };
        finish(response)
    }

    fn answer_query(&self, route: &Route, request: &HttpRequest) -> HttpResponse {
        let Some(handler) = self.handler(&route.handler) else {
            return HttpResponse::error(500, "route has no handler");
        };
        let query = match Query::from_params(&request.query_params(), self.default_max) {
            Ok(q) => q,
            Err(e) => return HttpResponse::error(e.status(), &e.to_string()),
        };
        match self.invoke(handler, &query) {
            Some(Ok(results)) => {
                let page = ResultPage {
                    query: query.text,
                    results,
                };
                HttpResponse::json(200, encode_page(&page))
            }
            Some(Err(e)) => {
                eprintln!("handler {}: {e}", handler.name());
                HttpResponse::error(e.status(), &e.to_string())
            }
            None => HttpResponse::error(500, "handler crashed"),
        }
    }

    /// `None` when the handler panicked.
    fn invoke(&self, handler: &Arc<dyn Handler>, query: &Query) -> Option<HandlerOutcome> {
        if handler.self_timed() {
            return panic::catch_unwind(AssertUnwindSafe(|| handler.handle(query))).ok();
        }
        let (tx, rx) = mpsc::channel();
        let handler = Arc::clone(handler);
        let query = query.clone();
        // Detached: a handler stuck past the deadline keeps its thread, not the worker.
        thread::spawn(move || {
            let _ = tx.send(handler.handle(&query));
        });
        match rx.recv_timeout(self.timeout) {
            Ok(outcome) => Some(outcome),
            Err(mpsc::RecvTimeoutError::Timeout) => Some(Err(HandlerError::Timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => None,
        }
    }
}

impl Default for Router {
    fn default() -> Self {
        Self::new()
    }
}

fn finish(response: HttpResponse) -> HttpResponse {
    response
        .with_header("Access-Control-Allow-Origin", "*")
        .with_header("Connection", "close")
}

pub fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// Serves `path` from under `root`; `/` maps to `index.html`.
///
/// Paths with a `..` segment are refused without touching the filesystem.
pub fn serve_static(path: &str, root: &Path) -> HttpResponse {
    let mut file = root.to_path_buf();
    for segment in path.split('/') {
        match segment {
            "" | "." => {}
            ".." => return HttpResponse::error(400, "path traversal"),
            s => file.push(s),
        }
    }
    if path.ends_with('/') {
        file.push("index.html");
    }
    match fs::metadata(&file) {
        Ok(meta) if meta.is_file() => match fs::read(&file) {
            Ok(bytes) => HttpResponse::new(200).with_body(content_type(&file), bytes),
            Err(_) => HttpResponse::error(404, "not found"),
        },
        _ => HttpResponse::error(404, "not found"),
    }
}

fn read_request(stream: &mut TcpStream) -> io::Result<Result<HttpRequest, ParseError>> {
    let mut buf = Vec::with_capacity(1024);
    let mut chunk = [0u8; 4096];
    loop {
        match expected_len(&buf) {
            Err(e) => return Ok(Err(e)),
            Ok(Some(total)) if buf.len() >= total => break,
            _ => {}
        }
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            if buf.is_empty() {
                return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "client sent nothing"));
            }
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    Ok(parse_request(&buf))
}

/// Reads, answers and closes one connection, logging one line.
pub fn handle_connection(router: &Router, mut stream: TcpStream) {
    let started = Instant::now();
    let _ = stream.set_read_timeout(Some(READ_TIMEOUT));
    let _ = stream.set_write_timeout(Some(READ_TIMEOUT));
    let (method, path, response) = match read_request(&mut stream) {
        Ok(Ok(req)) => {
            let resp = router.dispatch(&req);
            (req.method, req.target_path, resp)
        }
        Ok(Err(e)) => {
            let resp = finish(HttpResponse::error(e.status(), &e.to_string()));
            ("-".to_string(), "-".to_string(), resp)
        }
        Err(e) => {
            eprintln!("connection error: {e}");
            return;
        }
    };
    if let Err(e) = stream.write_all(&response.serialize()) {
        eprintln!("connection error: {e}");
    }
    let _ = stream.shutdown(std::net::Shutdown::Write);
    // Drain so the close does not reset unread request bytes.
    let _ = stream.set_read_timeout(Some(Duration::from_millis(100)));
    let _ = io::copy(&mut (&stream).take(1 << 20), &mut io::sink());
    eprintln!(
        "{method} {path} {} {}ms",
        response.status,
        started.elapsed().as_millis()
    );
}

/// A bound listener with a fixed worker pool.
pub struct Server {
    listener: TcpListener,
    router: Arc<Router>,
    workers: usize,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, router: Router) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            router: Arc::new(router),
            workers: DEFAULT_WORKERS,
        })
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until the process ends.
    pub fn run(self) -> ! {
        let stop = Arc::new(AtomicBool::new(false));
        self.accept_loop(&stop);
        unreachable!("accept loop only returns after a stop request")
    }

    /// Serves on a background thread until the handle is shut down.
    pub fn spawn(self) -> io::Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = thread::spawn(move || self.accept_loop(&flag));
        Ok(ServerHandle {
            addr,
            stop,
            thread: Some(thread),
        })
    }

    fn accept_loop(self, stop: &AtomicBool) {
        // Rendezvous channel: when every worker is busy, accept() stalls and
        // new connections wait in the OS backlog.
        let (tx, rx) = mpsc::sync_channel::<TcpStream>(0);
        let rx = Arc::new(Mutex::new(rx));
        let workers: Vec<JoinHandle<()>> = (0..self.workers)
            .map(|_| {
                let rx = Arc::clone(&rx);
                let router = Arc::clone(&self.router);
                thread::spawn(move || loop {
                    let next = rx.lock().unwrap_or_else(|e| e.into_inner()).recv();
                    match next {
                        Ok(stream) => {
                            let result = panic::catch_unwind(AssertUnwindSafe(|| {
                                handle_connection(&router, stream)
                            }));
                            if result.is_err() {
                                eprintln!("worker recovered from a panic");
                            }
                        }
                        Err(_) => break,
                    }
                })
            })
            .collect();

        for stream in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            match stream {
                Ok(stream) => {
                    if tx.send(stream).is_err() {
                        break;
                    }
                }
                Err(e) => eprintln!("accept failed: {e}"),
            }
        }
        drop(tx);
        for w in workers {
            let _ = w.join();
        }
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept().
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_and_join();
        }
    }
}
