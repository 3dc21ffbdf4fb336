//! Turn a text-in, ranked-text-out program into a small web app.
//!
//! A [`Handler`] maps a text query to a list of [`QueryResult`]s. The
//! [`server`] exposes it as `GET /query?q=...` returning JSON, and serves a
//! static frontend from the same origin. Three kernels are built in
//! (autocomplete, letter inventory, random sentences) and any console
//! program can be wrapped through [`subprocess`].
//!
//! No dependencies outside the standard library.

pub mod autocomplete;
pub mod config;
pub mod grammar;
pub mod handler;
pub mod http;
pub mod letters;
pub mod result;
pub mod rng;
pub mod server;
pub mod subprocess;

pub use autocomplete::{Term, TermIndex};
pub use config::{AppConfig, Command, HandlerKind};
pub use grammar::Grammar;
pub use handler::{Handler, HandlerError, HandlerOutcome, Query};
pub use http::{HttpRequest, HttpResponse, QueryParams};
pub use letters::LetterInventory;
pub use result::{encode_page, map_link, QueryResult, ResultPage};
pub use rng::SplitMix64;
pub use server::{Router, Server, ServerHandle};
pub use subprocess::{Mode, ProgramSpec};
