//! HTTP service and command-line front end for the job matching engine.
//!
//! Both front ends call [`api::run_search`], so `jobmatch search --json`
//! prints the same document `POST /search` returns.

pub mod api;
pub mod cli;
pub mod routes;
pub mod store;

pub use api::{run_search, ApiError, SearchBody, SearchResponse};
pub use routes::{router, AppState};
pub use store::ProfileStore;
