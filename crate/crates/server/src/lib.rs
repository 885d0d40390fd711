//! HTTP service for proof exercises: authentication, courses, tutorials,
//! checks against the prover pool and history export.

pub mod app;
pub mod auth;
pub mod check;
pub mod config;
pub mod content;
pub mod error;
pub mod hub;
pub mod rbac;
pub mod routes;
pub mod sessions;

pub use app::{App, AppState, StartupError};
pub use config::Config;
pub use routes::router;
