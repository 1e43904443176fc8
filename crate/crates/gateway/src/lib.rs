//! HTTP annotation API and the `pairank` command line.

pub mod api;
pub mod cli;
pub mod error;
pub mod store;

pub use api::router;
pub use error::{ApiError, ApiResult};
pub use store::{CreateSession, ItemSpec, NextView, SessionManifest, Store};
