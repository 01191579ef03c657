//! Command-line front end and HTTP session service for CBACO policies.
//!
//! The CLI runs one-shot validations, queries, duty reports, strategy
//! simulations and exports. The service keeps policies in in-memory
//! sessions that clients evolve with events and strategies, and fork for
//! what-if exploration.

pub mod cli;
mod error;
pub mod server;
mod session;

pub use error::ServiceError;
pub use server::{router, serve};
pub use session::{rules, Session, SessionStore, StrategyDelta, StrategyRequest};
