//! Line-delimited JSON protocol for out-of-process scorers.
//!
//! Each line is one JSON object. The client sends requests with strictly
//! increasing `id`s and the server answers each in order with the same `id`.
//! See `PROTOCOL.md` at the repository root for the message catalogue.

mod client;
mod messages;
mod plan;
mod server;

pub use client::{ClientOptions, RemoteScorer};
pub use messages::*;
pub use plan::{batch_plan, BatchPlan, PlannedRequest};
pub use server::{serve, serve_listener, serve_tcp};
