//! Empty-vehicle redistribution for autonomous ride-sourcing fleets.
//!
//! The pipeline is:
//!
//! 1. [`scenario`] holds clusters, two epochs of demand and travel times, and
//!    the operator's economics (optionally ingested from raw trip records).
//! 2. [`choice`] turns vehicle supply into expected riders through a
//!    wait-time dependent logit model.
//! 3. [`graph`] builds the layered allocation network whose integer flow
//!    says how many vehicles take trips, relocate, or idle.
//! 4. [`cost`] prices every edge class, locates the convex domain of each
//!    non-linear edge and convexifies it.
//! 5. [`mcf`] solves linear min-cost flow by network simplex and
//!    [`cmcf`] wraps it in the edge-splitting loop for the convex problem.
//! 6. [`sim`] replays demand in a discrete-event simulator to score
//!    redistribution policies; [`experiment`] batches such runs.

#![allow(clippy::needless_range_loop)]

pub mod choice;
pub mod cmcf;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod mcf;
pub mod par;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
