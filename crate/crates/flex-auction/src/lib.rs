//! Revenue-maximizing auctions for flexible consumers with nested
//! flexibility sets.
//!
//! An auctioneer holds `M` goods; each consumer wants exactly one good from
//! its flexibility set, which is one of `k` nested subsets of the goods.
//! Valuations and flexibility levels are private. This crate implements the
//! Bayesian incentive compatible, individually rational, revenue-maximizing
//! auction for that setting, along with the machinery needed to check every
//! claimed property at desk scale:
//!
//! - [`dist`]: consumer type models (piecewise-linear valuation densities
//!   per level), virtual valuations and their inverses, and validators for
//!   the hazard-rate and negative-reserve assumptions.
//! - [`flex`]: nested flexibility structures, demand profiles, adequacy via
//!   prefix-sum dominance, minimal removal counts and feasible assignment.
//! - [`mechanism`]: the threshold allocation, threshold payments and a
//!   critical-bid probe.
//! - [`oracle`]: brute-force reference solvers used only for verification.
//! - [`verify`]: Monte Carlo interim estimates and statistical checks of
//!   incentive compatibility, individual rationality, monotonicity and
//!   revenue identities.
//! - [`cli`]: config ingestion and the `flexauction` command-line tool.
//!
//! See the crate examples for one runnable program per capability.

pub mod cli;
pub mod dist;
pub mod error;
pub mod flex;
pub mod mechanism;
pub mod oracle;
pub mod verify;

pub use error::{Error, Result};
