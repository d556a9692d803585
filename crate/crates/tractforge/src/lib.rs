//! Construction, solving, and certification of logarithmic-coordinate tract
//! models with prescribed slow growth.
//!
//! The crate has three layers:
//!
//! * arithmetic and growth laws that stay exact at iterated-exponential scale
//!   ([`tower`], [`growth`]),
//! * tract data at full constants and desk-scale toy tract geometry
//!   ([`tract`]),
//! * numerical conformal maps of toy tracts onto the right half-plane with
//!   hyperbolic estimates, the gate shooting solver, and certification checks
//!   ([`conformal`], [`solver`], [`certify`]).
//!
//! Reports are serialized bit-stably through [`report`]; [`config`] drives the
//! CLI front end.

pub mod certify;
pub mod config;
pub mod conformal;
pub mod growth;
pub mod report;
pub mod solver;
pub mod tower;
pub mod tract;

pub use growth::GrowthProfile;
pub use tower::TowerScalar;
pub use tract::{ToyTract, TractDatum};
