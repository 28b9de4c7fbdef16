//! Core library for privacy-preserving patrol reporting.
//!
//! Pipeline, end to end: officer trajectories are anonymized into
//! k-member uncertainty clusters ([`anonymizer`]), criminal sighting
//! reports are split into threshold shares ([`sharing`]) and carried to
//! an aggregation point over a simulated sensor network ([`netsim`]),
//! where reconstructed duplicates are merged ([`aggregator`]) and the
//! resulting crime patterns stored for querying ([`patterns`]).

pub mod aggregator;
pub mod anonymizer;
pub mod model;
pub mod netsim;
pub mod patterns;
pub mod sharing;

pub use model::{Dataset, Registry, Rfid, Tick, TrajPoint, Trajectory, Zone};
