//! isthmus: a toolkit for reasoning about partial reachability in the
//! Internet core.
//!
//! The library models the Internet core as the majority component of a
//! bidirectional-reachability graph, detects peninsulas (Taitao) and islands
//! (Chiloe) from multi-vantage-point observation streams, simulates synthetic
//! ground truth with injected faults, and ships the analysis pipeline used to
//! validate the detectors: block-time fractions, vantage-point convergence,
//! duration distributions, prefix sizing via longest-prefix match, traceroute
//! halt classification, site similarity, and confusion metrics.

pub mod analysis;
pub mod cli;
pub mod detect;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod validate;

pub use error::{Error, Result};
