//! Exact ReLU network synthesis for discrete piecewise linear functions.
//!
//! Networks are built from explicit weight constructions: hyperplane
//! bundles solved through the output layer for three-layer nets, and
//! group-isolating recursive partitions for deep nets.

pub mod affine;
pub mod arrangement;
pub mod bundles;
pub mod config;
pub mod deep;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod network;
pub mod ordering;
pub mod par;
pub mod pwl;
pub mod randmat;
pub mod report;
pub mod shallow;

pub use config::{BundleConfig, Config, Tolerances};
pub use error::{Error, Result};
pub use geometry::{point, AffineMap, Hyperplane, Point};
pub use network::{Activation, ActivationPattern, Layer, Network, Sign};
pub use par::Execution;
pub use pwl::{DiscretePwl, Subdomain};
