//! Channel model and closed-form phase design for a reconfigurable
//! intelligent surface carried by a fixed-wing high-altitude platform flying
//! a circular loiter.
//!
//! Every element follows its own circle around the loiter centre, so both
//! hops of each cascade path change with time. The crate evaluates the
//! two-hop Friis channel of every element, builds the reference-anchored
//! phase design that makes all paths add coherently with zero Doppler
//! spread, and scores it against the all-zero baseline.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, which the phase design needs.
//!
//! ```
//! use haps_ris::{metrics, phases, snapshot, Scenario, ScenarioConfig};
//!
//! let scenario = Scenario::new(ScenarioConfig::loiter_reference(2.0)).unwrap();
//! let snap = snapshot(&scenario, 10.0).unwrap();
//! let design = phases::proposed_phase(&snap, scenario.reference()).unwrap();
//! let gain = metrics::channel_gain(&snap, &design).unwrap();
//! assert!((gain / metrics::max_channel_gain(&snap) - 1.0).abs() < 1e-9);
//! ```

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod metrics;
pub mod oracle;
pub mod phases;
pub mod reduce;
pub mod scalar;

pub use channel::snapshot;
pub use error::{Error, Result};
pub use grid::{ElementIndex, Grid};
pub use phases::Strategy;
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type Scenario = geometry::Scenario<Real>;
pub type ScenarioConfig = geometry::ScenarioConfig<Real>;
pub type ElementKinematics = geometry::ElementKinematics<Real>;
pub type Position3 = geometry::Position3<Real>;
pub type ElementChannel = channel::ElementChannel<Real>;
pub type ChannelSnapshot<'a> = channel::ChannelSnapshot<'a, Real>;
pub type PhaseAssignment = phases::PhaseAssignment<Real>;
pub type ZetaTerms = phases::ZetaTerms<Real>;
pub type MetricsReport = metrics::MetricsReport<Real>;
pub type DopplerSpread = metrics::DopplerSpread<Real>;
pub type DiscreteSearchResult = oracle::DiscreteSearchResult<Real>;
