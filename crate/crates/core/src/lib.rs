//! Analytic click-probability engine, security analysis and time-bin Monte-Carlo
//! for a polarisation-encoded quantum-illumination LIDAR under intercept-resend spoofing.

pub mod coincidence;
pub mod config;
pub mod detection;
pub mod error;
pub mod fock;
pub mod mc;
pub mod report;
pub mod scalar;
pub mod security;
pub mod stats;

pub use coincidence::{CoincidenceTriple, Contributions, Delays, IntrusionParams, Scenario};
pub use detection::{IdlerResult, OutcomeDistribution};
pub use error::{Error, Result};
pub use fock::{Basis, ComponentModel, ComponentSet, Mode, Numerics, Pol, Port, SeriesPolicy, SourceBb84, SourceQi};
pub use scalar::Real;

pub type Scenario64 = Scenario<f64>;
pub type Scenario32 = Scenario<f32>;
pub type SourceQi64 = SourceQi<f64>;
pub type SourceQi32 = SourceQi<f32>;
pub type SourceBb84F64 = SourceBb84<f64>;
pub type Port64 = Port<f64>;
pub type Port32 = Port<f32>;
pub type ComponentSet64 = ComponentSet<f64>;
pub type OutcomeDistribution64 = OutcomeDistribution<f64>;
pub type OutcomeDistribution32 = OutcomeDistribution<f32>;
pub type CoincidenceTriple64 = CoincidenceTriple<f64>;
pub type CoincidenceTriple32 = CoincidenceTriple<f32>;
