// `!(a < b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flux;
pub mod piecewise;
pub mod riemann;
pub mod fronttrack;
pub mod godunov;
pub mod filippov;
pub mod diagnostics;
pub mod scenario;

pub use diagnostics::{CheckRecord, Classification, EntropyPair, VerificationReport, Worst};
pub use error::{Error, Result};
pub use filippov::{FieldSource, FlowMap, ParticlePath, Selection, VelocityField};
pub use flux::{FluxEval, FluxFunction, FluxSpec, PiecewiseLinearFunction, Smoothness};
pub use fronttrack::{Front, FrontTrackOptions, FrontTrackSolution};
pub use godunov::{GodunovOptions, GridSolution};
pub use piecewise::PiecewiseConstant1D;
pub use riemann::{ParticleVelocity, RiemannFan, SlopeChoice, VelocityCase};
pub use scenario::{parse_config, run_scenario, ScenarioConfig};
