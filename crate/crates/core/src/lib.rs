//! Photon-number statistics of itinerant microwave fields: thermal, coherent and
//! shot-noise states, their detection through a dispersively coupled qubit
//! and through a dual-path heterodyne setup, and the calibration fits.
//!
//! The physics is generic over [`Real`] (f32/f64). The photon-number
//! polynomials in [`chains`] only need [`Scalar`] and also run on exact
//! rationals. Concrete f64 and f32 aliases live at the crate root.

// `!(x > 0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cavity;
pub mod chains;
pub mod constants;
pub mod dualpath;
pub mod error;
pub mod quadrature;
pub mod qubit;
pub mod random;
pub mod scalar;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};
pub use states::{MomentOrdering, StateKind};

pub type ModeSpec = states::ModeSpec<f64>;
pub type MicrowaveState = states::MicrowaveState<f64>;
pub type MomentSet = states::MomentSet<f64>;
pub type Resonator = cavity::Resonator<f64>;
pub type Correlator = cavity::Correlator<f64>;
pub type QubitParams = qubit::QubitParams<f64>;
pub type DispersiveSystem = qubit::DispersiveSystem<f64>;
pub type BeamSplitterStage = chains::BeamSplitterStage<f64>;
pub type JpaStage = chains::JpaStage<f64>;
pub type LinearChain = chains::LinearChain<f64>;
pub type DetectionRecord = dualpath::DetectionRecord<f64>;

pub type ModeSpec32 = states::ModeSpec<f32>;
pub type MicrowaveState32 = states::MicrowaveState<f32>;
pub type MomentSet32 = states::MomentSet<f32>;
pub type Resonator32 = cavity::Resonator<f32>;
pub type DispersiveSystem32 = qubit::DispersiveSystem<f32>;
pub type JpaStage32 = chains::JpaStage<f32>;
