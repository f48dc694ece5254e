//! Cryogenic microwave multiplexer and resonator-characterisation toolkit.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the common `f64` instantiations. The measurement-chain simulator is `f64` only.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod fitkit;
pub mod lossbudget;
pub mod muxsim;
pub mod resonator;
pub mod rfnet;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FrequencyGridF64 = rfnet::FrequencyGrid<f64>;
pub type FrequencyGridF32 = rfnet::FrequencyGrid<f32>;
pub type AbcdMatrixF64 = rfnet::AbcdMatrix<f64>;
pub type SMatrixF64 = rfnet::SMatrix<f64>;
pub type SMatrixF32 = rfnet::SMatrix<f32>;
pub type MuxConfigF64 = muxsim::MuxConfig<f64>;
pub type MuxConfigF32 = muxsim::MuxConfig<f32>;
pub type PowerTableF64 = muxsim::PowerTable<f64>;
pub type CavityLerSystemF64 = resonator::CavityLerSystem<f64>;
pub type PurcellRatesF64 = resonator::PurcellRates<f64>;
pub type LorentzianParamsF64 = resonator::LorentzianParams<f64>;
pub type LossComponentF64 = lossbudget::LossComponent<f64>;
pub type TlsModelF64 = lossbudget::TlsModel<f64>;
pub type ComplexTraceF64 = fitkit::ComplexTrace<f64>;
pub type PowerSweepPointF64 = fitkit::PowerSweepPoint<f64>;
pub type StarkContextF64 = fitkit::StarkContext<f64>;
pub type SpectrumFitF64 = fitkit::FitResult<f64, resonator::LorentzianParams<f64>>;
pub type PowerSweepFitF64 = fitkit::FitResult<f64, lossbudget::TlsModel<f64>>;
