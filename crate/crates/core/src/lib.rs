//! Pulse-level simulation of liquid-state NMR quantum computing: Ising-coupled
//! spin systems, rotating-frame propagators, 2πk selective pulse design,
//! ensemble deviation density matrices and a four-qubit Shor demonstration.
//!
//! Units are angular frequencies with ħ = 1. Spin `k` counted from the left
//! is bit `N - 1 - k` of the basis index, bit value 0 is the ground state
//! `I^z = +1/2`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod pulse_design;
pub mod scalar;
pub mod shor;
pub mod spin_model;

pub use error::{Error, Result};
pub use scalar::Real;

pub use dynamics::{Evolution, EvolutionReport, IntegratorOptions, Method, Segment};
pub use ensemble::{ActiveBlock, DeviationDensityMatrix};
pub use linalg::CMatrix;
pub use pulse_design::{CnPulseOptions, CnVariant, GateMatrix, TwoPiKDesign};
pub use shor::{EnergyTable, PeriodEstimate, ShorMode, ShorRun, ShorSetup};
pub use spin_model::{DelaySpec, HamiltonianMatrix, PulseSpec, QuantumState, SpinSystem};

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;

pub type SpinSystem64 = SpinSystem<f64>;
pub type SpinSystem32 = SpinSystem<f32>;
pub type PulseSpec64 = PulseSpec<f64>;
pub type PulseSpec32 = PulseSpec<f32>;
pub type DelaySpec64 = DelaySpec<f64>;
pub type QuantumState64 = QuantumState<f64>;
pub type QuantumState32 = QuantumState<f32>;
pub type HamiltonianMatrix64 = HamiltonianMatrix<f64>;
pub type CMatrix64 = CMatrix<f64>;
pub type DeviationDensityMatrix64 = DeviationDensityMatrix<f64>;
pub type ActiveBlock64 = ActiveBlock<f64>;
pub type TwoPiKDesign64 = TwoPiKDesign<f64>;
pub type GateMatrix64 = GateMatrix<f64>;
pub type EnergyTable64 = EnergyTable<f64>;
pub type ShorSetup64 = ShorSetup<f64>;
