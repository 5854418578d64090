//! Adiabatic transition probabilities of a driven two-level system whose
//! Hamiltonian commutes with its coupling to a bosonic reservoir.
//!
//! The crate computes the same transition probability four ways: the free
//! adiabatic kernel, the leading-order formula with the reservoir correction,
//! the exact first Dyson term, and a brute-force truncated Fock simulation.

pub mod config;
pub mod dyson;
pub mod error;
pub mod quadrature;
pub mod reservoir;
pub mod scan;
pub mod kato;
pub mod oracle;
pub mod phases;
pub mod system;

pub use error::{LabError, Result};
pub use system::{make_smoothstep_profile, AssumptionReport, DriveProfile, Poly, SpectralData, TwoLevelSystem};
pub use kato::{kato_generator, p_free, transport, KatoTransport, TransportOptions};
pub use reservoir::{A4Report, Dispersion, ReservoirModel};
pub use phases::{phi12, MomentTable, PhaseKernels, RowKernels};
pub use dyson::{
    classify_regime, dyson1_exact, dyson3_magnitude, leading_order, theorem_residual, DysonOptions, ErrorExponents, Regime,
    RegimeThresholds, TransitionReport, effective_m,
};
pub use oracle::{discretize, evolve, OracleConfig, OracleResult};
pub use config::Config;
pub use scan::{evaluate, run_scan, write_csv, LamRule, Routes, ScanPoint, ScanRow, ScanSpec};
