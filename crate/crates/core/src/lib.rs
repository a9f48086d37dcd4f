//! Rank-one deflation of positive semidefinite matrices by residual-weighted
//! projections.
//!
//! Starting from a PSD matrix `R0`, each step picks a unit direction `u` and
//! replaces the residual by `R^{1/2}(I - |u><u|)R^{1/2} = R - |E><E|` with
//! `E = R^{1/2} u`. The extracted vectors `E_n` reassemble what was removed,
//! `R0 - R_N = sum_{n<N} |E_n><E_n|`, and a chain that drives the residual to
//! zero yields a Parseval frame for `R0`.
//!
//! ```
//! use conedeflate::{run_chain, HermitianMatrix, StopReason, StopRule, ToleranceConfig};
//! use conedeflate::strategies::Greedy;
//!
//! let r0 = HermitianMatrix::from_diagonal(&[2.0, 1.0]);
//! let chain = run_chain(&r0, &mut Greedy, &StopRule::max_steps(10), &ToleranceConfig::default())?;
//! let e = chain.energies();
//! assert!((e[0] - 2.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
//! assert_eq!(chain.stop_reason, StopReason::ExactZero);
//! # Ok::<(), conedeflate::Error>(())
//! ```

pub mod dynamics;
pub mod error;
pub mod frames;
pub mod inverse;
pub mod io;
pub mod kernels;
pub mod psd;
pub mod random;
pub mod report;
pub mod strategies;

pub use dynamics::{
    energy_report, phi_update, quadratic_defect, run_chain, telescoping_defect,
    telescoping_profile, DirectionSource, EnergyReport, PhiStep, ResidualChain, ResidualState,
    StopReason, StopRule,
};
pub use error::{Error, Result};
pub use frames::{
    analysis_apply, completeness_check, frame_operator, parseval_defect, parsevalize,
    parsevalize_unchecked, reconstruct, FrameSystem, ParsevalFrame,
};
pub use inverse::{recover_directions, verify_chain, ChainInput, ChainWitness, InvalidReason, Verdict};
pub use kernels::{
    gram_matrix, kernel_feature_chain, kernel_reconstruction_error, FeatureTable, Kernel,
    KernelModel, Schedule,
};
pub use psd::{
    eig_hermitian, in_range_of_sqrt, loewner_leq, pinv_psd, sqrt_psd, support_projection, CMatrix,
    CVector, HermitianMatrix, PsdSpectrum, ToleranceConfig, C64,
};
pub use strategies::{StrategyConfig, StrategyKind};
