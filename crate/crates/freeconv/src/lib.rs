//! Analytic transform calculus for Boolean, free and classical stable laws.
//!
//! Probability measures are represented by analytic oracles for the
//! reciprocal Cauchy transform `F = 1/G` on the upper half-plane. On top of
//! that single representation the crate builds:
//!
//! * the transform layer (`G`, `F`, `K`, `psi`, `S`, Stieltjes inversion),
//! * closed-form Boolean/free/classical stable families,
//! * the four convolutions (Boolean, free additive, free multiplicative,
//!   classical multiplicative) with identity verifiers,
//! * free infinite-divisibility classification and numerical verification,
//! * complete-monotonicity checks for classical infinite divisibility,
//! * continuous Boolean convolutions (mixtures) of positive stable laws.
//!
//! Everything is pure: handles are cheap to clone, safe to share across
//! threads, and grid sweeps parallelize with rayon.

pub mod classical_id;
pub mod convolve;
pub mod divisibility;
pub mod jet;
pub mod mixture;
pub mod newton;
pub mod quadrature;
pub mod stable;
pub mod suites;
pub mod transform;
pub mod util;

pub use num_complex::Complex64;

pub use convolve::{
    boolean_convolve, boolean_power, classical_mult_convolve, free_convolve, free_mult_convolve,
    free_power, reciprocal_pushforward, reciprocal_pushforward_handle, verify_boolean_reproducing,
    verify_scaling_identity, ConvolutionResult, Method,
};
pub use divisibility::{
    belinschi_nica, branch_angles, classify_fid, indicator_probe, numeric_phi,
    ray_noninjectivity_witness, ui_boundary_diagnostic, verify_fid_numeric, BranchAngles,
    FidRule, FidVerdict,
};
pub use classical_id::{classical_id_verdict, cm_calculus_check, cm_check, CmFunction, CmReport};
pub use mixture::{mixture_density, mixture_handle, mixture_verify, MixtureSpec};
pub use stable::{
    boolean_stable_density, boolean_stable_handle, boolean_stable_k, classical_stable_density,
    classical_stable_laplace, free_stable_f, free_stable_handle, Family, StableLaw,
};
pub use transform::{
    cauchy_transform, dilate, boolean_shift, f_transform, k_transform, psi_transform,
    s_transform, stieltjes_invert, EpsSchedule, GriddedDensity, MeasureHandle, Support,
    TransformError,
};
