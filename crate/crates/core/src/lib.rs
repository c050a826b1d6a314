//! Relativistic two-nucleon scattering from contractive semigroups, with an
//! analytic reference solution and free-field Euclidean checks.

pub mod chebyshev;
pub mod error;
pub mod euclid;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod wavepacket;

pub use nalgebra::{DMatrix, DVector, Matrix4, Vector3, Vector4};
pub use num_complex::Complex64;

pub use chebyshev::{
    auto_iterations, cheb_apply_operator, cheb_coeffs, cheb_eval_scalar, default_beta, default_degree,
    percent_error, s_matrix_iterated, s_matrix_spectral, semigroup_slope, ChebyshevSeries, SemigroupPair,
};
pub use error::{Error, Result};
pub use euclid::{
    bilinear_pairing, check_psd, cluster_check, covariance_pairing, difference_matrix, generating_functional,
    gram_matrix, inner_product, invariance_check, log_slope, reflected_pairing, z_free, ClusterPoint,
    CovarianceKernel, EuclideanMotion, ExponentialVector, TestFunction,
};
pub use grid::{GridSpec, MomentumGrid};
pub use model::{
    coupling_residual, coupling_rule, form_factor, free_semigroup, mass_squared_matrix, reduced_form_factor,
    semigroup, solve_coupling, spectral_decompose, ModelParams, PhysicalConstants, SeparableModel,
    SpectralDecomposition,
};
pub use oracle::{ExactOracle, OnShellPoint, PvRule};
pub use wavepacket::{
    delta_overlap, energy_overlap, extract_sharp_t, make_packet, oracle_extraction, tune_width, Extraction,
    GaussianPacket, PacketProfile,
};
