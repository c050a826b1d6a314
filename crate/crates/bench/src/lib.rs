//! Shared fixtures for the kernel benchmarks.

use erqm_core::{
    default_beta, make_packet, Complex64, GaussianPacket, GridSpec, ModelParams, MomentumGrid, PhysicalConstants,
    SemigroupPair, SeparableModel, TestFunction,
};

/// Tuned model, semigroup pair and packet at `k0 = 2`, `alpha = 135`.
pub fn scattering_fixture() -> (SemigroupPair, GaussianPacket) {
    let (k0, alpha) = (2.0, 135.0);
    let params = ModelParams::tuned(PhysicalConstants::default()).expect("default constants are valid");
    let grid = MomentumGrid::for_packet(k0, alpha, params.m_pi(), &GridSpec::default()).expect("grid");
    let model = SeparableModel::new(params, grid.clone()).expect("model");
    let f = make_packet(k0, alpha, &grid).expect("packet");
    let ops = SemigroupPair::from_model(&model, default_beta(k0, params.m())).expect("semigroups");
    (ops, f)
}

/// `n` admissible positive-time Gaussians on a fixed pattern.
pub fn test_functions(n: usize) -> Vec<TestFunction> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            TestFunction::gaussian(
                [2.0 + 0.2 * t, 0.3 * (t * 1.7).sin(), 0.2 * (t * 0.9).cos(), 0.1 * t],
                0.3,
                0.5 + 0.05 * t,
                Complex64::new(1.0 - 0.1 * t, 0.0),
            )
            .expect("widths are positive")
        })
        .collect()
}
