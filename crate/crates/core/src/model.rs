//! The separable two-nucleon mass-squared operator and its spectral data.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::grid::MomentumGrid;

const FOUR_PI_SQRT: f64 = 3.544_907_701_811_032;

/// Physical constants of the model, all in GeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub nucleon_mass: f64,
    pub form_factor_mass: f64,
    pub binding_energy: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            nucleon_mass: 0.9383,
            form_factor_mass: 0.1396,
            binding_energy: 0.0022246,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nucleon_mass", self.nucleon_mass),
            ("form_factor_mass", self.form_factor_mass),
            ("binding_energy", self.binding_energy),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.binding_energy >= 2.0 * self.nucleon_mass {
            return Err(invalid("binding_energy", "bound state must have positive mass"));
        }
        Ok(())
    }

    /// `M_d = 2m - B_d`.
    pub fn bound_mass(&self) -> f64 {
        2.0 * self.nucleon_mass - self.binding_energy
    }

    /// Lower edge `4m^2` of the continuous spectrum of `M^2`.
    pub fn threshold(&self) -> f64 {
        4.0 * self.nucleon_mass * self.nucleon_mass
    }

    /// Free mass squared `4(k^2 + m^2)`.
    pub fn free_energy(&self, k: f64) -> f64 {
        4.0 * (k * k + self.nucleon_mass * self.nucleon_mass)
    }

    /// On-shell momentum of a mass-squared value above threshold.
    pub fn on_shell_momentum(&self, e: f64) -> f64 {
        (0.25 * e - self.nucleon_mass * self.nucleon_mass).max(0.0).sqrt()
    }
}

/// Constants together with the coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub constants: PhysicalConstants,
    pub lambda: f64,
}

impl ModelParams {
    /// `lambda = 0` is accepted and gives the free theory.
    pub fn new(constants: PhysicalConstants, lambda: f64) -> Result<Self> {
        constants.validate()?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", format!("must be non-negative, got {lambda}")));
        }
        Ok(Self { constants, lambda })
    }

    /// Coupling tuned to the bound-state mass on a half-line rule.
    pub fn tuned(constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        let rule = coupling_rule(&constants)?;
        let lambda = solve_coupling(&constants, &rule)?;
        Self::new(constants, lambda)
    }

    pub fn m(&self) -> f64 {
        self.constants.nucleon_mass
    }

    pub fn m_pi(&self) -> f64 {
        self.constants.form_factor_mass
    }

    pub fn bound_mass(&self) -> f64 {
        self.constants.bound_mass()
    }
}

/// Half-line quadrature that resolves the bound-state condition to machine precision.
pub fn coupling_rule(constants: &PhysicalConstants) -> Result<MomentumGrid> {
    let a = constants.form_factor_mass;
    MomentumGrid::half_line(a, 64.0 * a.max(constants.nucleon_mass), 24)
}

fn check_momentum(k: f64) -> Result<()> {
    if k < 0.0 || k.is_nan() {
        return Err(Error::NegativeMomentum(k));
    }
    Ok(())
}

/// `g(k) = 1/(m_pi^2 + k^2)`.
pub fn form_factor(k: f64, constants: &PhysicalConstants) -> Result<f64> {
    check_momentum(k)?;
    let a = constants.form_factor_mass;
    Ok(1.0 / (a * a + k * k))
}

/// Radial form factor `g0(k) = sqrt(4 pi) k g(k)`.
pub fn reduced_form_factor(k: f64, constants: &PhysicalConstants) -> Result<f64> {
    Ok(FOUR_PI_SQRT * k * form_factor(k, constants)?)
}

pub(crate) fn g0(k: f64, a: f64) -> f64 {
    FOUR_PI_SQRT * k / (a * a + k * k)
}

/// Coupling `lambda` with `lambda * sum_i w_i g0(k_i)^2 / (4(k_i^2+m^2) - M_d^2) = 1`.
pub fn solve_coupling(constants: &PhysicalConstants, grid: &MomentumGrid) -> Result<f64> {
    constants.validate()?;
    let md2 = constants.bound_mass().powi(2);
    let a = constants.form_factor_mass;
    let sum = coupling_sum(grid, a, |k| constants.free_energy(k) - md2);
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::NonPositiveCoupling(sum));
    }
    Ok(1.0 / sum)
}

fn coupling_sum(grid: &MomentumGrid, a: f64, denom: impl Fn(f64) -> f64) -> f64 {
    // pairwise-compensated to keep the residual at the rounding level
    let mut sum = 0.0;
    let mut c = 0.0;
    for (k, w) in grid.nodes().iter().zip(grid.weights()) {
        let g = g0(*k, a);
        let y = w * g * g / denom(*k) - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Residual `1 - lambda * sum` of the bound-state condition on a grid.
pub fn coupling_residual(params: &ModelParams, grid: &MomentumGrid) -> f64 {
    let md2 = params.bound_mass().powi(2);
    let c = params.constants;
    1.0 - params.lambda * coupling_sum(grid, c.form_factor_mass, |k| c.free_energy(k) - md2)
}

/// `A_ij = delta_ij 4(k_i^2+m^2) - lambda sqrt(w_i w_j) g0(k_i) g0(k_j)`.
pub fn mass_squared_matrix(grid: &MomentumGrid, params: &ModelParams) -> DMatrix<f64> {
    let n = grid.len();
    let a = params.m_pi();
    let v: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .map(|(k, w)| w.sqrt() * g0(*k, a))
        .collect();
    let mut m = DMatrix::from_fn(n, n, |i, j| -params.lambda * (v[i] * v[j]));
    for (i, k) in grid.nodes().iter().enumerate() {
        m[(i, i)] += params.constants.free_energy(*k);
    }
    m
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn spectral_decompose(a: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(invalid("matrix", "must be square"));
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or(Error::EigenNonConvergence(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if !eigenvalues.iter().all(|x| x.is_finite()) {
        return Err(Error::EigenNonConvergence(n));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `U diag(f(d_i)) U^T`.
    pub fn apply_function<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, d) in self.eigenvalues.iter().enumerate() {
            let s = f(*d);
            scaled.column_mut(j).scale_mut(s);
        }
        let mut out = &scaled * u.transpose();
        symmetrize(&mut out);
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply_function(|d| d)
    }

    fn check_positive(&self) -> Result<()> {
        match self.eigenvalues.iter().copied().find(|d| !(*d > 0.0)) {
            Some(d) => Err(Error::Tachyonic(d)),
            None => Ok(()),
        }
    }

    /// Mass operator `H = sqrt(M^2)`.
    pub fn mass_operator(&self) -> Result<DMatrix<f64>> {
        self.check_positive()?;
        Ok(self.apply_function(f64::sqrt))
    }

    /// `sqrt` of the lowest eigenvalue.
    pub fn lowest_mass(&self) -> Result<f64> {
        self.check_positive()?;
        Ok(self.eigenvalues[0].sqrt())
    }

    /// Eigenvalues of `exp(-beta H)`.
    pub fn semigroup_spectrum(&self, beta: f64) -> Result<Vec<f64>> {
        self.check_positive()?;
        check_beta(beta)?;
        Ok(self.eigenvalues.iter().map(|d| (-beta * d.sqrt()).exp()).collect())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

/// `exp(-beta H) = U diag(exp(-beta sqrt(d_i))) U^T`. `beta = 0` returns the identity.
pub fn semigroup(decomp: &SpectralDecomposition, beta: f64) -> Result<DMatrix<f64>> {
    decomp.check_positive()?;
    check_beta(beta)?;
    if beta == 0.0 {
        return Ok(DMatrix::identity(decomp.len(), decomp.len()));
    }
    Ok(decomp.apply_function(|d| (-beta * d.sqrt()).exp()))
}

/// Diagonal of the free semigroup `exp(-2 beta sqrt(k_i^2 + m^2))`.
pub fn free_semigroup(grid: &MomentumGrid, constants: &PhysicalConstants, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    Ok(grid
        .nodes()
        .iter()
        .map(|k| (-beta * constants.free_energy(*k).sqrt()).exp())
        .collect())
}

/// A discretized model: grid, parameters, `M^2` and its eigenpairs.
#[derive(Debug, Clone)]
pub struct SeparableModel {
    pub params: ModelParams,
    pub grid: MomentumGrid,
    pub mass_squared: DMatrix<f64>,
    pub spectrum: SpectralDecomposition,
}

impl SeparableModel {
    pub fn new(params: ModelParams, grid: MomentumGrid) -> Result<Self> {
        let mass_squared = mass_squared_matrix(&grid, &params);
        let spectrum = spectral_decompose(&mass_squared)?;
        spectrum.check_positive()?;
        Ok(Self {
            params,
            grid,
            mass_squared,
            spectrum,
        })
    }

    pub fn semigroup(&self, beta: f64) -> Result<DMatrix<f64>> {
        semigroup(&self.spectrum, beta)
    }

    pub fn free_semigroup(&self, beta: f64) -> Result<Vec<f64>> {
        free_semigroup(&self.grid, &self.params.constants, beta)
    }
}
