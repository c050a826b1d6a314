//! Free scalar field generating functional on positive-time Gaussian test
//! functions, and the checks built on it.

use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector3, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const TWO_PI: f64 = std::f64::consts::TAU;

/// `A exp(-(x-c)^T S^{-1} (x-c)/2 + i q.x)` on Euclidean space `(tau, x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    center: Vector4<f64>,
    covariance: Matrix4<f64>,
    amplitude: Complex64,
    modulation: Vector4<f64>,
}

impl TestFunction {
    pub fn new(
        center: Vector4<f64>,
        covariance: Matrix4<f64>,
        amplitude: Complex64,
        modulation: Vector4<f64>,
    ) -> Result<Self> {
        let sym = (covariance - covariance.transpose()).norm();
        if sym > 1e-12 * covariance.norm() {
            return Err(invalid("covariance", "must be symmetric"));
        }
        if covariance.cholesky().is_none() {
            return Err(invalid("covariance", "widths must be positive"));
        }
        if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
            return Err(invalid("amplitude", "must be finite"));
        }
        Ok(Self {
            center,
            covariance,
            amplitude,
            modulation,
        })
    }

    /// Axis-aligned Gaussian with time width `sigma_tau` and spatial width `sigma_x`.
    pub fn gaussian(center: [f64; 4], sigma_tau: f64, sigma_x: f64, amplitude: Complex64) -> Result<Self> {
        if !(sigma_tau > 0.0 && sigma_x > 0.0) {
            return Err(invalid("widths", "must be positive"));
        }
        let cov = Matrix4::from_diagonal(&Vector4::new(
            sigma_tau * sigma_tau,
            sigma_x * sigma_x,
            sigma_x * sigma_x,
            sigma_x * sigma_x,
        ));
        Self::new(Vector4::from(center), cov, amplitude, Vector4::zeros())
    }

    pub fn with_modulation(mut self, q: [f64; 4]) -> Self {
        self.modulation = Vector4::from(q);
        self
    }

    pub fn center(&self) -> &Vector4<f64> {
        &self.center
    }

    pub fn covariance(&self) -> &Matrix4<f64> {
        &self.covariance
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn modulation(&self) -> &Vector4<f64> {
        &self.modulation
    }

    /// Marginal width along Euclidean time.
    pub fn sigma_tau(&self) -> f64 {
        self.covariance[(0, 0)].sqrt()
    }

    /// `tau_c >= 5 sigma_tau`.
    pub fn check_positive_time(&self) -> Result<()> {
        let sigma_tau = self.sigma_tau();
        if self.center[0] < 5.0 * sigma_tau {
            return Err(Error::NotPositiveTime {
                tau_c: self.center[0],
                sigma_tau,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut f = self.clone();
        f.amplitude *= c;
        f
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut f = self.clone();
        f.amplitude = f.amplitude.conj();
        f.modulation = -f.modulation;
        f
    }

    /// `(Theta f)(tau, x) = f(-tau, x)`.
    pub fn time_reflected(&self) -> Self {
        let r = Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0));
        Self {
            center: r * self.center,
            covariance: r * self.covariance * r,
            amplitude: self.amplitude,
            modulation: r * self.modulation,
        }
    }

    pub fn eval(&self, x: &Vector4<f64>) -> Complex64 {
        let d = x - self.center;
        let inv = self.covariance.try_inverse().expect("covariance is positive definite");
        let quad = (d.transpose() * inv * d)[0];
        self.amplitude * (Complex64::new(-0.5 * quad, 0.0) + I * self.modulation.dot(x)).exp()
    }

    /// `f~(p) = int d^4x exp(-i p.x) f(x)`.
    pub fn fourier(&self, p: &Vector4<f64>) -> Complex64 {
        let d = p - self.modulation;
        let quad = (d.transpose() * self.covariance * d)[0];
        let det = self.covariance.determinant();
        self.amplitude * TWO_PI * TWO_PI * det.sqrt() * (Complex64::new(-0.5 * quad, 0.0) - I * d.dot(&self.center)).exp()
    }
}

/// Euclidean motion `x -> O x + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanMotion {
    rotation: Matrix4<f64>,
    translation: Vector4<f64>,
}

impl EuclideanMotion {
    pub fn new(rotation: Matrix4<f64>, translation: Vector4<f64>) -> Result<Self> {
        let dev = (rotation.transpose() * rotation - Matrix4::identity()).norm();
        if !(dev <= 1e-12) {
            return Err(Error::NotOrthogonal(dev));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn translation(a: [f64; 4]) -> Self {
        Self {
            rotation: Matrix4::identity(),
            translation: Vector4::from(a),
        }
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane.
    pub fn plane_rotation(i: usize, j: usize, angle: f64) -> Result<Self> {
        if i >= 4 || j >= 4 || i == j {
            return Err(invalid("plane", "need two distinct axes in 0..4"));
        }
        let mut r = Matrix4::identity();
        let (s, c) = angle.sin_cos();
        r[(i, i)] = c;
        r[(j, j)] = c;
        r[(i, j)] = -s;
        r[(j, i)] = s;
        Self::new(r, Vector4::zeros())
    }

    pub fn rotation(&self) -> &Matrix4<f64> {
        &self.rotation
    }

    pub fn shift(&self) -> &Vector4<f64> {
        &self.translation
    }

    /// `f_{O,a}(x) = f(O^T (x - a))`.
    pub fn apply(&self, f: &TestFunction) -> TestFunction {
        let o = &self.rotation;
        let q = o * f.modulation;
        TestFunction {
            center: o * f.center + self.translation,
            covariance: o * f.covariance * o.transpose(),
            amplitude: f.amplitude * (-I * q.dot(&self.translation)).exp(),
            modulation: q,
        }
    }
}

/// Momentum-space kernel `1/(p^2+m^2) (1 + eps p^4/(p^2+m^2)^2)`; `eps = 0` is the free field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceKernel {
    pub mass: f64,
    pub epsilon: f64,
}

impl CovarianceKernel {
    pub fn free(mass: f64) -> Result<Self> {
        Self::perturbed(mass, 0.0)
    }

    pub fn perturbed(mass: f64, epsilon: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid("mass", format!("must be positive, got {mass}")));
        }
        if !epsilon.is_finite() {
            return Err(invalid("epsilon", "must be finite"));
        }
        Ok(Self { mass, epsilon })
    }

    pub fn momentum_space(&self, p2: f64) -> f64 {
        let d = p2 + self.mass * self.mass;
        (1.0 + self.epsilon * p2 * p2 / (d * d)) / d
    }

    /// Weight `w(s)` with kernel `= int_0^inf w(s) exp(-s p^2) ds`.
    pub fn schwinger_weight(&self, s: f64) -> f64 {
        let m2 = self.mass * self.mass;
        let e = self.epsilon;
        (-s * m2).exp() * ((1.0 + e) - 2.0 * e * m2 * s + 0.5 * e * m2 * m2 * s * s)
    }
}

/// Symmetric bilinear form `int d^4p/(2pi)^4 f~(-p) g~(p) C(p)`.
pub fn bilinear_pairing(f: &TestFunction, g: &TestFunction, kernel: &CovarianceKernel) -> Result<Complex64> {
    let sum = f.covariance + g.covariance;
    let eig = SymmetricEigen::new(sum);
    let mu = eig.eigenvalues;
    let v = eig.eigenvectors;
    let cf = f.center.map(|x| Complex64::new(x, 0.0));
    let cg = g.center.map(|x| Complex64::new(x, 0.0));
    let lin_f = -(f.covariance * f.modulation);
    let lin_g = g.covariance * g.modulation;
    let b: Vector4<Complex64> = (lin_f + lin_g).map(|x| Complex64::new(x, 0.0)) + (cf - cg) * I;
    let c0 = Complex64::new(
        -0.5 * f.modulation.dot(&(f.covariance * f.modulation)) - 0.5 * g.modulation.dot(&(g.covariance * g.modulation)),
        f.modulation.dot(&f.center) + g.modulation.dot(&g.center),
    );
    let bp: Vec<Complex64> = (0..4)
        .map(|i| (0..4).map(|k| b[k] * v[(k, i)]).sum::<Complex64>())
        .collect();
    let bsq: Vec<Complex64> = bp.iter().map(|z| z * z).collect();
    let pref = f.amplitude * g.amplitude * TWO_PI * TWO_PI * (f.covariance.determinant() * g.covariance.determinant()).sqrt();

    let integrand = |u: f64| -> Complex64 {
        let s = u.exp();
        let mut det = 1.0;
        let mut expo = c0;
        for i in 0..4 {
            let d = mu[i] + 2.0 * s;
            det *= d;
            expo += 0.5 * bsq[i] / d;
        }
        s * kernel.schwinger_weight(s) / det.sqrt() * expo.exp()
    };
    let m2 = kernel.mass * kernel.mass;
    let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let u_lo = (1e-14 * mu_min.min(1.0 / m2)).ln();
    let u_hi = (90.0 / m2).ln();
    let value = trapezoid(integrand, u_lo, u_hi)?;
    Ok(pref * value)
}

fn trapezoid<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64) -> Result<Complex64> {
    let mut n = 64usize;
    let mut h = (b - a) / n as f64;
    let fa = f(a);
    let fb = f(b);
    let mut sum = 0.5 * (fa + fb);
    let mut l1 = 0.5 * (fa.norm() + fb.norm());
    for j in 1..n {
        let v = f(a + j as f64 * h);
        sum += v;
        l1 += v.norm();
    }
    let mut prev = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        for j in 0..n {
            let v = f(a + (2 * j + 1) as f64 * h);
            sum += v;
            l1 += v.norm();
        }
        n *= 2;
        let cur = sum * h;
        let scale = l1 * h;
        if (cur - prev).norm() <= 1e-14 * scale {
            let edge = fa.norm().max(fb.norm());
            if edge > 1e-10 * scale / (b - a) {
                return Err(Error::QuadratureNonConvergence(format!(
                    "Schwinger integrand not negligible at the range ends ({edge:e})"
                )));
            }
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence(
        "Schwinger trapezoid rule did not converge".into(),
    ))
}

/// `<f, C g> = int d^4p/(2pi)^4 conj(f~(p)) g~(p) C(p)`.
pub fn covariance_pairing(f: &TestFunction, g: &TestFunction, kernel: &CovarianceKernel) -> Result<Complex64> {
    bilinear_pairing(&f.conj(), g, kernel)
}

/// `Z[f] = exp(-B(f, f)/2)` for a source given as a sum of test functions.
pub fn generating_functional(source: &[TestFunction], kernel: &CovarianceKernel) -> Result<Complex64> {
    let mut quad = Complex64::new(0.0, 0.0);
    for (i, f) in source.iter().enumerate() {
        quad += bilinear_pairing(f, f, kernel)?;
        for g in &source[i + 1..] {
            quad += 2.0 * bilinear_pairing(f, g, kernel)?;
        }
    }
    Ok((-0.5 * quad).exp())
}

/// Free-field `Z[f]` with field mass `mass`.
pub fn z_free(source: &[TestFunction], mass: f64) -> Result<Complex64> {
    generating_functional(source, &CovarianceKernel::free(mass)?)
}

/// `Z[g - Theta f*]`, the pairing of exponential vectors `e^{i phi(f)}`, `e^{i phi(g)}`.
pub fn reflected_pairing(f: &TestFunction, g: &TestFunction, kernel: &CovarianceKernel) -> Result<Complex64> {
    let rf = f.conj().time_reflected().scaled(Complex64::new(-1.0, 0.0));
    generating_functional(&[g.clone(), rf], kernel)
}

/// Reflection-positivity matrix `M_ij = Z[f_j - Theta f_i*]`.
pub fn gram_matrix(functions: &[TestFunction], kernel: &CovarianceKernel) -> Result<DMatrix<Complex64>> {
    for f in functions {
        f.check_positive_time()?;
    }
    let n = functions.len();
    let entries: Vec<Result<Complex64>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            reflected_pairing(&functions[i], &functions[j], kernel)
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (idx, e) in entries.into_iter().enumerate() {
        m[(idx / n, idx % n)] = e?;
    }
    Ok(m)
}

/// `M_ij = Z[f_j - f_i*]`, positive semi-definite for any Gaussian measure.
pub fn difference_matrix(functions: &[TestFunction], kernel: &CovarianceKernel) -> Result<DMatrix<Complex64>> {
    let n = functions.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let fi = functions[i].conj().scaled(Complex64::new(-1.0, 0.0));
        for j in 0..n {
            m[(i, j)] = generating_functional(&[functions[j].clone(), fi.clone()], kernel)?;
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of the Hermitian part of `m` and whether it is `>= -tol`.
pub fn check_psd(m: &DMatrix<Complex64>, tol: f64) -> (f64, bool) {
    if m.is_empty() {
        return (0.0, true);
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    (min, min >= -tol)
}

/// `B = sum_j b_j exp(i phi(f_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialVector {
    terms: Vec<(Complex64, TestFunction)>,
}

impl ExponentialVector {
    pub fn new(terms: Vec<(Complex64, TestFunction)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("terms", "need at least one term"));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(Complex64, TestFunction)] {
        &self.terms
    }
}

/// `<B|C> = sum_j sum_k conj(b_j) c_k Z[g_k - Theta f_j*]`.
pub fn inner_product(b: &ExponentialVector, c: &ExponentialVector, kernel: &CovarianceKernel) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for (bj, fj) in &b.terms {
        fj.check_positive_time()?;
        for (ck, gk) in &c.terms {
            gk.check_positive_time()?;
            total += bj.conj() * ck * reflected_pairing(fj, gk, kernel)?;
        }
    }
    Ok(total)
}

/// `|Z[f] - Z[f_{O,a}]|`.
pub fn invariance_check(source: &[TestFunction], motion: &EuclideanMotion, kernel: &CovarianceKernel) -> Result<f64> {
    let moved: Vec<TestFunction> = source.iter().map(|f| motion.apply(f)).collect();
    let z0 = generating_functional(source, kernel)?;
    let z1 = generating_functional(&moved, kernel)?;
    Ok((z0 - z1).norm())
}

/// Cluster deviation at one spatial separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterPoint {
    pub separation: f64,
    pub deviation: f64,
}

/// `|Z[f + g_a] - Z[f] Z[g]|` for `a = s (0, n)` along the ladder `s`.
pub fn cluster_check(
    f: &[TestFunction],
    g: &[TestFunction],
    ladder: &[f64],
    direction: Vector3<f64>,
    kernel: &CovarianceKernel,
) -> Result<Vec<ClusterPoint>> {
    let norm = direction.norm();
    if !(norm > 0.0) {
        return Err(invalid("direction", "must be non-zero"));
    }
    let n = direction / norm;
    let base = generating_functional(f, kernel)? * generating_functional(g, kernel)?;
    ladder
        .iter()
        .map(|&s| {
            let shift = EuclideanMotion::translation([0.0, s * n[0], s * n[1], s * n[2]]);
            let mut joint = f.to_vec();
            joint.extend(g.iter().map(|h| shift.apply(h)));
            let z = generating_functional(&joint, kernel)?;
            Ok(ClusterPoint {
                separation: s,
                deviation: (z - base).norm(),
            })
        })
        .collect()
}

/// Least-squares slope of `ln(deviation)` against separation.
pub fn log_slope(points: &[ClusterPoint]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.separation).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.deviation.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
