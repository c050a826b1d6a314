//! Gauss-Legendre rules, composite panels and an adaptive Gauss-Kronrod
//! integrator for complex integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule over consecutive panels `[b_i, b_{i+1}]`.
pub fn composite_rule(breaks: &[f64], nodes_per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(nodes_per_panel);
    let mut nodes = Vec::with_capacity((breaks.len().saturating_sub(1)) * nodes_per_panel);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod step: `(value, error estimate, roundoff floor)`.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [Complex64::default(); 15];
    fv[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    let mut kron = fv[7] * WGK[7];
    let mut gauss = fv[7] * WG[3];
    let mut resabs = fv[7].norm() * WGK[7];
    for j in 0..7 {
        let s = fv[j] + fv[14 - j];
        kron += s * WGK[j];
        resabs += WGK[j] * (fv[j].norm() + fv[14 - j].norm());
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut resasc = WGK[7] * (fv[7] - mean).norm();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).norm() + (fv[14 - j] - mean).norm());
    }
    let h = h.abs();
    let (resabs, resasc) = (resabs * h, resasc * h);
    let mut err = ((kron - gauss) * h).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    (kron * (0.5 * (b - a)), err.max(floor), floor)
}

/// Adaptive 7/15-point Gauss-Kronrod integration of a complex integrand.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive_gk<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut leaves: Vec<(f64, f64, Complex64, f64, f64)> = Vec::new();
    let (v, e, r) = gk15(&f, a, b);
    leaves.push((a, b, v, e, r));
    for _ in 0..MAX_SUBDIVISIONS {
        let total: Complex64 = leaves.iter().map(|l| l.2).sum();
        let err: f64 = leaves.iter().map(|l| l.3).sum();
        let floor: f64 = leaves.iter().map(|l| l.4).sum();
        if err <= abs_tol.max(rel_tol * total.norm()).max(floor) {
            return Ok(total);
        }
        let (worst, _) = leaves
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _, _) = leaves.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval exhausted at machine resolution; keep what we have
            let total: Complex64 = leaves.iter().map(|l| l.2).sum::<Complex64>() + gk15(&f, lo, hi).0;
            return Ok(total);
        }
        let (v1, e1, r1) = gk15(&f, lo, mid);
        let (v2, e2, r2) = gk15(&f, mid, hi);
        leaves.push((lo, mid, v1, e1, r1));
        leaves.push((mid, hi, v2, e2, r2));
    }
    Err(Error::QuadratureNonConvergence(format!(
        "adaptive rule on [{a}, {b}] exceeded {MAX_SUBDIVISIONS} subdivisions"
    )))
}

const MAX_SUBDIVISIONS: usize = 2000;

/// Adaptive integration of a real integrand.
pub fn adaptive_gk_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    adaptive_gk(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 12, 24, 40] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn legendre_nodes_ascend() {
        let (x, _) = gauss_legendre(31);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(x[15], 0.0);
    }

    #[test]
    fn gk_handles_peaked_integrand() {
        let eps = 1e-4;
        let v = adaptive_gk_real(|x| eps / (x * x + eps * eps), -1.0, 1.0, 0.0, 1e-13).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn composite_matches_analytic() {
        let breaks = [0.0, 0.5, 1.5, 3.0, 6.0];
        let (x, w) = composite_rule(&breaks, 20);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x * (-x * x).exp()).sum();
        let exact = 0.25 * std::f64::consts::PI.sqrt();
        // tail beyond 6 is ~e^-36
        assert!((q - exact).abs() < 1e-13);
    }
}
