//! Chebyshev interpolation of `exp(i nu x)` on `[0, 1]` and its application
//! to contractive operators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::model::{SeparableModel, SpectralDecomposition};
use crate::wavepacket::GaussianPacket;

const DIRECT_LIMIT: usize = 2048;

/// Interpolant of `exp(i nu x)` through mapped first-kind Chebyshev nodes.
///
/// Evaluates as `c_0/2 + sum_{j>=1} c_j T_j(2x - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries {
    pub nu: f64,
    pub coeffs: Vec<Complex64>,
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: Complex64,
    comp: Complex64,
}

impl Compensated {
    fn add(&mut self, x: Complex64) {
        self.sum.re = two_sum(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, x.im, &mut self.comp.im);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn two_sum(s: f64, x: f64, comp: &mut f64) -> f64 {
    let t = s + x;
    if s.abs() >= x.abs() {
        *comp += (s - t) + x;
    } else {
        *comp += (x - t) + s;
    }
    t
}

/// Node `t_k = cos((2k+1) pi / (2M))`, written as a sine so the middle node is exactly 0.
fn chebyshev_node(k: usize, m: usize) -> f64 {
    let num = m as f64 - 2.0 * k as f64 - 1.0;
    (num * std::f64::consts::PI / (2.0 * m as f64)).sin()
}

/// `cos(r pi / (2M))` with `r` reduced exactly modulo `4M`.
fn cos_reduced(r: u64, m: usize) -> f64 {
    let period = 4 * m as u64;
    let r = r % period;
    // fold onto [0, M] using cos symmetries
    let (r, sign) = if r > 2 * m as u64 { (period - r, 1.0) } else { (r, 1.0) };
    let (r, sign) = if r > m as u64 { (2 * m as u64 - r, -sign) } else { (r, sign) };
    // cos(r pi/2M) = sin((M - r) pi / 2M)
    sign * (((m as u64 - r) as f64) * std::f64::consts::PI / (2.0 * m as f64)).sin()
}

/// Coefficients of the degree-`degree` interpolant of `exp(i nu x)`.
pub fn cheb_coeffs(nu: f64, degree: usize) -> ChebyshevSeries {
    let m = degree + 1;
    let samples: Vec<Complex64> = (0..m)
        .map(|k| {
            let x = 0.5 * (chebyshev_node(k, m) + 1.0);
            Complex64::from_polar(1.0, nu * x)
        })
        .collect();
    let scale = 2.0 / m as f64;
    let coeffs = if m <= DIRECT_LIMIT {
        (0..m)
            .map(|j| {
                let mut acc = Compensated::default();
                for (k, y) in samples.iter().enumerate() {
                    acc.add(y * cos_reduced(j as u64 * (2 * k as u64 + 1), m));
                }
                acc.value() * scale
            })
            .collect()
    } else {
        let mut buf: Vec<Complex64> = Vec::with_capacity(2 * m);
        buf.extend_from_slice(&samples);
        buf.extend(samples.iter().rev());
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(2 * m).process(&mut buf);
        (0..m)
            .map(|j| {
                let phase = Complex64::from_polar(
                    1.0,
                    -std::f64::consts::PI * j as f64 / (2.0 * m as f64),
                );
                0.5 * phase * buf[j] * scale
            })
            .collect()
    };
    ChebyshevSeries { nu, coeffs }
}

impl ChebyshevSeries {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Mapped interpolation nodes `x_k = (t_k + 1)/2`.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.coeffs.len();
        (0..m).map(|k| 0.5 * (chebyshev_node(k, m) + 1.0)).collect()
    }

    /// Largest `|c_j|` for `j >= from`.
    pub fn tail_max(&self, from: usize) -> f64 {
        self.coeffs.iter().skip(from).map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Clenshaw evaluation at `x` in `[0, 1]`.
pub fn cheb_eval_scalar(series: &ChebyshevSeries, x: f64) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { value: x });
    }
    let t = 2.0 * x - 1.0;
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for c in series.coeffs.iter().skip(1).rev() {
        let b0 = c + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    let c0 = series.coeffs.first().copied().unwrap_or_default();
    Ok(0.5 * c0 + t * b1 - b2)
}

/// Percent error `100 |p(x) - exp(i nu x)|` of the interpolant.
pub fn percent_error(nu: f64, degree: usize, x: f64) -> Result<f64> {
    let s = cheb_coeffs(nu, degree);
    let v = cheb_eval_scalar(&s, x)?;
    Ok(100.0 * (v - Complex64::from_polar(1.0, nu * x)).norm())
}

/// `sum' c_j T_j(2K - 1) psi` by the three-term recurrence.
///
/// `apply_k(input, output)` must write `K input` into `output`; nothing else
/// about `K` is used.
pub fn cheb_apply_operator<F>(series: &ChebyshevSeries, mut apply_k: F, psi: &[Complex64]) -> Result<Vec<Complex64>>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = psi.len();
    let c = &series.coeffs;
    let mut out: Vec<Complex64> = psi.iter().map(|p| 0.5 * c[0] * p).collect();
    if c.len() == 1 {
        return Ok(out);
    }
    let mut prev = psi.to_vec();
    let mut cur = vec![Complex64::default(); n];
    let mut kv = vec![Complex64::default(); n];
    apply_k(&prev, &mut kv);
    for i in 0..n {
        cur[i] = 2.0 * kv[i] - prev[i];
        out[i] += c[1] * cur[i];
    }
    for (j, cj) in c.iter().enumerate().skip(2) {
        apply_k(&cur, &mut kv);
        let mut finite = true;
        for i in 0..n {
            let next = 2.0 * (2.0 * kv[i] - cur[i]) - prev[i];
            prev[i] = cur[i];
            cur[i] = next;
            out[i] += cj * next;
            finite &= next.re.is_finite() && next.im.is_finite();
        }
        if !finite || (j % 64 == 0 && !norm_bounded(&cur, psi)) {
            return Err(Error::RecurrenceBlowUp { step: j });
        }
    }
    if !out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::RecurrenceBlowUp { step: c.len() - 1 });
    }
    Ok(out)
}

fn norm_bounded(v: &[Complex64], psi: &[Complex64]) -> bool {
    // |T_j(A)| <= 1 on [-1, 1]; growth far beyond the input norm means the spectrum escaped
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let np: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    nv <= 1e6 * np.max(f64::MIN_POSITIVE)
}

/// `beta = 1/(2 sqrt(k0^2 + m^2))`, so `beta` times the CM energy is one.
pub fn default_beta(k0: f64, nucleon_mass: f64) -> f64 {
    0.5 / (k0 * k0 + nucleon_mass * nucleon_mass).sqrt()
}

/// Default polynomial degree `nu + 100` for phase `nu`.
pub fn default_degree(nu: f64) -> usize {
    nu.ceil() as usize + 100
}

/// Derivative of `exp(-beta H0(k))` in `k`, `H0 = 2 sqrt(k^2 + m^2)`.
pub fn semigroup_slope(k: f64, nucleon_mass: f64, beta: f64) -> f64 {
    let e = (k * k + nucleon_mass * nucleon_mass).sqrt();
    beta * (-2.0 * beta * e).exp() * 2.0 * k / e
}

/// Iteration count at which the packet dephasing factor `exp(-(n s)^2 / (2 alpha))`
/// drops to `exp(-exponent)`, `s` the semigroup slope at `k0`.
pub fn auto_iterations(k0: f64, alpha: f64, nucleon_mass: f64, beta: f64, exponent: f64) -> usize {
    let s = semigroup_slope(k0, nucleon_mass, beta);
    ((2.0 * alpha * exponent).sqrt() / s).ceil() as usize
}

/// The two semigroups `exp(-beta H0)` (diagonal) and `exp(-beta H)` on a grid.
#[derive(Debug, Clone)]
pub struct SemigroupPair {
    pub beta: f64,
    pub free: Vec<f64>,
    pub full: DMatrix<f64>,
}

impl SemigroupPair {
    pub fn from_model(model: &SeparableModel, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(invalid("beta", "must be positive"));
        }
        Ok(Self {
            beta,
            free: model.free_semigroup(beta)?,
            full: model.semigroup(beta)?,
        })
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    /// Black-box application of `exp(-beta H)`, with owned scratch space.
    pub fn full_operator(&self) -> impl FnMut(&[Complex64], &mut [Complex64]) + '_ {
        let n = self.full.nrows();
        let mut x = DMatrix::<f64>::zeros(n, 2);
        let mut y = DMatrix::<f64>::zeros(n, 2);
        move |input: &[Complex64], output: &mut [Complex64]| {
            for (i, z) in input.iter().enumerate() {
                x[(i, 0)] = z.re;
                x[(i, 1)] = z.im;
            }
            self.full.mul_to(&x, &mut y);
            for (i, o) in output.iter_mut().enumerate() {
                *o = Complex64::new(y[(i, 0)], y[(i, 1)]);
            }
        }
    }
}

fn free_phase(free: &[f64], n: usize, v: &mut [Complex64]) {
    for (z, k) in v.iter_mut().zip(free) {
        *z *= Complex64::from_polar(1.0, -(n as f64) * k);
    }
}

fn packet_pair(f_out: &GaussianPacket, f_in: &GaussianPacket, size: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if f_out.grid() != f_in.grid() || f_in.len() != size {
        return Err(Error::GridMismatch);
    }
    Ok((f_out.weighted(), f_in.weighted()))
}

fn finish(bra: &[Complex64], ket: &[Complex64], f_out: &GaussianPacket, f_in: &GaussianPacket) -> Result<Complex64> {
    let value: Complex64 = bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum();
    let bound = f_out.norm() * f_in.norm() + 1e-8;
    if value.norm() > bound {
        return Err(Error::UnitarityViolation {
            value: value.norm(),
            bound,
        });
    }
    Ok(value)
}

/// `<f_out| e^{-in K0} e^{2in K} e^{-in K0} |f_in>` with the middle factor by
/// Chebyshev recurrence in `K = exp(-beta H)`.
pub fn s_matrix_iterated(
    n: usize,
    ops: &SemigroupPair,
    f_out: &GaussianPacket,
    f_in: &GaussianPacket,
    degree: usize,
) -> Result<Complex64> {
    let (bra, mut ket) = packet_pair(f_out, f_in, ops.len())?;
    free_phase(&ops.free, n, &mut ket);
    let series = cheb_coeffs(2.0 * n as f64, degree);
    let mut ket = cheb_apply_operator(&series, ops.full_operator(), &ket)?;
    free_phase(&ops.free, n, &mut ket);
    finish(&bra, &ket, f_out, f_in)
}

/// Same product with the middle factor from the eigenpairs of `M^2`.
pub fn s_matrix_spectral(
    n: usize,
    beta: f64,
    spectrum: &SpectralDecomposition,
    free: &[f64],
    f_out: &GaussianPacket,
    f_in: &GaussianPacket,
) -> Result<Complex64> {
    let (bra, mut ket) = packet_pair(f_out, f_in, free.len())?;
    free_phase(free, n, &mut ket);
    let kappa = spectrum.semigroup_spectrum(beta)?;
    let u = &spectrum.eigenvectors;
    let dim = kappa.len();
    let mut proj = vec![Complex64::default(); dim];
    for (j, p) in proj.iter_mut().enumerate() {
        let col = u.column(j);
        let s: Complex64 = col.iter().zip(&ket).map(|(u, k)| u * k).sum();
        *p = s * Complex64::from_polar(1.0, 2.0 * n as f64 * kappa[j]);
    }
    let mut out = vec![Complex64::default(); dim];
    for (j, p) in proj.iter().enumerate() {
        for (o, u) in out.iter_mut().zip(u.column(j).iter()) {
            *o += u * p;
        }
    }
    free_phase(free, n, &mut out);
    finish(&bra, &out, f_out, f_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_function() {
        let s = cheb_coeffs(0.0, 6);
        assert!((s.coeffs[0] - 2.0).norm() < 1e-15);
        assert!(s.coeffs[1..].iter().all(|c| c.norm() < 1e-15));
        assert!((cheb_eval_scalar(&s, 0.3).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn fft_and_direct_agree() {
        let nu = 900.0;
        let direct = cheb_coeffs(nu, DIRECT_LIMIT - 1);
        let m = DIRECT_LIMIT;
        // force the FFT path with the same size
        let samples: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(1.0, nu * 0.5 * (chebyshev_node(k, m) + 1.0)))
            .collect();
        let mut buf = samples.clone();
        buf.extend(samples.iter().rev());
        FftPlanner::new().plan_fft_forward(2 * m).process(&mut buf);
        for j in [0usize, 1, 17, 400, 451, 1000, m - 1] {
            let phase = Complex64::from_polar(1.0, -std::f64::consts::PI * j as f64 / (2.0 * m as f64));
            let c = 0.5 * phase * buf[j] * (2.0 / m as f64);
            assert!((c - direct.coeffs[j]).norm() < 1e-13, "j={j}");
        }
    }

    #[test]
    fn reduced_cosine_matches_libm() {
        let m = 37;
        for r in 0..(8 * m as u64) {
            let a = cos_reduced(r, m);
            let b = (r as f64 * std::f64::consts::PI / (2.0 * m as f64)).cos();
            assert!((a - b).abs() < 1e-14, "r={r}");
        }
    }

    #[test]
    fn out_of_domain_rejected() {
        let s = cheb_coeffs(10.0, 20);
        assert!(cheb_eval_scalar(&s, -1e-3).is_err());
        assert!(cheb_eval_scalar(&s, 1.0 + 1e-12).is_err());
    }

    #[test]
    fn recurrence_detects_escaped_spectrum() {
        let s = cheb_coeffs(50.0, 200);
        let psi = vec![Complex64::new(1.0, 0.0); 3];
        let r = cheb_apply_operator(&s, |x, y| y.iter_mut().zip(x).for_each(|(y, x)| *y = 1.7 * x), &psi);
        assert!(matches!(r, Err(Error::RecurrenceBlowUp { .. })));
    }
}
