//! Gaussian wave packets and sharp-momentum extraction.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::MomentumGrid;
use crate::oracle::ExactOracle;

const TWO_PI_I: Complex64 = Complex64::new(0.0, std::f64::consts::TAU);

/// Continuum profile `N exp(-alpha (k - k0)^2)` normalized on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketProfile {
    pub k0: f64,
    pub alpha: f64,
}

impl PacketProfile {
    pub fn new(k0: f64, alpha: f64) -> Result<Self> {
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(invalid("k0", format!("must be positive, got {k0}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        Ok(Self { k0, alpha })
    }

    /// `k_w = 1/sqrt(alpha)`.
    pub fn width(&self) -> f64 {
        1.0 / self.alpha.sqrt()
    }

    pub fn norm_constant(&self) -> f64 {
        (2.0 * self.alpha / std::f64::consts::PI).powf(0.25)
    }

    pub fn eval(&self, k: f64) -> f64 {
        let d = k - self.k0;
        self.norm_constant() * (-self.alpha * d * d).exp()
    }

    /// `[k0 - n k_w, k0 + n k_w]` clipped at zero.
    pub fn support(&self, n: f64) -> (f64, f64) {
        let w = n * self.width();
        ((self.k0 - w).max(0.0), self.k0 + w)
    }

    /// Upper bound on the fraction of `|f|^2` at `k < 0`.
    pub fn threshold_leakage(&self) -> f64 {
        // erfc(x)/2 <= exp(-x^2) / (2 x sqrt(pi)), x = k0 sqrt(2 alpha)
        let x = self.k0 * (2.0 * self.alpha).sqrt();
        (-x * x).exp() / (2.0 * x * std::f64::consts::PI.sqrt())
    }
}

/// A packet sampled on a grid and normalized there.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPacket {
    pub profile: PacketProfile,
    grid: MomentumGrid,
    coefficients: Vec<Complex64>,
}

/// Samples and normalizes `exp(-alpha (k - k0)^2)` on `grid`.
pub fn make_packet(k0: f64, alpha: f64, grid: &MomentumGrid) -> Result<GaussianPacket> {
    let profile = PacketProfile::new(k0, alpha)?;
    let product = k0 * alpha.sqrt();
    if product < 7.0 {
        return Err(Error::ThresholdLeakage { k0, alpha, product });
    }
    let kw = profile.width();
    let nodes = grid.count_in(k0 - 3.0 * kw, k0 + 3.0 * kw);
    if nodes < 12 {
        return Err(Error::UnderResolvedPacket {
            k0,
            alpha,
            nodes,
            required: 12,
        });
    }
    let raw: Vec<f64> = grid.nodes().iter().map(|k| (-alpha * (k - k0).powi(2)).exp()).collect();
    let norm2: f64 = raw.iter().zip(grid.weights()).map(|(f, w)| w * f * f).sum();
    let scale = 1.0 / norm2.sqrt();
    Ok(GaussianPacket {
        profile,
        grid: grid.clone(),
        coefficients: raw.iter().map(|f| Complex64::new(f * scale, 0.0)).collect(),
    })
}

impl GaussianPacket {
    pub fn k0(&self) -> f64 {
        self.profile.k0
    }

    pub fn alpha(&self) -> f64 {
        self.profile.alpha
    }

    pub fn width(&self) -> f64 {
        self.profile.width()
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Amplitudes in the orthonormal basis `sqrt(w_i) f(k_i)`.
    pub fn weighted(&self) -> Vec<Complex64> {
        self.coefficients
            .iter()
            .zip(self.grid.weights())
            .map(|(f, w)| f * w.sqrt())
            .collect()
    }

    /// `sqrt(sum_i w_i |f_i|^2)`.
    pub fn norm(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(self.grid.weights())
            .map(|(f, w)| w * f.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_common(f_out: &GaussianPacket, f_in: &GaussianPacket) -> Result<()> {
    if f_out.grid != f_in.grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `int dE v_out*(E) v_in(E) w(E)` with `v(E) = f(k(E)) sqrt(dk/dE)`.
///
/// On the grid this is `sum_i w_i f_out* f_in w(E_i)`; `None` means `w = 1`.
pub fn energy_overlap(
    f_out: &GaussianPacket,
    f_in: &GaussianPacket,
    nucleon_mass: f64,
    weight: Option<&dyn Fn(f64) -> Complex64>,
) -> Result<Complex64> {
    check_common(f_out, f_in)?;
    let m2 = nucleon_mass * nucleon_mass;
    let g = &f_out.grid;
    Ok(g.nodes()
        .iter()
        .zip(g.weights())
        .zip(f_out.coefficients.iter().zip(&f_in.coefficients))
        .map(|((k, w), (a, b))| {
            let e = 4.0 * (k * k + m2);
            let wt = weight.map_or(Complex64::new(1.0, 0.0), |f| f(e));
            *w * a.conj() * b * wt
        })
        .sum())
}

/// `<f_out| delta(E - E') |f_in> = sum_i w_i f_out* f_in / (8 k_i)`.
pub fn delta_overlap(f_out: &GaussianPacket, f_in: &GaussianPacket) -> Result<Complex64> {
    check_common(f_out, f_in)?;
    let g = &f_out.grid;
    Ok(g.nodes()
        .iter()
        .zip(g.weights())
        .zip(f_out.coefficients.iter().zip(&f_in.coefficients))
        .map(|((k, w), (a, b))| *w * a.conj() * b / (8.0 * k))
        .sum())
}

/// `(identity_overlap - S_element) / (2 pi i delta_overlap)`.
pub fn extract_sharp_t(s_element: Complex64, identity_overlap: Complex64, delta_overlap: Complex64) -> Result<Complex64> {
    if delta_overlap.norm() < 1e-14 {
        return Err(Error::VanishingDeltaOverlap(delta_overlap.norm()));
    }
    Ok((identity_overlap - s_element) / (TWO_PI_I * delta_overlap))
}

/// Outcome of an extraction compared with the sharp value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extraction {
    pub extracted: Complex64,
    pub exact: Complex64,
}

impl Extraction {
    pub fn relative_error(&self) -> f64 {
        (self.extracted - self.exact).norm() / self.exact.norm()
    }
}

/// Extraction from the continuum packet S-matrix element of one packet.
pub fn oracle_extraction(oracle: &ExactOracle, k0: f64, alpha: f64) -> Result<Extraction> {
    let p = PacketProfile::new(k0, alpha)?;
    let s = oracle.packet_s_exact(&p, &p)?;
    let id = oracle.packet_identity_overlap(&p, &p);
    let delta = oracle.packet_delta_overlap(&p, &p);
    Ok(Extraction {
        extracted: extract_sharp_t(s, id.into(), delta.into())?,
        exact: oracle.sharp_t(k0)?,
    })
}

/// Width parameter whose oracle extraction error is `target_error`, found by
/// bisection in `log alpha` over `[10, 1e7]`.
pub fn tune_width(k0: f64, target_error: f64, oracle: &ExactOracle) -> Result<f64> {
    if !(target_error > 0.0 && target_error < 1.0) {
        return Err(invalid("target_error", "must lie in (0, 1)"));
    }
    let err = |log_a: f64| -> Result<f64> { Ok(oracle_extraction(oracle, k0, log_a.exp())?.relative_error()) };
    let leak_floor = (49.0 / (k0 * k0)).max(10.0);
    let mut lo = leak_floor.ln();
    let mut hi = 1e7_f64.ln();
    let e_lo = err(lo)?;
    let e_hi = err(hi)?;
    if e_hi > target_error {
        return Err(Error::TuningFailed(format!(
            "error {e_hi:e} at alpha = 1e7 still above target {target_error:e}"
        )));
    }
    if e_lo <= target_error {
        return Ok(lo.exp());
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if err(mid)? > target_error {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn leakage_bound() {
        let p = PacketProfile::new(0.1, 4900.0).unwrap();
        assert!(p.threshold_leakage() < 1e-12);
        assert!(make_packet(0.1, 4000.0, &MomentumGrid::for_packet(0.1, 4000.0, 0.14, &GridSpec::default()).unwrap()).is_err());
    }

    #[test]
    fn under_resolved_grid_rejected() {
        let grid = MomentumGrid::from_panels(&[0.0, 1.0, 2.0], 4).unwrap();
        assert!(matches!(make_packet(1.5, 3000.0, &grid), Err(Error::UnderResolvedPacket { .. })));
    }

    #[test]
    fn flat_s_extraction_is_exact() {
        let spec = GridSpec::default();
        let grid = MomentumGrid::for_packet(0.7, 2000.0, 0.1396, &spec).unwrap();
        let f = make_packet(0.7, 2000.0, &grid).unwrap();
        let s = Complex64::from_polar(1.0, 2.0 * 0.37);
        let id = energy_overlap(&f, &f, 0.9383, None).unwrap();
        let sw = move |_e: f64| s;
        let num = energy_overlap(&f, &f, 0.9383, Some(&sw)).unwrap();
        let delta = delta_overlap(&f, &f).unwrap();
        let t = extract_sharp_t(num, id, delta).unwrap();
        let expect = (1.0 - s) / (TWO_PI_I * delta) * id;
        assert!((t - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let spec = GridSpec::default();
        let g1 = MomentumGrid::for_packet(0.7, 2000.0, 0.1396, &spec).unwrap();
        let g2 = MomentumGrid::for_packet(0.8, 2000.0, 0.1396, &spec).unwrap();
        let a = make_packet(0.7, 2000.0, &g1).unwrap();
        let b = make_packet(0.8, 2000.0, &g2).unwrap();
        assert_eq!(delta_overlap(&a, &b), Err(Error::GridMismatch));
    }
}
