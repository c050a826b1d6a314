//! Continuum solution of the rank-one model.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{g0, ModelParams};
use crate::quadrature::{adaptive_gk, gauss_legendre};
use crate::wavepacket::PacketProfile;

const TWO_PI_I: Complex64 = Complex64::new(0.0, std::f64::consts::TAU);

/// Kinematics of an on-shell momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnShellPoint {
    pub k: f64,
    /// Mass-squared value `4(k^2 + m^2)`.
    pub e: f64,
    /// Density of states `dk/dE = 1/(8k)`.
    pub rho: f64,
}

impl OnShellPoint {
    pub fn new(k: f64, nucleon_mass: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid("k", format!("on-shell momentum must be positive, got {k}")));
        }
        Ok(Self {
            k,
            e: 4.0 * (k * k + nucleon_mass * nucleon_mass),
            rho: 1.0 / (8.0 * k),
        })
    }
}

/// Panel layout of the principal-value rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvRule {
    pub nodes_per_panel: usize,
    /// Each panel is split into `2^refinement` equal pieces.
    pub refinement: u32,
}

impl Default for PvRule {
    fn default() -> Self {
        Self {
            nodes_per_panel: 20,
            refinement: 0,
        }
    }
}

/// Analytic scattering solution for a parameter set.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    pub params: ModelParams,
    pub rule: PvRule,
    legendre: (Vec<f64>, Vec<f64>),
    tail: (Vec<f64>, Vec<f64>),
}

impl ExactOracle {
    pub fn new(params: ModelParams) -> Self {
        Self::with_rule(params, PvRule::default())
    }

    pub fn with_rule(params: ModelParams, rule: PvRule) -> Self {
        let legendre = gauss_legendre(rule.nodes_per_panel.max(2));
        let (t, w) = gauss_legendre(24);
        let mut tn = Vec::new();
        let mut tw = Vec::new();
        for (lo, hi) in [(0.0, 0.5), (0.5, 1.0)] {
            for (ti, wi) in t.iter().zip(&w) {
                tn.push(lo + (hi - lo) * 0.5 * (ti + 1.0));
                tw.push(wi * 0.5 * (hi - lo));
            }
        }
        Self {
            params,
            rule,
            legendre,
            tail: (tn, tw),
        }
    }

    fn m(&self) -> f64 {
        self.params.m()
    }

    fn a(&self) -> f64 {
        self.params.m_pi()
    }

    pub fn threshold(&self) -> f64 {
        self.params.constants.threshold()
    }

    fn phi(&self, k: f64) -> f64 {
        let g = g0(k, self.a());
        g * g
    }

    fn cutoff(&self, k_e: f64) -> f64 {
        (64.0 * self.a().max(self.m())).max(4.0 * k_e)
    }

    fn breakpoints(&self, cutoff: f64, features: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0];
        let mut x = self.a() / 16.0;
        while x < cutoff {
            b.push(x);
            x *= 2.0;
        }
        b.push(cutoff);
        for &f in features {
            for v in [0.5 * f, f, 2.0 * f] {
                if v > 0.0 && v < cutoff {
                    b.push(v);
                }
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1e-300));
        let pieces = 1usize << self.rule.refinement;
        let mut fine = Vec::with_capacity((b.len() - 1) * pieces + 1);
        for w in b.windows(2) {
            for p in 0..pieces {
                fine.push(w[0] + (w[1] - w[0]) * p as f64 / pieces as f64);
            }
        }
        fine.push(cutoff);
        fine
    }

    fn tail_real(&self, cutoff: f64, e: f64) -> f64 {
        let (t, w) = &self.tail;
        let m2 = self.m() * self.m();
        t.iter()
            .zip(w)
            .map(|(t, w)| {
                let k = cutoff / t;
                w * cutoff / (t * t) * self.phi(k) / (e - 4.0 * (k * k + m2))
            })
            .sum()
    }

    /// `h(z) = int_0^inf g0(k)^2 / (z - 4(k^2+m^2)) dk`.
    ///
    /// With `from_above` a real `z` on the cut is read as `z + i0`.
    pub fn resolvent_pairing(&self, z: Complex64, from_above: bool) -> Result<Complex64> {
        let thr = self.threshold();
        if z.im == 0.0 && z.re >= thr {
            if !from_above {
                return Err(Error::OnCut {
                    re: z.re,
                    im: z.im,
                    threshold: thr,
                });
            }
            if z.re > thr {
                return Ok(self.resolvent_above(z.re));
            }
        }
        self.resolvent_direct(z)
    }

    fn resolvent_direct(&self, z: Complex64) -> Result<Complex64> {
        let m2 = self.m() * self.m();
        let kz = (z / 4.0 - m2).sqrt();
        let feature = if kz.re > 0.0 { vec![kz.re] } else { Vec::new() };
        let cutoff = self.cutoff(kz.re.abs());
        let breaks = self.breakpoints(cutoff, &feature);
        let dz = z - 4.0 * m2;
        let f = |k: f64| self.phi(k) / (dz - 4.0 * k * k);
        let mut total = Complex64::new(0.0, 0.0);
        for w in breaks.windows(2) {
            total += adaptive_gk(f, w[0], w[1], 0.0, 1e-14)?;
        }
        total += adaptive_gk(
            |t: f64| {
                if t == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let k = cutoff / t;
                f(k) * (cutoff / (t * t))
            },
            0.0,
            1.0,
            0.0,
            1e-14,
        )?;
        Ok(total)
    }

    /// `h(E + i0)` for `E` above threshold by the subtraction method.
    fn resolvent_above(&self, e: f64) -> Complex64 {
        let m2 = self.m() * self.m();
        let k_e = (0.25 * e - m2).sqrt();
        let cutoff = self.cutoff(k_e);
        let phi_e = self.phi(k_e);
        let breaks = self.breakpoints(cutoff, &[k_e]);
        let (x, w) = &self.legendre;
        let mut pv = 0.0;
        for p in breaks.windows(2) {
            let half = 0.5 * (p[1] - p[0]);
            let mid = 0.5 * (p[1] + p[0]);
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(w) {
                let k = mid + half * xi;
                let num = self.phi(k) - phi_e * k / k_e;
                s += wi * num / (4.0 * (k_e - k) * (k_e + k));
            }
            pv += half * s;
        }
        pv += phi_e / (8.0 * k_e) * (k_e * k_e / ((cutoff - k_e) * (cutoff + k_e))).ln();
        pv += self.tail_real(cutoff, e);
        Complex64::new(pv, -std::f64::consts::PI * phi_e / (8.0 * k_e))
    }

    /// `tau(z) = -lambda / (1 + lambda h(z))`.
    pub fn tau(&self, z: Complex64, from_above: bool) -> Result<Complex64> {
        let lambda = self.params.lambda;
        if lambda == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let d = 1.0 + lambda * self.resolvent_pairing(z, from_above)?;
        if d.norm() < 1e-12 {
            return Err(Error::NearPole(d.norm()));
        }
        Ok(-lambda / d)
    }

    /// `1 + lambda h(z)`.
    pub fn denominator(&self, z: Complex64, from_above: bool) -> Result<Complex64> {
        Ok(1.0 + self.params.lambda * self.resolvent_pairing(z, from_above)?)
    }

    pub fn on_shell_point(&self, k: f64) -> Result<OnShellPoint> {
        OnShellPoint::new(k, self.m())
    }

    /// On-shell `g0(k)^2 tau(E + i0)`.
    pub fn sharp_t(&self, k: f64) -> Result<Complex64> {
        let p = self.on_shell_point(k)?;
        Ok(self.phi(k) * self.tau(Complex64::new(p.e, 0.0), true)?)
    }

    /// `S(k) = 1 - 2 pi i rho g0^2 tau(E + i0)`.
    pub fn on_shell_s(&self, k: f64) -> Result<Complex64> {
        let p = self.on_shell_point(k)?;
        Ok(1.0 - TWO_PI_I * p.rho * self.sharp_t(k)?)
    }

    /// `(1 - S)/(2 pi i)`, the amplitude in energy normalization.
    pub fn sharp_t_energy_normalized(&self, k: f64) -> Result<Complex64> {
        Ok((1.0 - self.on_shell_s(k)?) / TWO_PI_I)
    }

    /// Continuous `delta(k)` with `S = exp(2 i delta)` and `delta -> 0` as `k -> inf`.
    pub fn phase_shift(&self, k: f64) -> Result<f64> {
        let half_arg = |k: f64| -> Result<f64> { Ok(0.5 * self.on_shell_s(k)?.arg()) };
        let far = 50.0_f64.max(k);
        if k >= far {
            return half_arg(k);
        }
        let steps = ((far / k).log10() * 64.0).ceil().max(1.0) as usize;
        let ratio = (k / far).powf(1.0 / steps as f64);
        let mut q = far;
        let mut delta = half_arg(q)?;
        for i in 1..=steps {
            q = if i == steps { k } else { q * ratio };
            let raw = half_arg(q)?;
            let turns = ((delta - raw) / std::f64::consts::PI).round();
            delta = raw + turns * std::f64::consts::PI;
        }
        Ok(delta)
    }

    /// `<f_out| S |f_in> = int dk f_out(k) f_in(k) S(k)` over the packet supports.
    pub fn packet_s_exact(&self, f_out: &PacketProfile, f_in: &PacketProfile) -> Result<Complex64> {
        for p in [f_out, f_in] {
            let leak = p.threshold_leakage();
            if leak > 1e-12 {
                return Err(Error::ThresholdLeakage {
                    k0: p.k0,
                    alpha: p.alpha,
                    product: p.k0 * p.alpha.sqrt(),
                });
            }
        }
        let (lo_a, hi_a) = f_out.support(12.0);
        let (lo_b, hi_b) = f_in.support(12.0);
        let lo = lo_a.max(lo_b);
        let hi = hi_a.min(hi_b);
        if lo >= hi {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let (x, w) = gauss_legendre(16);
        let panels = 24;
        let mut total = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                let k = mid + half * xi;
                let s = self.on_shell_s(k)?;
                total += half * wi * f_out.eval(k) * f_in.eval(k) * s;
            }
        }
        Ok(total)
    }

    /// Continuum `<f_out| delta(E - E') |f_in> = int dk f_out f_in / (8k)`.
    pub fn packet_delta_overlap(&self, f_out: &PacketProfile, f_in: &PacketProfile) -> f64 {
        packet_integral(f_out, f_in, |k| 1.0 / (8.0 * k))
    }

    /// Continuum `<f_out|f_in>`.
    pub fn packet_identity_overlap(&self, f_out: &PacketProfile, f_in: &PacketProfile) -> f64 {
        packet_integral(f_out, f_in, |_| 1.0)
    }

    /// Real zero of `1 + lambda h(E)` on `(0, 4m^2)`.
    pub fn bound_state_pole(&self) -> Result<f64> {
        let thr = self.threshold();
        // at e = thr the integrand is regular, so the limit flag is harmless there
        let f = |e: f64| -> Result<f64> { Ok(self.denominator(Complex64::new(e, 0.0), e >= thr)?.re) };
        let mut lo = 0.0;
        let mut hi = thr;
        let mut flo = f(lo)?;
        let mut fhi = f(hi)?;
        if flo.signum() == fhi.signum() {
            return Err(Error::NoBoundState);
        }
        // Illinois false position
        let mut side = 0i32;
        for _ in 0..200 {
            let c = (lo * fhi - hi * flo) / (fhi - flo);
            let fc = f(c)?;
            if fc == 0.0 || (hi - lo).abs() < 1e-15 * c.abs() {
                return Ok(c);
            }
            if fc.signum() == fhi.signum() {
                hi = c;
                fhi = fc;
                if side == -1 {
                    flo *= 0.5;
                }
                side = -1;
            } else {
                lo = c;
                flo = fc;
                if side == 1 {
                    fhi *= 0.5;
                }
                side = 1;
            }
            if (hi - lo).abs() < 4.0 * f64::EPSILON * hi.abs() {
                return Ok(0.5 * (lo + hi));
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn packet_integral(f_out: &PacketProfile, f_in: &PacketProfile, w: impl Fn(f64) -> f64) -> f64 {
    let (lo_a, hi_a) = f_out.support(12.0);
    let (lo_b, hi_b) = f_in.support(12.0);
    let lo = lo_a.max(lo_b);
    let hi = hi_a.min(hi_b);
    if lo >= hi {
        return 0.0;
    }
    let (x, wt) = gauss_legendre(16);
    let panels = 24;
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + (hi - lo) * p as f64 / panels as f64;
        let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&wt) {
            let k = mid + half * xi;
            total += half * wi * f_out.eval(k) * f_in.eval(k) * w(k);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhysicalConstants;

    fn closed_form(o: &ExactOracle, z: Complex64) -> Complex64 {
        // h(z) = pi^2 / (4 a (q + i a)^2), q = sqrt(z/4 - m^2), Im q >= 0
        let m = o.m();
        let a = o.a();
        let mut q = (z / 4.0 - m * m).sqrt();
        if q.im < 0.0 {
            q = -q;
        }
        let d = q + Complex64::new(0.0, a);
        std::f64::consts::PI.powi(2) / (4.0 * a * d * d)
    }

    fn oracle() -> ExactOracle {
        ExactOracle::new(ModelParams::tuned(PhysicalConstants::default()).unwrap())
    }

    #[test]
    fn resolvent_matches_closed_form_off_axis() {
        let o = oracle();
        for z in [
            Complex64::new(3.6, 0.1),
            Complex64::new(3.6, -0.1),
            Complex64::new(1.0, 0.0),
            Complex64::new(3.52, 1e-3),
            Complex64::new(12.0, 2.0),
        ] {
            let h = o.resolvent_pairing(z, false).unwrap();
            let exact = closed_form(&o, if z.im < 0.0 { z.conj() } else { z });
            let exact = if z.im < 0.0 { exact.conj() } else { exact };
            assert!((h - exact).norm() < 1e-12 * exact.norm(), "z={z} h={h} exact={exact}");
        }
    }

    #[test]
    fn resolvent_above_cut_matches_closed_form() {
        let o = oracle();
        for k in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let e = 4.0 * (k * k + o.m() * o.m());
            let h = o.resolvent_pairing(Complex64::new(e, 0.0), true).unwrap();
            let exact = closed_form(&o, Complex64::new(e, 0.0));
            assert!((h - exact).norm() < 1e-12 * exact.norm(), "k={k} h={h} exact={exact}");
        }
    }

    #[test]
    fn on_cut_without_flag_is_rejected() {
        let o = oracle();
        assert!(matches!(
            o.resolvent_pairing(Complex64::new(4.0, 0.0), false),
            Err(Error::OnCut { .. })
        ));
    }

    #[test]
    fn bound_state_pole_location() {
        let o = oracle();
        let md2 = o.params.bound_mass().powi(2);
        let pole = o.bound_state_pole().unwrap();
        assert!(((pole - md2) / md2).abs() < 1e-10);
        let d = o.denominator(Complex64::new(md2, 0.0), false).unwrap();
        assert!(d.norm() < 1e-10);
        assert!(matches!(o.tau(Complex64::new(md2, 0.0), false), Err(Error::NearPole(_))));
    }

    #[test]
    fn phase_shift_tracks_levinson_branch() {
        let o = oracle();
        let low = o.phase_shift(0.02).unwrap();
        let mid = o.phase_shift(0.1).unwrap();
        assert!(low > std::f64::consts::FRAC_PI_2, "{low}");
        assert!((mid - 1.0546).abs() < 1e-3, "{mid}");
        let s = o.on_shell_s(0.02).unwrap();
        let back = Complex64::from_polar(1.0, 2.0 * low);
        assert!((back - s).norm() < 1e-12);
    }
}
