//! Radial momentum quadrature grids.

use crate::error::{invalid, Error, Result};
use crate::quadrature::{composite_rule, gauss_legendre};

/// Quadrature nodes and weights for radial momentum integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    k_max: f64,
}

impl MomentumGrid {
    /// Wraps explicit nodes and weights after checking the grid invariants.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, k_max: f64) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::MalformedGrid(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(Error::MalformedGrid("fewer than two nodes".into()));
        }
        if !nodes.iter().all(|k| k.is_finite() && *k > 0.0) {
            return Err(Error::MalformedGrid("nodes must be finite and positive".into()));
        }
        if !nodes.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::MalformedGrid("nodes must be strictly increasing".into()));
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::MalformedGrid("weights must be finite and positive".into()));
        }
        Ok(Self {
            nodes,
            weights,
            k_max,
        })
    }

    /// Composite Gauss-Legendre grid over the given panel boundaries.
    pub fn from_panels(breaks: &[f64], nodes_per_panel: usize) -> Result<Self> {
        if breaks.len() < 2 || nodes_per_panel < 1 {
            return Err(Error::MalformedGrid("need at least one non-empty panel".into()));
        }
        if !breaks.windows(2).all(|p| p[0] < p[1]) || breaks[0] < 0.0 {
            return Err(Error::MalformedGrid("panel boundaries must increase from k >= 0".into()));
        }
        let (nodes, weights) = composite_rule(breaks, nodes_per_panel);
        Self::new(nodes, weights, *breaks.last().unwrap())
    }

    /// Rule for `[0, inf)`: geometric panels up to `cutoff`, then `k = cutoff / t`
    /// with Gauss-Legendre in `t`. Used where the full half line matters.
    pub fn half_line(scale: f64, cutoff: f64, nodes_per_panel: usize) -> Result<Self> {
        if !(scale > 0.0 && cutoff > scale) {
            return Err(invalid("cutoff", "need 0 < scale < cutoff"));
        }
        let mut breaks = vec![0.0];
        let mut b = scale / 16.0;
        while b < cutoff {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.push(cutoff);
        let (mut nodes, mut weights) = composite_rule(&breaks, nodes_per_panel);
        let (t, wt) = gauss_legendre(nodes_per_panel);
        let mut tail: Vec<(f64, f64)> = Vec::with_capacity(2 * t.len());
        for (lo, hi) in [(0.0, 0.5), (0.5, 1.0)] {
            for (ti, wi) in t.iter().zip(&wt) {
                let u = lo + (hi - lo) * 0.5 * (ti + 1.0);
                let w = wi * 0.5 * (hi - lo);
                tail.push((cutoff / u, w * cutoff / (u * u)));
            }
        }
        tail.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (k, w) in tail {
            nodes.push(k);
            weights.push(w);
        }
        Self::new(nodes, weights, f64::INFINITY)
    }

    /// Builds the packet-adapted grid of a scattering run.
    pub fn for_packet(k0: f64, alpha: f64, form_factor_mass: f64, spec: &GridSpec) -> Result<Self> {
        if !(k0 > 0.0) {
            return Err(invalid("k0", "must be positive"));
        }
        if !(alpha > 0.0) {
            return Err(invalid("alpha", "must be positive"));
        }
        spec.validate()?;
        let kw = 1.0 / alpha.sqrt();
        let k_max = spec.k_max(k0, alpha, form_factor_mass);
        let hw = spec.packet_halfwidth * kw;
        let lo = (k0 - hw).max(0.25 * k0);
        let hi = (k0 + hw).min(0.5 * (k0 + hw + k_max));
        let mut breaks = Vec::new();
        breaks.extend(uniform(0.0, lo, spec.inner_panels));
        breaks.pop();
        breaks.extend(uniform(lo, hi, spec.packet_panels));
        breaks.pop();
        breaks.extend(geometric(hi, k_max, spec.outer_panels));
        if spec.tail_k > k_max && spec.tail_panels > 0 {
            breaks.pop();
            breaks.extend(geometric(k_max, spec.tail_k, spec.tail_panels));
        }
        let (nodes, weights) = composite_rule(&breaks, spec.nodes_per_panel);
        Self::new(nodes, weights, k_max)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Outer edge of the packet region (the tail may extend further).
    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }

    /// Applies the rule to `f`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(k, w)| w * f(*k)).sum()
    }

    /// Number of nodes inside `[a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.nodes.iter().filter(|k| **k >= a && **k <= b).count()
    }
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    let r = (b / a).powf(1.0 / n as f64);
    let mut v: Vec<f64> = (0..=n).map(|i| a * r.powi(i as i32)).collect();
    v[n] = b;
    v
}

/// Panel layout of the packet-adapted grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nodes_per_panel: usize,
    /// Uniform panels between 0 and the packet support.
    pub inner_panels: usize,
    /// Uniform panels across the packet support.
    pub packet_panels: usize,
    /// Geometric panels from the packet support to `k_max`.
    pub outer_panels: usize,
    /// Geometric panels from `k_max` to `tail_k`; 0 disables the tail.
    pub tail_panels: usize,
    pub tail_k: f64,
    /// Half-width of the packet region in units of `1/sqrt(alpha)`.
    pub packet_halfwidth: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 24,
            inner_panels: 3,
            packet_panels: 6,
            outer_panels: 5,
            tail_panels: 3,
            tail_k: 200.0,
            packet_halfwidth: 8.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(invalid("grid.nodes_per_panel", "must be at least 2"));
        }
        if self.inner_panels == 0 || self.packet_panels == 0 || self.outer_panels == 0 {
            return Err(invalid("grid", "inner, packet and outer panel counts must be positive"));
        }
        if !(self.packet_halfwidth > 0.0) {
            return Err(invalid("grid.packet_halfwidth", "must be positive"));
        }
        if !(self.tail_k > 0.0) {
            return Err(invalid("grid.tail_k", "must be positive"));
        }
        Ok(())
    }

    /// `max(3 k0, k0 + 12/sqrt(alpha), 10 m_pi)`.
    pub fn k_max(&self, k0: f64, alpha: f64, form_factor_mass: f64) -> f64 {
        (3.0 * k0)
            .max(k0 + 12.0 / alpha.sqrt())
            .max(10.0 * form_factor_mass)
    }

    /// Total number of grid points produced for a packet.
    pub fn size(&self, k0: f64, alpha: f64, form_factor_mass: f64) -> usize {
        let tail = if self.tail_k > self.k_max(k0, alpha, form_factor_mass) {
            self.tail_panels
        } else {
            0
        };
        (self.inner_panels + self.packet_panels + self.outer_panels + tail) * self.nodes_per_panel
    }
}
