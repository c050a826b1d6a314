//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use erqm_core::{GridSpec, PhysicalConstants};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

const TABLE1_K0: &str = "0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9";
const TABLE3_CASES: &str = "0.1:200:200, 0.1:200:250, 0.1:200:300, 0.1:630:630, 0.1:630:680, 0.1:630:700, \
0.5:200:200, 0.5:200:250, 0.5:630:580, 0.5:630:680, \
0.9:200:200, 0.9:200:250, 0.9:200:300, 0.9:630:630, 0.9:630:680, 0.9:630:700";

/// Every recognised key with its default.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("physics.m", "0.9383"),
    ("physics.m_pi", "0.1396"),
    ("physics.b_d", "0.0022246"),
    ("physics.lambda", "auto"),
    ("grid.nodes_per_panel", "24"),
    ("grid.inner_panels", "3"),
    ("grid.packet_panels", "6"),
    ("grid.outer_panels", "5"),
    ("grid.tail_panels", "3"),
    ("grid.tail_k", "200"),
    ("grid.packet_halfwidth", "8"),
    ("propagator.beta", "auto"),
    ("propagator.beta_scale", "1"),
    ("propagator.degree_margin", "100"),
    ("propagator.auto_exponent", "25"),
    ("table1.k0", TABLE1_K0),
    ("table1.alpha", "105000, 10500, 3000, 1350, 750, 475, 330, 250, 190, 150"),
    ("table2.k0", "2.0"),
    ("table2.alpha", "135"),
    ("table2.n", "50, 100, 150, 200, 250, 300, 350, 400, 500, 600, 800"),
    ("table3.cases", TABLE3_CASES),
    ("table4.k0", TABLE1_K0),
    ("table4.alpha", "tune"),
    ("table4.target_error", "0.001"),
    ("table4.n", "auto"),
    ("euclid.mass", "1.0"),
    ("euclid.seed", "20240611"),
    ("euclid.functions", "8"),
    ("euclid.draws", "20"),
    ("euclid.motions", "10"),
    ("euclid.epsilon", "-0.5"),
    ("euclid.probe_sets", "40"),
    ("euclid.ladder", "3, 4, 5, 6, 8, 10, 12, 14, 16, 18, 20"),
    ("output.dir", "out"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Policy<T> {
    Auto,
    Fixed(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table3Case {
    pub x: f64,
    pub n: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub lambda: Policy<f64>,
    pub grid: GridSpec,
    pub beta: Policy<f64>,
    pub beta_scale: f64,
    pub degree_margin: usize,
    pub auto_exponent: f64,
    pub table1_k0: Vec<f64>,
    pub table1_alpha: Vec<f64>,
    pub table2_k0: f64,
    pub table2_alpha: f64,
    pub table2_n: Vec<usize>,
    pub table3_cases: Vec<Table3Case>,
    pub table4_k0: Vec<f64>,
    pub table4_alpha: Policy<Vec<f64>>,
    pub table4_target: f64,
    pub table4_n: Policy<usize>,
    pub euclid_mass: f64,
    pub euclid_seed: u64,
    pub euclid_functions: usize,
    pub euclid_draws: usize,
    pub euclid_motions: usize,
    pub euclid_epsilon: f64,
    pub euclid_probe_sets: usize,
    pub euclid_ladder: Vec<f64>,
    pub output_dir: PathBuf,
    entries: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                reason: "empty key".into(),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits `key=value` from the command line.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
        line: 0,
        reason: format!("override `{s}` is not key=value"),
    })?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

struct Reader<'a>(&'a BTreeMap<String, String>);

impl Reader<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| invalid(key, format!("`{v}` is not a finite number")))
    }

    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let x = self.f64(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(invalid(key, "must be positive"))
        }
    }

    fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        let v = self.raw(key);
        v.parse::<usize>()
            .map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError> {
        let v = self.raw(key);
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|_| invalid(key, format!("bad list item `{s}`"))))
            .collect()
    }

    fn positive_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let v: Vec<f64> = self.list(key)?;
        if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(invalid(key, "need a non-empty list of positive numbers"));
        }
        Ok(v)
    }

    fn is_auto(&self, key: &str, word: &str) -> bool {
        self.raw(key).eq_ignore_ascii_case(word)
    }
}

impl RunConfig {
    /// Defaults, then file entries, then overrides (later wins).
    pub fn build(file: &[(String, String)], overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in file.iter().chain(overrides) {
            if !entries.contains_key(k) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
            entries.insert(k.clone(), v.clone());
        }
        Self::from_entries(entries)
    }

    pub fn from_file(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                parse_entries(&text)?
            }
            None => Vec::new(),
        };
        Self::build(&file, overrides)
    }

    fn from_entries(entries: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let r = Reader(&entries);
        let constants = PhysicalConstants {
            nucleon_mass: r.positive("physics.m")?,
            form_factor_mass: r.positive("physics.m_pi")?,
            binding_energy: r.positive("physics.b_d")?,
        };
        constants
            .validate()
            .map_err(|e| invalid("physics", e.to_string()))?;
        let lambda = if r.is_auto("physics.lambda", "auto") {
            Policy::Auto
        } else {
            let l = r.f64("physics.lambda")?;
            if l < 0.0 {
                return Err(invalid("physics.lambda", "must be non-negative"));
            }
            Policy::Fixed(l)
        };
        let grid = GridSpec {
            nodes_per_panel: r.usize("grid.nodes_per_panel")?,
            inner_panels: r.usize("grid.inner_panels")?,
            packet_panels: r.usize("grid.packet_panels")?,
            outer_panels: r.usize("grid.outer_panels")?,
            tail_panels: r.usize("grid.tail_panels")?,
            tail_k: r.positive("grid.tail_k")?,
            packet_halfwidth: r.positive("grid.packet_halfwidth")?,
        };
        grid.validate().map_err(|e| invalid("grid", e.to_string()))?;
        let beta = if r.is_auto("propagator.beta", "auto") {
            Policy::Auto
        } else {
            Policy::Fixed(r.positive("propagator.beta")?)
        };
        let table1_k0 = r.positive_list("table1.k0")?;
        let table1_alpha = r.positive_list("table1.alpha")?;
        if table1_k0.len() != table1_alpha.len() {
            return Err(invalid("table1.alpha", "must have one entry per table1.k0"));
        }
        let table2_n: Vec<usize> = r.list("table2.n")?;
        if table2_n.is_empty() || table2_n.contains(&0) {
            return Err(invalid("table2.n", "need a non-empty list of positive integers"));
        }
        if !table2_n.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("table2.n", "must be sorted ascending"));
        }
        let table3_cases = r
            .raw("table3.cases")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                let parts: Vec<&str> = s.split(':').collect();
                let bad = || invalid("table3.cases", format!("`{s}` is not x:n:degree"));
                if parts.len() != 3 {
                    return Err(bad());
                }
                let x: f64 = parts[0].parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(invalid("table3.cases", format!("x = {x} outside [0, 1]")));
                }
                Ok(Table3Case {
                    x,
                    n: parts[1].parse().map_err(|_| bad())?,
                    degree: parts[2].parse().map_err(|_| bad())?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let table4_k0 = r.positive_list("table4.k0")?;
        let table4_alpha = if r.is_auto("table4.alpha", "tune") {
            Policy::Auto
        } else {
            let a = r.positive_list("table4.alpha")?;
            if a.len() != table4_k0.len() {
                return Err(invalid("table4.alpha", "must have one entry per table4.k0"));
            }
            Policy::Fixed(a)
        };
        let table4_target = r.positive("table4.target_error")?;
        if table4_target >= 1.0 {
            return Err(invalid("table4.target_error", "must be below 1"));
        }
        let table4_n = if r.is_auto("table4.n", "auto") {
            Policy::Auto
        } else {
            let n = r.usize("table4.n")?;
            if n == 0 {
                return Err(invalid("table4.n", "must be positive"));
            }
            Policy::Fixed(n)
        };
        let euclid_ladder = r.positive_list("euclid.ladder")?;
        if !euclid_ladder.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("euclid.ladder", "must be strictly increasing"));
        }
        let seed_raw = r.raw("euclid.seed");
        let euclid_seed = seed_raw
            .parse::<u64>()
            .map_err(|_| invalid("euclid.seed", format!("`{seed_raw}` is not an unsigned integer")))?;
        let cfg = Self {
            constants,
            lambda,
            grid,
            beta,
            beta_scale: r.positive("propagator.beta_scale")?,
            degree_margin: r.usize("propagator.degree_margin")?,
            auto_exponent: r.positive("propagator.auto_exponent")?,
            table1_k0,
            table1_alpha,
            table2_k0: r.positive("table2.k0")?,
            table2_alpha: r.positive("table2.alpha")?,
            table2_n,
            table3_cases,
            table4_k0,
            table4_alpha,
            table4_target,
            table4_n,
            euclid_mass: r.positive("euclid.mass")?,
            euclid_seed,
            euclid_functions: r.usize("euclid.functions")?,
            euclid_draws: r.usize("euclid.draws")?,
            euclid_motions: r.usize("euclid.motions")?,
            euclid_epsilon: r.f64("euclid.epsilon")?,
            euclid_probe_sets: r.usize("euclid.probe_sets")?,
            euclid_ladder,
            output_dir: PathBuf::from(r.raw("output.dir")),
            entries: BTreeMap::new(),
        };
        if cfg.euclid_functions == 0 {
            return Err(invalid("euclid.functions", "must be positive"));
        }
        Ok(Self { entries, ..cfg })
    }

    /// Canonical `key = value` listing of every setting.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .filter(|(k, _)| k.as_str() != "output.dir")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical listing.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// `beta` for a packet centred at `k0`.
    pub fn beta_for(&self, k0: f64) -> f64 {
        match self.beta {
            Policy::Fixed(b) => b,
            Policy::Auto => self.beta_scale * erqm_core::default_beta(k0, self.constants.nucleon_mass),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = RunConfig::build(&[], &[]).unwrap();
        assert_eq!(c.table1_k0.len(), 10);
        assert_eq!(c.table3_cases.len(), 16);
        assert_eq!(c.lambda, Policy::Auto);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn comments_and_overrides() {
        let file = parse_entries("# header\nphysics.m = 0.94  # tweak\n\n").unwrap();
        let c = RunConfig::build(&file, &[("physics.lambda".into(), "0".into())]).unwrap();
        assert_eq!(c.constants.nucleon_mass, 0.94);
        assert_eq!(c.lambda, Policy::Fixed(0.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_entries("nonsense"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(
            RunConfig::build(&[("nope".into(), "1".into())], &[]),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(RunConfig::build(&[("table2.n".into(), "300, 200".into())], &[]).is_err());
        assert!(RunConfig::build(&[("physics.m".into(), "-1".into())], &[]).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_but_not_physics() {
        let a = RunConfig::build(&[], &[]).unwrap();
        let b = RunConfig::build(&[("output.dir".into(), "elsewhere".into())], &[]).unwrap();
        let c = RunConfig::build(&[("physics.b_d".into(), "0.003".into())], &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
