//! Line-oriented experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    = blank | comment | entry
//! comment = "#" any*
//! entry   = key ws* "=" ws* value ws* [comment]
//! key     = ident ("." ident)*
//! ```
//!
//! Lists are comma separated (`kappa.coeffs = 1, 1`). A key may appear once.
//! Overrides given on the command line use the same `key=value` form and
//! replace file entries.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use reflect_core::conductivity::{ConductivityField, RadialProfile};
use reflect_core::geometry::{DomainSpec, StarProfile};
use reflect_core::{Domain, Field, Vector};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Hitting,
    FeynmanDirichlet,
    FeynmanNeumann,
    Revuz,
    CauchyKernel,
    Generator,
    Spectral,
    LevyIdentity,
    ExcursionRate,
    Discriminate,
    DtnReference,
    Scaling,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::Hitting,
        Experiment::FeynmanDirichlet,
        Experiment::FeynmanNeumann,
        Experiment::Revuz,
        Experiment::CauchyKernel,
        Experiment::Generator,
        Experiment::Spectral,
        Experiment::LevyIdentity,
        Experiment::ExcursionRate,
        Experiment::Discriminate,
        Experiment::DtnReference,
        Experiment::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Hitting => "hitting",
            Experiment::FeynmanDirichlet => "feynman-dirichlet",
            Experiment::FeynmanNeumann => "feynman-neumann",
            Experiment::Revuz => "revuz",
            Experiment::CauchyKernel => "cauchy-kernel",
            Experiment::Generator => "generator",
            Experiment::Spectral => "spectral",
            Experiment::LevyIdentity => "levy-identity",
            Experiment::ExcursionRate => "excursion-rate",
            Experiment::Discriminate => "discriminate",
            Experiment::DtnReference => "dtn-reference",
            Experiment::Scaling => "scaling",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Hitting => "exit-position histogram against the Poisson kernel",
            Experiment::FeynmanDirichlet => "E φ(X_τ) against a deterministic Dirichlet solve",
            Experiment::FeynmanNeumann => "E ∫ f dL against a deterministic Neumann solve",
            Experiment::Revuz => "local-time calibration and the Revuz pairing",
            Experiment::CauchyKernel => "empirical jump kernel of the boundary process",
            Experiment::Generator => "short-time generator probe against -Λφ",
            Experiment::Spectral => "decay of Fourier modes of the boundary process",
            Experiment::LevyIdentity => "Lévy-system identity for a pair of arcs",
            Experiment::ExcursionRate => "excursion rate between arcs per unit local time",
            Experiment::Discriminate => "separating two conductivities from boundary data",
            Experiment::DtnReference => "Dirichlet-to-Neumann eigenvalues and kernel",
            Experiment::Scaling => "exact identities on simulated records",
        }
    }

    /// Whether the experiment simulates paths (and so needs a `sim` block).
    pub fn simulates(self) -> bool {
        self != Experiment::DtnReference
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}; see list-experiments"))
    }
}

/// Keys accepted in a config file. Anything else is rejected so typos surface.
const KNOWN: &[&str] = &[
    "experiment",
    "domain.kind",
    "domain.scale",
    "domain.coeffs",
    "kappa.kind",
    "kappa.value",
    "kappa.coeffs",
    "kappa.collar",
    "kappa.center",
    "kappa.width",
    "kappa.height",
    "kappa2.kind",
    "kappa2.value",
    "kappa2.coeffs",
    "kappa2.collar",
    "kappa2.center",
    "kappa2.width",
    "kappa2.height",
    "sim.dt",
    "sim.n_paths",
    "sim.horizon",
    "sim.seed",
    "sim.c_cal",
    "sim.calibration_paths",
    "sim.calibration_t",
    "sim.x0",
    "ref.n_max",
    "ref.h",
    "ref.abel_r",
    "ref.epsilon",
    "check.tol",
    "check.rel_tol",
    "data.mode",
    "data.sine",
    "hitting.bins",
    "revuz.t",
    "kernel.min",
    "kernel.max",
    "kernel.bins",
    "probe.t",
    "probe.bins",
    "spectral.modes",
    "spectral.t_max",
    "spectral.lags",
    "arcs.a",
    "arcs.b",
    "levy.t",
    "levy.rotations",
    "output.paths",
    "output.paths_count",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(&format!("line {}", no + 1), format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            if cfg.entries.contains_key(key) {
                return Err(err(key, "duplicate key"));
            }
            cfg.insert(key, value.trim())?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN.contains(&key) {
            return Err(err(key, "unknown key"));
        }
        if value.is_empty() {
            return Err(err(key, "empty value"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, value) = spec.split_once('=').ok_or_else(|| err(spec, "override must have the form key=value"))?;
        self.insert(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<(), ConfigError> {
        self.insert(key, &value.to_string())
    }

    /// SHA-256 of the canonical (sorted, normalized) entries.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        format!("{:x}", h.finalize())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>, ConfigError>
    where
        V::Err: fmt::Display,
    {
        self.raw(key).map(|s| s.parse::<V>().map_err(|e| err(key, format!("invalid value {s:?}: {e}")))).transpose()
    }

    pub fn require<V: FromStr>(&self, key: &str) -> Result<V, ConfigError>
    where
        V::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| err(key, "missing required key"))
    }

    pub fn or<V: FromStr>(&self, key: &str, default: V) -> Result<V, ConfigError>
    where
        V::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        s.split(',').map(|x| parse_number(x.trim()).map_err(|e| err(key, e))).collect::<Result<Vec<_>, _>>().map(Some)
    }

    /// A float that may be written with `pi` (e.g. `pi/4`, `7pi/8`).
    pub fn number(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => parse_number(s).map_err(|e| err(key, e)),
        }
    }

    pub fn pair(&self, key: &str, default: (f64, f64)) -> Result<(f64, f64), ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok((v[0], v[1])),
            Some(v) => Err(err(key, format!("expected two numbers, got {}", v.len()))),
        }
    }

    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        let name: String = self.require("experiment")?;
        name.parse().map_err(|e: String| err("experiment", e))
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.require("sim.seed")
    }

    pub fn domain(&self) -> Result<Domain, ConfigError> {
        let kind = self.raw("domain.kind").unwrap_or("disk");
        let base = match kind {
            "disk" => DomainSpec::unit_disk(),
            "square" => DomainSpec::unit_square(),
            "star" => {
                let coeffs = self.list("domain.coeffs")?.ok_or_else(|| err("domain.coeffs", "missing required key"))?;
                let profile = StarProfile::from_coeffs(&coeffs).map_err(|e| err("domain.coeffs", e.to_string()))?;
                DomainSpec::star(profile).map_err(|e| err("domain.coeffs", e.to_string()))?
            }
            other => return Err(err("domain.kind", format!("expected disk, square or star, got {other:?}"))),
        };
        let scale = self.number("domain.scale", 1.0)?;
        if scale == 1.0 {
            Ok(base)
        } else {
            base.dilate(scale).map_err(|e| err("domain.scale", e.to_string()))
        }
    }

    /// The field described by the `kappa` block (`prefix = "kappa"`) or the
    /// comparison block (`prefix = "kappa2"`).
    pub fn field(&self, prefix: &str, domain: &Domain) -> Result<Field, ConfigError> {
        let key = |k: &str| format!("{prefix}.{k}");
        let kind_key = key("kind");
        let kind = self.raw(&kind_key).ok_or_else(|| err(&kind_key, "missing required key"))?;
        let field = match kind {
            "constant" => {
                let k = key("value");
                ConductivityField::constant(self.number(&k, 1.0)?).map_err(|e| err(&k, e.to_string()))?
            }
            "radial" => {
                let k = key("coeffs");
                let coeffs = self.list(&k)?.ok_or_else(|| err(&k, "missing required key"))?;
                let mut profile = RadialProfile::new(coeffs);
                if let Some(c) = self.list(&key("collar"))? {
                    if c.len() != 2 {
                        return Err(err(&key("collar"), "expected r_in, r_out"));
                    }
                    profile = profile.with_collar(c[0], c[1]);
                }
                ConductivityField::radial(profile, domain).map_err(|e| err(&k, e.to_string()))?
            }
            "bump" => {
                let (cx, cy) = self.pair(&key("center"), (0.0, 0.0))?;
                let k = key("height");
                ConductivityField::bump(
                    Vector::new(cx, cy),
                    self.number(&key("width"), 0.5)?,
                    self.number(&k, 1.0)?,
                    domain,
                )
                .map_err(|e| err(&k, e.to_string()))?
            }
            other => return Err(err(&kind_key, format!("expected constant, radial or bump, got {other:?}"))),
        };
        Ok(field)
    }

    pub fn x0(&self, default: (f64, f64)) -> Result<Vector, ConfigError> {
        let (x, y) = self.pair("sim.x0", default)?;
        Ok(Vector::new(x, y))
    }

    /// Checks that every block the experiment reads is present and well formed.
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let exp = self.experiment()?;
        let domain = self.domain()?;
        self.field("kappa", &domain)?;
        if exp == Experiment::Discriminate {
            self.field("kappa2", &domain)?;
        }
        if exp.simulates() {
            self.seed()?;
            let dt: f64 = self.require("sim.dt")?;
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(err("sim.dt", "must be positive"));
            }
            let n: usize = self.require("sim.n_paths")?;
            if n == 0 {
                return Err(err("sim.n_paths", "must be positive"));
            }
            if let Some(c) = self.raw("sim.c_cal") {
                if c != "calibrate" {
                    self.get::<f64>("sim.c_cal")?;
                }
            }
        }
        Ok(exp)
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    // `[a]pi[/b]` with optional leading minus.
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let coeff = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(c) => c.trim_end_matches('*').parse::<f64>().map_err(|_| format!("not a number: {s:?}"))?,
        None => return Err(format!("not a number: {s:?}")),
    };
    let den = match den {
        Some(d) => d.parse::<f64>().map_err(|_| format!("not a number: {s:?}"))?,
        None => 1.0,
    };
    let v = coeff * std::f64::consts::PI / den;
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_comments_and_pi() {
        let cfg = Config::parse("experiment = hitting # trailing\n\n# full line\nkernel.min = pi/4\nkernel.max=7pi/8\narcs.a = -pi/8, pi/8\n").unwrap();
        assert_eq!(cfg.experiment().unwrap(), Experiment::Hitting);
        assert!((cfg.number("kernel.min", 0.0).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((cfg.number("kernel.max", 0.0).unwrap() - 7.0 * std::f64::consts::PI / 8.0).abs() < 1e-15);
        let (a, b) = cfg.pair("arcs.a", (0.0, 0.0)).unwrap();
        assert!((a + b).abs() < 1e-15 && b > 0.0);
    }

    #[test]
    fn reports_offending_key() {
        assert_eq!(Config::parse("sim.dtt = 1").unwrap_err().key, "sim.dtt");
        assert_eq!(Config::parse("sim.dt = 1\nsim.dt = 2").unwrap_err().key, "sim.dt");
        let cfg =
            Config::parse("experiment = hitting\nkappa.kind = constant\nsim.dt = 1e-4\nsim.n_paths = 10").unwrap();
        assert_eq!(cfg.validate().unwrap_err().key, "sim.seed");
        let cfg = Config::parse("experiment = hitting\nkappa.kind = constant\nsim.dt = fast").unwrap();
        assert_eq!(cfg.require::<f64>("sim.dt").unwrap_err().key, "sim.dt");
    }

    #[test]
    fn hash_ignores_layout_but_not_values() {
        let a = Config::parse("sim.seed = 1\nsim.dt = 1e-4").unwrap();
        let b = Config::parse("# c\nsim.dt=1e-4\n\nsim.seed   =   1").unwrap();
        let mut c = a.clone();
        c.apply_override("sim.seed=2").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
