use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Not enough Monte Carlo power to decide.
    Inconclusive,
    /// Reported without a reference to check against.
    Info,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Info => "info",
        })
    }
}

/// How a value is compared with its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `|value − reference| ≤ tol`.
    Abs(f64),
    /// `|value − reference| ≤ tol·|reference|`.
    Rel(f64),
    /// `value ≤ bound` (reference column holds the bound).
    AtMost,
    /// `value > bound`.
    Above,
    None,
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Abs(t) => write!(f, "abs:{t:e}"),
            Tolerance::Rel(t) => write!(f, "rel:{t:e}"),
            Tolerance::AtMost => f.write_str("at-most"),
            Tolerance::Above => f.write_str("above"),
            Tolerance::None => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub reference: Option<f64>,
    pub tolerance: Tolerance,
    pub verdict: Verdict,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub n: Option<usize>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, reference: Option<f64>, tolerance: Tolerance) -> Self {
        let verdict = match (reference, tolerance) {
            (None, _) | (_, Tolerance::None) => Verdict::Info,
            (Some(r), t) => {
                let ok = match t {
                    Tolerance::Abs(tol) => (value - r).abs() <= tol,
                    Tolerance::Rel(tol) => (value - r).abs() <= tol * r.abs(),
                    Tolerance::AtMost => value <= r,
                    Tolerance::Above => value > r,
                    Tolerance::None => unreachable!(),
                };
                if ok {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };
        Check { name: name.into(), value, stderr: None, reference, tolerance, verdict, seed: None, dt: None, n: None }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Check::new(name, value, None, Tolerance::None)
    }

    pub fn stderr(mut self, s: f64) -> Self {
        self.stderr = Some(s);
        self
    }

    pub fn provenance(mut self, seed: u64, dt: f64, n: usize) -> Self {
        self.seed = Some(seed);
        self.dt = Some(dt);
        self.n = Some(n);
        self
    }

    /// Turns a failure into "inconclusive" when the estimate lacks power.
    pub fn low_power(mut self, low: bool) -> Self {
        if low && self.verdict != Verdict::Info {
            self.verdict = Verdict::Inconclusive;
        }
        self
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// `summary.txt`: a provenance header, then one line per check.
pub fn write_summary(path: &Path, header: &[(&str, String)], checks: &[Check]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for (k, v) in header {
        writeln!(w, "# {k} = {v}")?;
    }
    let config = header.iter().find(|(k, _)| *k == "config_hash").map(|(_, v)| &v[..12.min(v.len())]).unwrap_or("-");
    for c in checks {
        writeln!(
            w,
            "name={} value={:.10e} stderr={} reference={} tolerance={} verdict={} seed={} dt={} n={} config={}",
            c.name,
            c.value,
            opt(c.stderr.map(|s| format!("{s:.4e}"))),
            opt(c.reference.map(|r| format!("{r:.10e}"))),
            c.tolerance,
            c.verdict,
            opt(c.seed),
            opt(c.dt),
            opt(c.n),
            config,
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a CSV file with the given header and rows.
pub fn write_csv<R, I>(dir: &Path, name: &str, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Full-precision, round-trip formatting for CSV cells.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}
