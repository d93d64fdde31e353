use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Result};
use reflect_core::boundary::{change_of_variables_check, inverse_index, scaling_check};
use reflect_core::estimators::{
    arc_pair_integral, calibrate_c_cal, estimate_hitting_law, estimate_jump_kernel, excursion_rate,
    feynman_kac_dirichlet, feynman_kac_neumann, generator_probe, generator_probe_fit, kernel_distance,
    levy_identity_check, revuz_check, simulate_boundary_runs, spectral_decay, BoundaryRunConfig, BoundaryRuns,
    EstimatorError, KernelEstimate,
};
use reflect_core::excursions::BoundaryArc;
use reflect_core::geometry::DomainKind;
use reflect_core::reference::dtn::{dtn_eigenvalues_radial, dtn_for_field, DtNOperator, FourierSeries, Integrator};
use reflect_core::reference::fd::{solve_dirichlet_fd, solve_neumann_fd, FdGrid, GridFunction, SolverOptions};
use reflect_core::reference::kernel::levy_kernel;
use reflect_core::simulate::{Recording, SimParams, Stepper};
use reflect_core::stats::chi2_quantile;
use reflect_core::{seed_rng, Domain, Field, Point, Vector};

use crate::config::{Config, Experiment};
use crate::report::{num, opt_num, write_csv, Check, Tolerance};

/// Everything an experiment needs, plus the checks it has produced so far.
pub struct Run<'a> {
    pub cfg: &'a Config,
    pub out: &'a Path,
    pub domain: Domain,
    pub field: Field,
    pub checks: Vec<Check>,
    params: Option<SimParams<f64>>,
}

/// Derived seed for an independent sub-run.
fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// `Re((z − c)^n)` (or `Im`), harmonic in the plane and equal to `cos nθ`
/// (`sin nθ`) on the unit circle.
fn harmonic(n: u32, sine: bool, center: Vector, x: Vector) -> f64 {
    let z = complex_pow(x.x - center.x, x.y - center.y, n);
    if sine {
        z.1
    } else {
        z.0
    }
}

fn complex_pow(re: f64, im: f64, n: u32) -> (f64, f64) {
    let (mut a, mut b) = (1.0, 0.0);
    for _ in 0..n {
        (a, b) = (a * re - b * im, a * im + b * re);
    }
    (a, b)
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a Config, out: &'a Path) -> Result<Self> {
        let domain = cfg.domain()?;
        let field = cfg.field("kappa", &domain)?;
        Ok(Run { cfg, out, domain, field, checks: Vec::new(), params: None })
    }

    fn seed(&self) -> Result<u64> {
        Ok(self.cfg.seed()?)
    }

    fn dt(&self) -> Result<f64> {
        Ok(self.cfg.require("sim.dt")?)
    }

    fn n_paths(&self) -> Result<usize> {
        Ok(self.cfg.require("sim.n_paths")?)
    }

    /// `sim.x0`, defaulting to the domain center shifted by `offset · scale` along x.
    fn default_x0(&self, offset: f64) -> Result<Vector> {
        let c = self.domain.center();
        Ok(self.cfg.x0((c.x + offset * self.domain.scale, c.y))?)
    }

    fn abel_r(&self) -> Result<f64> {
        Ok(self.cfg.number("ref.abel_r", 1.0 - 1e-6)?)
    }

    fn n_max(&self) -> Result<usize> {
        Ok(self.cfg.or("ref.n_max", 256usize)?)
    }

    fn data(&self) -> Result<(u32, bool)> {
        let n: u32 = self.cfg.or("data.mode", 1)?;
        if n == 0 {
            bail!("data.mode: must be at least 1");
        }
        Ok((n, self.cfg.or("data.sine", false)?))
    }

    fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Simulation parameters for `field`, calibrating `c_cal` when asked to.
    fn params_for(&mut self, field: &Field, tag: u64) -> Result<SimParams<f64>> {
        let dt = self.dt()?;
        let seed = self.seed()?;
        match self.cfg.raw("sim.c_cal") {
            Some("calibrate") => {
                let n = self.cfg.or("sim.calibration_paths", 20_000usize)?;
                let t = self.cfg.number("sim.calibration_t", 0.5)?;
                let cal_seed = sub_seed(seed, 100 + tag);
                let cal = calibrate_c_cal(field, &self.domain, SimParams::new(dt), t, n, cal_seed)?;
                self.push(
                    Check::info(format!("c_cal[{}]", field.label), cal.c_cal)
                        .stderr(cal.stderr)
                        .provenance(cal_seed, dt, n),
                );
                Ok(SimParams::new(dt).with_c_cal(cal.c_cal))
            }
            _ => Ok(SimParams::new(dt).with_c_cal(self.cfg.number("sim.c_cal", 1.0)?)),
        }
    }

    fn params(&mut self) -> Result<SimParams<f64>> {
        if let Some(p) = self.params {
            return Ok(p);
        }
        let f = self.field.clone();
        let p = self.params_for(&f, 0)?;
        self.params = Some(p);
        Ok(p)
    }

    /// Deterministic finite-volume/finite-difference grid for the reference solves.
    fn fd_grid(&self) -> Result<Option<FdGrid>> {
        let h = self.cfg.number("ref.h", 1.0 / 128.0)?;
        if !(h > 0.0) {
            bail!("ref.h: must be positive");
        }
        let cells = (self.domain.scale / h).ceil() as usize;
        Ok(match self.domain.kind {
            DomainKind::UnitDisk => Some(FdGrid::Polar { nr: cells, nt: 4 * cells }),
            DomainKind::UnitSquare => Some(FdGrid::Square { n: cells }),
            DomainKind::StarSmooth(_) => None,
        })
    }

    fn disk_operator(&self, field: &Field) -> Option<DtNOperator<f64>> {
        let unit_disk = matches!(self.domain.kind, DomainKind::UnitDisk) && self.domain.scale == 1.0;
        if !unit_disk {
            return None;
        }
        dtn_for_field(field, self.n_max().ok()?).ok()
    }

    fn boundary_runs(
        &mut self,
        field: &Field,
        params: SimParams<f64>,
        horizon_default: f64,
        tag: u64,
    ) -> Result<BoundaryRuns<f64>> {
        let n = self.n_paths()?;
        let horizon = self.cfg.number("sim.horizon", horizon_default)?;
        let mut config = BoundaryRunConfig::new(n, horizon, params.dt);
        if let Some(eps) = self.cfg.get::<f64>("ref.epsilon")? {
            config.store_angle = eps;
        }
        Ok(simulate_boundary_runs(field, &self.domain, params, config, sub_seed(self.seed()?, tag))?)
    }

    fn arcs(&self) -> Result<(BoundaryArc<f64>, BoundaryArc<f64>)> {
        let a = self.cfg.pair("arcs.a", (-PI / 8.0, PI / 8.0))?;
        let b = self.cfg.pair("arcs.b", (7.0 * PI / 8.0, 9.0 * PI / 8.0))?;
        Ok((BoundaryArc::new(a.0, a.1), BoundaryArc::new(b.0, b.1)))
    }

    fn write_paths(&mut self) -> Result<()> {
        if !self.cfg.or("output.paths", false)? {
            return Ok(());
        }
        let count = self.cfg.or("output.paths_count", 4usize)?;
        let horizon = self.cfg.number("sim.horizon", 1.0)?;
        let x0 = self.default_x0(0.0)?;
        let seed = sub_seed(self.seed()?, 900);
        let params = self.params()?;
        let stepper = Stepper::new(&self.field, &self.domain, params)?;
        let mut rows = Vec::new();
        for id in 0..count as u64 {
            let mut rng = seed_rng(seed, id);
            let p = stepper.sample_path(x0, horizon, Recording::Full, &mut rng)?;
            for k in 0..p.len() {
                rows.push([
                    id.to_string(),
                    num(p.times[k]),
                    num(p.points[k].x),
                    num(p.points[k].y),
                    num(p.local_time[k]),
                ]);
            }
        }
        write_csv(self.out, "paths.csv", &["path_id", "t", "x1", "x2", "L"], rows)
    }

    pub fn execute(&mut self, exp: Experiment) -> Result<()> {
        match exp {
            Experiment::Hitting => self.hitting()?,
            Experiment::FeynmanDirichlet => self.feynman_dirichlet()?,
            Experiment::FeynmanNeumann => self.feynman_neumann()?,
            Experiment::Revuz => self.revuz()?,
            Experiment::CauchyKernel => self.cauchy_kernel()?,
            Experiment::Generator => self.generator()?,
            Experiment::Spectral => self.spectral()?,
            Experiment::LevyIdentity => self.levy()?,
            Experiment::ExcursionRate => self.excursion_rate()?,
            Experiment::Discriminate => self.discriminate()?,
            Experiment::DtnReference => self.dtn_reference()?,
            Experiment::Scaling => self.scaling()?,
        }
        if exp.simulates() {
            self.write_paths()?;
        }
        Ok(())
    }

    fn hitting(&mut self) -> Result<()> {
        let (seed, dt, n) = (self.seed()?, self.dt()?, self.n_paths()?);
        let bins = self.cfg.or("hitting.bins", 16usize)?;
        let x0 = self.default_x0(0.0)?;
        let params = self.params()?;
        let law = estimate_hitting_law(x0, &self.field, &self.domain, params, n, bins, seed)?;
        write_csv(
            self.out,
            "hitting.csv",
            &["bin_start", "bin_end", "frequency", "stderr", "reference"],
            law.bins.iter().map(|b| [num(b.start), num(b.end), num(b.frequency), num(b.stderr), opt_num(b.reference)]),
        )?;
        let tol = self.cfg.number("check.tol", 0.003)?;
        for (i, b) in law.bins.iter().enumerate() {
            self.push(
                Check::new(format!("hitting.bin{i:02}"), b.frequency, b.reference, Tolerance::Abs(tol))
                    .stderr(b.stderr)
                    .provenance(seed, dt, n),
            );
        }
        if let Some(sup) = law.sup_rel_error {
            let rel = self.cfg.number("check.rel_tol", 0.05)?;
            self.push(Check::new("hitting.sup_rel_error", sup, Some(rel), Tolerance::AtMost).provenance(seed, dt, n));
        }
        self.push(
            Check::info("hitting.exit_time", law.exit_time.value).stderr(law.exit_time.stderr).provenance(seed, dt, n),
        );
        Ok(())
    }

    fn feynman_dirichlet(&mut self) -> Result<()> {
        let (seed, dt, n) = (self.seed()?, self.dt()?, self.n_paths()?);
        let (mode, sine) = self.data()?;
        let x0 = self.default_x0(0.3)?;
        let c = self.domain.center();
        let params = self.params()?;
        let phi = move |bp: Point| harmonic(mode, sine, c, bp.cartesian);
        let est = feynman_kac_dirichlet(x0, phi, &self.field, &self.domain, params, n, seed)?;
        let reference = if self.field.is_constant() {
            Some(harmonic(mode, sine, c, x0))
        } else {
            match self.fd_grid()? {
                Some(grid) => {
                    let g = solve_dirichlet_fd(
                        &self.domain,
                        grid,
                        &self.field,
                        |x| harmonic(mode, sine, c, x),
                        &SolverOptions::default(),
                    )?;
                    Some(g.value_at(x0))
                }
                None => None,
            }
        };
        self.fk_outputs("feynman_dirichlet.csv", x0, est.value, est.stderr, reference)?;
        let tol = self.cfg.number("check.tol", 0.01)?;
        self.push(
            Check::new("feynman_dirichlet.u", est.value, reference, Tolerance::Abs(tol))
                .stderr(est.stderr)
                .provenance(seed, dt, n),
        );
        Ok(())
    }

    fn fk_outputs(&self, name: &str, x0: Vector, value: f64, stderr: f64, reference: Option<f64>) -> Result<()> {
        write_csv(
            self.out,
            name,
            &["x1", "x2", "estimate", "stderr", "reference"],
            [[num(x0.x), num(x0.y), num(value), num(stderr), opt_num(reference)]],
        )
    }

    fn feynman_neumann(&mut self) -> Result<()> {
        let (seed, dt, n) = (self.seed()?, self.dt()?, self.n_paths()?);
        let (mode, sine) = self.data()?;
        let x0 = self.default_x0(0.3)?;
        let horizon = self.cfg.number("sim.horizon", 20.0)?;
        let c = self.domain.center();
        let params = self.params()?;
        let flux = move |bp: Point| harmonic(mode, sine, c, bp.cartesian);
        let est = feynman_kac_neumann(x0, flux, &self.field, &self.domain, params, horizon, n, seed)?;
        let disk = matches!(self.domain.kind, DomainKind::UnitDisk);
        let reference = if disk && self.field.is_constant() {
            // u = R·Re z^n / (nκ) has κ∂_ν u = Re z^n on |z| = R.
            let kappa = self.field.eval(Vector::new(0.0, 0.0)).xx;
            Some(self.domain.scale * harmonic(mode, sine, c, x0) / (mode as f64 * kappa))
        } else {
            match self.fd_grid()? {
                Some(grid) => {
                    let g: GridFunction<f64> = solve_neumann_fd(
                        &self.domain,
                        grid,
                        &self.field,
                        |x| harmonic(mode, sine, c, x),
                        &SolverOptions::default(),
                    )?;
                    Some(g.value_at(x0))
                }
                None => None,
            }
        };
        let v = est.at_horizon;
        self.fk_outputs("feynman_neumann.csv", x0, v.value, v.stderr, reference)?;
        let tol = self.cfg.number("check.tol", 0.02)?;
        self.push(
            Check::new("feynman_neumann.u", v.value, reference, Tolerance::Abs(tol))
                .stderr(v.stderr)
                .provenance(seed, dt, n),
        );
        let drift = (v.value - est.at_half.value).abs();
        self.push(
            Check::new("feynman_neumann.horizon_drift", drift, Some(0.01), Tolerance::AtMost).provenance(seed, dt, n),
        );
        Ok(())
    }

    fn revuz(&mut self) -> Result<()> {
        let (seed, dt, n) = (self.seed()?, self.dt()?, self.n_paths()?);
        let t = self.cfg.number("revuz.t", 0.5)?;
        let (mode, sine) = self.data()?;
        let c = self.domain.center();
        let params = self.params()?;
        let s1 = sub_seed(seed, 1);
        let one = revuz_check(|_| 1.0, &self.field, &self.domain, params, t, n, s1)?;
        let rel = self.cfg.number("check.rel_tol", 0.02)?;
        self.push(
            Check::new("revuz.constant", one.lhs.value, Some(one.rhs), Tolerance::Rel(rel))
                .stderr(one.lhs.stderr)
                .provenance(s1, dt, n),
        );
        let s2 = sub_seed(seed, 2);
        let wave = revuz_check(
            |bp: Point| harmonic(mode, sine, c, bp.cartesian),
            &self.field,
            &self.domain,
            params,
            t,
            n,
            s2,
        )?;
        self.push(
            Check::new("revuz.mode", wave.lhs.value, Some(wave.rhs), Tolerance::Abs(3.0 * wave.lhs.stderr))
                .stderr(wave.lhs.stderr)
                .provenance(s2, dt, n),
        );
        Ok(())
    }

    fn kernel_edges(&self) -> Result<Vec<f64>> {
        let lo = self.cfg.number("kernel.min", PI / 4.0)?;
        let hi = self.cfg.number("kernel.max", PI)?;
        let bins = self.cfg.or("kernel.bins", 6usize)?;
        if bins == 0 || !(lo > 0.0 && hi > lo && hi <= PI) {
            bail!("kernel.min/kernel.max/kernel.bins: need 0 < min < max ≤ π and at least one bin");
        }
        Ok((0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect())
    }

    fn write_kernel_ref(&self, ops: &[&DtNOperator<f64>]) -> Result<()> {
        let abel_r = self.abel_r()?;
        let mut rows = Vec::new();
        for op in ops {
            for k in 1..=128 {
                let d = PI * k as f64 / 128.0;
                rows.push([num(d), num(levy_kernel(op, d, abel_r)?), op.kappa_label.clone()]);
            }
        }
        write_csv(self.out, "kernel_ref.csv", &["delta", "N_value", "kappa_label"], rows)
    }

    fn write_dtn(&self, ops: &[&DtNOperator<f64>], upto: usize) -> Result<()> {
        let rows = ops.iter().flat_map(|op| {
            op.eigenvalues
                .iter()
                .take(upto + 1)
                .enumerate()
                .map(|(n, &l)| [n.to_string(), num(l), op.kappa_label.clone()])
        });
        write_csv(self.out, "dtn.csv", &["n", "lambda", "kappa_label"], rows)
    }

    fn cauchy_kernel(&mut self) -> Result<()> {
        let (seed, dt, n) = (self.seed()?, self.dt()?, self.n_paths()?);
        let edges = self.kernel_edges()?;
        let params = self.params()?;
        let field = self.field.clone();
        let runs = self.boundary_runs(&field, params, 100.0, 0)?;
        let est = estimate_jump_kernel(&runs, &self.domain, &edges)?;
        let op = self.disk_operator(&field);
        let abel_r = self.abel_r()?;
        let reference = op.as_ref().map(|op| KernelEstimate::from_reference(op, &edges, abel_r)).transpose()?;
        write_csv(
            self.out,
            "kernel.csv",
            &["delta_mid", "density", "stderr", "reference_value"],
            (0..est.n_bins()).map(|i| {
                [
                    num(est.mid(i)),
                    num(est.density[i]),
                    num(est.stderr[i]),
                    opt_num(reference.as_ref().map(|r| r.density[i])),
                ]
            }),
        )?;
        let jumps = runs.runs.iter().flat_map(|r| {
            r.jumps
                .iter()
                .map(move |j| [r.path_id.to_string(), num(j.s), num(j.from.theta), num(j.to.theta), num(j.gap)])
        });
        write_csv(self.out, "jumps.csv", &["path_id", "s", "theta_from", "theta_to", "gap"], jumps)?;
        if let Some(op) = &op {
            self.write_kernel_ref(&[op])?;
        }
        let s_budget = runs.s_budget();
        self.push(Check::info("kernel.local_time_budget", s_budget).provenance(runs.seed, dt, n));
        let rel = self.cfg.number("check.rel_tol", 0.10)?;
        for i in 0..est.n_bins() {
            self.push(
                Check::new(
                    format!("kernel.bin{i:02}"),
                    est.density[i],
                    reference.as_ref().map(|r| r.density[i]),
                    Tolerance::Rel(rel),
                )
                .stderr(est.stderr[i])
                .provenance(runs.seed, dt, est.counts[i] as usize)
                .low_power(est.low_confidence[i]),
            );
        }
        // Normalization-free shape check: the bin centered at π/2 against the last bin before π.
        let w = PI / 8.0;
        let narrow = [[PI / 2.0 - w / 2.0, PI / 2.0 + w / 2.0], [PI - w, PI]];
        let mid = estimate_jump_kernel(&runs, &self.domain, &narrow[0])?;
        let end = estimate_jump_kernel(&runs, &self.domain, &narrow[1])?;
        let ratio_ref = match &op {
            Some(op) => {
                let a = KernelEstimate::from_reference(op, &narrow[0], self.abel_r()?)?;
                let b = KernelEstimate::from_reference(op, &narrow[1], self.abel_r()?)?;
                Some(a.density[0] / b.density[0])
            }
            None => None,
        };
        let ratio = mid.density[0] / end.density[0];
        let low = mid.any_low_confidence() || end.any_low_confidence();
        self.push(
            Check::new("kernel.shape_ratio", ratio, ratio_ref, Tolerance::Abs(0.3))
                .provenance(seed, dt, n)
                .low_power(low),
        );
        Ok(())
    }

    fn generator(&mut self) -> Result<()> {
        let (dt, n) = (self.dt()?, self.n_paths()?);
        let (mode, sine) = self.data()?;
        let t = self.cfg.number("probe.t", 0.05)?;
        let bins = self.cfg.or("probe.bins", 16usize)?;
        let params = self.params()?;
        let field = self.field.clone();
        let runs = self.boundary_runs(&field, params, 100.0, 0)?;
        let op = self.disk_operator(&field);
        let phi = FourierSeries::mode(mode as usize, 1.0, sine);
        let probe = generator_probe(&runs, &self.domain, &phi, t, bins, op.as_ref())?;
        write_csv(
            self.out,
            "probes.csv",
            &["bin_theta", "probe_value", "stderr", "reference_value"],
            probe.iter().map(|b| [num(b.theta_mid), num(b.value), num(b.stderr), opt_num(b.reference)]),
        )?;
        if let Some(op) = op.as_ref() {
            let low = probe.iter().any(|b| b.samples < 25 || !(b.stderr > 0.0));
            // The joint test needs more paths than bins; below that only the diagonal χ² is available.
            let check = match generator_probe_fit(&runs, &self.domain, &phi, t, bins, op, 0.999) {
                Ok(fit) => Check::new("generator.hotelling_t2", fit.statistic, Some(fit.critical), Tolerance::AtMost)
                    .low_power(low),
                Err(EstimatorError::InsufficientData(_)) => {
                    let chi2: f64 =
                        probe.iter().map(|b| ((b.value - b.reference.unwrap_or(0.0)) / b.stderr).powi(2)).sum();
                    Check::new("generator.chi2", chi2, Some(chi2_quantile(0.999, probe.len())), Tolerance::AtMost)
                        .low_power(true)
                }
                Err(e) => return Err(e.into()),
            };
            self.push(check.provenance(runs.seed, dt, n));
        }
        for (i, b) in probe.iter().enumerate() {
            self.push(
                Check::info(format!("generator.bin{i:02}"), b.value)
                    .stderr(b.stderr)
                    .provenance(runs.seed, dt, b.samples),
            );
        }
        Ok(())
    }

    fn spectral(&mut self) -> Result<()> {
        let (dt, n) = (self.dt()?, self.n_paths()?);
        let modes = self.cfg.or("spectral.modes", 3usize)?;
        let lags = self.cfg.or("spectral.lags", 10usize)?;
        let t_max = self.cfg.number("spectral.t_max", 2.0)?;
        let params = self.params()?;
        let field = self.field.clone();
        let runs = self.boundary_runs(&field, params, 100.0, 0)?;
        let op = self.disk_operator(&field);
        let mut rows = Vec::new();
        for m in 1..=modes {
            let grid: Vec<f64> = (1..=lags).map(|j| t_max * j as f64 / (lags * m) as f64).collect();
            let sd = spectral_decay(&runs, &self.domain, m, &grid)?;
            for (k, &t) in sd.t_used.iter().enumerate() {
                rows.push([m.to_string(), num(t), num(sd.char_fn[k]), num(sd.char_stderr[k])]);
            }
            let rel = match self.cfg.get::<f64>("check.rel_tol")? {
                Some(r) => r,
                None => 0.05 + 0.01 * (m as f64 - 1.0),
            };
            let reference = op.as_ref().and_then(|o| o.eigenvalues.get(m).copied());
            self.push(
                Check::new(format!("spectral.lambda{m}"), sd.lambda, reference, Tolerance::Rel(rel))
                    .stderr(sd.stderr)
                    .provenance(runs.seed, dt, n),
            );
        }
        write_csv(self.out, "spectral.csv", &["mode", "t", "char_fn", "stderr"], rows)
    }

    fn pair_integral(&self, field: &Field, a: &BoundaryArc<f64>, b: &BoundaryArc<f64>) -> Result<f64> {
        let op = self
            .disk_operator(field)
            .ok_or_else(|| anyhow!("the kernel reference needs a rotation-invariant field on the unit disk"))?;
        Ok(arc_pair_integral(&op, a, b, self.abel_r()?)?)
    }

    fn levy(&mut self) -> Result<()> {
        let (dt, n) = (self.dt()?, self.n_paths()?);
        let (a, b) = self.arcs()?;
        let t = self.cfg.number("levy.t", 1.0)?;
        let rotations = self.cfg.or("levy.rotations", 8usize)?;
        let field = self.field.clone();
        let pair = self.pair_integral(&field, &a, &b)?;
        let params = self.params()?;
        let runs = self.boundary_runs(&field, params, 100.0, 0)?;
        let l = levy_identity_check(&runs, &self.domain, &a, &b, t, rotations, pair)?;
        let tol = self.cfg.number("check.tol", 0.1)?;
        self.push(Check::info("levy.lhs", l.lhs.value).stderr(l.lhs.stderr).provenance(runs.seed, dt, l.windows));
        self.push(Check::info("levy.rhs", l.rhs));
        self.push(
            Check::new("levy.ratio", l.ratio, Some(1.0), Tolerance::Abs(tol))
                .stderr(l.ratio_stderr)
                .provenance(runs.seed, dt, n),
        );
        Ok(())
    }

    fn excursion_rate(&mut self) -> Result<()> {
        let (dt, n) = (self.dt()?, self.n_paths()?);
        let (a, b) = self.arcs()?;
        let rotations = self.cfg.or("levy.rotations", 8usize)?;
        let field = self.field.clone();
        let pair = self.pair_integral(&field, &a, &b)?;
        let params = self.params()?;
        let runs = self.boundary_runs(&field, params, 100.0, 0)?;
        let rows = runs.runs.iter().flat_map(|r| {
            r.excursions.iter().map(move |e| {
                [r.path_id.to_string(), num(e.local_time_stamp), num(e.start.theta), num(e.end.theta), num(e.duration)]
            })
        });
        write_csv(self.out, "excursions.csv", &["path_id", "s", "theta_start", "theta_end", "duration"], rows)?;
        let r = excursion_rate(&runs, &self.domain, &a, &b, rotations, pair)?;
        let tol = self.cfg.number("check.rel_tol", 0.15)?;
        self.push(
            Check::new("excursions.rate", r.rate, Some(r.reference), Tolerance::Rel(tol))
                .stderr(r.stderr)
                .provenance(runs.seed, dt, r.count as usize)
                .low_power(r.count < 25),
        );
        self.push(
            Check::new("excursions.bijection_pairs", runs.bijection_pairs as f64, Some(0.0), Tolerance::Above)
                .provenance(runs.seed, dt, n),
        );
        Ok(())
    }

    fn discriminate(&mut self) -> Result<()> {
        let (dt, n) = (self.dt()?, self.n_paths()?);
        let first = self.field.clone();
        let second = self.cfg.field("kappa2", &self.domain)?;
        let lags = self.cfg.or("spectral.lags", 10usize)?;
        let t_max = self.cfg.number("spectral.t_max", 1.0)?;
        let grid: Vec<f64> = (1..=lags).map(|j| t_max * j as f64 / lags as f64).collect();
        let edges = self.kernel_edges()?;

        let p1 = self.params()?;
        let p2 = self.params_for(&second, 1)?;
        let r1 = self.boundary_runs(&first, p1, 40.0, 1)?;
        let r1b = self.boundary_runs(&first, p1, 40.0, 2)?;
        let r2 = self.boundary_runs(&second, p2, 40.0, 3)?;
        let s1 = spectral_decay(&r1, &self.domain, 1, &grid)?;
        let s2 = spectral_decay(&r2, &self.domain, 1, &grid)?;
        let pooled = (s1.stderr.powi(2) + s2.stderr.powi(2)).sqrt();
        self.push(
            Check::info(format!("discriminate.lambda1[{}]", first.label), s1.lambda)
                .stderr(s1.stderr)
                .provenance(r1.seed, dt, n),
        );
        self.push(
            Check::info(format!("discriminate.lambda1[{}]", second.label), s2.lambda)
                .stderr(s2.stderr)
                .provenance(r2.seed, dt, n),
        );
        self.push(Check::new(
            "discriminate.separation",
            (s1.lambda - s2.lambda).abs() / pooled,
            Some(3.0),
            Tolerance::Above,
        ));

        let n_max = self.n_max()?;
        let op1 = dtn_for_field(&first, n_max)?;
        let op2 = dtn_for_field(&second, n_max)?;
        let abel_r = self.abel_r()?;
        let k1 = KernelEstimate::from_reference(&op1, &edges, abel_r)?;
        let k2 = KernelEstimate::from_reference(&op2, &edges, abel_r)?;
        let d_ref = kernel_distance(&k1, &k2)?;
        self.push(Check::new("discriminate.reference_distance", d_ref.value, Some(0.0), Tolerance::Above));
        let e1 = estimate_jump_kernel(&r1, &self.domain, &edges)?;
        let e1b = estimate_jump_kernel(&r1b, &self.domain, &edges)?;
        let d_self = kernel_distance(&e1, &e1b)?;
        self.push(
            Check::new("discriminate.self_distance", d_self.value, Some(d_self.noise_floor), Tolerance::AtMost)
                .provenance(r1b.seed, dt, n)
                .low_power(d_self.bins == 0),
        );
        self.write_dtn(&[&op1, &op2], 16)?;
        self.write_kernel_ref(&[&op1, &op2])
    }

    fn dtn_reference(&mut self) -> Result<()> {
        let n_max = self.cfg.or("ref.n_max", 8usize)?;
        let op = dtn_for_field(&self.field, n_max)?;
        self.write_dtn(&[&op], n_max)?;
        if n_max >= 2 {
            self.write_kernel_ref(&[&op])?;
        }
        let tol = self.cfg.number("check.tol", 1e-8)?;
        if self.field.is_constant() {
            let a = self.field.eval(Vector::new(0.0, 0.0)).xx;
            for (n, &l) in op.eigenvalues.iter().enumerate() {
                self.push(Check::new(format!("dtn.lambda{n}"), l, Some(a * n as f64), Tolerance::Abs(tol)));
            }
        } else if self.field.is_rotation_invariant() {
            let f = &self.field;
            let other = dtn_eigenvalues_radial(
                |r| f.radial_value(r).unwrap(),
                n_max,
                Integrator::DormandPrince,
                f.label.clone(),
            )?;
            for (n, (&l, &m)) in op.eigenvalues.iter().zip(&other.eigenvalues).enumerate() {
                self.push(Check::new(format!("dtn.lambda{n}"), l, Some(m), Tolerance::Abs(tol)));
            }
        }
        Ok(())
    }

    fn scaling(&mut self) -> Result<()> {
        let (seed, dt, n) = (self.seed()?, self.dt()?, self.n_paths()?);
        let horizon = self.cfg.number("sim.horizon", 1.0)?;
        let params = self.params()?;
        let stepper = Stepper::new(&self.field, &self.domain, params)?;
        let (mut cvf, mut scale, mut violations, mut checked) = (0.0f64, 0.0f64, 0usize, 0usize);
        for id in 0..n as u64 {
            let mut rng = seed_rng(seed, id);
            let x0 = self.domain.sample_interior(&mut rng);
            let path = stepper.sample_path(x0, horizon, Recording::Full, &mut rng)?;
            let total = path.final_local_time();
            if !(total > 0.0) {
                continue;
            }
            checked += 1;
            let (lhs, rhs) = change_of_variables_check(&path, |s| (3.0 * s).sin() + s * s, 0.25 * total, 0.8 * total)?;
            cvf = cvf.max((lhs - rhs).abs() / lhs.abs().max(1.0));
            for k in 0..50 {
                let s = total * (k as f64 + 0.5) / 50.0;
                let j = inverse_index(&path, s)?;
                let ok = (path.local_time[j] > s || j + 1 == path.len()) && (j == 0 || path.local_time[j - 1] <= s);
                violations += usize::from(!ok);
            }
            for r in [2.0, 0.5, 3.7] {
                scale = scale.max(scaling_check(&path, &self.domain, r, 64)?.max_error());
            }
        }
        self.push(
            Check::new("scaling.change_of_variables", cvf, Some(1e-12), Tolerance::AtMost)
                .provenance(seed, dt, checked),
        );
        self.push(
            Check::new("scaling.right_inverse_violations", violations as f64, Some(0.0), Tolerance::AtMost)
                .provenance(seed, dt, checked),
        );
        self.push(Check::new("scaling.dilation", scale, Some(1e-12), Tolerance::AtMost).provenance(seed, dt, checked));
        Ok(())
    }
}
