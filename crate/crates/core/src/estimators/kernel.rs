//! Boundary-process statistics: jump kernel, generator and spectral probes,
//! the Lévy-system identity, excursion rates, and kernel comparison.

use crate::excursions::{excursion_counting_measure, BoundaryArc};
use crate::geometry::{DomainKind, DomainSpec};
use crate::quadrature::GaussLegendre;
use crate::reference::dtn::{DtNOperator, FourierSeries};
use crate::reference::kernel::{kernel_double_integral, levy_kernel};
use crate::scalar::{count, lit, Real};
use crate::stats::{chi2_quantile, jackknife_stderr, slope_through_origin, Welford};

use super::{BoundaryRuns, EstimatorError, MCEstimate};

/// Bins holding fewer jumps than this are flagged low-confidence.
pub const MIN_BIN_COUNT: u64 = 25;

/// Jump density per unit σ×σ per unit local time, folded in `|Δ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate<T> {
    pub edges: Vec<T>,
    pub density: Vec<T>,
    pub stderr: Vec<T>,
    pub counts: Vec<u64>,
    pub low_confidence: Vec<bool>,
    pub min_angle: T,
    pub s_budget: T,
    pub label: String,
}

impl<T: Real> KernelEstimate<T> {
    pub fn n_bins(&self) -> usize {
        self.density.len()
    }

    pub fn mid(&self, i: usize) -> T {
        (self.edges[i] + self.edges[i + 1]) * lit(0.5)
    }

    pub fn width(&self, i: usize) -> T {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn any_low_confidence(&self) -> bool {
        self.low_confidence.iter().any(|&b| b)
    }

    /// Bin averages of the Lévy kernel of `op` (zero standard errors).
    pub fn from_reference(op: &DtNOperator<T>, edges: &[T], abel_r: T) -> Result<Self, EstimatorError> {
        check_edges(edges)?;
        let gl = GaussLegendre::<T>::new(16);
        let mut density = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let mut err = None;
            let v = gl.composite(w[0], w[1], 8, |d| {
                levy_kernel(op, d, abel_r).unwrap_or_else(|e| {
                    err = Some(e);
                    T::zero()
                })
            });
            if let Some(e) = err {
                return Err(e.into());
            }
            density.push(v / (w[1] - w[0]));
        }
        let n = density.len();
        Ok(Self {
            edges: edges.to_vec(),
            density,
            stderr: vec![T::zero(); n],
            counts: vec![0; n],
            low_confidence: vec![false; n],
            min_angle: edges[0],
            s_budget: T::zero(),
            label: op.kappa_label.clone(),
        })
    }
}

fn check_edges<T: Real>(edges: &[T]) -> Result<(), EstimatorError> {
    if edges.len() < 2
        || edges.windows(2).any(|w| !(w[1] > w[0]))
        || !(edges[0] > T::zero())
        || edges[edges.len() - 1] > T::PI()
    {
        return Err(EstimatorError::InvalidArgument("bin edges must increase within (0, π]".into()));
    }
    Ok(())
}

fn require_disk<T: Real>(domain: &DomainSpec<T>) -> Result<(), EstimatorError> {
    if !matches!(domain.kind, DomainKind::UnitDisk) {
        return Err(EstimatorError::InvalidArgument("rotation-invariant statistics need a disk".into()));
    }
    Ok(())
}

/// Folded histogram of jump displacements.
///
/// With stationary starts the expected number of jumps with `|Δ|` in a bin of
/// parameter width `w` during local time `S` is `2·S·R·w·N` on a disk of radius
/// `R` (two signs, `∫ dσ(x)/σ(∂D) = 1`, `dσ(y) = R dΔ`).
pub fn estimate_jump_kernel<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    edges: &[T],
) -> Result<KernelEstimate<T>, EstimatorError> {
    check_edges(edges)?;
    require_disk(domain)?;
    if edges[0] < runs.config.store_angle {
        return Err(EstimatorError::InvalidArgument("first bin edge is below the stored jump resolution".into()));
    }
    let n = edges.len() - 1;
    let mut counts = vec![0u64; n];
    for run in &runs.runs {
        for j in &run.jumps {
            let d = j.displacement(domain).abs() / domain.scale;
            if d < edges[0] || d > edges[n] {
                continue;
            }
            let b = edges.partition_point(|&e| e <= d).saturating_sub(1).min(n - 1);
            counts[b] += 1;
        }
    }
    let s = runs.s_budget();
    if !(s > T::zero()) {
        return Err(EstimatorError::InsufficientData("no local time accumulated".into()));
    }
    let two = lit::<T>(2.0);
    let (mut density, mut stderr) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, &c) in counts.iter().enumerate() {
        let norm = two * s * domain.scale * (edges[i + 1] - edges[i]);
        let cf = T::from_u64(c).unwrap();
        density.push(cf / norm);
        stderr.push(cf.sqrt() / norm);
    }
    Ok(KernelEstimate {
        edges: edges.to_vec(),
        density,
        stderr,
        low_confidence: counts.iter().map(|&c| c < MIN_BIN_COUNT).collect(),
        counts,
        min_angle: edges[0],
        s_budget: s,
        label: runs.label.clone(),
    })
}

fn lag_for<T: Real>(runs: &BoundaryRuns<T>, t: T) -> Result<usize, EstimatorError> {
    let h = runs.config.trace_step;
    let lag = (t / h).round().to_usize().unwrap_or(0);
    if lag == 0 {
        return Err(EstimatorError::Resolution { t: t.to_f64_lossy(), dt: h.to_f64_lossy(), limit: h.to_f64_lossy() });
    }
    Ok(lag)
}

/// Ratio estimate `Σ_p a_p / Σ_p b_p` with the delta-method standard error over
/// independent paths.
fn ratio_estimate<T: Real>(num: &[T], den: &[T]) -> (T, T) {
    let a: T = num.iter().copied().sum();
    let b: T = den.iter().copied().sum();
    if !(b > T::zero()) {
        return (T::zero(), T::infinity());
    }
    let r = a / b;
    let p = num.len();
    if p < 2 {
        return (r, T::infinity());
    }
    let ss: T = num.iter().zip(den).map(|(&x, &y)| (x - r * y) * (x - r * y)).sum();
    let pf = count::<T>(p);
    (r, (ss * pf / (pf - T::one())).sqrt() / b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBin<T> {
    pub theta_mid: T,
    pub value: T,
    pub stderr: T,
    pub samples: usize,
    /// Bin average of `−Λφ` when an operator is supplied.
    pub reference: Option<T>,
}

/// Per-path sums behind a generator probe.
struct ProbeSums<T> {
    width: T,
    sums: Vec<Vec<T>>,
    cnts: Vec<Vec<T>>,
    samples: Vec<usize>,
}

fn probe_sums<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    phi: &FourierSeries<T>,
    t: T,
    n_bins: usize,
) -> Result<ProbeSums<T>, EstimatorError> {
    require_disk(domain)?;
    if n_bins == 0 {
        return Err(EstimatorError::InvalidArgument("need at least one bin".into()));
    }
    let lag = lag_for(runs, t)?;
    let t_used = runs.config.trace_step * count::<T>(lag);
    let width = domain.period() / count::<T>(n_bins);
    let p = runs.runs.len();
    let mut sums = vec![vec![T::zero(); p]; n_bins];
    let mut cnts = vec![vec![T::zero(); p]; n_bins];
    let mut samples = vec![0usize; n_bins];
    for (pi, run) in runs.runs.iter().enumerate() {
        let values: Vec<T> = run.trace.iter().map(|&th| phi.eval(th)).collect();
        for k in 0..run.trace.len().saturating_sub(lag) {
            let b = (run.trace[k] / width).floor().to_usize().unwrap_or(0).min(n_bins - 1);
            sums[b][pi] = sums[b][pi] + (values[k + lag] - values[k]) / t_used;
            cnts[b][pi] = cnts[b][pi] + T::one();
            samples[b] += 1;
        }
    }
    Ok(ProbeSums { width, sums, cnts, samples })
}

/// `[(T̂_tφ)(x) − φ(x)] / t` binned by the starting point `x`, from all trace
/// windows of local-time length `t`.
pub fn generator_probe<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    phi: &FourierSeries<T>,
    t: T,
    n_bins: usize,
    op: Option<&DtNOperator<T>>,
) -> Result<Vec<ProbeBin<T>>, EstimatorError> {
    let ps = probe_sums(runs, domain, phi, t, n_bins)?;
    let width = ps.width;
    let gl = GaussLegendre::<T>::new(8);
    let minus_lambda_phi = op.map(|o| o.apply(phi).series);
    Ok((0..n_bins)
        .map(|b| {
            let (value, stderr) = ratio_estimate(&ps.sums[b], &ps.cnts[b]);
            let lo = width * count::<T>(b);
            let reference = minus_lambda_phi.as_ref().map(|s| -gl.integrate(lo, lo + width, |x| s.eval(x)) / width);
            ProbeBin { theta_mid: lo + width * lit(0.5), value, stderr, samples: ps.samples[b], reference }
        })
        .collect())
}

/// Joint comparison of all probe bins with `−Λφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFit<T> {
    pub bins: Vec<ProbeBin<T>>,
    /// Hotelling's `T² = rᵀ Σ⁻¹ r` for the residuals `r`, with `Σ` the
    /// path-clustered covariance of the bin estimates (bins share paths, so it
    /// is not diagonal).
    pub statistic: f64,
    /// `T²` quantile at `level`.
    pub critical: f64,
    pub level: f64,
    pub paths: usize,
}

impl<T> ProbeFit<T> {
    pub fn consistent(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// [`generator_probe`] plus a joint test of the whole profile against `−Λφ`.
pub fn generator_probe_fit<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    phi: &FourierSeries<T>,
    t: T,
    n_bins: usize,
    op: &DtNOperator<T>,
    level: f64,
) -> Result<ProbeFit<T>, EstimatorError> {
    let bins = generator_probe(runs, domain, phi, t, n_bins, Some(op))?;
    let ps = probe_sums(runs, domain, phi, t, n_bins)?;
    let p = runs.runs.len();
    let critical = crate::stats::hotelling_quantile(level, n_bins, p).ok_or_else(|| {
        EstimatorError::InsufficientData(format!("{p} paths cannot support a {n_bins}-bin covariance"))
    })?;
    // Influence of path `i` on bin `b`: (x_ib − r_b y_ib) / Σ_i y_ib.
    let psi: Vec<Vec<f64>> = (0..n_bins)
        .map(|b| {
            let total: f64 = ps.cnts[b].iter().map(|c| c.to_f64_lossy()).sum();
            let r = bins[b].value.to_f64_lossy();
            (0..p).map(|i| (ps.sums[b][i].to_f64_lossy() - r * ps.cnts[b][i].to_f64_lossy()) / total).collect()
        })
        .collect();
    let scale = p as f64 / (p as f64 - 1.0);
    let cov: Vec<Vec<f64>> = (0..n_bins)
        .map(|a| (0..n_bins).map(|b| scale * psi[a].iter().zip(&psi[b]).map(|(x, y)| x * y).sum::<f64>()).collect())
        .collect();
    let resid: Vec<f64> = bins.iter().map(|b| (b.value - b.reference.unwrap_or_else(T::zero)).to_f64_lossy()).collect();
    let statistic = crate::stats::mahalanobis_sq(&cov, &resid)
        .ok_or_else(|| EstimatorError::InsufficientData("singular probe covariance".into()))?;
    Ok(ProbeFit { bins, statistic, critical, level, paths: p })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecay<T> {
    pub mode: usize,
    pub lambda: T,
    pub stderr: T,
    /// Lags actually used (after rounding to the trace grid and truncation at the noise floor).
    pub t_used: Vec<T>,
    /// `E cos(n(X̂_{s+t} − X̂_s))` at the used lags.
    pub char_fn: Vec<T>,
    pub char_stderr: Vec<T>,
    pub truncated: bool,
}

/// `λ_n` from `E e^{in(X̂_{s+t} − X̂_s)} = e^{−λ_n t}`: least-squares slope of
/// `−log` of the empirical characteristic function through the origin, with a
/// delete-one-path jackknife error.
pub fn spectral_decay<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    n: usize,
    t_grid: &[T],
) -> Result<SpectralDecay<T>, EstimatorError> {
    require_disk(domain)?;
    let p = runs.runs.len();
    if p < 2 || n == 0 {
        return Err(EstimatorError::InsufficientData("need a nonzero mode and at least two paths".into()));
    }
    let lags = t_grid.iter().map(|&t| lag_for(runs, t)).collect::<Result<Vec<_>, _>>()?;
    let nf = count::<T>(n) * lit::<T>(std::f64::consts::TAU) / domain.period();
    let mut sums = vec![vec![T::zero(); p]; lags.len()];
    let mut cnts = vec![vec![T::zero(); p]; lags.len()];
    for (pi, run) in runs.runs.iter().enumerate() {
        for (j, &lag) in lags.iter().enumerate() {
            let m = run.trace.len().saturating_sub(lag);
            let s: T = (0..m).map(|k| (nf * (run.trace[k + lag] - run.trace[k])).cos()).sum();
            sums[j][pi] = s;
            cnts[j][pi] = count::<T>(m);
        }
    }
    let mut keep = 0;
    let mut char_fn = Vec::new();
    let mut char_stderr = Vec::new();
    for j in 0..lags.len() {
        let (c, se) = ratio_estimate(&sums[j], &cnts[j]);
        if !(c > se * lit(3.0)) {
            break;
        }
        char_fn.push(c);
        char_stderr.push(se);
        keep += 1;
    }
    if keep == 0 {
        return Err(EstimatorError::InsufficientData(
            "characteristic function below the noise floor at every lag".into(),
        ));
    }
    let t_used: Vec<T> = lags[..keep].iter().map(|&l| runs.config.trace_step * count::<T>(l)).collect();
    let fit = |c: &[T]| slope_through_origin(&t_used, &c.iter().map(|&v| -v.ln()).collect::<Vec<_>>());
    let lambda = fit(&char_fn);
    let totals: Vec<(T, T)> =
        (0..keep).map(|j| (sums[j].iter().copied().sum(), cnts[j].iter().copied().sum())).collect();
    let loo: Vec<T> = (0..p)
        .map(|pi| {
            let c: Vec<T> = (0..keep)
                .map(|j| ((totals[j].0 - sums[j][pi]) / (totals[j].1 - cnts[j][pi])).max(T::min_positive_value()))
                .collect();
            fit(&c)
        })
        .collect();
    Ok(SpectralDecay {
        mode: n,
        lambda,
        stderr: jackknife_stderr(&loo),
        t_used,
        char_fn,
        char_stderr,
        truncated: keep < lags.len(),
    })
}

/// `∫_A ∫_B N dσ dσ` on the unit disk from the Lévy kernel of `op`.
pub fn arc_pair_integral<T: Real>(
    op: &DtNOperator<T>,
    a: &BoundaryArc<T>,
    b: &BoundaryArc<T>,
    abel_r: T,
) -> Result<T, EstimatorError> {
    if a.overlaps(b, T::TAU()) {
        return Err(EstimatorError::OverlappingArcs);
    }
    let mut err = None;
    let v = kernel_double_integral(
        |d| {
            levy_kernel(op, d, abel_r).unwrap_or_else(|e| {
                err = Some(e);
                T::zero()
            })
        },
        a.start,
        a.start + a.length,
        b.start,
        b.start + b.length,
        16,
    );
    match err {
        Some(e) => Err(e.into()),
        None => Ok(v),
    }
}

fn check_arcs<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    a: &BoundaryArc<T>,
    b: &BoundaryArc<T>,
) -> Result<(), EstimatorError> {
    let p = domain.period();
    if a.overlaps(b, p) {
        return Err(EstimatorError::OverlappingArcs);
    }
    if a.gap(b, p) < runs.config.store_angle {
        return Err(EstimatorError::InvalidArgument("arc gap is below the stored jump resolution".into()));
    }
    Ok(())
}

fn rotations_of<T: Real>(arc: &BoundaryArc<T>, period: T, k: usize, m: usize) -> BoundaryArc<T> {
    arc.rotated(period * count::<T>(k) / count::<T>(m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyIdentity<T> {
    /// Mean number of jumps from A into B during local time `[0, t)`.
    pub lhs: MCEstimate<T>,
    /// `t · ∫_A∫_B N dσ dσ / σ(∂D)`.
    pub rhs: T,
    pub ratio: T,
    pub ratio_stderr: T,
    pub windows: usize,
}

/// Lévy-system identity `E Σ_{s<t} [X̂_{s−} ∈ A, X̂_s ∈ B] = E ∫₀^t ∫_B N(X̂_s, y) dσ(y) ds [X̂_s ∈ A]`
/// at deterministic `t`, over disjoint windows `[m t, (m+1) t)` of every run.
///
/// κ is rotation invariant, so counts for the pair `(A, B)` rotated by
/// `k·period/rotations` estimate the same mean and are averaged per window.
pub fn levy_identity_check<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    a: &BoundaryArc<T>,
    b: &BoundaryArc<T>,
    t: T,
    rotations: usize,
    pair_integral: T,
) -> Result<LevyIdentity<T>, EstimatorError> {
    require_disk(domain)?;
    check_arcs(runs, domain, a, b)?;
    if !(t > T::zero()) || rotations == 0 {
        return Err(EstimatorError::InvalidArgument("t and rotations must be positive".into()));
    }
    let period = domain.period();
    let rot: Vec<(BoundaryArc<T>, BoundaryArc<T>)> = (0..rotations)
        .map(|k| (rotations_of(a, period, k, rotations), rotations_of(b, period, k, rotations)))
        .collect();
    let mut w = Welford::new();
    for run in &runs.runs {
        let n_win = (run.total_s / t).floor().to_usize().unwrap_or(0);
        let mut counts = vec![0usize; n_win];
        for j in &run.jumps {
            let m = (j.s / t).floor().to_usize().unwrap_or(usize::MAX);
            if m >= n_win {
                continue;
            }
            counts[m] += rot
                .iter()
                .filter(|(ra, rb)| ra.contains(j.from.theta, period) && rb.contains(j.to.theta, period))
                .count();
        }
        for c in counts {
            w.push(count::<T>(c) / count::<T>(rotations));
        }
    }
    if w.count() < 2 {
        return Err(EstimatorError::InsufficientData("fewer than two complete windows".into()));
    }
    let rhs = t * pair_integral / domain.boundary_length();
    let lhs = MCEstimate::from_welford(&w, runs.params.dt, runs.seed);
    Ok(LevyIdentity { lhs, rhs, ratio: lhs.value / rhs, ratio_stderr: lhs.stderr / rhs, windows: w.count() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionRate<T> {
    /// Excursions from A to B summed over rotations.
    pub count: u64,
    pub s_budget: T,
    /// Count per rotation per unit local time.
    pub rate: T,
    pub stderr: T,
    /// `∫_A∫_B N dσ dσ / σ(∂D)`.
    pub reference: T,
    pub ratio: T,
}

/// Excursions starting in A and ending in B per unit local time, against the
/// compensator rate of the stationary boundary process.
pub fn excursion_rate<T: Real>(
    runs: &BoundaryRuns<T>,
    domain: &DomainSpec<T>,
    a: &BoundaryArc<T>,
    b: &BoundaryArc<T>,
    rotations: usize,
    pair_integral: T,
) -> Result<ExcursionRate<T>, EstimatorError> {
    require_disk(domain)?;
    check_arcs(runs, domain, a, b)?;
    if rotations == 0 {
        return Err(EstimatorError::InvalidArgument("rotations must be positive".into()));
    }
    let period = domain.period();
    let mut total = 0u64;
    for run in &runs.runs {
        for k in 0..rotations {
            let (ra, rb) = (rotations_of(a, period, k, rotations), rotations_of(b, period, k, rotations));
            total += excursion_counting_measure(&run.excursions, domain, run.total_s, &ra, &rb) as u64;
        }
    }
    let s = runs.s_budget();
    let norm = s * count::<T>(rotations);
    let rate = T::from_u64(total).unwrap() / norm;
    let reference = pair_integral / domain.boundary_length();
    Ok(ExcursionRate {
        count: total,
        s_budget: s,
        rate,
        stderr: T::from_u64(total).unwrap().sqrt() / norm,
        reference,
        ratio: rate / reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDistance<T> {
    /// χ² statistic `Σ (d₁ − d₂)² / (se₁² + se₂²)` when either input carries
    /// errors, otherwise the L² distance `(Σ w (d₁ − d₂)²)^{1/2}` over bin widths.
    pub value: T,
    pub weighted: bool,
    pub bins: usize,
    /// 0.999 χ² quantile for weighted distances, 0 otherwise.
    pub noise_floor: T,
}

impl<T: Real> KernelDistance<T> {
    pub fn within_noise(&self) -> bool {
        self.value <= self.noise_floor
    }
}

/// Distance between two kernels on common bins with `Δ ≥ min_angle`;
/// low-confidence bins are skipped.
pub fn kernel_distance<T: Real>(
    k1: &KernelEstimate<T>,
    k2: &KernelEstimate<T>,
) -> Result<KernelDistance<T>, EstimatorError> {
    if k1.edges.len() != k2.edges.len() || k1.edges.iter().zip(&k2.edges).any(|(&a, &b)| (a - b).abs() > lit(1e-12)) {
        return Err(EstimatorError::IncompatibleBinning);
    }
    let min_angle = k1.min_angle.max(k2.min_angle);
    let used: Vec<usize> = (0..k1.n_bins())
        .filter(|&i| k1.edges[i] >= min_angle && !k1.low_confidence[i] && !k2.low_confidence[i])
        .collect();
    if used.is_empty() {
        return Err(EstimatorError::InsufficientData("no comparable bins".into()));
    }
    let weighted = used.iter().any(|&i| k1.stderr[i] > T::zero() || k2.stderr[i] > T::zero());
    if weighted {
        let mut chi2 = T::zero();
        let mut bins = 0;
        for &i in &used {
            let var = k1.stderr[i] * k1.stderr[i] + k2.stderr[i] * k2.stderr[i];
            if var > T::zero() {
                let d = k1.density[i] - k2.density[i];
                chi2 = chi2 + d * d / var;
                bins += 1;
            }
        }
        Ok(KernelDistance { value: chi2, weighted, bins, noise_floor: lit(chi2_quantile(0.999, bins)) })
    } else {
        let ss: T = used.iter().map(|&i| (k1.density[i] - k2.density[i]).powi(2) * k1.width(i)).sum();
        Ok(KernelDistance { value: ss.sqrt(), weighted, bins: used.len(), noise_floor: T::zero() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn edges() -> Vec<f64> {
        (0..=6).map(|k| PI / 4.0 + k as f64 * PI / 8.0).collect()
    }

    #[test]
    fn reference_kernel_bins_match_feller_closed_form() {
        let op = DtNOperator::<f64>::constant(0.5, 64).unwrap();
        let k = KernelEstimate::from_reference(&op, &edges(), 1.0 - 1e-6).unwrap();
        for i in 0..k.n_bins() {
            let (a, b) = (k.edges[i], k.edges[i + 1]);
            let exact = (1.0 / (a / 2.0).tan() - 1.0 / (b / 2.0).tan()) / (4.0 * PI) / (b - a);
            assert!((k.density[i] - exact).abs() < 1e-6 * exact);
        }
    }

    #[test]
    fn distance_of_identical_inputs_is_zero() {
        let op = DtNOperator::<f64>::constant(0.5, 64).unwrap();
        let k = KernelEstimate::from_reference(&op, &edges(), 1.0 - 1e-4).unwrap();
        let d = kernel_distance(&k, &k).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(!d.weighted);
    }

    #[test]
    fn factor_two_gap_between_half_and_one() {
        let half =
            KernelEstimate::from_reference(&DtNOperator::<f64>::constant(0.5, 64).unwrap(), &edges(), 1.0 - 1e-4)
                .unwrap();
        let one = KernelEstimate::from_reference(&DtNOperator::<f64>::constant(1.0, 64).unwrap(), &edges(), 1.0 - 1e-4)
            .unwrap();
        let d = kernel_distance(&half, &one).unwrap();
        // N for κ ≡ 1 is twice the Feller kernel, so the gap equals the norm of the latter.
        let norm: f64 = (0..half.n_bins()).map(|i| half.density[i].powi(2) * half.width(i)).sum::<f64>().sqrt();
        assert!((d.value - norm).abs() < 1e-9 * norm);
        assert!(d.value > 0.0);
    }

    #[test]
    fn incompatible_bins_rejected() {
        let op = DtNOperator::<f64>::constant(0.5, 16).unwrap();
        let a = KernelEstimate::from_reference(&op, &edges(), 0.999).unwrap();
        let b = KernelEstimate::from_reference(&op, &[0.5, 1.0, 2.0], 0.999).unwrap();
        assert_eq!(kernel_distance(&a, &b), Err(EstimatorError::IncompatibleBinning));
    }

    #[test]
    fn arc_integral_matches_closed_form() {
        let op = DtNOperator::<f64>::constant(0.5, 128).unwrap();
        let a = BoundaryArc::new(-PI / 8.0, PI / 8.0);
        let b = BoundaryArc::new(7.0 * PI / 8.0, 9.0 * PI / 8.0);
        let v = arc_pair_integral(&op, &a, &b, 1.0 - 1e-6).unwrap();
        let exact =
            crate::reference::kernel::feller_double_integral(-PI / 8.0, PI / 8.0, 7.0 * PI / 8.0, 9.0 * PI / 8.0);
        assert!((v - exact).abs() < 1e-6 * exact, "{v} {exact}");
        assert_eq!(arc_pair_integral(&op, &a, &a, 0.999), Err(EstimatorError::OverlappingArcs));
    }

    #[test]
    fn ratio_estimate_of_equal_ratios_has_no_spread() {
        let (r, se) = ratio_estimate(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
        assert_eq!(r, 2.0);
        assert_eq!(se, 0.0);
    }
}
