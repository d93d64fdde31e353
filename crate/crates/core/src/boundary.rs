//! The boundary process: time change of a reflected path by the right-continuous
//! inverse of its local time, jump extraction and the exact discrete identities.
//!
//! A path record is read as a step function: `X_t = points[i]` and
//! `L_t = local_time[i]` for `t ∈ [times[i], times[i+1])`. Then
//! `τ(s) = sup{r : L_r ≤ s}` is the clock of the first record with `L > s`
//! (the last record when `s` equals the final local time), and the trace
//! `X̂_s = X_{τ(s)}` is the reflected contact point of that record.

use thiserror::Error;

use crate::geometry::{BoundaryPoint, DomainSpec, GeometryError};
use crate::scalar::{lit, Real};
use crate::simulate::PathSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("local time {s} exceeds the accumulated local time {available}")]
    OutOfRange { s: f64, available: f64 },
    #[error("empty path record")]
    EmptyPath,
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("local-time grid must be nondecreasing")]
    UnsortedGrid,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Index of the record realizing `τ(s)`.
pub fn inverse_index<T: Real>(path: &PathSample<T>, s: T) -> Result<usize, BoundaryError> {
    if path.is_empty() {
        return Err(BoundaryError::EmptyPath);
    }
    let total = path.final_local_time();
    if s > total || s < T::zero() || s.is_nan() {
        return Err(BoundaryError::OutOfRange { s: s.to_f64_lossy(), available: total.to_f64_lossy() });
    }
    let j = path.local_time.partition_point(|&l| l <= s);
    Ok(j.min(path.len() - 1))
}

/// `τ(s) = sup{r : L_r ≤ s}` on the step record.
pub fn local_time_inverse<T: Real>(path: &PathSample<T>, s: T) -> Result<T, BoundaryError> {
    Ok(path.times[inverse_index(path, s)?])
}

/// Time-changed boundary process sampled on a local-time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryTrace<T> {
    pub s_values: Vec<T>,
    pub xi_values: Vec<BoundaryPoint<T>>,
    pub source_tau: Vec<T>,
}

impl<T: Real> BoundaryTrace<T> {
    pub fn len(&self) -> usize {
        self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_values.is_empty()
    }

    /// Index of the last grid point with `s_values[j] ≤ s` (the trace is right-continuous).
    pub fn index_at(&self, s: T) -> Option<usize> {
        let j = self.s_values.partition_point(|&v| v <= s);
        j.checked_sub(1)
    }

    /// `X̂_s` read from the grid.
    pub fn value_at(&self, s: T) -> Option<BoundaryPoint<T>> {
        self.index_at(s).map(|j| self.xi_values[j])
    }

    pub fn final_s(&self) -> T {
        self.s_values.last().copied().unwrap_or_else(T::zero)
    }
}

/// `X̂` on the given grid: boundary foot of `X_{τ(s_j)}` for each `s_j`.
pub fn boundary_trace<T: Real>(
    path: &PathSample<T>,
    domain: &DomainSpec<T>,
    s_grid: &[T],
) -> Result<BoundaryTrace<T>, BoundaryError> {
    if s_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(BoundaryError::UnsortedGrid);
    }
    let mut trace = BoundaryTrace::default();
    for &s in s_grid {
        let j = inverse_index(path, s)?;
        let foot = domain.project_unchecked(path.points[j])?.foot;
        trace.s_values.push(s);
        trace.xi_values.push(foot);
        trace.source_tau.push(path.times[j]);
    }
    Ok(trace)
}

/// Local-time grid made of `0` and the local time after every contact with
/// `dL > 0`: exactly the values of `s` where `τ` jumps.
pub fn contact_grid<T: Real>(path: &PathSample<T>) -> Vec<T> {
    let mut grid = vec![T::zero()];
    for w in path.local_time.windows(2) {
        if w[1] > w[0] {
            grid.push(w[1]);
        }
    }
    if grid.len() > 1 && grid[grid.len() - 1] == path.final_local_time() {
        // τ at the final value reads the last record, which need not be a contact.
        grid.pop();
    }
    grid
}

/// Uniform grid with spacing `h` on `[0, L_final]`.
pub fn uniform_grid<T: Real>(path: &PathSample<T>, h: T) -> Vec<T> {
    let total = path.final_local_time();
    if !(h > T::zero()) {
        return vec![T::zero()];
    }
    let n = (total / h).floor().to_usize().unwrap_or(0);
    (0..=n).map(|k| h * T::from_usize(k).unwrap()).filter(|&s| s <= total).collect()
}

/// Median of the positive local-time increments, the default uniform spacing.
pub fn median_increment<T: Real>(path: &PathSample<T>) -> Option<T> {
    let mut inc: Vec<T> = path.local_time.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > T::zero()).collect();
    if inc.is_empty() {
        return None;
    }
    inc.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(inc[inc.len() / 2])
}

/// Trace on [`contact_grid`]: every jump of `X̂` appears between consecutive entries.
pub fn contact_trace<T: Real>(path: &PathSample<T>, domain: &DomainSpec<T>) -> Result<BoundaryTrace<T>, BoundaryError> {
    boundary_trace(path, domain, &contact_grid(path))
}

/// A jump `X̂_{s−} → X̂_s` of the boundary process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent<T> {
    pub s: T,
    pub from: BoundaryPoint<T>,
    pub to: BoundaryPoint<T>,
    /// `τ(s) − τ(s−)`, the duration of the excursion that produced the jump.
    pub gap: T,
}

impl<T: Real> JumpEvent<T> {
    /// Signed parameter displacement `to − from`, wrapped to half a period.
    pub fn displacement(&self, domain: &DomainSpec<T>) -> T {
        domain.param_delta(self.from.theta, self.to.theta)
    }
}

/// Consecutive trace pairs whose parameter separation is at least `min_angle`.
pub fn jump_events<T: Real>(trace: &BoundaryTrace<T>, domain: &DomainSpec<T>, min_angle: T) -> Vec<JumpEvent<T>> {
    let mut out = Vec::new();
    for j in 1..trace.len() {
        let from = trace.xi_values[j - 1];
        let to = trace.xi_values[j];
        let gap = trace.source_tau[j] - trace.source_tau[j - 1];
        if gap > T::zero() && domain.param_delta(from.theta, to.theta).abs() >= min_angle {
            out.push(JumpEvent { s: trace.s_values[j], from, to, gap });
        }
    }
    out
}

/// Both sides of `∫_{τ(a)}^{τ(b)} f(r) dL_r = ∫_a^b f(τ(s)) ds` on a record.
///
/// The left side is the Stieltjes sum of `f` against the increments of `L`
/// clipped to `[a, b]`; the right side integrates `s ↦ f(τ(s))` exactly over the
/// pieces of `[a, b]` cut at the values of `L`, evaluating `τ` at each piece
/// midpoint through [`local_time_inverse`].
pub fn change_of_variables_check<T: Real, F: Fn(T) -> T>(
    path: &PathSample<T>,
    f: F,
    a: T,
    b: T,
) -> Result<(T, T), BoundaryError> {
    if !(a <= b) || a < T::zero() {
        return Err(BoundaryError::InvalidInterval { a: a.to_f64_lossy(), b: b.to_f64_lossy() });
    }
    let total = path.final_local_time();
    if b > total {
        return Err(BoundaryError::OutOfRange { s: b.to_f64_lossy(), available: total.to_f64_lossy() });
    }
    let mut lhs = T::zero();
    for k in 1..path.len() {
        let lo = path.local_time[k - 1].max(a);
        let hi = path.local_time[k].min(b);
        if hi > lo {
            lhs = lhs + f(path.times[k]) * (hi - lo);
        }
    }
    let mut cuts = vec![a];
    cuts.extend(path.local_time.iter().copied().filter(|&l| l > a && l < b));
    cuts.push(b);
    cuts.dedup();
    let mut rhs = T::zero();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let mid = (w[0] + w[1]) * lit(0.5);
            rhs = rhs + f(local_time_inverse(path, mid)?) * (w[1] - w[0]);
        }
    }
    Ok((lhs, rhs))
}

/// Largest deviations found when comparing a record with its dilation by `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport<T> {
    /// `max |L^R − R·L|` over records.
    pub local_time: T,
    /// `max |τ^R(s) − τ(s/R)|` over the probe grid.
    pub inverse: T,
    /// `max |X̂^R_s − R⁻¹X̂_{s/R}|` over the probe grid.
    pub trace: T,
    pub probes: usize,
}

impl<T: Real> ScalingReport<T> {
    pub fn max_error(&self) -> T {
        self.local_time.max(self.inverse).max(self.trace)
    }
}

/// Builds the record `(R⁻¹X_t, R·L_t)` and checks `L^R = R L`, `τ^R(s) = τ(s/R)`
/// and `X̂^R_s = R⁻¹X̂_{s/R}` at `probes` evenly spaced values of `s`.
pub fn scaling_check<T: Real>(
    path: &PathSample<T>,
    domain: &DomainSpec<T>,
    r: T,
    probes: usize,
) -> Result<ScalingReport<T>, BoundaryError> {
    let scaled = path.rescaled(r);
    let scaled_domain = domain.dilate(r.recip())?;
    let local_time =
        path.local_time.iter().zip(&scaled.local_time).map(|(&l, &lr)| (lr - r * l).abs()).fold(T::zero(), T::max);
    let total = scaled.final_local_time();
    let (mut inverse, mut trace) = (T::zero(), T::zero());
    for k in 0..probes {
        // Offset grid points avoid exact ties with record values.
        let s = total * (T::from_usize(k).unwrap() + lit(0.5)) / T::from_usize(probes).unwrap();
        let jr = inverse_index(&scaled, s)?;
        let j = inverse_index(path, (s / r).min(path.final_local_time()))?;
        inverse = inverse.max((scaled.times[jr] - path.times[j]).abs());
        let xr = scaled_domain.project_unchecked(scaled.points[jr])?.foot.cartesian;
        let x = domain.project_unchecked(path.points[j])?.foot.cartesian * r.recip();
        trace = trace.max(xr.max_abs_diff(x));
    }
    Ok(ScalingReport { local_time, inverse, trace, probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::ConductivityField;
    use crate::linalg::Vec2;
    use crate::rng::seed_rng;
    use crate::simulate::{Recording, SimParams, Stepper};
    use proptest::prelude::*;

    fn step_record() -> PathSample<f64> {
        PathSample {
            times: vec![0.0, 0.5, 1.0, 1.5],
            points: vec![Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            local_time: vec![0.0, 0.0, 1.0, 1.0],
            boundary_flags: vec![false, false, true, false],
        }
    }

    fn simulated(seed: u64) -> PathSample<f64> {
        let f = ConductivityField::constant(0.5).unwrap();
        let d = DomainSpec::unit_disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3)).unwrap();
        st.sample_path(Vec2::new(0.95, 0.0), 3.0, Recording::Full, &mut seed_rng(seed, 0)).unwrap()
    }

    #[test]
    fn inverse_of_unit_step() {
        let p = step_record();
        assert_eq!(local_time_inverse(&p, 0.5).unwrap(), 1.0);
        assert_eq!(local_time_inverse(&p, 0.0).unwrap(), 1.0);
        assert_eq!(local_time_inverse(&p, 1.0).unwrap(), 1.5);
        assert!(matches!(local_time_inverse(&p, 1.5), Err(BoundaryError::OutOfRange { .. })));
    }

    #[test]
    fn inverse_matches_brute_force_scan() {
        let p = simulated(3);
        let total = p.final_local_time();
        let mut prev = 0.0;
        for k in 0..=200 {
            let s = total * k as f64 / 200.0;
            let tau = local_time_inverse(&p, s).unwrap();
            let mut brute = p.times[0];
            let mut found = false;
            for i in 0..p.len() {
                if p.local_time[i] > s {
                    brute = p.times[i];
                    found = true;
                    break;
                }
            }
            if !found {
                brute = p.final_time();
            }
            assert_eq!(tau, brute);
            assert!(tau >= prev);
            prev = tau;
        }
    }

    #[test]
    fn right_inverse_properties() {
        let p = simulated(4);
        let total = p.final_local_time();
        for k in 0..100 {
            let s = total * (k as f64 + 0.37) / 100.0;
            let j = inverse_index(&p, s).unwrap();
            assert!(p.local_time[j] >= s);
            assert!(j == 0 || p.local_time[j - 1] <= s);
        }
    }

    #[test]
    fn trace_lies_on_boundary() {
        let p = simulated(5);
        let d = DomainSpec::unit_disk();
        let t = contact_trace(&p, &d).unwrap();
        assert!(t.len() > 10);
        for xi in &t.xi_values {
            assert!((xi.cartesian.norm() - 1.0).abs() < 1e-12);
        }
        assert!(t.s_values.windows(2).all(|w| w[1] > w[0]));
        assert!(t.source_tau.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empty_grid_gives_empty_trace() {
        let p = simulated(5);
        let t = boundary_trace(&p, &DomainSpec::unit_disk(), &[]).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn constant_trace_has_no_jumps() {
        let d = DomainSpec::unit_disk();
        let xi = d.boundary_param(1.0);
        let t =
            BoundaryTrace { s_values: vec![0.0, 1.0, 2.0], xi_values: vec![xi; 3], source_tau: vec![0.0, 1.0, 2.0] };
        assert!(jump_events(&t, &d, 1e-3).is_empty());
    }

    #[test]
    fn no_jump_exceeds_half_turn() {
        let p = simulated(6);
        let d = DomainSpec::unit_disk();
        let t = contact_trace(&p, &d).unwrap();
        assert!(jump_events(&t, &d, std::f64::consts::PI + 1e-9).is_empty());
        let mut last = usize::MAX;
        for m in [0.0, 0.01, 0.1, 0.5, 1.0, 2.0] {
            let c = jump_events(&t, &d, m).len();
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn change_of_variables_constant_and_zero() {
        let p = simulated(7);
        let total = p.final_local_time();
        let (l, r) = change_of_variables_check(&p, |_| 1.0, 0.1 * total, 0.8 * total).unwrap();
        assert!((l - 0.7 * total).abs() < 1e-12 && (r - 0.7 * total).abs() < 1e-12);
        let (l, r) = change_of_variables_check(&p, |_| 0.0, 0.0, total).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        assert!(change_of_variables_check(&p, |_| 1.0, 0.5, 0.2).is_err());
    }

    #[test]
    fn change_of_variables_matches_brute_oracle() {
        let p = simulated(8);
        let total = p.final_local_time();
        let (a, b) = (0.13 * total, 0.91 * total);
        let (l, r) = change_of_variables_check(&p, |t| t, a, b).unwrap();
        // Oracle: fine midpoint rule in s with a linear scan for τ.
        let n = 20_000;
        let mut oracle = 0.0;
        for k in 0..n {
            let s = a + (b - a) * (k as f64 + 0.5) / n as f64;
            let i = p.local_time.iter().position(|&x| x > s).unwrap_or(p.len() - 1);
            oracle += p.times[i] * (b - a) / n as f64;
        }
        assert!((l - r).abs() < 1e-12, "{l} {r}");
        assert!((l - oracle).abs() < 1e-2 * l.abs());
    }

    #[test]
    fn scaling_identities_hold_exactly() {
        let p = simulated(9);
        let d = DomainSpec::unit_disk();
        for r in [1.0, 2.0, 0.5, 3.7] {
            let rep = scaling_check(&p, &d, r, 300).unwrap();
            assert!(rep.max_error() < 1e-12, "R={r}: {rep:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn inverse_is_monotone(seed in 0u64..500, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let p = simulated(seed);
            let total = p.final_local_time();
            let (s1, s2) = if u <= v { (u * total, v * total) } else { (v * total, u * total) };
            prop_assert!(local_time_inverse(&p, s1).unwrap() <= local_time_inverse(&p, s2).unwrap());
        }
    }
}
