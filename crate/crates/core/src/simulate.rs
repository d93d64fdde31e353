//! Euler–Maruyama simulation of the reflecting diffusion with generator
//! `∇·(κ∇)`, boundary local time by conormal pull-back, and absorbed paths.
//!
//! One step from `x` proposes `y = x + (∇·κ)(x) dt + √(2κ(x)) ΔW`. A proposal
//! outside the closure is pulled back along the conormal `κν` at the nearest
//! boundary point: `x' = y − s·κ(ξ)ν(ξ)` with `x' ∈ ∂D`, and local time grows by
//! `c_cal · s`. With `c_cal = 1` this is the normalization in which the Revuz
//! measure of `L` is the surface measure σ; for κ ≡ I the push length is the
//! overshoot depth.

use rand::Rng;
use thiserror::Error;

use crate::conductivity::ConductivityField;
use crate::geometry::{BoundaryPoint, DomainSpec, GeometryError};
use crate::linalg::{Sym2, Vec2};
use crate::scalar::{count, lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step must be finite and nonnegative, got {0}")]
    InvalidStep(f64),
    #[error("starting point ({x}, {y}) is outside the closure of the domain")]
    StartOutside { x: f64, y: f64 },
    #[error("absorbed paths need an interior start; ({x}, {y}) is on the boundary")]
    StartOnBoundary { x: f64, y: f64 },
    #[error("proposal from ({x}, {y}) still beyond the projection reach after {halvings} step halvings")]
    ReachExhausted { x: f64, y: f64, halvings: u32 },
    #[error("no exit before time {0}")]
    NoExit(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Step size, local-time calibration and retry policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams<T> {
    pub dt: T,
    pub c_cal: T,
    pub max_halvings: u32,
}

impl<T: Real> SimParams<T> {
    pub fn new(dt: T) -> Self {
        Self { dt, c_cal: T::one(), max_halvings: 10 }
    }

    pub fn with_c_cal(mut self, c_cal: T) -> Self {
        self.c_cal = c_cal;
        self
    }

    fn check(&self) -> Result<(), SimError> {
        if !(self.dt >= T::zero()) || !self.dt.is_finite() {
            return Err(SimError::InvalidStep(self.dt.to_f64_lossy()));
        }
        Ok(())
    }
}

/// Which records a simulated path keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recording {
    /// Every step.
    #[default]
    Full,
    /// The first and last records, every contact with `dL > 0`, and the record
    /// immediately before each such contact. Enough for the inverse local time,
    /// the boundary trace and the excursion decomposition.
    Contacts,
}

/// Discretized reflected trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSample<T> {
    pub times: Vec<T>,
    pub points: Vec<Vec2<T>>,
    pub local_time: Vec<T>,
    /// Whether the step ending at this record was a reflection.
    pub boundary_flags: Vec<bool>,
}

impl<T: Real> PathSample<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }

    pub fn final_local_time(&self) -> T {
        self.local_time.last().copied().unwrap_or_else(T::zero)
    }

    fn push(&mut self, t: T, x: Vec2<T>, l: T, flag: bool) {
        self.times.push(t);
        self.points.push(x);
        self.local_time.push(l);
        self.boundary_flags.push(flag);
    }

    /// The deterministic image `(R⁻¹X_t, R·L_t)` on the same clock.
    pub fn rescaled(&self, r: T) -> Self {
        Self {
            times: self.times.clone(),
            points: self.points.iter().map(|&p| p * r.recip()).collect(),
            local_time: self.local_time.iter().map(|&l| l * r).collect(),
            boundary_flags: self.boundary_flags.clone(),
        }
    }

    /// Checks monotonicity of t and L, that L grows only at flagged records,
    /// and that every point lies in the closure of `domain`.
    pub fn check_invariants(&self, domain: &DomainSpec<T>, tol: T) -> Result<(), String> {
        for i in 1..self.len() {
            if self.times[i] < self.times[i - 1] {
                return Err(format!("clock decreases at record {i}"));
            }
            if self.local_time[i] < self.local_time[i - 1] {
                return Err(format!("local time decreases at record {i}"));
            }
            if self.local_time[i] > self.local_time[i - 1] && !self.boundary_flags[i] {
                return Err(format!("local time grows off the boundary at record {i}"));
            }
        }
        for (i, &p) in self.points.iter().enumerate() {
            if !domain.contains_closed(p, tol) {
                return Err(format!("record {i} at ({}, {}) is outside the domain", p.x, p.y));
            }
        }
        Ok(())
    }
}

/// Outcome of one reflected step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<T> {
    pub x: Vec2<T>,
    pub dl: T,
    /// Whether the step ended on the boundary (with `dl = 0` for exact landings).
    pub contact: bool,
    /// Number of nested halvings used to stay within the projection reach.
    pub halvings: u32,
}

/// First exit of the absorbed process.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbedResult<T> {
    pub exit_time: T,
    pub exit_point: BoundaryPoint<T>,
    pub path: Option<PathSample<T>>,
}

enum TryStep<T> {
    Done(Step<T>),
    TooDeep,
}

/// Reflected Euler stepper bound to a field, a domain and a calibration.
#[derive(Debug, Clone)]
pub struct Stepper<'a, T> {
    pub field: &'a ConductivityField<T>,
    pub domain: &'a DomainSpec<T>,
    pub params: SimParams<T>,
    constant: Option<(Sym2<T>, Sym2<T>)>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(
        field: &'a ConductivityField<T>,
        domain: &'a DomainSpec<T>,
        params: SimParams<T>,
    ) -> Result<Self, SimError> {
        params.check()?;
        let constant = field.is_constant().then(|| {
            let k = field.eval(domain.center());
            (k, k.scale(lit(2.0)).sqrt())
        });
        Ok(Self { field, domain, params, constant })
    }

    #[inline]
    fn coefficients(&self, x: Vec2<T>) -> (Vec2<T>, Sym2<T>) {
        match self.constant {
            Some((_, b)) => (Vec2::zero(), b),
            None => (self.field.grad_div(x), self.field.eval(x).scale(lit(2.0)).sqrt()),
        }
    }

    #[inline]
    fn kappa(&self, x: Vec2<T>) -> Sym2<T> {
        match self.constant {
            Some((k, _)) => k,
            None => self.field.eval(x),
        }
    }

    /// Unreflected Euler proposal with Brownian increment `dw`.
    #[inline]
    pub fn propose(&self, x: Vec2<T>, dt: T, dw: Vec2<T>) -> Vec2<T> {
        let (drift, b) = self.coefficients(x);
        x + drift * dt + b.apply(dw)
    }

    /// One reflected step of length `dt` with fresh Gaussian noise.
    pub fn step<R: Rng + ?Sized>(&self, x: Vec2<T>, dt: T, rng: &mut R) -> Result<Step<T>, SimError> {
        if dt == T::zero() {
            return Ok(Step { x, dl: T::zero(), contact: false, halvings: 0 });
        }
        let dw = Vec2::new(T::std_normal(rng), T::std_normal(rng)) * dt.sqrt();
        self.step_with_increment(x, dt, dw, rng)
    }

    /// One reflected step driven by the given Brownian increment; `rng` is only
    /// used for bridge refinements when the proposal overshoots the reach.
    pub fn step_with_increment<R: Rng + ?Sized>(
        &self,
        x: Vec2<T>,
        dt: T,
        dw: Vec2<T>,
        rng: &mut R,
    ) -> Result<Step<T>, SimError> {
        self.advance(x, dt, dw, rng, 0)
    }

    fn advance<R: Rng + ?Sized>(
        &self,
        x: Vec2<T>,
        dt: T,
        dw: Vec2<T>,
        rng: &mut R,
        level: u32,
    ) -> Result<Step<T>, SimError> {
        match self.try_step(x, dt, dw)? {
            TryStep::Done(mut s) => {
                s.halvings = level;
                Ok(s)
            }
            TryStep::TooDeep if level < self.params.max_halvings => {
                // Brownian bridge midpoint: W(dt/2) | W(dt) = dw ~ N(dw/2, dt/4).
                let sd = dt.sqrt() * lit(0.5);
                let zeta = Vec2::new(T::std_normal(rng), T::std_normal(rng)) * sd;
                let dw1 = dw * lit(0.5) + zeta;
                let dw2 = dw - dw1;
                let h = dt * lit(0.5);
                let a = self.advance(x, h, dw1, rng, level + 1)?;
                let b = self.advance(a.x, h, dw2, rng, level + 1)?;
                Ok(Step {
                    x: b.x,
                    dl: a.dl + b.dl,
                    contact: a.contact || b.contact,
                    halvings: a.halvings.max(b.halvings),
                })
            }
            TryStep::TooDeep => {
                Err(SimError::ReachExhausted { x: x.x.to_f64_lossy(), y: x.y.to_f64_lossy(), halvings: level })
            }
        }
    }

    fn try_step(&self, x: Vec2<T>, dt: T, dw: Vec2<T>) -> Result<TryStep<T>, SimError> {
        let y = self.propose(x, dt, dw);
        if self.domain.is_interior(y) {
            return Ok(TryStep::Done(Step { x: y, dl: T::zero(), contact: false, halvings: 0 }));
        }
        let proj = match self.domain.project_to_boundary(y) {
            Ok(p) => p,
            Err(GeometryError::BeyondReach { .. }) => return Ok(TryStep::TooDeep),
            Err(e) => return Err(e.into()),
        };
        if proj.inside || proj.depth == T::zero() {
            return Ok(TryStep::Done(Step { x: proj.foot.cartesian, dl: T::zero(), contact: true, halvings: 0 }));
        }
        let (x_new, push) = self.conormal_pullback(y, &proj)?;
        Ok(TryStep::Done(Step { x: x_new, dl: self.params.c_cal * push, contact: true, halvings: 0 }))
    }

    /// Solves `y − s·κν ∈ ∂D` for the push length `s`, starting from the
    /// nearest-point projection of `y`.
    fn conormal_pullback(&self, y: Vec2<T>, proj: &crate::geometry::Projection<T>) -> Result<(Vec2<T>, T), SimError> {
        let foot = proj.foot.cartesian;
        let k = self.kappa(foot);
        let v = k.apply(proj.normal);
        if k.is_isotropic() {
            return Ok((foot, proj.depth / k.xx));
        }
        let mut s = proj.depth / v.dot(proj.normal);
        let mut z = y - v * s;
        for _ in 0..50 {
            let p = self.domain.project_unchecked(z)?;
            let sd = if p.inside { -p.distance } else { p.distance };
            if sd.abs() <= lit(1e-13) {
                break;
            }
            s = s + sd / v.dot(p.normal);
            z = y - v * s;
        }
        let p = self.domain.project_unchecked(z)?;
        Ok((p.foot.cartesian, s))
    }

    /// Runs `n_steps` reflected steps from `x0`, calling `observe(i, t_i, &step)`
    /// after step `i` (1-based), and returns the final position and local time.
    pub fn run<R: Rng + ?Sized, F: FnMut(usize, T, &Step<T>, T)>(
        &self,
        x0: Vec2<T>,
        n_steps: usize,
        rng: &mut R,
        mut observe: F,
    ) -> Result<(Vec2<T>, T), SimError> {
        self.check_start(x0)?;
        let dt = self.params.dt;
        let mut x = x0;
        let mut l = T::zero();
        for i in 1..=n_steps {
            let s = self.step(x, dt, rng)?;
            x = s.x;
            l = l + s.dl;
            observe(i, count::<T>(i) * dt, &s, l);
        }
        Ok((x, l))
    }

    fn check_start(&self, x0: Vec2<T>) -> Result<(), SimError> {
        if !self.domain.contains_closed(x0, lit(1e-12)) {
            return Err(SimError::StartOutside { x: x0.x.to_f64_lossy(), y: x0.y.to_f64_lossy() });
        }
        Ok(())
    }

    /// Number of steps needed to reach `horizon`.
    pub fn steps_for(&self, horizon: T) -> usize {
        if horizon <= T::zero() || self.params.dt == T::zero() {
            return 0;
        }
        (horizon / self.params.dt - lit(1e-9)).ceil().to_usize().unwrap_or(0)
    }

    /// Reflected path on `[0, horizon]`.
    pub fn sample_path<R: Rng + ?Sized>(
        &self,
        x0: Vec2<T>,
        horizon: T,
        recording: Recording,
        rng: &mut R,
    ) -> Result<PathSample<T>, SimError> {
        self.check_start(x0)?;
        let n = self.steps_for(horizon);
        let mut path = PathSample::default();
        path.push(T::zero(), x0, T::zero(), false);
        match recording {
            Recording::Full => {
                path.times.reserve(n);
                path.points.reserve(n);
                path.local_time.reserve(n);
                path.boundary_flags.reserve(n);
                self.run(x0, n, rng, |_, t, s, l| path.push(t, s.x, l, s.contact))?;
            }
            Recording::Contacts => {
                let mut prev: Option<(T, Vec2<T>, T, bool)> = None;
                self.run(x0, n, rng, |i, t, s, l| {
                    if s.dl > T::zero() {
                        if let Some((pt, px, pl, pf)) = prev.take() {
                            path.push(pt, px, pl, pf);
                        }
                        path.push(t, s.x, l, s.contact);
                    } else if i == n {
                        path.push(t, s.x, l, s.contact);
                    } else {
                        prev = Some((t, s.x, l, s.contact));
                    }
                })?;
            }
        }
        Ok(path)
    }

    /// Path killed at the first step that leaves the open domain; the exit
    /// point is the nearest boundary point of the first proposal outside.
    pub fn sample_absorbed<R: Rng + ?Sized>(
        &self,
        x0: Vec2<T>,
        max_time: T,
        keep_path: bool,
        rng: &mut R,
    ) -> Result<AbsorbedResult<T>, SimError> {
        if !self.domain.is_interior(x0) {
            let err = if self.domain.is_in_closure(x0) {
                SimError::StartOnBoundary { x: x0.x.to_f64_lossy(), y: x0.y.to_f64_lossy() }
            } else {
                SimError::StartOutside { x: x0.x.to_f64_lossy(), y: x0.y.to_f64_lossy() }
            };
            return Err(err);
        }
        let dt = self.params.dt;
        if dt == T::zero() {
            return Err(SimError::InvalidStep(0.0));
        }
        let sq = dt.sqrt();
        let mut path = keep_path.then(|| {
            let mut p = PathSample::default();
            p.push(T::zero(), x0, T::zero(), false);
            p
        });
        let mut x = x0;
        let mut i = 0usize;
        loop {
            i += 1;
            let t = count::<T>(i) * dt;
            let dw = Vec2::new(T::std_normal(rng), T::std_normal(rng)) * sq;
            let y = self.propose(x, dt, dw);
            if self.domain.is_interior(y) {
                x = y;
                if let Some(p) = path.as_mut() {
                    p.push(t, x, T::zero(), false);
                }
                if t > max_time {
                    return Err(SimError::NoExit(max_time.to_f64_lossy()));
                }
                continue;
            }
            let foot = self.domain.project_unchecked(y)?.foot;
            if let Some(p) = path.as_mut() {
                p.push(t, foot.cartesian, T::zero(), true);
            }
            return Ok(AbsorbedResult { exit_time: t, exit_point: foot, path });
        }
    }
}

/// Convenience wrapper: one reflected step with default retry policy.
pub fn step_reflected<T: Real, R: Rng + ?Sized>(
    x: Vec2<T>,
    dt: T,
    c_cal: T,
    field: &ConductivityField<T>,
    domain: &DomainSpec<T>,
    rng: &mut R,
) -> Result<Step<T>, SimError> {
    let params = SimParams { dt, c_cal, max_halvings: 10 };
    Stepper::new(field, domain, params)?.step(x, dt, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_rng;
    use proptest::prelude::*;

    fn disk() -> DomainSpec<f64> {
        DomainSpec::unit_disk()
    }

    #[test]
    fn zero_step_is_identity() {
        let f = ConductivityField::constant(0.5).unwrap();
        let mut rng = seed_rng(1, 1);
        let s = step_reflected(Vec2::new(0.2, 0.1), 0.0, 1.0, &f, &disk(), &mut rng).unwrap();
        assert_eq!(s.x, Vec2::new(0.2, 0.1));
        assert_eq!(s.dl, 0.0);
    }

    #[test]
    fn interior_step_is_brownian_increment_for_half() {
        let f = ConductivityField::constant(0.5).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-4)).unwrap();
        let dw = Vec2::new(0.003, -0.002);
        let mut rng = seed_rng(1, 1);
        let s = st.step_with_increment(Vec2::new(0.1, 0.0), 1e-4, dw, &mut rng).unwrap();
        assert!(s.x.max_abs_diff(Vec2::new(0.103, -0.002)) < 1e-15);
        assert_eq!(s.dl, 0.0);
        assert!(!s.contact);
    }

    #[test]
    fn overshoot_is_pulled_back_with_calibrated_local_time() {
        // κ ≡ 1: B = √2 I; choose ΔW so that the proposal is (1.1, 0).
        let f = ConductivityField::constant(1.0).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-2).with_c_cal(2.0)).unwrap();
        let dw = Vec2::new(0.2 / 2f64.sqrt(), 0.0);
        let mut rng = seed_rng(1, 1);
        let s = st.step_with_increment(Vec2::new(0.9, 0.0), 1e-2, dw, &mut rng).unwrap();
        assert!(s.x.max_abs_diff(Vec2::new(1.0, 0.0)) < 1e-14);
        assert!((s.dl - 0.2).abs() < 1e-12);
        assert!(s.contact);
    }

    #[test]
    fn push_length_scales_inversely_with_conductivity() {
        let f = ConductivityField::constant(0.5).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-2)).unwrap();
        let dw = Vec2::new(0.2, 0.0);
        let mut rng = seed_rng(1, 1);
        let s = st.step_with_increment(Vec2::new(0.9, 0.0), 1e-2, dw, &mut rng).unwrap();
        assert!((s.dl - 0.2).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_pullback_lands_on_boundary() {
        use std::sync::Arc;
        let d = DomainSpec::<f64>::unit_square();
        let f =
            ConductivityField::custom("tilted", Arc::new(|_x: Vec2<f64>| Sym2::new(1.0, 0.3, 0.8)), false, &d).unwrap();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3)).unwrap();
        let mut rng = seed_rng(2, 2);
        let y = Vec2::new(0.5, 1.05);
        let x = Vec2::new(0.5, 0.98);
        let dw = (y - x) * (1.0 / 1.0);
        let b = Sym2::new(1.0, 0.3, 0.8).scale(2.0).sqrt();
        // Solve B·dw = y − x for the driving increment.
        let det = b.xx * b.yy - b.xy * b.xy;
        let inv = Vec2::new((b.yy * dw.x - b.xy * dw.y) / det, (b.xx * dw.y - b.xy * dw.x) / det);
        let s = st.step_with_increment(x, 1e-3, inv, &mut rng).unwrap();
        assert!((s.x.y - 1.0).abs() < 1e-12);
        // conormal κν = (0.3, 0.8): push length 0.05/0.8, foot shifted by 0.3·s.
        let push = 0.05 / 0.8;
        assert!((s.dl - push).abs() < 1e-12);
        assert!((s.x.x - (0.5 - 0.3 * push)).abs() < 1e-12);
    }

    #[test]
    fn deep_overshoot_triggers_halving() {
        let f = ConductivityField::constant(1.0).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(0.5)).unwrap();
        let mut rng = seed_rng(3, 3);
        let dw = Vec2::new(1.2, 0.0);
        let s = st.step_with_increment(Vec2::new(0.5, 0.0), 0.5, dw, &mut rng).unwrap();
        assert!(s.halvings > 0);
        assert!(d.contains_closed(s.x, 1e-12));
    }

    #[test]
    fn zero_horizon_path_is_single_record() {
        let f = ConductivityField::constant(0.5).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3)).unwrap();
        let p = st.sample_path(Vec2::new(0.1, 0.2), 0.0, Recording::Full, &mut seed_rng(1, 0)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.final_local_time(), 0.0);
    }

    #[test]
    fn path_invariants_and_reproducibility() {
        let f = ConductivityField::constant(0.5).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3)).unwrap();
        let a = st.sample_path(Vec2::new(0.9, 0.0), 2.0, Recording::Full, &mut seed_rng(9, 4)).unwrap();
        let b = st.sample_path(Vec2::new(0.9, 0.0), 2.0, Recording::Full, &mut seed_rng(9, 4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2001);
        assert!(a.final_local_time() > 0.0);
        a.check_invariants(&d, 1e-12).unwrap();
    }

    #[test]
    fn contact_recording_keeps_contacts_and_predecessors() {
        let f = ConductivityField::constant(0.5).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3)).unwrap();
        let full = st.sample_path(Vec2::new(0.9, 0.0), 2.0, Recording::Full, &mut seed_rng(9, 5)).unwrap();
        let short = st.sample_path(Vec2::new(0.9, 0.0), 2.0, Recording::Contacts, &mut seed_rng(9, 5)).unwrap();
        assert!(short.len() < full.len());
        assert_eq!(short.final_local_time(), full.final_local_time());
        assert_eq!(short.final_time(), full.final_time());
        let mut j = 0;
        for i in 0..full.len() {
            let keep = i == 0
                || i + 1 == full.len()
                || full.local_time[i] > full.local_time[i - 1]
                || (i + 1 < full.len() && full.local_time[i + 1] > full.local_time[i]);
            if keep {
                assert_eq!(short.times[j], full.times[i]);
                assert_eq!(short.points[j], full.points[i]);
                j += 1;
            }
        }
        assert_eq!(j, short.len());
    }

    #[test]
    fn absorbed_rejects_boundary_start() {
        let f = ConductivityField::constant(1.0).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3)).unwrap();
        let r = st.sample_absorbed(Vec2::new(1.0, 0.0), 10.0, false, &mut seed_rng(1, 1));
        assert!(matches!(r, Err(SimError::StartOnBoundary { .. })));
    }

    #[test]
    fn absorbed_exit_is_on_boundary() {
        let f = ConductivityField::constant(1.0).unwrap();
        let d = disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3)).unwrap();
        for i in 0..50 {
            let r = st.sample_absorbed(Vec2::new(0.5, 0.0), 100.0, i == 0, &mut seed_rng(4, i)).unwrap();
            assert!((r.exit_point.cartesian.norm() - 1.0).abs() < 1e-12);
            assert!(r.exit_time > 0.0);
            if let Some(p) = r.path {
                assert_eq!(p.final_time(), r.exit_time);
            }
        }
    }

    #[test]
    fn f32_paths_run() {
        let f = ConductivityField::<f32>::constant(0.5).unwrap();
        let d = DomainSpec::<f32>::unit_disk();
        let st = Stepper::new(&f, &d, SimParams::new(1e-3f32)).unwrap();
        let p = st.sample_path(Vec2::new(0.5, 0.0), 1.0, Recording::Full, &mut seed_rng(1, 1)).unwrap();
        p.check_invariants(&d, 1e-6).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn steps_stay_in_closure(seed in 0u64..1000, x in -0.99f64..0.99, dt in 1e-5f64..1e-2) {
            let f = ConductivityField::radial(crate::conductivity::RadialProfile::new(vec![1.0, 1.0]), &disk()).unwrap();
            let d = disk();
            let st = Stepper::new(&f, &d, SimParams::new(dt)).unwrap();
            let mut rng = seed_rng(seed, 0);
            let mut p = Vec2::new(x, 0.0);
            for _ in 0..200 {
                let s = st.step(p, dt, &mut rng).unwrap();
                prop_assert!(s.dl >= 0.0);
                prop_assert!(d.contains_closed(s.x, 1e-12));
                p = s.x;
            }
        }
    }
}
