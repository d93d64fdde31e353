//! Estimators driven by interior starts: exit law, Feynman–Kac representations
//! of the Dirichlet and Neumann problems, and the Revuz calibration of `L`.

use crate::conductivity::ConductivityField;
use crate::geometry::{BoundaryPoint, DomainKind, DomainSpec};
use crate::linalg::Vec2;
use crate::reference::poisson::poisson_arc_probability;
use crate::rng::seed_rng;
use crate::scalar::{count, lit, Real};
use crate::simulate::{SimParams, Stepper};
use crate::stats::Welford;

use super::{par_accumulate, EstimatorError, MCEstimate};

/// Paths that have not left the domain by this time are reported as an error.
const MAX_EXIT_TIME: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingBin<T> {
    pub start: T,
    pub end: T,
    pub frequency: T,
    /// Binomial standard error.
    pub stderr: T,
    /// Harmonic measure of the arc when a closed form is available.
    pub reference: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingLaw<T> {
    pub bins: Vec<HittingBin<T>>,
    pub exit_time: MCEstimate<T>,
    /// `max |freq − ref| / ref` over bins with a reference.
    pub sup_rel_error: Option<T>,
}

/// Exit-point histogram on `n_bins` equal parameter arcs starting at 0.
///
/// On a disk with constant scalar κ the harmonic measure does not depend on κ
/// and each bin carries the closed-form Poisson kernel integral.
pub fn estimate_hitting_law<T: Real>(
    x0: Vec2<T>,
    field: &ConductivityField<T>,
    domain: &DomainSpec<T>,
    params: SimParams<T>,
    n_paths: usize,
    n_bins: usize,
    seed: u64,
) -> Result<HittingLaw<T>, EstimatorError> {
    if n_bins == 0 || n_paths == 0 {
        return Err(EstimatorError::InvalidArgument("need at least one path and one bin".into()));
    }
    let stepper = Stepper::new(field, domain, params)?;
    let period = domain.period();
    let width = period / count::<T>(n_bins);
    let (counts, times) = par_accumulate(
        n_paths,
        || (vec![0u64; n_bins], Welford::new()),
        |(c, w), id| {
            let mut rng = seed_rng(seed, id);
            let r = stepper.sample_absorbed(x0, lit(MAX_EXIT_TIME), false, &mut rng)?;
            let b = (r.exit_point.theta / width).floor().to_usize().unwrap_or(0).min(n_bins - 1);
            c[b] += 1;
            w.push(r.exit_time);
            Ok(())
        },
        |(c, w), (c2, w2)| {
            c.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
            w.merge(&w2);
        },
    )?;
    let closed_form = matches!(domain.kind, DomainKind::UnitDisk) && field.is_constant() && field.is_isotropic();
    let n = count::<T>(n_paths);
    let mut sup: Option<T> = None;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let start = width * count::<T>(k);
            let end = start + width;
            let p = T::from_u64(c).unwrap() / n;
            let reference =
                if closed_form { poisson_arc_probability(x0 * domain.scale.recip(), start, end).ok() } else { None };
            if let Some(r) = reference {
                let e = (p - r).abs() / r;
                sup = Some(sup.map_or(e, |s: T| s.max(e)));
            }
            HittingBin { start, end, frequency: p, stderr: (p * (T::one() - p) / n).sqrt(), reference }
        })
        .collect();
    Ok(HittingLaw { bins, exit_time: MCEstimate::from_welford(&times, params.dt, seed), sup_rel_error: sup })
}

/// `u(x0) = E φ(X_{τ(D)})`.
pub fn feynman_kac_dirichlet<T: Real, F: Fn(BoundaryPoint<T>) -> T + Sync>(
    x0: Vec2<T>,
    phi: F,
    field: &ConductivityField<T>,
    domain: &DomainSpec<T>,
    params: SimParams<T>,
    n_paths: usize,
    seed: u64,
) -> Result<MCEstimate<T>, EstimatorError> {
    let stepper = Stepper::new(field, domain, params)?;
    let w = par_accumulate(
        n_paths,
        Welford::new,
        |w, id| {
            let mut rng = seed_rng(seed, id);
            let r = stepper.sample_absorbed(x0, lit(MAX_EXIT_TIME), false, &mut rng)?;
            w.push(phi(r.exit_point));
            Ok(())
        },
        |a, b| a.merge(&b),
    )?;
    Ok(MCEstimate::from_welford(&w, params.dt, seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannEstimate<T> {
    pub at_horizon: MCEstimate<T>,
    pub at_half: MCEstimate<T>,
    pub horizon: T,
}

fn check_compatible<T: Real, F: Fn(BoundaryPoint<T>) -> T>(
    domain: &DomainSpec<T>,
    f: &F,
) -> Result<(), EstimatorError> {
    let net = domain.integrate_boundary(|bp| f(bp));
    let abs = domain.integrate_boundary(|bp| f(bp).abs());
    if net.abs() > lit::<T>(1e-12) * abs.max(T::one()) {
        return Err(EstimatorError::Incompatible(net.to_f64_lossy()));
    }
    Ok(())
}

/// Mean-zero solution of `∇·(κ∇u) = 0`, `κ∂_νu = f` at `x0` from
/// `E_{x0} ∫₀^T f(X_s) dL_s`.
///
/// A second path started from the uniform law on D is driven by the same
/// Gaussian increments and follows the first one once they meet (to 1e-12). Its integral
/// has mean zero for every `T` (the uniform law is invariant and `∫ f dσ = 0`),
/// so subtracting it removes the bulk of the variance without changing the
/// expectation.
#[allow(clippy::too_many_arguments)]
pub fn feynman_kac_neumann<T: Real, F: Fn(BoundaryPoint<T>) -> T + Sync>(
    x0: Vec2<T>,
    f: F,
    field: &ConductivityField<T>,
    domain: &DomainSpec<T>,
    params: SimParams<T>,
    horizon: T,
    n_paths: usize,
    seed: u64,
) -> Result<NeumannEstimate<T>, EstimatorError> {
    check_compatible(domain, &f)?;
    let stepper = Stepper::new(field, domain, params)?;
    if !domain.contains_closed(x0, lit(1e-12)) {
        return Err(crate::simulate::SimError::StartOutside { x: x0.x.to_f64_lossy(), y: x0.y.to_f64_lossy() }.into());
    }
    let n_steps = stepper.steps_for(horizon);
    let half = n_steps / 2;
    let dt = params.dt;
    let eval = |x: Vec2<T>| -> Result<T, EstimatorError> { Ok(f(domain.project_unchecked(x)?.foot)) };
    let (full, mid) = par_accumulate(
        n_paths,
        || (Welford::new(), Welford::new()),
        |(wf, wh), id| {
            let mut rng = seed_rng(seed, id);
            let mut y = domain.sample_interior(&mut rng);
            let mut x = x0;
            let (mut ix, mut iy, mut at_half) = (T::zero(), T::zero(), T::zero());
            let sq = dt.sqrt();
            for i in 1..=n_steps {
                let dw = Vec2::new(T::std_normal(&mut rng), T::std_normal(&mut rng)) * sq;
                let sx = stepper.step_with_increment(x, dt, dw, &mut rng)?;
                let sy = stepper.step_with_increment(y, dt, dw, &mut rng)?;
                x = sx.x;
                y = sy.x;
                if sx.dl > T::zero() {
                    ix = ix + eval(x)? * sx.dl;
                }
                if sy.dl > T::zero() {
                    iy = iy + eval(y)? * sy.dl;
                }
                if i == half {
                    at_half = ix - iy;
                }
                if (x - y).norm() <= lit(1e-12) {
                    // Coalesced up to rounding: the sticky coupling keeps them
                    // together, so the remaining contributions cancel.
                    if i < half {
                        at_half = ix - iy;
                    }
                    break;
                }
            }
            wf.push(ix - iy);
            wh.push(at_half);
            Ok(())
        },
        |(a, b), (c, d)| {
            a.merge(&c);
            b.merge(&d);
        },
    )?;
    Ok(NeumannEstimate {
        at_horizon: MCEstimate::from_welford(&full, dt, seed),
        at_half: MCEstimate::from_welford(&mid, dt, seed),
        horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevuzReport<T> {
    /// `|D|/t · E_m ∫₀^t φ(X_s) dL_s` with `X₀` uniform on D.
    pub lhs: MCEstimate<T>,
    /// `∫_{∂D} φ dσ`.
    pub rhs: T,
    pub t: T,
}

/// Revuz pairing of `L` against `φ` under the uniform start.
pub fn revuz_check<T: Real, F: Fn(BoundaryPoint<T>) -> T + Sync>(
    phi: F,
    field: &ConductivityField<T>,
    domain: &DomainSpec<T>,
    params: SimParams<T>,
    t: T,
    n_paths: usize,
    seed: u64,
) -> Result<RevuzReport<T>, EstimatorError> {
    let limit = params.dt * lit(10.0);
    if !(t >= limit) {
        return Err(EstimatorError::Resolution {
            t: t.to_f64_lossy(),
            dt: params.dt.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    let stepper = Stepper::new(field, domain, params)?;
    let n_steps = stepper.steps_for(t);
    let w = par_accumulate(
        n_paths,
        Welford::new,
        |w, id| {
            let mut rng = seed_rng(seed, id);
            let x0 = domain.sample_interior(&mut rng);
            let mut acc = T::zero();
            let mut err = None;
            stepper.run(x0, n_steps, &mut rng, |_, _, s, _| {
                if s.dl > T::zero() {
                    match domain.project_unchecked(s.x) {
                        Ok(p) => acc = acc + phi(p.foot) * s.dl,
                        Err(e) => err = Some(e),
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e.into());
            }
            w.push(acc);
            Ok(())
        },
        |a, b| a.merge(&b),
    )?;
    let rhs = domain.integrate_boundary(|bp| phi(bp));
    let scale = domain.area() / (params.dt * count::<T>(n_steps));
    Ok(RevuzReport { lhs: MCEstimate::from_welford(&w, params.dt, seed).scaled(scale), rhs, t })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration<T> {
    pub c_cal: T,
    pub stderr: T,
    pub report: RevuzReport<T>,
}

/// Local-time factor making the Revuz pairing with `φ ≡ 1` return `σ(∂D)`
/// at the step size of `params`.
pub fn calibrate_c_cal<T: Real>(
    field: &ConductivityField<T>,
    domain: &DomainSpec<T>,
    params: SimParams<T>,
    t: T,
    n_paths: usize,
    seed: u64,
) -> Result<Calibration<T>, EstimatorError> {
    let report = revuz_check(|_| T::one(), field, domain, params, t, n_paths, seed)?;
    if !(report.lhs.value > T::zero()) {
        return Err(EstimatorError::InsufficientData("no boundary contact during calibration".into()));
    }
    let c_cal = params.c_cal * report.rhs / report.lhs.value;
    Ok(Calibration { c_cal, stderr: c_cal * report.lhs.stderr / report.lhs.value, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> DomainSpec<f64> {
        DomainSpec::unit_disk()
    }

    #[test]
    fn constant_boundary_data_has_zero_variance() {
        let f = ConductivityField::constant(1.0).unwrap();
        let e = feynman_kac_dirichlet(Vec2::new(0.2, 0.1), |_| 0.1, &f, &disk(), SimParams::new(1e-3), 500, 7).unwrap();
        assert_eq!(e.value, 0.1);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn zero_flux_gives_zero() {
        let f = ConductivityField::constant(1.0).unwrap();
        let e =
            feynman_kac_neumann(Vec2::new(0.3, 0.0), |_| 0.0, &f, &disk(), SimParams::new(1e-3), 1.0, 20, 1).unwrap();
        assert_eq!(e.at_horizon.value, 0.0);
    }

    #[test]
    fn incompatible_flux_is_rejected() {
        let f = ConductivityField::constant(1.0).unwrap();
        let e = feynman_kac_neumann(Vec2::new(0.3, 0.0), |_| 1.0, &f, &disk(), SimParams::new(1e-3), 1.0, 20, 1);
        assert!(matches!(e, Err(EstimatorError::Incompatible(_))));
    }

    #[test]
    fn revuz_needs_resolved_time() {
        let f = ConductivityField::constant(0.5).unwrap();
        let e = revuz_check(|_| 1.0, &f, &disk(), SimParams::new(1e-3), 5e-3, 10, 1);
        assert!(matches!(e, Err(EstimatorError::Resolution { .. })));
    }

    #[test]
    fn revuz_right_sides() {
        let f = ConductivityField::constant(0.5).unwrap();
        let p = SimParams::new(1e-3);
        let full = revuz_check(|_| 1.0, &f, &disk(), p, 0.05, 10, 1).unwrap();
        assert!((full.rhs - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let upper = revuz_check(
            |b: BoundaryPoint<f64>| if b.theta < std::f64::consts::PI { 1.0 } else { 0.0 },
            &f,
            &disk(),
            p,
            0.05,
            10,
            1,
        )
        .unwrap();
        assert!((upper.rhs - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn hitting_law_is_reproducible() {
        let f = ConductivityField::constant(1.0).unwrap();
        let run = || estimate_hitting_law(Vec2::new(0.5, 0.0), &f, &disk(), SimParams::new(1e-3), 300, 8, 11).unwrap();
        let a = run();
        assert_eq!(a, run());
        let total: f64 = a.bins.iter().map(|b| b.frequency).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(a.bins.iter().all(|b| b.reference.is_some()));
    }
}
