//! Long reflected runs started from the surface measure, reduced on the fly to
//! what the boundary-process estimators consume: the trace on a uniform
//! local-time grid, the larger jumps, and the excursions between contacts.

use crate::boundary::{boundary_trace, contact_trace, jump_events, uniform_grid, JumpEvent};
use crate::conductivity::ConductivityField;
use crate::excursions::{decompose_excursions, match_jumps_to_excursions, ExcursionRecord};
use crate::geometry::DomainSpec;
use crate::rng::seed_rng;
use crate::scalar::{lit, Real};
use crate::simulate::{Recording, SimParams, Stepper};

use super::{par_map, EstimatorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRunConfig<T> {
    pub n_paths: usize,
    /// Clock horizon of each path.
    pub horizon: T,
    /// Local-time spacing of the stored trace.
    pub trace_step: T,
    /// Jumps and excursions with smaller parameter displacement are not stored.
    pub store_angle: T,
    /// Excursions shorter than this are dropped (resolution limit).
    pub min_duration: T,
    /// The jump/excursion bijection is verified on this many paths.
    pub check_bijection: usize,
}

impl<T: Real> BoundaryRunConfig<T> {
    pub fn new(n_paths: usize, horizon: T, dt: T) -> Self {
        Self {
            n_paths,
            horizon,
            trace_step: lit(0.01),
            store_angle: lit(0.05),
            min_duration: dt * lit(10.0),
            check_bijection: 2,
        }
    }
}

/// Reduced record of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRun<T> {
    pub path_id: u64,
    /// Total local time `L_T`.
    pub total_s: T,
    /// Boundary parameter of `X̂` at `s = k·trace_step`.
    pub trace: Vec<T>,
    pub jumps: Vec<JumpEvent<T>>,
    pub excursions: Vec<ExcursionRecord<T>>,
    pub contacts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRuns<T> {
    pub runs: Vec<BoundaryRun<T>>,
    pub config: BoundaryRunConfig<T>,
    pub params: SimParams<T>,
    pub seed: u64,
    pub label: String,
    /// Jumps matched one-to-one with excursions on the checked paths.
    pub bijection_pairs: usize,
}

impl<T: Real> BoundaryRuns<T> {
    /// Total local time over all paths.
    pub fn s_budget(&self) -> T {
        self.runs.iter().map(|r| r.total_s).sum()
    }

    /// Splits the runs into those with even and odd path ids.
    pub fn split_parity(&self) -> (Self, Self) {
        let pick = |p: u64| Self {
            runs: self.runs.iter().filter(|r| r.path_id % 2 == p).cloned().collect(),
            ..self.clone_empty()
        };
        (pick(0), pick(1))
    }

    fn clone_empty(&self) -> Self {
        Self {
            runs: Vec::new(),
            config: self.config,
            params: self.params,
            seed: self.seed,
            label: self.label.clone(),
            bijection_pairs: self.bijection_pairs,
        }
    }
}

/// Simulates `config.n_paths` reflected paths from uniform σ starts.
pub fn simulate_boundary_runs<T: Real>(
    field: &ConductivityField<T>,
    domain: &DomainSpec<T>,
    params: SimParams<T>,
    config: BoundaryRunConfig<T>,
    seed: u64,
) -> Result<BoundaryRuns<T>, EstimatorError> {
    if !(config.trace_step > T::zero()) || !(config.store_angle > T::zero()) {
        return Err(EstimatorError::InvalidArgument("trace_step and store_angle must be positive".into()));
    }
    let stepper = Stepper::new(field, domain, params)?;
    let results = par_map(config.n_paths, |id| {
        let mut rng = seed_rng(seed, id);
        let x0 = domain.sample_boundary(&mut rng).cartesian;
        let path = stepper.sample_path(x0, config.horizon, Recording::Contacts, &mut rng)?;
        let total_s = path.final_local_time();
        let trace = boundary_trace(&path, domain, &uniform_grid(&path, config.trace_step))?;
        let full = contact_trace(&path, domain)?;
        let jumps = jump_events(&full, domain, config.store_angle);
        let mut pairs = 0;
        if (id as usize) < config.check_bijection {
            let all = decompose_excursions(&path, domain, T::zero(), false)?;
            pairs = match_jumps_to_excursions(&jumps, &all, domain, config.store_angle)
                .map_err(EstimatorError::Bijection)?;
        }
        let excursions = decompose_excursions(&path, domain, config.min_duration, false)?
            .into_iter()
            .filter(|e| domain.param_delta(e.start.theta, e.end.theta).abs() >= config.store_angle)
            .collect();
        let run = BoundaryRun {
            path_id: id,
            total_s,
            trace: trace.xi_values.iter().map(|p| p.theta).collect(),
            jumps,
            excursions,
            contacts: full.len(),
        };
        Ok((run, pairs))
    })?;
    let bijection_pairs = results.iter().map(|(_, p)| p).sum();
    Ok(BoundaryRuns {
        runs: results.into_iter().map(|(r, _)| r).collect(),
        config,
        params,
        seed,
        label: field.label.clone(),
        bijection_pairs,
    })
}
