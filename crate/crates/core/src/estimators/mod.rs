//! Monte Carlo estimators and their deterministic counterparts.
//!
//! Every path owns the stream `seed_rng(seed, path_id)`. Paths are processed in
//! fixed-size chunks in parallel; chunk results are merged in chunk order, so
//! totals do not depend on the number of worker threads.

pub mod boundary_runs;
pub mod forward;
pub mod kernel;

use rayon::prelude::*;
use thiserror::Error;

use crate::boundary::BoundaryError;
use crate::geometry::GeometryError;
use crate::reference::ReferenceError;
use crate::scalar::Real;
use crate::simulate::SimError;
use crate::stats::Welford;

pub use boundary_runs::{simulate_boundary_runs, BoundaryRun, BoundaryRunConfig, BoundaryRuns};
pub use forward::{
    calibrate_c_cal, estimate_hitting_law, feynman_kac_dirichlet, feynman_kac_neumann, revuz_check, Calibration,
    HittingBin, HittingLaw, NeumannEstimate, RevuzReport,
};
pub use kernel::{
    arc_pair_integral, estimate_jump_kernel, excursion_rate, generator_probe, generator_probe_fit, kernel_distance,
    levy_identity_check, spectral_decay, ExcursionRate, KernelDistance, KernelEstimate, LevyIdentity, ProbeBin,
    ProbeFit, SpectralDecay,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("boundary data violates current conservation: ∫ f dσ = {0}")]
    Incompatible(f64),
    #[error("time {t} is below the resolution limit {limit} of the step {dt}")]
    Resolution { t: f64, dt: f64, limit: f64 },
    #[error("arcs overlap; the test function must vanish on the diagonal")]
    OverlappingArcs,
    #[error("kernel estimates use different bins")]
    IncompatibleBinning,
    #[error("jump/excursion bijection failed: {0}")]
    Bijection(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

/// Sample mean with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate<T> {
    pub value: T,
    pub stderr: T,
    pub n_samples: usize,
    pub dt: T,
    pub seed: u64,
}

impl<T: Real> MCEstimate<T> {
    pub fn from_welford(w: &Welford<T>, dt: T, seed: u64) -> Self {
        Self { value: w.mean(), stderr: w.stderr(), n_samples: w.count(), dt, seed }
    }

    /// Same estimate multiplied by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self { value: self.value * c, stderr: self.stderr * c.abs(), ..*self }
    }
}

const CHUNK: usize = 256;

/// Runs `body(acc, path_id)` for every id in `0..n` and merges the chunk
/// accumulators in id order.
pub(crate) fn par_accumulate<A, M, B, G>(n: usize, make: M, body: B, merge: G) -> Result<A, EstimatorError>
where
    A: Send,
    M: Fn() -> A + Sync,
    B: Fn(&mut A, u64) -> Result<(), EstimatorError> + Sync,
    G: Fn(&mut A, A),
{
    let chunks: Vec<Result<A, EstimatorError>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = make();
            for id in c * CHUNK..((c + 1) * CHUNK).min(n) {
                body(&mut acc, id as u64)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = make();
    for c in chunks {
        merge(&mut total, c?);
    }
    Ok(total)
}

/// Ordered parallel map over path ids.
pub(crate) fn par_map<R, F>(n: usize, f: F) -> Result<Vec<R>, EstimatorError>
where
    R: Send,
    F: Fn(u64) -> Result<R, EstimatorError> + Sync,
{
    (0..n as u64).into_par_iter().map(|id| f(id)).collect()
}
