//! Boundary-to-boundary excursions of a reflected path and their counting measure.
//!
//! The excursion started at a contact `c` (a record with `dL > 0`) runs until
//! the next such contact `n`: start `X_{t_c}`, end `X_{t_n}`, duration
//! `t_n − t_c`, stamped with the local time `L_{t_c}`. These are exactly the jumps
//! of the boundary trace read on the contact grid.

use crate::boundary::JumpEvent;
use crate::geometry::{BoundaryPoint, DomainSpec, GeometryError};
use crate::scalar::{wrap_positive, Real};
use crate::simulate::PathSample;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionRecord<T> {
    pub start: BoundaryPoint<T>,
    pub end: BoundaryPoint<T>,
    pub duration: T,
    pub local_time_stamp: T,
    pub segment: Option<PathSample<T>>,
}

/// Indices of records where the local time increased.
pub fn contact_indices<T: Real>(path: &PathSample<T>) -> Vec<usize> {
    (1..path.len()).filter(|&i| path.local_time[i] > path.local_time[i - 1]).collect()
}

/// Excursions between consecutive contacts with duration at least `min_duration`.
pub fn decompose_excursions<T: Real>(
    path: &PathSample<T>,
    domain: &DomainSpec<T>,
    min_duration: T,
    keep_segments: bool,
) -> Result<Vec<ExcursionRecord<T>>, GeometryError> {
    let contacts = contact_indices(path);
    let mut out = Vec::new();
    for w in contacts.windows(2) {
        let (c, n) = (w[0], w[1]);
        let duration = path.times[n] - path.times[c];
        if duration < min_duration {
            continue;
        }
        let segment = keep_segments.then(|| PathSample {
            times: path.times[c..=n].to_vec(),
            points: path.points[c..=n].to_vec(),
            local_time: path.local_time[c..=n].to_vec(),
            boundary_flags: path.boundary_flags[c..=n].to_vec(),
        });
        out.push(ExcursionRecord {
            start: domain.project_unchecked(path.points[c])?.foot,
            end: domain.project_unchecked(path.points[n])?.foot,
            duration,
            local_time_stamp: path.local_time[c],
            segment,
        });
    }
    Ok(out)
}

/// Boundary arc `[start, start + length)` in the domain parameter, taken modulo the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryArc<T> {
    pub start: T,
    pub length: T,
}

impl<T: Real> BoundaryArc<T> {
    pub fn new(start: T, end: T) -> Self {
        Self { start, length: end - start }
    }

    pub fn full(domain: &DomainSpec<T>) -> Self {
        Self { start: T::zero(), length: domain.period() }
    }

    pub fn contains(&self, theta: T, period: T) -> bool {
        self.length >= period || wrap_positive(theta - self.start, period) < self.length
    }

    /// Whether the two arcs share a point (modulo the period).
    pub fn overlaps(&self, other: &Self, period: T) -> bool {
        self.contains(other.start, period) || other.contains(self.start, period)
    }

    /// Arc rotated by `phi`.
    pub fn rotated(&self, phi: T) -> Self {
        Self { start: self.start + phi, length: self.length }
    }

    /// Smallest parameter distance between the two arcs (0 if they overlap).
    pub fn gap(&self, other: &Self, period: T) -> T {
        if self.overlaps(other, period) {
            return T::zero();
        }
        let after = wrap_positive(other.start - (self.start + self.length), period);
        let before = wrap_positive(self.start - (other.start + other.length), period);
        after.min(before)
    }
}

/// `n_e((0, s_max] × {e(0) ∈ A, e(l) ∈ B})`.
pub fn excursion_counting_measure<T: Real>(
    excursions: &[ExcursionRecord<T>],
    domain: &DomainSpec<T>,
    s_max: T,
    start_arc: &BoundaryArc<T>,
    end_arc: &BoundaryArc<T>,
) -> usize {
    let p = domain.period();
    excursions
        .iter()
        .filter(|e| {
            e.local_time_stamp < s_max && start_arc.contains(e.start.theta, p) && end_arc.contains(e.end.theta, p)
        })
        .count()
}

/// Integer counts on a grid of local-time windows × start arcs × end arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingMeasure {
    pub s_cells: usize,
    pub arc_cells: usize,
    pub counts: Vec<u64>,
}

impl CountingMeasure {
    pub fn new(s_cells: usize, arc_cells: usize) -> Self {
        Self { s_cells, arc_cells, counts: vec![0; s_cells * arc_cells * arc_cells] }
    }

    fn index(&self, si: usize, a: usize, b: usize) -> usize {
        (si * self.arc_cells + a) * self.arc_cells + b
    }

    /// Adds every excursion with stamp in `[0, s_max)` using uniform cells of
    /// width `s_max / s_cells` and `period / arc_cells`.
    pub fn accumulate<T: Real>(&mut self, excursions: &[ExcursionRecord<T>], domain: &DomainSpec<T>, s_max: T) {
        let p = domain.period();
        let cell = |x: T, width: T, n: usize| (x / width).floor().to_usize().unwrap_or(0).min(n - 1);
        let sw = s_max / T::from_usize(self.s_cells).unwrap();
        let aw = p / T::from_usize(self.arc_cells).unwrap();
        for e in excursions {
            if !(e.local_time_stamp < s_max) {
                continue;
            }
            let si = cell(e.local_time_stamp, sw, self.s_cells);
            let a = cell(wrap_positive(e.start.theta, p), aw, self.arc_cells);
            let b = cell(wrap_positive(e.end.theta, p), aw, self.arc_cells);
            let k = self.index(si, a, b);
            self.counts[k] += 1;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!((self.s_cells, self.arc_cells), (other.s_cells, other.arc_cells), "incompatible grids");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count over s-cells `< s_hi` and the arc-cell ranges (inclusive start, exclusive end).
    pub fn count(&self, s_hi: usize, a: std::ops::Range<usize>, b: std::ops::Range<usize>) -> u64 {
        let mut n = 0;
        for si in 0..s_hi.min(self.s_cells) {
            for i in a.clone() {
                for j in b.clone() {
                    n += self.counts[self.index(si, i, j)];
                }
            }
        }
        n
    }
}

/// Checks that every jump is matched by exactly one excursion with the same
/// stamp, endpoints and duration, and that every excursion whose endpoints are
/// at least `min_angle` apart is matched by a jump. Returns the number of pairs.
pub fn match_jumps_to_excursions<T: Real>(
    jumps: &[JumpEvent<T>],
    excursions: &[ExcursionRecord<T>],
    domain: &DomainSpec<T>,
    min_angle: T,
) -> Result<usize, String> {
    let mut used = vec![false; excursions.len()];
    for jmp in jumps {
        // τ jumps at s = L after the contact that starts the excursion.
        let hits: Vec<usize> =
            excursions.iter().enumerate().filter(|(_, e)| e.local_time_stamp == jmp.s).map(|(i, _)| i).collect();
        if hits.len() != 1 {
            return Err(format!("jump at s = {} matches {} excursions", jmp.s, hits.len()));
        }
        let e = &excursions[hits[0]];
        if e.duration != jmp.gap || e.start.cartesian != jmp.from.cartesian || e.end.cartesian != jmp.to.cartesian {
            return Err(format!("jump at s = {} disagrees with its excursion", jmp.s));
        }
        used[hits[0]] = true;
    }
    for (e, u) in excursions.iter().zip(&used) {
        if !u && domain.param_delta(e.start.theta, e.end.theta).abs() >= min_angle {
            return Err(format!("excursion at s = {} has no jump", e.local_time_stamp));
        }
    }
    Ok(jumps.len())
}
