//! Small statistical helpers: streaming moments, Kolmogorov–Smirnov,
//! χ² and Hotelling quantiles and the delete-one jackknife.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::scalar::{count, Real};

/// Streaming mean and variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Welford<T> {
    n: usize,
    mean: T,
    m2: T,
}

impl<T: Real> Welford<T> {
    pub fn new() -> Self {
        Self { n: 0, mean: T::zero(), m2: T::zero() }
    }

    pub fn push(&mut self, x: T) {
        self.n += 1;
        let d = x - self.mean;
        self.mean = self.mean + d / count::<T>(self.n);
        self.m2 = self.m2 + d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb, nt) = (count::<T>(self.n), count::<T>(other.n), count::<T>(n));
        self.mean = self.mean + d * nb / nt;
        self.m2 = self.m2 + other.m2 + d * d * na * nb / nt;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Sample variance (denominator `n − 1`).
    pub fn variance(&self) -> T {
        if self.n < 2 {
            T::zero()
        } else {
            self.m2 / count::<T>(self.n - 1)
        }
    }

    pub fn std_dev(&self) -> T {
        self.variance().sqrt()
    }

    pub fn stderr(&self) -> T {
        if self.n == 0 {
            T::zero()
        } else {
            (self.variance() / count::<T>(self.n)).sqrt()
        }
    }
}

impl<T: Real> FromIterator<T> for Welford<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut w = Self::new();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// `sup |F_n − F|` for the given samples (sorted in place).
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the one-sample KS statistic `d` with Stephens'
/// finite-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Quantile of the χ² distribution with `dof` degrees of freedom.
pub fn chi2_quantile(p: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64).expect("positive degrees of freedom").inverse_cdf(p)
}

/// Quantile of Hotelling's T² for `dim` components whose covariance was
/// estimated from `n` independent clusters: `dim (n − 1) / (n − dim) · F(dim, n − dim)`.
pub fn hotelling_quantile(p: f64, dim: usize, n: usize) -> Option<f64> {
    if dim == 0 || n <= dim {
        return None;
    }
    let (k, m) = (dim as f64, (n - dim) as f64);
    let f = FisherSnedecor::new(k, m).ok()?.inverse_cdf(p);
    Some(k * (n as f64 - 1.0) / m * f)
}

/// `dᵀ Σ⁻¹ d` by Cholesky; `None` when `Σ` is not positive definite.
pub fn mahalanobis_sq(cov: &[Vec<f64>], d: &[f64]) -> Option<f64> {
    let k = d.len();
    let m = DMatrix::from_fn(k, k, |i, j| cov[i][j]);
    let chol = m.cholesky()?;
    let v = DVector::from_column_slice(d);
    Some(v.dot(&chol.solve(&v)))
}

/// Least-squares slope of `y = b·x` through the origin.
pub fn slope_through_origin<T: Real>(x: &[T], y: &[T]) -> T {
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| a * b).sum();
    let sxx: T = x.iter().map(|&a| a * a).sum();
    sxy / sxx
}

/// Delete-one jackknife standard error from the `n` leave-one-out estimates.
pub fn jackknife_stderr<T: Real>(leave_one_out: &[T]) -> T {
    let n = leave_one_out.len();
    if n < 2 {
        return T::zero();
    }
    let nf = count::<T>(n);
    let mean = leave_one_out.iter().copied().sum::<T>() / nf;
    let ss: T = leave_one_out.iter().map(|&v| (v - mean) * (v - mean)).sum();
    ((nf - T::one()) / nf * ss).sqrt()
}
