//! Dirichlet-to-Neumann eigenvalues for rotation-invariant conductivities on
//! the unit disk.
//!
//! For the mode `u = f(r) e^{inθ}` of `∇·(κ∇u) = 0` the logarithmic flux
//! `q = rκf'/f` solves the Riccati equation `dq/dr = (n²κ² − q²)/(rκ)` with
//! `q → nκ(0)` at the origin, and `λ_n = q(1)`. Two independent integrators
//! are provided: classical RK4 in `s = ln r` with Richardson extrapolation, and
//! adaptive Dormand–Prince 5(4) in `r`.

use crate::conductivity::ConductivityField;
use crate::scalar::{count, lit, Real};

use super::ReferenceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// RK4 in `ln r` from `r = e⁻¹⁴`, step doubling with Richardson extrapolation.
    #[default]
    Rk4Richardson,
    /// Adaptive Dormand–Prince 5(4) in `r` from `r = 10⁻⁶`.
    DormandPrince,
}

/// Diagonal Dirichlet-to-Neumann operator in the Fourier basis `e^{inθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtNOperator<T> {
    /// `λ_0, …, λ_{n_max}`.
    pub eigenvalues: Vec<T>,
    pub kappa_label: String,
}

/// Real Fourier coefficients: `φ(θ) = a₀ + Σ aₙ cos nθ + bₙ sin nθ` (`b[0]` unused).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries<T> {
    pub cos: Vec<T>,
    pub sin: Vec<T>,
}

impl<T: Real> FourierSeries<T> {
    pub fn zeros(n_max: usize) -> Self {
        Self { cos: vec![T::zero(); n_max + 1], sin: vec![T::zero(); n_max + 1] }
    }

    /// Single mode `amp · cos(nθ)` (or `sin` when `sine`).
    pub fn mode(n: usize, amp: T, sine: bool) -> Self {
        let mut s = Self::zeros(n);
        if sine {
            s.sin[n] = amp;
        } else {
            s.cos[n] = amp;
        }
        s
    }

    pub fn n_max(&self) -> usize {
        self.cos.len().saturating_sub(1)
    }

    pub fn eval(&self, theta: T) -> T {
        let mut v = T::zero();
        for n in 0..self.cos.len() {
            let (s, c) = (count::<T>(n) * theta).sin_cos();
            v = v + self.cos[n] * c + self.sin.get(n).copied().unwrap_or_else(T::zero) * s;
        }
        v
    }

    /// `dφ/dθ`.
    pub fn derivative(&self, theta: T) -> T {
        let mut v = T::zero();
        for n in 1..self.cos.len() {
            let nf = count::<T>(n);
            let (s, c) = (nf * theta).sin_cos();
            v = v + nf * (self.sin.get(n).copied().unwrap_or_else(T::zero) * c - self.cos[n] * s);
        }
        v
    }

    /// `φ(θ + Δ) + φ(θ − Δ) − 2φ(θ)`, summed mode by mode to avoid cancellation at small `Δ`.
    pub fn second_difference(&self, theta: T, delta: T) -> T {
        let mut v = T::zero();
        for n in 1..self.cos.len() {
            let nf = count::<T>(n);
            let (s, c) = (nf * theta).sin_cos();
            let h = (nf * delta * lit(0.5)).sin();
            v = v - lit::<T>(4.0) * h * h * (self.cos[n] * c + self.sin.get(n).copied().unwrap_or_else(T::zero) * s);
        }
        v
    }

    /// Coefficients of a sampled function by the trapezoid rule on `m` points.
    pub fn from_samples<F: Fn(T) -> T>(f: F, n_max: usize, m: usize) -> Self {
        let mut s = Self::zeros(n_max);
        let tau = T::TAU();
        for k in 0..m {
            let th = tau * count::<T>(k) / count::<T>(m);
            let v = f(th);
            for n in 0..=n_max {
                let (sn, cn) = (count::<T>(n) * th).sin_cos();
                s.cos[n] = s.cos[n] + v * cn;
                s.sin[n] = s.sin[n] + v * sn;
            }
        }
        let m = count::<T>(m);
        for n in 0..=n_max {
            let w = if n == 0 { m } else { m * lit(0.5) };
            s.cos[n] = s.cos[n] / w;
            s.sin[n] = s.sin[n] / w;
        }
        s.sin[0] = T::zero();
        s
    }
}

/// Result of applying the operator; `truncated` is set when the input had
/// modes beyond `n_max` (they are dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct Applied<T> {
    pub series: FourierSeries<T>,
    pub truncated: bool,
}

impl<T: Real> DtNOperator<T> {
    pub fn n_max(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    /// `κ ≡ a`: `λ_n = a·n`.
    pub fn constant(a: T, n_max: usize) -> Result<Self, ReferenceError> {
        if !(a > T::zero()) {
            return Err(ReferenceError::NotElliptic(a.to_f64_lossy()));
        }
        Ok(Self {
            eigenvalues: (0..=n_max).map(|n| a * count::<T>(n)).collect(),
            kappa_label: format!("constant({a})"),
        })
    }

    /// Mode-wise multiplication by `λ_n`.
    pub fn apply(&self, phi: &FourierSeries<T>) -> Applied<T> {
        let n = phi.n_max().min(self.n_max());
        let truncated =
            phi.cos.iter().zip(&phi.sin).skip(self.n_max() + 1).any(|(&a, &b)| a != T::zero() || b != T::zero());
        let mut out = FourierSeries::zeros(n);
        for k in 1..=n {
            out.cos[k] = self.eigenvalues[k] * phi.cos[k];
            out.sin[k] = self.eigenvalues[k] * phi.sin[k];
        }
        Applied { series: out, truncated }
    }

    /// `c · Λ`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|&l| l * c).collect(),
            kappa_label: format!("{c}·{}", self.kappa_label),
        }
    }
}

/// Eigenvalues `λ_0..λ_{n_max}` for the radial conductivity `κ(r)` on the unit disk.
pub fn dtn_eigenvalues_radial<T: Real, K: Fn(T) -> T>(
    kappa: K,
    n_max: usize,
    integrator: Integrator,
    label: impl Into<String>,
) -> Result<DtNOperator<T>, ReferenceError> {
    let min = (0..=2000).map(|i| kappa(count::<T>(i) / lit(2000.0))).fold(T::infinity(), T::min);
    if !(min > T::zero()) {
        return Err(ReferenceError::NotElliptic(min.to_f64_lossy()));
    }
    let mut eigenvalues = vec![T::zero()];
    for n in 1..=n_max {
        let lambda = match integrator {
            Integrator::Rk4Richardson => riccati_rk4(&kappa, n),
            Integrator::DormandPrince => riccati_dopri(&kappa, n),
        };
        eigenvalues.push(lambda);
    }
    Ok(DtNOperator { eigenvalues, kappa_label: label.into() })
}

/// Eigenvalues for a built-in field; exact for constant fields.
pub fn dtn_for_field<T: Real>(field: &ConductivityField<T>, n_max: usize) -> Result<DtNOperator<T>, ReferenceError> {
    if field.is_constant() {
        let mut op = DtNOperator::constant(field.eval(crate::linalg::Vec2::zero()).xx, n_max)?;
        op.kappa_label = field.label.clone();
        return Ok(op);
    }
    if !field.is_rotation_invariant() {
        return Err(ReferenceError::Unsupported(format!("{} is not rotation invariant", field.label)));
    }
    dtn_eigenvalues_radial(|r| field.radial_value(r).unwrap(), n_max, Integrator::Rk4Richardson, field.label.clone())
}

const LOG_R0: f64 = -14.0;

fn rk4_pass<T: Real, K: Fn(T) -> T>(kappa: &K, n: usize, steps: usize) -> T {
    let n2 = count::<T>(n * n);
    let f = |s: T, q: T| {
        let k = kappa(s.exp());
        (n2 * k * k - q * q) / k
    };
    let s0 = lit::<T>(LOG_R0);
    let h = -s0 / count::<T>(steps);
    let mut q = count::<T>(n) * kappa(s0.exp());
    let half = lit::<T>(0.5);
    for i in 0..steps {
        let s = s0 + h * count::<T>(i);
        let k1 = f(s, q);
        let k2 = f(s + h * half, q + h * half * k1);
        let k3 = f(s + h * half, q + h * half * k2);
        let k4 = f(s + h, q + h * k3);
        q = q + h / lit(6.0) * (k1 + lit::<T>(2.0) * (k2 + k3) + k4);
    }
    q
}

fn riccati_rk4<T: Real, K: Fn(T) -> T>(kappa: &K, n: usize) -> T {
    let h0 = 0.02f64.min(0.5 / n as f64);
    let mut steps = (-LOG_R0 / h0).ceil() as usize;
    let mut coarse = rk4_pass(kappa, n, steps);
    let mut best = coarse;
    for _ in 0..8 {
        steps *= 2;
        let fine = rk4_pass(kappa, n, steps);
        let extrapolated = fine + (fine - coarse) / lit(15.0);
        let converged = (fine - coarse).abs() / lit(15.0) <= lit::<T>(1e-12) * fine.abs().max(T::one());
        best = extrapolated;
        if converged {
            break;
        }
        coarse = fine;
    }
    best
}

fn riccati_dopri<T: Real, K: Fn(T) -> T>(kappa: &K, n: usize) -> T {
    let n2 = count::<T>(n * n);
    let f = |r: T, q: T| {
        let k = kappa(r);
        (n2 * k * k - q * q) / (r * k)
    };
    // Dormand–Prince 5(4) tableau.
    let c = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    let a: [&[f64]; 7] = [
        &[],
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    let b5 = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    let b4 = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let tol = lit::<T>(1e-13);
    let mut r = lit::<T>(1e-6);
    let mut q = count::<T>(n) * kappa(r);
    let mut h = r * lit(0.1);
    let mut k = [T::zero(); 7];
    while r < T::one() {
        if r + h > T::one() {
            h = T::one() - r;
        }
        for i in 0..7 {
            let mut qi = q;
            for (j, &aij) in a[i].iter().enumerate() {
                qi = qi + h * lit::<T>(aij) * k[j];
            }
            k[i] = f(r + h * lit(c[i]), qi);
        }
        let mut q5 = q;
        let mut q4 = q;
        for i in 0..7 {
            q5 = q5 + h * lit::<T>(b5[i]) * k[i];
            q4 = q4 + h * lit::<T>(b4[i]) * k[i];
        }
        let err = (q5 - q4).abs() / (tol * (T::one() + q5.abs()));
        if err <= T::one() {
            r = r + h;
            q = q5;
        }
        let factor =
            if err == T::zero() { lit(5.0) } else { (lit::<T>(0.9) * err.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0)) };
        h = h * factor;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_plus_r2(r: f64) -> f64 {
        1.0 + r * r
    }

    #[test]
    fn constant_eigenvalues_are_exact() {
        for integ in [Integrator::Rk4Richardson, Integrator::DormandPrince] {
            let op = dtn_eigenvalues_radial(|_| 1.0, 12, integ, "one").unwrap();
            for (n, &l) in op.eigenvalues.iter().enumerate() {
                assert!((l - n as f64).abs() < 1e-8, "{integ:?} n={n} λ={l}");
            }
        }
        let half = DtNOperator::<f64>::constant(0.5, 4).unwrap();
        assert_eq!(half.eigenvalues, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn integrators_agree_on_one_plus_r2() {
        let a = dtn_eigenvalues_radial(one_plus_r2, 8, Integrator::Rk4Richardson, "a").unwrap();
        let b = dtn_eigenvalues_radial(one_plus_r2, 8, Integrator::DormandPrince, "b").unwrap();
        for n in 1..=8 {
            assert!((a.eigenvalues[n] - b.eigenvalues[n]).abs() < 1e-8 * a.eigenvalues[n], "n={n}");
        }
        // Reference value from a shooting solve of the linear mode equation.
        assert!((a.eigenvalues[1] - 1.47381).abs() < 1e-4);
    }

    #[test]
    fn eigenvalues_are_monotone_and_scale_linearly() {
        let a = dtn_eigenvalues_radial(one_plus_r2, 10, Integrator::Rk4Richardson, "a").unwrap();
        assert!(a.eigenvalues.windows(2).all(|w| w[1] >= w[0]));
        let b = dtn_eigenvalues_radial(|r| 3.0 * one_plus_r2(r), 10, Integrator::Rk4Richardson, "b").unwrap();
        for n in 0..=10 {
            assert!((b.eigenvalues[n] - 3.0 * a.eigenvalues[n]).abs() < 1e-10 * b.eigenvalues[n].max(1.0));
        }
    }

    #[test]
    fn non_positive_profile_rejected() {
        assert!(matches!(
            dtn_eigenvalues_radial(|r: f64| 0.5 - r, 3, Integrator::Rk4Richardson, "bad"),
            Err(ReferenceError::NotElliptic(_))
        ));
    }

    #[test]
    fn apply_examples() {
        let one = DtNOperator::<f64>::constant(1.0, 8).unwrap();
        let half = DtNOperator::<f64>::constant(0.5, 8).unwrap();
        let c = FourierSeries::mode(0, 1.0, false);
        assert!(one.apply(&c).series.cos.iter().all(|&v| v == 0.0));
        let r = one.apply(&FourierSeries::mode(1, 1.0, false));
        assert_eq!(r.series.cos[1], 1.0);
        let r = half.apply(&FourierSeries::mode(3, 1.0, false));
        assert_eq!(r.series.cos[3], 1.5);
        assert!(!r.truncated);
        let r = half.apply(&FourierSeries::mode(9, 1.0, false));
        assert!(r.truncated);
    }

    #[test]
    fn fourier_roundtrip() {
        let f = |t: f64| 0.3 + (2.0 * t).cos() - 0.5 * (3.0 * t).sin();
        let s = FourierSeries::from_samples(f, 5, 64);
        assert!((s.cos[0] - 0.3).abs() < 1e-14);
        assert!((s.cos[2] - 1.0).abs() < 1e-14);
        assert!((s.sin[3] + 0.5).abs() < 1e-14);
        for k in 0..10 {
            let t = k as f64 * 0.7;
            assert!((s.eval(t) - f(t)).abs() < 1e-13);
            assert!((s.derivative(t) - (-2.0 * (2.0 * t).sin() - 1.5 * (3.0 * t).cos())).abs() < 1e-12);
        }
    }
}
