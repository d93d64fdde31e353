//! Off-diagonal kernel of the Dirichlet-to-Neumann map on the unit circle,
//! i.e. the jump intensity of the boundary process per unit local time.
//!
//! For a rotation-invariant conductivity,
//! `N(Δ) = −(1/π) Σ_{n≥1} λ_n rⁿ cos(nΔ)` as `r → 1`. The head of the series is
//! summed up to `n_max`; beyond it the eigenvalues are extended affinely,
//! `λ_n ≈ αn + β`, and the tail is summed in closed form.

use num_complex::Complex;

use crate::scalar::{count, lit, wrap_centered, Real};

use super::dtn::DtNOperator;
use super::ReferenceError;

/// Default Abel parameter.
pub const ABEL_R: f64 = 1.0 - 1e-4;

/// Abel-summed kernel value at angular separation `delta`.
pub fn levy_kernel<T: Real>(op: &DtNOperator<T>, delta: T, abel_r: T) -> Result<T, ReferenceError> {
    let d = wrap_centered(delta, T::TAU()).abs();
    if d == T::zero() || !d.is_finite() {
        return Err(ReferenceError::Diagonal);
    }
    if !(abel_r > T::zero() && abel_r < T::one()) {
        return Err(ReferenceError::InvalidArgument(format!("abel_r must lie in (0, 1), got {abel_r}")));
    }
    let m = op.n_max();
    if m < 2 {
        return Err(ReferenceError::InvalidArgument("kernel needs at least two eigenvalues".into()));
    }
    let mut head = T::zero();
    let mut rn = T::one();
    for n in 1..=m {
        rn = rn * abel_r;
        head = head + op.eigenvalues[n] * rn * (count::<T>(n) * d).cos();
    }
    let alpha = op.eigenvalues[m] - op.eigenvalues[m - 1];
    let beta = op.eigenvalues[m] - alpha * count::<T>(m);
    let z = Complex::from_polar(abel_r, d);
    let half = (d * lit(0.5)).sin();
    // 1 − z without cancellation near the diagonal.
    let gap = Complex::new(T::one() - abel_r + abel_r * lit(2.0) * half * half, -abel_r * d.sin());
    let zm1 = z.powu(m as u32 + 1);
    let s0 = zm1 / gap;
    let mf = count::<T>(m);
    let s1 = zm1 * (Complex::new(mf + T::one(), T::zero()) - z * mf) / (gap * gap);
    let tail = (s1 * alpha + s0 * beta).re;
    Ok(-(head + tail) / T::PI())
}

/// `(4π(1 − cos Δ))⁻¹`, the kernel for κ ≡ 1/2.
pub fn feller_kernel<T: Real>(delta: T) -> Result<T, ReferenceError> {
    let d = wrap_centered(delta, T::TAU());
    if d == T::zero() {
        return Err(ReferenceError::Diagonal);
    }
    Ok((lit::<T>(4.0) * T::PI() * (T::one() - d.cos())).recip())
}

/// `∫_A ∫_B (4π(1 − cos(b − a)))⁻¹ da db` for disjoint arcs `A = (a1, a2)`, `B = (b1, b2)`,
/// from the antiderivative of `csc²(u/2)`.
pub fn feller_double_integral<T: Real>(a1: T, a2: T, b1: T, b2: T) -> T {
    let g = |u: T| -lit::<T>(4.0) * (u * lit(0.5)).sin().abs().ln();
    let total = g(b2 - a1) - g(b2 - a2) - g(b1 - a1) + g(b1 - a2);
    total / (lit::<T>(8.0) * T::PI())
}

/// `∫_A ∫_B N(b − a) da db` by tensor Gauss–Legendre quadrature (arcs must be disjoint).
pub fn kernel_double_integral<T: Real, F: FnMut(T) -> T>(
    mut kernel: F,
    a1: T,
    a2: T,
    b1: T,
    b2: T,
    panels: usize,
) -> T {
    let gl = crate::quadrature::GaussLegendre::<T>::new(12);
    gl.composite(a1, a2, panels, |a| gl.composite(b1, b2, panels, |b| kernel(b - a)))
}
