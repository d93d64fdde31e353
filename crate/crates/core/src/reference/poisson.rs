//! Closed-form harmonic measure of the unit disk (κ ≡ const).

use crate::linalg::Vec2;
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

use super::ReferenceError;

/// `(1 − |x|²) / (2π |x − e^{iθ}|²)`, the exit density in `θ` from `x`.
pub fn poisson_kernel_disk<T: Real>(x: Vec2<T>, theta: T) -> Result<T, ReferenceError> {
    let r2 = x.norm_sq();
    if !(r2 < T::one()) {
        return Err(ReferenceError::OutsideDisk);
    }
    let d = x - Vec2::from_angle(theta);
    Ok((T::one() - r2) / (T::TAU() * d.norm_sq()))
}

/// Harmonic measure of the arc `[a, b]` seen from `x`.
pub fn poisson_arc_probability<T: Real>(x: Vec2<T>, a: T, b: T) -> Result<T, ReferenceError> {
    poisson_kernel_disk(x, a)?;
    let gl = GaussLegendre::<T>::new(16);
    let panels = 64;
    Ok(gl.composite(a, b, panels, |t| poisson_kernel_disk(x, t).unwrap()))
}
