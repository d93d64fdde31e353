//! Split of the Dirichlet-to-Neumann map into a drift part and a compensated
//! jump part with kernel `N`, truncated at `|Δ| < ε`.

use crate::quadrature::GaussLegendre;
use crate::scalar::{count, lit, Real};

use super::dtn::{DtNOperator, FourierSeries};
use super::kernel::levy_kernel;
use super::ReferenceError;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegroPoint<T> {
    pub theta: T,
    pub lhs: T,
    pub drift: T,
    pub jump: T,
}

impl<T: Real> IntegroPoint<T> {
    pub fn residual(&self) -> T {
        (self.lhs - self.drift - self.jump).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegroReport<T> {
    pub points: Vec<IntegroPoint<T>>,
    /// Set when the coefficients of `φ` do not decay fast enough for the
    /// quadrature to be trusted.
    pub rough_input: bool,
}

impl<T: Real> IntegroReport<T> {
    pub fn sup_residual(&self) -> T {
        self.points.iter().map(|p| p.residual()).fold(T::zero(), T::max)
    }
}

/// `(Λφ(θ), Λid·∇_Tφ(θ), −∫_{|Δ|>ε} (φ(θ+Δ) − φ(θ) − φ′(θ) sin Δ) N(Δ) dΔ)`.
///
/// The compensator `∇_Tφ·(y − x)` equals `φ′(θ) sin Δ` on the unit circle and
/// cancels between `±Δ`, so the integrand is symmetrized.
pub fn integro_point<T: Real>(
    op: &DtNOperator<T>,
    phi: &FourierSeries<T>,
    theta: T,
    epsilon: T,
    abel_r: T,
) -> Result<IntegroPoint<T>, ReferenceError> {
    if !(epsilon > T::zero() && epsilon < T::PI()) {
        return Err(ReferenceError::InvalidArgument(format!("ε must lie in (0, π), got {epsilon}")));
    }
    let lhs = op.apply(phi).series.eval(theta);
    // Λ applied to the coordinate functions x = cos θ and y = sin θ.
    let lx = op.apply(&FourierSeries::mode(1, T::one(), false)).series.eval(theta);
    let ly = op.apply(&FourierSeries::mode(1, T::one(), true)).series.eval(theta);
    let dphi = phi.derivative(theta);
    let drift = (lx * -theta.sin() + ly * theta.cos()) * dphi;
    let mut err = None;
    let gl = GaussLegendre::<T>::new(10);
    let integral = gl.adaptive(epsilon, T::PI(), lit(1e-9), |d| {
        let second = phi.second_difference(theta, d);
        match levy_kernel(op, d, abel_r) {
            Ok(n) => second * n,
            Err(e) => {
                err = Some(e);
                T::zero()
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(IntegroPoint { theta, lhs, drift, jump: -integral })
}

/// Evaluates the split on `n_theta` equally spaced angles.
pub fn integro_decomposition_check<T: Real>(
    op: &DtNOperator<T>,
    phi: &FourierSeries<T>,
    epsilon: T,
    abel_r: T,
    n_theta: usize,
) -> Result<IntegroReport<T>, ReferenceError> {
    let n = phi.n_max();
    let tail: T = (n / 2 + 1..=n).map(|k| phi.cos[k].abs() + phi.sin[k].abs()).sum();
    let total: T = (1..=n).map(|k| phi.cos[k].abs() + phi.sin[k].abs()).sum();
    let rough_input = n >= 4 && tail > lit::<T>(1e-6) * total;
    let points = (0..n_theta)
        .map(|i| integro_point(op, phi, T::TAU() * count::<T>(i) / count::<T>(n_theta), epsilon, abel_r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IntegroReport { points, rough_input })
}
