//! Planar domains: boundary parametrization, outward normals, surface measure
//! and the nearest-point projection used by the reflection step.
//!
//! Three shapes are supported, each optionally dilated by a `scale` factor:
//!
//! * the disk of radius `scale`, parametrized by the polar angle;
//! * the square `[0, scale]²`, parametrized by arc length counterclockwise from
//!   the origin along the x-axis;
//! * a smooth star domain `r = scale · ρ(θ)` with a trigonometric radius profile,
//!   parametrized by the polar angle.

use rand::Rng;
use thiserror::Error;

use crate::linalg::Vec2;
use crate::quadrature::GaussLegendre;
use crate::scalar::{count, lit, wrap_centered, wrap_positive, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("radius profile must stay positive (min {min})")]
    NonPositiveRadius { min: f64 },
    #[error("domain scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("point lies {depth} outside the boundary, beyond the projection reach {reach}")]
    BeyondReach { depth: f64, reach: f64 },
    #[error("nearest-point search did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("radius profile needs an odd number of coefficients (a0, a1, b1, ...), got {0}")]
    BadCoefficients(usize),
}

/// Trigonometric radius profile `ρ(θ) = a0 + Σ aₖ cos kθ + bₖ sin kθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarProfile<T> {
    pub mean: T,
    pub cos: Vec<T>,
    pub sin: Vec<T>,
}

impl<T: Real> StarProfile<T> {
    /// Builds a profile from the flat list `[a0, a1, b1, a2, b2, ...]`.
    pub fn from_coeffs(coeffs: &[T]) -> Result<Self, GeometryError> {
        if coeffs.is_empty() || coeffs.len() % 2 == 0 {
            return Err(GeometryError::BadCoefficients(coeffs.len()));
        }
        let cos = coeffs[1..].iter().step_by(2).copied().collect();
        let sin = coeffs[2..].iter().step_by(2).copied().collect();
        Ok(Self { mean: coeffs[0], cos, sin })
    }

    /// `(ρ, ρ', ρ'')` at `theta`.
    pub fn eval(&self, theta: T) -> (T, T, T) {
        let mut r = self.mean;
        let mut d1 = T::zero();
        let mut d2 = T::zero();
        for (k, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kf = count::<T>(k + 1);
            let (s, c) = (kf * theta).sin_cos();
            r = r + a * c + b * s;
            d1 = d1 + kf * (b * c - a * s);
            d2 = d2 - kf * kf * (a * c + b * s);
        }
        (r, d1, d2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind<T> {
    UnitDisk,
    UnitSquare,
    StarSmooth(StarProfile<T>),
}

/// A point of `∂D` with its boundary parameter and local surface density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint<T> {
    /// Angle in `[0, 2π)` (disk, star) or arc length in `[0, σ(∂D))` (square).
    pub theta: T,
    pub cartesian: Vec2<T>,
    /// `|∂_θ curve|`, the density of σ with respect to the parameter.
    pub density: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    pub foot: BoundaryPoint<T>,
    pub normal: Vec2<T>,
    /// Distance outside the closed domain; zero for points in the closure.
    pub depth: T,
    /// Unsigned distance from the point to the boundary.
    pub distance: T,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec<T> {
    pub kind: DomainKind<T>,
    pub scale: T,
    boundary_length: T,
    reach: T,
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

impl<T: Real> DomainSpec<T> {
    pub fn unit_disk() -> Self {
        let two_pi = T::PI() + T::PI();
        Self { kind: DomainKind::UnitDisk, scale: T::one(), boundary_length: two_pi, reach: lit(0.5) }
    }

    pub fn unit_square() -> Self {
        Self { kind: DomainKind::UnitSquare, scale: T::one(), boundary_length: lit(4.0), reach: lit(0.25) }
    }

    pub fn star(profile: StarProfile<T>) -> Result<Self, GeometryError> {
        let samples = 2048;
        let mut min_rho = T::infinity();
        let mut min_curv_radius = T::infinity();
        for i in 0..samples {
            let th = T::TAU() * count::<T>(i) / count::<T>(samples);
            let (r, d1, d2) = profile.eval(th);
            min_rho = min_rho.min(r);
            let speed_sq = r * r + d1 * d1;
            let curvature = (r * r + lit::<T>(2.0) * d1 * d1 - r * d2) / speed_sq.powf(lit(1.5));
            if curvature.abs() > T::epsilon() {
                min_curv_radius = min_curv_radius.min(curvature.abs().recip());
            }
        }
        if !(min_rho > T::zero()) {
            return Err(GeometryError::NonPositiveRadius { min: min_rho.to_f64_lossy() });
        }
        let reach = lit::<T>(0.5) * min_rho.min(min_curv_radius);
        let mut domain =
            Self { kind: DomainKind::StarSmooth(profile), scale: T::one(), boundary_length: T::zero(), reach };
        // The integrand is smooth and periodic, so the trapezoid rule converges spectrally.
        let n = 4096;
        let h = T::TAU() / count::<T>(n);
        domain.boundary_length = (0..n).map(|i| domain.speed(h * count::<T>(i))).sum::<T>() * h;
        Ok(domain)
    }

    /// The domain `factor · D`.
    pub fn dilate(&self, factor: T) -> Result<Self, GeometryError> {
        if !(factor > T::zero()) || !factor.is_finite() {
            return Err(GeometryError::InvalidScale(factor.to_f64_lossy()));
        }
        Ok(Self {
            kind: self.kind.clone(),
            scale: self.scale * factor,
            boundary_length: self.boundary_length * factor,
            reach: self.reach * factor,
        })
    }

    /// σ(∂D).
    pub fn boundary_length(&self) -> T {
        self.boundary_length
    }

    /// Maximal overshoot the reflection step accepts.
    pub fn reach(&self) -> T {
        self.reach
    }

    /// Length of the parameter interval.
    pub fn period(&self) -> T {
        match self.kind {
            DomainKind::UnitSquare => lit::<T>(4.0) * self.scale,
            _ => T::TAU(),
        }
    }

    /// Lebesgue measure |D|.
    pub fn area(&self) -> T {
        let s2 = self.scale * self.scale;
        match &self.kind {
            DomainKind::UnitDisk => T::PI() * s2,
            DomainKind::UnitSquare => s2,
            DomainKind::StarSmooth(p) => {
                let n = 4096;
                let h = T::TAU() / count::<T>(n);
                let sum: T = (0..n)
                    .map(|i| {
                        let r = p.eval(h * count::<T>(i)).0;
                        r * r
                    })
                    .sum();
                sum * h * lit(0.5) * s2
            }
        }
    }

    /// Diameter of a disk containing D centred at [`Self::center`].
    pub fn bounding_radius(&self) -> T {
        match &self.kind {
            DomainKind::UnitDisk => self.scale,
            DomainKind::UnitSquare => self.scale * lit::<T>(0.5).sqrt(),
            DomainKind::StarSmooth(p) => {
                let bound = p.mean.abs() + p.cos.iter().chain(&p.sin).map(|c| c.abs()).sum::<T>();
                bound * self.scale
            }
        }
    }

    pub fn center(&self) -> Vec2<T> {
        match self.kind {
            DomainKind::UnitSquare => Vec2::new(self.scale, self.scale) * lit(0.5),
            _ => Vec2::zero(),
        }
    }

    /// `|∂_θ curve|` at parameter `theta`.
    pub fn speed(&self, theta: T) -> T {
        match &self.kind {
            DomainKind::UnitDisk => self.scale,
            DomainKind::UnitSquare => T::one(),
            DomainKind::StarSmooth(p) => {
                let (r, d1, _) = p.eval(theta);
                self.scale * r.hypot(d1)
            }
        }
    }

    /// Boundary point at parameter `theta` (reduced modulo the period).
    pub fn boundary_param(&self, theta: T) -> BoundaryPoint<T> {
        let theta = wrap_positive(theta, self.period());
        let cartesian = match &self.kind {
            DomainKind::UnitDisk => Vec2::from_angle(theta) * self.scale,
            DomainKind::UnitSquare => {
                let s = self.scale;
                let two = lit::<T>(2.0);
                let three = lit::<T>(3.0);
                if theta < s {
                    Vec2::new(theta, T::zero())
                } else if theta < two * s {
                    Vec2::new(s, theta - s)
                } else if theta < three * s {
                    Vec2::new(three * s - theta, s)
                } else {
                    Vec2::new(T::zero(), lit::<T>(4.0) * s - theta)
                }
            }
            DomainKind::StarSmooth(p) => Vec2::from_angle(theta) * (self.scale * p.eval(theta).0),
        };
        BoundaryPoint { theta, cartesian, density: self.speed(theta) }
    }

    /// Outward unit normal at parameter `theta`. Square corners get the bisector.
    pub fn normal(&self, theta: T) -> Vec2<T> {
        let theta = wrap_positive(theta, self.period());
        match &self.kind {
            DomainKind::UnitDisk => Vec2::from_angle(theta),
            DomainKind::UnitSquare => {
                let s = self.scale;
                let r = lit::<T>(0.5).sqrt();
                let corners = [
                    (T::zero(), Vec2::new(-r, -r)),
                    (s, Vec2::new(r, -r)),
                    (lit::<T>(2.0) * s, Vec2::new(r, r)),
                    (lit::<T>(3.0) * s, Vec2::new(-r, r)),
                ];
                if let Some((_, n)) = corners.iter().find(|(c, _)| *c == theta) {
                    return *n;
                }
                match (theta / s).floor().to_usize().unwrap_or(0) {
                    0 => Vec2::new(T::zero(), -T::one()),
                    1 => Vec2::new(T::one(), T::zero()),
                    2 => Vec2::new(T::zero(), T::one()),
                    _ => Vec2::new(-T::one(), T::zero()),
                }
            }
            DomainKind::StarSmooth(p) => {
                let (r, d1, _) = p.eval(theta);
                let e = Vec2::from_angle(theta);
                let tangent = e * d1 + e.perp() * r;
                // rotate the counterclockwise tangent clockwise
                Vec2::new(tangent.y, -tangent.x).normalized()
            }
        }
    }

    /// Fast membership test for the open domain.
    #[inline]
    pub fn is_interior(&self, x: Vec2<T>) -> bool {
        match &self.kind {
            DomainKind::UnitDisk => x.norm_sq() < self.scale * self.scale,
            DomainKind::UnitSquare => x.x > T::zero() && x.y > T::zero() && x.x < self.scale && x.y < self.scale,
            DomainKind::StarSmooth(p) => x.norm() < self.scale * p.eval(x.angle()).0,
        }
    }

    /// Fast membership test for the closed domain.
    #[inline]
    pub fn is_in_closure(&self, x: Vec2<T>) -> bool {
        match &self.kind {
            DomainKind::UnitDisk => x.norm_sq() <= self.scale * self.scale,
            DomainKind::UnitSquare => x.x >= T::zero() && x.y >= T::zero() && x.x <= self.scale && x.y <= self.scale,
            DomainKind::StarSmooth(p) => x.norm() <= self.scale * p.eval(x.angle()).0,
        }
    }

    /// Closure membership with an absolute tolerance.
    pub fn contains_closed(&self, x: Vec2<T>, tol: T) -> bool {
        if self.is_in_closure(x) {
            return true;
        }
        self.project_unchecked(x).map(|p| p.depth <= tol).unwrap_or(false)
    }

    /// Negative inside, positive outside.
    pub fn signed_distance(&self, x: Vec2<T>) -> Result<T, GeometryError> {
        let p = self.project_unchecked(x)?;
        Ok(if p.inside { -p.distance } else { p.distance })
    }

    /// Nearest boundary point, rejecting points deeper outside than the reach.
    pub fn project_to_boundary(&self, x: Vec2<T>) -> Result<Projection<T>, GeometryError> {
        let p = self.project_unchecked(x)?;
        if p.depth > self.reach {
            return Err(GeometryError::BeyondReach { depth: p.depth.to_f64_lossy(), reach: self.reach.to_f64_lossy() });
        }
        Ok(p)
    }

    /// Nearest boundary point without the reach check.
    pub fn project_unchecked(&self, x: Vec2<T>) -> Result<Projection<T>, GeometryError> {
        match &self.kind {
            DomainKind::UnitDisk => Ok(self.project_disk(x)),
            DomainKind::UnitSquare => Ok(self.project_square(x)),
            DomainKind::StarSmooth(p) => self.project_star(p, x),
        }
    }

    fn project_disk(&self, x: Vec2<T>) -> Projection<T> {
        let r = x.norm();
        let theta = if r > T::zero() { wrap_positive(x.angle(), T::TAU()) } else { T::zero() };
        let normal = Vec2::from_angle(theta);
        let foot = BoundaryPoint { theta, cartesian: normal * self.scale, density: self.scale };
        let inside = r <= self.scale;
        Projection { foot, normal, depth: (r - self.scale).max(T::zero()), distance: (r - self.scale).abs(), inside }
    }

    fn square_param(&self, p: Vec2<T>, face: usize) -> T {
        let s = self.scale;
        let v = match face {
            0 => p.x,
            1 => s + p.y,
            2 => lit::<T>(3.0) * s - p.x,
            _ => lit::<T>(4.0) * s - p.y,
        };
        wrap_positive(v, self.period())
    }

    fn project_square(&self, x: Vec2<T>) -> Projection<T> {
        let s = self.scale;
        let zero = T::zero();
        let inside = self.is_in_closure(x);
        if inside {
            // nearest face: bottom, right, top, left
            let d = [x.y, s - x.x, s - x.y, x.x];
            let (face, &dist) = d.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
            let cart = match face {
                0 => Vec2::new(x.x, zero),
                1 => Vec2::new(s, x.y),
                2 => Vec2::new(x.x, s),
                _ => Vec2::new(zero, x.y),
            };
            let theta = self.square_param(cart, face);
            return Projection {
                foot: BoundaryPoint { theta, cartesian: cart, density: T::one() },
                normal: self.normal(theta),
                depth: zero,
                distance: dist,
                inside: true,
            };
        }
        let cart = Vec2::new(x.x.max(zero).min(s), x.y.max(zero).min(s));
        let clamped_x = x.x < zero || x.x > s;
        let clamped_y = x.y < zero || x.y > s;
        let face = if clamped_y && !clamped_x {
            if x.y < zero {
                0
            } else {
                2
            }
        } else if clamped_x && !clamped_y {
            if x.x > s {
                1
            } else {
                3
            }
        } else if x.y < zero {
            // corner regions: (0,0)->face 0 start, (s,0)->face 1 start, ...
            if x.x > s {
                1
            } else {
                0
            }
        } else if x.x > s {
            2
        } else {
            3
        };
        let theta = self.square_param(cart, face);
        let offset = x - cart;
        let depth = offset.norm();
        let normal =
            if clamped_x && clamped_y && depth > zero { offset.scale(depth.recip()) } else { self.normal(theta) };
        Projection {
            foot: BoundaryPoint { theta, cartesian: cart, density: T::one() },
            normal,
            depth,
            distance: depth,
            inside: false,
        }
    }

    fn star_curve(&self, p: &StarProfile<T>, theta: T) -> (Vec2<T>, Vec2<T>, Vec2<T>) {
        let (r, d1, d2) = p.eval(theta);
        let e = Vec2::from_angle(theta);
        let ep = e.perp();
        let c = e * (r * self.scale);
        let c1 = (e * d1 + ep * r) * self.scale;
        let c2 = (e * (d2 - r) + ep * (lit::<T>(2.0) * d1)) * self.scale;
        (c, c1, c2)
    }

    fn project_star(&self, p: &StarProfile<T>, x: Vec2<T>) -> Result<Projection<T>, GeometryError> {
        let inside = self.is_in_closure(x);
        let mut theta = if x.norm_sq() > T::zero() { x.angle() } else { T::zero() };
        let tol = lit::<T>(NEWTON_TOL);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (c, c1, c2) = self.star_curve(p, theta);
            let diff = x - c;
            let g1 = -diff.dot(c1);
            let g2 = c1.norm_sq() - diff.dot(c2);
            let step = if g2 > T::zero() { g1 / g2 } else { g1 / c1.norm_sq() };
            // keep Newton steps local; the radial start is already close
            let step = step.max(-lit::<T>(0.5)).min(lit(0.5));
            theta = theta - step;
            if step.abs() < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(GeometryError::NoConvergence { iterations: NEWTON_MAX_ITER });
        }
        let theta = wrap_positive(theta, T::TAU());
        let (c, _, _) = self.star_curve(p, theta);
        let distance = (x - c).norm();
        Ok(Projection {
            foot: BoundaryPoint { theta, cartesian: c, density: self.speed(theta) },
            normal: self.normal(theta),
            depth: if inside { T::zero() } else { distance },
            distance,
            inside,
        })
    }

    /// σ of the boundary arc between parameters `a ≤ b ≤ a + period`.
    pub fn surface_measure(&self, a: T, b: T) -> T {
        let len = (b - a).max(T::zero()).min(self.period());
        match &self.kind {
            DomainKind::UnitDisk => self.scale * len,
            DomainKind::UnitSquare => len,
            DomainKind::StarSmooth(_) => {
                let gl = GaussLegendre::<T>::new(16);
                let panels = (len / T::TAU() * lit(64.0)).ceil().to_usize().unwrap_or(1).max(1);
                gl.composite(a, a + len, panels, |t| self.speed(t))
            }
        }
    }

    /// `∫_{∂D} f dσ` by composite Gauss–Legendre in the boundary parameter
    /// (panel edges fall on the square's corners).
    pub fn integrate_boundary<F: FnMut(BoundaryPoint<T>) -> T>(&self, mut f: F) -> T {
        let gl = GaussLegendre::<T>::new(16);
        gl.composite(T::zero(), self.period(), 64, |t| {
            let bp = self.boundary_param(t);
            let w = bp.density;
            f(bp) * w
        })
    }

    /// Signed parameter difference `to − from` wrapped into `(−period/2, period/2]`.
    #[inline]
    pub fn param_delta(&self, from: T, to: T) -> T {
        wrap_centered(to - from, self.period())
    }

    /// Point drawn uniformly from D (rejection from the bounding box).
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2<T> {
        let c = self.center();
        let r = self.bounding_radius();
        loop {
            let u = T::std_uniform(rng) * lit(2.0) - T::one();
            let v = T::std_uniform(rng) * lit(2.0) - T::one();
            let x = c + Vec2::new(u, v) * r;
            if self.is_interior(x) {
                return x;
            }
        }
    }

    /// Boundary point drawn from σ / σ(∂D).
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundaryPoint<T> {
        match &self.kind {
            DomainKind::UnitDisk | DomainKind::UnitSquare => self.boundary_param(T::std_uniform(rng) * self.period()),
            DomainKind::StarSmooth(_) => {
                let n = 512;
                let bound =
                    (0..n).map(|i| self.speed(T::TAU() * count::<T>(i) / count::<T>(n))).fold(T::zero(), T::max)
                        * lit(1.05);
                loop {
                    let th = T::std_uniform(rng) * T::TAU();
                    if T::std_uniform(rng) * bound <= self.speed(th) {
                        return self.boundary_param(th);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn disk_projection_examples() {
        let d = DomainSpec::<f64>::unit_disk();
        let p = d.project_to_boundary(Vec2::new(1.1, 0.0)).unwrap();
        assert_eq!(p.foot.theta, 0.0);
        assert_eq!(p.normal, Vec2::new(1.0, 0.0));
        assert!(close(p.depth, 0.1, 1e-15));
        assert!(!p.inside);
        let q = d.project_to_boundary(Vec2::new(0.9, 0.0)).unwrap();
        assert_eq!(q.foot.theta, 0.0);
        assert_eq!(q.depth, 0.0);
        assert!(q.inside);
    }

    #[test]
    fn square_projection_example() {
        let d = DomainSpec::<f64>::unit_square();
        let p = d.project_to_boundary(Vec2::new(0.5, 1.07)).unwrap();
        assert!(p.foot.cartesian.max_abs_diff(Vec2::new(0.5, 1.0)) < 1e-15);
        assert_eq!(p.normal, Vec2::new(0.0, 1.0));
        assert!(close(p.depth, 0.07, 1e-12));
    }

    #[test]
    fn deep_point_rejected() {
        let d = DomainSpec::<f64>::unit_disk();
        assert!(matches!(d.project_to_boundary(Vec2::new(2.0, 0.0)), Err(GeometryError::BeyondReach { .. })));
    }

    #[test]
    fn boundary_param_examples() {
        let d = DomainSpec::<f64>::unit_disk();
        assert!(d.boundary_param(FRAC_PI_2).cartesian.max_abs_diff(Vec2::new(0.0, 1.0)) < 1e-15);
        assert_eq!(d.boundary_param(0.0).cartesian, Vec2::new(1.0, 0.0));
        let s = DomainSpec::<f64>::unit_square();
        assert_eq!(s.boundary_param(1.5).cartesian, Vec2::new(1.0, 0.5));
    }

    #[test]
    fn square_corner_bisector() {
        let s = DomainSpec::<f64>::unit_square();
        let n = s.normal(1.0);
        assert!(close(n.x, 0.5f64.sqrt(), 1e-15) && close(n.y, -(0.5f64.sqrt()), 1e-15));
        let p = s.project_to_boundary(Vec2::new(1.0, 0.0)).unwrap();
        assert!(close(p.normal.norm(), 1.0, 1e-15));
    }

    #[test]
    fn surface_measure_examples() {
        let d = DomainSpec::<f64>::unit_disk();
        assert!(close(d.surface_measure(0.0, 2.0 * PI), 2.0 * PI, 1e-14));
        assert!(close(d.surface_measure(0.0, FRAC_PI_2), FRAC_PI_2, 1e-15));
    }

    /// Independent adaptive Simpson oracle for the star boundary length.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
    }

    #[test]
    fn star_boundary_length_matches_quadrature_oracle() {
        let profile = StarProfile::from_coeffs(&[1.0, 0.1, 0.0]).unwrap();
        let d = DomainSpec::star(profile).unwrap();
        let speed = |t: f64| {
            let r = 1.0 + 0.1 * t.cos();
            let dr = -0.1 * t.sin();
            (r * r + dr * dr).sqrt()
        };
        let oracle = adaptive_simpson(&speed, 0.0, 2.0 * PI, 1e-13);
        assert!(close(d.boundary_length(), oracle, 1e-10), "{} vs {}", d.boundary_length(), oracle);
        assert!(close(d.surface_measure(0.0, 2.0 * PI), oracle, 1e-10));
    }

    #[test]
    fn star_rejects_nonpositive_radius() {
        let profile = StarProfile::from_coeffs(&[0.5, 0.6, 0.0]).unwrap();
        assert!(matches!(DomainSpec::star(profile), Err(GeometryError::NonPositiveRadius { .. })));
    }

    #[test]
    fn generic_over_f32() {
        let d = DomainSpec::<f32>::unit_disk();
        let p = d.project_to_boundary(Vec2::new(0.0f32, 1.2)).unwrap();
        assert!((p.depth - 0.2).abs() < 1e-6);
        assert!((d.boundary_length() - 2.0 * std::f32::consts::PI).abs() < 1e-6);
    }

    fn star() -> DomainSpec<f64> {
        DomainSpec::star(StarProfile::from_coeffs(&[1.0, 0.1, 0.05, 0.0, 0.03]).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn normals_are_unit(theta in -10.0f64..10.0) {
            for d in [DomainSpec::unit_disk(), DomainSpec::unit_square(), star()] {
                prop_assert!((d.normal(theta).norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn disk_normal_exact(theta in 0.0f64..6.28) {
            let d = DomainSpec::<f64>::unit_disk();
            prop_assert_eq!(d.normal(theta), Vec2::new(theta.cos(), theta.sin()));
        }

        #[test]
        fn projection_is_idempotent(r in 0.95f64..1.2, theta in 0.0f64..6.28) {
            for d in [DomainSpec::unit_disk(), DomainSpec::unit_square(), star()] {
                let x = d.center() + Vec2::from_angle(theta) * (r * d.bounding_radius() * 0.9);
                let Ok(p) = d.project_unchecked(x) else { continue };
                let q = d.project_unchecked(p.foot.cartesian).unwrap();
                prop_assert!(q.depth < 1e-12);
                prop_assert!(q.distance < 1e-9);
                if !p.inside {
                    let back = p.foot.cartesian + p.normal * p.depth;
                    prop_assert!(back.max_abs_diff(x) < 1e-9);
                }
            }
        }

        #[test]
        fn boundary_points_lie_on_curve(theta in -20.0f64..20.0) {
            for d in [DomainSpec::unit_disk(), DomainSpec::unit_square(), star()] {
                let b = d.boundary_param(theta);
                let p = d.project_unchecked(b.cartesian).unwrap();
                prop_assert!(p.distance < 1e-12);
            }
        }

        #[test]
        fn surface_measure_additive_and_shift_invariant(a in 0.0f64..6.0, l1 in 0.0f64..3.0, l2 in 0.0f64..3.0) {
            let d = star();
            let whole = d.surface_measure(a, a + l1 + l2);
            let parts = d.surface_measure(a, a + l1) + d.surface_measure(a + l1, a + l1 + l2);
            prop_assert!((whole - parts).abs() < 1e-10);
            let shifted = d.surface_measure(a + 2.0 * PI, a + 2.0 * PI + l1);
            prop_assert!((shifted - d.surface_measure(a, a + l1)).abs() < 1e-10);
        }
    }
}
