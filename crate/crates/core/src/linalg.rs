//! Planar vectors and symmetric 2×2 matrices.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at angle `theta`.
    #[inline]
    pub fn from_angle(theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    /// Counterclockwise rotation by a quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self.scale(n.recip())
        } else {
            self
        }
    }

    pub fn max_abs_diff(self, other: Self) -> T {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Real> Sym2<T> {
    #[inline]
    pub fn new(xx: T, xy: T, yy: T) -> Self {
        Self { xx, xy, yy }
    }

    #[inline]
    pub fn scalar(a: T) -> Self {
        Self::new(a, T::zero(), a)
    }

    #[inline]
    pub fn identity() -> Self {
        Self::scalar(T::one())
    }

    #[inline]
    pub fn apply(self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    #[inline]
    pub fn quad(self, v: Vec2<T>) -> T {
        v.dot(self.apply(v))
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    #[inline]
    pub fn is_isotropic(self) -> bool {
        self.xy == T::zero() && self.xx == self.yy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(self) -> (T, T) {
        let half = lit::<T>(0.5);
        let mean = (self.xx + self.yy) * half;
        let r = ((self.xx - self.yy) * half).hypot(self.xy);
        (mean - r, mean + r)
    }

    /// Principal square root of a positive semidefinite matrix.
    pub fn sqrt(self) -> Self {
        if self.xy == T::zero() {
            return Self::new(self.xx.max(T::zero()).sqrt(), T::zero(), self.yy.max(T::zero()).sqrt());
        }
        // For 2×2 SPD matrices: sqrt(A) = (A + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
        let det = (self.xx * self.yy - self.xy * self.xy).max(T::zero());
        let s = det.sqrt();
        let t = (self.xx + self.yy + lit::<T>(2.0) * s).sqrt();
        Self::new((self.xx + s) / t, self.xy / t, (self.yy + s) / t)
    }

    pub fn max_abs_diff(self, o: Self) -> T {
        (self.xx - o.xx).abs().max((self.xy - o.xy).abs()).max((self.yy - o.yy).abs())
    }
}
