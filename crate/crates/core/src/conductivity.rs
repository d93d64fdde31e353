//! Symmetric, uniformly elliptic conductivity fields κ and the derived
//! coefficients of the generator `∇·(κ∇)`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::DomainSpec;
use crate::linalg::{Sym2, Vec2};
use crate::scalar::{count, lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("conductivity must be positive, got {0}")]
    NonPositive(f64),
    #[error("point ({x}, {y}) lies outside the closure of the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("invalid field parameter: {0}")]
    InvalidParameter(String),
}

/// Step used for central differences of fields without an analytic divergence.
pub const FD_STEP: f64 = 1e-5;

/// Radial profile `p(r) = Σ cₖ r^{2k}`, optionally blended to 1 in a boundary collar.
///
/// With `collar = Some((r_in, r_out))` the field becomes
/// `1 + (p(r) − 1)(1 − S(t))`, `t = (r − r_in)/(r_out − r_in)`, where `S` is the
/// quintic smoothstep; κ ≡ 1 for `r ≥ r_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T> {
    pub coeffs: Vec<T>,
    pub collar: Option<(T, T)>,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs, collar: None }
    }

    pub fn with_collar(mut self, r_in: T, r_out: T) -> Self {
        self.collar = Some((r_in, r_out));
        self
    }

    fn poly(&self, r: T) -> (T, T) {
        let r2 = r * r;
        let mut v = T::zero();
        let mut d = T::zero();
        let mut pow = T::one();
        for (k, &c) in self.coeffs.iter().enumerate() {
            v = v + c * pow;
            if k > 0 {
                // d/dr r^{2k} = 2k r^{2k-1} = 2k r^{2k-2} · r
                d = d + c * count::<T>(2 * k) * (pow / r2) * r;
            }
            pow = pow * r2;
        }
        if r2 == T::zero() {
            d = T::zero();
        }
        (v, d)
    }

    /// `(κ(r), κ'(r))`.
    pub fn eval(&self, r: T) -> (T, T) {
        let (p, dp) = self.poly(r);
        match self.collar {
            None => (p, dp),
            Some((r_in, r_out)) => {
                let w = r_out - r_in;
                let t = ((r - r_in) / w).max(T::zero()).min(T::one());
                let s = t * t * t * (lit::<T>(10.0) - lit::<T>(15.0) * t + lit::<T>(6.0) * t * t);
                let ds = lit::<T>(30.0) * t * t * (T::one() - t) * (T::one() - t) / w;
                let v = T::one() + (p - T::one()) * (T::one() - s);
                let d = dp * (T::one() - s) - (p - T::one()) * ds;
                (v, d)
            }
        }
    }

    pub fn value(&self, r: T) -> T {
        self.eval(r).0
    }
}

/// Interior bump `1 + h·exp(1/(|x − x₀|²/w² − 1))` supported in `|x − x₀| < w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump<T> {
    pub center: Vec2<T>,
    pub width: T,
    pub height: T,
}

impl<T: Real> Bump<T> {
    fn eval(&self, x: Vec2<T>) -> (T, Vec2<T>) {
        let d = x - self.center;
        let q = d.norm_sq() / (self.width * self.width);
        if q >= T::one() {
            return (T::one(), Vec2::zero());
        }
        let e = (T::one() / (q - T::one())).exp();
        let dq = d * (lit::<T>(2.0) / (self.width * self.width));
        let grad = dq * (-self.height * e / ((q - T::one()) * (q - T::one())));
        (T::one() + self.height * e, grad)
    }
}

/// User-supplied matrix field; divergence by central differences.
#[derive(Clone)]
pub struct CustomField<T> {
    pub eval: Arc<dyn Fn(Vec2<T>) -> Sym2<T> + Send + Sync>,
    pub isotropic: bool,
}

impl<T> fmt::Debug for CustomField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField").field("isotropic", &self.isotropic).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum FieldKind<T> {
    Constant(T),
    Radial(RadialProfile<T>),
    Bump(Bump<T>),
    /// `factor · κ_base(dilation · x)`.
    Transformed {
        base: Box<ConductivityField<T>>,
        dilation: T,
        factor: T,
    },
    Custom(CustomField<T>),
}

#[derive(Debug, Clone)]
pub struct ConductivityField<T> {
    pub kind: FieldKind<T>,
    /// Constant `c ≥ 1` with `c⁻¹|ξ|² ≤ ξ·κξ ≤ c|ξ|²`.
    pub ellipticity_c: T,
    /// Width of the boundary collar where κ is the identity (0 if none).
    pub a1_width: T,
    pub label: String,
}

fn ellipticity_of<T: Real>(lo: T, hi: T) -> T {
    hi.max(lo.recip()).max(T::one())
}

impl<T: Real> ConductivityField<T> {
    /// κ ≡ a·I.
    pub fn constant(a: T) -> Result<Self, FieldError> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(FieldError::NonPositive(a.to_f64_lossy()));
        }
        Ok(Self {
            kind: FieldKind::Constant(a),
            ellipticity_c: ellipticity_of(a, a),
            a1_width: if a == T::one() { T::infinity() } else { T::zero() },
            label: format!("constant({a})"),
        })
    }

    /// Isotropic radial field `κ(|x|)·I` on `domain`.
    pub fn radial(profile: RadialProfile<T>, domain: &DomainSpec<T>) -> Result<Self, FieldError> {
        if let Some((r_in, r_out)) = profile.collar {
            if !(r_in >= T::zero() && r_out > r_in) {
                return Err(FieldError::InvalidParameter("collar needs 0 <= r_in < r_out".into()));
            }
        }
        let r_max = domain.bounding_radius() + domain.center().norm();
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for i in 0..=1024 {
            let v = profile.value(r_max * count::<T>(i) / lit(1024.0));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo > T::zero()) {
            return Err(FieldError::NonPositive(lo.to_f64_lossy()));
        }
        let a1_width = match profile.collar {
            Some((_, r_out)) => {
                let n = 512;
                let r_bd = (0..n)
                    .map(|i| domain.boundary_param(domain.period() * count::<T>(i) / count::<T>(n)).cartesian.norm())
                    .fold(T::infinity(), T::min);
                (r_bd - r_out).max(T::zero())
            }
            None => T::zero(),
        };
        let label = match profile.collar {
            Some((a, b)) => format!("radial({:?}; collar {a}..{b})", profile.coeffs),
            None => format!("radial({:?})", profile.coeffs),
        };
        Ok(Self { kind: FieldKind::Radial(profile), ellipticity_c: ellipticity_of(lo, hi), a1_width, label })
    }

    /// Interior bump field; satisfies the identity-collar assumption when the
    /// support stays away from the boundary.
    pub fn bump(center: Vec2<T>, width: T, height: T, domain: &DomainSpec<T>) -> Result<Self, FieldError> {
        if !(width > T::zero()) || !(height > -T::one()) {
            return Err(FieldError::InvalidParameter("bump needs width > 0 and height > -1".into()));
        }
        let gap = domain.signed_distance(center).map_err(|e| FieldError::InvalidParameter(e.to_string()))?;
        let a1_width = (-gap - width).max(T::zero());
        let peak = T::one() + height * (-T::one()).exp();
        Ok(Self {
            kind: FieldKind::Bump(Bump { center, width, height }),
            ellipticity_c: ellipticity_of(peak.min(T::one()), peak.max(T::one())),
            a1_width,
            label: format!("bump(h={height}, w={width})"),
        })
    }

    /// Arbitrary symmetric field; ellipticity sampled on a grid over `domain`.
    pub fn custom(
        label: impl Into<String>,
        eval: Arc<dyn Fn(Vec2<T>) -> Sym2<T> + Send + Sync>,
        isotropic: bool,
        domain: &DomainSpec<T>,
    ) -> Result<Self, FieldError> {
        let mut field = Self {
            kind: FieldKind::Custom(CustomField { eval, isotropic }),
            ellipticity_c: T::one(),
            a1_width: T::zero(),
            label: label.into(),
        };
        field.ellipticity_c = field.sampled_ellipticity(domain, 64)?;
        Ok(field)
    }

    /// κ at `x` (no domain check).
    #[inline]
    pub fn eval(&self, x: Vec2<T>) -> Sym2<T> {
        match &self.kind {
            FieldKind::Constant(a) => Sym2::scalar(*a),
            FieldKind::Radial(p) => Sym2::scalar(p.value(x.norm())),
            FieldKind::Bump(b) => Sym2::scalar(b.eval(x).0),
            FieldKind::Transformed { base, dilation, factor } => base.eval(x * *dilation).scale(*factor),
            FieldKind::Custom(c) => (c.eval)(x),
        }
    }

    /// κ at `x`, rejecting points outside the closure of `domain`.
    pub fn eval_in(&self, domain: &DomainSpec<T>, x: Vec2<T>) -> Result<Sym2<T>, FieldError> {
        if !domain.contains_closed(x, lit(1e-12)) {
            return Err(FieldError::OutsideDomain { x: x.x.to_f64_lossy(), y: x.y.to_f64_lossy() });
        }
        Ok(self.eval(x))
    }

    /// `(Σⱼ ∂ⱼ κ₁ⱼ, Σⱼ ∂ⱼ κ₂ⱼ)`, the drift of the generator `∇·(κ∇)`.
    pub fn grad_div(&self, x: Vec2<T>) -> Vec2<T> {
        match &self.kind {
            FieldKind::Constant(_) => Vec2::zero(),
            FieldKind::Radial(p) => {
                let r = x.norm();
                if r == T::zero() {
                    return Vec2::zero();
                }
                x * (p.eval(r).1 / r)
            }
            FieldKind::Bump(b) => b.eval(x).1,
            FieldKind::Transformed { base, dilation, factor } => base.grad_div(x * *dilation) * (*factor * *dilation),
            FieldKind::Custom(c) => {
                let h = lit::<T>(FD_STEP);
                let two_h = h + h;
                let ex = Vec2::new(h, T::zero());
                let ey = Vec2::new(T::zero(), h);
                let (kxp, kxm) = ((c.eval)(x + ex), (c.eval)(x - ex));
                let (kyp, kym) = ((c.eval)(x + ey), (c.eval)(x - ey));
                Vec2::new(
                    (kxp.xx - kxm.xx) / two_h + (kyp.xy - kym.xy) / two_h,
                    (kxp.xy - kxm.xy) / two_h + (kyp.yy - kym.yy) / two_h,
                )
            }
        }
    }

    pub fn is_isotropic(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Radial(_) | FieldKind::Bump(_) => true,
            FieldKind::Transformed { base, .. } => base.is_isotropic(),
            FieldKind::Custom(c) => c.isotropic,
        }
    }

    /// Whether κ does not depend on the position.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) => true,
            FieldKind::Transformed { base, .. } => base.is_constant(),
            _ => false,
        }
    }

    /// Whether κ(x) depends on |x| only (rotation invariant about the origin).
    pub fn is_rotation_invariant(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Radial(_) => true,
            FieldKind::Transformed { base, .. } => base.is_rotation_invariant(),
            _ => false,
        }
    }

    /// Scalar conductivity at radius `r` for rotation-invariant fields.
    pub fn radial_value(&self, r: T) -> Option<T> {
        if !self.is_rotation_invariant() {
            return None;
        }
        Some(self.eval(Vec2::new(r, T::zero())).xx)
    }

    /// `κ^R(x) = R⁻² κ(R x)`, the field of the dilated process `R⁻¹X` on `R⁻¹D`.
    pub fn scale_field(&self, r: T) -> Result<Self, FieldError> {
        if !(r > T::zero()) {
            return Err(FieldError::InvalidParameter(format!("scale must be positive, got {r}")));
        }
        let factor = (r * r).recip();
        let mut out = self.transformed(r, factor)?;
        out.ellipticity_c = (self.ellipticity_c * factor).max(self.ellipticity_c / factor).max(T::one());
        out.a1_width = self.a1_width / r;
        out.label = format!("{}^R(R={r})", self.label);
        Ok(out)
    }

    /// `c · κ`.
    pub fn multiply(&self, c: T) -> Result<Self, FieldError> {
        if !(c > T::zero()) {
            return Err(FieldError::NonPositive(c.to_f64_lossy()));
        }
        let mut out = self.transformed(T::one(), c)?;
        out.ellipticity_c = (self.ellipticity_c * c).max(self.ellipticity_c / c).max(T::one());
        out.a1_width = if c == T::one() { self.a1_width } else { T::zero() };
        out.label = format!("{c}·{}", self.label);
        Ok(out)
    }

    fn transformed(&self, dilation: T, factor: T) -> Result<Self, FieldError> {
        let kind = match &self.kind {
            FieldKind::Constant(a) => return Self::constant(*a * factor),
            FieldKind::Transformed { base, dilation: d0, factor: f0 } => {
                FieldKind::Transformed { base: base.clone(), dilation: *d0 * dilation, factor: *f0 * factor }
            }
            _ => FieldKind::Transformed { base: Box::new(self.clone()), dilation, factor },
        };
        Ok(Self { kind, ellipticity_c: self.ellipticity_c, a1_width: self.a1_width, label: self.label.clone() })
    }

    /// Ellipticity constant estimated on an `n × n` grid of points in the closure.
    pub fn sampled_ellipticity(&self, domain: &DomainSpec<T>, n: usize) -> Result<T, FieldError> {
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for x in grid_points(domain, n) {
            let (a, b) = self.eval(x).eigenvalues();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if !(lo > T::zero()) {
            return Err(FieldError::NonPositive(lo.to_f64_lossy()));
        }
        Ok(ellipticity_of(lo, hi))
    }

    /// Sampled check of symmetry, the stored ellipticity bounds and the identity
    /// collar; returns the first violation found.
    pub fn check_invariants(&self, domain: &DomainSpec<T>, n: usize) -> Result<(), String> {
        let c = self.ellipticity_c * (T::one() + lit(1e-12));
        for x in grid_points(domain, n) {
            let k = self.eval(x);
            let (a, b) = k.eigenvalues();
            if a < c.recip() || b > c {
                return Err(format!("ellipticity violated at ({}, {}): eigenvalues {a}, {b}", x.x, x.y));
            }
            if self.a1_width > T::zero() {
                let dist = domain.signed_distance(x).map(|d| -d).unwrap_or(T::infinity());
                if dist < self.a1_width && k.max_abs_diff(Sym2::identity()) > lit(1e-14) {
                    return Err(format!("collar violated at ({}, {})", x.x, x.y));
                }
            }
        }
        Ok(())
    }
}

fn grid_points<T: Real>(domain: &DomainSpec<T>, n: usize) -> impl Iterator<Item = Vec2<T>> + '_ {
    let c = domain.center();
    let r = domain.bounding_radius();
    (0..=n).flat_map(move |i| {
        (0..=n).filter_map(move |j| {
            let u = count::<T>(i) / count::<T>(n) * lit(2.0) - T::one();
            let v = count::<T>(j) / count::<T>(n) * lit(2.0) - T::one();
            let x = c + Vec2::new(u, v) * r;
            domain.is_in_closure(x).then_some(x)
        })
    })
}
