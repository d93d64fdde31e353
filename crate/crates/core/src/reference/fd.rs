//! Finite-volume solvers for `∇·(κ∇u) = 0` with isotropic κ: node-based
//! 5-point Dirichlet and cell-centered Neumann schemes on the square, and a
//! cell-centered polar scheme on the disk. Linear systems are solved by
//! Jacobi-preconditioned conjugate gradients.

use crate::conductivity::ConductivityField;
use crate::geometry::{DomainKind, DomainSpec};
use crate::linalg::Vec2;
use crate::scalar::{count, lit, wrap_positive, Real};

use super::ReferenceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Relative residual `‖b − Au‖ / ‖b‖` at which CG stops.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { tol: lit(1e-10), max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdGrid {
    /// `n` cells per side of the square.
    Square { n: usize },
    /// `nr` radial by `nt` angular cells on the disk.
    Polar { nr: usize, nt: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    SquareNodes,
    SquareCells,
    Polar,
}

/// Values on a regular grid together with the final solver residual.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    pub kind: GridKind,
    /// Nodes/cells along x (square) or r (polar).
    pub n1: usize,
    /// Nodes/cells along y (square) or θ (polar).
    pub n2: usize,
    /// Spacing along the first and second axes.
    pub h1: T,
    pub h2: T,
    /// Row-major values, index `i * n2 + j`.
    pub values: Vec<T>,
    /// Polar grids: values on the boundary circle at the angular cell centers.
    pub outer: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> GridFunction<T> {
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.n2 + j]
    }

    /// Bilinear interpolation at a point of the domain.
    pub fn value_at(&self, p: Vec2<T>) -> T {
        let half = lit::<T>(0.5);
        match self.kind {
            GridKind::SquareNodes | GridKind::SquareCells => {
                let shift = if self.kind == GridKind::SquareCells { half } else { T::zero() };
                let fx = p.x / self.h1 - shift;
                let fy = p.y / self.h2 - shift;
                let (i, tx) = split(fx, self.n1);
                let (j, ty) = split(fy, self.n2);
                let v00 = self.at(i, j);
                let v10 = self.at(i + 1, j);
                let v01 = self.at(i, j + 1);
                let v11 = self.at(i + 1, j + 1);
                (v00 * (T::one() - tx) + v10 * tx) * (T::one() - ty) + (v01 * (T::one() - tx) + v11 * tx) * ty
            }
            GridKind::Polar => {
                let r = p.norm();
                let theta = wrap_positive(p.angle(), T::TAU());
                let fk = theta / self.h2;
                let k0 = fk.floor().to_usize().unwrap_or(0) % self.n2;
                let k1 = (k0 + 1) % self.n2;
                let tk = fk - fk.floor();
                let fi = r / self.h1 - half;
                let last = count::<T>(self.n1 - 1);
                let ring = |i: usize| self.at(i, k0) * (T::one() - tk) + self.at(i, k1) * tk;
                if fi <= T::zero() {
                    ring(0)
                } else if fi >= last {
                    let outer = self.outer[k0] * (T::one() - tk) + self.outer[k1] * tk;
                    let t = ((fi - last) / half).min(T::one());
                    ring(self.n1 - 1) * (T::one() - t) + outer * t
                } else {
                    let i = fi.floor().to_usize().unwrap();
                    let t = fi - fi.floor();
                    ring(i) * (T::one() - t) + ring(i + 1) * t
                }
            }
        }
    }
}

fn split<T: Real>(f: T, n: usize) -> (usize, T) {
    let max = count::<T>(n - 2);
    let fl = f.floor().max(T::zero()).min(max);
    (fl.to_usize().unwrap(), f - fl)
}

fn scalar_conductivity<'a, T: Real>(
    field: &'a ConductivityField<T>,
) -> Result<impl Fn(Vec2<T>) -> T + 'a, ReferenceError> {
    if !field.is_isotropic() {
        return Err(ReferenceError::Unsupported(format!("finite-volume solvers need isotropic κ ({})", field.label)));
    }
    Ok(move |x: Vec2<T>| field.eval(x).xx)
}

/// Sparse symmetric operator given by neighbor couplings.
struct Stencil<T> {
    /// `(row, col, weight)` with `weight > 0`, each unordered pair once.
    edges: Vec<(usize, usize, T)>,
    /// Extra diagonal from Dirichlet couplings.
    diag_extra: Vec<T>,
}

impl<T: Real> Stencil<T> {
    fn new(n: usize) -> Self {
        Self { edges: Vec::new(), diag_extra: vec![T::zero(); n] }
    }

    fn diag(&self) -> Vec<T> {
        let mut d = self.diag_extra.clone();
        for &(a, b, w) in &self.edges {
            d[a] = d[a] + w;
            d[b] = d[b] + w;
        }
        d
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (yi, (&xi, &e)) in y.iter_mut().zip(x.iter().zip(&self.diag_extra)) {
            *yi = e * xi;
        }
        for &(a, b, w) in &self.edges {
            let d = w * (x[a] - x[b]);
            y[a] = y[a] + d;
            y[b] = y[b] - d;
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn remove_mean<T: Real>(v: &mut [T]) {
    let m = v.iter().copied().sum::<T>() / count::<T>(v.len());
    for x in v.iter_mut() {
        *x = *x - m;
    }
}

/// Preconditioned CG; with `singular` the iteration is kept orthogonal to constants.
fn conjugate_gradient<T: Real>(
    op: &Stencil<T>,
    b: &[T],
    x: &mut [T],
    singular: bool,
    opts: &SolverOptions<T>,
) -> Result<(T, usize), ReferenceError> {
    let n = b.len();
    let diag = op.diag();
    let bnorm = dot(b, b).sqrt();
    let mut ax = vec![T::zero(); n];
    op.apply(x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect();
    if singular {
        remove_mean(&mut r);
    }
    let scale = if bnorm > T::zero() { bnorm } else { T::one() };
    let mut res = dot(&r, &r).sqrt() / scale;
    if res <= opts.tol {
        return Ok((res, 0));
    }
    let mut z: Vec<T> = r.iter().zip(&diag).map(|(&ri, &d)| ri / d).collect();
    if singular {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    for it in 1..=opts.max_iter {
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        if singular {
            remove_mean(&mut r);
        }
        res = dot(&r, &r).sqrt() / scale;
        if res <= opts.tol {
            // Recompute the true residual to guard against drift.
            op.apply(x, &mut ax);
            let mut rt: Vec<T> = b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect();
            if singular {
                remove_mean(&mut rt);
            }
            let true_res = dot(&rt, &rt).sqrt() / scale;
            if true_res <= opts.tol * lit(10.0) {
                return Ok((true_res, it));
            }
            r = rt;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        if singular {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(ReferenceError::NoConvergence { residual: res.to_f64_lossy(), iterations: opts.max_iter })
}

fn check_grid<T: Real>(domain: &DomainSpec<T>, grid: FdGrid) -> Result<(), ReferenceError> {
    match (&domain.kind, grid) {
        (DomainKind::UnitSquare, FdGrid::Square { n }) if n >= 2 => Ok(()),
        (DomainKind::UnitDisk, FdGrid::Polar { nr, nt }) if nr >= 2 && nt >= 4 => Ok(()),
        _ => Err(ReferenceError::Unsupported(format!("grid {grid:?} does not fit domain {:?}", domain.kind))),
    }
}

/// Dirichlet problem with boundary values `phi` (evaluated at boundary points).
pub fn solve_dirichlet_fd<T: Real, P: Fn(Vec2<T>) -> T>(
    domain: &DomainSpec<T>,
    grid: FdGrid,
    field: &ConductivityField<T>,
    phi: P,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>, ReferenceError> {
    check_grid(domain, grid)?;
    let a = scalar_conductivity(field)?;
    match grid {
        FdGrid::Square { n } => dirichlet_square(domain.scale, n, &a, &phi, opts),
        FdGrid::Polar { nr, nt } => polar(domain.scale, nr, nt, &a, Boundary::Dirichlet(&phi), opts),
    }
}

/// Neumann problem `κ∂_νu = f` with `∫ f dσ = 0`; returns the mean-zero solution.
pub fn solve_neumann_fd<T: Real, F: Fn(Vec2<T>) -> T>(
    domain: &DomainSpec<T>,
    grid: FdGrid,
    field: &ConductivityField<T>,
    flux: F,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>, ReferenceError> {
    check_grid(domain, grid)?;
    let a = scalar_conductivity(field)?;
    let net = domain.integrate_boundary(|bp| flux(bp.cartesian));
    let abs = domain.integrate_boundary(|bp| flux(bp.cartesian).abs());
    if net.abs() > lit::<T>(1e-12) * abs.max(T::one()) {
        return Err(ReferenceError::Incompatible(net.to_f64_lossy()));
    }
    match grid {
        FdGrid::Square { n } => neumann_square(domain.scale, n, &a, &flux, opts),
        FdGrid::Polar { nr, nt } => polar(domain.scale, nr, nt, &a, Boundary::Neumann(&flux), opts),
    }
}

fn dirichlet_square<T: Real>(
    side: T,
    n: usize,
    a: &dyn Fn(Vec2<T>) -> T,
    phi: &dyn Fn(Vec2<T>) -> T,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>, ReferenceError> {
    let h = side / count::<T>(n);
    let m = n - 1;
    let node = |i: usize, j: usize| Vec2::new(h * count::<T>(i), h * count::<T>(j));
    let unknown = |i: usize, j: usize| (i - 1) * m + (j - 1);
    let is_bd = |i: usize, j: usize| i == 0 || j == 0 || i == n || j == n;
    let mut st = Stencil::new(m * m);
    let mut b = vec![T::zero(); m * m];
    let mut bsum = T::zero();
    let mut bcount = 0usize;
    for i in 1..n {
        for j in 1..n {
            let p = unknown(i, j);
            for (di, dj) in [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)] {
                let (ni, nj) = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                let w = a((node(i, j) + node(ni, nj)) * lit(0.5));
                if is_bd(ni, nj) {
                    let g = phi(node(ni, nj));
                    st.diag_extra[p] = st.diag_extra[p] + w;
                    b[p] = b[p] + w * g;
                    bsum = bsum + g;
                    bcount += 1;
                } else if (di, dj) == (1, 0) || (di, dj) == (0, 1) {
                    st.edges.push((p, unknown(ni, nj), w));
                }
            }
        }
    }
    let mut x = vec![if bcount > 0 { bsum / count::<T>(bcount) } else { T::zero() }; m * m];
    let (residual, iterations) = conjugate_gradient(&st, &b, &mut x, false, opts)?;
    let mut values = vec![T::zero(); (n + 1) * (n + 1)];
    for i in 0..=n {
        for j in 0..=n {
            values[i * (n + 1) + j] = if is_bd(i, j) { phi(node(i, j)) } else { x[unknown(i, j)] };
        }
    }
    Ok(GridFunction {
        kind: GridKind::SquareNodes,
        n1: n + 1,
        n2: n + 1,
        h1: h,
        h2: h,
        values,
        outer: Vec::new(),
        residual,
        iterations,
    })
}

fn neumann_square<T: Real>(
    side: T,
    n: usize,
    a: &dyn Fn(Vec2<T>) -> T,
    flux: &dyn Fn(Vec2<T>) -> T,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>, ReferenceError> {
    let h = side / count::<T>(n);
    let half = lit::<T>(0.5);
    let center = |i: usize, j: usize| Vec2::new(h * (count::<T>(i) + half), h * (count::<T>(j) + half));
    let id = |i: usize, j: usize| i * n + j;
    let mut st = Stencil::new(n * n);
    let mut b = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let c = center(i, j);
            if i + 1 < n {
                st.edges.push((id(i, j), id(i + 1, j), a(c + Vec2::new(h * half, T::zero()))));
            }
            if j + 1 < n {
                st.edges.push((id(i, j), id(i, j + 1), a(c + Vec2::new(T::zero(), h * half))));
            }
            let p = id(i, j);
            if i == 0 {
                b[p] = b[p] + flux(Vec2::new(T::zero(), c.y)) * h;
            }
            if i == n - 1 {
                b[p] = b[p] + flux(Vec2::new(side, c.y)) * h;
            }
            if j == 0 {
                b[p] = b[p] + flux(Vec2::new(c.x, T::zero())) * h;
            }
            if j == n - 1 {
                b[p] = b[p] + flux(Vec2::new(c.x, side)) * h;
            }
        }
    }
    remove_mean(&mut b);
    let mut x = vec![T::zero(); n * n];
    let (residual, iterations) = conjugate_gradient(&st, &b, &mut x, true, opts)?;
    remove_mean(&mut x);
    Ok(GridFunction {
        kind: GridKind::SquareCells,
        n1: n,
        n2: n,
        h1: h,
        h2: h,
        values: x,
        outer: Vec::new(),
        residual,
        iterations,
    })
}

enum Boundary<'a, T> {
    Dirichlet(&'a dyn Fn(Vec2<T>) -> T),
    Neumann(&'a dyn Fn(Vec2<T>) -> T),
}

fn polar<T: Real>(
    radius: T,
    nr: usize,
    nt: usize,
    a: &dyn Fn(Vec2<T>) -> T,
    boundary: Boundary<'_, T>,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>, ReferenceError> {
    let hr = radius / count::<T>(nr);
    let ht = T::TAU() / count::<T>(nt);
    let half = lit::<T>(0.5);
    let id = |i: usize, k: usize| i * nt + k;
    let at = |r: T, th: T| a(Vec2::from_angle(th) * r);
    let mut st = Stencil::new(nr * nt);
    let mut b = vec![T::zero(); nr * nt];
    let mut outer = vec![T::zero(); nt];
    for i in 0..nr {
        let ri = hr * (count::<T>(i) + half);
        for k in 0..nt {
            let th = ht * count::<T>(k);
            let p = id(i, k);
            // Angular face at θ_k + ht/2: length hr, center distance ri·ht.
            let wa = at(ri, th + ht * half) * hr / (ri * ht);
            st.edges.push((p, id(i, (k + 1) % nt), wa));
            if i + 1 < nr {
                // Radial face at r = (i+1)hr: length r·ht, center distance hr.
                let rf = hr * count::<T>(i + 1);
                st.edges.push((p, id(i + 1, k), at(rf, th) * rf * ht / hr));
            } else {
                let pt = Vec2::from_angle(th) * radius;
                match &boundary {
                    Boundary::Dirichlet(phi) => {
                        let w = at(radius, th) * radius * ht / (hr * half);
                        let g = phi(pt);
                        st.diag_extra[p] = st.diag_extra[p] + w;
                        b[p] = b[p] + w * g;
                        outer[k] = g;
                    }
                    Boundary::Neumann(f) => {
                        b[p] = b[p] + f(pt) * radius * ht;
                    }
                }
            }
        }
    }
    let singular = matches!(boundary, Boundary::Neumann(_));
    let start = if singular { T::zero() } else { outer.iter().copied().sum::<T>() / count::<T>(nt) };
    if singular {
        remove_mean(&mut b);
    }
    let mut x = vec![start; nr * nt];
    let (residual, iterations) = conjugate_gradient(&st, &b, &mut x, singular, opts)?;
    if let Boundary::Neumann(f) = &boundary {
        // Area-weighted mean zero, then extrapolate to the rim with the flux.
        let (mut s, mut w) = (T::zero(), T::zero());
        for i in 0..nr {
            let wi = count::<T>(i) + half;
            for k in 0..nt {
                s = s + wi * x[id(i, k)];
                w = w + wi;
            }
        }
        let m = s / w;
        for v in x.iter_mut() {
            *v = *v - m;
        }
        for (k, o) in outer.iter_mut().enumerate() {
            let th = ht * count::<T>(k);
            *o = x[id(nr - 1, k)] + f(Vec2::from_angle(th) * radius) * hr * half / at(radius, th);
        }
    }
    Ok(GridFunction { kind: GridKind::Polar, n1: nr, n2: nt, h1: hr, h2: ht, values: x, outer, residual, iterations })
}

/// Discrete Dirichlet-to-Neumann matrix of the square from column-by-column
/// Dirichlet solves; corners are excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareDtN<T> {
    pub points: Vec<Vec2<T>>,
    pub h: T,
    /// Row-major `m × m`, `m = points.len()`; `(Λφ)_i = Σ_j M_ij φ_j`.
    pub matrix: Vec<T>,
}

impl<T: Real> SquareDtN<T> {
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.matrix[i * self.size() + j]
    }

    /// Off-diagonal kernel `N(x_i, x_j) = −M_ij / h` (per unit σ).
    pub fn kernel(&self, i: usize, j: usize) -> T {
        -self.entry(i, j) / self.h
    }
}

pub fn square_dtn<T: Real>(
    domain: &DomainSpec<T>,
    n: usize,
    field: &ConductivityField<T>,
    opts: &SolverOptions<T>,
) -> Result<SquareDtN<T>, ReferenceError> {
    check_grid(domain, FdGrid::Square { n })?;
    let a = scalar_conductivity(field)?;
    let side = domain.scale;
    let h = side / count::<T>(n);
    // Boundary nodes counterclockwise from (h, 0), with the inward neighbor.
    let mut nodes: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for i in 1..n {
        nodes.push(((i, 0), (i, 1)));
    }
    for j in 1..n {
        nodes.push(((n, j), (n - 1, j)));
    }
    for i in (1..n).rev() {
        nodes.push(((i, n), (i, n - 1)));
    }
    for j in (1..n).rev() {
        nodes.push(((0, j), (1, j)));
    }
    let pos = |(i, j): (usize, usize)| Vec2::new(h * count::<T>(i), h * count::<T>(j));
    let m = nodes.len();
    let mut matrix = vec![T::zero(); m * m];
    for (col, &(src, _)) in nodes.iter().enumerate() {
        let target = pos(src);
        let phi = |x: Vec2<T>| if x.max_abs_diff(target) < h * lit(1e-6) { T::one() } else { T::zero() };
        let u = dirichlet_square(side, n, &a, &phi, opts)?;
        for (row, &(bd, inner)) in nodes.iter().enumerate() {
            let w = a((pos(bd) + pos(inner)) * lit(0.5));
            let ub = u.at(bd.0, bd.1);
            let ui = u.at(inner.0, inner.1);
            matrix[row * m + col] = w * (ub - ui) / h;
        }
    }
    Ok(SquareDtN { points: nodes.iter().map(|&(b, _)| pos(b)).collect(), h, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> ConductivityField<f64> {
        ConductivityField::constant(1.0).unwrap()
    }

    #[test]
    fn square_dirichlet_harmonic_polynomial() {
        let d = DomainSpec::<f64>::unit_square();
        let u = solve_dirichlet_fd(
            &d,
            FdGrid::Square { n: 128 },
            &one(),
            |p| p.x * p.x - p.y * p.y,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(u.value_at(Vec2::new(0.5, 0.5)).abs() < 1e-3);
        assert!(u.residual <= 1e-9);
        for &(x, y) in &[(0.2, 0.7), (0.9, 0.1)] {
            assert!((u.value_at(Vec2::new(x, y)) - (x * x - y * y)).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        let d = DomainSpec::<f64>::unit_square();
        let u = solve_dirichlet_fd(&d, FdGrid::Square { n: 16 }, &one(), |_| 2.5, &SolverOptions::default()).unwrap();
        assert!(u.values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn discrete_maximum_principle() {
        let d = DomainSpec::<f64>::unit_square();
        let f = ConductivityField::bump(Vec2::new(0.5, 0.5), 0.3, 4.0, &d).unwrap();
        let u = solve_dirichlet_fd(
            &d,
            FdGrid::Square { n: 32 },
            &f,
            |p| (6.0 * p.x).sin() + p.y,
            &SolverOptions::default(),
        )
        .unwrap();
        let (lo, hi) = (-1.0, 2.0);
        assert!(u.values.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }

    #[test]
    fn disk_dirichlet_cos() {
        let d = DomainSpec::<f64>::unit_disk();
        let u = solve_dirichlet_fd(&d, FdGrid::Polar { nr: 64, nt: 128 }, &one(), |p| p.x, &SolverOptions::default())
            .unwrap();
        for &(r, t) in &[(0.3, 0.0), (0.7, 1.0), (0.5, 4.0)] {
            let p = Vec2::from_angle(t) * r;
            assert!((u.value_at(p) - p.x).abs() < 1e-3, "{r} {t}");
        }
    }

    #[test]
    fn square_neumann_linear() {
        let d = DomainSpec::<f64>::unit_square();
        let flux = |p: Vec2<f64>| {
            if p.x >= 1.0 {
                1.0
            } else if p.x <= 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        let u = solve_neumann_fd(&d, FdGrid::Square { n: 64 }, &one(), flux, &SolverOptions::default()).unwrap();
        assert!((u.value_at(Vec2::new(0.75, 0.5)) - 0.25).abs() < 1e-3);
        assert!(u.residual <= 1e-8);
    }

    #[test]
    fn zero_flux_zero_solution() {
        let d = DomainSpec::<f64>::unit_square();
        let u = solve_neumann_fd(&d, FdGrid::Square { n: 8 }, &one(), |_| 0.0, &SolverOptions::default()).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_neumann_cos() {
        let d = DomainSpec::<f64>::unit_disk();
        let u = solve_neumann_fd(&d, FdGrid::Polar { nr: 64, nt: 128 }, &one(), |p| p.x, &SolverOptions::default())
            .unwrap();
        assert!((u.value_at(Vec2::new(0.3, 0.0)) - 0.3).abs() < 1e-3);
        let half = ConductivityField::constant(0.5).unwrap();
        let u =
            solve_neumann_fd(&d, FdGrid::Polar { nr: 64, nt: 128 }, &half, |p| p.x, &SolverOptions::default()).unwrap();
        assert!((u.value_at(Vec2::new(0.3, 0.0)) - 0.6).abs() < 2e-3);
    }

    #[test]
    fn incompatible_flux_rejected() {
        let d = DomainSpec::<f64>::unit_disk();
        let r = solve_neumann_fd(&d, FdGrid::Polar { nr: 8, nt: 16 }, &one(), |_| 1.0, &SolverOptions::default());
        assert!(matches!(r, Err(ReferenceError::Incompatible(_))));
    }

    #[test]
    fn anisotropic_field_unsupported() {
        use crate::linalg::Sym2;
        use std::sync::Arc;
        let d = DomainSpec::<f64>::unit_square();
        let f = ConductivityField::custom("aniso", Arc::new(|_| Sym2::new(1.0, 0.2, 1.0)), false, &d).unwrap();
        let r = solve_dirichlet_fd(&d, FdGrid::Square { n: 8 }, &f, |_| 0.0, &SolverOptions::default());
        assert!(matches!(r, Err(ReferenceError::Unsupported(_))));
    }

    #[test]
    fn narrow_bump_reproduces_poisson_integral() {
        use crate::reference::poisson::poisson_kernel_disk;
        let d = DomainSpec::<f64>::unit_disk();
        let w = 0.3;
        let bump = |t: f64| {
            let t = crate::scalar::wrap_centered(t, std::f64::consts::TAU);
            if t.abs() < w {
                (1.0 - (t / w).powi(2)).powi(2)
            } else {
                0.0
            }
        };
        let u = solve_dirichlet_fd(
            &d,
            FdGrid::Polar { nr: 96, nt: 384 },
            &one(),
            |p| bump(p.angle()),
            &SolverOptions::default(),
        )
        .unwrap();
        let x = Vec2::new(0.4, 0.2);
        let gl = crate::quadrature::GaussLegendre::<f64>::new(16);
        let exact = gl.composite(-w, w, 32, |t| poisson_kernel_disk(x, t).unwrap() * bump(t));
        assert!((u.value_at(x) - exact).abs() < 1e-3, "{} {exact}", u.value_at(x));
    }

    #[test]
    fn square_dtn_domain_scaling_law() {
        let small = DomainSpec::<f64>::unit_square();
        let big = small.dilate(2.0).unwrap();
        let field = ConductivityField::radial(crate::conductivity::RadialProfile::new(vec![1.0, 0.3]), &big).unwrap();
        let scaled = field.scale_field(2.0).unwrap();
        let opts = SolverOptions { tol: 1e-12, max_iter: 100_000 };
        let a = square_dtn(&big, 12, &field, &opts).unwrap();
        let b = square_dtn(&small, 12, &scaled, &opts).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..a.size() {
            for j in 0..a.size() {
                if i != j {
                    let ka = a.kernel(i, j);
                    assert!(ka >= -1e-12);
                    worst = worst.max((ka - b.kernel(i, j)).abs() / ka.abs().max(1e-3));
                }
            }
        }
        assert!(worst < 1e-8, "{worst}");
        // Rows of the DtN matrix annihilate constants.
        for i in 0..a.size() {
            let s: f64 = (0..a.size()).map(|j| a.entry(i, j)).sum();
            let corner_leak = s.abs();
            assert!(corner_leak < 1.0 / a.h);
        }
    }
}
