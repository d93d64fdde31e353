//! Gauss–Legendre rules and composite integration helpers.

use crate::scalar::{count, lit, Real};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes from Newton iteration on the Legendre recurrence (evaluated in f64).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = lit(-x);
            nodes[n - 1 - i] = lit(x);
            weights[i] = lit(w);
            weights[n - 1 - i] = lit(w);
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]` with a single panel.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<T>() * half
    }

    /// Composite rule with `panels` equal panels.
    pub fn composite<F: FnMut(T) -> T>(&self, a: T, b: T, panels: usize, mut f: F) -> T {
        let h = (b - a) / count::<T>(panels.max(1));
        (0..panels.max(1))
            .map(|k| {
                let lo = a + h * count::<T>(k);
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Adaptive bisection: a panel is accepted when its one-panel and
    /// two-panel estimates agree to `tol` (scaled by the panel's share).
    pub fn adaptive<F: FnMut(T) -> T>(&self, a: T, b: T, tol: T, mut f: F) -> T {
        let whole = self.integrate(a, b, &mut f);
        self.refine(a, b, whole, tol, 30, &mut f)
    }

    fn refine<F: FnMut(T) -> T>(&self, a: T, b: T, whole: T, tol: T, depth: u32, f: &mut F) -> T {
        let mid = (a + b) * lit(0.5);
        let left = self.integrate(a, mid, &mut *f);
        let right = self.integrate(mid, b, &mut *f);
        let split = left + right;
        // The floor stops refinement once the estimate is limited by rounding.
        let floor = T::epsilon() * lit(64.0) * (left.abs() + right.abs());
        if depth == 0 || (split - whole).abs() <= tol.max(floor) {
            return split;
        }
        let half = tol * lit(0.5);
        self.refine(a, mid, left, half, depth - 1, f) + self.refine(mid, b, right, half, depth - 1, f)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
