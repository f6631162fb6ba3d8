//! Gauss–Legendre rules and geometrically graded panel integration.
//!
//! Singular integrands in this crate all have a known algebraic exponent at
//! one end of the integration interval, so every singular integral is written
//! in terms of the distance `t >= 0` from the singular point and integrated
//! over panels `[L 2^{-k-1}, L 2^{-k}]`. The innermost panel is either
//! integrated by the same rule or, when the leading power is known, in closed
//! form.

use std::sync::OnceLock;

/// Largest rule kept in the node cache.
pub const MAX_CACHED_NODES: usize = 64;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on [-1, 1] by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mapped nodes and weights for [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Cached rule with `n` nodes (computed on first use).
pub fn rule(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let n = n.clamp(1, MAX_CACHED_NODES);
    let cache = CACHE.get_or_init(|| (1..=MAX_CACHED_NODES).map(GaussLegendre::new).collect());
    &cache[n - 1]
}

/// How the innermost panel `[0, h]` of a graded integral is treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Same Gauss rule as the other panels.
    Gauss,
    /// Integrand behaves like `C t^beta` near zero (beta > -1); the panel is
    /// integrated exactly for that power with `C` matched at `t = h`.
    Power(f64),
    /// The innermost panel is dropped.
    Zero,
}

/// Integrate `f(t)` over `[0, len]` on panels graded geometrically toward
/// `t = 0`: `levels` dyadic panels plus an innermost panel of width
/// `len 2^{-levels}`.
pub fn graded<F: FnMut(f64) -> f64>(
    mut f: F,
    len: f64,
    levels: usize,
    gl: &GaussLegendre,
    tail: Tail,
) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut hi = len;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        total += gl.integrate(lo, hi, &mut f);
        hi = lo;
    }
    total
        + match tail {
            Tail::Gauss => gl.integrate(0.0, hi, &mut f),
            Tail::Power(beta) => {
                let c = f(hi);
                c * hi / (beta + 1.0)
            }
            Tail::Zero => 0.0,
        }
}

/// Integrate over `[a, b]` with grading toward both ends (split at the midpoint).
pub fn graded_both<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    levels: usize,
    gl: &GaussLegendre,
) -> f64 {
    let half = 0.5 * (b - a);
    graded(|t| f(a + t), half, levels, gl, Tail::Gauss)
        + graded(|t| f(b - t), half, levels, gl, Tail::Gauss)
}

/// Tabulate the nodes/weights of a graded rule on `[a, b]` clustered at `a`
/// (`toward_start`) or at `b`.
pub fn graded_nodes(
    a: f64,
    b: f64,
    levels: usize,
    gl: &GaussLegendre,
    toward_start: bool,
) -> Vec<(f64, f64)> {
    let len = b - a;
    let mut out = Vec::with_capacity((levels + 1) * gl.len());
    let mut hi = len;
    for k in 0..=levels {
        let lo = if k == levels { 0.0 } else { 0.5 * hi };
        for (t, w) in gl.mapped(lo, hi) {
            let x = if toward_start { a + t } else { b - t };
            out.push((x, w));
        }
        hi = lo;
    }
    out
}

/// Geometric sequence of `n` points between `lo` and `hi` (inclusive).
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp())
        .collect()
}
