//! Scalar normal-distribution helpers and Gauss–Legendre quadrature.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

/// Probability mass of `N(mean, std²)` on `[lo, hi]`.
///
/// Both tails are evaluated with `erfc` on the side away from the mean, so
/// windows deep in a tail keep their relative precision.
pub fn normal_interval_mass(mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let a = (lo - mean) / (std * SQRT_2);
    let b = (hi - mean) / (std * SQRT_2);
    if a >= 0.0 {
        0.5 * (erfc(a) - erfc(b))
    } else if b <= 0.0 {
        0.5 * (erfc(-b) - erfc(-a))
    } else {
        1.0 - 0.5 * (erfc(-a) + erfc(b))
    }
}

pub fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * PI).sqrt())
}

/// Mass, mean and variance of `N(mean, std²)` restricted to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMoments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Moments of a normal truncated to `[lo, hi]` (`hi > lo`, infinite bounds allowed).
pub fn truncated_normal(mean: f64, std: f64, lo: f64, hi: f64) -> TruncatedMoments {
    let mass = normal_interval_mass(mean, std, lo, hi);
    let a = (lo - mean) / std;
    let b = (hi - mean) / std;
    let phi = |z: f64| {
        if z.is_finite() {
            (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
        } else {
            0.0
        }
    };
    let zphi = |z: f64| if z.is_finite() { z * phi(z) } else { 0.0 };
    let z = mass;
    let ratio = (phi(a) - phi(b)) / z;
    // Narrow windows: the closed form cancels catastrophically, fall back to
    // a direct quadrature of the (nearly flat) density over the window.
    let width = b - a;
    let (mean_std, var_std) = if width.is_finite() && width < 1e-2 {
        narrow_window_moments(a, b)
    } else {
        let v = 1.0 + (zphi(a) - zphi(b)) / z - ratio * ratio;
        (ratio, v)
    };
    TruncatedMoments {
        mass,
        mean: mean + std * mean_std,
        variance: std * std * var_std.max(0.0),
    }
}

fn narrow_window_moments(a: f64, b: f64) -> (f64, f64) {
    let rule = GaussLegendre::new(32);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let w = |z: f64| (-0.5 * (z * z - c * c)).exp();
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let u = h * t;
        let f = wt * w(c + u);
        m0 += f;
        m1 += f * u;
        m2 += f * u * u;
    }
    let mu = m1 / m0;
    (c + mu, m2 / m0 - mu * mu)
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from Chebyshev initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Composite rule: `panels` equal panels over `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, panels: usize, mut f: F) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let c = lo + (k as f64 + 0.5) * h;
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                total += w * f(c + 0.5 * h * t);
            }
        }
        0.5 * h * total
    }

    /// Node/weight pairs of the composite rule on `[lo, hi]`.
    pub fn composite_points(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (hi - lo) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for k in 0..panels {
            let c = lo + (k as f64 + 0.5) * h;
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                out.push((c + 0.5 * h * t, 0.5 * h * w));
            }
        }
        out
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
