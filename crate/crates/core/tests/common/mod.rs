#![allow(dead_code)]

//! Independent numerical oracles shared by the integration and acceptance tests.
//! The oracles never call the conditioning or fidelity code under test; the
//! comparison drivers in `checks` do.

pub mod checks;

use std::f64::consts::PI;

use cv_rsp::gaussian::GaussianState;
use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};
use rand::Rng;
use rayon::prelude::*;

fn rot(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn embed(m1: Matrix2<f64>, m2: Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&m1);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&m2);
    m
}

/// `S diag(ν) Sᵀ` with `S` a product of local rotations, local squeezers and a
/// beam splitter; thermal occupations `ν ∈ [1/2, 3/2]`, means in `[-1, 1]`.
pub fn random_two_mode_state<R: Rng>(rng: &mut R, max_r: f64) -> GaussianState {
    let sq = |r: f64| Matrix2::new((-r).exp(), 0.0, 0.0, r.exp());
    let mut angle = || rng.random_range(0.0..2.0 * PI);
    let (a1, a2, a3, a4) = (angle(), angle(), angle(), angle());
    let tau = rng.random_range(0.0..PI);
    let (st, ct) = tau.sin_cos();
    let mut bs = Matrix4::zeros();
    for i in 0..2 {
        bs[(i, i)] = ct;
        bs[(i + 2, i + 2)] = ct;
        bs[(i, i + 2)] = st;
        bs[(i + 2, i)] = -st;
    }
    let r1 = rng.random_range(0.0..max_r);
    let r2 = rng.random_range(0.0..max_r);
    let s = embed(rot(a3), rot(a4)) * bs * embed(sq(r1), sq(r2)) * embed(rot(a1), rot(a2));
    let n1 = rng.random_range(0.5..1.5);
    let n2 = rng.random_range(0.5..1.5);
    let d = Matrix4::from_diagonal(&Vector4::new(n1, n1, n2, n2));
    let cov = s * d * s.transpose();
    let cov = 0.5 * (cov + cov.transpose());
    let mean = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    GaussianState::new(mean, DMatrix::from_fn(4, 4, |i, j| cov[(i, j)])).expect("physical by construction")
}

/// Mean and covariance of one remaining mode.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Moments {
    pub fn of(state: &GaussianState) -> Self {
        assert_eq!(state.n_modes(), 1);
        let m = state.mean();
        let c = state.cov();
        Self {
            mean: [m[0], m[1]],
            cov: [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
        }
    }

    pub fn max_abs_diff(&self, other: &Moments) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            d = d.max((self.mean[i] - other.mean[i]).abs());
            for j in 0..2 {
                d = d.max((self.cov[i][j] - other.cov[i][j]).abs());
            }
        }
        d
    }
}

/// Joint Wigner function in coordinates `(u, v, x_B, p_B)` where
/// `u = cos θ x_A + sin θ p_A` is the measured quadrature and `v` its conjugate.
struct RotatedJoint {
    mean: Vector4<f64>,
    precision: Matrix4<f64>,
    cov: Matrix4<f64>,
}

impl RotatedJoint {
    fn new(state: &GaussianState, measured: usize, theta: f64) -> Self {
        let other = 1 - measured;
        let order = [2 * measured, 2 * measured + 1, 2 * other, 2 * other + 1];
        let mean0 = Vector4::from_fn(|i, _| state.mean()[order[i]]);
        let cov0 = Matrix4::from_fn(|i, j| state.cov()[(order[i], order[j])]);
        let (s, c) = theta.sin_cos();
        let t = embed(Matrix2::new(c, s, -s, c), Matrix2::identity());
        let cov = t * cov0 * t.transpose();
        Self {
            mean: t * mean0,
            precision: cov.try_inverse().expect("positive definite"),
            cov,
        }
    }

    fn log_density(&self, z: &Vector4<f64>) -> f64 {
        let d = z - self.mean;
        -0.5 * d.dot(&(self.precision * d))
    }
}

fn trapezoid_axis(center: f64, half_width: f64, h: f64) -> Vec<f64> {
    let n = (2.0 * half_width / h).ceil() as usize + 1;
    let step = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|i| center - half_width + i as f64 * step).collect()
}

/// Bob's moments after an ideal projection, from the joint Wigner function:
/// `W_B(x, p) ∝ ∫ W(u = α, v, x, p) dv`, integrated on a uniform 2-D grid over
/// Bob's phase space with a 1-D trapezoid rule in `v` at every grid point.
pub fn conditional_by_grid(state: &GaussianState, measured: usize, theta: f64, alpha: f64) -> Moments {
    let j = RotatedJoint::new(state, measured, theta);
    grid_moments(&j, &[(alpha, 1.0)])
}

/// Bob's moments after keeping `u ∈ [α − δ, α + δ]`; the window is integrated
/// with composite Simpson's rule.
pub fn windowed_by_grid(
    state: &GaussianState,
    measured: usize,
    theta: f64,
    alpha: f64,
    delta: f64,
) -> Moments {
    let j = RotatedJoint::new(state, measured, theta);
    let n = 64;
    let h = 2.0 * delta / n as f64;
    let nodes: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (alpha - delta + i as f64 * h, w * h / 3.0)
        })
        .collect();
    grid_moments(&j, &nodes)
}

fn grid_moments(j: &RotatedJoint, u_nodes: &[(f64, f64)]) -> Moments {
    let lambda_min = j.cov.symmetric_eigen().eigenvalues.min();
    let h = lambda_min.sqrt() / 1.25;
    let sigma_u = j.cov[(0, 0)].sqrt();
    let u_far = u_nodes
        .iter()
        .map(|(u, _)| (u - j.mean[0]).abs())
        .fold(0.0, f64::max);
    let reach = 10.0 + u_far / sigma_u;
    let xs = trapezoid_axis(j.mean[2], reach * j.cov[(2, 2)].sqrt(), h);
    let ps = trapezoid_axis(j.mean[3], reach * j.cov[(3, 3)].sqrt(), h);
    let pvv = j.precision[(1, 1)];
    let v_std = 1.0 / pvv.sqrt();

    // sums of w, w x, w p, w x², w p², w x p
    let sums = xs
        .par_iter()
        .map(|&x| {
            let mut acc = [0.0f64; 6];
            for &p in &ps {
                let mut w = 0.0;
                for &(u, wu) in u_nodes {
                    // the v-slice is Gaussian; centre the 1-D grid on its peak
                    let d = Vector4::new(u, 0.0, x, p) - j.mean;
                    let off: f64 = (0..4).filter(|&k| k != 1).map(|k| j.precision[(1, k)] * d[k]).sum();
                    let v0 = j.mean[1] - off / pvv;
                    let mut inner = 0.0;
                    for k in -40..=40 {
                        let v = v0 + k as f64 * 0.25 * v_std;
                        inner += j.log_density(&Vector4::new(u, v, x, p)).exp();
                    }
                    w += wu * inner * 0.25 * v_std;
                }
                acc[0] += w;
                acc[1] += w * x;
                acc[2] += w * p;
                acc[3] += w * x * x;
                acc[4] += w * p * p;
                acc[5] += w * x * p;
            }
            acc
        })
        .reduce(
            || [0.0; 6],
            |mut a, b| {
                for k in 0..6 {
                    a[k] += b[k];
                }
                a
            },
        );
    let z = sums[0];
    let mx = sums[1] / z;
    let mp = sums[2] / z;
    Moments {
        mean: [mx, mp],
        cov: [
            [sums[3] / z - mx * mx, sums[5] / z - mx * mp],
            [sums[5] / z - mx * mp, sums[4] / z - mp * mp],
        ],
    }
}

/// Wigner function of the `N`-mode GHZ-like state as written in phase-space
/// form, with interleaved coordinates `(x_1, p_1, …, x_N, p_N)`.
pub fn ghz_wigner(n: usize, r: f64, z: &[f64]) -> f64 {
    let nf = n as f64;
    let (mut sx, mut sp, mut dx, mut dp) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        sx += z[2 * i];
        sp += z[2 * i + 1];
        for k in 0..n {
            dx += (z[2 * i] - z[2 * k]).powi(2);
            dp += (z[2 * i + 1] - z[2 * k + 1]).powi(2);
        }
    }
    let e = (2.0 * r).exp();
    let exponent = -(1.0 / e) * (sx * sx / nf + dp / (2.0 * nf)) - e * (sp * sp / nf + dx / (2.0 * nf));
    exponent.exp() / PI.powi(n as i32)
}

/// `∫ f` over `R^d` for an integrand whose logarithm is quadratic, by the
/// trapezoid rule on a grid aligned with the integrand's own principal axes
/// (found by finite differences of `ln f`), step 0.6 standard deviations, ±7.8σ.
pub fn integrate_gaussian_like(dim: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let logf = |z: &[f64]| f(z).ln();
    let zero = vec![0.0; dim];
    let f0 = logf(&zero);
    let unit = |i: usize, s: f64| {
        let mut z = vec![0.0; dim];
        z[i] = s;
        z
    };
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let fp = logf(&unit(i, 1.0));
        let fm = logf(&unit(i, -1.0));
        grad[i] = 0.5 * (fp - fm);
        hess[(i, i)] = -(fp - 2.0 * f0 + fm);
        for k in 0..i {
            let mut z = unit(i, 1.0);
            z[k] = 1.0;
            let fpp = logf(&z);
            z[k] = -1.0;
            let fpm = logf(&z);
            z[i] = -1.0;
            let fmm = logf(&z);
            z[k] = 1.0;
            let fmp = logf(&z);
            hess[(i, k)] = -0.25 * (fpp - fpm - fmp + fmm);
            hess[(k, i)] = hess[(i, k)];
        }
    }
    let center = hess.clone().try_inverse().expect("integrable") * &grad;
    let eig = hess.symmetric_eigen();
    let axes: Vec<DVector<f64>> = (0..dim)
        .map(|i| eig.eigenvectors.column(i) / eig.eigenvalues[i].sqrt())
        .collect();
    let jac: f64 = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).product();
    let h = 0.6;
    let ticks: Vec<f64> = (-13..=13).map(|k| k as f64 * h).collect();
    let total = ticks.len().pow(dim as u32);
    let sum: f64 = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut z = center.clone();
            for a in &axes {
                let t = ticks[idx % ticks.len()];
                idx /= ticks.len();
                z += a * t;
            }
            f(z.as_slice())
        })
        .sum();
    sum * jac * h.powi(dim as i32)
}
