//! Fidelity against pure displaced squeezed targets and best-fit squeezing.
//!
//! Fidelity with a pure target is `F = 2π ∫∫ W_target W_state dx dp`, which is
//! the overlap `⟨ψ|ρ|ψ⟩` in the vacuum-variance-1/2 convention.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};

use crate::conditioning::WindowedConditional;
use crate::error::{Error, Result};
use crate::gaussian::{squeezing_db_unchecked, GaussianState, VACUUM_VARIANCE};
use crate::numerics::{normal_interval_mass, GaussLegendre};

/// Pure displaced squeezed state: squeezing `r` along the axis at angle `phi`
/// (0 = amplitude-squeezed, π/2 = phase-squeezed), centered at `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedTarget {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub phi: f64,
}

impl SqueezedTarget {
    pub fn new(r: f64, a: f64, b: f64, phi: f64) -> Result<Self> {
        if ![r, a, b, phi].iter().all(|v| v.is_finite()) || r < 0.0 {
            return Err(Error::invalid(format!(
                "target needs finite fields and r >= 0, got r={r}, a={a}, b={b}, phi={phi}"
            )));
        }
        Ok(Self { r, a, b, phi })
    }

    pub fn amplitude(r: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(r, a, b, 0.0)
    }

    pub fn phase(r: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(r, a, b, FRAC_PI_2)
    }

    pub fn mean(&self) -> Vector2<f64> {
        Vector2::new(self.a, self.b)
    }

    pub fn cov(&self) -> Matrix2<f64> {
        let (s, c) = self.phi.sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        let d = Matrix2::new(
            (-2.0 * self.r).exp() * VACUUM_VARIANCE,
            0.0,
            0.0,
            (2.0 * self.r).exp() * VACUUM_VARIANCE,
        );
        rot * d * rot.transpose()
    }

    pub fn to_state(&self) -> GaussianState {
        let c = self.cov();
        GaussianState::from_parts(
            DVector::from_vec(vec![self.a, self.b]),
            DMatrix::from_row_slice(2, 2, &[c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]]),
        )
    }

    /// Squeezing of the target's squeezed quadrature in dB (negative for r > 0).
    pub fn squeezing_db(&self) -> f64 {
        squeezing_db_unchecked((-2.0 * self.r).exp() * VACUUM_VARIANCE)
    }

    pub fn wigner_at(&self, x: f64, p: f64) -> f64 {
        gaussian_density(&self.mean(), &self.cov(), x, p)
    }
}

fn gaussian_density(mean: &Vector2<f64>, cov: &Matrix2<f64>, x: f64, p: f64) -> f64 {
    let d = Vector2::new(x, p) - mean;
    let det = cov.determinant();
    let inv = cov.try_inverse().unwrap_or_else(Matrix2::zeros);
    (-0.5 * d.dot(&(inv * d))).exp() / (2.0 * PI * det.sqrt())
}

/// Best pure squeezed target for a state and the fidelity it reaches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedFit {
    pub target: SqueezedTarget,
    pub fidelity: f64,
    pub squeezing_db: f64,
}

/// A single-mode state whose overlap with pure Gaussian targets can be evaluated.
pub trait SingleModeState {
    /// `2π ∫∫ W_target W_self`.
    fn fidelity_with(&self, target: &SqueezedTarget) -> Result<f64>;

    /// First and second moments.
    fn moments(&self) -> Result<(Vector2<f64>, Matrix2<f64>)>;

    /// Pointwise Wigner function.
    fn wigner(&self, x: f64, p: f64) -> Result<f64>;
}

fn single_mode_moments(state: &GaussianState) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    if state.n_modes() != 1 {
        return Err(Error::invalid(format!(
            "fidelity needs a single-mode state, got {} modes",
            state.n_modes()
        )));
    }
    let m = state.mean();
    let c = state.cov();
    Ok((
        Vector2::new(m[0], m[1]),
        Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]),
    ))
}

impl SingleModeState for GaussianState {
    fn fidelity_with(&self, target: &SqueezedTarget) -> Result<f64> {
        let (mean, cov) = single_mode_moments(self)?;
        let s = cov + target.cov();
        let inv = s
            .try_inverse()
            .ok_or_else(|| Error::degenerate("singular overlap covariance"))?;
        let d = mean - target.mean();
        Ok((-0.5 * d.dot(&(inv * d))).exp() / s.determinant().sqrt())
    }

    fn moments(&self) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        single_mode_moments(self)
    }

    fn wigner(&self, x: f64, p: f64) -> Result<f64> {
        self.wigner_at(&[x, p])
    }
}

impl SingleModeState for WindowedConditional {
    /// Every component of the mixture is Gaussian with a common covariance and a
    /// mean linear in the outcome, so the overlap reduces to a 1-D Gaussian
    /// integral over the kept outcomes, done in closed form.
    fn fidelity_with(&self, target: &SqueezedTarget) -> Result<f64> {
        let (center_mean, center_cov) = single_mode_moments(self.center())?;
        let k = Vector2::new(self.response()[0], self.response()[1]);
        let s = center_cov + target.cov();
        let inv = s
            .try_inverse()
            .ok_or_else(|| Error::degenerate("singular overlap covariance"))?;
        let d0 = center_mean - target.mean();
        let a = k.dot(&(inv * k));
        let b = k.dot(&(inv * d0));
        let c = d0.dot(&(inv * d0));

        let alpha = self.window().alpha;
        let (outcome_mean, sigma) = self.outcome_distribution();
        let (lo, hi) = self.outcome_range();
        let shift = outcome_mean - alpha;
        let tau = 1.0 / (sigma * sigma) + a;
        let u_star = (shift / (sigma * sigma) - b) / tau;
        let exponent = shift * shift / (sigma * sigma) + c - tau * u_star * u_star;
        let mass = normal_interval_mass(u_star, 1.0 / tau.sqrt(), lo - alpha, hi - alpha);
        let f = (-0.5 * exponent).exp() * mass
            / (sigma * tau.sqrt() * s.determinant().sqrt())
            / self.success_probability();
        Ok(f)
    }

    fn moments(&self) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        single_mode_moments(self.moments())
    }

    fn wigner(&self, x: f64, p: f64) -> Result<f64> {
        self.wigner_at(&[x, p])
    }
}

/// Fidelity of a single-mode state with a pure squeezed target.
///
/// Gaussian states use the closed-form overlap, post-selected mixtures the
/// exact mixture integral.
pub fn fidelity_pure_target<S: SingleModeState + ?Sized>(
    state: &S,
    target: &SqueezedTarget,
) -> Result<f64> {
    state.fidelity_with(target)
}

/// Accuracy demanded of [`fidelity_by_quadrature`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// Fidelity by 2-D Gauss–Legendre quadrature of `2π W_target W_state`.
///
/// The integration box is ±12 standard deviations of the Gaussian product of
/// the target and the state's moments, taken in that product's principal axes.
/// Panels are doubled until successive estimates agree; failure to reach
/// [`QUADRATURE_TOLERANCE`] is an accuracy error.
pub fn fidelity_by_quadrature<S: SingleModeState + ?Sized>(
    state: &S,
    target: &SqueezedTarget,
) -> Result<f64> {
    let (mean, cov) = state.moments()?;
    let t_inv = target
        .cov()
        .try_inverse()
        .ok_or_else(|| Error::degenerate("singular target covariance"))?;
    let s_inv = cov
        .try_inverse()
        .ok_or_else(|| Error::degenerate("singular state covariance"))?;
    let prod_cov = (t_inv + s_inv)
        .try_inverse()
        .ok_or_else(|| Error::degenerate("singular product covariance"))?;
    let prod_mean = prod_cov * (t_inv * target.mean() + s_inv * mean);
    let eig = SymmetricEigen::new(prod_cov);
    let axes = eig.eigenvectors;
    let half = eig.eigenvalues.map(|l| 12.0 * l.max(0.0).sqrt());

    let rule = GaussLegendre::new(20);
    let estimate = |panels: usize| -> Result<f64> {
        let us = rule.composite_points(-half[0], half[0], panels);
        let vs = rule.composite_points(-half[1], half[1], panels);
        let mut total = 0.0;
        for &(u, wu) in &us {
            for &(v, wv) in &vs {
                let pt = prod_mean + axes.column(0) * u + axes.column(1) * v;
                total += wu * wv * target.wigner_at(pt[0], pt[1]) * state.wigner(pt[0], pt[1])?;
            }
        }
        Ok(2.0 * PI * total)
    };
    let mut panels = 2;
    let mut last = estimate(panels)?;
    let mut err = f64::INFINITY;
    while panels < 64 {
        panels *= 2;
        let next = estimate(panels)?;
        err = (next - last).abs();
        last = next;
        if err < 1e-3 * QUADRATURE_TOLERANCE {
            return Ok(last);
        }
    }
    if err > QUADRATURE_TOLERANCE {
        return Err(Error::Accuracy(format!(
            "fidelity quadrature did not converge (estimated error {err:e})"
        )));
    }
    Ok(last)
}

const MAX_SWEEPS: usize = 200;
const MIN_STEP: f64 = 1e-10;

/// Best-fit pure squeezed target with the squeezing axis restricted to
/// amplitude (`phi = 0`) or phase (`phi = π/2`); both are tried and the better kept.
///
/// Each axis is searched by a derivative-free coordinate search over `(r, a, b)`
/// seeded at the state's moments: `(a, b)` at the mean and `r` from the variance
/// along the squeezing axis. Steps double on success and halve on failure, and the
/// search stops once every step is below `1e-10` or after 200 sweeps. The fidelity
/// only ever increases from the seed.
pub fn estimate_squeezed_fit<S: SingleModeState + ?Sized>(state: &S) -> Result<SqueezedFit> {
    let amp = fit_at_angle(state, 0.0)?;
    let phase = fit_at_angle(state, FRAC_PI_2)?;
    Ok(if phase.fidelity > amp.fidelity { phase } else { amp })
}

/// Coordinate-search fit at a fixed squeezing-axis angle.
pub fn fit_at_angle<S: SingleModeState + ?Sized>(state: &S, phi: f64) -> Result<SqueezedFit> {
    let (mean, cov) = state.moments()?;
    let (s, c) = phi.sin_cos();
    let axis = Vector2::new(c, s);
    let var = axis.dot(&(cov * axis));
    let r0 = (-0.5 * (2.0 * var).ln()).max(0.0);
    search(state, [r0, mean[0], mean[1], phi], 3)
}

/// Fit with the squeezing-axis angle as a free fourth coordinate, seeded at the
/// covariance's minor axis.
pub fn estimate_squeezed_fit_free_angle<S: SingleModeState + ?Sized>(
    state: &S,
) -> Result<SqueezedFit> {
    let (mean, cov) = state.moments()?;
    let eig = SymmetricEigen::new(cov);
    let minor = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let v = eig.eigenvectors.column(minor);
    let phi = v[1].atan2(v[0]);
    let r0 = (-0.5 * (2.0 * eig.eigenvalues[minor]).ln()).max(0.0);
    search(state, [r0, mean[0], mean[1], phi], 4)
}

fn search<S: SingleModeState + ?Sized>(
    state: &S,
    seed: [f64; 4],
    n_coords: usize,
) -> Result<SqueezedFit> {
    let eval = |p: &[f64; 4]| -> Result<f64> {
        let t = SqueezedTarget::new(p[0].max(0.0), p[1], p[2], p[3])?;
        state.fidelity_with(&t)
    };
    let mut x = seed;
    let mut best = eval(&x)?;
    let mut steps = [0.05; 4];
    for _ in 0..MAX_SWEEPS {
        for i in 0..n_coords {
            let mut improved = false;
            for dir in [1.0, -1.0] {
                let mut trial = x;
                trial[i] += dir * steps[i];
                if i == 0 && trial[0] < 0.0 {
                    trial[0] = 0.0;
                }
                let f = eval(&trial)?;
                if f > best {
                    best = f;
                    x = trial;
                    improved = true;
                    break;
                }
            }
            steps[i] = if improved { (steps[i] * 2.0).min(1.0) } else { steps[i] * 0.5 };
        }
        if steps[..n_coords].iter().all(|&s| s < MIN_STEP) {
            break;
        }
    }
    let target = SqueezedTarget::new(x[0].max(0.0), x[1], x[2], x[3])?;
    Ok(SqueezedFit {
        target,
        fidelity: best,
        squeezing_db: target.squeezing_db(),
    })
}
