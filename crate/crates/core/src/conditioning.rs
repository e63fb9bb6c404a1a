//! Remote states conditioned on homodyne outcomes at another station.
//!
//! Measuring `x_θ = cos θ x + sin θ p` on one mode and keeping outcome `α` is
//! Gaussian conditioning on a scalar linear functional. The measured mode is
//! then traced out, which for Gaussian states means dropping its rows.
//! A finite acceptance window `[α − δ, α + δ]` turns the remote state into a
//! continuous mixture of those conditionals, summarized here by its exact
//! first and second moments and evaluable pointwise through [`WindowedConditional::wigner_at`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, SqueezingParameter};
use crate::numerics::{normal_interval_mass, normal_pdf, truncated_normal, GaussLegendre};

/// Windows whose probability mass falls below this are rejected.
pub const MIN_WINDOW_MASS: f64 = 1e-300;

/// One homodyne measurement: which mode, which quadrature, kept outcome and
/// acceptance half-width (`0` is an ideal projection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneProjection {
    pub mode: usize,
    pub theta: f64,
    pub alpha: f64,
    pub half_width: f64,
}

impl HomodyneProjection {
    pub fn exact(mode: usize, theta: f64, alpha: f64) -> Self {
        Self {
            mode,
            theta,
            alpha,
            half_width: 0.0,
        }
    }

    pub fn windowed(mode: usize, theta: f64, alpha: f64, half_width: f64) -> Self {
        Self {
            mode,
            theta,
            alpha,
            half_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() || !self.alpha.is_finite() {
            return Err(Error::invalid("projection angle and value must be finite"));
        }
        if !(self.half_width >= 0.0) {
            return Err(Error::invalid(format!(
                "half-width must be non-negative, got {}",
                self.half_width
            )));
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        self.half_width == 0.0
    }

    pub fn window(&self) -> (f64, f64) {
        (self.alpha - self.half_width, self.alpha + self.half_width)
    }
}

/// Linear-Gaussian split of a state into the measured quadrature and the rest.
#[derive(Debug, Clone)]
struct Regression {
    outcome_mean: f64,
    outcome_var: f64,
    rest_mean: DVector<f64>,
    /// `Σ_Rm / Σ_mm`: shift of the remaining mean per unit of outcome.
    response: DVector<f64>,
    /// Schur complement `Σ_RR − Σ_Rm Σ_mR / Σ_mm`.
    cond_cov: DMatrix<f64>,
}

impl Regression {
    fn new(state: &GaussianState, proj: &HomodyneProjection) -> Result<Self> {
        proj.validate()?;
        let n = state.n_modes();
        if n < 2 {
            return Err(Error::invalid(
                "conditioning needs at least two modes (one measured, one kept)",
            ));
        }
        if proj.mode >= n {
            return Err(Error::invalid(format!(
                "projection on mode {} of a {n}-mode state",
                proj.mode
            )));
        }
        let (s, c) = proj.theta.sin_cos();
        let mut g = DVector::zeros(2 * n);
        g[2 * proj.mode] = c;
        g[2 * proj.mode + 1] = s;

        let cov = state.cov();
        let cross_full = cov * &g;
        let outcome_var = g.dot(&cross_full);
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        if !(outcome_var > 1e-15 * scale) {
            return Err(Error::degenerate(format!(
                "measured quadrature variance is {outcome_var:e}"
            )));
        }
        let outcome_mean = g.dot(state.mean());

        let keep: Vec<usize> = (0..2 * n)
            .filter(|&i| i / 2 != proj.mode)
            .collect();
        let k = keep.len();
        let rest_mean = DVector::from_iterator(k, keep.iter().map(|&i| state.mean()[i]));
        let cross = DVector::from_iterator(k, keep.iter().map(|&i| cross_full[i]));
        let response = &cross / outcome_var;
        let cond_cov = DMatrix::from_fn(k, k, |a, b| {
            cov[(keep[a], keep[b])] - cross[a] * cross[b] / outcome_var
        });
        Ok(Self {
            outcome_mean,
            outcome_var,
            rest_mean,
            response,
            cond_cov,
        })
    }

    fn mean_given(&self, outcome: f64) -> DVector<f64> {
        &self.rest_mean + &self.response * (outcome - self.outcome_mean)
    }

    fn outcome_std(&self) -> f64 {
        self.outcome_var.sqrt()
    }
}

/// Remote state after an ideal projection, plus the probability density of the kept outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactConditional {
    pub state: GaussianState,
    pub outcome_density: f64,
}

/// Conditions on the ideal projection `x_θ = α` of `proj.mode` and traces that mode out.
pub fn condition_exact(state: &GaussianState, proj: &HomodyneProjection) -> Result<ExactConditional> {
    if !proj.is_exact() {
        return Err(Error::invalid(
            "condition_exact takes an ideal projection (half-width 0); use condition_windowed",
        ));
    }
    let reg = Regression::new(state, proj)?;
    let mean = reg.mean_given(proj.alpha);
    Ok(ExactConditional {
        state: GaussianState::from_parts(mean, reg.cond_cov.clone()),
        outcome_density: normal_pdf(proj.alpha, reg.outcome_mean, reg.outcome_std()),
    })
}

/// Acceptance probability of a projection, or the outcome density for an ideal one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceptance {
    Probability(f64),
    /// Ideal projection: zero measure, only a density is meaningful.
    DensityOnly { outcome_density: f64 },
}

impl Acceptance {
    /// Probability, `0` for an ideal projection.
    pub fn probability(&self) -> f64 {
        match *self {
            Acceptance::Probability(p) => p,
            Acceptance::DensityOnly { .. } => 0.0,
        }
    }

    pub fn is_density_only(&self) -> bool {
        matches!(self, Acceptance::DensityOnly { .. })
    }
}

/// Mass of the acceptance window under the marginal of the measured quadrature.
pub fn success_probability(state: &GaussianState, proj: &HomodyneProjection) -> Result<Acceptance> {
    let reg = Regression::new(state, proj)?;
    if proj.is_exact() {
        return Ok(Acceptance::DensityOnly {
            outcome_density: normal_pdf(proj.alpha, reg.outcome_mean, reg.outcome_std()),
        });
    }
    let (lo, hi) = proj.window();
    Ok(Acceptance::Probability(normal_interval_mass(
        reg.outcome_mean,
        reg.outcome_std(),
        lo,
        hi,
    )))
}

/// Post-selected remote state for a finite acceptance window.
#[derive(Debug, Clone)]
pub struct WindowedConditional {
    moments: GaussianState,
    success_probability: f64,
    window: HomodyneProjection,
    response: DVector<f64>,
    center: GaussianState,
    outcome_mean: f64,
    outcome_std: f64,
    truncated_mean: f64,
    truncated_var: f64,
}

/// Conditions on `x_θ ∈ [α − δ, α + δ]` with `δ > 0`.
pub fn condition_windowed(
    state: &GaussianState,
    proj: &HomodyneProjection,
) -> Result<WindowedConditional> {
    if !(proj.half_width > 0.0) {
        return Err(Error::invalid(
            "condition_windowed needs a positive half-width; use condition_exact for ideal projections",
        ));
    }
    let reg = Regression::new(state, proj)?;
    let (lo, hi) = proj.window();
    let std = reg.outcome_std();
    let trunc = truncated_normal(reg.outcome_mean, std, lo, hi);
    if !(trunc.mass >= MIN_WINDOW_MASS) {
        return Err(Error::Underflow {
            lo,
            hi,
            mass: trunc.mass,
            mean: reg.outcome_mean,
            std,
        });
    }
    let center_mean = reg.mean_given(proj.alpha);
    let mean = &center_mean + &reg.response * (trunc.mean - proj.alpha);
    let cov = &reg.cond_cov + &reg.response * reg.response.transpose() * trunc.variance;
    Ok(WindowedConditional {
        moments: GaussianState::from_parts(mean, cov),
        success_probability: trunc.mass,
        window: *proj,
        response: reg.response,
        center: GaussianState::from_parts(center_mean, reg.cond_cov),
        outcome_mean: reg.outcome_mean,
        outcome_std: std,
        truncated_mean: trunc.mean,
        truncated_var: trunc.variance,
    })
}

impl WindowedConditional {
    /// Exact mean and covariance of the post-selected mixture.
    pub fn moments(&self) -> &GaussianState {
        &self.moments
    }

    pub fn success_probability(&self) -> f64 {
        self.success_probability
    }

    pub fn window(&self) -> &HomodyneProjection {
        &self.window
    }

    /// Shift of the remaining modes' mean per unit of measured outcome.
    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    /// The ideal-projection conditional at the window center `α`.
    pub fn center(&self) -> &GaussianState {
        &self.center
    }

    /// Mean and standard deviation of the measured quadrature before selection.
    pub fn outcome_distribution(&self) -> (f64, f64) {
        (self.outcome_mean, self.outcome_std)
    }

    /// Mean and variance of the kept outcomes.
    pub fn truncated_outcome(&self) -> (f64, f64) {
        (self.truncated_mean, self.truncated_var)
    }

    pub fn n_modes(&self) -> usize {
        self.moments.n_modes()
    }

    /// Integration range in outcome space: the window clipped to ±12σ of the marginal.
    pub fn outcome_range(&self) -> (f64, f64) {
        let (lo, hi) = self.window.window();
        let reach = 12.0 * self.outcome_std;
        (
            lo.max(self.outcome_mean - reach),
            hi.min(self.outcome_mean + reach),
        )
    }

    /// Gaussian conditional for a particular kept outcome.
    pub fn conditional_at(&self, outcome: f64) -> GaussianState {
        let mean = self.center.mean() + &self.response * (outcome - self.window.alpha);
        GaussianState::from_parts(mean, self.center.cov().clone())
    }

    /// The mixture restricted to a subset of the remaining modes.
    pub fn marginal(&self, modes: &[usize]) -> Result<WindowedConditional> {
        let moments = self.moments.marginal(modes)?;
        let center = self.center.marginal(modes)?;
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let response = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.response[i]));
        Ok(WindowedConditional {
            moments,
            center,
            response,
            ..self.clone()
        })
    }

    /// Wigner function of the post-selected mixture,
    /// `(1/P) ∫_window f(m) W_m(ξ) dm`, by composite Gauss–Legendre quadrature in `m`.
    pub fn wigner_at(&self, point: &[f64]) -> Result<f64> {
        if point.len() != 2 * self.n_modes() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, state has {}",
                point.len(),
                2 * self.n_modes()
            )));
        }
        let chol = self
            .center
            .cov()
            .clone()
            .cholesky()
            .ok_or_else(|| Error::degenerate("conditional covariance is singular"))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let norm = -0.5 * log_det - self.n_modes() as f64 * (2.0 * std::f64::consts::PI).ln();
        let d0 = DVector::from_column_slice(point) - self.center.mean();
        let sk = chol.solve(&self.response);
        let sd = chol.solve(&d0);
        // exponent of W_m as a quadratic in u = m − α
        let (aa, bb, cc) = (self.response.dot(&sk), self.response.dot(&sd), d0.dot(&sd));

        let (lo, hi) = self.outcome_range();
        let kernel_width = if aa > 0.0 { 1.0 / aa.sqrt() } else { f64::INFINITY };
        let scale = self.outcome_std.min(kernel_width);
        let panels = (((hi - lo) / (0.5 * scale)).ceil() as usize).clamp(1, 2000);
        let rule = GaussLegendre::new(16);
        let alpha = self.window.alpha;
        let integral = rule.integrate(lo, hi, panels, |m| {
            let u = m - alpha;
            let q = cc - 2.0 * bb * u + aa * u * u;
            normal_pdf(m, self.outcome_mean, self.outcome_std) * (norm - 0.5 * q).exp()
        });
        Ok(integral / self.success_probability)
    }
}

/// Result of a chain of ideal projections.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome {
    pub state: GaussianState,
    /// Product of the per-step outcome densities.
    pub joint_density: f64,
    /// `labels[i]` is the original index of remaining mode `i`.
    pub labels: Vec<usize>,
}

/// Applies ideal projections in order. Modes are addressed by their original
/// indices; re-indexing after each step is handled internally.
pub fn condition_sequence(
    state: &GaussianState,
    projections: &[HomodyneProjection],
) -> Result<SequenceOutcome> {
    let mut labels: Vec<usize> = (0..state.n_modes()).collect();
    for (k, p) in projections.iter().enumerate() {
        if !p.is_exact() {
            return Err(Error::invalid(format!(
                "projection {k} has a finite window; sequences take ideal projections only"
            )));
        }
        if p.mode >= state.n_modes() {
            return Err(Error::invalid(format!("projection {k} addresses mode {}", p.mode)));
        }
        if projections[..k].iter().any(|q| q.mode == p.mode) {
            return Err(Error::invalid(format!("mode {} projected twice", p.mode)));
        }
    }
    if projections.len() >= state.n_modes() {
        return Err(Error::invalid("at least one mode must remain unmeasured"));
    }
    let mut current = state.clone();
    let mut joint_density = 1.0;
    for p in projections {
        let local = labels
            .iter()
            .position(|&l| l == p.mode)
            .expect("validated above");
        let step = condition_exact(&current, &HomodyneProjection { mode: local, ..*p })?;
        joint_density *= step.outcome_density;
        current = step.state;
        labels.remove(local);
    }
    Ok(SequenceOutcome {
        state: current,
        joint_density,
        labels,
    })
}

/// Remote displacement `α tanh(2r)` after projecting `x_A = α` on a pure EPR pair.
pub fn predicted_displacement(r: SqueezingParameter, alpha: f64) -> f64 {
    alpha * (2.0 * r.value()).tanh()
}

/// Squeezing parameter `ln(cosh 2r)/2` of the remote state after an ideal projection.
pub fn predicted_conditional_squeezing(r: SqueezingParameter) -> SqueezingParameter {
    SqueezingParameter::new(0.5 * (2.0 * r.value()).cosh().ln())
        .expect("ln cosh is non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{epr_state, ghz_like, squeezing_db, tmsv, vacuum, EprParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ten_db() -> SqueezingParameter {
        SqueezingParameter::new(1.1513).unwrap()
    }

    fn lossy_epr(eta: f64) -> GaussianState {
        epr_state(&EprParams::new(0.24, 1.3, eta, eta).unwrap()).unwrap()
    }

    #[test]
    fn phase_projection_gives_phase_squeezing() {
        let r = ten_db();
        let out = condition_exact(&tmsv(r), &HomodyneProjection::exact(0, FRAC_PI_2, 0.0)).unwrap();
        let v = out.state.cov();
        let ch = (2.0 * r.value()).cosh();
        assert_abs_diff_eq!(v[(1, 1)], 1.0 / (2.0 * ch), epsilon = 1e-12);
        assert_abs_diff_eq!(v[(0, 0)], ch / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[(1, 1)], 0.0990, epsilon = 1e-4);
        let db = squeezing_db(v[(1, 1)]).unwrap();
        assert_abs_diff_eq!(db, -7.03, epsilon = 0.01);
        assert!((db - -7.1).abs() < 0.1);
    }

    #[test]
    fn amplitude_projection_matches_closed_form() {
        let r = ten_db();
        for alpha in [-1.0, 0.0, 0.4, 1.0] {
            let out = condition_exact(&tmsv(r), &HomodyneProjection::exact(0, 0.0, alpha)).unwrap();
            let ch = (2.0 * r.value()).cosh();
            assert_abs_diff_eq!(out.state.cov()[(0, 0)], 1.0 / (2.0 * ch), epsilon = 1e-12);
            assert_abs_diff_eq!(out.state.cov()[(1, 1)], ch / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(out.state.cov()[(0, 1)], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(out.state.mean()[0], alpha * (2.0 * r.value()).tanh(), epsilon = 1e-12);
            assert_abs_diff_eq!(out.state.mean()[1], 0.0, epsilon = 1e-15);
        }
        let out = condition_exact(&tmsv(r), &HomodyneProjection::exact(0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(out.state.mean()[0], 0.980, epsilon = 1e-3);
    }

    #[test]
    fn product_state_is_unchanged() {
        let v = vacuum(2).unwrap();
        for (theta, alpha) in [(0.0, 0.0), (1.0, 2.5), (-2.0, -0.3)] {
            let out = condition_exact(&v, &HomodyneProjection::exact(1, theta, alpha)).unwrap();
            assert_eq!(out.state, vacuum(1).unwrap());
        }
    }

    #[test]
    fn mixed_epr_schur_value() {
        let out =
            condition_exact(&lossy_epr(1.0), &HomodyneProjection::exact(0, FRAC_PI_2, 0.0)).unwrap();
        assert_abs_diff_eq!(out.state.cov()[(1, 1)], 0.77 - 0.53 * 0.53 / 0.77, epsilon = 1e-12);
    }

    #[test]
    fn exact_error_paths() {
        let one = vacuum(1).unwrap();
        assert!(matches!(
            condition_exact(&one, &HomodyneProjection::exact(0, 0.0, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
        let two = vacuum(2).unwrap();
        assert!(condition_exact(&two, &HomodyneProjection::exact(2, 0.0, 0.0)).is_err());
        assert!(condition_exact(&two, &HomodyneProjection::windowed(0, 0.0, 0.0, 0.1)).is_err());
        assert!(condition_exact(&two, &HomodyneProjection::exact(0, f64::NAN, 0.0)).is_err());
        let degenerate = GaussianState::from_parts(DVector::zeros(4), DMatrix::zeros(4, 4));
        assert!(matches!(
            condition_exact(&degenerate, &HomodyneProjection::exact(0, 0.0, 0.0)),
            Err(Error::NumericalDegeneracy(_))
        ));
    }

    #[test]
    fn outcome_density_is_marginal_pdf() {
        let s = lossy_epr(0.9);
        let out = condition_exact(&s, &HomodyneProjection::exact(0, 0.0, 0.3)).unwrap();
        let var: f64 = 0.743;
        let expected = (-(0.3f64.powi(2)) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
        assert_abs_diff_eq!(out.outcome_density, expected, epsilon = 1e-14);
    }

    #[test]
    fn window_limits() {
        let s = lossy_epr(0.9);
        let exact = condition_exact(&s, &HomodyneProjection::exact(0, 0.0, 0.2)).unwrap();
        let narrow = condition_windowed(&s, &HomodyneProjection::windowed(0, 0.0, 0.2, 1e-4)).unwrap();
        assert_abs_diff_eq!(narrow.moments().cov(), exact.state.cov(), epsilon = 1e-6);
        assert_abs_diff_eq!(narrow.moments().mean(), exact.state.mean(), epsilon = 1e-6);

        let wide = condition_windowed(&s, &HomodyneProjection::windowed(0, 0.0, 0.2, 20.0)).unwrap();
        let bob = s.marginal(&[1]).unwrap();
        assert_abs_diff_eq!(wide.moments().cov(), bob.cov(), epsilon = 1e-6);
        assert_abs_diff_eq!(wide.moments().mean(), bob.mean(), epsilon = 1e-6);
        assert!(wide.success_probability() >= 1.0 - 1e-12);
    }

    #[test]
    fn lossy_epr_success_probability() {
        let s = lossy_epr(0.9);
        let proj = HomodyneProjection::windowed(0, 0.0, 0.0, 0.1);
        let w = condition_windowed(&s, &proj).unwrap();
        let p = success_probability(&s, &proj).unwrap().probability();
        assert!((p - 0.092).abs() < 0.02);
        assert!((p - w.success_probability()).abs() < 1e-12);
        // 1-D oracle: erf(δ / (σ√2)) with σ² = 0.743
        let oracle = libm::erf(0.1 / (0.743f64.sqrt() * 2f64.sqrt()));
        assert_abs_diff_eq!(p, oracle, epsilon = 1e-14);
    }

    #[test]
    fn success_probability_cases() {
        let s = lossy_epr(0.9);
        let sigma = 0.743f64.sqrt();
        let p = success_probability(&s, &HomodyneProjection::windowed(0, 0.0, 0.0, sigma)).unwrap();
        assert_abs_diff_eq!(p.probability(), 0.682_689_492_137_086, epsilon = 1e-12);
        let d = success_probability(&s, &HomodyneProjection::exact(0, 0.0, 0.0)).unwrap();
        assert!(d.is_density_only());
        assert_eq!(d.probability(), 0.0);
        let mut last = 1.0;
        for alpha in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let p = success_probability(&s, &HomodyneProjection::windowed(0, 0.0, alpha, 0.1))
                .unwrap()
                .probability();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn underflow_is_reported() {
        let s = lossy_epr(0.9);
        let err = condition_windowed(&s, &HomodyneProjection::windowed(0, 0.0, 60.0, 0.1)).unwrap_err();
        assert!(matches!(err, Error::Underflow { .. }), "{err:?}");
        assert!(err.to_string().contains("mass"));
    }

    #[test]
    fn windowed_covariance_dominates_exact() {
        let s = lossy_epr(0.9).rotate(1, 0.3).unwrap();
        for delta in [0.01, 0.1, 0.5, 2.0] {
            let w = condition_windowed(&s, &HomodyneProjection::windowed(0, 0.4, 0.1, delta)).unwrap();
            let diff = w.moments().cov() - w.center().cov();
            let eig = diff.clone().symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&l| l > -1e-9));
            assert!(eig.iter().filter(|&&l| l.abs() > 1e-9).count() <= 1);
        }
    }

    #[test]
    fn squeezing_degrades_with_width() {
        let s = lossy_epr(0.9);
        let mut last_var = 0.0;
        let mut last_p = 0.0;
        for k in 1..=40 {
            let delta = 0.05 * k as f64;
            let w = condition_windowed(&s, &HomodyneProjection::windowed(0, 0.0, 0.0, delta)).unwrap();
            let v = w.moments().cov()[(0, 0)];
            assert!(v >= last_var);
            assert!(w.success_probability() > last_p);
            last_var = v;
            last_p = w.success_probability();
        }
    }

    #[test]
    fn rotation_reduces_to_amplitude_measurement() {
        let s = lossy_epr(0.9).displace(0, 0.3, -0.4).unwrap();
        for k in 0..16 {
            let theta = -PI + k as f64 * 0.41;
            let direct = condition_exact(&s, &HomodyneProjection::exact(0, theta, 0.25)).unwrap();
            let via = condition_exact(
                &s.rotate(0, -theta).unwrap(),
                &HomodyneProjection::exact(0, 0.0, 0.25),
            )
            .unwrap();
            assert_abs_diff_eq!(direct.state.cov(), via.state.cov(), epsilon = 1e-9);
            assert_abs_diff_eq!(direct.state.mean(), via.state.mean(), epsilon = 1e-9);
        }
    }

    #[test]
    fn loss_on_bob_is_affine() {
        let r = SqueezingParameter::new(0.9).unwrap();
        let var = |eta_b: f64| {
            let s = epr_state(&EprParams {
                eta_a: 0.9,
                eta_b,
                ..EprParams::pure(r)
            })
            .unwrap();
            condition_exact(&s, &HomodyneProjection::exact(0, 0.0, 0.0))
                .unwrap()
                .state
                .cov()[(0, 0)]
        };
        let (v0, v1) = (var(0.0), var(1.0));
        assert_abs_diff_eq!(v0, 0.5, epsilon = 1e-12);
        assert!(v1 < 0.5);
        for k in 1..20 {
            let eta = k as f64 / 20.0;
            assert_abs_diff_eq!(var(eta), eta * v1 + (1.0 - eta) * 0.5, epsilon = 1e-12);
            assert!(var(eta) < 0.5);
        }
    }

    #[test]
    fn ghz_fan_out() {
        let r = SqueezingParameter::new(0.8).unwrap();
        for n in 2..=6 {
            let g = ghz_like(n, r).unwrap();
            let out = condition_exact(&g, &HomodyneProjection::exact(0, 0.0, 0.0)).unwrap();
            let first = out.state.cov()[(0, 0)];
            assert!(first < 0.5);
            for k in 0..n - 1 {
                assert_abs_diff_eq!(out.state.cov()[(2 * k, 2 * k)], first, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ghz_three_mode_closed_forms() {
        let r = ten_db();
        let (e2, e4) = ((2.0 * r.value()).exp(), (4.0 * r.value()).exp());
        let g = ghz_like(3, r).unwrap();
        let out = condition_exact(&g, &HomodyneProjection::exact(0, 0.0, 0.0)).unwrap();
        for m in 0..2 {
            let var_x = out.state.cov()[(2 * m, 2 * m)];
            let var_p = out.state.cov()[(2 * m + 1, 2 * m + 1)];
            assert_abs_diff_eq!(1.0 / (2.0 * var_x), e2 * (2.0 + e4) / (1.0 + 2.0 * e4), epsilon = 1e-9);
            assert_abs_diff_eq!(1.0 / (2.0 * var_p), 3.0 * e2 / (1.0 + 2.0 * e4), epsilon = 1e-9);
        }
        let seq = condition_sequence(
            &g,
            &[
                HomodyneProjection::exact(0, FRAC_PI_2, 0.0),
                HomodyneProjection::exact(1, FRAC_PI_2, 0.0),
            ],
        )
        .unwrap();
        assert_eq!(seq.labels, vec![2]);
        let vp = seq.state.cov()[(1, 1)];
        assert_abs_diff_eq!(1.0 / (2.0 * vp), (2.0 + e4) / (3.0 * e2), epsilon = 1e-9);
        assert_abs_diff_eq!(squeezing_db(vp).unwrap(), -5.3, epsilon = 0.05);
        assert_abs_diff_eq!(seq.state.purity(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sequence_order_independence() {
        let g = ghz_like(4, SqueezingParameter::new(0.6).unwrap())
            .unwrap()
            .apply_loss(2, 0.7)
            .unwrap();
        let a = HomodyneProjection::exact(0, 0.3, 0.2);
        let b = HomodyneProjection::exact(2, 1.2, -0.5);
        let ab = condition_sequence(&g, &[a, b]).unwrap();
        let ba = condition_sequence(&g, &[b, a]).unwrap();
        assert_eq!(ab.labels, vec![1, 3]);
        assert_eq!(ba.labels, vec![1, 3]);
        assert_abs_diff_eq!(ab.state.cov(), ba.state.cov(), epsilon = 1e-9);
        assert_abs_diff_eq!(ab.state.mean(), ba.state.mean(), epsilon = 1e-9);
        assert!((ab.joint_density - ba.joint_density).abs() < 1e-9 * ab.joint_density);
    }

    #[test]
    fn sequence_errors() {
        let g = ghz_like(3, SqueezingParameter::new(0.6).unwrap()).unwrap();
        let a = HomodyneProjection::exact(0, 0.0, 0.0);
        assert!(condition_sequence(&g, &[a, a]).is_err());
        assert!(condition_sequence(&g, &[HomodyneProjection::windowed(0, 0.0, 0.0, 0.1)]).is_err());
        assert!(condition_sequence(
            &g,
            &[a, HomodyneProjection::exact(1, 0.0, 0.0), HomodyneProjection::exact(2, 0.0, 0.0)]
        )
        .is_err());
        let empty = condition_sequence(&g, &[]).unwrap();
        assert_eq!(empty.state, g);
        assert_eq!(empty.joint_density, 1.0);
    }

    #[test]
    fn predictions() {
        let r0 = SqueezingParameter::new(0.0).unwrap();
        assert_eq!(predicted_displacement(r0, 0.7), 0.0);
        assert_eq!(predicted_conditional_squeezing(r0).value(), 0.0);
        let big = SqueezingParameter::new(20.0).unwrap();
        assert_abs_diff_eq!(predicted_displacement(big, 0.7), 0.7, epsilon = 1e-15);
        let r = ten_db();
        assert_abs_diff_eq!(predicted_displacement(r, 1.0), 0.980, epsilon = 1e-3);
        let s = predicted_conditional_squeezing(r);
        assert_abs_diff_eq!(
            s.squeezed_variance(),
            1.0 / (2.0 * (2.0 * r.value()).cosh()),
            epsilon = 1e-12
        );
        let mut last = 0.0;
        for k in 1..200 {
            let r = SqueezingParameter::new(k as f64 * 0.02).unwrap();
            let s = predicted_conditional_squeezing(r).value();
            assert!(s > last && s < r.value());
            last = s;
        }
    }

    #[test]
    fn mixture_wigner_normalizes_and_matches_moments() {
        let s = lossy_epr(0.9);
        let w = condition_windowed(&s, &HomodyneProjection::windowed(0, 0.0, 0.3, 0.5)).unwrap();
        let rule = GaussLegendre::new(24);
        let m = w.moments();
        let (sx, sp) = (m.cov()[(0, 0)].sqrt(), m.cov()[(1, 1)].sqrt());
        let (mx, mp) = (m.mean()[0], m.mean()[1]);
        let xs = rule.composite_points(mx - 10.0 * sx, mx + 10.0 * sx, 12);
        let ps = rule.composite_points(mp - 10.0 * sp, mp + 10.0 * sp, 12);
        let (mut z, mut ex, mut exx) = (0.0, 0.0, 0.0);
        for &(x, wx) in &xs {
            for &(p, wp) in &ps {
                let f = wx * wp * w.wigner_at(&[x, p]).unwrap();
                z += f;
                ex += f * x;
                exx += f * x * x;
            }
        }
        assert_abs_diff_eq!(z, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ex, mx, epsilon = 1e-9);
        assert_abs_diff_eq!(exx - ex * ex, m.cov()[(0, 0)], epsilon = 1e-9);
    }
}
