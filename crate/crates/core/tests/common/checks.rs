//! Library-versus-oracle comparisons, each returning the worst discrepancy seen.

use std::f64::consts::{FRAC_PI_2, PI};

use cv_rsp::conditioning::{condition_exact, condition_sequence, condition_windowed, HomodyneProjection};
use cv_rsp::gaussian::{ghz_like, GaussianState, SqueezingParameter};
use cv_rsp::metrics::{fidelity_by_quadrature, fidelity_pure_target, SingleModeState, SqueezedTarget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{conditional_by_grid, ghz_wigner, integrate_gaussian_like, random_two_mode_state, windowed_by_grid, Moments};

/// Largest moment discrepancy between `condition_exact` and the grid oracle.
pub fn exact_conditioning_worst(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<_> = (0..cases)
        .map(|_| {
            let s = random_two_mode_state(&mut rng, 0.7);
            let mode = rng.random_range(0..2usize);
            let theta = rng.random_range(0.0..PI);
            let alpha = rng.random_range(-1.0..1.0);
            (s, mode, theta, alpha)
        })
        .collect();
    inputs
        .par_iter()
        .map(|(s, mode, theta, alpha)| {
            let lib = condition_exact(s, &HomodyneProjection::exact(*mode, *theta, *alpha))
                .expect("conditioning")
                .state;
            Moments::of(&lib).max_abs_diff(&conditional_by_grid(s, *mode, *theta, *alpha))
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest moment discrepancy between `condition_windowed` and the grid oracle.
pub fn windowed_conditioning_worst(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<_> = (0..cases)
        .map(|_| {
            let s = random_two_mode_state(&mut rng, 0.7);
            let mode = rng.random_range(0..2usize);
            let theta = rng.random_range(0.0..PI);
            let alpha = rng.random_range(-1.0..1.0);
            let delta = rng.random_range(0.02..0.8);
            (s, mode, theta, alpha, delta)
        })
        .collect();
    inputs
        .iter()
        .map(|(s, mode, theta, alpha, delta)| {
            let lib = condition_windowed(s, &HomodyneProjection::windowed(*mode, *theta, *alpha, *delta))
                .expect("conditioning");
            Moments::of(lib.moments()).max_abs_diff(&windowed_by_grid(s, *mode, *theta, *alpha, *delta))
        })
        .fold(0.0, f64::max)
}

fn random_target<R: Rng>(rng: &mut R) -> SqueezedTarget {
    SqueezedTarget::new(
        rng.random_range(0.0..1.2),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.0..PI),
    )
    .expect("valid target")
}

/// Closed-form against quadrature fidelity on random pairs; half the states are
/// Gaussian marginals, half post-selected mixtures.
pub fn fidelity_pairs_worst(pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(Box<dyn SingleModeState + Send + Sync>, SqueezedTarget)> = (0..pairs)
        .map(|k| {
            let s = random_two_mode_state(&mut rng, 0.6);
            let state: Box<dyn SingleModeState + Send + Sync> = if k % 2 == 0 {
                Box::new(s.marginal(&[1]).expect("marginal"))
            } else {
                let proj = HomodyneProjection::windowed(
                    0,
                    rng.random_range(0.0..PI),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(0.05..1.0),
                );
                Box::new(condition_windowed(&s, &proj).expect("window"))
            };
            (state, random_target(&mut rng))
        })
        .collect();
    cases
        .par_iter()
        .map(|(state, t)| {
            let closed = fidelity_pure_target(state.as_ref(), t).expect("closed form");
            let quad = fidelity_by_quadrature(state.as_ref(), t).expect("quadrature");
            (closed - quad).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Closed-form fidelity against an independent trapezoid integral of `2π W_t W_s`.
pub fn fidelity_trapezoid_worst(pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .map(|_| {
            let s = random_two_mode_state(&mut rng, 0.6).marginal(&[0]).expect("marginal");
            let t = random_target(&mut rng);
            let closed = fidelity_pure_target(&s, &t).expect("closed form");
            let grid = 2.0
                * PI
                * integrate_gaussian_like(2, |z| t.wigner_at(z[0], z[1]) * s.wigner_at(z).expect("wigner"));
            (closed - grid).abs()
        })
        .fold(0.0, f64::max)
}

/// Coefficients of `c · exp(−a_x x² − a_p p²)`.
#[derive(Debug, Clone, Copy)]
pub struct WignerCoefficients {
    pub a_x: f64,
    pub a_p: f64,
    pub prefactor: f64,
}

impl WignerCoefficients {
    pub fn of(state: &GaussianState) -> Self {
        let c = state.cov();
        Self {
            a_x: 1.0 / (2.0 * c[(0, 0)]),
            a_p: 1.0 / (2.0 * c[(1, 1)]),
            prefactor: 1.0 / (2.0 * PI * (c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)]).sqrt()),
        }
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        (self.a_x - o.a_x)
            .abs()
            .max((self.a_p - o.a_p).abs())
            .max((self.prefactor - o.prefactor).abs())
    }

    /// Bob and Claire after `x_A = 0` on the three-mode state.
    pub fn ghz_x_projection(r: f64) -> Self {
        let e2 = (2.0 * r).exp();
        let e4 = (4.0 * r).exp();
        Self {
            a_x: e2 * (2.0 + e4) / (1.0 + 2.0 * e4),
            a_p: 3.0 * e2 / (1.0 + 2.0 * e4),
            prefactor: 3f64.sqrt() * e2 * (2.0 + e4).sqrt() / (PI + 2.0 * PI * e4),
        }
    }

    /// Claire after `p_A = p_B = 0`, with the `p_C²` exponent taken negative.
    pub fn ghz_collective_p(r: f64) -> Self {
        let e2 = (2.0 * r).exp();
        let e4 = (4.0 * r).exp();
        Self {
            a_x: 3.0 * e2 / (2.0 + e4),
            a_p: (2.0 + e4) / (3.0 * e2),
            prefactor: 1.0 / PI,
        }
    }
}

/// Coefficients of a reduced Wigner function obtained by integrating the
/// three-mode phase-space formula; `embed(x, p, rest)` builds the full point.
fn coefficients_by_integration(
    rest_dim: usize,
    embed: impl Fn(f64, f64, &[f64]) -> [f64; 6] + Sync,
    r: f64,
) -> WignerCoefficients {
    let w = |x: f64, p: f64| integrate_gaussian_like(rest_dim, |z| ghz_wigner(3, r, &embed(x, p, z)));
    let w0 = w(0.0, 0.0);
    let d = 0.3;
    let a_x = -(w(d, 0.0) / w0).ln() / (d * d);
    let a_p = -(w(0.0, d) / w0).ln() / (d * d);
    let norm = integrate_gaussian_like(rest_dim + 2, |z| ghz_wigner(3, r, &embed(z[0], z[1], &z[2..])));
    WignerCoefficients {
        a_x,
        a_p,
        prefactor: w0 / norm,
    }
}

pub struct GhzCheck {
    pub bob_grid: WignerCoefficients,
    pub claire_grid: WignerCoefficients,
    pub bob_lib: WignerCoefficients,
    pub claire_lib: WignerCoefficients,
    pub closed_form: WignerCoefficients,
}

pub fn ghz_x_projection_check(r: SqueezingParameter) -> GhzCheck {
    let rv = r.value();
    let bob_grid = coefficients_by_integration(3, |x, p, z| [0.0, z[0], x, p, z[1], z[2]], rv);
    let claire_grid = coefficients_by_integration(3, |x, p, z| [0.0, z[0], z[1], z[2], x, p], rv);
    let out = condition_sequence(&ghz_like(3, r).expect("ghz"), &[HomodyneProjection::exact(0, 0.0, 0.0)])
        .expect("conditioning");
    GhzCheck {
        bob_grid,
        claire_grid,
        bob_lib: WignerCoefficients::of(&out.state.marginal(&[0]).expect("bob")),
        claire_lib: WignerCoefficients::of(&out.state.marginal(&[1]).expect("claire")),
        closed_form: WignerCoefficients::ghz_x_projection(rv),
    }
}

pub struct ClaireCheck {
    pub grid: WignerCoefficients,
    pub lib: WignerCoefficients,
    pub closed_form: WignerCoefficients,
    pub state: GaussianState,
}

pub fn ghz_collective_p_check(r: SqueezingParameter) -> ClaireCheck {
    let rv = r.value();
    let grid = coefficients_by_integration(2, |x, p, z| [z[0], 0.0, z[1], 0.0, x, p], rv);
    let out = condition_sequence(
        &ghz_like(3, r).expect("ghz"),
        &[
            HomodyneProjection::exact(0, FRAC_PI_2, 0.0),
            HomodyneProjection::exact(1, FRAC_PI_2, 0.0),
        ],
    )
    .expect("conditioning");
    ClaireCheck {
        grid,
        lib: WignerCoefficients::of(&out.state),
        closed_form: WignerCoefficients::ghz_collective_p(rv),
        state: out.state,
    }
}
