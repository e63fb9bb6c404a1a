//! Multimode Gaussian states in the interleaved `(x1, p1, x2, p2, ...)` ordering.
//!
//! Quadratures are dimensionless with vacuum variance 1/2, so a pure state has
//! `det(cov) = 4^-n` and every symplectic eigenvalue is at least 1/2.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Variance of either vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Slack allowed below 1/2 on the symplectic spectrum.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Mean vector and covariance matrix over `n_modes` optical modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Validating constructor. Rejects asymmetric, non-finite or unphysical moments.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "mean length must be a positive even number, got {dim}"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::invalid(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("mean and covariance must be finite"));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::invalid(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let state = Self::from_parts(mean, cov);
        let nu_min = state
            .symplectic_eigenvalues()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if nu_min < VACUUM_VARIANCE - SYMPLECTIC_TOLERANCE {
            return Err(Error::invalid(format!(
                "covariance violates the uncertainty relation (smallest symplectic eigenvalue {nu_min})"
            )));
        }
        Ok(state)
    }

    /// Builds a state without the physicality check. The covariance is symmetrized.
    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let cov = (&cov + cov.transpose()) * 0.5;
        Self { mean, cov }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            Err(Error::invalid(format!(
                "mode {mode} out of range for a {}-mode state",
                self.n_modes()
            )))
        } else {
            Ok(())
        }
    }

    /// Symplectic eigenvalues in ascending order, one per mode.
    ///
    /// Computed as the square roots of the spectrum of `S^½ Ωᵀ S Ω S^½`, which
    /// shares its eigenvalues with `(iΩS)²` but is symmetric.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = self.cov.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::degenerate(
                "covariance is not positive definite".to_string(),
            ));
        }
        let sqrt_vals = eig.eigenvalues.map(f64::sqrt);
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&sqrt_vals)
            * eig.eigenvectors.transpose();
        let omega = symplectic_form(self.n_modes());
        let m = &root * omega.transpose() * &self.cov * &omega * &root;
        let m = (&m + m.transpose()) * 0.5;
        let mut nu2: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        nu2.sort_by(f64::total_cmp);
        Ok(nu2
            .chunks(2)
            .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
            .collect())
    }

    /// Pure-loss channel on one mode: a beam splitter of transmission `eta`
    /// mixing the mode with vacuum.
    pub fn apply_loss(&self, mode: usize, eta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("transmission {eta} outside [0, 1]")));
        }
        let t = eta.sqrt();
        let mut scale = DVector::from_element(self.mean.len(), 1.0);
        scale[2 * mode] = t;
        scale[2 * mode + 1] = t;
        let mean = self.mean.component_mul(&scale);
        let mut cov = DMatrix::from_fn(self.cov.nrows(), self.cov.ncols(), |i, j| {
            self.cov[(i, j)] * scale[i] * scale[j]
        });
        cov[(2 * mode, 2 * mode)] += (1.0 - eta) * VACUUM_VARIANCE;
        cov[(2 * mode + 1, 2 * mode + 1)] += (1.0 - eta) * VACUUM_VARIANCE;
        Ok(Self::from_parts(mean, cov))
    }

    /// Phase-space rotation of one mode by `theta` (counter-clockwise):
    /// `x' = cos θ x − sin θ p`, `p' = sin θ x + cos θ p`.
    ///
    /// Rotating by `−θ` turns the quadrature `cos θ x + sin θ p` into the new `x`.
    pub fn rotate(&self, mode: usize, theta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let (s, c) = theta.sin_cos();
        let mut rot = DMatrix::identity(self.mean.len(), self.mean.len());
        let (i, j) = (2 * mode, 2 * mode + 1);
        rot[(i, i)] = c;
        rot[(i, j)] = -s;
        rot[(j, i)] = s;
        rot[(j, j)] = c;
        let mean = &rot * &self.mean;
        let cov = &rot * &self.cov * rot.transpose();
        Ok(Self::from_parts(mean, cov))
    }

    pub fn displace(&self, mode: usize, dx: f64, dp: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !dx.is_finite() || !dp.is_finite() {
            return Err(Error::invalid("displacement must be finite"));
        }
        let mut mean = self.mean.clone();
        mean[2 * mode] += dx;
        mean[2 * mode + 1] += dp;
        Ok(Self {
            mean,
            cov: self.cov.clone(),
        })
    }

    /// Normalized Gaussian Wigner function at a phase-space point.
    pub fn wigner_at(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.mean.len() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, state has {}",
                point.len(),
                self.mean.len()
            )));
        }
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::degenerate("covariance is singular"))?;
        let d = DVector::from_column_slice(point) - &self.mean;
        let z = chol.solve(&d);
        let quad = d.dot(&z);
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let n = self.n_modes() as f64;
        Ok((-0.5 * quad - 0.5 * log_det - n * (2.0 * PI).ln()).exp())
    }

    /// Variance of `cos θ x + sin θ p` on one mode.
    pub fn quad_variance(&self, mode: usize, theta: f64) -> Result<f64> {
        self.check_mode(mode)?;
        let (s, c) = theta.sin_cos();
        let (i, j) = (2 * mode, 2 * mode + 1);
        Ok(c * c * self.cov[(i, i)] + s * s * self.cov[(j, j)] + 2.0 * s * c * self.cov[(i, j)])
    }

    /// Mean of `cos θ x + sin θ p` on one mode.
    pub fn quad_mean(&self, mode: usize, theta: f64) -> Result<f64> {
        self.check_mode(mode)?;
        let (s, c) = theta.sin_cos();
        Ok(c * self.mean[2 * mode] + s * self.mean[2 * mode + 1])
    }

    /// `(1/2)^n / sqrt(det cov)`; equals 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        let n = self.n_modes() as i32;
        VACUUM_VARIANCE.powi(n) / self.cov.determinant().sqrt()
    }

    /// Reduced state on the listed modes, in the order given.
    pub fn marginal(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("marginal needs at least one mode"));
        }
        for (k, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..k].contains(&m) {
                return Err(Error::invalid(format!("mode {m} listed twice")));
            }
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.cov[(idx[a], idx[b])]);
        Ok(Self { mean, cov })
    }

    /// Product state `self ⊗ other`.
    pub fn tensor(&self, other: &GaussianState) -> Self {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        Self { mean, cov }
    }
}

/// Standard symplectic form with `[[0, 1], [-1, 0]]` blocks.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Squeezing parameter `r ≥ 0`; a pure squeezed quadrature has variance `e^{-2r}/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingParameter(f64);

impl SqueezingParameter {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::invalid(format!(
                "squeezing parameter must be finite and non-negative, got {r}"
            )));
        }
        Ok(Self(r))
    }

    /// From a squeezing magnitude in dB, e.g. `10.0` for a −10 dB squeezed quadrature.
    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() || db < 0.0 {
            return Err(Error::invalid(format!(
                "squeezing magnitude must be a finite non-negative dB value, got {db}"
            )));
        }
        Self::new(db * std::f64::consts::LN_10 / 20.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn squeezed_variance(self) -> f64 {
        (-2.0 * self.0).exp() * VACUUM_VARIANCE
    }

    pub fn antisqueezed_variance(self) -> f64 {
        (2.0 * self.0).exp() * VACUUM_VARIANCE
    }

    /// Magnitude in dB (positive).
    pub fn db(self) -> f64 {
        -squeezing_db_unchecked(self.squeezed_variance())
    }
}

/// Squeezed/anti-squeezed variances of the source plus the two channel transmissions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprParams {
    pub v_s: f64,
    pub v_a: f64,
    pub eta_a: f64,
    pub eta_b: f64,
}

impl EprParams {
    pub fn new(v_s: f64, v_a: f64, eta_a: f64, eta_b: f64) -> Result<Self> {
        let p = Self {
            v_s,
            v_a,
            eta_a,
            eta_b,
        };
        p.validate()?;
        Ok(p)
    }

    /// Lossless pure source with squeezing parameter `r`.
    pub fn pure(r: SqueezingParameter) -> Self {
        Self {
            v_s: r.squeezed_variance(),
            v_a: r.antisqueezed_variance(),
            eta_a: 1.0,
            eta_b: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v_s, self.v_a, self.eta_a, self.eta_b]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("EPR parameters must be finite"));
        }
        if !(self.v_s > 0.0 && self.v_s <= VACUUM_VARIANCE && self.v_a >= VACUUM_VARIANCE) {
            return Err(Error::invalid(format!(
                "need 0 < V_s <= 1/2 <= V_a, got V_s = {}, V_a = {}",
                self.v_s, self.v_a
            )));
        }
        if self.v_s * self.v_a < 0.25 * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "V_s * V_a = {} is below the pure-state bound 1/4",
                self.v_s * self.v_a
            )));
        }
        for (name, eta) in [("eta_a", self.eta_a), ("eta_b", self.eta_b)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::invalid(format!("{name} = {eta} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `n` modes of vacuum.
pub fn vacuum(n_modes: usize) -> Result<GaussianState> {
    if n_modes == 0 {
        return Err(Error::invalid("vacuum needs at least one mode"));
    }
    Ok(GaussianState {
        mean: DVector::zeros(2 * n_modes),
        cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * VACUUM_VARIANCE,
    })
}

/// Two-mode entangled source with correlated amplitudes and anti-correlated
/// phases, after independent losses on each arm.
pub fn epr_state(params: &EprParams) -> Result<GaussianState> {
    params.validate()?;
    let EprParams {
        v_s,
        v_a,
        eta_a,
        eta_b,
    } = *params;
    let var_a = (eta_a * (v_a + v_s) + (1.0 - eta_a)) / 2.0;
    let var_b = (eta_b * (v_a + v_s) + (1.0 - eta_b)) / 2.0;
    let c = (eta_a * eta_b).sqrt() * (v_a - v_s) / 2.0;
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        var_a, 0.0,   c,     0.0,
        0.0,   var_a, 0.0,   -c,
        c,     0.0,   var_b, 0.0,
        0.0,   -c,    0.0,   var_b,
    ]);
    Ok(GaussianState {
        mean: DVector::zeros(4),
        cov,
    })
}

/// Pure two-mode squeezed vacuum.
pub fn tmsv(r: SqueezingParameter) -> GaussianState {
    epr_state(&EprParams::pure(r)).expect("pure parameters are always valid")
}

/// N-mode GHZ-like state: total momentum and relative positions squeezed.
///
/// The Wigner exponent is `−ξᵀMξ` with
/// `M_x = e^{-2r} J/N + e^{2r}(I − J/N)` and `M_p = e^{2r} J/N + e^{-2r}(I − J/N)`
/// (`J` the all-ones matrix); the covariance is `(2M)^{-1}`, inverted numerically.
pub fn ghz_like(n_modes: usize, r: SqueezingParameter) -> Result<GaussianState> {
    if n_modes < 2 {
        return Err(Error::invalid(format!(
            "GHZ-like state needs at least 2 modes, got {n_modes}"
        )));
    }
    let n = n_modes as f64;
    let (up, down) = ((2.0 * r.value()).exp(), (-2.0 * r.value()).exp());
    let mut precision = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for i in 0..n_modes {
        for j in 0..n_modes {
            let delta = if i == j { 1.0 } else { 0.0 };
            let mx = down / n + up * (delta - 1.0 / n);
            let mp = up / n + down * (delta - 1.0 / n);
            precision[(2 * i, 2 * j)] = 2.0 * mx;
            precision[(2 * i + 1, 2 * j + 1)] = 2.0 * mp;
        }
    }
    let cov = precision
        .try_inverse()
        .ok_or_else(|| Error::degenerate("GHZ-like precision matrix is singular"))?;
    Ok(GaussianState::from_parts(DVector::zeros(2 * n_modes), cov))
}

/// `10 log10(variance / (1/2))`.
pub fn squeezing_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!(
            "variance must be positive and finite, got {variance}"
        )));
    }
    Ok(squeezing_db_unchecked(variance))
}

pub(crate) fn squeezing_db_unchecked(variance: f64) -> f64 {
    10.0 * (variance / VACUUM_VARIANCE).log10()
}
