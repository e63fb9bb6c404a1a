//! Simulated homodyne shot records, post-selection and moment estimation.
//!
//! Each shot measures one quadrature per mode. Shots are generated in blocks of
//! [`BLOCK_SHOTS`]; block `b` draws from a ChaCha12 stream keyed by the plan seed
//! with stream id `b`, so the batch does not depend on how blocks are scheduled
//! across threads. Normal variates come from `rand_distr::StandardNormal`
//! (ziggurat); the generator and sampler versions are pinned in `Cargo.lock`.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::conditioning::HomodyneProjection;
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, SYMPLECTIC_TOLERANCE, VACUUM_VARIANCE};

pub const BLOCK_SHOTS: usize = 8192;

/// Jackknife block count for standard errors.
pub const JACKKNIFE_BLOCKS: usize = 100;

/// Below this many surviving shots, estimates carry a warning.
pub const LOW_STATISTICS: usize = 100;

/// Quadrature angle per mode, number of shots and RNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    pub angles: Vec<f64>,
    pub shots: usize,
    pub seed: u64,
}

impl MeasurementPlan {
    pub fn new(angles: Vec<f64>, shots: usize, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::invalid("a plan needs at least one shot"));
        }
        if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("a plan needs one finite angle per mode"));
        }
        Ok(Self {
            angles,
            shots,
            seed,
        })
    }
}

/// Shot records: `shots × n_modes` outcomes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    data: Vec<f64>,
    plan: MeasurementPlan,
    state_tag: String,
}

/// Short content hash of a state's moments, used to tag batches.
pub fn state_tag(state: &GaussianState) -> String {
    let mut h = Sha256::new();
    for v in state.mean().iter().chain(state.cov().iter()) {
        h.update(v.to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// Draws `plan.shots` i.i.d. joint outcomes of `cos θ_i x_i + sin θ_i p_i`.
pub fn sample_joint(state: &GaussianState, plan: &MeasurementPlan) -> Result<SampleBatch> {
    let n = state.n_modes();
    if plan.angles.len() != n {
        return Err(Error::invalid(format!(
            "plan has {} angles for a {n}-mode state",
            plan.angles.len()
        )));
    }
    let mut g = DMatrix::zeros(n, 2 * n);
    for (i, &theta) in plan.angles.iter().enumerate() {
        let (s, c) = theta.sin_cos();
        g[(i, 2 * i)] = c;
        g[(i, 2 * i + 1)] = s;
    }
    let mean: DVector<f64> = &g * state.mean();
    let cov: DMatrix<f64> = &g * state.cov() * g.transpose();
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::degenerate("measured quadratures have a singular joint covariance"))?;
    let l = chol.l();

    let mut data = vec![0.0; plan.shots * n];
    data.par_chunks_mut(BLOCK_SHOTS * n)
        .enumerate()
        .for_each(|(block, chunk)| {
            let mut rng = ChaCha12Rng::seed_from_u64(plan.seed);
            rng.set_stream(block as u64);
            let mut z = vec![0.0; n];
            for row in chunk.chunks_mut(n) {
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(&mut rng);
                }
                for i in 0..n {
                    let mut acc = mean[i];
                    for j in 0..=i {
                        acc += l[(i, j)] * z[j];
                    }
                    row[i] = acc;
                }
            }
        });
    Ok(SampleBatch {
        data,
        plan: plan.clone(),
        state_tag: state_tag(state),
    })
}

impl SampleBatch {
    pub fn n_modes(&self) -> usize {
        self.plan.angles.len()
    }

    pub fn shots(&self) -> usize {
        self.plan.shots
    }

    pub fn plan(&self) -> &MeasurementPlan {
        &self.plan
    }

    pub fn state_tag(&self) -> &str {
        &self.state_tag
    }

    pub fn row(&self, shot: usize) -> &[f64] {
        let n = self.n_modes();
        &self.data[shot * n..(shot + 1) * n]
    }

    pub fn column(&self, mode: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(mode).step_by(self.n_modes()).copied()
    }

    /// Columnar CSV: `#`-prefixed metadata lines, then `shot,mode0,mode1,...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# state={}", self.state_tag)?;
        writeln!(out, "# seed={}", self.plan.seed)?;
        writeln!(out, "# shots={}", self.plan.shots)?;
        for (i, a) in self.plan.angles.iter().enumerate() {
            writeln!(out, "# angle[{i}]={a}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["shot".to_string()];
        header.extend((0..self.n_modes()).map(|i| format!("mode{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for shot in 0..self.shots() {
            let mut rec = vec![shot.to_string()];
            rec.extend(self.row(shot).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = Vec::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(meta) = line.strip_prefix('#') {
                lines.push(meta.trim().to_string());
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut state_tag = None;
        let mut seed = None;
        let mut shots = None;
        let mut angles = Vec::new();
        for meta in &lines {
            let (k, v) = meta
                .split_once('=')
                .ok_or_else(|| Error::Io(format!("malformed metadata line '# {meta}'")))?;
            match k {
                "state" => state_tag = Some(v.to_string()),
                "seed" => seed = Some(v.parse::<u64>().map_err(|e| Error::Io(e.to_string()))?),
                "shots" => shots = Some(v.parse::<usize>().map_err(|e| Error::Io(e.to_string()))?),
                _ if k.starts_with("angle[") => {
                    angles.push(v.parse::<f64>().map_err(|e| Error::Io(e.to_string()))?)
                }
                _ => return Err(Error::Io(format!("unknown metadata key '{k}'"))),
            }
        }
        let plan = MeasurementPlan::new(
            angles,
            shots.ok_or_else(|| Error::Io("missing shots".into()))?,
            seed.ok_or_else(|| Error::Io("missing seed".into()))?,
        )?;
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let mut data = Vec::with_capacity(plan.shots * plan.angles.len());
        for rec in reader.records() {
            let rec = rec.map_err(csv_err)?;
            for field in rec.iter().skip(1) {
                data.push(field.parse::<f64>().map_err(|e| Error::Io(e.to_string()))?);
            }
        }
        if data.len() != plan.shots * plan.angles.len() {
            return Err(Error::Io("row count does not match metadata".into()));
        }
        Ok(Self {
            data,
            plan,
            state_tag: state_tag.ok_or_else(|| Error::Io("missing state tag".into()))?,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Rows kept by a post-selection window.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub survival_fraction: f64,
    pub mode: usize,
    pub alpha: f64,
    pub delta: f64,
}

impl SelectionResult {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn survivors(&self) -> usize {
        self.indices.len()
    }
}

/// Keeps the shots with `|outcome_mode − α| < δ`. An empty selection is a
/// normal result with fraction 0.
pub fn postselect(batch: &SampleBatch, mode: usize, alpha: f64, delta: f64) -> Result<SelectionResult> {
    if mode >= batch.n_modes() {
        return Err(Error::invalid(format!(
            "mode {mode} out of range for a {}-mode batch",
            batch.n_modes()
        )));
    }
    if !(delta > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "post-selection needs δ > 0 and finite α, got δ = {delta}, α = {alpha}"
        )));
    }
    let indices: Vec<usize> = batch
        .column(mode)
        .enumerate()
        .filter(|&(_, v)| (v - alpha).abs() < delta)
        .map(|(i, _)| i)
        .collect();
    Ok(SelectionResult {
        survival_fraction: indices.len() as f64 / batch.shots() as f64,
        indices,
        mode,
        alpha,
        delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimateWarning {
    LowStatistics { survivors: usize },
}

/// Sample moments of one mode's surviving outcomes with jackknife standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEstimate {
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
    pub survivors: usize,
    pub warning: Option<EstimateWarning>,
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let var = if values.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Delete-a-block jackknife over up to [`JACKKNIFE_BLOCKS`] contiguous blocks.
fn jackknife(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let blocks = JACKKNIFE_BLOCKS.min(n);
    if blocks < 2 {
        return (f64::NAN, f64::NAN);
    }
    let bounds: Vec<usize> = (0..=blocks).map(|b| b * n / blocks).collect();
    let total: f64 = values.iter().sum();
    let total_sq: f64 = values.iter().map(|v| v * v).sum();
    let mut means = Vec::with_capacity(blocks);
    let mut vars = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let part = &values[bounds[b]..bounds[b + 1]];
        let m = (n - part.len()) as f64;
        let s = total - part.iter().sum::<f64>();
        let s2 = total_sq - part.iter().map(|v| v * v).sum::<f64>();
        let mean = s / m;
        means.push(mean);
        vars.push((s2 - m * mean * mean) / (m - 1.0));
    }
    let spread = |xs: &[f64]| {
        let g = blocks as f64;
        let avg = xs.iter().sum::<f64>() / g;
        ((g - 1.0) / g * xs.iter().map(|x| (x - avg).powi(2)).sum::<f64>()).sqrt()
    };
    (spread(&means), spread(&vars))
}

pub fn estimate_conditional(
    batch: &SampleBatch,
    selection: &SelectionResult,
    bob_mode: usize,
) -> Result<ConditionalEstimate> {
    if bob_mode >= batch.n_modes() {
        return Err(Error::invalid(format!("mode {bob_mode} out of range")));
    }
    if selection.is_empty() {
        return Err(Error::invalid("cannot estimate from an empty selection"));
    }
    let n = batch.n_modes();
    let values: Vec<f64> = selection
        .indices
        .iter()
        .map(|&i| batch.data[i * n + bob_mode])
        .collect();
    let (mean, variance) = mean_and_variance(&values);
    let (mean_se, variance_se) = jackknife(&values);
    let survivors = values.len();
    Ok(ConditionalEstimate {
        mean,
        variance,
        mean_se,
        variance_se,
        survivors,
        warning: (survivors < LOW_STATISTICS).then_some(EstimateWarning::LowStatistics { survivors }),
    })
}

/// Estimate for one measurement angle of the remote mode.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    pub theta: f64,
    pub estimate: ConditionalEstimate,
    pub survival_fraction: f64,
}

/// Default tomography angles.
pub const TOMOGRAPHY_ANGLES: [f64; 4] = [
    0.0,
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_2,
    3.0 * std::f64::consts::FRAC_PI_4,
];

/// One batch per remote angle, all sharing the post-selection on `herald`.
/// Modes other than the heralding and remote ones are read at angle 0.
pub fn simulate_remote_angles(
    state: &GaussianState,
    herald: &HomodyneProjection,
    remote_mode: usize,
    angles: &[f64],
    shots_per_angle: usize,
    seed: u64,
) -> Result<Vec<AngleEstimate>> {
    if herald.mode == remote_mode {
        return Err(Error::invalid("heralding and remote modes must differ"));
    }
    let delta = if herald.half_width > 0.0 {
        herald.half_width
    } else {
        return Err(Error::invalid("simulation needs a finite selection window"));
    };
    angles
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let mut plan_angles = vec![0.0; state.n_modes()];
            plan_angles[herald.mode] = herald.theta;
            plan_angles[remote_mode] = theta;
            let plan = MeasurementPlan::new(plan_angles, shots_per_angle, seed.wrapping_add(k as u64))?;
            let batch = sample_joint(state, &plan)?;
            let sel = postselect(&batch, herald.mode, herald.alpha, delta)?;
            if sel.is_empty() {
                return Err(Error::Accuracy(format!(
                    "no shots survived the window at remote angle {theta}"
                )));
            }
            Ok(AngleEstimate {
                theta,
                estimate: estimate_conditional(&batch, &sel, remote_mode)?,
                survival_fraction: sel.survival_fraction,
            })
        })
        .collect()
}

/// Single-mode Gaussian state fitted from per-angle moments.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyFit {
    pub state: GaussianState,
    /// Symplectic eigenvalue before projection onto the physical set, when a
    /// projection was needed.
    pub clipped_from: Option<f64>,
}

/// Least-squares fit of a single-mode mean and covariance to per-angle
/// quadrature means and variances:
/// `m(θ) = cos θ μx + sin θ μp`, `v(θ) = cos²θ Σxx + sin²θ Σpp + sin 2θ Σxp`.
pub fn tomography_fit(estimates: &[AngleEstimate]) -> Result<TomographyFit> {
    let k = estimates.len();
    let mut distinct: Vec<f64> = Vec::new();
    for e in estimates {
        if !e.theta.is_finite() {
            return Err(Error::invalid("tomography angles must be finite"));
        }
        let t = e.theta.rem_euclid(std::f64::consts::PI);
        if !distinct.iter().any(|d| (d - t).abs() < 1e-9) {
            distinct.push(t);
        }
    }
    if distinct.len() < 3 {
        return Err(Error::invalid(format!(
            "tomography needs at least 3 distinct angles modulo π, got {}",
            distinct.len()
        )));
    }
    let mean_design = DMatrix::from_fn(k, 2, |i, j| {
        let (s, c) = estimates[i].theta.sin_cos();
        if j == 0 { c } else { s }
    });
    let var_design = DMatrix::from_fn(k, 3, |i, j| {
        let (s, c) = estimates[i].theta.sin_cos();
        [c * c, s * s, 2.0 * s * c][j]
    });
    let means = DVector::from_iterator(k, estimates.iter().map(|e| e.estimate.mean));
    let vars = DVector::from_iterator(k, estimates.iter().map(|e| e.estimate.variance));
    let mu = least_squares(mean_design, means)?;
    let sv = least_squares(var_design, vars)?;

    let mut cov = Matrix2::new(sv[0], sv[2], sv[2], sv[1]);
    let eig = cov.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        let floor = eig.eigenvalues.map(|l| l.max(1e-6));
        cov = eig.eigenvectors * Matrix2::from_diagonal(&floor) * eig.eigenvectors.transpose();
    }
    let nu = cov.determinant().sqrt();
    let clipped_from = if nu < VACUUM_VARIANCE - SYMPLECTIC_TOLERANCE {
        cov *= VACUUM_VARIANCE / nu;
        Some(nu)
    } else {
        None
    };
    let state = GaussianState::new(
        DVector::from_vec(vec![mu[0], mu[1]]),
        DMatrix::from_row_slice(2, 2, &[cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]]),
    )?;
    Ok(TomographyFit {
        state,
        clipped_from,
    })
}

fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-9 * smax {
        return Err(Error::invalid("rank-deficient angle set"));
    }
    svd.solve(&b, 1e-12 * smax)
        .map_err(|e| Error::degenerate(e.to_string()))
}

/// Fidelity between two single-mode Gaussian states (either may be mixed),
/// used to score tomography against an analytic prediction.
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.n_modes() != 1 || b.n_modes() != 1 {
        return Err(Error::invalid("gaussian_fidelity compares single-mode states"));
    }
    let m = |s: &GaussianState| {
        let c = s.cov();
        Matrix2::new(c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)])
    };
    let (va, vb) = (m(a), m(b));
    let sum = va + vb;
    let delta = sum.determinant();
    let lambda = 4.0 * (va.determinant() - 0.25) * (vb.determinant() - 0.25);
    let lambda = lambda.max(0.0);
    let d = Vector2::new(a.mean()[0] - b.mean()[0], a.mean()[1] - b.mean()[1]);
    let inv = sum
        .try_inverse()
        .ok_or_else(|| Error::degenerate("singular covariance sum"))?;
    Ok((-0.5 * d.dot(&(inv * d))).exp() / ((delta + lambda).sqrt() - lambda.sqrt()))
}
