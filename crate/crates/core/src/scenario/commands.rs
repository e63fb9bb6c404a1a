use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::table::{Provenance, ResultTable, WignerGrid, WIGNER_CONVENTION};
use super::{db_to_r, linspace, set_sweep_value, Scenario, SourceConfig};
use crate::conditioning::{
    condition_exact, condition_sequence, condition_windowed, predicted_displacement,
    HomodyneProjection, WindowedConditional,
};
use crate::error::{Error, Result};
use crate::gaussian::{squeezing_db_unchecked, tmsv, GaussianState, SqueezingParameter};
use crate::metrics::{estimate_squeezed_fit, estimate_squeezed_fit_free_angle, SingleModeState};
use crate::montecarlo::{simulate_remote_angles, EstimateWarning};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Prepare,
    Sweep,
    DisplaceCurve,
    Ghz,
    Simulate,
}

/// A table plus any Wigner grids, keyed by file-name suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub table: ResultTable,
    pub grids: Vec<(String, WignerGrid)>,
}

impl CommandOutput {
    /// Grid file for `suffix` next to a table at `table`.
    pub fn grid_path(table: &Path, suffix: &str) -> PathBuf {
        let stem = table.with_extension("");
        PathBuf::from(format!("{}.{suffix}.json", stem.display()))
    }

    /// Writes the table to `table` (stdout when `None`) and the grids beside it.
    pub fn write(&self, table: Option<&Path>) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        match table {
            Some(path) => {
                let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                self.table.write(&mut f)?;
                f.flush()?;
                written.push(path.to_path_buf());
                for (suffix, grid) in &self.grids {
                    let p = Self::grid_path(path, suffix);
                    std::fs::write(&p, grid.to_json())?;
                    written.push(p);
                }
            }
            None => {
                if !self.grids.is_empty() {
                    return Err(Error::Config("Wigner grids need an output path".into()));
                }
                self.table.write(std::io::stdout().lock())?;
            }
        }
        Ok(written)
    }
}

pub fn run(command: Command, scenario: &Scenario) -> Result<CommandOutput> {
    match command {
        Command::Prepare => cmd_prepare(scenario),
        Command::Sweep => cmd_sweep(scenario),
        Command::DisplaceCurve => cmd_displace_curve(scenario),
        Command::Ghz => cmd_ghz(scenario),
        Command::Simulate => cmd_simulate(scenario),
    }
}

enum Prepared {
    Exact(GaussianState),
    Windowed(WindowedConditional),
}

impl Prepared {
    fn single(&self) -> &dyn SingleModeState {
        match self {
            Prepared::Exact(s) => s,
            Prepared::Windowed(w) => w,
        }
    }

    fn wigner(&self, x: f64, p: f64) -> Result<f64> {
        self.single().wigner(x, p)
    }
}

/// Remaining modes after every projection, keyed by original index.
struct Conditioned {
    labels: Vec<usize>,
    prepared: Prepared,
    success_probability: f64,
}

fn split_projections(s: &Scenario) -> (Vec<HomodyneProjection>, Option<HomodyneProjection>) {
    let mut exact = s.projections();
    let windowed = match exact.last() {
        Some(p) if !p.is_exact() => exact.pop(),
        _ => None,
    };
    (exact, windowed)
}

fn condition(s: &Scenario) -> Result<Conditioned> {
    let state = s.build_state()?;
    let (exact, windowed) = split_projections(s);
    let seq = condition_sequence(&state, &exact)?;
    let mut labels = seq.labels;
    match windowed {
        None => Ok(Conditioned {
            labels,
            prepared: Prepared::Exact(seq.state),
            success_probability: if exact.is_empty() { 1.0 } else { f64::NAN },
        }),
        Some(w) => {
            let local = labels.iter().position(|&l| l == w.mode).expect("validated");
            let wc = condition_windowed(&seq.state, &HomodyneProjection { mode: local, ..w })?;
            labels.remove(local);
            let p = if exact.is_empty() { wc.success_probability() } else { f64::NAN };
            Ok(Conditioned {
                labels,
                success_probability: p,
                prepared: Prepared::Windowed(wc),
            })
        }
    }
}

impl Conditioned {
    fn station(&self, mode: usize) -> Result<Prepared> {
        let local = self
            .labels
            .iter()
            .position(|&l| l == mode)
            .ok_or_else(|| Error::Config(format!("mode {mode} was measured")))?;
        Ok(match &self.prepared {
            Prepared::Exact(s) => Prepared::Exact(s.marginal(&[local])?),
            Prepared::Windowed(w) => Prepared::Windowed(w.marginal(&[local])?),
        })
    }
}

const STATION_COLUMNS: [(&str, &str); 15] = [
    ("station", "index"),
    ("mean_x", "quad"),
    ("mean_p", "quad"),
    ("var_x", "quad^2"),
    ("var_p", "quad^2"),
    ("cov_xp", "quad^2"),
    ("squeezing_db", "dB"),
    ("antisqueezing_db", "dB"),
    ("fit_r", "1"),
    ("fit_a", "quad"),
    ("fit_b", "quad"),
    ("fit_phi", "rad"),
    ("fit_db", "dB"),
    ("fidelity", "1"),
    ("success_probability", "1"),
];

fn station_row(mode: usize, state: &Prepared, fit: bool, success: f64) -> Result<Vec<f64>> {
    let single = state.single();
    let (mean, cov) = single.moments()?;
    let eig = cov.symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let mut row = vec![
        mode as f64,
        mean[0],
        mean[1],
        cov[(0, 0)],
        cov[(1, 1)],
        cov[(0, 1)],
        squeezing_db_unchecked(lo),
        squeezing_db_unchecked(hi),
    ];
    if fit {
        let axis = estimate_squeezed_fit(single)?;
        let free = estimate_squeezed_fit_free_angle(single)?;
        let best = if free.fidelity > axis.fidelity + 1e-12 { free } else { axis };
        let t = best.target;
        row.extend([t.r, t.a, t.b, t.phi, best.squeezing_db, best.fidelity]);
    } else {
        row.extend([f64::NAN; 6]);
    }
    row.push(success);
    Ok(row)
}

fn wigner_grid(state: &Prepared, bounds: f64, points: usize) -> Result<WignerGrid> {
    let axis = linspace(-bounds, bounds, points);
    let values = axis
        .par_iter()
        .map(|&p| axis.iter().map(|&x| state.wigner(x, p)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(WignerGrid {
        x_axis: axis.clone(),
        p_axis: axis,
        values,
        convention: WIGNER_CONVENTION.to_string(),
    })
}

fn provenance(s: &Scenario, seed: Option<u64>) -> Provenance {
    Provenance::new(s.hash(), seed)
}

/// Conditions the configured source and reports the station's state.
pub fn cmd_prepare(s: &Scenario) -> Result<CommandOutput> {
    let c = condition(s)?;
    let station = s.station();
    let state = c.station(station)?;
    let mut table = ResultTable::new(&STATION_COLUMNS, provenance(s, None));
    table.push(station_row(station, &state, s.config().analysis.fit, c.success_probability)?);
    let mut grids = Vec::new();
    let a = &s.config().analysis;
    if a.wigner {
        grids.push(("wigner".to_string(), wigner_grid(&state, a.grid_bounds, a.grid_points)?));
    }
    Ok(CommandOutput { table, grids })
}

/// One prepare row per sweep point, in sweep order.
pub fn cmd_sweep(s: &Scenario) -> Result<CommandOutput> {
    let sweep = s
        .config()
        .sweep
        .ok_or_else(|| Error::Config("sweep needs a [sweep] section".into()))?;
    let mut columns = vec![(sweep.parameter.column(), sweep.parameter.unit())];
    columns.extend(STATION_COLUMNS);
    let rows = sweep
        .points()
        .par_iter()
        .map(|&v| {
            let point = s.modified(|c| set_sweep_value(c, sweep.parameter, v))?;
            let c = condition(&point)?;
            let station = point.station();
            let mut row = vec![v];
            row.extend(station_row(
                station,
                &c.station(station)?,
                point.config().analysis.fit,
                c.success_probability,
            )?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = ResultTable::new(&columns, provenance(s, None));
    rows.into_iter().for_each(|r| table.push(r));
    Ok(CommandOutput {
        table,
        grids: Vec::new(),
    })
}

/// Remote mean after `x_A = α` on a pure pair, against `α tanh 2r`.
pub fn cmd_displace_curve(s: &Scenario) -> Result<CommandOutput> {
    let d = s
        .config()
        .displace
        .clone()
        .ok_or_else(|| Error::Config("displace-curve needs a [displace] section".into()))?;
    let mut table = ResultTable::new(
        &[
            ("source_db", "dB"),
            ("r", "1"),
            ("alpha", "quad"),
            ("predicted_x", "quad"),
            ("conditioned_x", "quad"),
            ("conditioned_p", "quad"),
        ],
        provenance(s, None),
    );
    for db in linspace(d.db_start, d.db_stop, d.steps) {
        let r = SqueezingParameter::new(db_to_r(db))?;
        let pair = tmsv(r);
        for &alpha in &d.alphas {
            let bob = condition_exact(&pair, &HomodyneProjection::exact(0, 0.0, alpha))?.state;
            table.push(vec![
                db,
                r.value(),
                alpha,
                predicted_displacement(r, alpha),
                bob.mean()[0],
                bob.mean()[1],
            ]);
        }
    }
    Ok(CommandOutput {
        table,
        grids: Vec::new(),
    })
}

/// Every unmeasured station of a GHZ-like source.
pub fn cmd_ghz(s: &Scenario) -> Result<CommandOutput> {
    if !matches!(s.config().source, SourceConfig::Ghz { .. }) {
        return Err(Error::Config("ghz needs source.kind = \"ghz\"".into()));
    }
    let c = condition(s)?;
    let a = &s.config().analysis;
    let mut table = ResultTable::new(&STATION_COLUMNS, provenance(s, None));
    let mut grids = Vec::new();
    for station in s.stations() {
        let state = c.station(station)?;
        table.push(station_row(station, &state, a.fit, c.success_probability)?);
        if a.wigner {
            grids.push((
                format!("station{station}.wigner"),
                wigner_grid(&state, a.grid_bounds, a.grid_points)?,
            ));
        }
    }
    Ok(CommandOutput { table, grids })
}

const SIMULATE_COLUMNS: [(&str, &str); 14] = [
    ("theta", "rad"),
    ("shots", "count"),
    ("survivors", "count"),
    ("survival_fraction", "1"),
    ("success_probability", "1"),
    ("survival_se", "1"),
    ("est_mean", "quad"),
    ("mean_se", "quad"),
    ("pred_mean", "quad"),
    ("est_var", "quad^2"),
    ("var_se", "quad^2"),
    ("pred_var", "quad^2"),
    ("agree", "bool"),
    ("low_statistics", "bool"),
];

/// Monte Carlo post-selection at the configured window, one row per station angle,
/// against the analytic windowed conditional.
pub fn cmd_simulate(s: &Scenario) -> Result<CommandOutput> {
    let cfg = s.config();
    let seed = match cfg.montecarlo.seed {
        Some(seed) => seed,
        None if s.strict() => {
            return Err(Error::Config("simulate in strict mode needs --seed".into()))
        }
        None => 0,
    };
    let (exact, herald) = split_projections(s);
    let herald = herald.ok_or_else(|| {
        Error::Config("simulate needs a last projection with a finite window (delta > 0)".into())
    })?;
    let state = condition_sequence(&s.build_state()?, &exact)?;
    let local = |mode: usize| state.labels.iter().position(|&l| l == mode).expect("validated");
    let herald_local = HomodyneProjection {
        mode: local(herald.mode),
        ..herald
    };
    let station = s.station();
    let station_local = local(station);

    let predicted = condition_windowed(&state.state, &herald_local)?;
    let after = if station_local > herald_local.mode {
        station_local - 1
    } else {
        station_local
    };
    let moments = predicted.moments().marginal(&[after])?;
    let p = predicted.success_probability();
    let shots = cfg.montecarlo.shots;

    let estimates = simulate_remote_angles(
        &state.state,
        &herald_local,
        station_local,
        &cfg.montecarlo.angles,
        shots,
        seed,
    )?;
    let mut table = ResultTable::new(&SIMULATE_COLUMNS, provenance(s, Some(seed)));
    for e in &estimates {
        let est = &e.estimate;
        let pred_mean = moments.quad_mean(0, e.theta)?;
        let pred_var = moments.quad_variance(0, e.theta)?;
        let survival_se = (p * (1.0 - p) / shots as f64).sqrt();
        let agree = (est.mean - pred_mean).abs() <= 3.0 * est.mean_se
            && (est.variance - pred_var).abs() <= 3.0 * est.variance_se
            && (e.survival_fraction - p).abs() <= 3.0 * survival_se.max(f64::MIN_POSITIVE);
        let low = matches!(est.warning, Some(EstimateWarning::LowStatistics { .. }));
        if low {
            let msg = format!(
                "low statistics at theta={}: {} survivors",
                e.theta, est.survivors
            );
            if s.strict() {
                return Err(Error::Accuracy(msg));
            }
            table.warnings.push(msg);
        }
        table.push(vec![
            e.theta,
            shots as f64,
            est.survivors as f64,
            e.survival_fraction,
            p,
            survival_se,
            est.mean,
            est.mean_se,
            pred_mean,
            est.variance,
            est.variance_se,
            pred_var,
            if agree { 1.0 } else { 0.0 },
            if low { 1.0 } else { 0.0 },
        ]);
    }
    Ok(CommandOutput {
        table,
        grids: Vec::new(),
    })
}
