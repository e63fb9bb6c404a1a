//! Declarative scenarios: a TOML file describing a source, channel losses,
//! homodyne projections and the analysis to run on the prepared state.
//!
//! ```toml
//! [source]
//! kind = "epr"
//! v_s = 0.24
//! v_a = 1.3
//!
//! [channel]
//! eta = [0.9, 0.9]
//!
//! [[projection]]
//! mode = 0
//! angle = 0.0
//! alpha = 0.0
//! delta = 0.1
//! ```
//!
//! Unknown keys are rejected. `delta = 0` (the default) is an ideal projection;
//! at most one projection may carry a finite window and it must come last.

mod commands;
mod table;

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conditioning::HomodyneProjection;
use crate::error::{Error, Result};
use crate::gaussian::{epr_state, ghz_like, tmsv, vacuum, EprParams, GaussianState, SqueezingParameter};
use crate::montecarlo::TOMOGRAPHY_ANGLES;

pub use commands::{
    cmd_displace_curve, cmd_ghz, cmd_prepare, cmd_simulate, cmd_sweep, run, Command, CommandOutput,
};
pub use table::{Provenance, ResultTable, WignerGrid, WIGNER_CONVENTION};

pub const DEFAULT_SHOTS: usize = 70_000;
pub const DEFAULT_GRID_BOUNDS: f64 = 4.0;
pub const DEFAULT_GRID_POINTS: usize = 201;
pub const MAX_GHZ_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub source: SourceConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default, rename = "projection")]
    pub projections: Vec<ProjectionConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displace: Option<DisplaceConfig>,
    #[serde(default)]
    pub montecarlo: MonteCarloConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Shared entangled resource. Squeezing is given as a non-negative dB magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    /// Two-mode source from its squeezed and anti-squeezed quadrature variances.
    Epr { v_s: f64, v_a: f64 },
    Tmsv { squeezing_db: f64 },
    Ghz { modes: usize, squeezing_db: f64 },
    Vacuum { modes: usize },
}

impl SourceConfig {
    pub fn n_modes(&self) -> usize {
        match self {
            SourceConfig::Epr { .. } | SourceConfig::Tmsv { .. } => 2,
            SourceConfig::Ghz { modes, .. } | SourceConfig::Vacuum { modes } => *modes,
        }
    }

    /// Replaces the source squeezing; an EPR source becomes the pure pair at that level.
    fn set_db(&mut self, db: f64) -> Result<()> {
        match self {
            SourceConfig::Epr { v_s, v_a } => {
                let r = SqueezingParameter::from_db(db)?;
                *v_s = r.squeezed_variance();
                *v_a = r.antisqueezed_variance();
            }
            SourceConfig::Tmsv { squeezing_db } | SourceConfig::Ghz { squeezing_db, .. } => {
                *squeezing_db = db
            }
            SourceConfig::Vacuum { .. } => {
                return Err(Error::Config("source.kind = \"vacuum\" has no squeezing to sweep".into()))
            }
        }
        Ok(())
    }
}

/// Power transmission per mode; missing entries are lossless.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default)]
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    pub mode: usize,
    /// Quadrature angle in radians.
    #[serde(default)]
    pub angle: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Half-width of the acceptance window; 0 is an ideal projection, `inf` keeps every shot.
    #[serde(default)]
    pub delta: f64,
}

impl ProjectionConfig {
    pub fn to_projection(&self) -> HomodyneProjection {
        if self.delta == 0.0 {
            HomodyneProjection::exact(self.mode, self.angle, self.alpha)
        } else {
            HomodyneProjection::windowed(self.mode, self.angle, self.alpha, self.delta)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Reported mode; defaults to the highest-index unmeasured mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station: Option<usize>,
    #[serde(default = "yes")]
    pub fit: bool,
    #[serde(default)]
    pub wigner: bool,
    #[serde(default = "default_bounds")]
    pub grid_bounds: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
}

fn yes() -> bool {
    true
}

fn default_bounds() -> f64 {
    DEFAULT_GRID_BOUNDS
}

fn default_points() -> usize {
    DEFAULT_GRID_POINTS
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            station: None,
            fit: true,
            wigner: false,
            grid_bounds: DEFAULT_GRID_BOUNDS,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    EtaA,
    EtaB,
    Delta,
    SourceDb,
    Alpha,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::EtaA => "eta_a",
            SweepParameter::EtaB => "eta_b",
            SweepParameter::Delta => "delta",
            SweepParameter::SourceDb => "source_db",
            SweepParameter::Alpha => "alpha",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SweepParameter::EtaA | SweepParameter::EtaB => "1",
            SweepParameter::Delta | SweepParameter::Alpha => "quad",
            SweepParameter::SourceDb => "dB",
        }
    }
}

/// `steps` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepConfig {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.steps)
    }
}

pub(crate) fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![start];
    }
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                stop
            } else {
                start + (stop - start) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

/// Displacement curves: remote mean after `x_A = α` on a pure pair, over a dB range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplaceConfig {
    pub alphas: Vec<f64>,
    pub db_start: f64,
    pub db_stop: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Quadrature angles read at the reported station.
    #[serde(default = "default_angles")]
    pub angles: Vec<f64>,
}

fn default_shots() -> usize {
    DEFAULT_SHOTS
}

fn default_angles() -> Vec<f64> {
    TOMOGRAPHY_ANGLES.to_vec()
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            seed: None,
            angles: default_angles(),
        }
    }
}

/// Output locations. Wigner grids are written next to the table as
/// `<stem>.wigner.json` (or `<stem>.station<k>.wigner.json` for several stations).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<String>,
    pub seed: Option<u64>,
    pub grid_bounds: Option<f64>,
    pub grid_points: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.table = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.montecarlo.seed = Some(seed);
        }
        if let Some(b) = o.grid_bounds {
            self.analysis.grid_bounds = b;
        }
        if let Some(n) = o.grid_points {
            self.analysis.grid_points = n;
        }
    }
}

/// A validated configuration ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: ScenarioConfig,
    hash: String,
    strict: bool,
}

impl Scenario {
    pub fn new(config: ScenarioConfig, strict: bool) -> Result<Self> {
        validate(&config)?;
        let hash = config_hash(&config)?;
        Ok(Self {
            config,
            hash,
            strict,
        })
    }

    pub fn from_toml_str(text: &str, overrides: &Overrides, strict: bool) -> Result<Self> {
        let mut config = ScenarioConfig::from_toml_str(text)?;
        config.apply(overrides);
        Self::new(config, strict)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// SHA-256 of the canonical serialization, output paths excluded.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    /// A copy with `edit` applied, re-validated.
    pub(crate) fn modified(&self, edit: impl FnOnce(&mut ScenarioConfig) -> Result<()>) -> Result<Self> {
        let mut config = self.config.clone();
        edit(&mut config)?;
        validate(&config)?;
        Ok(Self {
            config,
            hash: self.hash.clone(),
            strict: self.strict,
        })
    }

    pub fn build_state(&self) -> Result<GaussianState> {
        build_state(&self.config)
    }

    pub fn projections(&self) -> Vec<HomodyneProjection> {
        self.config.projections.iter().map(ProjectionConfig::to_projection).collect()
    }

    /// Unmeasured modes, in index order.
    pub fn stations(&self) -> Vec<usize> {
        let n = self.config.source.n_modes();
        (0..n)
            .filter(|m| !self.config.projections.iter().any(|p| p.mode == *m))
            .collect()
    }

    pub fn station(&self) -> usize {
        self.config
            .analysis
            .station
            .unwrap_or_else(|| *self.stations().last().expect("validated: a mode remains"))
    }
}

pub fn config_hash(config: &ScenarioConfig) -> Result<String> {
    let mut canonical = config.clone();
    canonical.output = OutputConfig::default();
    let text = canonical.to_toml_string()?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn build_state(c: &ScenarioConfig) -> Result<GaussianState> {
    let eta = |i: usize| c.channel.eta.get(i).copied().unwrap_or(1.0);
    let mut state = match &c.source {
        SourceConfig::Epr { v_s, v_a } => {
            return epr_state(&EprParams::new(*v_s, *v_a, eta(0), eta(1))?);
        }
        SourceConfig::Tmsv { squeezing_db } => tmsv(SqueezingParameter::from_db(*squeezing_db)?),
        SourceConfig::Ghz {
            modes,
            squeezing_db,
        } => ghz_like(*modes, SqueezingParameter::from_db(*squeezing_db)?)?,
        SourceConfig::Vacuum { modes } => vacuum(*modes)?,
    };
    for (i, &e) in c.channel.eta.iter().enumerate() {
        if e != 1.0 {
            state = state.apply_loss(i, e)?;
        }
    }
    Ok(state)
}

fn validate(c: &ScenarioConfig) -> Result<()> {
    let n = c.source.n_modes();
    match &c.source {
        SourceConfig::Epr { v_s, v_a } => {
            if !(v_s.is_finite() && v_a.is_finite() && *v_s > 0.0 && *v_a > 0.0) {
                return Err(cfg_err("source.v_s and source.v_a must be positive"));
            }
        }
        SourceConfig::Tmsv { squeezing_db } | SourceConfig::Ghz { squeezing_db, .. } => {
            if !(squeezing_db.is_finite() && *squeezing_db >= 0.0) {
                return Err(cfg_err(format!(
                    "source.squeezing_db must be a non-negative magnitude, got {squeezing_db}"
                )));
            }
        }
        SourceConfig::Vacuum { .. } => {}
    }
    if n == 0 || n > MAX_GHZ_MODES {
        return Err(cfg_err(format!("source.modes must be in 1..={MAX_GHZ_MODES}, got {n}")));
    }
    if matches!(c.source, SourceConfig::Ghz { .. }) && n < 2 {
        return Err(cfg_err("source.modes must be at least 2 for a ghz source"));
    }
    if c.channel.eta.len() > n {
        return Err(cfg_err(format!(
            "channel.eta has {} entries for {n} modes",
            c.channel.eta.len()
        )));
    }
    for (i, e) in c.channel.eta.iter().enumerate() {
        if !(0.0..=1.0).contains(e) {
            return Err(cfg_err(format!("channel.eta[{i}] = {e} is outside [0, 1]")));
        }
    }
    for (k, p) in c.projections.iter().enumerate() {
        if p.mode >= n {
            return Err(cfg_err(format!("projection[{k}].mode = {} but the source has {n} modes", p.mode)));
        }
        if c.projections[..k].iter().any(|q| q.mode == p.mode) {
            return Err(cfg_err(format!("projection[{k}].mode = {} is measured twice", p.mode)));
        }
        if !p.angle.is_finite() || !p.alpha.is_finite() {
            return Err(cfg_err(format!("projection[{k}].angle and alpha must be finite")));
        }
        if !(p.delta >= 0.0) {
            return Err(cfg_err(format!("projection[{k}].delta must be >= 0, got {}", p.delta)));
        }
        if p.delta != 0.0 && k + 1 != c.projections.len() {
            return Err(cfg_err(format!(
                "projection[{k}] has a finite window; only the last projection may"
            )));
        }
    }
    if c.projections.len() >= n {
        return Err(cfg_err("every mode is measured; at least one must remain"));
    }
    if let Some(s) = c.analysis.station {
        if s >= n || c.projections.iter().any(|p| p.mode == s) {
            return Err(cfg_err(format!("analysis.station = {s} is not an unmeasured mode")));
        }
    }
    if !(c.analysis.grid_bounds.is_finite() && c.analysis.grid_bounds > 0.0) {
        return Err(cfg_err("analysis.grid_bounds must be positive"));
    }
    if c.analysis.grid_points < 2 {
        return Err(cfg_err("analysis.grid_points must be at least 2"));
    }
    if c.analysis.wigner && c.output.table.is_none() {
        return Err(cfg_err("analysis.wigner needs an output path (--out or output.table)"));
    }
    if let Some(s) = &c.sweep {
        if s.steps == 0 || !s.start.is_finite() || !s.stop.is_finite() {
            return Err(cfg_err("sweep needs finite start/stop and steps >= 1"));
        }
        let needs_projection = matches!(s.parameter, SweepParameter::Delta | SweepParameter::Alpha);
        if needs_projection && c.projections.is_empty() {
            return Err(cfg_err(format!(
                "sweep.parameter = \"{}\" needs a projection to act on",
                s.parameter.column()
            )));
        }
        let needs_mode = match s.parameter {
            SweepParameter::EtaA => 1,
            SweepParameter::EtaB => 2,
            _ => 0,
        };
        if n < needs_mode {
            return Err(cfg_err(format!("sweep.parameter = \"{}\" needs {needs_mode} modes", s.parameter.column())));
        }
    }
    if let Some(d) = &c.displace {
        if d.alphas.is_empty() || d.alphas.iter().any(|a| !a.is_finite()) {
            return Err(cfg_err("displace.alphas must be a non-empty list of finite values"));
        }
        if d.steps == 0 || !(d.db_start >= 0.0) || !(d.db_stop >= 0.0) || !d.db_stop.is_finite() {
            return Err(cfg_err("displace needs non-negative finite dB bounds and steps >= 1"));
        }
    }
    let mc = &c.montecarlo;
    if mc.shots == 0 {
        return Err(cfg_err("montecarlo.shots must be positive"));
    }
    if mc.angles.is_empty() || mc.angles.iter().any(|a| !a.is_finite()) {
        return Err(cfg_err("montecarlo.angles must be a non-empty list of finite angles"));
    }
    build_state(c).map_err(|e| cfg_err(format!("source/channel: {e}")))?;
    Ok(())
}

/// Sets one sweep coordinate on a copy of the configuration.
pub(crate) fn set_sweep_value(c: &mut ScenarioConfig, p: SweepParameter, v: f64) -> Result<()> {
    let n = c.source.n_modes();
    let mut set_eta = |mode: usize| {
        if c.channel.eta.len() <= mode {
            c.channel.eta.resize(n.max(mode + 1), 1.0);
        }
        c.channel.eta[mode] = v;
    };
    match p {
        SweepParameter::EtaA => set_eta(0),
        SweepParameter::EtaB => set_eta(1),
        SweepParameter::Delta => c.projections.last_mut().expect("validated").delta = v,
        SweepParameter::Alpha => c.projections.last_mut().expect("validated").alpha = v,
        SweepParameter::SourceDb => c.source.set_db(v)?,
    }
    Ok(())
}

/// `r` for a dB magnitude.
pub(crate) fn db_to_r(db: f64) -> f64 {
    db * LN_10 / 20.0
}
