//! `key = value` experiment configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::channels::DDMode;
use crate::convention::Convention;
use crate::entanglement::SolverSettings;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Table1,
    Table2,
    Flow,
    Sweep,
    ErSingle,
    Selfcheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Flow => "flow",
            Experiment::Sweep => "sweep",
            Experiment::ErSingle => "er",
            Experiment::Selfcheck => "check",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "table1" => Experiment::Table1,
            "table2" => Experiment::Table2,
            "flow" => Experiment::Flow,
            "sweep" => Experiment::Sweep,
            "er" | "er_single" => Experiment::ErSingle,
            "check" | "selfcheck" => Experiment::Selfcheck,
            other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionChoice {
    Paper,
    Oracle,
    Both,
}

impl ConventionChoice {
    pub fn conventions(self) -> Vec<Convention> {
        match self {
            ConventionChoice::Paper => vec![Convention::Paper],
            ConventionChoice::Oracle => vec![Convention::Oracle],
            ConventionChoice::Both => Convention::ALL.to_vec(),
        }
    }
}

impl FromStr for ConventionChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "paper" => ConventionChoice::Paper,
            "oracle" => ConventionChoice::Oracle,
            "both" => ConventionChoice::Both,
            other => return Err(Error::Config(format!("unknown convention `{other}`"))),
        })
    }
}

/// Input state for the single-state E_R experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// `F|Φ+⟩⟨Φ+| + (1 − F) I/4` with `F = state_param`.
    WernerPaper,
    /// Depolarizing output with `p = state_param`.
    WernerChannel,
    /// Bell weights from `state_coefficients`.
    Bell,
    /// Φ+ through amplitude damping with `γ = state_param`.
    Damping,
}

impl FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "werner_paper" => StateKind::WernerPaper,
            "werner_channel" => StateKind::WernerChannel,
            "bell" => StateKind::Bell,
            "damping" => StateKind::Damping,
            other => return Err(Error::Config(format!("unknown state `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub convention: ConventionChoice,
    /// Depolarizing parameter.
    pub p: f64,
    /// Compressed depolarizing parameter used when `dd_noise_density` is unset.
    pub p_prime: f64,
    /// Per-pair E_R the shaped row is calibrated to.
    pub pes_target_er: f64,
    /// Amplitude-damping strength for the damping benchmark.
    pub gamma: f64,
    pub n_pairs: usize,
    pub rounds: usize,
    pub runs: usize,
    pub seed: u64,
    pub batches: usize,
    #[serde(skip)]
    pub workers: Option<usize>,
    pub dd_mode: DDMode,
    pub dd_pulse_count: usize,
    pub dd_frequency: f64,
    /// `γ_sd`; when unset it is derived from `p_prime`.
    pub dd_noise_density: Option<f64>,
    pub dd_frame_corrected: bool,
    pub use_u_pre: bool,
    pub f0: f64,
    pub t_end: f64,
    pub step: f64,
    pub rotation_grid: usize,
    pub tie_tolerance: f64,
    /// Damping strength for the sliced suppression check.
    pub damping_gamma: f64,
    /// Multiplier on the damping strength under decoupling.
    pub damping_compression: f64,
    pub slices: usize,
    pub slice_samples: usize,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    pub state: StateKind,
    pub state_param: f64,
    pub state_coefficients: [f64; 4],
    pub solver: SolverSettings,
    /// Not echoed into results, so output does not depend on its location.
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Table1,
            convention: ConventionChoice::Both,
            p: 0.2,
            p_prime: 0.17,
            pes_target_er: 0.187,
            gamma: 0.3,
            n_pairs: 4,
            rounds: 2,
            runs: 10_000,
            seed: 2024,
            batches: 20,
            workers: None,
            dd_mode: DDMode::Parametric,
            dd_pulse_count: 4,
            dd_frequency: 1.0,
            dd_noise_density: None,
            dd_frame_corrected: false,
            use_u_pre: false,
            f0: 1.0,
            t_end: 1.0,
            step: 0.05,
            rotation_grid: 8,
            tie_tolerance: 1e-4,
            damping_gamma: 0.5,
            damping_compression: 0.85,
            slices: 256,
            slice_samples: 8,
            sweep_min: 0.02,
            sweep_max: 0.4,
            sweep_points: 20,
            state: StateKind::WernerPaper,
            state_param: 0.83,
            state_coefficients: [0.7, 0.1, 0.1, 0.1],
            solver: SolverSettings::default(),
            out_dir: PathBuf::from("results"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true/false, got `{value}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = parse(key, v)?,
            "convention" => self.convention = parse(key, v)?,
            "p" => self.p = parse(key, v)?,
            "p_prime" => self.p_prime = parse(key, v)?,
            "pes_target_er" => self.pes_target_er = parse(key, v)?,
            "gamma" => self.gamma = parse(key, v)?,
            "n_pairs" => self.n_pairs = parse(key, v)?,
            "rounds" => self.rounds = parse(key, v)?,
            "runs" => self.runs = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "batches" => self.batches = parse(key, v)?,
            "workers" => self.workers = Some(parse(key, v)?),
            "dd_mode" => {
                self.dd_mode = match v {
                    "parametric" => DDMode::Parametric,
                    "pulse_average" => DDMode::PulseAverage,
                    _ => return Err(Error::Config(format!("`dd_mode`: unknown mode `{v}`"))),
                }
            }
            "dd_pulse_count" => self.dd_pulse_count = parse(key, v)?,
            "dd_frequency" => self.dd_frequency = parse(key, v)?,
            "dd_noise_density" => self.dd_noise_density = Some(parse(key, v)?),
            "dd_frame_corrected" => self.dd_frame_corrected = parse_bool(key, v)?,
            "use_u_pre" => self.use_u_pre = parse_bool(key, v)?,
            "f0" => self.f0 = parse(key, v)?,
            "t_end" => self.t_end = parse(key, v)?,
            "step" => self.step = parse(key, v)?,
            "rotation_grid" => self.rotation_grid = parse(key, v)?,
            "tie_tolerance" => self.tie_tolerance = parse(key, v)?,
            "damping_gamma" => self.damping_gamma = parse(key, v)?,
            "damping_compression" => self.damping_compression = parse(key, v)?,
            "slices" => self.slices = parse(key, v)?,
            "slice_samples" => self.slice_samples = parse(key, v)?,
            "sweep_min" => self.sweep_min = parse(key, v)?,
            "sweep_max" => self.sweep_max = parse(key, v)?,
            "sweep_points" => self.sweep_points = parse(key, v)?,
            "state" => self.state = parse(key, v)?,
            "state_param" => self.state_param = parse(key, v)?,
            "state_coefficients" => {
                let parts: Vec<f64> = v.split(',').map(|x| parse(key, x.trim())).collect::<Result<_>>()?;
                self.state_coefficients = parts
                    .try_into()
                    .map_err(|_| Error::Config("`state_coefficients`: need four values".into()))?;
            }
            "solver_ansatz_size" => self.solver.ansatz_size = parse(key, v)?,
            "solver_max_iterations" => self.solver.max_iterations = parse(key, v)?,
            "solver_tolerance" => self.solver.tolerance = parse(key, v)?,
            "solver_seed" => self.solver.seed = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let unit = |name: &str, x: f64, lo: f64, hi: f64| -> Result<()> {
            if !(x >= lo && x <= hi) {
                return Err(Error::Config(format!("`{name}` = {x} outside [{lo}, {hi}]")));
            }
            Ok(())
        };
        unit("p", self.p, 0.0, 0.75)?;
        unit("p_prime", self.p_prime, 0.0, 0.75)?;
        unit("pes_target_er", self.pes_target_er, 1e-9, 1.0)?;
        unit("gamma", self.gamma, 0.0, 1.0)?;
        unit("damping_gamma", self.damping_gamma, 0.0, 1.0)?;
        unit("damping_compression", self.damping_compression, 0.0, 1.0)?;
        unit("f0", self.f0, 1e-12, 1.0)?;
        unit("sweep_min", self.sweep_min, 0.0, 0.75)?;
        unit("sweep_max", self.sweep_max, self.sweep_min, 0.75)?;
        if self.n_pairs == 0 || !self.n_pairs.is_power_of_two() {
            return fail(format!("`n_pairs` = {} must be a power of two", self.n_pairs));
        }
        if self.rounds > self.n_pairs.trailing_zeros() as usize {
            return fail(format!(
                "`rounds` = {} too many for {} pairs",
                self.rounds, self.n_pairs
            ));
        }
        if self.runs == 0 || self.batches == 0 {
            return fail("`runs` and `batches` must be >= 1".into());
        }
        if self.workers == Some(0) {
            return fail("`workers` must be >= 1".into());
        }
        if self.dd_pulse_count == 0 || !(self.dd_frequency > 0.0) {
            return fail("`dd_pulse_count` >= 1 and `dd_frequency` > 0 required".into());
        }
        if let Some(g) = self.dd_noise_density {
            if !(g >= 0.0) {
                return fail(format!("`dd_noise_density` = {g} must be >= 0"));
            }
        }
        if !(self.t_end > 0.0) || !(self.step > 0.0) {
            return fail("`t_end` and `step` must be > 0".into());
        }
        if self.rotation_grid == 0 || !(self.tie_tolerance >= 0.0) {
            return fail("`rotation_grid` >= 1 and `tie_tolerance` >= 0 required".into());
        }
        if self.slices == 0 || self.slice_samples == 0 || self.slice_samples > self.slices {
            return fail("need 1 <= slice_samples <= slices".into());
        }
        if self.sweep_points < 2 {
            return fail("`sweep_points` must be >= 2".into());
        }
        self.solver.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# depolarizing run\nexperiment = table1\nconvention = oracle  # explicit\np = 0.25\nruns=500\nuse_u_pre = true\nstate_coefficients = 0.4, 0.3, 0.2, 0.1\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::Table1);
        assert_eq!(cfg.convention, ConventionChoice::Oracle);
        assert_eq!(cfg.p, 0.25);
        assert_eq!(cfg.runs, 500);
        assert!(cfg.use_u_pre);
        assert_eq!(cfg.state_coefficients, [0.4, 0.3, 0.2, 0.1]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "p = 0.9",
            "n_pairs = 6",
            "rounds = 5",
            "nonsense = 1",
            "p 0.2",
            "convention = maybe",
            "runs = -3",
            "dd_noise_density = -1",
            "state_coefficients = 1, 0",
        ] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }
}
