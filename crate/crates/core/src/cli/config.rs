//! Flat `key = value` experiment configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fas::{CoarseTolerance, FasConfig, OUTSIDE_COARSE_STEP};
use crate::fem::{CoefficientModel, ExactSolution};
use crate::neural::TrainingConfig;
use crate::sampling::SampleSpec;
use crate::surrogate::StudySettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseOp {
    True,
    Outside,
    Inside,
}

impl CoarseOp {
    pub fn name(self) -> &'static str {
        match self {
            CoarseOp::True => "true",
            CoarseOp::Outside => "outside",
            CoarseOp::Inside => "inside",
        }
    }
}

impl FromStr for CoarseOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(CoarseOp::True),
            "outside" => Ok(CoarseOp::Outside),
            "inside" => Ok(CoarseOp::Inside),
            _ => Err(Error::InvalidConfig(format!(
                "unknown coarse operator '{s}' (expected true, outside or inside)"
            ))),
        }
    }
}

impl FromStr for CoarseTolerance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative" => Ok(CoarseTolerance::Relative),
            "absolute" => Ok(CoarseTolerance::Absolute),
            _ => Err(Error::InvalidConfig(format!(
                "unknown coarse tolerance '{s}' (expected relative or absolute)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subdomains_per_side: usize,
    pub ratio: usize,
    pub coefficient: CoefficientModel,
    pub exact_solution: ExactSolution,
    pub coarse_op: CoarseOp,

    pub tau: f64,
    pub fine_gmres_tol: f64,
    pub fine_newton_steps: usize,
    pub fine_newton_tol: f64,
    pub fine_gmres_max_iter: usize,
    pub coarse_gmres_tol: f64,
    /// Unset means 0.1, or 1e-4 for outside-trained networks.
    pub coarse_step: Option<f64>,
    pub coarse_gmres_max_iter: usize,
    pub coarse_newton_max: usize,
    pub coarse_newton_tol: f64,
    pub coarse_tolerance: CoarseTolerance,
    pub max_cycles: usize,
    pub tol: f64,

    pub box_half_width: f64,
    pub ball_radius: f64,
    pub box_draws: usize,
    pub ball_draws: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub train_fraction: f64,
    pub test_interval: usize,
    pub learning_rate: f64,

    pub eval_box_draws: usize,
    pub eval_ball_draws: usize,
    pub study_ratios: Vec<usize>,
    pub study_global_sides: Vec<usize>,

    /// Seed of the initial-guess perturbation.
    pub seed: u64,
    /// Unset means derived from `seed`.
    pub training_seed: Option<u64>,
    pub eval_seed: Option<u64>,

    pub model_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let fas = FasConfig::default();
        let training = TrainingConfig::default();
        Self {
            subdomains_per_side: 2,
            ratio: 2,
            coefficient: CoefficientModel::OnePlusUSquared,
            exact_solution: ExactSolution::Biquartic,
            coarse_op: CoarseOp::True,
            tau: fas.tau,
            fine_gmres_tol: fas.fine_gmres_tol,
            fine_newton_steps: fas.fine_newton_steps,
            fine_newton_tol: fas.fine_newton_tol,
            fine_gmres_max_iter: fas.fine_gmres_max_iter,
            coarse_gmres_tol: fas.coarse_gmres_tol,
            coarse_step: None,
            coarse_gmres_max_iter: fas.coarse_gmres_max_iter,
            coarse_newton_max: fas.coarse_newton_max,
            coarse_newton_tol: fas.coarse_newton_tol,
            coarse_tolerance: fas.coarse_tolerance,
            max_cycles: fas.max_cycles,
            tol: fas.tol,
            box_half_width: 0.05,
            ball_radius: 0.005,
            box_draws: 10,
            ball_draws: 50,
            epochs: training.epochs,
            batch_size: training.batch_size,
            train_fraction: training.train_fraction,
            test_interval: training.test_interval,
            learning_rate: training.learning_rate,
            eval_box_draws: 10,
            eval_ball_draws: 10,
            study_ratios: vec![2, 4, 8],
            study_global_sides: vec![2, 4, 8],
            seed: 0,
            training_seed: None,
            eval_seed: None,
            model_dir: None,
            out_dir: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse value '{value}' for key '{key}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    let list = value
        .split(',')
        .map(|v| parse(key, v.trim()))
        .collect::<Result<Vec<usize>>>()?;
    if list.is_empty() {
        return Err(Error::InvalidConfig(format!("key '{key}' needs at least one value")));
    }
    Ok(list)
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value, got '{raw}'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "subdomains_per_side" => self.subdomains_per_side = parse(key, v)?,
            "ratio" => self.ratio = parse(key, v)?,
            "coefficient" => self.coefficient = v.parse()?,
            "exact_solution" => self.exact_solution = v.parse()?,
            "coarse_op" => self.coarse_op = v.parse()?,
            "tau" => self.tau = parse(key, v)?,
            "fine_gmres_tol" => self.fine_gmres_tol = parse(key, v)?,
            "fine_newton_steps" => self.fine_newton_steps = parse(key, v)?,
            "fine_newton_tol" => self.fine_newton_tol = parse(key, v)?,
            "fine_gmres_max_iter" => self.fine_gmres_max_iter = parse(key, v)?,
            "coarse_gmres_tol" => self.coarse_gmres_tol = parse(key, v)?,
            "coarse_step" => self.coarse_step = Some(parse(key, v)?),
            "coarse_gmres_max_iter" => self.coarse_gmres_max_iter = parse(key, v)?,
            "coarse_newton_max" => self.coarse_newton_max = parse(key, v)?,
            "coarse_newton_tol" => self.coarse_newton_tol = parse(key, v)?,
            "coarse_tolerance" => self.coarse_tolerance = v.parse()?,
            "max_cycles" => self.max_cycles = parse(key, v)?,
            "tol" => self.tol = parse(key, v)?,
            "box_half_width" => self.box_half_width = parse(key, v)?,
            "ball_radius" => self.ball_radius = parse(key, v)?,
            "box_draws" => self.box_draws = parse(key, v)?,
            "ball_draws" => self.ball_draws = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "train_fraction" => self.train_fraction = parse(key, v)?,
            "test_interval" => self.test_interval = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "eval_box_draws" => self.eval_box_draws = parse(key, v)?,
            "eval_ball_draws" => self.eval_ball_draws = parse(key, v)?,
            "study_ratios" => self.study_ratios = parse_list(key, v)?,
            "study_global_sides" => self.study_global_sides = parse_list(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "training_seed" => self.training_seed = Some(parse(key, v)?),
            "eval_seed" => self.eval_seed = Some(parse(key, v)?),
            "model_dir" => self.model_dir = Some(PathBuf::from(v)),
            "out_dir" => self.out_dir = Some(PathBuf::from(v)),
            _ => return Err(Error::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.subdomains_per_side == 0 || self.ratio < 2 {
            return Err(Error::InvalidConfig(
                "subdomains_per_side must be >= 1 and ratio >= 2".into(),
            ));
        }
        if self.study_ratios.iter().any(|&r| r < 2) || self.study_global_sides.contains(&0) {
            return Err(Error::InvalidConfig("study ratios must be >= 2 and sides >= 1".into()));
        }
        if self.eval_box_draws == 0 || self.eval_ball_draws == 0 {
            return Err(Error::InvalidConfig("evaluation draw counts must be >= 1".into()));
        }
        self.fas_config().validate()?;
        self.sample_spec()?;
        self.training_config().validate()
    }

    pub fn fas_config(&self) -> FasConfig {
        let default_step = match self.coarse_op {
            CoarseOp::Outside => OUTSIDE_COARSE_STEP,
            _ => FasConfig::default().coarse_step,
        };
        FasConfig {
            tau: self.tau,
            fine_gmres_tol: self.fine_gmres_tol,
            fine_newton_steps: self.fine_newton_steps,
            fine_newton_tol: self.fine_newton_tol,
            fine_gmres_max_iter: self.fine_gmres_max_iter,
            coarse_gmres_tol: self.coarse_gmres_tol,
            coarse_step: self.coarse_step.unwrap_or(default_step),
            coarse_gmres_max_iter: self.coarse_gmres_max_iter,
            coarse_newton_max: self.coarse_newton_max,
            coarse_newton_tol: self.coarse_newton_tol,
            coarse_tolerance: self.coarse_tolerance,
            max_cycles: self.max_cycles,
            tol: self.tol,
        }
    }

    pub fn sample_spec(&self) -> Result<SampleSpec> {
        SampleSpec::new(self.box_half_width, self.ball_radius, self.box_draws, self.ball_draws)
    }

    pub fn training_seed(&self) -> u64 {
        self.training_seed.unwrap_or(self.seed.wrapping_add(1))
    }

    pub fn eval_seed(&self) -> u64 {
        self.eval_seed.unwrap_or(self.seed.wrapping_add(2))
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.training_seed(),
            train_fraction: self.train_fraction,
            test_interval: self.test_interval,
            learning_rate: self.learning_rate,
        }
    }

    pub fn study_settings(&self) -> StudySettings {
        StudySettings {
            coefficient: self.coefficient,
            box_draws: self.box_draws,
            ball_draws: self.ball_draws,
            eval_box: self.eval_box_draws,
            eval_ball: self.eval_ball_draws,
            training: self.training_config(),
            eval_seed: self.eval_seed(),
        }
    }
}
