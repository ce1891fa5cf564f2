//! Run configuration: `key = value` lines, `#` comments, later settings win.

use std::path::{Path, PathBuf};

use winpred_core::ensemble::ModelConfig;
use winpred_core::model::ModelTag;
use winpred_core::synth::SynthConfig;
use winpred_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub model_dir: PathBuf,
    pub out_dir: PathBuf,
    pub test_fraction: f64,
    /// Root seed for the split, every model and the generator.
    pub seed: u64,
    pub max_missing_players: usize,
    pub model: ModelTag,
    pub model_cfg: ModelConfig,
    pub minutes: Vec<u32>,
    pub curve_models: Vec<ModelTag>,
    pub duration_bucket: u32,
    pub cv_lambdas: Vec<f64>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: PathBuf::from("data"),
            model_dir: PathBuf::from("models"),
            out_dir: PathBuf::from("out"),
            test_fraction: 0.1,
            seed: 0,
            max_missing_players: 2,
            model: ModelTag::Lr,
            model_cfg: ModelConfig::default(),
            minutes: (1..=10).map(|k| 5 * k).collect(),
            curve_models: vec![ModelTag::Lr, ModelTag::Asm, ModelTag::Concat, ModelTag::Stacked, ModelTag::Timebank],
            duration_bucket: 5,
            cv_lambdas: vec![1e-6, 1e-4, 1e-2, 1.0],
            synth: SynthConfig::default(),
        }
    }
}

fn usage(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| usage(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(usage(format!("invalid value {value:?} for {key}"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.model_cfg;
        match key {
            "data_dir" => self.data_dir = value.into(),
            "model_dir" => self.model_dir = value.into(),
            "out_dir" => self.out_dir = value.into(),
            "test_fraction" => self.test_fraction = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "max_missing_players" => self.max_missing_players = parse(key, value)?,
            "model" => self.model = value.parse()?,
            "features" => m.features = value.parse()?,
            "lambda" => m.train.lambda = parse(key, value)?,
            "learning_rate" => m.train.learning_rate = parse(key, value)?,
            "max_epochs" => m.train.max_epochs = parse(key, value)?,
            "tolerance" => m.train.tolerance = parse(key, value)?,
            "standardize" => m.train.standardize = parse_bool(key, value)?,
            "hidden" => m.hidden = parse(key, value)?,
            "activation" => m.activation = value.parse()?,
            "window" => m.window = parse(key, value)?,
            "bins" => m.n_bins = parse(key, value)?,
            "binning" => m.binning = value.parse()?,
            "alpha" => m.alpha = parse(key, value)?,
            "folds" => m.folds = parse(key, value)?,
            "out_of_fold" => m.out_of_fold = parse_bool(key, value)?,
            "bank_minutes" => m.bank_minutes = parse_list(key, value)?,
            "min_windows" => m.min_windows = parse(key, value)?,
            "symmetric_rivals" => m.symmetric_rivals = parse_bool(key, value)?,
            "minutes" => self.minutes = parse_list(key, value)?,
            "curve_models" => {
                self.curve_models = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "duration_bucket" => self.duration_bucket = parse(key, value)?,
            "cv_lambdas" => self.cv_lambdas = parse_list(key, value)?,
            _ => match key.strip_prefix("synth.") {
                Some("seed") => return Err(usage("the generator uses the root seed; set `seed` instead".into())),
                Some(k) => self.synth.set(k, value)?,
                None => return Err(usage(format!("unknown setting {key:?}"))),
            },
        }
        Ok(())
    }

    /// Applies `key = value` lines.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{origin}:{}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| usage(format!("{origin}:{}: {}", n + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Propagates the root seed and checks cross-field constraints.
    pub fn finish(mut self) -> Result<Self> {
        self.model_cfg.train.seed = self.seed;
        self.synth.seed = self.seed;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(usage(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction)));
        }
        self.model_cfg.train.validate()?;
        if self.minutes.is_empty() {
            return Err(usage("minutes must not be empty".into()));
        }
        if self.curve_models.is_empty() {
            return Err(usage("curve_models must not be empty".into()));
        }
        Ok(self)
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m) => m.clone(),
        other => other.to_string(),
    }
}
