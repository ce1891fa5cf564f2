//! Prior-only, sequence-only and combined predictors, plus the per-minute model bank.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asm::{fit_asm, TransitionModel, DEFAULT_ALPHA};
use crate::classifiers::{logit, train_lr, train_mlp, Activation, GroupedDesign, LinearModel, MlpModel, TrainConfig};
use crate::data::MatchRecord;
use crate::error::{Error, Result};
use crate::prior::{FeatureSet, PriorPipeline};
use crate::realtime::{
    discretize, fit_bins, slice_window, window_ends, Binning, DiffSeries, DiscreteWindow, DEFAULT_BINS,
    DEFAULT_WINDOW,
};
use crate::training::{AccessLog, FeatureEnv, MatchContext, TrainingData};

/// Hyperparameters shared by every model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub train: TrainConfig,
    pub features: FeatureSet,
    pub hidden: usize,
    pub activation: Activation,
    pub window: usize,
    pub n_bins: usize,
    pub binning: Binning,
    pub alpha: f64,
    pub folds: usize,
    /// Stacker inputs from base models that did not see the sample.
    pub out_of_fold: bool,
    pub bank_minutes: Vec<u32>,
    pub min_windows: usize,
    pub symmetric_rivals: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            train: TrainConfig::default(),
            features: FeatureSet::All,
            hidden: 64,
            activation: Activation::Sigmoid,
            window: DEFAULT_WINDOW,
            n_bins: DEFAULT_BINS,
            binning: Binning::Quantile,
            alpha: DEFAULT_ALPHA,
            folds: 10,
            out_of_fold: true,
            bank_minutes: (1..=10).map(|k| 5 * k).collect(),
            min_windows: 50,
            symmetric_rivals: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PriorClassifier {
    Lr(LinearModel),
    Nn(MlpModel),
}

/// Pre-match model: fitted feature pipeline, chosen columns and a classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorPredictor {
    pub pipeline: PriorPipeline,
    pub features: FeatureSet,
    pub columns: Vec<usize>,
    pub classifier: PriorClassifier,
}

fn select_columns(x: &Array2<f64>, columns: &[usize]) -> Array2<f64> {
    if columns.len() == x.ncols() && columns.iter().enumerate().all(|(i, &c)| i == c) {
        x.clone()
    } else {
        x.select(Axis(1), columns)
    }
}

impl PriorPredictor {
    /// Fits the feature pipeline and a classifier on the training matches.
    pub fn fit(train: &TrainingData<'_>, cfg: &ModelConfig, neural: bool) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("no training matches".into()));
        }
        let env = train.env();
        let pipeline = PriorPipeline::fit(train.matches(), env.catalog, env.profiles, cfg.symmetric_rivals);
        let columns = cfg.features.columns(&pipeline.layout);
        let full = pipeline.training_matrix(train.matches(), env.catalog, env.profiles)?;
        let x = select_columns(&full, &columns);
        drop(full);
        let y: Vec<f64> = train.matches().map(MatchRecord::label).collect();
        let classifier = if neural {
            PriorClassifier::Nn(train_mlp(&x, &y, &cfg.train, cfg.hidden, cfg.activation)?)
        } else {
            PriorClassifier::Lr(train_lr(&x, &y, &cfg.train)?)
        };
        Ok(PriorPredictor {
            pipeline,
            features: cfg.features,
            columns,
            classifier,
        })
    }

    /// Selected prior feature values for one match.
    pub fn features(&self, m: &MatchRecord, env: FeatureEnv<'_>) -> Result<Vec<f64>> {
        let v = self.pipeline.vector(m, env.catalog, env.profiles)?;
        Ok(self.columns.iter().map(|&c| v[c]).collect())
    }

    pub fn probability(&self, m: &MatchRecord, env: FeatureEnv<'_>) -> Result<f64> {
        let x = self.features(m, env)?;
        match &self.classifier {
            PriorClassifier::Lr(lr) => lr.probability(&x),
            PriorClassifier::Nn(nn) => nn.probability(&x),
        }
    }

    /// Selected-feature matrix for matches the pipeline was fit on.
    fn training_matrix<'a, I>(&self, matches: I, env: FeatureEnv<'_>) -> Result<Array2<f64>>
    where
        I: IntoIterator<Item = &'a MatchRecord>,
        I::IntoIter: Clone,
    {
        let full = self.pipeline.training_matrix(matches, env.catalog, env.profiles)?;
        Ok(select_columns(&full, &self.columns))
    }
}

/// The sequence model together with the window length it scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsmPredictor {
    pub model: TransitionModel,
    pub window: usize,
}

impl AsmPredictor {
    /// Fits bin edges and transition matrices on the training replays.
    pub fn fit(train: &TrainingData<'_>, cfg: &ModelConfig) -> Result<Self> {
        if train.replays().next().is_none() {
            return Err(Error::InvalidArgument("no training matches with replays".into()));
        }
        let edges = fit_bins(train.replays().map(|(_, s)| s), cfg.n_bins, cfg.binning)?;
        let discrete: Vec<_> = train
            .replays()
            .map(|(m, s)| (discretize(s, &edges), m.label() == 1.0))
            .collect();
        let model = fit_asm(discrete.iter().map(|(s, y)| (s, *y)), edges, cfg.alpha)?;
        Ok(AsmPredictor {
            model,
            window: cfg.window,
        })
    }

    fn discrete_window(&self, s: &DiffSeries, t: u32) -> Option<DiscreteWindow> {
        if !s.covers_window(t, self.window) {
            return None;
        }
        let w = slice_window(s, t, self.window).ok()?;
        let edges = &self.model.edges;
        Some(DiscreteWindow {
            end_minute: t,
            channels: crate::realtime::Channel::ALL.map(|c| {
                w.channels[c.index()].iter().map(|&v| edges.bin(c, v)).collect()
            }),
        })
    }

    /// Posterior for the window ending at `t`, if the series covers it.
    pub fn posterior_at(&self, s: &DiffSeries, t: u32) -> Option<f64> {
        self.discrete_window(s, t).map(|w| self.model.posterior(&w))
    }

    /// Posterior when a window exists, otherwise the outcome prior.
    pub fn probability(&self, ctx: &MatchContext<'_>, t: u32) -> f64 {
        ctx.series
            .as_ref()
            .and_then(|s| self.posterior_at(s, t))
            .unwrap_or(self.model.prior)
    }
}

fn window_features(s: &DiffSeries, t: u32, len: usize) -> Option<Vec<f64>> {
    if !s.covers_window(t, len) {
        return None;
    }
    slice_window(s, t, len).ok().map(|w| w.features())
}

/// Prior features of each replay match, stacked with one window per sample.
/// `minute` restricts samples to windows ending at that minute.
fn concat_design(
    prior: &PriorPredictor,
    train: &TrainingData<'_>,
    window: usize,
    minute: Option<u32>,
) -> Result<(GroupedDesign, Vec<f64>)> {
    let mut matches = Vec::new();
    let mut own = Vec::new();
    let mut group = Vec::new();
    let mut y = Vec::new();
    for (m, s) in train.replays() {
        let ends: Vec<u32> = match minute {
            Some(t) if t >= window as u32 && t <= s.minutes() => vec![t],
            Some(_) => vec![],
            None => window_ends(s.minutes(), window).collect(),
        };
        if ends.is_empty() {
            continue;
        }
        for t in ends {
            own.extend(window_features(s, t, window).expect("window inside series"));
            group.push(matches.len());
            y.push(m.label());
        }
        matches.push(m);
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("no training windows".into()));
    }
    let shared = prior.training_matrix(matches.iter().copied(), train.env())?;
    let own = Array2::from_shape_vec((y.len(), 3 * window), own).expect("window rows");
    Ok((GroupedDesign::new(shared, own, group), y))
}

/// Prior features concatenated with the preceding window's continuous diffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatModel {
    pub prior: PriorPredictor,
    pub model: LinearModel,
    pub window: usize,
}

impl ConcatModel {
    pub fn fit(train: &TrainingData<'_>, cfg: &ModelConfig) -> Result<Self> {
        if train.replay_count() == 0 {
            return Err(Error::InvalidArgument("no training matches with replays".into()));
        }
        let prior = PriorPredictor::fit(train, cfg, false)?;
        let (x, y) = concat_design(&prior, train, cfg.window, None)?;
        let model = train_lr(&x, &y, &cfg.train)?;
        Ok(ConcatModel {
            prior,
            model,
            window: cfg.window,
        })
    }

    fn combined(&self, lr: &LinearModel, ctx: &MatchContext<'_>, t: u32, env: FeatureEnv<'_>) -> Result<Option<f64>> {
        let Some(w) = ctx.series.as_ref().and_then(|s| window_features(s, t, self.window)) else {
            return Ok(None);
        };
        let mut x = self.prior.features(ctx.record, env)?;
        x.extend(w);
        lr.probability(&x).map(Some)
    }

    /// Combined prediction when a window ending at `t` exists, prior-only otherwise.
    pub fn probability(&self, ctx: &MatchContext<'_>, t: u32, env: FeatureEnv<'_>) -> Result<f64> {
        match self.combined(&self.model, ctx, t, env)? {
            Some(p) => Ok(p),
            None => self.prior.probability(ctx.record, env),
        }
    }
}

/// Which base models produced each stacker sample.
#[derive(Debug, Clone, Default)]
pub struct StackAudit {
    /// Match ids each fold's base models were fit on.
    pub fitted_on: Vec<BTreeSet<String>>,
    /// (match id, fold whose base models scored it) per held-out match.
    pub scored_by: Vec<(String, usize)>,
}

impl StackAudit {
    /// True when no match was scored by base models that saw it.
    pub fn is_leak_free(&self) -> bool {
        self.scored_by
            .iter()
            .all(|(id, f)| self.fitted_on.get(*f).is_some_and(|seen| !seen.contains(id)))
    }
}

/// Logistic regression over the logits of the prior model and the sequence posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub prior: PriorPredictor,
    pub asm: AsmPredictor,
    pub stacker: LinearModel,
    pub out_of_fold: bool,
}

fn stack_inputs(p_prior: f64, p_asm: f64) -> [f64; 2] {
    [logit(p_prior), logit(p_asm)]
}

/// Assigns each of `n` rows to one of `k` folds after a seeded shuffle.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    fold
}

fn stack_samples(
    prior: &PriorPredictor,
    asm: &AsmPredictor,
    scored: &TrainingData<'_>,
    xs: &mut Vec<f64>,
    ys: &mut Vec<f64>,
) -> Result<()> {
    let env = scored.env();
    for (m, s) in scored.replays() {
        let pp = prior.probability(m, env)?;
        for t in window_ends(s.minutes(), asm.window) {
            let pa = asm.posterior_at(s, t).expect("window inside series");
            xs.extend(stack_inputs(pp, pa));
            ys.push(m.label());
        }
    }
    Ok(())
}

impl StackedModel {
    /// Trains the stacker on out-of-fold base predictions (or in-sample ones when
    /// `cfg.out_of_fold` is off), then refits both base models on all training matches.
    pub fn fit(train: &TrainingData<'_>, cfg: &ModelConfig) -> Result<(Self, StackAudit)> {
        if cfg.out_of_fold && cfg.folds < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", cfg.folds)));
        }
        if train.replay_count() == 0 {
            return Err(Error::InvalidArgument("no training matches with replays".into()));
        }
        let prior = PriorPredictor::fit(train, cfg, false)?;
        let asm = AsmPredictor::fit(train, cfg)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut audit = StackAudit::default();
        if cfg.out_of_fold {
            let fold = fold_assignment(train.len(), cfg.folds, cfg.train.seed);
            for f in 0..cfg.folds {
                let (held, kept): (Vec<usize>, Vec<usize>) = (0..train.len()).partition(|&i| fold[i] == f);
                if held.is_empty() {
                    continue;
                }
                let seen = AccessLog::new();
                let fold_train = train.subset_logged(&kept, &seen);
                let fold_prior = PriorPredictor::fit(&fold_train, cfg, false)?;
                let fold_asm = AsmPredictor::fit(&fold_train, cfg)?;
                let scored = train.subset(&held);
                stack_samples(&fold_prior, &fold_asm, &scored, &mut xs, &mut ys)?;
                audit.scored_by.extend(scored.ids().map(|id| (id.to_string(), audit.fitted_on.len())));
                audit.fitted_on.push(seen.ids());
            }
        } else {
            stack_samples(&prior, &asm, train, &mut xs, &mut ys)?;
        }
        let x = Array2::from_shape_vec((ys.len(), 2), xs).expect("two inputs per sample");
        let stacker = train_lr(&x, &ys, &cfg.train)?;
        Ok((
            StackedModel {
                prior,
                asm,
                stacker,
                out_of_fold: cfg.out_of_fold,
            },
            audit,
        ))
    }

    pub fn probability(&self, ctx: &MatchContext<'_>, t: u32, env: FeatureEnv<'_>) -> Result<f64> {
        let pp = self.prior.probability(ctx.record, env)?;
        match ctx.series.as_ref().and_then(|s| self.asm.posterior_at(s, t)) {
            Some(pa) => self.stacker.probability(&stack_inputs(pp, pa)),
            None => Ok(pp),
        }
    }
}

/// One concatenated-feature model per covered minute, each trained only on windows
/// ending at that minute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSpecificBank {
    pub minutes: Vec<u32>,
    pub models: BTreeMap<u32, LinearModel>,
    pub min_windows: usize,
    pub fallback: ConcatModel,
}

impl TimeSpecificBank {
    pub fn fit(train: &TrainingData<'_>, cfg: &ModelConfig) -> Result<Self> {
        let fallback = ConcatModel::fit(train, cfg)?;
        let mut minutes = cfg.bank_minutes.clone();
        minutes.sort_unstable();
        minutes.dedup();
        let mut models = BTreeMap::new();
        for &t in &minutes {
            let n = train
                .replays()
                .filter(|(_, s)| t >= cfg.window as u32 && s.minutes() >= t)
                .count();
            if n < cfg.min_windows.max(1) {
                continue;
            }
            let (x, y) = concat_design(&fallback.prior, train, cfg.window, Some(t))?;
            models.insert(t, train_lr(&x, &y, &cfg.train)?);
        }
        Ok(TimeSpecificBank {
            minutes,
            models,
            min_windows: cfg.min_windows,
            fallback,
        })
    }

    /// Covered minute whose model answers at `t`: the largest covered minute not after `t`.
    pub fn covering_minute(&self, t: u32) -> Option<u32> {
        self.minutes.iter().rev().find(|&&m| m <= t).copied()
    }

    pub fn probability(&self, ctx: &MatchContext<'_>, t: u32, env: FeatureEnv<'_>) -> Result<f64> {
        if let Some(lr) = self.covering_minute(t).and_then(|c| self.models.get(&c)) {
            if let Some(p) = self.fallback.combined(lr, ctx, t, env)? {
                return Ok(p);
            }
        }
        self.fallback.probability(ctx, t, env)
    }
}

/// Radiant win probability at every minute of one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrajectory {
    pub match_id: String,
    pub model: String,
    pub points: Vec<(u32, f64)>,
}

impl PredictionTrajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "minute,p_radiant")?;
        for (t, p) in &self.points {
            writeln!(w, "{t},{p}")?;
        }
        Ok(())
    }
}
