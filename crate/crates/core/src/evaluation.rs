//! Accuracy, cross-validated grids, feature ablation and accuracy-by-minute and
//! accuracy-by-duration curves, each exportable as CSV and as an aligned text table.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::classifiers::{train_lr, train_mlp, Activation};
use crate::data::MatchRecord;
use crate::ensemble::{fold_assignment, ModelConfig, PriorPredictor};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::prior::{FeatureSet, PriorPipeline};
use crate::training::{FeatureEnv, MatchContext, TrainingData};

/// Fraction of predictions on the winning side; `p == 0.5` counts as a Radiant pick.
pub fn accuracy(probabilities: &[f64], labels: &[f64]) -> f64 {
    assert_eq!(probabilities.len(), labels.len());
    if labels.is_empty() {
        return f64::NAN;
    }
    let hits = probabilities
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p >= 0.5) == (y == 1.0))
        .count();
    hits as f64 / labels.len() as f64
}

/// Accuracy and sample count. With `minute`, only matches live at that minute count.
pub fn evaluate_accuracy(
    model: &Model,
    test: &[MatchContext<'_>],
    env: FeatureEnv<'_>,
    minute: Option<u32>,
) -> Result<(f64, usize)> {
    let mut p = Vec::new();
    let mut y = Vec::new();
    for ctx in test {
        let t = match minute {
            Some(t) if !ctx.live_at(t) => continue,
            Some(t) => t,
            None => 0,
        };
        p.push(model.probability(ctx, t, env)?);
        y.push(ctx.record.label());
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("no matches to evaluate".into()));
    }
    Ok((accuracy(&p, &y), y.len()))
}

/// One hyperparameter setting of a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum GridCell {
    Lr { lambda: f64 },
    Nn { hidden: usize, activation: Activation, lambda: f64 },
}

impl GridCell {
    /// The hidden-size by activation grid, at one regularization strength.
    pub fn nn_grid(lambda: f64) -> Vec<GridCell> {
        let mut out = Vec::new();
        for hidden in [32, 64, 128] {
            for activation in Activation::ALL {
                out.push(GridCell::Nn {
                    hidden,
                    activation,
                    lambda,
                });
            }
        }
        out
    }

    pub fn lr_grid(lambdas: &[f64]) -> Vec<GridCell> {
        lambdas.iter().map(|&lambda| GridCell::Lr { lambda }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Mean held-out accuracy per cell, in grid order.
    pub cells: Vec<(GridCell, f64)>,
    pub best: usize,
    pub folds: usize,
}

impl CvReport {
    pub fn best_cell(&self) -> GridCell {
        self.cells[self.best].0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "model,lambda,hidden,activation,cv_accuracy")?;
        for (cell, acc) in &self.cells {
            match cell {
                GridCell::Lr { lambda } => writeln!(w, "lr,{lambda},,,{acc}")?,
                GridCell::Nn {
                    hidden,
                    activation,
                    lambda,
                } => writeln!(w, "nn,{lambda},{hidden},{},{acc}", activation.name())?,
            }
        }
        Ok(())
    }

    /// Hidden sizes as rows and activations as columns for network cells; one row per
    /// regularization strength for logistic regression cells.
    pub fn table(&self) -> String {
        let mut nn: BTreeMap<usize, BTreeMap<&str, f64>> = BTreeMap::new();
        let mut lr = Vec::new();
        for (cell, acc) in &self.cells {
            match cell {
                GridCell::Lr { lambda } => lr.push(vec![format!("{lambda:e}"), pct(*acc)]),
                GridCell::Nn {
                    hidden, activation, ..
                } => {
                    nn.entry(*hidden).or_default().insert(activation.name(), *acc);
                }
            }
        }
        let mut out = String::new();
        if !nn.is_empty() {
            let header: Vec<String> = std::iter::once("hidden".to_string())
                .chain(Activation::ALL.iter().map(|a| a.name().to_string()))
                .collect();
            let rows: Vec<Vec<String>> = nn
                .iter()
                .map(|(h, accs)| {
                    std::iter::once(h.to_string())
                        .chain(
                            Activation::ALL
                                .iter()
                                .map(|a| accs.get(a.name()).map_or("-".to_string(), |v| pct(*v))),
                        )
                        .collect()
                })
                .collect();
            out.push_str(&format_table(&header, &rows));
        }
        if !lr.is_empty() {
            out.push_str(&format_table(&["lambda".into(), "accuracy".into()], &lr));
        }
        out
    }
}

/// K-fold search over a grid on the training matches' prior feature matrix.
pub fn cross_validate(
    train: &TrainingData<'_>,
    grid: &[GridCell],
    folds: usize,
    cfg: &ModelConfig,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if train.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{} training matches cannot fill {folds} folds",
            train.len()
        )));
    }
    let env = train.env();
    let pipeline = PriorPipeline::fit(train.matches(), env.catalog, env.profiles, cfg.symmetric_rivals);
    let columns = cfg.features.columns(&pipeline.layout);
    let x = pipeline
        .training_matrix(train.matches(), env.catalog, env.profiles)?
        .select(Axis(1), &columns);
    let y: Vec<f64> = train.matches().map(MatchRecord::label).collect();
    let fold = fold_assignment(train.len(), folds, cfg.train.seed);
    let split = |f: usize| -> (Vec<usize>, Vec<usize>) { (0..y.len()).partition(|&i| fold[i] != f) };
    let mut cells = Vec::with_capacity(grid.len());
    for &cell in grid {
        let mut total = 0.0;
        for f in 0..folds {
            let (fit_idx, held_idx) = split(f);
            let xf = x.select(Axis(0), &fit_idx);
            let yf: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
            let xh = x.select(Axis(0), &held_idx);
            let yh: Vec<f64> = held_idx.iter().map(|&i| y[i]).collect();
            let p = cell_probabilities(cell, &xf, &yf, &xh, cfg)?;
            total += accuracy(&p, &yh);
        }
        cells.push((cell, total / folds as f64));
    }
    let best = cells
        .iter()
        .enumerate()
        .fold(0, |b, (i, (_, acc))| if *acc > cells[b].1 { i } else { b });
    Ok(CvReport { cells, best, folds })
}

fn cell_probabilities(
    cell: GridCell,
    x: &Array2<f64>,
    y: &[f64],
    held: &Array2<f64>,
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    match cell {
        GridCell::Lr { lambda } => {
            let tc = crate::classifiers::TrainConfig {
                lambda,
                ..cfg.train.clone()
            };
            train_lr(x, y, &tc)?.probabilities(held)
        }
        GridCell::Nn {
            hidden,
            activation,
            lambda,
        } => {
            let tc = crate::classifiers::TrainConfig {
                lambda,
                ..cfg.train.clone()
            };
            train_mlp(x, y, &tc, hidden, activation)?.probabilities(held)
        }
    }
}

/// Test accuracy per feature set, for logistic regression and the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<(FeatureSet, f64, f64)>,
}

impl AblationReport {
    pub fn get(&self, set: FeatureSet) -> Option<(f64, f64)> {
        self.rows.iter().find(|r| r.0 == set).map(|r| (r.1, r.2))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "features,lr,nn")?;
        for (set, lr, nn) in &self.rows {
            writeln!(w, "{},{lr},{nn}", set.name())?;
        }
        Ok(())
    }

    pub fn table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(s, lr, nn)| vec![s.name().to_string(), pct(*lr), pct(*nn)])
            .collect();
        format_table(&["features".into(), "LR".into(), "NN".into()], &rows)
    }
}

/// Trains both prior classifiers on each feature set with one shared configuration.
pub fn ablation(
    train: &TrainingData<'_>,
    test: &[MatchContext<'_>],
    env: FeatureEnv<'_>,
    cfg: &ModelConfig,
) -> Result<AblationReport> {
    let mut rows = Vec::new();
    for set in FeatureSet::ALL {
        let c = ModelConfig {
            features: set,
            ..cfg.clone()
        };
        let lr = Model::Lr(PriorPredictor::fit(train, &c, false)?);
        let nn = Model::Nn(PriorPredictor::fit(train, &c, true)?);
        let (a_lr, _) = evaluate_accuracy(&lr, test, env, None)?;
        let (a_nn, _) = evaluate_accuracy(&nn, test, env, None)?;
        rows.push((set, a_lr, a_nn));
    }
    Ok(AblationReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub minute: u32,
    pub accuracy: f64,
    pub n: usize,
}

/// Accuracy at each prediction minute, per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteCurve {
    pub series: Vec<(String, Vec<CurvePoint>)>,
}

impl MinuteCurve {
    pub fn points(&self, model: &str) -> Option<&[CurvePoint]> {
        self.series.iter().find(|s| s.0 == model).map(|s| s.1.as_slice())
    }

    pub fn at(&self, model: &str, minute: u32) -> Option<&CurvePoint> {
        self.points(model)?.iter().find(|p| p.minute == minute)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "model,minute,accuracy,n")?;
        for (name, points) in &self.series {
            for p in points {
                writeln!(w, "{name},{},{},{}", p.minute, p.accuracy, p.n)?;
            }
        }
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut minutes: Vec<u32> = self.series.iter().flat_map(|s| s.1.iter().map(|p| p.minute)).collect();
        minutes.sort_unstable();
        minutes.dedup();
        let header: Vec<String> = std::iter::once("minute".to_string())
            .chain(self.series.iter().map(|s| s.0.clone()))
            .chain(std::iter::once("n".to_string()))
            .collect();
        let rows: Vec<Vec<String>> = minutes
            .iter()
            .map(|&t| {
                let mut row = vec![t.to_string()];
                let mut n = 0;
                for (name, _) in &self.series {
                    match self.at(name, t) {
                        Some(p) => {
                            row.push(pct(p.accuracy));
                            n = p.n;
                        }
                        None => row.push("-".into()),
                    }
                }
                row.push(n.to_string());
                row
            })
            .collect();
        format_table(&header, &rows)
    }
}

/// Every model is scored at minute `t` on the test matches live at `t`; minutes with
/// no live match are left out.
pub fn minute_curve(
    models: &[&Model],
    test: &[MatchContext<'_>],
    env: FeatureEnv<'_>,
    minutes: &[u32],
) -> Result<MinuteCurve> {
    let mut series = Vec::new();
    for model in models {
        let mut points = Vec::new();
        for &t in minutes {
            if !test.iter().any(|c| c.live_at(t)) {
                continue;
            }
            let (accuracy, n) = evaluate_accuracy(model, test, env, Some(t))?;
            points.push(CurvePoint { minute: t, accuracy, n });
        }
        series.push((model.tag().name().to_string(), points));
    }
    Ok(MinuteCurve { series })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationBucket {
    /// Inclusive lower and exclusive upper duration in minutes.
    pub start: u32,
    pub end: u32,
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationCurve {
    pub buckets: Vec<DurationBucket>,
}

impl DurationCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "duration_start,duration_end,accuracy,n")?;
        for b in &self.buckets {
            writeln!(w, "{},{},{},{}", b.start, b.end, b.accuracy, b.n)?;
        }
        Ok(())
    }

    pub fn table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .buckets
            .iter()
            .map(|b| vec![format!("[{}, {})", b.start, b.end), pct(b.accuracy), b.n.to_string()])
            .collect();
        format_table(&["duration".into(), "accuracy".into(), "n".into()], &rows)
    }
}

/// Pre-match accuracy per duration bucket; empty buckets are absent.
pub fn duration_curve(
    model: &Model,
    test: &[MatchContext<'_>],
    env: FeatureEnv<'_>,
    bucket: u32,
) -> Result<DurationCurve> {
    if bucket == 0 {
        return Err(Error::InvalidArgument("bucket width must be positive".into()));
    }
    let mut groups: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ctx in test {
        let g = groups.entry(ctx.record.duration_min / bucket).or_default();
        g.0.push(model.probability(ctx, 0, env)?);
        g.1.push(ctx.record.label());
    }
    if groups.is_empty() {
        return Err(Error::InvalidArgument("no matches to evaluate".into()));
    }
    Ok(DurationCurve {
        buckets: groups
            .into_iter()
            .map(|(k, (p, y))| DurationBucket {
                start: k * bucket,
                end: (k + 1) * bucket,
                accuracy: accuracy(&p, &y),
                n: y.len(),
            })
            .collect(),
    })
}

/// Rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Percentage with two decimals.
pub fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

/// Left-aligned first column, right-aligned others, padded to the widest cell.
pub fn format_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = (0..cols)
            .map(|i| {
                let c = cells.get(i).map_or("", String::as_str);
                if i == 0 {
                    format!("{c:<w$}", w = width[i])
                } else {
                    format!("{c:>w$}", w = width[i])
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    out.push_str(&(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ") + "\n"));
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::LinearModel;
    use crate::data::fixtures::{dataset, match_with};
    use crate::data::TeamSide;
    use crate::ensemble::PriorClassifier;
    use crate::prior::{Normalizer, PriorLayout};
    use crate::training::SeriesStore;
    use proptest::prelude::*;

    fn constant_model(p: f64, layout: PriorLayout) -> Model {
        let d = layout.len();
        Model::Lr(PriorPredictor {
            pipeline: PriorPipeline {
                layout,
                rivals: crate::prior::RivalWinrateTable::new(false),
                imputation: crate::prior::ImputationTable {
                    player: [0.0; 2],
                    hero_player: [0.0; 8],
                },
            },
            features: FeatureSet::All,
            columns: (0..d).collect(),
            classifier: PriorClassifier::Lr(LinearModel::from_weights(
                vec![0.0; d],
                crate::classifiers::logit(p),
                Normalizer::identity(d),
            )),
        })
    }

    fn matches(winners: &[bool], durations: &[u32]) -> Vec<MatchRecord> {
        winners
            .iter()
            .zip(durations)
            .enumerate()
            .map(|(i, (&w, &d))| {
                let mut m = match_with(
                    &format!("m{i}"),
                    if w { TeamSide::Radiant } else { TeamSide::Dire },
                    [1, 2, 3, 4, 5],
                    [6, 7, 8, 9, 10],
                );
                m.duration_min = d;
                m
            })
            .collect()
    }

    #[test]
    fn constant_classifier_scores_the_radiant_rate() {
        let winners = [true, true, true, false, false, true, false, true, true, false];
        let d = dataset(matches(&winners, &[30; 10]));
        let store = SeriesStore::new(&d).unwrap();
        let model = constant_model(0.9, PriorLayout::for_catalog(&d.catalog));
        let (acc, n) = evaluate_accuracy(&model, store.contexts(), FeatureEnv::from(&d), None).unwrap();
        assert_eq!(n, 10);
        assert!((acc - 0.6).abs() < 1e-15);
    }

    #[test]
    fn tie_counts_as_radiant() {
        assert_eq!(accuracy(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
        assert_eq!(accuracy(&[0.7, 0.2], &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn minute_evaluation_excludes_short_and_replayless_matches() {
        let d = dataset(matches(&[true, false], &[30, 45]));
        let store = SeriesStore::new(&d).unwrap();
        let model = constant_model(0.9, PriorLayout::for_catalog(&d.catalog));
        assert!(evaluate_accuracy(&model, store.contexts(), FeatureEnv::from(&d), Some(40)).is_err());
        assert!(evaluate_accuracy(&model, &[], FeatureEnv::from(&d), None).is_err());
    }

    #[test]
    fn duration_buckets_partition_matches() {
        let d = dataset(matches(&[true, false, true, true], &[12, 14, 31, 47]));
        let store = SeriesStore::new(&d).unwrap();
        let model = constant_model(0.9, PriorLayout::for_catalog(&d.catalog));
        let c = duration_curve(&model, store.contexts(), FeatureEnv::from(&d), 5).unwrap();
        let starts: Vec<u32> = c.buckets.iter().map(|b| b.start).collect();
        assert_eq!(starts, [10, 30, 45]);
        assert_eq!(c.buckets.iter().map(|b| b.n).sum::<usize>(), 4);
        assert_eq!(c.buckets[0].accuracy, 0.5);
        let one = dataset(matches(&[true], &[33]));
        let store = SeriesStore::new(&one).unwrap();
        let c = duration_curve(&model, store.contexts(), FeatureEnv::from(&one), 5).unwrap();
        assert_eq!(c.buckets.len(), 1);
    }

    #[test]
    fn single_cell_grid_wins_and_duplicates_tie() {
        let winners: Vec<bool> = (0..20).map(|i| i % 3 != 0).collect();
        let d = dataset(matches(&winners, &[30; 20]));
        let store = SeriesStore::new(&d).unwrap();
        let train = store.training(None);
        let cfg = ModelConfig {
            train: crate::classifiers::TrainConfig {
                max_epochs: 50,
                ..Default::default()
            },
            ..ModelConfig::default()
        };
        let one = cross_validate(&train, &[GridCell::Lr { lambda: 1e-3 }], 4, &cfg).unwrap();
        assert_eq!(one.best, 0);
        let dup = cross_validate(&train, &[GridCell::Lr { lambda: 1e-3 }; 2], 4, &cfg).unwrap();
        assert_eq!(dup.cells[0].1, dup.cells[1].1);
        assert!(cross_validate(&train, &[], 4, &cfg).is_err());
        assert!(cross_validate(&train, &[GridCell::Lr { lambda: 0.0 }], 1, &cfg).is_err());
        assert_eq!(GridCell::nn_grid(1e-6).len(), 9);
        let mut csv = Vec::new();
        one.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("model,lambda,hidden,activation,cv_accuracy\n"));
    }

    #[test]
    fn spearman_of_monotone_sequences() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 35.0, 90.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_columns_align() {
        let t = format_table(
            &["a".into(), "bb".into()],
            &[vec!["xxx".into(), "1".into()], vec!["y".into(), "22".into()]],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a    bb");
        assert_eq!(lines[2], "xxx   1");
    }

    proptest! {
        #[test]
        fn accuracy_matches_hand_count(pairs in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..20)) {
            let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let y: Vec<f64> = pairs.iter().map(|x| if x.1 { 1.0 } else { 0.0 }).collect();
            let mut hits = 0;
            for (pi, yi) in pairs.iter() {
                let predicted_radiant = *pi >= 0.5;
                if predicted_radiant == *yi { hits += 1; }
            }
            prop_assert_eq!(accuracy(&p, &y), hits as f64 / pairs.len() as f64);
        }
    }
}
