//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use winpred_core::asm::{fit_asm, TransitionModel};
use winpred_core::classifiers::{Activation, LinearModel, MlpModel};
use winpred_core::data::{split_dataset, Dataset};
use winpred_core::ensemble::{ModelConfig, TimeSpecificBank};
use winpred_core::evaluation::{evaluate_accuracy, minute_curve, spearman, AblationReport};
use winpred_core::ingest::{load_dataset, write_dataset};
use winpred_core::model::{Model, ModelTag};
use winpred_core::prior::{FeatureSet, Normalizer, PriorPipeline, Segment};
use winpred_core::realtime::{BinEdges, Channel, DiscreteSeries, DiscreteWindow};
use winpred_core::synth::{bayes_accuracy, generate_dataset, GroundTruth, SynthConfig};
use winpred_core::training::{contexts, AccessLog, FeatureEnv, MatchContext, SeriesStore};

const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET_S: f64 = 1.0;
const POSTERIOR_TOL: f64 = 1e-12;
const NULL_MATCHES: usize = 5000;
const NULL_TEST_FRACTION: f64 = 0.5;
const NULL_BAND: (f64, f64) = (0.45, 0.55);
const NULL_BUDGET_S: f64 = 120.0;
const LEARN_MATCHES: usize = 10_000;
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const BAYES_GAP: f64 = 0.03;
const ALL_OVER_HERO: f64 = 0.03;
const DOMINANCE_MINUTE: u32 = 35;
const DOMINANCE_GAIN: f64 = 0.10;
const CURVE_RHO: f64 = 0.8;
const CURVE_BUDGET_S: f64 = 600.0;
const STACK_SLACK: f64 = 0.01;
const BANK_MINUTE: u32 = 40;
const BANK_GAIN: f64 = 0.03;
const TEST_FRACTION: f64 = 0.1;

fn curve_minutes() -> Vec<u32> {
    (1..=8).map(|k| 5 * k).collect()
}

fn model_config() -> ModelConfig {
    let mut cfg = ModelConfig::default();
    cfg.train.max_epochs = 300;
    cfg.folds = 5;
    cfg
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- oracles

fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn bernoulli_nll(z: f64, y: f64) -> f64 {
    -(y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z))
}

fn lr_oracle_loss(x: &Array2<f64>, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let data: f64 = x
        .outer_iter()
        .zip(y)
        .map(|(row, &yi)| bernoulli_nll(row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b, yi))
        .sum();
    data / n + lambda * w.iter().map(|v| v * v).sum::<f64>()
}

fn act(a: Activation, v: f64) -> f64 {
    match a {
        Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        Activation::Tanh => v.tanh(),
        Activation::Relu => v.max(0.0),
    }
}

fn mlp_oracle_loss(x: &Array2<f64>, y: &[f64], p: &[f64], hidden: usize, a: Activation, lambda: f64) -> f64 {
    let d = x.ncols();
    let (w1, rest) = p.split_at(hidden * d);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(hidden);
    let mut total = 0.0;
    for (row, &yi) in x.outer_iter().zip(y) {
        let mut z = b2[0];
        for k in 0..hidden {
            let pre: f64 = (0..d).map(|j| w1[k * d + j] * row[j]).sum::<f64>() + b1[k];
            z += w2[k] * act(a, pre);
        }
        total += bernoulli_nll(z, yi);
    }
    let sq = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
    total / y.len() as f64 + lambda * (sq(w1) + sq(w2))
}

fn central_differences(f: impl Fn(&[f64]) -> f64, p: &[f64]) -> Vec<f64> {
    const H: f64 = 1e-6;
    let mut q = p.to_vec();
    (0..p.len())
        .map(|i| {
            q[i] = p[i] + H;
            let up = f(&q);
            q[i] = p[i] - H;
            let down = f(&q);
            q[i] = p[i];
            (up - down) / (2.0 * H)
        })
        .collect()
}

/// Largest coordinate error relative to the largest numeric coordinate.
fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
    analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()))
        / scale
}

fn random_problem(rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<f64>) {
    let x = Array2::from_shape_fn((10, 5), |_| rng.random_range(-2.0..2.0));
    let y = (0..10).map(|_| rng.random_range(0..2) as f64).collect();
    (x, y)
}

// ---------------------------------------------------------------- criteria

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_lr, mut worst_mlp) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (x, y) = random_problem(&mut rng);
        let w: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let mut lr = LinearModel::from_weights(w.clone(), b, Normalizer::identity(5));
        lr.lambda = 1e-3;
        let (_, analytic) = lr.loss_gradient(&x, &y).unwrap();
        let mut p = w.clone();
        p.push(b);
        let numeric = central_differences(|q| lr_oracle_loss(&x, &y, &q[..5], q[5], 1e-3), &p);
        worst_lr = worst_lr.max(relative_error(&analytic, &numeric));

        for a in Activation::ALL {
            let mut mlp = MlpModel::initialized(5, 4, a, 1e-3, rng.random());
            mlp.b1 = Array1::from_shape_fn(4, |_| rng.random_range(-0.5..0.5));
            mlp.b2 = rng.random_range(-0.5..0.5);
            let (_, analytic) = mlp.loss_gradient(&x, &y).unwrap();
            let mut p: Vec<f64> = mlp.w1.iter().copied().collect();
            p.extend(mlp.b1.iter());
            p.extend(mlp.w2.iter());
            p.push(mlp.b2);
            let numeric = central_differences(|q| mlp_oracle_loss(&x, &y, q, 4, a, 1e-3), &p);
            worst_mlp = worst_mlp.max(relative_error(&analytic, &numeric));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_lr < GRAD_TOL && worst_mlp < GRAD_TOL && secs < GRAD_BUDGET_S,
        format!("lr {worst_lr:.2e}, mlp {worst_mlp:.2e} (< {GRAD_TOL:.0e}); {secs:.3} s (< {GRAD_BUDGET_S} s)"),
    )
}

fn asm_oracle() -> Outcome {
    let k = 3;
    let e: Vec<f64> = vec![1.0, 2.0];
    let edges = BinEdges {
        n_bins: k,
        edges: [e.clone(), e.clone(), e],
    };
    let series = [
        (vec![0, 1, 1, 2], vec![1, 1, 2, 2], vec![0, 0, 1, 2], true),
        (vec![2, 2, 1], vec![1, 0, 0], vec![1, 2, 2], false),
        (vec![0, 0, 1, 1, 1], vec![2, 1, 1, 0, 1], vec![0, 1, 2, 2, 1], true),
    ];
    let discrete: Vec<(DiscreteSeries, bool)> = series
        .iter()
        .enumerate()
        .map(|(i, (d, g, x, y))| {
            (
                DiscreteSeries {
                    match_id: format!("m{i}"),
                    channels: [d.clone(), g.clone(), x.clone()],
                },
                *y,
            )
        })
        .collect();
    let model = fit_asm(discrete.iter().map(|(s, y)| (s, *y)), edges.clone(), 0.0).unwrap();
    let mut exact = true;
    for c in 0..3 {
        for y in [false, true] {
            let mut counts = vec![vec![0u32; k]; k];
            for (s, won) in &discrete {
                if *won == y {
                    for t in 1..s.channels[c].len() {
                        counts[s.channels[c][t - 1]][s.channels[c][t]] += 1;
                    }
                }
            }
            for i in 0..k {
                let total: u32 = counts[i].iter().sum();
                for j in 0..k {
                    let expected = if total == 0 {
                        1.0 / k as f64
                    } else {
                        counts[i][j] as f64 / total as f64
                    };
                    exact &= model.probability(Channel::ALL[c], y, i, j) == expected;
                }
            }
        }
    }
    // Radiant won 2 of 3 series.
    exact &= model.prior == 2.0 / 3.0;

    let two = BinEdges {
        n_bins: 2,
        edges: [vec![0.0], vec![0.0], vec![0.0]],
    };
    let m = |a: f64, b: f64| vec![vec![a, 1.0 - a], vec![b, 1.0 - b]];
    let hand = TransitionModel::from_matrices(
        0.6,
        two,
        [
            [m(0.7, 0.4), m(0.5, 0.2)],
            [m(0.8, 0.3), m(0.25, 0.1)],
            [m(0.6, 0.5), m(0.4, 0.35)],
        ],
    )
    .unwrap();
    let w = DiscreteWindow {
        end_minute: 3,
        channels: [vec![0, 1, 1], vec![1, 1, 0], vec![0, 0, 1]],
    };
    // Dire: deaths 0->1 0.3, 1->1 0.6; gold 1->1 0.7, 1->0 0.3; xp 0->0 0.6, 0->1 0.4.
    let l_dire = 0.3 * 0.6 * 0.7 * 0.3 * 0.6 * 0.4;
    // Radiant: deaths 0->1 0.5, 1->1 0.8; gold 1->1 0.9, 1->0 0.1; xp 0->0 0.4, 0->1 0.6.
    let l_radiant = 0.5 * 0.8 * 0.9 * 0.1 * 0.4 * 0.6;
    let manual = 0.6 * l_radiant / (0.6 * l_radiant + 0.4 * l_dire);
    let err = (hand.posterior(&w) - manual).abs();
    outcome(
        exact && err < POSTERIOR_TOL,
        format!("frequencies exact: {exact}; posterior error {err:.1e} (< {POSTERIOR_TOL:.0e})"),
    )
}

fn hygiene_audit() -> Outcome {
    let cfg = SynthConfig {
        n_matches: 600,
        player_count: 400,
        seed: 21,
        ..SynthConfig::default()
    };
    let (d, _) = generate_dataset(&cfg).unwrap();
    let (train_part, test_part) = split_dataset(&d, TEST_FRACTION, 21).unwrap();
    let test_ids: BTreeSet<&str> = test_part.matches.iter().map(|m| m.match_id.as_str()).collect();
    let train_idx: Vec<usize> = d
        .matches
        .iter()
        .enumerate()
        .filter(|(_, m)| !test_ids.contains(m.match_id.as_str()))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(train_idx.len(), train_part.len());
    let store = SeriesStore::new(&d).unwrap();
    let log = AccessLog::new();
    let train = store.training(Some(&log)).subset(&train_idx);
    let mut mc = model_config();
    mc.train.max_epochs = 50;
    mc.hidden = 8;
    mc.min_windows = 5;
    let mut leaks = 0;
    let mut stack_clean = true;
    for tag in ModelTag::ALL {
        let (_, audit) = Model::train(tag, &train, &mc).unwrap();
        if let Some(a) = audit {
            stack_clean &= a.is_leak_free();
        }
    }
    let seen = log.ids();
    leaks += seen.iter().filter(|id| test_ids.contains(id.as_str())).count();
    let all_train_seen = seen.len() == train_idx.len();
    outcome(
        leaks == 0 && stack_clean && all_train_seen,
        format!(
            "{} matches read while fitting every model, {leaks} of them test matches; stacker folds leak-free: {stack_clean}",
            seen.len()
        ),
    )
}

fn layout_conformance() -> Outcome {
    let cfg = SynthConfig {
        n_matches: 200,
        player_count: 300,
        seed: 4,
        ..SynthConfig::default()
    };
    let (d, _) = generate_dataset(&cfg).unwrap();
    let pipeline = PriorPipeline::fit(d.matches.iter(), &d.catalog, &d.profiles, false);
    let expected = [
        (Segment::HeroSelection, 226),
        (Segment::HeroAttributes, 260),
        (Segment::RivalRates, 25),
        (Segment::Player, 20),
        (Segment::HeroPlayer, 80),
    ];
    let mut ok = pipeline.layout.len() == 611;
    for (s, n) in expected {
        ok &= pipeline.layout.segment_len(s) == n;
    }
    for m in &d.matches {
        let v = pipeline.vector(m, &d.catalog, &d.profiles).unwrap();
        ok &= v.len() == 611;
        let onehot = &v[pipeline.layout.segment(Segment::HeroSelection)];
        let (radiant, dire) = onehot.split_at(113);
        ok &= onehot.iter().all(|&b| b == 0.0 || b == 1.0);
        ok &= radiant.iter().sum::<f64>() == 5.0 && dire.iter().sum::<f64>() == 5.0;
    }
    outcome(
        ok,
        format!("{} vectors of length 611 with segments 226/260/25/20/80 and 5+5 picks", d.len()),
    )
}

/// Accuracy pooled over `minutes`, each live test match counted once per minute.
fn pooled_accuracy(model: &Model, test: &[MatchContext<'_>], env: FeatureEnv<'_>, minutes: &[u32]) -> f64 {
    let (mut hits, mut n) = (0.0, 0usize);
    for &t in minutes {
        if let Ok((acc, k)) = evaluate_accuracy(model, test, env, Some(t)) {
            hits += acc * k as f64;
            n += k;
        }
    }
    hits / n as f64
}

fn synthetic_null() -> Outcome {
    let start = Instant::now();
    let (d, _) = generate_dataset(&SynthConfig::null(NULL_MATCHES, 5)).unwrap();
    let (tr, te) = split_dataset(&d, NULL_TEST_FRACTION, 5).unwrap();
    let store = SeriesStore::new(&tr).unwrap();
    let train = store.training(None);
    let test = contexts(&te).unwrap();
    let env = FeatureEnv::from(&te);
    let mut mc = model_config();
    mc.train.max_epochs = 100;
    let mut parts = Vec::new();
    let mut ok = true;
    for tag in ModelTag::ALL {
        let (model, _) = Model::train(tag, &train, &mc).unwrap();
        let acc = if tag.is_realtime() {
            pooled_accuracy(&model, &test, env, &curve_minutes())
        } else {
            evaluate_accuracy(&model, &test, env, None).unwrap().0
        };
        ok &= (NULL_BAND.0..=NULL_BAND.1).contains(&acc);
        parts.push(format!("{tag} {acc:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok && secs < NULL_BUDGET_S,
        format!(
            "{} in [{}, {}]; {secs:.0} s (< {NULL_BUDGET_S} s)",
            parts.join(", "),
            NULL_BAND.0,
            NULL_BAND.1
        ),
    )
}

struct SeedRun {
    bayes: f64,
    lr_all: f64,
    lr_hero: f64,
    prior_pooled: f64,
    asm_pooled: f64,
    stacked_pooled: f64,
}

fn split(d: &Dataset, seed: u64) -> (Dataset, Dataset) {
    split_dataset(d, TEST_FRACTION, seed).unwrap()
}

fn test_truth(gt: &GroundTruth, te: &Dataset) -> GroundTruth {
    gt.restrict(te.matches.iter().map(|m| m.match_id.as_str()))
}

/// Trains the prior, sequence and stacked models on one default synthetic dataset.
/// With `curve`, also runs the minute-curve check on it.
fn default_seed(seed: u64, curve: bool) -> (SeedRun, Option<Outcome>) {
    let start = Instant::now();
    let (d, gt) = generate_dataset(&SynthConfig {
        n_matches: LEARN_MATCHES,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let (tr, te) = split(&d, seed);
    let store = SeriesStore::new(&tr).unwrap();
    let train = store.training(None);
    let test = contexts(&te).unwrap();
    let env = FeatureEnv::from(&te);
    let mc = ModelConfig {
        train: winpred_core::classifiers::TrainConfig {
            seed,
            ..model_config().train
        },
        ..model_config()
    };
    let (lr, _) = Model::train(ModelTag::Lr, &train, &mc).unwrap();
    let hero_cfg = ModelConfig {
        features: FeatureSet::Hero,
        ..mc.clone()
    };
    let (hero, _) = Model::train(ModelTag::Lr, &train, &hero_cfg).unwrap();
    let (asm, _) = Model::train(ModelTag::Asm, &train, &mc).unwrap();
    let (stacked, _) = Model::train(ModelTag::Stacked, &train, &mc).unwrap();
    let minutes = curve_minutes();
    let run = SeedRun {
        bayes: bayes_accuracy(&test_truth(&gt, &te)),
        lr_all: evaluate_accuracy(&lr, &test, env, None).unwrap().0,
        lr_hero: evaluate_accuracy(&hero, &test, env, None).unwrap().0,
        prior_pooled: pooled_accuracy(&lr, &test, env, &minutes),
        asm_pooled: pooled_accuracy(&asm, &test, env, &minutes),
        stacked_pooled: pooled_accuracy(&stacked, &test, env, &minutes),
    };
    let curve_outcome = curve.then(|| {
        let (concat, _) = Model::train(ModelTag::Concat, &train, &mc).unwrap();
        let c = minute_curve(&[&lr, &asm, &concat], &test, env, &minutes).unwrap();
        let at = |name: &str| c.at(name, DOMINANCE_MINUTE).unwrap().accuracy;
        let gain = at("concat") - at("lr");
        let pts = c.points("concat").unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.minute as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.accuracy).collect();
        let rho = spearman(&xs, &ys);
        let secs = start.elapsed().as_secs_f64();
        outcome(
            gain >= DOMINANCE_GAIN && rho > CURVE_RHO && secs < CURVE_BUDGET_S,
            format!(
                "concat at minute {DOMINANCE_MINUTE} {:.3} vs prior-only {:.3} (gain {gain:.3} >= {DOMINANCE_GAIN}); asm {:.3}; Spearman rho {rho:.3} (> {CURVE_RHO}); {secs:.0} s (< {CURVE_BUDGET_S} s)",
                at("concat"),
                at("lr"),
                at("asm"),
            ),
        )
    });
    (run, curve_outcome)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let all: Vec<f64> = v.collect();
    all.iter().sum::<f64>() / all.len() as f64
}

fn time_specific_gain() -> Outcome {
    let mut gains = Vec::new();
    for seed in SEEDS {
        let (d, _) = generate_dataset(&SynthConfig::time_heterogeneous(LEARN_MATCHES, seed)).unwrap();
        let (tr, te) = split(&d, seed);
        let store = SeriesStore::new(&tr).unwrap();
        let train = store.training(None);
        let test = contexts(&te).unwrap();
        let env = FeatureEnv::from(&te);
        let bank = TimeSpecificBank::fit(&train, &model_config()).unwrap();
        // The bank's fallback is the pooled concat model fit on the same data.
        let pooled = Model::Concat(bank.fallback.clone());
        let bank = Model::Timebank(bank);
        let a_bank = evaluate_accuracy(&bank, &test, env, Some(BANK_MINUTE)).unwrap().0;
        let a_pooled = evaluate_accuracy(&pooled, &test, env, Some(BANK_MINUTE)).unwrap().0;
        gains.push(a_bank - a_pooled);
    }
    let g = mean(gains.iter().copied());
    outcome(
        g >= BANK_GAIN,
        format!(
            "bank minus pooled concat at minute {BANK_MINUTE}: mean {g:.3} (>= {BANK_GAIN}) over seeds [{}]",
            gains.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn end_to_end_csvs(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let cfg = SynthConfig {
        n_matches: 400,
        player_count: 300,
        seed: 8,
        ..SynthConfig::default()
    };
    let (d, _) = generate_dataset(&cfg).unwrap();
    let data_dir = root.join("data");
    write_dataset(&data_dir, &d).unwrap();
    let (d, _) = load_dataset(&data_dir, 10).unwrap();
    let (tr, te) = split(&d, 8);
    let store = SeriesStore::new(&tr).unwrap();
    let train = store.training(None);
    let test = contexts(&te).unwrap();
    let env = FeatureEnv::from(&te);
    let mut mc = model_config();
    mc.train.max_epochs = 50;
    mc.hidden = 8;
    mc.min_windows = 5;
    let models: Vec<Model> = ModelTag::ALL.iter().map(|&t| Model::train(t, &train, &mc).unwrap().0).collect();
    let refs: Vec<&Model> = models.iter().collect();
    let mut out = Vec::new();
    let mut buf = Vec::new();
    minute_curve(&refs, &test, env, &curve_minutes()).unwrap().write_csv(&mut buf).unwrap();
    out.push(("minutes.csv".to_string(), buf));
    let rows = FeatureSet::ALL
        .iter()
        .map(|&set| {
            let c = ModelConfig { features: set, ..mc.clone() };
            let lr = Model::train(ModelTag::Lr, &train, &c).unwrap().0;
            (set, evaluate_accuracy(&lr, &test, env, None).unwrap().0, f64::NAN)
        })
        .collect();
    let mut buf = Vec::new();
    AblationReport { rows }.write_csv(&mut buf).unwrap();
    out.push(("ablation.csv".to_string(), buf));
    for m in &models {
        let mut buf = Vec::new();
        m.trajectory(&test[0], env).unwrap().write_csv(&mut buf).unwrap();
        out.push((format!("trajectory_{}.csv", m.tag()), buf));
    }
    for entry in std::fs::read_dir(&data_dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            out.push((p.file_name().unwrap().to_string_lossy().into(), std::fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = end_to_end_csvs(a.path());
    let second = end_to_end_csvs(b.path());
    let identical = first == second;
    outcome(
        identical && !first.is_empty(),
        format!("{} output files compared byte for byte; identical: {identical}", first.len()),
    )
}

// ---------------------------------------------------------------- driver

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn report(id: u32, name: &str, o: &Outcome) {
    println!("{} [{id}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn main() {
    let mut failures = 0;
    let mut record = |id: u32, name: &str, o: Outcome| {
        report(id, name, &o);
        failures += !o.pass as usize;
    };
    record(1, "gradient checks", guarded(gradient_checks));
    record(2, "sequence model oracle", guarded(asm_oracle));
    record(3, "protocol hygiene", guarded(hygiene_audit));
    record(4, "prior layout", guarded(layout_conformance));
    record(5, "synthetic null", guarded(synthetic_null));

    let mut runs = Vec::new();
    let mut curve = None;
    let seeds_ok = guarded(|| {
        for seed in SEEDS {
            let (run, c) = default_seed(seed, seed == SEEDS[0]);
            runs.push(run);
            if c.is_some() {
                curve = c;
            }
        }
        outcome(true, String::new())
    });
    if !seeds_ok.pass {
        curve = Some(outcome(false, seeds_ok.detail.clone()));
    }
    let learn = if seeds_ok.pass {
        let gap = mean(runs.iter().map(|r| (r.bayes - r.lr_all).abs()));
        let adv = mean(runs.iter().map(|r| r.lr_all - r.lr_hero));
        outcome(
            gap <= BAYES_GAP && adv >= ALL_OVER_HERO,
            format!(
                "mean |Bayes - LR(all)| {gap:.3} (<= {BAYES_GAP}); mean All - Hero {adv:.3} (>= {ALL_OVER_HERO}); LR(all) [{}], Bayes [{}]",
                runs.iter().map(|r| format!("{:.3}", r.lr_all)).collect::<Vec<_>>().join(", "),
                runs.iter().map(|r| format!("{:.3}", r.bayes)).collect::<Vec<_>>().join(", ")
            ),
        )
    } else {
        outcome(false, seeds_ok.detail.clone())
    };
    record(6, "synthetic learnability", learn);
    record(7, "real-time dominance curve", curve.unwrap_or_else(|| outcome(false, "not run".into())));
    let stack = if seeds_ok.pass {
        let s = mean(runs.iter().map(|r| r.stacked_pooled));
        let p = mean(runs.iter().map(|r| r.prior_pooled));
        let a = mean(runs.iter().map(|r| r.asm_pooled));
        outcome(
            s >= p.max(a) - STACK_SLACK,
            format!(
                "stacked {s:.3} vs prior-only {p:.3}, sequence-only {a:.3} (>= max - {STACK_SLACK}), pooled over minutes 5-40"
            ),
        )
    } else {
        outcome(false, seeds_ok.detail.clone())
    };
    record(8, "stacker sanity", stack);
    record(9, "time-specific gain", guarded(time_specific_gain));
    record(10, "reproducibility", guarded(reproducibility));

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
