use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use winpred_core::data::{split_dataset, Dataset};
use winpred_core::ensemble::ModelConfig;
use winpred_core::evaluation::{
    ablation, cross_validate, duration_curve, format_table, minute_curve, pct, GridCell,
};
use winpred_core::ingest::{load_dataset, write_dataset};
use winpred_core::model::{Model, ModelTag};
use winpred_core::synth::{bayes_accuracy, generate_dataset, GroundTruth};
use winpred_core::training::{contexts, FeatureEnv, MatchContext, SeriesStore};
use winpred_core::{Error, Result};

use crate::config::RunConfig;
use crate::Report;

pub const TRUTH_FILE: &str = "truth.csv";

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.into(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes a file through `f`, creating the parent directory.
fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut buf = Vec::new();
    f(&mut buf).map_err(io_err(path))?;
    fs::write(path, buf).map_err(io_err(path))
}

fn load(cfg: &RunConfig, dir: &Path) -> Result<Dataset> {
    Ok(load_dataset(dir, cfg.max_missing_players)?.0)
}

fn default_model_file(cfg: &RunConfig) -> PathBuf {
    cfg.model_dir.join(format!("{}.json", cfg.model))
}

fn context<'a>(d: &'a Dataset, match_id: &str) -> Result<MatchContext<'a>> {
    let m = d.get(match_id).ok_or_else(|| Error::UnknownMatch(match_id.into()))?;
    MatchContext::new(d, m)
}

pub fn ingest(cfg: &RunConfig, dir: Option<&Path>) -> Result<()> {
    let dir = dir.unwrap_or(&cfg.data_dir);
    let (d, r) = load_dataset(dir, cfg.max_missing_players)?;
    let rows = vec![
        vec!["matches_read".into(), r.matches_read.to_string()],
        vec!["matches_kept".into(), r.matches_kept.to_string()],
        vec!["matches_dropped_missing_players".into(), r.matches_dropped_missing_players.to_string()],
        vec!["matches_dropped_invalid".into(), r.matches_dropped_invalid.to_string()],
        vec!["missing_profile_rate".into(), format!("{:.4}", r.missing_profile_rate)],
        vec!["replays_loaded".into(), r.replays_loaded.to_string()],
        vec!["replays_rejected".into(), r.replays_rejected.to_string()],
        vec!["profiles".into(), d.profiles.len().to_string()],
        vec!["profiles_rejected".into(), r.profiles_rejected.to_string()],
        vec!["heroes".into(), d.catalog.hero_count.to_string()],
        vec!["hero_attributes".into(), d.catalog.attribute_count().to_string()],
    ];
    print!("{}", format_table(&["field".into(), "value".into()], &rows));
    Ok(())
}

fn write_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "match_id,strength,p_radiant,winner")?;
        for r in &gt.rows {
            writeln!(w, "{},{},{},{}", r.match_id, r.strength, r.p_radiant, r.winner.name())?;
        }
        Ok(())
    })
}

pub fn synth(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let dir = out.unwrap_or(&cfg.data_dir);
    let (d, gt) = generate_dataset(&cfg.synth)?;
    write_dataset(dir, &d)?;
    write_truth(&dir.join(TRUTH_FILE), &gt)?;
    println!(
        "wrote {} matches, {} replays and {} profiles to {}",
        d.len(),
        d.replays().len(),
        d.profiles.len(),
        dir.display()
    );
    println!("bayes_accuracy {:.4}", bayes_accuracy(&gt));
    Ok(())
}

pub fn train(cfg: &RunConfig, output: Option<&Path>) -> Result<()> {
    let d = load(cfg, &cfg.data_dir)?;
    let (tr, _) = split_dataset(&d, cfg.test_fraction, cfg.seed)?;
    let store = SeriesStore::new(&tr)?;
    let (model, _) = Model::train(cfg.model, &store.training(None), &cfg.model_cfg)?;
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| default_model_file(cfg));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    model.save(&path)?;
    let log = path.with_extension("train.csv");
    write_file(&log, |w| model.write_fit_log(w))?;
    println!(
        "trained {} ({} features) on {} matches; model {}; log {}",
        cfg.model,
        cfg.model_cfg.features.name(),
        tr.len(),
        path.display(),
        log.display()
    );
    Ok(())
}

pub fn predict(cfg: &RunConfig, model_file: &Path, match_id: &str, minute: u32) -> Result<()> {
    let model = Model::load(model_file)?;
    let d = load(cfg, &cfg.data_dir)?;
    let ctx = context(&d, match_id)?;
    println!("{:.6}", model.probability(&ctx, minute, FeatureEnv::from(&d))?);
    Ok(())
}

pub fn trajectory(cfg: &RunConfig, model_file: Option<&Path>, match_id: &str, out: Option<&Path>) -> Result<()> {
    let path = model_file.map(Path::to_path_buf).unwrap_or_else(|| default_model_file(cfg));
    let model = Model::load(&path)?;
    let d = load(cfg, &cfg.data_dir)?;
    let ctx = context(&d, match_id)?;
    let t = model.trajectory(&ctx, FeatureEnv::from(&d))?;
    match out {
        Some(p) => write_file(p, |w| t.write_csv(w)),
        None => {
            let mut buf = Vec::new();
            t.write_csv(&mut buf).map_err(io_err(Path::new("<stdout>")))?;
            io::stdout().write_all(&buf).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn report_name(r: Report) -> &'static str {
    match r {
        Report::Ablation => "ablation",
        Report::Minutes => "minutes",
        Report::Duration => "duration",
        Report::Cv => "cv",
    }
}

pub fn evaluate(cfg: &RunConfig, report: Report, out: Option<&Path>) -> Result<()> {
    let d = load(cfg, &cfg.data_dir)?;
    let (tr, te) = split_dataset(&d, cfg.test_fraction, cfg.seed)?;
    let store = SeriesStore::new(&tr)?;
    let train = store.training(None);
    let test = contexts(&te)?;
    let env = FeatureEnv::from(&te);
    let mc: &ModelConfig = &cfg.model_cfg;
    let path = out.unwrap_or(&cfg.out_dir).join(format!("{}.csv", report_name(report)));
    let table = match report {
        Report::Ablation => {
            let r = ablation(&train, &test, env, mc)?;
            write_file(&path, |w| r.write_csv(w))?;
            r.table()
        }
        Report::Minutes => {
            let models = cfg
                .curve_models
                .iter()
                .map(|&t| Ok(Model::train(t, &train, mc)?.0))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Model> = models.iter().collect();
            let c = minute_curve(&refs, &test, env, &cfg.minutes)?;
            write_file(&path, |w| c.write_csv(w))?;
            c.table()
        }
        Report::Duration => {
            let (m, _) = Model::train(cfg.model, &train, mc)?;
            let c = duration_curve(&m, &test, env, cfg.duration_bucket)?;
            write_file(&path, |w| c.write_csv(w))?;
            c.table()
        }
        Report::Cv => {
            let grid = match cfg.model {
                ModelTag::Nn => GridCell::nn_grid(mc.train.lambda),
                ModelTag::Lr => GridCell::lr_grid(&cfg.cv_lambdas),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "cross-validation searches prior classifiers only, not {other}"
                    )))
                }
            };
            let r = cross_validate(&train, &grid, mc.folds, mc)?;
            write_file(&path, |w| r.write_csv(w))?;
            let best = r.cells[r.best].1;
            format!("{}best: {}\n", r.table(), pct(best))
        }
    };
    print!("{table}");
    println!("wrote {}", path.display());
    Ok(())
}
