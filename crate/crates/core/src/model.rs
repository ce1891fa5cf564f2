//! A single entry point over every model family, with versioned JSON persistence.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::FitInfo;
use crate::ensemble::{
    AsmPredictor, ConcatModel, ModelConfig, PredictionTrajectory, PriorClassifier, PriorPredictor, StackAudit,
    StackedModel, TimeSpecificBank,
};
use crate::error::{Error, Result};
use crate::training::{FeatureEnv, MatchContext, TrainingData};

pub const MODEL_FORMAT: &str = "winpred-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Lr,
    Nn,
    Asm,
    Concat,
    Stacked,
    Timebank,
}

impl ModelTag {
    pub const ALL: [ModelTag; 6] = [
        ModelTag::Lr,
        ModelTag::Nn,
        ModelTag::Asm,
        ModelTag::Concat,
        ModelTag::Stacked,
        ModelTag::Timebank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Lr => "lr",
            ModelTag::Nn => "nn",
            ModelTag::Asm => "asm",
            ModelTag::Concat => "concat",
            ModelTag::Stacked => "stacked",
            ModelTag::Timebank => "timebank",
        }
    }

    /// Whether predictions depend on the in-match window.
    pub fn is_realtime(self) -> bool {
        !matches!(self, ModelTag::Lr | ModelTag::Nn)
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelTag::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Lr(PriorPredictor),
    Nn(PriorPredictor),
    Asm(AsmPredictor),
    Concat(ConcatModel),
    Stacked(StackedModel),
    Timebank(TimeSpecificBank),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

impl Model {
    /// Trains one model family. The stacker's fold audit is returned when applicable.
    pub fn train(tag: ModelTag, train: &TrainingData<'_>, cfg: &ModelConfig) -> Result<(Model, Option<StackAudit>)> {
        Ok(match tag {
            ModelTag::Lr => (Model::Lr(PriorPredictor::fit(train, cfg, false)?), None),
            ModelTag::Nn => (Model::Nn(PriorPredictor::fit(train, cfg, true)?), None),
            ModelTag::Asm => (Model::Asm(AsmPredictor::fit(train, cfg)?), None),
            ModelTag::Concat => (Model::Concat(ConcatModel::fit(train, cfg)?), None),
            ModelTag::Stacked => {
                let (m, audit) = StackedModel::fit(train, cfg)?;
                (Model::Stacked(m), Some(audit))
            }
            ModelTag::Timebank => (Model::Timebank(TimeSpecificBank::fit(train, cfg)?), None),
        })
    }

    pub fn tag(&self) -> ModelTag {
        match self {
            Model::Lr(_) => ModelTag::Lr,
            Model::Nn(_) => ModelTag::Nn,
            Model::Asm(_) => ModelTag::Asm,
            Model::Concat(_) => ModelTag::Concat,
            Model::Stacked(_) => ModelTag::Stacked,
            Model::Timebank(_) => ModelTag::Timebank,
        }
    }

    /// Radiant win probability at minute `t`. Prior models ignore `t`; combined models
    /// use the prior alone when no window ends at `t`.
    pub fn probability(&self, ctx: &MatchContext<'_>, t: u32, env: FeatureEnv<'_>) -> Result<f64> {
        match self {
            Model::Lr(p) | Model::Nn(p) => p.probability(ctx.record, env),
            Model::Asm(a) => Ok(a.probability(ctx, t)),
            Model::Concat(c) => c.probability(ctx, t, env),
            Model::Stacked(s) => s.probability(ctx, t, env),
            Model::Timebank(b) => b.probability(ctx, t, env),
        }
    }

    /// Predictions at every minute from 0 to the match duration.
    pub fn trajectory(&self, ctx: &MatchContext<'_>, env: FeatureEnv<'_>) -> Result<PredictionTrajectory> {
        let points = (0..=ctx.record.duration_min)
            .map(|t| Ok((t, self.probability(ctx, t, env)?)))
            .collect::<Result<_>>()?;
        Ok(PredictionTrajectory {
            match_id: ctx.record.match_id.clone(),
            model: self.tag().name().into(),
            points,
        })
    }

    /// Fit records of every gradient-trained component, labelled by role.
    pub fn fit_log(&self) -> Vec<(String, &FitInfo)> {
        fn prior(p: &PriorPredictor) -> &FitInfo {
            match &p.classifier {
                PriorClassifier::Lr(m) => &m.fit,
                PriorClassifier::Nn(m) => &m.fit,
            }
        }
        match self {
            Model::Lr(p) | Model::Nn(p) => vec![("prior".into(), prior(p))],
            Model::Asm(_) => Vec::new(),
            Model::Concat(c) => vec![("prior".into(), prior(&c.prior)), ("concat".into(), &c.model.fit)],
            Model::Stacked(s) => vec![("prior".into(), prior(&s.prior)), ("stacker".into(), &s.stacker.fit)],
            Model::Timebank(b) => {
                let mut out = vec![
                    ("prior".into(), prior(&b.fallback.prior)),
                    ("concat".into(), &b.fallback.model.fit),
                ];
                out.extend(b.models.iter().map(|(t, m)| (format!("minute_{t}"), &m.fit)));
                out
            }
        }
    }

    /// Training log as CSV: one row per component.
    pub fn write_fit_log<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "component,epochs,loss,grad_norm,converged")?;
        for (name, f) in self.fit_log() {
            writeln!(w, "{name},{},{},{},{}", f.epochs, f.loss, f.grad_norm, f.converged)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::InvalidData(format!("cannot serialize model: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Model> {
        let file: ModelFile =
            serde_json::from_str(s).map_err(|e| Error::InvalidData(format!("model file: {e}")))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&s)
    }
}

/// Point prediction through any model.
pub fn predict_combined(model: &Model, ctx: &MatchContext<'_>, t: u32, env: FeatureEnv<'_>) -> Result<f64> {
    model.probability(ctx, t, env)
}
