//! Logistic regression and a one-hidden-layer network, trained from scratch by
//! full-batch gradient descent on L2-regularized mean negative log-likelihood.

mod design;
mod lr;
mod mlp;
mod optim;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use design::{Design, GroupedDesign};
pub use lr::{lr_gradient_check, predict_lr, train_lr, LinearModel};
pub use mlp::{predict_mlp, train_mlp, MlpModel};
pub use optim::{gradient_check, minimize, FitInfo, Objective};

/// Probabilities are kept this far from 0 and 1 inside the loss.
pub const PROB_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Initial step of the line search.
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Training stops once the gradient norm drops below this.
    pub tolerance: f64,
    /// L2 coefficient on weights (biases are not penalized).
    pub lambda: f64,
    pub seed: u64,
    /// Z-score inputs with statistics of the training rows.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1.0,
            max_epochs: 5000,
            tolerance: 1e-6,
            lambda: 1e-6,
            seed: 0,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.tolerance > 0.0) || self.max_epochs == 0 {
            return Err(Error::InvalidArgument(
                "learning rate, tolerance and max epochs must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Sigmoid, Activation::Relu, Activation::Tanh];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `a`.
    pub fn derivative(self, x: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::InvalidArgument(format!("unknown activation {s:?}"))),
        }
    }
}

/// Logistic function that never overflows and keeps relative precision in both tails.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    (p / (1.0 - p)).ln()
}

/// Negative log-likelihood of label `y` under logit `z`.
pub fn log_loss(z: f64, y: f64) -> f64 {
    let p1 = sigmoid(z).max(PROB_CLAMP);
    let p0 = sigmoid(-z).max(PROB_CLAMP);
    -(y * p1.ln() + (1.0 - y) * p0.ln())
}

pub(crate) fn check_training_data(rows: usize, labels: &[f64], finite: bool) -> Result<()> {
    if rows == 0 {
        return Err(Error::InvalidArgument("no training rows".into()));
    }
    if rows != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows,
            actual: labels.len(),
        });
    }
    if !finite {
        return Err(Error::InvalidData("non-finite feature value".into()));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidData("labels must be 0 or 1".into()));
    }
    Ok(())
}
