use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::Normalizer;

use super::optim::{self, FitInfo, Objective};
use super::{check_training_data, log_loss, sigmoid, Design, TrainConfig};

/// `P(radiant) = sigmoid(w · normalize(x) + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub normalizer: Normalizer,
    pub fit: FitInfo,
}

/// Mean log-loss of a linear model on standardized columns, with the
/// standardization folded into the products so `x` is never copied.
struct LrObjective<'a, D: Design + ?Sized> {
    x: &'a D,
    y: &'a [f64],
    mean: &'a [f64],
    inv_sd: Vec<f64>,
    lambda: f64,
}

impl<D: Design + ?Sized> LrObjective<'_, D> {
    /// Effective raw-space weights and the matching intercept.
    fn raw(&self, params: &[f64]) -> (Vec<f64>, f64) {
        let d = self.inv_sd.len();
        let w: Vec<f64> = params[..d].iter().zip(&self.inv_sd).map(|(w, s)| w * s).collect();
        let b = params[d] - optim::dot(&w, self.mean);
        (w, b)
    }

    fn logits(&self, params: &[f64]) -> Vec<f64> {
        let (w, b) = self.raw(params);
        let mut z = vec![0.0; self.y.len()];
        self.x.mul(&w, &mut z);
        z.iter_mut().for_each(|v| *v += b);
        z
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        let w = &params[..self.inv_sd.len()];
        self.lambda * optim::dot(w, w)
    }
}

impl<D: Design + ?Sized> Objective for LrObjective<'_, D> {
    fn dim(&self) -> usize {
        self.inv_sd.len() + 1
    }

    fn value(&self, params: &[f64]) -> f64 {
        let z = self.logits(params);
        let n = self.y.len() as f64;
        z.iter().zip(self.y).map(|(&z, &y)| log_loss(z, y)).sum::<f64>() / n + self.penalty(params)
    }

    fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.inv_sd.len();
        let z = self.logits(params);
        let n = self.y.len() as f64;
        let mut loss = 0.0;
        let r: Vec<f64> = z
            .iter()
            .zip(self.y)
            .map(|(&z, &y)| {
                loss += log_loss(z, y);
                (sigmoid(z) - y) / n
            })
            .collect();
        let rsum: f64 = r.iter().sum();
        self.x.mul_t(&r, &mut grad[..d]);
        for j in 0..d {
            grad[j] = (grad[j] - self.mean[j] * rsum) * self.inv_sd[j] + 2.0 * self.lambda * params[j];
        }
        grad[d] = rsum;
        loss / n + self.penalty(params)
    }
}

fn objective<'a, D: Design + ?Sized>(
    x: &'a D,
    y: &'a [f64],
    normalizer: &'a Normalizer,
    lambda: f64,
) -> LrObjective<'a, D> {
    LrObjective {
        x,
        y,
        mean: &normalizer.mean,
        inv_sd: normalizer.sd.iter().map(|s| 1.0 / s).collect(),
        lambda,
    }
}

/// Fits weights from zero by full-batch gradient descent.
pub fn train_lr<D: Design + ?Sized>(x: &D, y: &[f64], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    check_training_data(x.rows(), y, x.all_finite())?;
    let normalizer = if cfg.standardize {
        let (mean, var) = x.column_moments();
        Normalizer::from_moments(mean, var)
    } else {
        Normalizer::identity(x.cols())
    };
    let obj = objective(x, y, &normalizer, cfg.lambda);
    let (params, fit) = optim::minimize(&obj, vec![0.0; x.cols() + 1], cfg)?;
    let d = x.cols();
    Ok(LinearModel {
        weights: params[..d].to_vec(),
        bias: params[d],
        lambda: cfg.lambda,
        normalizer,
        fit,
    })
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// A model with the given standardized-space weights and no fit history.
    pub fn from_weights(weights: Vec<f64>, bias: f64, normalizer: Normalizer) -> Self {
        LinearModel {
            weights,
            bias,
            lambda: 0.0,
            normalizer,
            fit: FitInfo {
                loss: 0.0,
                epochs: 0,
                grad_norm: 0.0,
                converged: false,
                history: Vec::new(),
            },
        }
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut z = self.bias;
        for ((v, w), (m, s)) in x
            .iter()
            .zip(&self.weights)
            .zip(self.normalizer.mean.iter().zip(&self.normalizer.sd))
        {
            z += w * (v - m) / s;
        }
        Ok(z)
    }

    /// Probability that Radiant wins.
    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        self.logit(x).map(sigmoid)
    }

    /// Probabilities for every row of a design.
    pub fn probabilities<D: Design + ?Sized>(&self, x: &D) -> Result<Vec<f64>> {
        if x.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.cols(),
            });
        }
        let obj = objective(x, &[], &self.normalizer, 0.0);
        let mut params = self.weights.clone();
        params.push(self.bias);
        let (w, b) = obj.raw(&params);
        let mut z = vec![0.0; x.rows()];
        x.mul(&w, &mut z);
        Ok(z.into_iter().map(|z| sigmoid(z + b)).collect())
    }

    /// Worst relative gradient error of the training objective at the fitted weights.
    pub fn gradient_check(&self, x: &Array2<f64>, y: &[f64]) -> Result<f64> {
        check_training_data(x.nrows(), y, x.all_finite())?;
        let obj = objective(x, y, &self.normalizer, self.lambda);
        let mut params = self.weights.clone();
        params.push(self.bias);
        Ok(optim::gradient_check(&obj, &params))
    }
}

impl LinearModel {
    /// Training objective and its gradient with respect to `[weights, bias]` at the
    /// current parameters.
    pub fn loss_gradient(&self, x: &Array2<f64>, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_training_data(x.nrows(), y, x.all_finite())?;
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.ncols(),
            });
        }
        let obj = objective(x, y, &self.normalizer, self.lambda);
        let mut params = self.weights.clone();
        params.push(self.bias);
        let mut grad = vec![0.0; params.len()];
        let loss = obj.value_grad(&params, &mut grad);
        Ok((loss, grad))
    }
}

/// Hard predictions with ties at 0.5 going to Radiant (label 1).
pub fn predict_lr(m: &LinearModel, x: &[f64]) -> Result<f64> {
    Ok(if m.probability(x)? >= 0.5 { 1.0 } else { 0.0 })
}

/// Gradient error of the objective at arbitrary parameters `[w, b]`.
pub fn lr_gradient_check(x: &Array2<f64>, y: &[f64], params: &[f64], lambda: f64, standardize: bool) -> Result<f64> {
    check_training_data(x.nrows(), y, x.all_finite())?;
    let normalizer = if standardize {
        let (mean, var) = x.column_moments();
        Normalizer::from_moments(mean, var)
    } else {
        Normalizer::identity(x.ncols())
    };
    let obj = objective(x, y, &normalizer, lambda);
    Ok(optim::gradient_check(&obj, params))
}
