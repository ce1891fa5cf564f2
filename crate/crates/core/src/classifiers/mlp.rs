use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::Normalizer;

use super::optim::{self, FitInfo, Objective};
use super::{check_training_data, log_loss, sigmoid, Activation, Design, TrainConfig};

/// One hidden layer followed by a sigmoid output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub activation: Activation,
    /// Hidden-by-input, row-major.
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
    pub lambda: f64,
    pub normalizer: Normalizer,
    pub fit: FitInfo,
}

struct Shapes {
    input: usize,
    hidden: usize,
}

impl Shapes {
    fn len(&self) -> usize {
        self.hidden * self.input + 2 * self.hidden + 1
    }

    /// `(W1, b1, w2, b2)` views into a flat parameter vector.
    fn split<'p>(&self, p: &'p [f64]) -> (ArrayView2<'p, f64>, ArrayView1<'p, f64>, ArrayView1<'p, f64>, f64) {
        let (h, d) = (self.hidden, self.input);
        let w1 = ArrayView2::from_shape((h, d), &p[..h * d]).expect("shape");
        let b1 = ArrayView1::from(&p[h * d..h * d + h]);
        let w2 = ArrayView1::from(&p[h * d + h..h * d + 2 * h]);
        (w1, b1, w2, p[h * d + 2 * h])
    }
}

struct MlpObjective<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    shapes: Shapes,
    activation: Activation,
    lambda: f64,
}

struct Forward {
    pre: Array2<f64>,
    act: Array2<f64>,
    z: Array1<f64>,
}

fn forward(x: ArrayView2<'_, f64>, shapes: &Shapes, activation: Activation, p: &[f64]) -> Forward {
    let (w1, b1, w2, b2) = shapes.split(p);
    let mut pre = x.dot(&w1.t());
    pre += &b1;
    let act = pre.mapv(|v| activation.apply(v));
    let z = act.dot(&w2) + b2;
    Forward { pre, act, z }
}

impl MlpObjective<'_> {
    fn penalty(&self, p: &[f64]) -> f64 {
        let (w1, _, w2, _) = self.shapes.split(p);
        self.lambda * (w1.iter().map(|v| v * v).sum::<f64>() + w2.dot(&w2))
    }
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.shapes.len()
    }

    fn value(&self, p: &[f64]) -> f64 {
        let f = forward(self.x, &self.shapes, self.activation, p);
        let n = self.y.len() as f64;
        f.z.iter().zip(self.y).map(|(&z, &y)| log_loss(z, y)).sum::<f64>() / n + self.penalty(p)
    }

    fn value_grad(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        let (h, d) = (self.shapes.hidden, self.shapes.input);
        let f = forward(self.x, &self.shapes, self.activation, p);
        let (w1, _, w2, _) = self.shapes.split(p);
        let n = self.y.len() as f64;
        let mut loss = 0.0;
        let r: Array1<f64> = f
            .z
            .iter()
            .zip(self.y)
            .map(|(&z, &y)| {
                loss += log_loss(z, y);
                (sigmoid(z) - y) / n
            })
            .collect();
        let g_w2 = f.act.t().dot(&r);
        let mut delta = f.act;
        for ((dv, &pre), (i, k)) in delta
            .iter_mut()
            .zip(f.pre.iter())
            .zip((0..self.y.len()).flat_map(|i| (0..h).map(move |k| (i, k))))
        {
            *dv = r[i] * w2[k] * self.activation.derivative(pre, *dv);
        }
        let g_w1 = delta.t().dot(&self.x);
        let g_b1 = delta.sum_axis(Axis(0));
        let lam2 = 2.0 * self.lambda;
        for ((g, v), w) in grad[..h * d].iter_mut().zip(g_w1.iter()).zip(w1.iter()) {
            *g = v + lam2 * w;
        }
        grad[h * d..h * d + h].copy_from_slice(g_b1.as_slice().expect("contiguous"));
        for ((g, v), w) in grad[h * d + h..h * d + 2 * h].iter_mut().zip(g_w2.iter()).zip(w2.iter()) {
            *g = v + lam2 * w;
        }
        grad[h * d + 2 * h] = r.sum();
        loss / n + self.penalty(p)
    }
}

fn init_params(shapes: &Shapes, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, d) = (shapes.hidden, shapes.input);
    let r1 = 1.0 / (d.max(1) as f64).sqrt();
    let r2 = 1.0 / (h as f64).sqrt();
    let mut p = Vec::with_capacity(shapes.len());
    p.extend((0..h * d).map(|_| rng.random_range(-r1..=r1)));
    p.extend(std::iter::repeat_n(0.0, h));
    p.extend((0..h).map(|_| rng.random_range(-r2..=r2)));
    p.push(0.0);
    p
}

pub fn train_mlp(
    x: &Array2<f64>,
    y: &[f64],
    cfg: &TrainConfig,
    hidden: usize,
    activation: Activation,
) -> Result<MlpModel> {
    cfg.validate()?;
    if hidden == 0 {
        return Err(Error::InvalidArgument("hidden layer must have at least one unit".into()));
    }
    check_training_data(x.nrows(), y, x.all_finite())?;
    let normalizer = if cfg.standardize {
        Normalizer::fit(x.view())?
    } else {
        Normalizer::identity(x.ncols())
    };
    let xs = normalizer.apply_matrix(x.view());
    let shapes = Shapes {
        input: x.ncols(),
        hidden,
    };
    let obj = MlpObjective {
        x: xs.view(),
        y,
        shapes,
        activation,
        lambda: cfg.lambda,
    };
    let (p, fit) = optim::minimize(&obj, init_params(&obj.shapes, cfg.seed), cfg)?;
    Ok(MlpModel::from_flat(&obj.shapes, &p, activation, cfg.lambda, normalizer, fit))
}

impl MlpModel {
    fn from_flat(
        shapes: &Shapes,
        p: &[f64],
        activation: Activation,
        lambda: f64,
        normalizer: Normalizer,
        fit: FitInfo,
    ) -> Self {
        let (w1, b1, w2, b2) = shapes.split(p);
        MlpModel {
            activation,
            w1: w1.to_owned(),
            b1: b1.to_owned(),
            w2: w2.to_owned(),
            b2,
            lambda,
            normalizer,
            fit,
        }
    }

    fn shapes(&self) -> Shapes {
        Shapes {
            input: self.w1.ncols(),
            hidden: self.w1.nrows(),
        }
    }

    fn flat(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.w1.iter().copied().collect();
        p.extend(self.b1.iter());
        p.extend(self.w2.iter());
        p.push(self.b2);
        p
    }

    /// Network whose output layer is zero, so it predicts `sigmoid(b2)` everywhere.
    pub fn constant(input: usize, hidden: usize, activation: Activation, b2: f64) -> Self {
        MlpModel {
            activation,
            w1: Array2::zeros((hidden, input)),
            b1: Array1::zeros(hidden),
            w2: Array1::zeros(hidden),
            b2,
            lambda: 0.0,
            normalizer: Normalizer::identity(input),
            fit: FitInfo {
                loss: 0.0,
                epochs: 0,
                grad_norm: 0.0,
                converged: false,
                history: Vec::new(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let xs = Array1::from(self.normalizer.apply(x));
        let mut pre = self.w1.dot(&xs);
        pre += &self.b1;
        Ok(pre.mapv(|v| self.activation.apply(v)).dot(&self.w2) + self.b2)
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        self.logit(x).map(sigmoid)
    }

    pub fn probabilities(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.ncols(),
            });
        }
        let xs = self.normalizer.apply_matrix(x.view());
        let f = forward(xs.view(), &self.shapes(), self.activation, &self.flat());
        Ok(f.z.iter().map(|&z| sigmoid(z)).collect())
    }

    /// Worst relative gradient error of the training objective at the current weights.
    pub fn gradient_check(&self, x: &Array2<f64>, y: &[f64]) -> Result<f64> {
        check_training_data(x.nrows(), y, x.all_finite())?;
        let xs = self.normalizer.apply_matrix(x.view());
        let obj = MlpObjective {
            x: xs.view(),
            y,
            shapes: self.shapes(),
            activation: self.activation,
            lambda: self.lambda,
        };
        Ok(optim::gradient_check(&obj, &self.flat()))
    }

    /// Training objective and its gradient, flattened as `[W1 row-major, b1, w2, b2]`.
    pub fn loss_gradient(&self, x: &Array2<f64>, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_training_data(x.nrows(), y, x.all_finite())?;
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.ncols(),
            });
        }
        let xs = self.normalizer.apply_matrix(x.view());
        let obj = MlpObjective {
            x: xs.view(),
            y,
            shapes: self.shapes(),
            activation: self.activation,
            lambda: self.lambda,
        };
        let p = self.flat();
        let mut grad = vec![0.0; p.len()];
        let loss = obj.value_grad(&p, &mut grad);
        Ok((loss, grad))
    }

    /// Same network with freshly initialized weights, for checking gradients away from a fit.
    pub fn initialized(input: usize, hidden: usize, activation: Activation, lambda: f64, seed: u64) -> Self {
        let shapes = Shapes { input, hidden };
        let p = init_params(&shapes, seed);
        let base = MlpModel::constant(input, hidden, activation, 0.0);
        MlpModel::from_flat(&shapes, &p, activation, lambda, base.normalizer, base.fit)
    }
}

pub fn predict_mlp(m: &MlpModel, x: &[f64]) -> Result<f64> {
    Ok(if m.probability(x)? >= 0.5 { 1.0 } else { 0.0 })
}
