use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::TrainConfig;

/// A differentiable training objective over a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, params: &[f64]) -> f64;
    /// Writes the gradient into `grad` and returns the value.
    fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub loss: f64,
    pub epochs: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Loss after each accepted epoch, starting with the initial loss.
    #[serde(skip)]
    pub history: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Full-batch gradient descent with a backtracking (Armijo) line search.
///
/// Each epoch starts from the Barzilai-Borwein step of the previous move and halves it
/// until the sufficient-decrease condition holds, so accepted losses never increase.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>, cfg: &TrainConfig) -> Result<(Vec<f64>, FitInfo)> {
    let n = obj.dim();
    assert_eq!(x0.len(), n);
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(&x, &mut g);
    if !f.is_finite() {
        return Err(Error::Diverged { epoch: 0, loss: f });
    }
    let mut step = cfg.learning_rate;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut epochs = 0;
    let mut converged = false;
    let mut history = vec![f];
    while epochs < cfg.max_epochs {
        let gn2 = dot(&g, &g);
        if gn2.sqrt() < cfg.tolerance {
            converged = true;
            break;
        }
        epochs += 1;
        let mut f_new = f64::NAN;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for ((xn, xi), gi) in x_new.iter_mut().zip(&x).zip(&g) {
                *xn = xi - step * gi;
            }
            f_new = obj.value_grad(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f - ARMIJO * step * gn2 {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if !f_new.is_finite() {
                return Err(Error::Diverged { epoch: epochs, loss: f_new });
            }
            // no representable step decreases the loss any further
            break;
        }
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = x_new[i] - x[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        step = if sy > 0.0 { ss / sy } else { step * 2.0 }.min(1e12);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        history.push(f);
    }
    let grad_norm = dot(&g, &g).sqrt();
    Ok((
        x,
        FitInfo {
            loss: f,
            epochs,
            grad_norm,
            converged: converged || grad_norm < cfg.tolerance,
            history,
        },
    ))
}

/// Largest relative difference between the analytic gradient and central finite
/// differences with step `1e-5`.
pub fn gradient_check<O: Objective + ?Sized>(obj: &O, params: &[f64]) -> f64 {
    const H: f64 = 1e-5;
    let mut analytic = vec![0.0; params.len()];
    obj.value_grad(params, &mut analytic);
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = p[i];
        p[i] = orig + H;
        let up = obj.value(&p);
        p[i] = orig - H;
        let down = obj.value(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * H);
        let denom = (analytic[i].abs() + numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x) = Σ c_i (x_i - t_i)²
    struct Quadratic {
        c: Vec<f64>,
        t: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn value(&self, p: &[f64]) -> f64 {
            p.iter()
                .zip(&self.c)
                .zip(&self.t)
                .map(|((x, c), t)| c * (x - t) * (x - t))
                .sum()
        }
        fn value_grad(&self, p: &[f64], g: &mut [f64]) -> f64 {
            for i in 0..p.len() {
                g[i] = 2.0 * self.c[i] * (p[i] - self.t[i]);
            }
            self.value(p)
        }
    }

    #[test]
    fn ill_conditioned_quadratic_converges() {
        let q = Quadratic {
            c: vec![1e-3, 1.0, 1e3],
            t: vec![1.0, -2.0, 3.0],
        };
        let cfg = TrainConfig {
            tolerance: 1e-10,
            ..TrainConfig::default()
        };
        let (x, info) = minimize(&q, vec![0.0; 3], &cfg).unwrap();
        assert!(info.converged, "{info:?}");
        for (a, b) in x.iter().zip(&q.t) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(gradient_check(&q, &x) < 1e-6);
    }

    struct Nan;

    impl Objective for Nan {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _: &[f64]) -> f64 {
            f64::NAN
        }
        fn value_grad(&self, _: &[f64], g: &mut [f64]) -> f64 {
            g[0] = 1.0;
            f64::NAN
        }
    }

    #[test]
    fn non_finite_loss_names_the_epoch() {
        match minimize(&Nan, vec![0.0], &TrainConfig::default()) {
            Err(Error::Diverged { epoch, .. }) => assert_eq!(epoch, 0),
            other => panic!("{other:?}"),
        }
    }
}
