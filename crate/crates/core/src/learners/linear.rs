//! Linear learners: multinomial logistic regression and a linear SVM
//! with sigmoid (Platt) calibration so both emit probabilities.
//!
//! Both standardize features internally and record the statistics, so a
//! trained model applies the exact transformation at prediction time.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

use super::Classifier;

fn standardize_stats(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let d = x[0].len();
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = vec![0.0; d];
    for row in x {
        for (s, (v, m)) in std.iter_mut().zip(row.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    (mean, std)
}

fn apply_standardize(x: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(mean.iter().zip(std))
        .map(|(v, (m, s))| (v - m) / s)
        .collect()
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

/// Logistic regression parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegParams {
    pub epochs: usize,
    pub step: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            epochs: 500,
            step: 0.5,
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// Trained multinomial logistic regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel {
    pub classes: Vec<usize>,
    /// classes x features.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

impl Classifier for LogRegModel {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let z = apply_standardize(x, &self.mean, &self.std);
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(&z).map(|(wi, zi)| wi * zi).sum::<f64>() + b)
            .collect();
        softmax(&scores)
    }
}

/// Mean multinomial log-loss with L2 penalty, and its analytic gradient.
///
/// `z` must already be standardized. Exposed so the gradient can be
/// checked against finite differences.
pub fn logreg_loss_and_grad(
    weights: &[Vec<f64>],
    bias: &[f64],
    z: &[Vec<f64>],
    y: &[usize],
    l2: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let n = z.len();
    let k = weights.len();
    let d = weights[0].len();
    let mut loss = 0.0;
    let mut grad_w = vec![vec![0.0; d]; k];
    let mut grad_b = vec![0.0; k];
    for (zi, &yi) in z.iter().zip(y) {
        let scores: Vec<f64> = weights
            .iter()
            .zip(bias)
            .map(|(w, b)| w.iter().zip(zi).map(|(wi, v)| wi * v).sum::<f64>() + b)
            .collect();
        let p = softmax(&scores);
        loss -= p[yi].max(1e-300).ln();
        for c in 0..k {
            let err = p[c] - f64::from(c == yi);
            grad_b[c] += err;
            for (gw, v) in grad_w[c].iter_mut().zip(zi) {
                *gw += err * v;
            }
        }
    }
    let nf = n as f64;
    loss /= nf;
    for c in 0..k {
        grad_b[c] /= nf;
        for (gw, w) in grad_w[c].iter_mut().zip(&weights[c]) {
            *gw = *gw / nf + l2 * w;
        }
    }
    let penalty: f64 = weights
        .iter()
        .flat_map(|row| row.iter().map(|w| w * w))
        .sum::<f64>()
        * 0.5
        * l2;
    (loss + penalty, grad_w, grad_b)
}

/// Train multinomial logistic regression by full-batch gradient descent
/// on standardized features. Weights start at zero, so the untrained
/// model is uniform.
pub fn train_logreg(
    x: &[Vec<f64>],
    y: &[usize],
    k: usize,
    classes: Vec<usize>,
    params: &LogRegParams,
) -> Result<LogRegModel> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = x[0].len();
    let (mean, std) = standardize_stats(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| apply_standardize(r, &mean, &std)).collect();
    let mut weights = vec![vec![0.0; d]; k];
    let mut bias = vec![0.0; k];
    for _ in 0..params.epochs {
        let (_, grad_w, grad_b) = logreg_loss_and_grad(&weights, &bias, &z, y, params.l2);
        for c in 0..k {
            bias[c] -= params.step * grad_b[c];
            for (w, g) in weights[c].iter_mut().zip(&grad_w[c]) {
                *w -= params.step * g;
            }
        }
    }
    Ok(LogRegModel {
        classes,
        weights,
        bias,
        mean,
        std,
    })
}

// ---------------------------------------------------------------------------
// Linear SVM with Platt calibration
// ---------------------------------------------------------------------------

/// Linear SVM parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmParams {
    pub epochs: usize,
    pub step: f64,
    /// Hinge weight; the L2 term is 1/(2C) per sample.
    pub c: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            epochs: 300,
            step: 0.1,
            c: 1.0,
            seed: 0,
        }
    }
}

/// Trained binary SVM; classes[1] is the positive side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<usize>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Sigmoid calibration: p(positive) = 1 / (1 + exp(a*margin + b)).
    pub calib_a: f64,
    pub calib_b: f64,
}

impl SvmModel {
    /// Raw decision margin on standardized features.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let z = apply_standardize(x, &self.mean, &self.std);
        self.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn calibrated(&self, margin: f64) -> f64 {
        let t = self.calib_a * margin + self.calib_b;
        // numerically safe logistic
        if t >= 0.0 {
            let e = (-t).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + t.exp())
        }
    }
}

impl Classifier for SvmModel {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let p = self.calibrated(self.margin(x));
        vec![1.0 - p, p]
    }
}

/// Platt scaling by Newton's method with the usual smoothed targets.
/// Returns (a, b) for p = 1/(1+exp(a*m+b)).
fn fit_platt(margins: &[f64], y_pos: &[bool]) -> (f64, f64) {
    let n_pos = y_pos.iter().filter(|p| **p).count() as f64;
    let n_neg = y_pos.len() as f64 - n_pos;
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = y_pos.iter().map(|&p| if p { t_pos } else { t_neg }).collect();

    let mut a = 0.0f64;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let min_step = 1e-10;
    let sigma = 1e-12;

    let value = |a: f64, b: f64| -> f64 {
        margins
            .iter()
            .zip(&targets)
            .map(|(&m, &t)| {
                let f = a * m + b;
                if f >= 0.0 {
                    t * f + (1.0 + (-f).exp()).ln()
                } else {
                    (t - 1.0) * f + (1.0 + f.exp()).ln()
                }
            })
            .sum()
    };
    let mut fval = value(a, b);

    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&m, &t) in margins.iter().zip(&targets) {
            let f = a * m + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += m * m * d2;
            h22 += d2;
            h21 += m * d2;
            let d1 = t - p;
            g1 += m * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nval = value(na, nb);
            if nval < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nval;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

/// Train a binary linear SVM by deterministic full-batch subgradient
/// descent on the hinge loss, then calibrate with a sigmoid over the
/// training margins.
pub fn train_linsvm(
    x: &[Vec<f64>],
    y: &[usize],
    classes: Vec<usize>,
    params: &SvmParams,
) -> Result<SvmModel> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    if classes.len() != 2 {
        return Err(Error::NotBinary(classes.len()));
    }
    let d = x[0].len();
    let n = x.len() as f64;
    let (mean, std) = standardize_stats(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| apply_standardize(r, &mean, &std)).collect();
    let sign: Vec<f64> = y.iter().map(|&yi| if yi == 1 { 1.0 } else { -1.0 }).collect();
    let lambda = 1.0 / (params.c * n);

    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    for _ in 0..params.epochs {
        let mut grad_w: Vec<f64> = w.iter().map(|wi| lambda * wi).collect();
        let mut grad_b = 0.0;
        for (zi, &s) in z.iter().zip(&sign) {
            let f: f64 = w.iter().zip(zi).map(|(wi, v)| wi * v).sum::<f64>() + b;
            if s * f < 1.0 {
                for (g, v) in grad_w.iter_mut().zip(zi) {
                    *g -= s * v / n;
                }
                grad_b -= s / n;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= params.step * g;
        }
        b -= params.step * grad_b;
    }

    let margins: Vec<f64> = z
        .iter()
        .map(|zi| w.iter().zip(zi).map(|(wi, v)| wi * v).sum::<f64>() + b)
        .collect();
    let y_pos: Vec<bool> = y.iter().map(|&yi| yi == 1).collect();
    let (calib_a, calib_b) = fit_platt(&margins, &y_pos);

    Ok(SvmModel {
        classes,
        weights: w,
        bias: b,
        mean,
        std,
        calib_a,
        calib_b,
    })
}
