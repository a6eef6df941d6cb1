//! From-scratch base learners behind one probabilistic contract.
//!
//! Every trained model exposes `predict_proba` returning a distribution
//! over its class list (original label values, ascending). Training is
//! deterministic given data, params, and seed; ties in split search
//! break toward the lowest feature index, then the lowest threshold.

mod boost;
mod forest;
mod linear;
mod tree;

pub use boost::{train_gbt, BoostedModel, GbtParams};
pub use forest::{train_forest, ForestModel, ForestParams, Mtry};
pub use linear::{
    train_linsvm, train_logreg, logreg_loss_and_grad, LogRegModel, LogRegParams, SvmModel,
    SvmParams,
};
pub use tree::{train_cart, CartParams, TreeModel, TreeNode};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate().skip(1) {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}

/// Map raw labels to compact indices 0..K-1 plus the ascending class list.
pub fn compact_labels(y: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let compact = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    (compact, classes)
}

/// The shared probabilistic prediction contract.
pub trait Classifier {
    /// Original label values, ascending, aligned with `predict_proba`.
    fn classes(&self) -> &[usize];

    /// Distribution over `classes()`; entries sum to 1.
    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;

    /// Predicted original label (argmax, lowest class on ties).
    fn predict(&self, x: &[f64]) -> usize {
        self.classes()[argmax(&self.predict_proba(x))]
    }

    /// Probability assigned to a specific original label (0 if absent).
    fn prob_of(&self, x: &[f64], label: usize) -> f64 {
        match self.classes().iter().position(|c| *c == label) {
            Some(i) => self.predict_proba(x)[i],
            None => 0.0,
        }
    }
}

/// Fixed-output classifier; the degenerate baseline model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantModel {
    pub classes: Vec<usize>,
    pub probs: Vec<f64>,
}

impl Classifier for ConstantModel {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn predict_proba(&self, _x: &[f64]) -> Vec<f64> {
        self.probs.clone()
    }
}

/// Any trained model, for serialization and heterogeneous banks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
pub enum AnyModel {
    Cart(TreeModel),
    Forest(ForestModel),
    Gbt(BoostedModel),
    LogReg(LogRegModel),
    LinSvm(SvmModel),
    Constant(ConstantModel),
}

impl Classifier for AnyModel {
    fn classes(&self) -> &[usize] {
        match self {
            AnyModel::Cart(m) => m.classes(),
            AnyModel::Forest(m) => m.classes(),
            AnyModel::Gbt(m) => m.classes(),
            AnyModel::LogReg(m) => m.classes(),
            AnyModel::LinSvm(m) => m.classes(),
            AnyModel::Constant(m) => m.classes(),
        }
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            AnyModel::Cart(m) => m.predict_proba(x),
            AnyModel::Forest(m) => m.predict_proba(x),
            AnyModel::Gbt(m) => m.predict_proba(x),
            AnyModel::LogReg(m) => m.predict_proba(x),
            AnyModel::LinSvm(m) => m.predict_proba(x),
            AnyModel::Constant(m) => m.predict_proba(x),
        }
    }
}

/// Which learner to train, with its parameters.
///
/// Used wherever a base learner is configurable (pairwise banks,
/// one-vs-rest, the single-query fallback tree).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerSpec {
    Cart(CartParams),
    Forest(ForestParams),
    Gbt(GbtParams),
    LogReg(LogRegParams),
    LinSvm(SvmParams),
}

impl LearnerSpec {
    /// Train on raw labels; the model carries the original class list.
    pub fn fit(&self, x: &[Vec<f64>], y_raw: &[usize]) -> Result<AnyModel> {
        if x.is_empty() || x.len() != y_raw.len() {
            return Err(Error::EmptyData);
        }
        let (y, classes) = compact_labels(y_raw);
        let k = classes.len();
        Ok(match self {
            LearnerSpec::Cart(p) => AnyModel::Cart(train_cart(x, &y, k, classes, p)?),
            LearnerSpec::Forest(p) => AnyModel::Forest(train_forest(x, &y, k, classes, p)?),
            LearnerSpec::Gbt(p) => AnyModel::Gbt(train_gbt(x, &y, k, classes, p)?),
            LearnerSpec::LogReg(p) => AnyModel::LogReg(train_logreg(x, &y, k, classes, p)?),
            LearnerSpec::LinSvm(p) => {
                if k != 2 {
                    return Err(Error::NotBinary(k));
                }
                AnyModel::LinSvm(train_linsvm(x, &y, classes, p)?)
            }
        })
    }
}
