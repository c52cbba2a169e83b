//! Multinomial logistic regression with an L2 penalty on the weights,
//! trained from scratch by a truncated-Newton (Newton-CG) optimizer.
//!
//! The objective, for weights `W` (K×d), unregularized biases `b` (K) and
//! inverse regularization strength `C`:
//!
//! ```text
//! J(W, b) = ½·‖W‖²_F + C · Σ_i −ln p(y_i | x_i; W, b)
//! ```
//!
//! with `p(· | x) = softmax(W·x + b)`. The gradient and Hessian-vector
//! product are analytic; the Newton system is solved approximately by
//! conjugate gradient using Hessian-vector products only, followed by an
//! Armijo backtracking line search. Training starts from zero parameters
//! and is fully deterministic.

mod newton;
pub mod io;

use std::fmt;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingFingerprint;

pub use io::{load_model, read_model, save_model, write_model, ModelIoError};

/// Training hyperparameters. The defaults are the published recipe:
/// `C = 0.9474722736821756`, `tol = 0.1` on the gradient infinity norm,
/// at most 100 outer iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Inverse regularization strength; multiplies the data-fit term.
    pub c: f64,
    /// Convergence threshold on the gradient infinity norm.
    pub tol: f64,
    /// Outer (Newton) iteration cap.
    pub max_iter: usize,
    /// Inner CG iteration cap; `None` means `min(20·n_params, 1000)`.
    pub cg_max_iter: Option<usize>,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Line-search backtracking factor.
    pub backtrack: f64,
    /// Maximum number of step halvings per line search.
    pub max_backtracks: usize,
    /// Seed recorded for provenance and used by data splitting.
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            c: 0.9474722736821756,
            tol: 0.1,
            max_iter: 100,
            cg_max_iter: None,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 30,
            seed: 42,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ClassifierError::InvalidHyper("C must be positive and finite"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ClassifierError::InvalidHyper("tol must be positive and finite"));
        }
        if self.max_iter == 0 {
            return Err(ClassifierError::InvalidHyper("max_iter must be at least 1"));
        }
        if self.cg_max_iter == Some(0) {
            return Err(ClassifierError::InvalidHyper("cg_max_iter must be at least 1"));
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return Err(ClassifierError::InvalidHyper("armijo_c1 must lie in (0, 1)"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(ClassifierError::InvalidHyper("backtrack must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn effective_cg_max_iter(&self, n_params: usize) -> usize {
        self.cg_max_iter.unwrap_or_else(|| (20 * n_params).min(1000).max(1))
    }
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(&'static str),
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("need at least as many samples ({n}) as classes ({k})")]
    TooFewSamples { n: usize, k: usize },
    #[error("feature matrix has {x} rows but {y} labels were given")]
    LengthMismatch { x: usize, y: usize },
    #[error("label index {value} at sample {sample} is out of range for {k} classes")]
    LabelOutOfRange { sample: usize, value: usize, k: usize },
    #[error("class {0:?} has no samples")]
    MissingClass(String),
    #[error("non-finite intermediate value at sample {sample}")]
    NonFinite { sample: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Numerically stable softmax: `p_k = exp(z_k − max z) / Σ_j exp(z_j − max z)`.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Per-sample forward pass: logits, softmax probabilities and the
/// log-sum-exp of each row.
fn forward(
    w: &Array2<f64>,
    b: &Array1<f64>,
    x: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>, Vec<f64>), ClassifierError> {
    let mut logits = x.dot(&w.t());
    logits += b;
    let (n, k) = (logits.nrows(), logits.ncols());
    let mut probs = Array2::zeros((n, k));
    let mut lse = Vec::with_capacity(n);
    for i in 0..n {
        let row = logits.row(i);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite { sample: i });
        }
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for j in 0..k {
            let e = (row[j] - max).exp();
            probs[[i, j]] = e;
            sum += e;
        }
        for j in 0..k {
            probs[[i, j]] /= sum;
        }
        lse.push(max + sum.ln());
    }
    Ok((logits, probs, lse))
}

fn check_problem(
    w: &Array2<f64>,
    b: &Array1<f64>,
    x: &Array2<f64>,
    y: &[usize],
) -> Result<(), ClassifierError> {
    if x.ncols() != w.ncols() {
        return Err(ClassifierError::DimensionMismatch { expected: w.ncols(), found: x.ncols() });
    }
    if w.nrows() != b.len() {
        return Err(ClassifierError::DimensionMismatch { expected: w.nrows(), found: b.len() });
    }
    if y.len() != x.nrows() {
        return Err(ClassifierError::LengthMismatch { x: x.nrows(), y: y.len() });
    }
    let k = w.nrows();
    for (sample, &value) in y.iter().enumerate() {
        if value >= k {
            return Err(ClassifierError::LabelOutOfRange { sample, value, k });
        }
    }
    Ok(())
}

/// Objective value and its analytic gradient over `(W, b)`:
/// `∂J/∂W = W + C·(P − Y)ᵀX`, `∂J/∂b = C·colsums(P − Y)`.
pub fn objective_and_gradient(
    w: &Array2<f64>,
    b: &Array1<f64>,
    x: &Array2<f64>,
    y: &[usize],
    c: f64,
) -> Result<(f64, Array2<f64>, Array1<f64>), ClassifierError> {
    let (objective, grad, _) = objective_gradient_probs(w, b, x, y, c)?;
    Ok((objective, grad.w, grad.b))
}

pub(crate) struct ParamVec {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

fn objective_gradient_probs(
    w: &Array2<f64>,
    b: &Array1<f64>,
    x: &Array2<f64>,
    y: &[usize],
    c: f64,
) -> Result<(f64, ParamVec, Array2<f64>), ClassifierError> {
    check_problem(w, b, x, y)?;
    let (logits, probs, lse) = forward(w, b, x)?;
    let mut data_loss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        data_loss += lse[i] - logits[[i, yi]];
    }
    let objective = 0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * data_loss;

    let mut residual = probs.clone();
    for (i, &yi) in y.iter().enumerate() {
        residual[[i, yi]] -= 1.0;
    }
    let grad_w = w + &(residual.t().dot(x) * c);
    let grad_b = residual.sum_axis(Axis(0)) * c;
    Ok((objective, ParamVec { w: grad_w, b: grad_b }, probs))
}

/// Action of the Hessian of the data term, given precomputed probabilities.
///
/// Per sample `i` with probability row `p_i` and logit perturbation
/// `s_i = V_w·x_i + v_b`, the contribution is
/// `a_i = p_i ∘ s_i − p_i·(p_iᵀ s_i)`; the data action on the W block is
/// `C·AᵀX`, on the b block `C·colsums(A)`. The L2 regularizer adds the
/// W block of `v` unchanged. The Hessian of the log-loss does not depend
/// on the labels.
pub(crate) struct HessianOp<'a> {
    pub probs: &'a Array2<f64>,
    pub x: &'a Array2<f64>,
    pub c: f64,
}

impl HessianOp<'_> {
    pub(crate) fn apply(&self, v: &ParamVec) -> ParamVec {
        let mut s = self.x.dot(&v.w.t());
        s += &v.b;
        let row_dot = (&s * self.probs).sum_axis(Axis(1));
        let mut a = s;
        for ((i, _), value) in a.indexed_iter_mut() {
            *value -= row_dot[i];
        }
        a *= self.probs;
        let w = &v.w + &(a.t().dot(self.x) * self.c);
        let b = a.sum_axis(Axis(0)) * self.c;
        ParamVec { w, b }
    }
}

/// Hessian-vector product `H·v` of the objective at `(W, b)`.
pub fn hessian_vector_product(
    w: &Array2<f64>,
    b: &Array1<f64>,
    x: &Array2<f64>,
    c: f64,
    v_w: &Array2<f64>,
    v_b: &Array1<f64>,
) -> Result<(Array2<f64>, Array1<f64>), ClassifierError> {
    if v_w.dim() != w.dim() {
        return Err(ClassifierError::DimensionMismatch { expected: w.len(), found: v_w.len() });
    }
    if v_b.len() != b.len() {
        return Err(ClassifierError::DimensionMismatch { expected: b.len(), found: v_b.len() });
    }
    if x.ncols() != w.ncols() {
        return Err(ClassifierError::DimensionMismatch { expected: w.ncols(), found: x.ncols() });
    }
    let (_, probs, _) = forward(w, b, x)?;
    let op = HessianOp { probs: &probs, x, c };
    let hv = op.apply(&ParamVec { w: v_w.clone(), b: v_b.clone() });
    Ok((hv.w, hv.b))
}

/// A trained model: class-by-feature weights, per-class biases, the class
/// order, the fingerprint of the vector file the features came from (if
/// any), and the hyperparameters used.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub classes: Vec<String>,
    pub embedding: Option<EmbeddingFingerprint>,
    pub hyperparams: Hyperparams,
}

impl ModelParams {
    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dimension(&self) -> usize {
        self.weights.ncols()
    }

    /// `softmax(W·x + b)` in the model's class order.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        if x.len() != self.dimension() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.dimension(),
                found: x.len(),
            });
        }
        let logits: Vec<f64> = (0..self.n_classes())
            .map(|k| {
                self.biases[k]
                    + self.weights.row(k).iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        Ok(softmax(&logits))
    }

    /// Class index of the most probable class; ties break toward the lowest
    /// index in the class order.
    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        let probs = self.predict_proba(x)?;
        let mut best = 0;
        for (k, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = k;
            }
        }
        Ok(best)
    }

    pub fn class_name(&self, index: usize) -> &str {
        &self.classes[index]
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    /// Outer Newton iterations performed (accepted steps).
    pub iterations: usize,
    pub final_objective: f64,
    pub final_grad_inf_norm: f64,
    /// True iff the gradient infinity norm reached `tol`.
    pub converged: bool,
    /// True iff a line search exhausted its backtracks and training stopped
    /// with the best parameters so far.
    pub line_search_failed: bool,
    /// Objective value at initialization and after each accepted step;
    /// non-increasing by construction.
    pub objective_trace: Vec<f64>,
}

impl fmt::Display for TrainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, objective {:.6}, |grad|inf {:.6}, converged: {}",
            self.iterations, self.final_objective, self.final_grad_inf_norm, self.converged
        )
    }
}

pub use newton::train;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_problem(
        rng: &mut StdRng,
        n: usize,
        d: usize,
        k: usize,
    ) -> (Array2<f64>, Array1<f64>, Array2<f64>, Vec<usize>) {
        let w = Array2::from_shape_fn((k, d), |_| rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_fn(k, |_| rng.random_range(-1.0..1.0));
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..n).map(|i| i % k).collect();
        (w, b, x, y)
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        assert_eq!(softmax(&[0.0, 0.0, 0.0, 0.0]), vec![0.25; 4]);
    }

    #[test]
    fn softmax_survives_large_logits() {
        let p = softmax(&[1000.0, 0.0, 0.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert!(p[1] < 1e-300);
    }

    #[test]
    fn softmax_matches_closed_form() {
        let p = softmax(&[1f64.ln(), 2f64.ln(), 3f64.ln(), 4f64.ln()]);
        for (actual, expected) in p.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert_abs_diff_eq!(*actual, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn softmax_sums_to_one_on_random_logits() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..200 {
            let z: Vec<f64> = (0..4).map(|_| rng.random_range(-50.0..50.0)).collect();
            let p = softmax(&z);
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn objective_at_zero_is_uniform_log_loss() {
        let (n, d, k, c) = (6, 3, 4, 0.7);
        let x = Array2::from_shape_fn((n, d), |(i, j)| (i + j) as f64 * 0.1);
        let y = vec![0, 1, 2, 3, 0, 1];
        let w = Array2::zeros((k, d));
        let b = Array1::zeros(k);
        let (objective, _, _) = objective_and_gradient(&w, &b, &x, &y, c).unwrap();
        assert_abs_diff_eq!(objective, c * n as f64 * (k as f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn gradient_reduces_to_weights_as_c_vanishes() {
        let mut rng = StdRng::seed_from_u64(5);
        let (w, b, x, y) = random_problem(&mut rng, 10, 3, 4);
        let (_, gw, gb) = objective_and_gradient(&w, &b, &x, &y, 1e-300).unwrap();
        for (g, v) in gw.iter().zip(w.iter()) {
            assert_abs_diff_eq!(*g, *v, epsilon = 1e-10);
        }
        for g in gb.iter() {
            assert_abs_diff_eq!(*g, 0.0, epsilon = 1e-10);
        }
    }

    /// Central finite differences of the objective, the independent oracle
    /// for the analytic gradient.
    fn finite_difference_gradient(
        w: &Array2<f64>,
        b: &Array1<f64>,
        x: &Array2<f64>,
        y: &[usize],
        c: f64,
        h: f64,
    ) -> (Array2<f64>, Array1<f64>) {
        let objective = |w: &Array2<f64>, b: &Array1<f64>| {
            objective_and_gradient(w, b, x, y, c).unwrap().0
        };
        let mut gw = Array2::zeros(w.dim());
        for idx in 0..w.len() {
            let (i, j) = (idx / w.ncols(), idx % w.ncols());
            let mut plus = w.clone();
            plus[[i, j]] += h;
            let mut minus = w.clone();
            minus[[i, j]] -= h;
            gw[[i, j]] = (objective(&plus, b) - objective(&minus, b)) / (2.0 * h);
        }
        let mut gb = Array1::zeros(b.len());
        for k in 0..b.len() {
            let mut plus = b.clone();
            plus[k] += h;
            let mut minus = b.clone();
            minus[k] -= h;
            gb[k] = (objective(w, &plus) - objective(w, &minus)) / (2.0 * h);
        }
        (gw, gb)
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(20);
        let (w, b, x, y) = random_problem(&mut rng, 20, 5, 4);
        let c = 0.9474722736821756;
        let (_, gw, gb) = objective_and_gradient(&w, &b, &x, &y, c).unwrap();
        let (fw, fb) = finite_difference_gradient(&w, &b, &x, &y, c, 1e-5);

        let num: f64 = gw
            .iter()
            .zip(fw.iter())
            .chain(gb.iter().zip(fb.iter()))
            .map(|(a, o)| (a - o) * (a - o))
            .sum::<f64>()
            .sqrt();
        let den: f64 = fw
            .iter()
            .chain(fb.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        assert!(num / den <= 1e-5, "relative error {}", num / den);
    }

    #[test]
    fn hessian_product_of_zero_is_zero() {
        let mut rng = StdRng::seed_from_u64(8);
        let (w, b, x, _) = random_problem(&mut rng, 10, 3, 4);
        let (hw, hb) = hessian_vector_product(
            &w,
            &b,
            &x,
            0.9,
            &Array2::zeros(w.dim()),
            &Array1::zeros(b.len()),
        )
        .unwrap();
        assert!(hw.iter().all(|v| *v == 0.0));
        assert!(hb.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hessian_product_rejects_dimension_mismatch() {
        let mut rng = StdRng::seed_from_u64(9);
        let (w, b, x, _) = random_problem(&mut rng, 6, 3, 4);
        let err = hessian_vector_product(&w, &b, &x, 0.9, &Array2::zeros((4, 2)), &b).unwrap_err();
        assert!(matches!(err, ClassifierError::DimensionMismatch { .. }));
    }

    #[test]
    fn hessian_product_matches_gradient_differences() {
        let mut rng = StdRng::seed_from_u64(33);
        let c = 0.9474722736821756;
        let h = 1e-4;
        for _ in 0..10 {
            let (w, b, x, y) = random_problem(&mut rng, 12, 4, 4);
            let vw = Array2::from_shape_fn(w.dim(), |_| rng.random_range(-1.0..1.0));
            let vb = Array1::from_shape_fn(b.len(), |_| rng.random_range(-1.0..1.0));
            let (hw, hb) = hessian_vector_product(&w, &b, &x, c, &vw, &vb).unwrap();

            let (_, gw_p, gb_p) =
                objective_and_gradient(&(&w + &(&vw * h)), &(&b + &(&vb * h)), &x, &y, c).unwrap();
            let (_, gw_m, gb_m) =
                objective_and_gradient(&(&w - &(&vw * h)), &(&b - &(&vb * h)), &x, &y, c).unwrap();
            let fw = (&gw_p - &gw_m) / (2.0 * h);
            let fb = (&gb_p - &gb_m) / (2.0 * h);

            let num: f64 = hw
                .iter()
                .zip(fw.iter())
                .chain(hb.iter().zip(fb.iter()))
                .map(|(a, o)| (a - o) * (a - o))
                .sum::<f64>()
                .sqrt();
            let den: f64 =
                fw.iter().chain(fb.iter()).map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den <= 1e-4, "relative error {}", num / den);
        }
    }

    #[test]
    fn hessian_quadratic_form_is_nonnegative() {
        let mut rng = StdRng::seed_from_u64(44);
        let (w, b, x, _) = random_problem(&mut rng, 15, 4, 4);
        for _ in 0..100 {
            let vw = Array2::from_shape_fn(w.dim(), |_| rng.random_range(-1.0..1.0));
            let vb = Array1::from_shape_fn(b.len(), |_| rng.random_range(-1.0..1.0));
            let (hw, hb) = hessian_vector_product(&w, &b, &x, 0.9, &vw, &vb).unwrap();
            let quad: f64 = vw.iter().zip(hw.iter()).map(|(a, c)| a * c).sum::<f64>()
                + vb.iter().zip(hb.iter()).map(|(a, c)| a * c).sum::<f64>();
            assert!(quad >= -1e-10, "vᵀHv = {quad}");
        }
    }

    #[test]
    fn uniform_model_predicts_uniform_and_ties_break_low() {
        let model = ModelParams {
            weights: Array2::zeros((4, 3)),
            biases: Array1::zeros(4),
            classes: vec!["gain".into(), "non-gain".into(), "non-losses".into(), "losses".into()],
            embedding: None,
            hyperparams: Hyperparams::default(),
        };
        let probs = model.predict_proba(&[0.5, -1.0, 2.0]).unwrap();
        assert_eq!(probs, vec![0.25; 4]);
        assert_eq!(model.predict(&[0.5, -1.0, 2.0]).unwrap(), 0);
    }

    #[test]
    fn argmax_picks_the_largest_probability() {
        let model = ModelParams {
            weights: array![[0.0], [0.0], [0.0], [0.0]],
            biases: array![0.1f64.ln(), 0.2f64.ln(), 0.3f64.ln(), 0.4f64.ln()],
            classes: vec!["gain".into(), "non-gain".into(), "non-losses".into(), "losses".into()],
            embedding: None,
            hyperparams: Hyperparams::default(),
        };
        assert_eq!(model.predict(&[0.0]).unwrap(), 3);
    }

    #[test]
    fn bias_shift_leaves_probabilities_unchanged() {
        let mut rng = StdRng::seed_from_u64(17);
        let weights = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let biases = Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0));
        let model = ModelParams {
            weights: weights.clone(),
            biases: biases.clone(),
            classes: (0..4).map(|i| format!("c{i}")).collect(),
            embedding: None,
            hyperparams: Hyperparams::default(),
        };
        let shifted = ModelParams { biases: biases + 3.75, ..model.clone() };
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p1 = model.predict_proba(&x).unwrap();
        let p2 = shifted.predict_proba(&x).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn logit_scaling_preserves_the_argmax() {
        let mut rng = StdRng::seed_from_u64(18);
        let weights = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let biases = Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0));
        let model = ModelParams {
            weights: weights.clone(),
            biases: biases.clone(),
            classes: (0..4).map(|i| format!("c{i}")).collect(),
            embedding: None,
            hyperparams: Hyperparams::default(),
        };
        let scaled = ModelParams {
            weights: weights * 2.5,
            biases: biases * 2.5,
            ..model.clone()
        };
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert_eq!(model.predict(&x).unwrap(), scaled.predict(&x).unwrap());
        }
    }

    #[test]
    fn two_class_closed_form_probability() {
        let model = ModelParams {
            weights: array![[1.0], [-1.0]],
            biases: Array1::zeros(2),
            classes: vec!["a".into(), "b".into()],
            embedding: None,
            hyperparams: Hyperparams::default(),
        };
        let p = model.predict_proba(&[0.5]).unwrap();
        assert_abs_diff_eq!(p[0], 0.7310585786300049, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.2689414213699951, epsilon = 1e-12);
    }

    #[test]
    fn predict_rejects_wrong_dimension() {
        let model = ModelParams {
            weights: Array2::zeros((2, 3)),
            biases: Array1::zeros(2),
            classes: vec!["a".into(), "b".into()],
            embedding: None,
            hyperparams: Hyperparams::default(),
        };
        assert!(matches!(
            model.predict_proba(&[1.0, 2.0]),
            Err(ClassifierError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }
}
