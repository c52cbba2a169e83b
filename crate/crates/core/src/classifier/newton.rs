//! Truncated-Newton training loop: conjugate-gradient solution of the
//! Newton system from Hessian-vector products, with an Armijo backtracking
//! line search.

use ndarray::{Array1, Array2};

use super::{
    objective_gradient_probs, ClassifierError, HessianOp, Hyperparams, ModelParams, ParamVec,
    TrainReport,
};
use crate::embedding::EmbeddingFingerprint;

impl ParamVec {
    fn zeros(k: usize, d: usize) -> Self {
        Self { w: Array2::zeros((k, d)), b: Array1::zeros(k) }
    }

    fn dot(&self, other: &Self) -> f64 {
        self.w.iter().zip(other.w.iter()).map(|(a, b)| a * b).sum::<f64>()
            + self.b.iter().zip(other.b.iter()).map(|(a, b)| a * b).sum::<f64>()
    }

    fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn norm_inf(&self) -> f64 {
        self.w
            .iter()
            .chain(self.b.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `self += a · other`
    fn scaled_add(&mut self, a: f64, other: &Self) {
        self.w.scaled_add(a, &other.w);
        self.b.scaled_add(a, &other.b);
    }

    fn scale(&mut self, a: f64) {
        self.w.mapv_inplace(|v| v * a);
        self.b.mapv_inplace(|v| v * a);
    }

    fn negated(&self) -> Self {
        Self { w: self.w.mapv(|v| -v), b: self.b.mapv(|v| -v) }
    }
}

/// Approximately solve `H·s = −g` by conjugate gradient.
///
/// The residual tolerance is the inexact-Newton forcing term
/// `min(0.5, √‖g‖)·‖g‖`. On a negative-curvature direction the solve
/// truncates, returning the current iterate (or `−g` on the first
/// iteration).
fn solve_newton_system(hessian: &HessianOp<'_>, gradient: &ParamVec, max_iter: usize) -> ParamVec {
    let mut solution = ParamVec::zeros(gradient.w.nrows(), gradient.w.ncols());
    let mut residual = gradient.negated();
    let gradient_norm = residual.norm_l2();
    if gradient_norm == 0.0 {
        return solution;
    }
    let tolerance = gradient_norm.sqrt().min(0.5) * gradient_norm;
    let mut direction = ParamVec { w: residual.w.clone(), b: residual.b.clone() };
    let mut rr = residual.dot(&residual);
    for iteration in 0..max_iter {
        if rr.sqrt() <= tolerance {
            break;
        }
        let h_direction = hessian.apply(&direction);
        let curvature = direction.dot(&h_direction);
        if curvature <= 0.0 {
            if iteration == 0 {
                return residual; // steepest-descent fallback
            }
            break;
        }
        let alpha = rr / curvature;
        solution.scaled_add(alpha, &direction);
        residual.scaled_add(-alpha, &h_direction);
        let rr_next = residual.dot(&residual);
        direction.scale(rr_next / rr);
        direction.scaled_add(1.0, &residual);
        rr = rr_next;
    }
    solution
}

/// Train a multinomial logistic regression on `x` (n×d) with class indices
/// `y` into the given class order.
///
/// Starts from zero parameters; each outer iteration computes the gradient,
/// stops once its infinity norm reaches `tol`, otherwise solves the Newton
/// system by CG and takes an Armijo backtracking step. Deterministic: the
/// same inputs always produce the same model.
pub fn train(
    x: &Array2<f64>,
    y: &[usize],
    classes: Vec<String>,
    embedding: Option<EmbeddingFingerprint>,
    hyper: &Hyperparams,
) -> Result<(ModelParams, TrainReport), ClassifierError> {
    hyper.validate()?;
    let (n, d) = (x.nrows(), x.ncols());
    let k = classes.len();
    if k < 2 {
        return Err(ClassifierError::TooFewClasses(k));
    }
    if y.len() != n {
        return Err(ClassifierError::LengthMismatch { x: n, y: y.len() });
    }
    if n < k {
        return Err(ClassifierError::TooFewSamples { n, k });
    }
    for (sample, &value) in y.iter().enumerate() {
        if value >= k {
            return Err(ClassifierError::LabelOutOfRange { sample, value, k });
        }
    }
    for (index, class) in classes.iter().enumerate() {
        if !y.contains(&index) {
            return Err(ClassifierError::MissingClass(class.clone()));
        }
    }

    let mut params = ParamVec::zeros(k, d);
    let (mut objective, mut gradient, mut probs) =
        objective_gradient_probs(&params.w, &params.b, x, y, hyper.c)?;
    let mut trace = vec![objective];
    let cg_cap = hyper.effective_cg_max_iter(k * d + k);
    let mut iterations = 0;
    let mut converged = false;
    let mut line_search_failed = false;

    loop {
        if gradient.norm_inf() <= hyper.tol {
            converged = true;
            break;
        }
        if iterations >= hyper.max_iter {
            break;
        }

        let hessian = HessianOp { probs: &probs, x, c: hyper.c };
        let mut step = solve_newton_system(&hessian, &gradient, cg_cap);
        let mut slope = step.dot(&gradient);
        if slope >= 0.0 {
            // CG produces a descent direction in exact arithmetic; fall back
            // to steepest descent if rounding says otherwise.
            step = gradient.negated();
            slope = -gradient.dot(&gradient);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=hyper.max_backtracks {
            let mut candidate = ParamVec {
                w: params.w.clone(),
                b: params.b.clone(),
            };
            candidate.scaled_add(alpha, &step);
            // A wildly long trial step can overflow the logits; treat that
            // as a failed trial and keep backtracking.
            match objective_gradient_probs(&candidate.w, &candidate.b, x, y, hyper.c) {
                Ok((j, g, p)) if j <= objective + hyper.armijo_c1 * alpha * slope => {
                    accepted = Some((candidate, j, g, p));
                    break;
                }
                _ => alpha *= hyper.backtrack,
            }
        }

        match accepted {
            Some((new_params, j, g, p)) => {
                params = new_params;
                objective = j;
                gradient = g;
                probs = p;
                iterations += 1;
                trace.push(objective);
            }
            None => {
                log::warn!(
                    "line search found no acceptable step after {} halvings; \
                     stopping with the best parameters so far",
                    hyper.max_backtracks
                );
                line_search_failed = true;
                break;
            }
        }
    }

    let report = TrainReport {
        iterations,
        final_objective: objective,
        final_grad_inf_norm: gradient.norm_inf(),
        converged,
        line_search_failed,
        objective_trace: trace,
    };
    let model = ModelParams {
        weights: params.w,
        biases: params.b,
        classes,
        embedding,
        hyperparams: hyper.clone(),
    };
    Ok((model, report))
}
