use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Inverse regularization strength.
    pub c: f64,
    pub iterations: usize,
    /// Max-norm of the objective gradient at the returned parameters.
    pub gradient_norm: f64,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(-m)) without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn signed(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

fn margin(x: &[f64], weights: &[f64], intercept: f64) -> f64 {
    x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + intercept
}

/// Σ log(1 + exp(−ỹ(w·x + b))) + ‖w‖²/(2c), with ỹ ∈ {−1, +1}.
pub fn objective(x: &[Vec<f64>], y: &[bool], weights: &[f64], intercept: f64, c: f64) -> f64 {
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| log1p_exp_neg(signed(yi) * margin(xi, weights, intercept)))
        .sum();
    loss + weights.iter().map(|w| w * w).sum::<f64>() / (2.0 * c)
}

/// Gradient of [`objective`] as `[∂w_1, …, ∂w_d, ∂b]`.
pub fn objective_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    weights: &[f64],
    intercept: f64,
    c: f64,
) -> Vec<f64> {
    let d = weights.len();
    let mut g = vec![0.0; d + 1];
    for (xi, &yi) in x.iter().zip(y) {
        let s = signed(yi);
        let coef = -s * sigmoid(-s * margin(xi, weights, intercept));
        for (gj, xj) in g.iter_mut().zip(xi) {
            *gj += coef * xj;
        }
        g[d] += coef;
    }
    for (gj, wj) in g.iter_mut().zip(weights) {
        *gj += wj / c;
    }
    g
}

fn hessian(x: &[Vec<f64>], weights: &[f64], intercept: f64, c: f64) -> DMatrix<f64> {
    let d = weights.len();
    let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
    let mut row = vec![0.0; d + 1];
    row[d] = 1.0;
    for xi in x {
        let z = margin(xi, weights, intercept);
        let curv = sigmoid(z) * sigmoid(-z);
        row[..d].copy_from_slice(xi);
        for a in 0..=d {
            for b in 0..=d {
                h[(a, b)] += curv * row[a] * row[b];
            }
        }
    }
    for j in 0..d {
        h[(j, j)] += 1.0 / c;
    }
    h
}

fn check_inputs(x: &[Vec<f64>], y: &[bool], c: f64) -> Result<usize, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::InvalidInput(format!(
            "{} feature rows for {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(StatsError::InvalidInput(
            "need at least 2 observations".into(),
        ));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(StatsError::InvalidInput(format!(
            "C must be positive, got {c}"
        )));
    }
    let d = x[0].len();
    for (row, xi) in x.iter().enumerate() {
        if xi.len() != d {
            return Err(StatsError::InvalidInput(format!(
                "row {row} has {} features, expected {d}",
                xi.len()
            )));
        }
        if let Some(col) = xi.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite { row, col });
        }
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(StatsError::SingleClass);
    }
    Ok(d)
}

/// L2-regularized logistic regression with an unpenalized intercept.
///
/// Damped Newton: the step solves the Hessian system (Cholesky) and is
/// halved until the Armijo condition holds, so the objective never increases
/// beyond floating-point resolution.
pub fn logistic_fit(x: &[Vec<f64>], y: &[bool], c: f64) -> Result<LogisticModel, StatsError> {
    logistic_fit_traced(x, y, c, FitOptions::default()).map(|(m, _)| m)
}

/// As [`logistic_fit`], also returning the objective after every iteration
/// (the first entry is the starting point).
pub fn logistic_fit_traced(
    x: &[Vec<f64>],
    y: &[bool],
    c: f64,
    options: FitOptions,
) -> Result<(LogisticModel, Vec<f64>), StatsError> {
    let d = check_inputs(x, y, c)?;
    let mut weights = vec![0.0; d];
    let mut intercept = 0.0;
    let mut f = objective(x, y, &weights, intercept, c);
    let mut trace = vec![f];

    let mut iterations = 0;
    loop {
        let g = objective_gradient(x, y, &weights, intercept, c);
        let gnorm = max_norm(&g);
        if gnorm < options.tolerance {
            return Ok((
                LogisticModel {
                    weights,
                    intercept,
                    c,
                    iterations,
                    gradient_norm: gnorm,
                    objective: f,
                },
                trace,
            ));
        }
        if iterations >= options.max_iterations {
            return Err(StatsError::NotConverged {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;

        let grad = DVector::from_vec(g.clone());
        let step = match hessian(x, &weights, intercept, c).cholesky() {
            Some(chol) => -chol.solve(&grad),
            None => -grad.clone(),
        };
        let slope = grad.dot(&step);
        let step = if slope < 0.0 { step } else { -grad.clone() };
        let slope = grad.dot(&step);

        // Near the optimum the predicted decrease drops below the resolution
        // of the objective; there the full Newton step is judged by the
        // gradient instead of the (round-off dominated) objective.
        let resolution = FLAT_RESOLUTION * f.abs().max(1.0);
        let accepted = if -slope <= resolution {
            let (cand_w, cand_b) = advance(&weights, intercept, &step, 1.0);
            let cand_f = objective(x, y, &cand_w, cand_b, c);
            let cand_g = max_norm(&objective_gradient(x, y, &cand_w, cand_b, c));
            (cand_g < gnorm && cand_f <= f + resolution).then_some((cand_w, cand_b, cand_f))
        } else {
            let mut t = 1.0;
            let mut found = None;
            while t > 1e-20 {
                let (cand_w, cand_b) = advance(&weights, intercept, &step, t);
                let cand_f = objective(x, y, &cand_w, cand_b, c);
                if cand_f <= f + 1e-4 * t * slope {
                    found = Some((cand_w, cand_b, cand_f));
                    break;
                }
                t *= 0.5;
            }
            found
        };
        match accepted {
            Some((w, b, nf)) => {
                weights = w;
                intercept = b;
                f = nf;
                trace.push(f);
            }
            None => {
                return Err(StatsError::NotConverged {
                    iterations,
                    gradient_norm: gnorm,
                })
            }
        }
    }
}

/// Relative size below which objective differences are treated as round-off.
const FLAT_RESOLUTION: f64 = 1e-13;

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn advance(weights: &[f64], intercept: f64, step: &DVector<f64>, t: f64) -> (Vec<f64>, f64) {
    let w = weights
        .iter()
        .zip(step.iter())
        .map(|(w, s)| w + t * s)
        .collect();
    (w, intercept + t * step[weights.len()])
}

/// Probability of the positive class.
pub fn predict(model: &LogisticModel, x: &[f64]) -> f64 {
    sigmoid(margin(x, &model.weights, model.intercept))
}

pub fn predict_class(model: &LogisticModel, x: &[f64]) -> bool {
    predict(model, x) >= 0.5
}
