//! Regularized linear models fit in standardized feature space: elastic net
//! by cyclic coordinate descent (lasso at alpha=1), closed-form ridge, and
//! Huber regression by iteratively reweighted least squares. Coefficients
//! are reported in raw space; the standardization parameters ride along so
//! the two prediction forms agree to float precision.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::frame::FeatureFrame;

/// Threshold multiplier on the MAD residual scale; the classic 95%
/// efficiency choice for Huber regression.
pub const HUBER_DELTA_DEFAULT: f64 = 1.35;
pub const LINEAR_TOL_DEFAULT: f64 = 1e-7;
pub const LINEAR_MAX_ITER_DEFAULT: usize = 10_000;

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub huber_delta: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            lambda: 0.0,
            alpha: 1.0,
            huber_delta: HUBER_DELTA_DEFAULT,
            tol: LINEAR_TOL_DEFAULT,
            max_iter: LINEAR_MAX_ITER_DEFAULT,
        }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Raw-space coefficients, one per frame column.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Per-column training mean and population std (std 1.0 marks a
    /// constant column, whose coefficient is pinned to zero).
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub converged: bool,
    /// IRLS hit a singular weighted system and fell back to a 1e-10 ridge.
    pub jittered: bool,
    pub iterations: usize,
    pub config: LinearConfig,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64, CoreError> {
        if row.len() < self.coefficients.len() {
            return Err(CoreError::LengthMismatch { left: row.len(), right: self.coefficients.len() });
        }
        let mut acc = self.intercept;
        for (j, c) in self.coefficients.iter().enumerate() {
            if row[j].is_nan() {
                return Err(CoreError::MissingFeature { index: j, name: String::new() });
            }
            acc += c * row[j];
        }
        Ok(acc)
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        (0..frame.n_rows()).map(|i| self.predict_row(frame.row(i))).collect()
    }
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        -(z.abs() - gamma)
    } else {
        0.0
    }
}

/// Per-column mean and population std; constant columns get std 1.0 so the
/// standardized column is exactly zero.
fn standardize(frame: &FeatureFrame) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let n = frame.n_rows();
    let d = frame.n_cols();
    let mut cols = Vec::with_capacity(d);
    let mut means = Vec::with_capacity(d);
    let mut stds = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| frame.value(i, j)).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        cols.push(col.iter().map(|v| (v - mean) / std).collect());
        means.push(mean);
        stds.push(std);
    }
    (cols, means, stds)
}

fn destandardize(
    beta: Vec<f64>,
    mean_y: f64,
    means: Vec<f64>,
    stds: Vec<f64>,
    converged: bool,
    jittered: bool,
    iterations: usize,
    config: LinearConfig,
) -> LinearModel {
    let coefficients: Vec<f64> = beta.iter().zip(&stds).map(|(b, s)| b / s).collect();
    let intercept = mean_y - coefficients.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    LinearModel { coefficients, intercept, means, stds, converged, jittered, iterations, config }
}

/// Cyclic coordinate descent on
/// `(1/2n)||y - Xb||^2 + lambda*(alpha*|b|_1 + (1-alpha)/2*|b|^2)`
/// over standardized columns, intercept fixed at mean(y). Non-convergence
/// within `max_iter` cycles is flagged on the model, not an error.
pub fn fit_elastic_net(
    frame: &FeatureFrame,
    lambda: f64,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LinearModel, CoreError> {
    if frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }
    if lambda < 0.0 || !(0.0..=1.0).contains(&alpha) {
        return Err(CoreError::InvalidConfig(String::from("need lambda >= 0 and alpha in [0,1]")));
    }
    let n = frame.n_rows();
    let d = frame.n_cols();
    let (cols, means, stds) = standardize(frame);
    let mean_y = frame.targets.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = frame.targets.iter().map(|y| y - mean_y).collect();

    // columns are unit-scale, so x_j.x_j / n == 1 and the coordinate update
    // is an exact minimization; constant columns (flagged by a zero vector)
    // never move off zero
    let mut beta = alloc::vec![0.0f64; d];
    let mut residual = yc;
    let shrink = 1.0 + lambda * (1.0 - alpha);
    let l1 = lambda * alpha;
    let mut converged = false;
    let mut cycles = 0usize;
    while cycles < max_iter {
        cycles += 1;
        let mut max_delta = 0.0f64;
        for j in 0..d {
            let xj = &cols[j];
            let rho = xj.iter().zip(&residual).map(|(x, r)| x * r).sum::<f64>() / n as f64 + beta[j];
            let new = soft_threshold(rho, l1) / shrink;
            if new != beta[j] {
                let diff = beta[j] - new;
                for (r, x) in residual.iter_mut().zip(xj) {
                    *r += diff * x;
                }
                max_delta = max_delta.max(diff.abs());
                beta[j] = new;
            }
        }
        if max_delta < tol {
            converged = true;
            break;
        }
    }

    let config = LinearConfig { lambda, alpha, tol, max_iter, ..LinearConfig::default() };
    Ok(destandardize(beta, mean_y, means, stds, converged, false, cycles, config))
}

/// Gaussian elimination with partial pivoting; None when the pivot degenerates.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let mut pivot = k;
        for i in k + 1..n {
            if a[i][k].abs() > a[pivot][k].abs() {
                pivot = i;
            }
        }
        if a[pivot][k].abs() < 1e-12 {
            return None;
        }
        a.swap(k, pivot);
        b.swap(k, pivot);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = alloc::vec![0.0f64; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k][j] * x[j];
        }
        x[k] = acc / a[k][k];
    }
    Some(x)
}

/// Closed-form ridge on standardized columns:
/// `(X'X/n + lambda*I) b = X'y/n`, intercept = mean(y). With lambda = 0 this
/// is the ordinary least squares solution and requires full column rank.
pub fn fit_ridge(frame: &FeatureFrame, lambda: f64) -> Result<LinearModel, CoreError> {
    if frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }
    if lambda < 0.0 {
        return Err(CoreError::InvalidConfig(String::from("lambda must be >= 0")));
    }
    let n = frame.n_rows();
    let d = frame.n_cols();
    let (cols, means, stds) = standardize(frame);
    let mean_y = frame.targets.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = frame.targets.iter().map(|y| y - mean_y).collect();

    let mut a = alloc::vec![alloc::vec![0.0f64; d]; d];
    let mut b = alloc::vec![0.0f64; d];
    for j in 0..d {
        for k in j..d {
            let dot = cols[j].iter().zip(&cols[k]).map(|(u, v)| u * v).sum::<f64>() / n as f64;
            a[j][k] = dot;
            a[k][j] = dot;
        }
        a[j][j] += lambda;
        b[j] = cols[j].iter().zip(&yc).map(|(u, v)| u * v).sum::<f64>() / n as f64;
    }
    let beta = solve_dense(a, b)
        .ok_or_else(|| CoreError::InvalidConfig(String::from("singular normal system")))?;
    let config = LinearConfig { lambda, alpha: 0.0, ..LinearConfig::default() };
    Ok(destandardize(beta, mean_y, means, stds, true, false, 1, config))
}

/// Huber IRLS weight for a residual already divided by the robust scale.
pub fn huber_weight(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        1.0
    } else {
        delta / a
    }
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Huber regression by IRLS: weights `w_i = 1` when the MAD-standardized
/// residual is within `delta`, else `delta/|u_i|`; each step solves the
/// weighted normal equations over [1 | X_std].
pub fn fit_huber(
    frame: &FeatureFrame,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LinearModel, CoreError> {
    if frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }
    if delta <= 0.0 {
        return Err(CoreError::InvalidConfig(String::from("delta must be > 0")));
    }
    let n = frame.n_rows();
    let d = frame.n_cols();
    let (cols, means, stds) = standardize(frame);
    let y = &frame.targets;

    let mut coef = alloc::vec![0.0f64; d + 1]; // [intercept, beta...]
    let mut weights = alloc::vec![1.0f64; n];
    let mut jittered = false;
    let mut converged = false;
    let mut iterations = 0usize;
    while iterations < max_iter {
        iterations += 1;
        // weighted normal equations over the design [1 | X_std]
        let col_at = |j: usize, i: usize| -> f64 {
            if j == 0 {
                1.0
            } else {
                cols[j - 1][i]
            }
        };
        let m = d + 1;
        let mut a = alloc::vec![alloc::vec![0.0f64; m]; m];
        let mut b = alloc::vec![0.0f64; m];
        for j in 0..m {
            for k in j..m {
                let dot: f64 = (0..n).map(|i| weights[i] * col_at(j, i) * col_at(k, i)).sum();
                a[j][k] = dot;
                a[k][j] = dot;
            }
            b[j] = (0..n).map(|i| weights[i] * col_at(j, i) * y[i]).sum();
        }
        let solved = match solve_dense(a.clone(), b.clone()) {
            Some(s) => s,
            None => {
                jittered = true;
                for (j, row) in a.iter_mut().enumerate() {
                    row[j] += 1e-10;
                }
                solve_dense(a, b)
                    .ok_or_else(|| CoreError::InvalidConfig(String::from("singular weighted system")))?
            }
        };
        let max_delta = solved
            .iter()
            .zip(&coef)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        coef = solved;
        if max_delta < tol {
            converged = true;
            break;
        }

        let residuals: Vec<f64> = (0..n)
            .map(|i| y[i] - (0..m).map(|j| coef[j] * col_at(j, i)).sum::<f64>())
            .collect();
        let med = median_of(residuals.clone());
        let mad = median_of(residuals.iter().map(|r| (r - med).abs()).collect());
        let scale = mad / 0.6745;
        if scale <= 0.0 {
            converged = true; // residuals collapsed; weights can no longer change
            break;
        }
        for i in 0..n {
            weights[i] = huber_weight(residuals[i] / scale, delta);
        }
    }

    let intercept_std = coef[0];
    let beta = coef[1..].to_vec();
    let coefficients: Vec<f64> = beta.iter().zip(&stds).map(|(b, s)| b / s).collect();
    let intercept = intercept_std - coefficients.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    let config = LinearConfig { huber_delta: delta, tol, max_iter, ..LinearConfig::default() };
    Ok(LinearModel { coefficients, intercept, means, stds, converged, jittered, iterations, config })
}

/// Maximum KKT violation of a lasso solution (alpha = 1): at optimality the
/// standardized-space correlation `x_j'r/n` equals `lambda*sign(b_j)` on the
/// active set and is at most `lambda` in magnitude elsewhere.
pub fn kkt_check(model: &LinearModel, frame: &FeatureFrame, lambda: f64) -> Result<f64, CoreError> {
    let n = frame.n_rows();
    if n == 0 {
        return Err(CoreError::EmptyFrame);
    }
    let preds = model.predict_frame(frame)?;
    let residual: Vec<f64> = frame.targets.iter().zip(&preds).map(|(y, p)| y - p).collect();
    let mut worst = 0.0f64;
    for j in 0..model.coefficients.len() {
        let (mean, std) = (model.means[j], model.stds[j]);
        let corr: f64 = (0..n)
            .map(|i| (frame.value(i, j) - mean) / std * residual[i])
            .sum::<f64>()
            / n as f64;
        let beta_std = model.coefficients[j] * std;
        let violation = if beta_std != 0.0 {
            (corr - lambda * beta_std.signum()).abs()
        } else {
            (corr.abs() - lambda).max(0.0)
        };
        worst = worst.max(violation);
    }
    Ok(worst)
}

/// Smallest lambda at which the lasso solution is entirely zero.
pub fn lasso_lambda_max(frame: &FeatureFrame) -> f64 {
    let n = frame.n_rows();
    let (cols, _, _) = standardize(frame);
    let mean_y = frame.targets.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = frame.targets.iter().map(|y| y - mean_y).collect();
    cols.iter()
        .map(|c| (c.iter().zip(&yc).map(|(x, y)| x * y).sum::<f64>() / n as f64).abs())
        .fold(0.0f64, f64::max)
}
