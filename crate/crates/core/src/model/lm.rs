//! Damped Gauss-Newton (Levenberg-Marquardt) for small weighted problems.

use nalgebra::{DMatrix, DVector};

pub(crate) struct Problem<'a> {
    pub n_params: usize,
    /// Weighted residuals `(y - f(p)) / sigma`.
    pub residuals: &'a dyn Fn(&[f64]) -> DVector<f64>,
    /// Jacobian of the weighted residuals.
    pub jacobian: &'a dyn Fn(&[f64]) -> DMatrix<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Options {
    pub max_iter: usize,
    pub gtol: f64,
    pub xtol: f64,
    pub ftol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { max_iter: 400, gtol: 1e-10, xtol: 1e-14, ftol: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub params: Vec<f64>,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    pub jacobian: DMatrix<f64>,
}

fn cost_of(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Largest cosine between a Jacobian column and the residual vector.
fn gradient_cosine(j: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    let g = j.transpose() * r;
    (0..j.ncols())
        .map(|k| {
            let cn = j.column(k).norm();
            if cn == 0.0 {
                0.0
            } else {
                (g[k] / (cn * rn)).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn minimize(problem: &Problem, init: &[f64], opts: Options) -> Outcome {
    let n = problem.n_params;
    let mut p = DVector::from_column_slice(init);
    let mut r = (problem.residuals)(p.as_slice());
    let mut cost = cost_of(&r);
    let mut j = (problem.jacobian)(p.as_slice());
    let mut diag = DVector::from_iterator(n, j.column_iter().map(|c| c.norm_squared().max(1e-300)));
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    if !cost.is_finite() {
        return Outcome { params: init.to_vec(), cost, converged: false, iterations: 0, jacobian: j };
    }

    while iterations < opts.max_iter {
        iterations += 1;
        if cost == 0.0 || gradient_cosine(&j, &r) <= opts.gtol {
            converged = true;
            break;
        }
        for (k, c) in j.column_iter().enumerate() {
            diag[k] = diag[k].max(c.norm_squared());
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut a = jtj.clone();
        for k in 0..n {
            a[(k, k)] += lambda * diag[k];
        }
        // residuals are y - f, so J_f = -J and the step solves (JtJ + D) dp = -J^T r
        let step = match a.cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => {
                lambda *= nu;
                nu *= 2.0;
                continue;
            }
        };
        let trial = &p + &step;
        let r_new = (problem.residuals)(trial.as_slice());
        let cost_new = cost_of(&r_new);
        // predicted reduction of the local quadratic model
        let predicted = -(2.0 * step.dot(&g) + step.dot(&(&jtj * &step)));
        let actual = cost - cost_new;
        let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };
        if cost_new.is_finite() && rho > 0.0 {
            let small_step = step.norm() <= opts.xtol * (p.norm() + opts.xtol);
            let small_gain = actual <= opts.ftol * cost && predicted <= opts.ftol * cost;
            p = trial;
            r = r_new;
            cost = cost_new;
            j = (problem.jacobian)(p.as_slice());
            lambda *= f64::max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
            if small_step || small_gain {
                converged = true;
                break;
            }
        } else {
            lambda *= nu;
            nu *= 2.0;
            if step.norm() <= opts.xtol * (p.norm() + opts.xtol) || lambda > 1e16 {
                // no further progress possible; accept if the gradient is flat
                converged = gradient_cosine(&j, &r) <= opts.gtol.sqrt();
                break;
            }
        }
    }
    Outcome { params: p.as_slice().to_vec(), cost, converged, iterations, jacobian: j }
}

/// One-sigma parameter uncertainties `sqrt(diag((J^T J)^-1) * chi2_red)`.
pub(crate) fn uncertainties(j: &DMatrix<f64>, cost: f64) -> Vec<f64> {
    let (m, n) = j.shape();
    let dof = m.saturating_sub(n).max(1) as f64;
    let scale = cost / dof;
    let jtj = j.transpose() * j;
    let inv = match jtj.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => jtj.pseudo_inverse(1e-300).unwrap_or_else(|_| DMatrix::from_element(n, n, f64::INFINITY)),
    };
    (0..n).map(|k| (inv[(k, k)].abs() * scale).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_exponential_fit() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
        let res =
            |p: &[f64]| DVector::from_iterator(ts.len(), ts.iter().zip(&ys).map(|(t, y)| y - p[0] * (-p[1] * t).exp()));
        let jac = |p: &[f64]| {
            DMatrix::from_fn(ts.len(), 2, |i, k| {
                let e = (-p[1] * ts[i]).exp();
                if k == 0 {
                    -e
                } else {
                    p[0] * ts[i] * e
                }
            })
        };
        let prob = Problem { n_params: 2, residuals: &res, jacobian: &jac };
        let out = minimize(&prob, &[1.0, 0.5], Options::default());
        assert!(out.converged);
        assert!((out.params[0] - 3.0).abs() < 1e-10);
        assert!((out.params[1] - 1.7).abs() < 1e-10);
    }
}
