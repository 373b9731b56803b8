//! Damped least-squares minimizer shared by the fringe and visibility-curve
//! fits.
//!
//! Plain Levenberg-Marquardt with a multiplicative damping schedule: the
//! damping factor is multiplied by 3 when a step increases the cost and
//! divided by 3 when it decreases it. Normal equations are solved by Gaussian
//! elimination with partial pivoting; a singular system is treated like a
//! rejected step (more damping).

pub(crate) const MAX_ITERATIONS: usize = 200;
pub(crate) const STEP_TOLERANCE: f64 = 1e-9;

pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    pub cost: f64,
    pub converged: bool,
    #[allow(dead_code)]
    pub iterations: usize,
}

/// Solve `a x = b` in place for a dense square system. Returns `None` when a
/// pivot collapses below `tol`.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x)
}

/// Minimize `sum r_i^2` over the parameters. `eval` fills the residual
/// vector and, when the jacobian slot is given, the row-major `n x m`
/// jacobian `d r_i / d p_j`.
pub(crate) fn levenberg_marquardt<F>(p0: &[f64], n_resid: usize, mut eval: F) -> LmOutcome
where
    F: FnMut(&[f64], &mut [f64], Option<&mut [f64]>),
{
    let m = p0.len();
    let mut params = p0.to_vec();
    let mut resid = vec![0.0; n_resid];
    let mut jac = vec![0.0; n_resid * m];

    eval(&params, &mut resid, Some(&mut jac));
    let mut cost: f64 = resid.iter().map(|r| r * r).sum();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    'outer: for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        // normal equations: (J^T J + lambda diag) delta = -J^T r
        let mut jtj = vec![0.0; m * m];
        let mut jtr = vec![0.0; m];
        for i in 0..n_resid {
            let row = &jac[i * m..(i + 1) * m];
            for (j, &rj) in row.iter().enumerate() {
                jtr[j] += rj * resid[i];
                for (k, &rk) in row.iter().enumerate().skip(j) {
                    jtj[j * m + k] += rj * rk;
                }
            }
        }
        for j in 0..m {
            for k in 0..j {
                jtj[j * m + k] = jtj[k * m + j];
            }
        }

        loop {
            let mut damped = jtj.clone();
            for j in 0..m {
                // absolute floor keeps parameters with a flat direction solvable
                damped[j * m + j] += lambda * (jtj[j * m + j] + 1e-30);
            }
            let rhs: Vec<f64> = jtr.iter().map(|g| -g).collect();
            let step = solve_dense(damped, rhs, m);

            let accepted = if let Some(delta) = step {
                let max_rel_step = params
                    .iter()
                    .zip(&delta)
                    .map(|(p, d)| d.abs() / (p.abs() + 1e-30))
                    .fold(0.0f64, f64::max);
                let trial: Vec<f64> = params.iter().zip(&delta).map(|(p, d)| p + d).collect();
                let mut trial_resid = vec![0.0; n_resid];
                eval(&trial, &mut trial_resid, None);
                let trial_cost: f64 = trial_resid.iter().map(|r| r * r).sum();
                if trial_cost.is_finite() && trial_cost < cost {
                    params = trial;
                    cost = trial_cost;
                    lambda = (lambda / 3.0).max(1e-14);
                    eval(&params, &mut resid, Some(&mut jac));
                    if max_rel_step < STEP_TOLERANCE {
                        converged = true;
                        break 'outer;
                    }
                    true
                } else {
                    // a vanishing proposed step that still cannot improve the
                    // cost means the minimum is already reached
                    if max_rel_step < STEP_TOLERANCE {
                        converged = true;
                        break 'outer;
                    }
                    false
                }
            } else {
                false
            };

            if accepted {
                break;
            }
            lambda *= 3.0;
            if lambda > 1e12 {
                break 'outer;
            }
        }
    }

    LmOutcome {
        params,
        cost,
        converged,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_decay() {
        // y = a exp(-b x); residuals and analytic jacobian
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let truth = (2.5, 0.8);
        let ys: Vec<f64> = xs.iter().map(|x| truth.0 * (-truth.1 * x).exp()).collect();
        let out = levenberg_marquardt(&[1.0, 0.1], xs.len(), |p, r, mut jac| {
            for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
                let e = (-p[1] * x).exp();
                r[i] = p[0] * e - y;
                if let Some(j) = jac.as_deref_mut() {
                    j[i * 2] = e;
                    j[i * 2 + 1] = -p[0] * x * e;
                }
            }
        });
        assert!(out.converged);
        assert!((out.params[0] - truth.0).abs() < 1e-8);
        assert!((out.params[1] - truth.1).abs() < 1e-8);
    }

    #[test]
    fn singular_direction_is_tolerated() {
        // second parameter has no effect; fit should still converge in the first
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let out = levenberg_marquardt(&[0.0, 5.0], xs.len(), |p, r, mut jac| {
            for (i, &x) in xs.iter().enumerate() {
                r[i] = p[0] * x - 3.0 * x;
                if let Some(j) = jac.as_deref_mut() {
                    j[i * 2] = x;
                    j[i * 2 + 1] = 0.0;
                }
            }
        });
        assert!((out.params[0] - 3.0).abs() < 1e-6);
    }
}
