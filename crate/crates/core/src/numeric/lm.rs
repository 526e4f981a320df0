//! Dense Levenberg-Marquardt for the small nonlinear fits in the pipeline
//! (inductive branch, Gaussian peak decomposition).

use nalgebra::{DMatrix, DVector};

pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Final cost, 0.5 * sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct LmOptions {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            gradient_tol: 1e-12,
            step_tol: 1e-13,
        }
    }
}

/// Minimize 0.5*||r(p)||^2 starting from `p0`.
///
/// `residuals(p, out)` fills `out` with the m residuals; `jacobian(p, out)`
/// fills the m x n Jacobian. Damping is multiplicative on the diagonal of
/// the Gauss-Newton Hessian, so parameter scaling is handled implicitly.
pub fn lm_fit<R, J>(
    p0: &[f64],
    num_residuals: usize,
    mut residuals: R,
    mut jacobian: J,
    options: &LmOptions,
) -> LmOutcome
where
    R: FnMut(&[f64], &mut DVector<f64>),
    J: FnMut(&[f64], &mut DMatrix<f64>),
{
    let n = p0.len();
    let mut p = DVector::from_column_slice(p0);
    let mut r = DVector::zeros(num_residuals);
    let mut jac = DMatrix::zeros(num_residuals, n);

    residuals(p.as_slice(), &mut r);
    let mut cost = 0.5 * r.norm_squared();
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iter = 0;

    while iter < options.max_iterations {
        iter += 1;
        jacobian(p.as_slice(), &mut jac);
        let g = jac.transpose() * &r;
        if g.amax() < options.gradient_tol * (1.0 + cost) {
            converged = true;
            break;
        }
        let h = jac.transpose() * &jac;

        let mut accepted = false;
        for _ in 0..25 {
            let mut damped = h.clone();
            for i in 0..n {
                let d = h[(i, i)];
                damped[(i, i)] = d + mu * d.max(1e-12);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    mu *= 4.0;
                    continue;
                }
            };
            let candidate = &p + &step;
            let mut rc = DVector::zeros(num_residuals);
            residuals(candidate.as_slice(), &mut rc);
            let new_cost = 0.5 * rc.norm_squared();
            if new_cost.is_finite() && new_cost < cost {
                let step_small = step.norm() <= options.step_tol * (p.norm() + options.step_tol);
                let cost_flat = (cost - new_cost) <= 1e-15 * cost.max(1e-300);
                p = candidate;
                r = rc;
                cost = new_cost;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if step_small || cost_flat {
                    converged = true;
                }
                break;
            }
            mu *= 4.0;
        }
        if !accepted || converged {
            converged = converged || !accepted && cost.is_finite() && mu > 1e12;
            if !accepted {
                // Damping saturated without progress: local minimum reached
                // to working precision.
                converged = true;
            }
            break;
        }
    }

    LmOutcome {
        params: p.iter().cloned().collect(),
        cost,
        iterations: iter,
        converged,
    }
}
