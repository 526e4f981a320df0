//! Active-set non-negative least squares (Lawson-Hanson).

use nalgebra::{DMatrix, DVector};

pub struct NnlsOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve `min ||a x - b||` subject to `x >= 0`.
///
/// Convergence is declared when every zero-clamped coordinate has a
/// Karush-Kuhn-Tucker multiplier below `kkt_rel_tol * max(1, ||a^T b||_inf)`.
/// The unconstrained subproblems are solved by QR on the passive columns,
/// falling back to truncated SVD when the triangular factor degenerates.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, kkt_rel_tol: f64) -> NnlsOutcome {
    let n = a.ncols();
    let max_outer = 3 * n.max(10);
    let atb = a.transpose() * b;
    let scale = atb.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = kkt_rel_tol * scale;

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut outer = 0;

    loop {
        let w = &atb - a.transpose() * (a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let j_star = match candidate {
            Some(j) if w[j] > tol => j,
            _ => {
                return NnlsOutcome {
                    x,
                    iterations: outer,
                    converged: true,
                }
            }
        };
        if outer >= max_outer {
            return NnlsOutcome {
                x,
                iterations: outer,
                converged: false,
            };
        }
        outer += 1;
        passive[j_star] = true;

        // Inner loop keeps the passive-set solution feasible.
        let mut inner = 0;
        loop {
            inner += 1;
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = solve_passive(a, b, &idx);
            if z.iter().all(|&v| v > 0.0) {
                let mut nx = DVector::zeros(n);
                for (k, &j) in idx.iter().enumerate() {
                    nx[j] = z[k];
                }
                x = nx;
                break;
            }
            // Step toward z until the first passive coordinate hits zero.
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = x[j] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
            }
            for &j in &idx {
                if x[j] <= 1e-14 * scale.max(1.0) || x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if inner > n + 1 {
                // Degenerate cycling; treat as non-convergence.
                return NnlsOutcome {
                    x,
                    iterations: outer,
                    converged: false,
                };
            }
        }
    }
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(idx.iter());
    let qr = sub.clone().qr();
    let r = qr.r();
    let diag_max = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .fold(0.0_f64, f64::max);
    let degenerate = (0..r.nrows().min(r.ncols())).any(|i| r[(i, i)].abs() < 1e-12 * diag_max)
        || diag_max == 0.0;
    if !degenerate {
        let qtb = qr.q().transpose() * b;
        if let Some(z) = r.solve_upper_triangular(&qtb) {
            return z;
        }
    }
    let svd = sub.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.solve(b, 1e-12 * max_sv.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(idx.len()))
}
