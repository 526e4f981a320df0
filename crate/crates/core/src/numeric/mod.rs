//! Small numeric toolbox shared by the pipeline stages: fixed-order
//! Gauss-Legendre quadrature, dense least squares, polynomial fits and
//! piecewise-linear interpolation. The iterative solvers live in
//! [`nnls`] and [`lm`].

pub mod lm;
pub mod nnls;

use nalgebra::{DMatrix, DVector};

/// 10-point Gauss-Legendre abscissas on [-1, 1] and matching weights.
pub const GL10: [(f64, f64); 10] = [
    (-0.9739065285171717, 0.0666713443086881),
    (-0.8650633666889845, 0.1494513491505806),
    (-0.6794095682990244, 0.2190863625159820),
    (-0.4333953941292472, 0.2692667193099963),
    (-0.1488743389816312, 0.2955242247147529),
    (0.1488743389816312, 0.2955242247147529),
    (0.4333953941292472, 0.2692667193099963),
    (0.6794095682990244, 0.2190863625159820),
    (0.8650633666889845, 0.1494513491505806),
    (0.9739065285171717, 0.0666713443086881),
];

/// Least-squares solution of `a x = b` via SVD with relative cutoff `rcond`.
/// Returns `None` only if the SVD itself fails to converge.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = rcond * max_sv.max(f64::MIN_POSITIVE);
    svd.solve(b, eps).ok()
}

/// Effective rank of `a` at relative threshold `rcond`.
pub fn rank(a: &DMatrix<f64>, rcond: f64) -> usize {
    let svd = a.clone().svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.singular_values
        .iter()
        .filter(|&&s| s > rcond * max_sv)
        .count()
}

/// Coefficients (constant term first) of the least-squares polynomial of
/// `degree` through `(xs, ys)`. `None` if the system is degenerate.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Option<Vec<f64>> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < degree + 1 {
        return None;
    }
    let m = xs.len();
    let n = degree + 1;
    let mut a = DMatrix::zeros(m, n);
    for (i, &x) in xs.iter().enumerate() {
        let mut p = 1.0;
        for j in 0..n {
            a[(i, j)] = p;
            p *= x;
        }
    }
    let b = DVector::from_column_slice(ys);
    lstsq(&a, &b, 1e-12).map(|v| v.iter().cloned().collect())
}

/// Evaluate a polynomial given coefficients with the constant term first.
pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Trapezoidal integral of samples `ys` over abscissas `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut acc = 0.0;
    for i in 1..xs.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    acc
}

/// Linear interpolation on a strictly increasing grid; clamps outside ends.
pub fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(!xs.is_empty());
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let idx = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    let t = (x - xs[idx - 1]) / (xs[idx] - xs[idx - 1]);
    ys[idx - 1] + t * (ys[idx] - ys[idx - 1])
}

/// Linear interpolation on a strictly increasing grid; `None` outside range.
pub fn interp_strict(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    Some(interp_clamped(xs, ys, x))
}
