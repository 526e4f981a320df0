//! Linear consistency test for measured spectra.
//!
//! Fits a measurement model that is causal and linear by construction: a
//! series resistance, a series inductance, and a bank of RC elements with
//! fixed log-spaced time constants. Any spectrum of a linear time-invariant
//! system can be reproduced by this basis, so large fit residuals indicate a
//! corrupted measurement (drift, nonlinearity, noise) rather than unusual
//! physics. Spectra that fail here are rejected before any deconvolution.

use nalgebra::{DMatrix, DVector};

use crate::spectrum::ImpedanceSpectrum;
use crate::{numeric, Error, Result};

pub const DEFAULT_ELEMENTS_PER_DECADE: usize = 7;
pub const DEFAULT_KK_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct KkReport {
    /// (Re Z - Re Z_fit) / |Z| per frequency, in spectrum order.
    pub residual_real: Vec<f64>,
    /// (Im Z - Im Z_fit) / |Z| per frequency.
    pub residual_imag: Vec<f64>,
    pub max_abs_residual: f64,
    /// Root mean square over both residual vectors, reported alongside the
    /// max for diagnostics.
    pub rms_residual: f64,
    /// Number of RC elements in the fitted bank.
    pub model_size: usize,
    /// Verdict against [`DEFAULT_KK_THRESHOLD`].
    pub passed: bool,
}

/// True iff the report's worst residual is strictly below the threshold.
pub fn is_valid(report: &KkReport, threshold: f64) -> bool {
    report.max_abs_residual < threshold
}

pub fn kk_fit(
    spectrum: &ImpedanceSpectrum,
    elements_per_decade: usize,
) -> Result<KkReport> {
    if elements_per_decade == 0 {
        return Err(Error::Config(
            "elements_per_decade must be at least 1".into(),
        ));
    }
    let n = spectrum.len();
    let decades = (spectrum.f_max() / spectrum.f_min()).log10();
    let m = (elements_per_decade as f64 * decades).round() as usize;
    let m = m.max(2);
    let cols = m + 2;
    if 2 * n < cols {
        return Err(Error::Conditioning(format!(
            "{m} RC elements plus 2 series terms exceed {} data rows; \
             reduce elements_per_decade",
            2 * n
        )));
    }

    // Time constants span the measured window inclusively.
    let tau_min = 1.0 / spectrum.points()[0].omega();
    let tau_max = 1.0 / spectrum.points()[n - 1].omega();
    let taus: Vec<f64> = (0..m)
        .map(|k| {
            let t = k as f64 / (m - 1) as f64;
            10f64.powf(tau_min.log10() + t * (tau_max / tau_min).log10())
        })
        .collect();

    // Real rows stacked above imaginary rows. Column 0: series R,
    // column 1: series L, then one column per RC element.
    let mut a = DMatrix::zeros(2 * n, cols);
    let mut b = DVector::zeros(2 * n);
    for (i, p) in spectrum.points().iter().enumerate() {
        let w = p.omega();
        a[(i, 0)] = 1.0;
        a[(n + i, 1)] = w;
        for (k, &tau) in taus.iter().enumerate() {
            let wt = w * tau;
            let denom = 1.0 + wt * wt;
            a[(i, 2 + k)] = 1.0 / denom;
            a[(n + i, 2 + k)] = -wt / denom;
        }
        b[i] = p.z_re;
        b[n + i] = p.z_im;
    }

    // Column scaling keeps the rank test meaningful: the inductance column
    // grows with frequency while RC columns stay order one.
    let mut scaled = a.clone();
    let mut scale = vec![1.0; cols];
    for c in 0..cols {
        let norm = scaled.column(c).norm();
        if norm > 0.0 {
            scale[c] = norm;
            for r in 0..2 * n {
                scaled[(r, c)] /= norm;
            }
        }
    }
    if numeric::rank(&scaled, 1e-10) < cols {
        return Err(Error::Conditioning(format!(
            "measurement-model basis with {m} RC elements is rank deficient; \
             reduce elements_per_decade"
        )));
    }
    let z = numeric::lstsq(&scaled, &b, 1e-12).ok_or_else(|| {
        Error::Conditioning("least-squares factorization failed".into())
    })?;
    let mut x = z;
    for c in 0..cols {
        x[c] /= scale[c];
    }

    let fit = &a * &x;
    let mut residual_real = Vec::with_capacity(n);
    let mut residual_imag = Vec::with_capacity(n);
    let mut max_abs: f64 = 0.0;
    let mut sum_sq = 0.0;
    for (i, p) in spectrum.points().iter().enumerate() {
        let modulus = p.z().norm();
        if modulus == 0.0 {
            return Err(Error::Validation(format!(
                "impedance is exactly zero at {} Hz; relative residual undefined",
                p.freq_hz
            )));
        }
        let rr = (p.z_re - fit[i]) / modulus;
        let ri = (p.z_im - fit[n + i]) / modulus;
        max_abs = max_abs.max(rr.abs()).max(ri.abs());
        sum_sq += rr * rr + ri * ri;
        residual_real.push(rr);
        residual_imag.push(ri);
    }
    let rms_residual = (sum_sq / (2 * n) as f64).sqrt();

    Ok(KkReport {
        residual_real,
        residual_imag,
        max_abs_residual: max_abs,
        rms_residual,
        model_size: m,
        passed: max_abs < DEFAULT_KK_THRESHOLD,
    })
}
