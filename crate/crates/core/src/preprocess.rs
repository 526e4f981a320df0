//! High-frequency cleanup ahead of deconvolution: remove the wiring
//! inductance that bends the top decades of a spectrum upward, and read off
//! the ohmic resistance at the real-axis crossing.

use num_complex::Complex64;

use crate::numeric::lm::{lm_fit, LmOptions};
use crate::spectrum::{ImpedancePoint, ImpedanceSpectrum};
use crate::{Error, Result};

/// Which lumped element models the inductive branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InductanceModel {
    /// Inductor with a parallel resistor; the resistor caps the rise of
    /// |Z_L| at the very top of the band, matching real cable behaviour.
    #[default]
    ParallelRl,
    /// Plain series inductor.
    SeriesL,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InductanceFit {
    /// Henries, never negative (fitted in log space).
    pub inductance: f64,
    /// Parallel resistance in ohms; absent in the pure-inductor variant and
    /// in the zero fit.
    pub parallel_resistance: Option<f64>,
    /// Nuisance series resistance absorbing the real plateau inside the fit
    /// window. Reported but never subtracted: it belongs to the cell, not
    /// the wiring.
    pub series_resistance: f64,
    /// (f_low, f_high) of the points used; absent for the zero fit.
    pub fit_window: Option<(f64, f64)>,
    /// Relative RMS misfit over the window.
    pub fit_residual: f64,
    /// Set when the spectrum had no inductive points and a zero fit was
    /// returned instead of an error.
    pub no_inductive_branch: bool,
}

impl InductanceFit {
    /// Impedance of the fitted branch alone (series resistance excluded).
    pub fn impedance(&self, omega: f64) -> Complex64 {
        if self.inductance == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let jwl = Complex64::new(0.0, omega * self.inductance);
        match self.parallel_resistance {
            Some(rp) => jwl * rp / (rp + jwl),
            None => jwl,
        }
    }
}

/// Fits the inductive branch over a frequency window.
///
/// `window` is an explicit (f_low, f_high) range; pass `None` to use every
/// point with positive imaginary part plus two lower-frequency neighbours
/// (widened to four points minimum). A spectrum with no inductive points
/// yields a zero fit flagged `no_inductive_branch` rather than an error, so
/// pipelines can run unconditionally.
pub fn fit_inductance(
    spectrum: &ImpedanceSpectrum,
    window: Option<(f64, f64)>,
    model: InductanceModel,
) -> Result<InductanceFit> {
    let points = spectrum.points();
    let idx: Vec<usize> = match window {
        Some((f_low, f_high)) => {
            if !(f_low < f_high) {
                return Err(Error::Config(format!(
                    "fit window is empty: f_low {f_low} must be below f_high {f_high}"
                )));
            }
            (0..points.len())
                .filter(|&i| {
                    points[i].freq_hz >= f_low && points[i].freq_hz <= f_high
                })
                .collect()
        }
        None => {
            let last_inductive =
                (0..points.len()).filter(|&i| points[i].z_im > 0.0).max();
            match last_inductive {
                None => {
                    return Ok(InductanceFit {
                        inductance: 0.0,
                        parallel_resistance: None,
                        series_resistance: 0.0,
                        fit_window: None,
                        fit_residual: 0.0,
                        no_inductive_branch: true,
                    })
                }
                Some(last) => {
                    let end = (last + 2).min(points.len() - 1).max(3);
                    (0..=end).collect()
                }
            }
        }
    };
    if idx.len() < 4 {
        return Err(Error::Config(format!(
            "fit window holds {} points, need at least 4",
            idx.len()
        )));
    }

    let omegas: Vec<f64> = idx.iter().map(|&i| points[i].omega()).collect();
    let zs: Vec<Complex64> = idx.iter().map(|&i| points[i].z()).collect();

    // Initial inductance from the point where the branch dominates: below
    // the R||L corner z_im/ω ≈ L, above it the ratio only shrinks, so the
    // maximum over the window is a scale-correct estimate either way.
    let w_hf = omegas[0];
    let l0 = omegas
        .iter()
        .zip(&zs)
        .map(|(&w, z)| z.im / w)
        .fold(f64::MIN, f64::max)
        .max(1e-12);
    // The series nuisance absorbs the cell's real level at the quiet end of
    // the window.
    let r_s0 = zs.last().unwrap().re;

    let branch = |omega: f64, p: &[f64]| -> Complex64 {
        let l = p[1].exp();
        let jwl = Complex64::new(0.0, omega * l);
        match model {
            InductanceModel::ParallelRl => {
                let rp = p[2].exp();
                jwl * rp / (rp + jwl)
            }
            InductanceModel::SeriesL => jwl,
        }
    };

    let m = omegas.len();
    let outcome = lm_fit(
        &p0,
        2 * m,
        |p, r| {
            for k in 0..m {
                let z_fit = p[0] + branch(omegas[k], p);
                r[k] = z_fit.re - zs[k].re;
                r[m + k] = z_fit.im - zs[k].im;
            }
        },
        |p, j| {
            for k in 0..m {
                let w = omegas[k];
                let l = p[1].exp();
                let jwl = Complex64::new(0.0, w * l);
                j[(k, 0)] = 1.0;
                j[(m + k, 0)] = 0.0;
                match model {
                    InductanceModel::ParallelRl => {
                        let rp = p[2].exp();
                        let d = Complex64::new(rp, w * l);
                        // dZ/dL = jw rp^2 / d^2, dZ/dRp = (jwL)^2 / d^2,
                        // chain rule through the log parameters.
                        let dz_da = Complex64::new(0.0, w) * rp * rp / (d * d) * l;
                        let dz_db = jwl * jwl / (d * d) * rp;
                        j[(k, 1)] = dz_da.re;
                        j[(m + k, 1)] = dz_da.im;
                        j[(k, 2)] = dz_db.re;
                        j[(m + k, 2)] = dz_db.im;
                    }
                    InductanceModel::SeriesL => {
                        j[(k, 1)] = 0.0;
                        j[(m + k, 1)] = w * l;
                    }
                }
            }
        },
        &LmOptions {
            max_iterations: 500,
            ..LmOptions::default()
        },
    );
    if !outcome.converged {
        return Err(Error::Convergence {
            message: "inductance fit did not converge".into(),
            best: None,
        });
    }
    let p = &outcome.params;
    let data_norm_sq: f64 = zs.iter().map(|z| z.norm_sqr()).sum();
    let fit_residual = (2.0 * outcome.cost / data_norm_sq.max(1e-300)).sqrt();
    Ok(InductanceFit {
        inductance: p[1].exp(),
        parallel_resistance: match model {
            InductanceModel::ParallelRl => Some(p[2].exp()),
            InductanceModel::SeriesL => None,
        },
        series_resistance: p[0],
        fit_window: Some((
            omegas.last().unwrap() / (2.0 * std::f64::consts::PI),
            omegas[0] / (2.0 * std::f64::consts::PI),
        )),
        fit_residual,
        no_inductive_branch: false,
    })
}

/// Removes the fitted branch pointwise and marks the spectrum corrected.
/// Correcting twice is rejected.
pub fn subtract_inductance(
    spectrum: &ImpedanceSpectrum,
    fit: &InductanceFit,
) -> Result<ImpedanceSpectrum> {
    if spectrum.preprocessed {
        return Err(Error::Validation(
            "spectrum is already inductance-corrected".into(),
        ));
    }
    let points = spectrum
        .points()
        .iter()
        .map(|p| {
            let zl = fit.impedance(p.omega());
            ImpedancePoint {
                freq_hz: p.freq_hz,
                z_re: p.z_re - zl.re,
                z_im: p.z_im - zl.im,
            }
        })
        .collect();
    let mut out = spectrum.with_points(points)?;
    out.preprocessed = true;
    Ok(out)
}

/// Alternative to subtraction: drop every inductive point. Loses the top of
/// the band, so subtraction is the default.
pub fn truncate_inductive(spectrum: &ImpedanceSpectrum) -> Result<ImpedanceSpectrum> {
    if spectrum.preprocessed {
        return Err(Error::Validation(
            "spectrum is already inductance-corrected".into(),
        ));
    }
    let points: Vec<ImpedancePoint> = spectrum
        .points()
        .iter()
        .filter(|p| p.z_im <= 0.0)
        .copied()
        .collect();
    if points.len() < crate::spectrum::MIN_POINTS {
        return Err(Error::Validation(format!(
            "truncation leaves {} points, need at least {}",
            points.len(),
            crate::spectrum::MIN_POINTS
        )));
    }
    let mut out = spectrum.with_points(points)?;
    out.preprocessed = true;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OhmicWarning {
    /// No inductive points: the crossing is extrapolated as the real part at
    /// the highest frequency.
    EntirelyCapacitive,
    /// The imaginary part changes sign more than once; the highest-frequency
    /// crossing was used.
    MultipleCrossings { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicExtraction {
    pub r_ohmic: f64,
    pub warning: Option<OhmicWarning>,
}

/// Ohmic resistance: the real part where the impedance crosses the real
/// axis, linearly interpolated between the bracketing points.
pub fn extract_r_ohmic(spectrum: &ImpedanceSpectrum) -> Result<OhmicExtraction> {
    let points = spectrum.points();
    let crossings: Vec<usize> = points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0].z_im > 0.0) != (w[1].z_im > 0.0))
        .map(|(i, _)| i)
        .collect();
    let warning = (crossings.len() > 1).then_some(OhmicWarning::MultipleCrossings {
        count: crossings.len(),
    });

    // An exact zero at the highest frequency among zero-valued points wins:
    // no interpolation needed.
    if let Some(i) = (0..points.len()).find(|&i| points[i].z_im == 0.0) {
        return Ok(OhmicExtraction {
            r_ohmic: points[i].z_re,
            warning,
        });
    }
    match crossings.first() {
        Some(&i) => {
            let (a, b) = (points[i], points[i + 1]);
            let t = (0.0 - a.z_im) / (b.z_im - a.z_im);
            Ok(OhmicExtraction {
                r_ohmic: a.z_re + t * (b.z_re - a.z_re),
                warning,
            })
        }
        None if points.iter().all(|p| p.z_im < 0.0) => Ok(OhmicExtraction {
            r_ohmic: points[0].z_re,
            warning: Some(OhmicWarning::EntirelyCapacitive),
        }),
        None => Err(Error::Validation(
            "spectrum is entirely inductive; no real-axis crossing".into(),
        )),
    }
}
