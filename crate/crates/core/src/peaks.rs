//! Peak decomposition of a relaxation-time distribution and its mapping to
//! RC circuit elements and physical processes.

use nalgebra::{DMatrix, DVector};

use crate::drt::DrtResult;
use crate::numeric::lm::{lm_fit, LmOptions};
use crate::{Error, Result};

/// Physical process assigned to a peak by its time-constant band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attribution {
    /// τ < 1 ms: particle-to-particle and particle-to-collector contacts.
    ContactInterface,
    /// 1 ms ≤ τ < 10 ms: ion transport through the surface layer.
    SeiLayer,
    /// 10 ms ≤ τ < 10 s: electrode charge-transfer reactions.
    ChargeTransfer,
    /// τ ≥ 10 s: solid-state diffusion.
    Diffusion,
}

impl Attribution {
    pub fn from_tau(tau_s: f64) -> Attribution {
        // Bands are half-open, lower-inclusive.
        if tau_s < 1e-3 {
            Attribution::ContactInterface
        } else if tau_s < 1e-2 {
            Attribution::SeiLayer
        } else if tau_s < 1e1 {
            Attribution::ChargeTransfer
        } else {
            Attribution::Diffusion
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Attribution::ContactInterface => "contact_interface",
            Attribution::SeiLayer => "sei_layer",
            Attribution::ChargeTransfer => "charge_transfer",
            Attribution::Diffusion => "diffusion",
        }
    }

    pub fn parse(label: &str) -> Option<Attribution> {
        match label {
            "contact_interface" => Some(Attribution::ContactInterface),
            "sei_layer" => Some(Attribution::SeiLayer),
            "charge_transfer" => Some(Attribution::ChargeTransfer),
            "diffusion" => Some(Attribution::Diffusion),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub tau_peak: f64,
    /// Integrated area in Ω; equals the process resistance.
    pub area: f64,
    /// Gaussian σ in ln τ.
    pub width: f64,
    /// Density at the peak, Ω per ln τ.
    pub amplitude: f64,
    pub attribution: Option<Attribution>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcElement {
    pub resistance: f64,
    pub capacitance: f64,
    pub tau: f64,
}

pub const DEFAULT_PROMINENCE_FRACTION: f64 = 0.02;

/// Strict local maxima of gamma with prominence at least
/// `prominence_fraction` of the global maximum, sorted by τ.
///
/// Prominence of a maximum is its height above the higher of the two valley
/// floors separating it from taller maxima (or the profile ends).
pub fn detect_peaks(
    drt: &DrtResult,
    prominence_fraction: f64,
) -> Vec<(f64, f64)> {
    let g = &drt.gamma;
    let n = g.len();
    let g_max = g.iter().cloned().fold(0.0, f64::max);
    if g_max <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if !(g[i] > g[i - 1] && g[i] > g[i + 1]) {
            continue;
        }
        // Walk left and right to the nearest higher ground, tracking the
        // lowest valley on the way.
        let mut left_min = g[i];
        let mut j = i;
        while j > 0 {
            j -= 1;
            left_min = left_min.min(g[j]);
            if g[j] > g[i] {
                break;
            }
        }
        let mut right_min = g[i];
        let mut j = i;
        while j < n - 1 {
            j += 1;
            right_min = right_min.min(g[j]);
            if g[j] > g[i] {
                break;
            }
        }
        let prominence = g[i] - left_min.max(right_min);
        if prominence >= prominence_fraction * g_max {
            out.push((drt.tau_s[i], g[i]));
        }
    }
    out
}

/// One Gaussian component in ln τ coordinates.
#[derive(Debug, Clone, Copy)]
struct Component {
    amplitude: f64,
    mean: f64,
    sigma: f64,
}

fn mixture_value(components: &[Component], u: f64) -> f64 {
    components
        .iter()
        .map(|c| {
            let t = (u - c.mean) / c.sigma;
            c.amplitude * (-0.5 * t * t).exp()
        })
        .sum()
}

/// Least-squares Gaussian mixture fit of the density profile. Amplitudes and
/// widths are optimized in log space so they stay positive.
fn fit_mixture(
    us: &[f64],
    gamma: &[f64],
    initial: &[Component],
) -> Option<(Vec<Component>, f64)> {
    let k = initial.len();
    let mut p0 = Vec::with_capacity(3 * k);
    for c in initial {
        p0.push(c.amplitude.max(1e-300).ln());
        p0.push(c.mean);
        p0.push(c.sigma.max(1e-12).ln());
    }
    let unpack = |p: &[f64]| -> Vec<Component> {
        (0..k)
            .map(|j| Component {
                amplitude: p[3 * j].exp(),
                mean: p[3 * j + 1],
                sigma: p[3 * j + 2].exp(),
            })
            .collect()
    };
    let m = us.len();
    let outcome = lm_fit(
        &p0,
        m,
        |p, r: &mut DVector<f64>| {
            let cs = unpack(p);
            for (i, &u) in us.iter().enumerate() {
                r[i] = mixture_value(&cs, u) - gamma[i];
            }
        },
        |p, j: &mut DMatrix<f64>| {
            let cs = unpack(p);
            for (i, &u) in us.iter().enumerate() {
                for (q, c) in cs.iter().enumerate() {
                    let t = (u - c.mean) / c.sigma;
                    let phi = c.amplitude * (-0.5 * t * t).exp();
                    // d/d ln a, d/d m, d/d ln s.
                    j[(i, 3 * q)] = phi;
                    j[(i, 3 * q + 1)] = phi * t / c.sigma;
                    j[(i, 3 * q + 2)] = phi * t * t;
                }
            }
        },
        &LmOptions {
            max_iterations: 400,
            ..LmOptions::default()
        },
    );
    if !outcome.converged {
        return None;
    }
    Some((unpack(&outcome.params), (2.0 * outcome.cost).sqrt()))
}

#[derive(Debug, Clone)]
pub struct GaussianFit {
    pub peaks: Vec<Peak>,
    /// Residual norm of the mixture against gamma.
    pub fit_residual: f64,
    /// Set when the nonlinear fit failed and areas fell back to trapezoid
    /// integrals between valley floors.
    pub fallback: bool,
}

/// How many Gaussians to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianCount {
    /// Try the detected count and one extra; keep the extra only if it
    /// improves the residual by more than 10%.
    Auto,
    Fixed(usize),
}

pub fn fit_gaussians(
    drt: &DrtResult,
    count: GaussianCount,
    prominence_fraction: f64,
) -> Result<GaussianFit> {
    let detected = detect_peaks(drt, prominence_fraction);
    if detected.is_empty() {
        return Ok(GaussianFit {
            peaks: Vec::new(),
            fit_residual: 0.0,
            fallback: false,
        });
    }
    let us: Vec<f64> = drt.tau_s.iter().map(|t| t.ln()).collect();
    let step = us[1] - us[0];
    let initial: Vec<Component> = detected
        .iter()
        .map(|&(tau, amp)| Component {
            amplitude: amp,
            mean: tau.ln(),
            sigma: step,
        })
        .collect();

    let k0 = match count {
        GaussianCount::Fixed(k) => {
            if k < detected.len() {
                return Err(Error::Config(format!(
                    "requested {k} components but {} peaks were detected; \
                     the count may not be lower",
                    detected.len()
                )));
            }
            k
        }
        GaussianCount::Auto => detected.len(),
    };
    // Components beyond the detected ones start at the largest residual of
    // the current best fit.
    let mut current = initial;
    let mut best: Option<(Vec<Component>, f64)> = None;
    let tries: Vec<usize> = match count {
        GaussianCount::Fixed(_) => vec![k0],
        GaussianCount::Auto => vec![k0, k0 + 1],
    };
    for want in tries {
        while current.len() < want {
            let reference = best
                .as_ref()
                .map(|(cs, _)| cs.clone())
                .unwrap_or_else(|| current.clone());
            let (mut worst_i, mut worst_r) = (0usize, f64::NEG_INFINITY);
            for (i, &u) in us.iter().enumerate() {
                let r = (drt.gamma[i] - mixture_value(&reference, u)).abs();
                if r > worst_r {
                    worst_r = r;
                    worst_i = i;
                }
            }
            current.push(Component {
                amplitude: worst_r.max(1e-6 * drt.gamma[worst_i].max(1e-300)),
                mean: us[worst_i],
                sigma: step,
            });
        }
        match fit_mixture(&us, &drt.gamma, &current) {
            Some((cs, residual)) => {
                let keep = match &best {
                    None => true,
                    // The richer fit must earn its extra component.
                    Some((_, prev)) => residual < 0.9 * prev,
                };
                if keep {
                    best = Some((cs.clone(), residual));
                    current = cs;
                } else {
                    break;
                }
            }
            None => break,
        }
    }

    let (components, fit_residual) = match best {
        Some(b) => b,
        None => {
            // Nonlinear fit never converged: fall back to trapezoid areas
            // over the valleys around each detected maximum.
            return Ok(fallback_fit(drt, &detected, &us));
        }
    };
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    let mut peaks: Vec<Peak> = components
        .iter()
        .map(|c| Peak {
            tau_peak: c.mean.exp(),
            area: c.amplitude * c.sigma * sqrt_2pi,
            width: c.sigma,
            amplitude: c.amplitude,
            attribution: None,
        })
        .collect();
    peaks.sort_by(|a, b| a.tau_peak.total_cmp(&b.tau_peak));
    Ok(GaussianFit {
        peaks,
        fit_residual,
        fallback: false,
    })
}

fn fallback_fit(drt: &DrtResult, detected: &[(f64, f64)], us: &[f64]) -> GaussianFit {
    // Valley indices between consecutive maxima bound each peak's mass.
    let idx_of = |tau: f64| {
        drt.tau_s
            .iter()
            .position(|&t| (t - tau).abs() < 1e-12 * tau)
            .unwrap_or(0)
    };
    let maxima: Vec<usize> = detected.iter().map(|&(t, _)| idx_of(t)).collect();
    let mut bounds = vec![0usize];
    for w in maxima.windows(2) {
        let valley = (w[0]..=w[1])
            .min_by(|&a, &b| drt.gamma[a].total_cmp(&drt.gamma[b]))
            .unwrap();
        bounds.push(valley);
    }
    bounds.push(drt.gamma.len() - 1);
    let peaks = maxima
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            let (lo, hi) = (bounds[j], bounds[j + 1]);
            let area = crate::numeric::trapezoid(&us[lo..=hi], &drt.gamma[lo..=hi]);
            Peak {
                tau_peak: drt.tau_s[i],
                area,
                width: (us[hi] - us[lo]) / 4.0,
                amplitude: drt.gamma[i],
                attribution: None,
            }
        })
        .collect();
    GaussianFit {
        peaks,
        fit_residual: f64::NAN,
        fallback: true,
    }
}

/// Resistance is the peak area; capacitance follows from τ = RC.
pub fn peaks_to_rc(peaks: &[Peak]) -> Result<Vec<RcElement>> {
    peaks
        .iter()
        .map(|p| {
            if !(p.area > 0.0) {
                return Err(Error::Validation(format!(
                    "peak at τ = {} s has non-positive area {}",
                    p.tau_peak, p.area
                )));
            }
            Ok(RcElement {
                resistance: p.area,
                capacitance: p.tau_peak / p.area,
                tau: p.tau_peak,
            })
        })
        .collect()
}

/// Fills the attribution of each peak from its time-constant band.
pub fn attribute_processes(peaks: &[Peak]) -> Vec<Peak> {
    peaks
        .iter()
        .map(|p| Peak {
            attribution: Some(Attribution::from_tau(p.tau_peak)),
            ..*p
        })
        .collect()
}
