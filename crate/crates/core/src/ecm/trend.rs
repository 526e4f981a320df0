//! Parameter-versus-voltage trends: low-order polynomials fit against OCV,
//! plus a raw lookup form for tabulated quantities.

use serde::{Deserialize, Serialize};

use crate::numeric::{interp_clamped, polyfit, polyval};
use crate::{Error, Result};

/// How a scalar parameter varies with open-circuit voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterTrend {
    Linear { coefficients: [f64; 2] },
    Quadratic { coefficients: [f64; 3] },
    Lookup { voltages: Vec<f64>, values: Vec<f64> },
}

impl ParameterTrend {
    /// Evaluate at an OCV. Lookups clamp to their end points, so every
    /// trend is defined over the whole voltage axis.
    pub fn evaluate(&self, ocv: f64) -> f64 {
        match self {
            ParameterTrend::Linear { coefficients } => polyval(coefficients, ocv),
            ParameterTrend::Quadratic { coefficients } => polyval(coefficients, ocv),
            ParameterTrend::Lookup { voltages, values } => {
                interp_clamped(voltages, values, ocv)
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            ParameterTrend::Linear { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Schema("non-finite trend coefficient".into()));
                }
            }
            ParameterTrend::Quadratic { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Schema("non-finite trend coefficient".into()));
                }
            }
            ParameterTrend::Lookup { voltages, values } => {
                if voltages.len() != values.len() || voltages.is_empty() {
                    return Err(Error::Schema(
                        "lookup trend voltage/value lengths differ or are empty".into(),
                    ));
                }
                if voltages.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Schema(
                        "lookup trend voltages must be strictly increasing".into(),
                    ));
                }
                if values.iter().chain(voltages).any(|v| !v.is_finite()) {
                    return Err(Error::Schema("non-finite lookup entry".into()));
                }
            }
        }
        Ok(())
    }

    /// Scale the output axis by a constant, leaving the voltage axis alone.
    pub fn scaled(&self, factor: f64) -> ParameterTrend {
        match self {
            ParameterTrend::Linear { coefficients } => ParameterTrend::Linear {
                coefficients: [coefficients[0] * factor, coefficients[1] * factor],
            },
            ParameterTrend::Quadratic { coefficients } => ParameterTrend::Quadratic {
                coefficients: [
                    coefficients[0] * factor,
                    coefficients[1] * factor,
                    coefficients[2] * factor,
                ],
            },
            ParameterTrend::Lookup { voltages, values } => ParameterTrend::Lookup {
                voltages: voltages.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }
}

/// Requested fit family. `Auto` keeps the quadratic only when it earns its
/// extra coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendFitKind {
    Linear,
    Quadratic,
    Auto,
}

/// Fraction of the linear SSR the quadratic must beat to be kept by `Auto`:
/// anything above this is treated as fitting noise.
const AUTO_SSR_RATIO: f64 = 0.7;

/// Fit a trend to `(ocv, value)` samples.
pub fn fit_trend(samples: &[(f64, f64)], kind: TrendFitKind) -> Result<ParameterTrend> {
    let degree = match kind {
        TrendFitKind::Linear => 1,
        TrendFitKind::Quadratic | TrendFitKind::Auto => 2,
    };
    let min_needed = match kind {
        TrendFitKind::Auto => 2, // can always fall back to linear
        _ => degree + 1,
    };
    if samples.len() < min_needed {
        return Err(Error::Config(format!(
            "trend fit needs at least {min_needed} samples, got {}",
            samples.len()
        )));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let degenerate = || {
        Error::Conditioning(
            "trend fit is degenerate: voltages do not span the polynomial degree"
                .into(),
        )
    };

    match kind {
        TrendFitKind::Linear => {
            let c = polyfit(&xs, &ys, 1).ok_or_else(degenerate)?;
            Ok(ParameterTrend::Linear {
                coefficients: [c[0], c[1]],
            })
        }
        TrendFitKind::Quadratic => {
            let c = polyfit(&xs, &ys, 2).ok_or_else(degenerate)?;
            Ok(ParameterTrend::Quadratic {
                coefficients: [c[0], c[1], c[2]],
            })
        }
        TrendFitKind::Auto => {
            let lin = polyfit(&xs, &ys, 1).ok_or_else(degenerate)?;
            let ssr_lin = ssr(&xs, &ys, &lin);
            if samples.len() < 4 {
                // Not enough points to judge curvature against noise.
                return Ok(ParameterTrend::Linear {
                    coefficients: [lin[0], lin[1]],
                });
            }
            let quad = polyfit(&xs, &ys, 2).ok_or_else(degenerate)?;
            let ssr_quad = ssr(&xs, &ys, &quad);
            let scale: f64 = ys.iter().map(|y| y * y).sum::<f64>().max(f64::MIN_POSITIVE);
            // A near-exact linear fit leaves nothing for curvature to explain.
            if ssr_lin > 1e-20 * scale && ssr_quad < AUTO_SSR_RATIO * ssr_lin {
                Ok(ParameterTrend::Quadratic {
                    coefficients: [quad[0], quad[1], quad[2]],
                })
            } else {
                Ok(ParameterTrend::Linear {
                    coefficients: [lin[0], lin[1]],
                })
            }
        }
    }
}

fn ssr(xs: &[f64], ys: &[f64], coeffs: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - polyval(coeffs, x);
            r * r
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_recovers_coefficients() {
        let samples: Vec<(f64, f64)> =
            (0..5).map(|i| 3.0 + 0.3 * i as f64).map(|v| (v, 0.2 - 0.05 * v)).collect();
        let trend = fit_trend(&samples, TrendFitKind::Linear).unwrap();
        match trend {
            ParameterTrend::Linear { coefficients } => {
                assert!((coefficients[0] - 0.2).abs() < 1e-10);
                assert!((coefficients[1] + 0.05).abs() < 1e-10);
            }
            other => panic!("expected linear, got {other:?}"),
        }
    }

    #[test]
    fn auto_keeps_a_line_linear() {
        let samples: Vec<(f64, f64)> =
            (0..5).map(|i| 3.0 + 0.3 * i as f64).map(|v| (v, 1.0 + 0.4 * v)).collect();
        let trend = fit_trend(&samples, TrendFitKind::Auto).unwrap();
        assert!(matches!(trend, ParameterTrend::Linear { .. }), "{trend:?}");
    }

    #[test]
    fn auto_promotes_a_parabola() {
        // R(V) with a minimum at 3.9 V, the classic charge-transfer shape.
        let samples: Vec<(f64, f64)> = (0..7)
            .map(|i| 3.0 + 0.2 * i as f64)
            .map(|v| (v, 0.45 + 0.5 * (v - 3.9) * (v - 3.9)))
            .collect();
        let trend = fit_trend(&samples, TrendFitKind::Auto).unwrap();
        match &trend {
            ParameterTrend::Quadratic { coefficients } => {
                let vertex = -coefficients[1] / (2.0 * coefficients[2]);
                assert!((vertex - 3.9).abs() < 0.05, "vertex {vertex}");
            }
            other => panic!("expected quadratic, got {other:?}"),
        }
        assert!((trend.evaluate(3.9) - 0.45).abs() < 1e-8);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let err = fit_trend(&[(3.0, 1.0), (3.5, 1.1)], TrendFitKind::Quadratic);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = fit_trend(&[(3.0, 1.0)], TrendFitKind::Linear);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn lookup_clamps_outside_its_table() {
        let trend = ParameterTrend::Lookup {
            voltages: vec![3.0, 3.5, 4.0],
            values: vec![10.0, 20.0, 40.0],
        };
        assert_eq!(trend.evaluate(2.5), 10.0);
        assert_eq!(trend.evaluate(4.5), 40.0);
        assert!((trend.evaluate(3.25) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_multiplies_values_only() {
        let trend = ParameterTrend::Quadratic {
            coefficients: [1.0, -2.0, 0.5],
        };
        let scaled = trend.scaled(2.8);
        for v in [3.0, 3.7, 4.2] {
            assert!((scaled.evaluate(v) - 2.8 * trend.evaluate(v)).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_line_under_auto_stays_linear() {
        // Deterministic +/- jitter that no parabola can explain away.
        let samples: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let v = 3.0 + 0.15 * i as f64;
                let jitter = if i % 2 == 0 { 1e-3 } else { -1e-3 };
                (v, 0.8 - 0.1 * v + jitter)
            })
            .collect();
        let trend = fit_trend(&samples, TrendFitKind::Auto).unwrap();
        assert!(matches!(trend, ParameterTrend::Linear { .. }), "{trend:?}");
    }
}
