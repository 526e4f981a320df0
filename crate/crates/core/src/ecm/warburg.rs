//! Bounded diffusion (reflective Warburg) element: analytic impedance and
//! its finite RC-ladder approximation.

use num_complex::Complex64;

use crate::peaks::RcElement;
use crate::{Error, Result};

pub const DEFAULT_LADDER_SIZE: usize = 5;

/// Analytic impedance `3 r_d · coth(x)/x` with `x = √(3 jω r_d c_d)`
/// (principal root). The zero-frequency limit is `r_d + 1/(jω c_d)`: series
/// capacitance with a resistive offset.
pub fn warburg_impedance(r_d: f64, c_d: f64, omega: f64) -> Complex64 {
    let x = (Complex64::new(0.0, 3.0 * omega * r_d * c_d)).sqrt();
    3.0 * r_d * coth(x) / x
}

fn coth(x: Complex64) -> Complex64 {
    // The principal root keeps Re x >= 0; past ~20 the hyperbolic tangent is
    // 1 to double precision and exp would overflow long before mattering.
    if x.re > 20.0 {
        Complex64::new(1.0, 0.0)
    } else {
        1.0 / x.tanh()
    }
}

/// Finite approximation: branch n carries R = 6·r_d/(n²π²) and C = c_d/2,
/// plus one standalone series capacitor c_d. Returned as (branches, series
/// capacitance).
pub fn warburg_ladder(
    r_d: f64,
    c_d: f64,
    n_branches: usize,
) -> Result<(Vec<RcElement>, f64)> {
    if n_branches < 1 {
        return Err(Error::Config(
            "diffusion ladder needs at least one branch".into(),
        ));
    }
    if !(r_d > 0.0) || !(c_d > 0.0) {
        return Err(Error::Validation(format!(
            "diffusion parameters must be positive (r_d = {r_d}, c_d = {c_d})"
        )));
    }
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let branches = (1..=n_branches)
        .map(|n| {
            let r = 6.0 * r_d / ((n * n) as f64 * pi2);
            let c = c_d / 2.0;
            RcElement {
                resistance: r,
                capacitance: c,
                tau: r * c,
            }
        })
        .collect();
    Ok((branches, c_d))
}

/// Impedance of the finite ladder; the comparison target for the analytic
/// form.
pub fn ladder_impedance(
    r_d: f64,
    c_d: f64,
    n_branches: usize,
    omega: f64,
) -> Result<Complex64> {
    let (branches, series_c) = warburg_ladder(r_d, c_d, n_branches)?;
    let mut z = Complex64::new(0.0, -1.0 / (omega * series_c));
    for b in &branches {
        let jwt = Complex64::new(0.0, omega * b.tau);
        z += b.resistance / (1.0 + jwt);
    }
    Ok(z)
}
