//! Impedance spectra: the complex-valued frequency sweeps everything
//! downstream consumes.
//!
//! Sign convention throughout the crate: capacitive behaviour has negative
//! imaginary part, inductive behaviour positive.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::{table, Error, Result};

/// One measured point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedancePoint {
    pub freq_hz: f64,
    pub z_re: f64,
    pub z_im: f64,
}

impl ImpedancePoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }

    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.freq_hz
    }
}

/// A validated sweep, stored in descending frequency order.
///
/// Construction enforces the invariants the solvers rely on: at least ten
/// strictly distinct positive frequencies spanning three decades, finite
/// impedances, and state-of-charge inside [0, 1] when present.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSpectrum {
    points: Vec<ImpedancePoint>,
    pub soc: Option<f64>,
    pub temperature_c: Option<f64>,
    pub cell_id: Option<String>,
    /// Set once inductance has been removed; guards against doing it twice.
    pub preprocessed: bool,
}

pub const MIN_POINTS: usize = 10;
pub const MIN_DECADES: f64 = 3.0;

impl ImpedanceSpectrum {
    pub fn new(
        mut points: Vec<ImpedancePoint>,
        soc: Option<f64>,
        temperature_c: Option<f64>,
        cell_id: Option<String>,
    ) -> Result<Self> {
        if points.len() < MIN_POINTS {
            return Err(Error::Validation(format!(
                "spectrum has {} points, need at least {MIN_POINTS}",
                points.len()
            )));
        }
        for p in &points {
            if !(p.freq_hz.is_finite() && p.freq_hz > 0.0) {
                return Err(Error::Validation(format!(
                    "frequency {} is not a positive finite number",
                    p.freq_hz
                )));
            }
            if !(p.z_re.is_finite() && p.z_im.is_finite()) {
                return Err(Error::Validation(format!(
                    "impedance at {} Hz is not finite",
                    p.freq_hz
                )));
            }
        }
        points.sort_by(|a, b| b.freq_hz.total_cmp(&a.freq_hz));
        for w in points.windows(2) {
            if w[1].freq_hz >= w[0].freq_hz * (1.0 - 1e-12) {
                return Err(Error::Validation(format!(
                    "duplicate frequency {} Hz",
                    w[0].freq_hz
                )));
            }
        }
        let decades =
            (points[0].freq_hz / points[points.len() - 1].freq_hz).log10();
        if decades < MIN_DECADES - 1e-9 {
            return Err(Error::Validation(format!(
                "spectrum spans {decades:.2} decades, need at least {MIN_DECADES}"
            )));
        }
        if let Some(s) = soc {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Validation(format!(
                    "state of charge {s} is outside [0, 1]"
                )));
            }
        }
        if let Some(t) = temperature_c {
            if !t.is_finite() {
                return Err(Error::Validation("temperature is not finite".into()));
            }
        }
        Ok(Self {
            points,
            soc,
            temperature_c,
            cell_id,
            preprocessed: false,
        })
    }

    /// Same metadata, new point values. Used by preprocessing steps that
    /// transform the impedances without touching identity.
    pub fn with_points(&self, points: Vec<ImpedancePoint>) -> Result<Self> {
        let mut out = Self::new(
            points,
            self.soc,
            self.temperature_c,
            self.cell_id.clone(),
        )?;
        out.preprocessed = self.preprocessed;
        Ok(out)
    }

    pub fn points(&self) -> &[ImpedancePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.freq_hz).collect()
    }

    pub fn impedances(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.z()).collect()
    }

    /// Highest measured frequency (first point by construction).
    pub fn f_max(&self) -> f64 {
        self.points[0].freq_hz
    }

    /// Lowest measured frequency (last point by construction).
    pub fn f_min(&self) -> f64 {
        self.points[self.points.len() - 1].freq_hz
    }

    pub fn parse_csv(content: &str) -> Result<Self> {
        let t = table::parse(
            content,
            &["freq_hz", "z_re_ohm", "z_im_ohm"],
            &["soc", "temp_c", "cell_id", "preprocessed"],
            &["cell_id"],
        )?;
        let fi = t.columns["freq_hz"];
        let ri = t.columns["z_re_ohm"];
        let ii = t.columns["z_im_ohm"];
        let points = t
            .rows
            .iter()
            .map(|(_, row)| ImpedancePoint {
                freq_hz: row[fi],
                z_re: row[ri],
                z_im: row[ii],
            })
            .collect();

        let soc = table::merge_meta(
            "soc",
            table::meta_f64(&t, "soc")?,
            table::constant_column(&t, "soc")?,
        )?;
        let temp = table::merge_meta(
            "temp_c",
            table::meta_f64(&t, "temp_c")?,
            table::constant_column(&t, "temp_c")?,
        )?;
        let cell_id = match (t.meta.get("cell_id"), t.columns.get("cell_id")) {
            (Some(s), None) => Some(s.clone()),
            (sidecar, Some(&ci)) => {
                let mut value: Option<&str> = None;
                for cells in &t.raw_rows {
                    let v = cells[ci].as_str();
                    match value {
                        None => value = Some(v),
                        Some(prev) if prev != v => {
                            return Err(Error::Metadata(format!(
                                "column `cell_id` is not constant ({prev} vs {v})"
                            )))
                        }
                        _ => {}
                    }
                }
                if let (Some(s), Some(v)) = (sidecar, value) {
                    if s != v {
                        return Err(Error::Metadata(format!(
                            "`cell_id` given twice with different values ({s} vs {v})"
                        )));
                    }
                }
                value.map(|v| v.to_string()).or_else(|| sidecar.cloned())
            }
            (None, None) => None,
        };

        let mut spectrum = Self::new(points, soc, temp, cell_id)?;
        if let Some(flag) = t.meta.get("preprocessed") {
            spectrum.preprocessed = flag == "1" || flag.eq_ignore_ascii_case("true");
        }
        Ok(spectrum)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        Self::parse_csv(&content).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    /// Serializes in the sidecar-metadata form this crate writes everywhere:
    /// `# key: value` lines, then the header, then one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(id) = &self.cell_id {
            let _ = writeln!(out, "# cell_id: {id}");
        }
        if let Some(s) = self.soc {
            let _ = writeln!(out, "# soc: {s}");
        }
        if let Some(t) = self.temperature_c {
            let _ = writeln!(out, "# temp_c: {t}");
        }
        if self.preprocessed {
            let _ = writeln!(out, "# preprocessed: 1");
        }
        out.push_str("freq_hz,z_re_ohm,z_im_ohm\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.freq_hz, p.z_re, p.z_im);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Pointwise complex mean of repeat measurements of the same condition.
///
/// All inputs must share the frequency grid to within 0.1% relative and carry
/// identical soc / temperature metadata. The result keeps the shared grid
/// (taken from the first spectrum) and is tagged `cell_id: "averaged"`.
pub fn average_spectra(spectra: &[ImpedanceSpectrum]) -> Result<ImpedanceSpectrum> {
    if spectra.len() < 2 {
        return Err(Error::Validation(
            "averaging needs at least two spectra".into(),
        ));
    }
    let first = &spectra[0];
    for s in &spectra[1..] {
        if s.len() != first.len() {
            return Err(Error::GridMismatch(format!(
                "point counts differ ({} vs {})",
                first.len(),
                s.len()
            )));
        }
        for (a, b) in first.points.iter().zip(s.points.iter()) {
            if (a.freq_hz - b.freq_hz).abs() > 1e-3 * a.freq_hz {
                return Err(Error::GridMismatch(format!(
                    "frequency grids differ beyond 0.1% ({} vs {} Hz)",
                    a.freq_hz, b.freq_hz
                )));
            }
        }
        if !opt_eq(s.soc, first.soc) {
            return Err(Error::Metadata(
                "cannot average spectra with different state of charge".into(),
            ));
        }
        if !opt_eq(s.temperature_c, first.temperature_c) {
            return Err(Error::Metadata(
                "cannot average spectra with different temperature".into(),
            ));
        }
        if s.preprocessed != first.preprocessed {
            return Err(Error::Metadata(
                "cannot average preprocessed with raw spectra".into(),
            ));
        }
    }
    let n = spectra.len() as f64;
    let points = (0..first.len())
        .map(|i| {
            let (mut re, mut im) = (0.0, 0.0);
            for s in spectra {
                re += s.points[i].z_re;
                im += s.points[i].z_im;
            }
            ImpedancePoint {
                freq_hz: first.points[i].freq_hz,
                z_re: re / n,
                z_im: im / n,
            }
        })
        .collect();
    let mut out = ImpedanceSpectrum::new(
        points,
        first.soc,
        first.temperature_c,
        Some("averaged".into()),
    )?;
    out.preprocessed = first.preprocessed;
    Ok(out)
}

fn opt_eq(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.abs().max(1.0),
        _ => false,
    }
}

/// Groups spectra by (soc, temperature) within a tolerance, preserving first
/// appearance order. Used when a measurement campaign stores one file per
/// repeat.
pub fn group_by_condition(
    spectra: &[ImpedanceSpectrum],
) -> Result<Vec<((f64, f64), Vec<usize>)>> {
    let mut groups: Vec<((f64, f64), Vec<usize>)> = Vec::new();
    for (i, s) in spectra.iter().enumerate() {
        let soc = s.soc.ok_or_else(|| {
            Error::Metadata(format!("spectrum {i} has no state of charge"))
        })?;
        let temp = s.temperature_c.ok_or_else(|| {
            Error::Metadata(format!("spectrum {i} has no temperature"))
        })?;
        match groups.iter_mut().find(|((gs, gt), _)| {
            (soc - gs).abs() <= 1e-6 && (temp - gt).abs() <= 1e-6
        }) {
            Some((_, members)) => members.push(i),
            None => groups.push(((soc, temp), vec![i])),
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc_point(f: f64, r0: f64, r1: f64, tau: f64) -> ImpedancePoint {
        let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
        let z = r0 + r1 / (1.0 + jw * tau);
        ImpedancePoint {
            freq_hz: f,
            z_re: z.re,
            z_im: z.im,
        }
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                10f64.powf(lo.log10() + t * (hi / lo).log10())
            })
            .collect()
    }

    fn sample_spectrum() -> ImpedanceSpectrum {
        let points = log_grid(0.1, 1e4, 25)
            .into_iter()
            .map(|f| rc_point(f, 0.5, 1.0, 0.01))
            .collect();
        ImpedanceSpectrum::new(points, Some(0.5), Some(20.0), Some("c1".into()))
            .unwrap()
    }

    #[test]
    fn sorts_descending_and_reports_span() {
        let mut points: Vec<_> = log_grid(0.1, 1e4, 25)
            .into_iter()
            .map(|f| rc_point(f, 0.5, 1.0, 0.01))
            .collect();
        points.reverse();
        let s = ImpedanceSpectrum::new(points, None, None, None).unwrap();
        assert!(s.points()[0].freq_hz > s.points()[1].freq_hz);
        assert!((s.f_max() - 1e4).abs() < 1e-9);
        assert!((s.f_min() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_few_points() {
        let points: Vec<_> = log_grid(0.1, 1e4, 9)
            .into_iter()
            .map(|f| rc_point(f, 0.5, 1.0, 0.01))
            .collect();
        assert!(matches!(
            ImpedanceSpectrum::new(points, None, None, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_narrow_span() {
        let points: Vec<_> = log_grid(1.0, 100.0, 15)
            .into_iter()
            .map(|f| rc_point(f, 0.5, 1.0, 0.01))
            .collect();
        assert!(matches!(
            ImpedanceSpectrum::new(points, None, None, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_duplicate_frequency() {
        let mut points: Vec<_> = log_grid(0.1, 1e4, 25)
            .into_iter()
            .map(|f| rc_point(f, 0.5, 1.0, 0.01))
            .collect();
        points.push(points[3]);
        assert!(matches!(
            ImpedanceSpectrum::new(points, None, None, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_soc() {
        let points: Vec<_> = log_grid(0.1, 1e4, 25)
            .into_iter()
            .map(|f| rc_point(f, 0.5, 1.0, 0.01))
            .collect();
        assert!(matches!(
            ImpedanceSpectrum::new(points, Some(1.2), None, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn csv_round_trip_preserves_everything() {
        let s = sample_spectrum();
        let text = s.to_csv();
        let back = ImpedanceSpectrum::parse_csv(&text).unwrap();
        assert_eq!(s, back);
        // A second trip is byte-identical: shortest-round-trip floats.
        assert_eq!(text, back.to_csv());
    }

    #[test]
    fn parses_metadata_columns() {
        let mut text = String::from("freq_hz,z_re_ohm,z_im_ohm,soc,temp_c,cell_id\n");
        for f in log_grid(0.1, 1e4, 12) {
            let p = rc_point(f, 0.5, 1.0, 0.01);
            text.push_str(&format!("{},{},{},0.25,5,c7\n", p.freq_hz, p.z_re, p.z_im));
        }
        let s = ImpedanceSpectrum::parse_csv(&text).unwrap();
        assert_eq!(s.soc, Some(0.25));
        assert_eq!(s.temperature_c, Some(5.0));
        assert_eq!(s.cell_id.as_deref(), Some("c7"));
    }

    #[test]
    fn rejects_varying_metadata_column() {
        let mut text = String::from("freq_hz,z_re_ohm,z_im_ohm,soc\n");
        for (i, f) in log_grid(0.1, 1e4, 12).iter().enumerate() {
            let p = rc_point(*f, 0.5, 1.0, 0.01);
            let soc = if i == 5 { 0.3 } else { 0.25 };
            text.push_str(&format!("{},{},{},{soc}\n", p.freq_hz, p.z_re, p.z_im));
        }
        assert!(matches!(
            ImpedanceSpectrum::parse_csv(&text),
            Err(Error::Metadata(_))
        ));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "freq_hz,z_re_ohm,z_im_ohm\n1000,0.5,-0.1\nbogus,0.5,-0.2\n";
        match ImpedanceSpectrum::parse_csv(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_column() {
        let text = "freq_hz,z_re_ohm,z_im_ohm,phase_deg\n";
        assert!(matches!(
            ImpedanceSpectrum::parse_csv(text),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn averaging_recovers_reference_within_a_tenth_percent() {
        // Three repeats offset symmetrically around a reference RC response.
        let freqs = log_grid(0.1, 1e4, 30);
        let offsets = [0.95, 1.0, 1.05];
        let spectra: Vec<_> = offsets
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let points = freqs
                    .iter()
                    .map(|&f| {
                        let p = rc_point(f, 0.5, 1.0, 0.01);
                        ImpedancePoint {
                            freq_hz: f,
                            z_re: p.z_re * k,
                            z_im: p.z_im * k,
                        }
                    })
                    .collect();
                ImpedanceSpectrum::new(
                    points,
                    Some(0.5),
                    Some(20.0),
                    Some(format!("c{i}")),
                )
                .unwrap()
            })
            .collect();
        let mean = average_spectra(&spectra).unwrap();
        assert_eq!(mean.cell_id.as_deref(), Some("averaged"));
        for (i, &f) in freqs.iter().enumerate() {
            let reference = rc_point(f, 0.5, 1.0, 0.01);
            let got = mean.points()[i];
            let err = (got.z() - reference.z()).norm() / reference.z().norm();
            assert!(err < 1e-3, "relative error {err} at {f} Hz");
        }
    }

    #[test]
    fn averaging_is_order_invariant() {
        let s = sample_spectrum();
        let mut a = s.clone();
        a.cell_id = Some("a".into());
        let mut b = s.clone();
        b.cell_id = Some("b".into());
        for p in &mut b.points {
            p.z_re *= 1.02;
        }
        let mut c = s.clone();
        c.cell_id = Some("c".into());
        for p in &mut c.points {
            p.z_im *= 0.97;
        }
        let m1 = average_spectra(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let m2 = average_spectra(&[c, a, b]).unwrap();
        for (p, q) in m1.points().iter().zip(m2.points()) {
            assert!((p.z_re - q.z_re).abs() <= 1e-14 * p.z_re.abs().max(1.0));
            assert!((p.z_im - q.z_im).abs() <= 1e-14 * p.z_im.abs().max(1.0));
        }
    }

    #[test]
    fn averaging_rejects_mismatched_grid() {
        let s = sample_spectrum();
        let other_points: Vec<_> = log_grid(0.1, 1e4, 25)
            .into_iter()
            .map(|f| rc_point(f * 1.01, 0.5, 1.0, 0.01))
            .collect();
        let other = ImpedanceSpectrum::new(
            other_points,
            Some(0.5),
            Some(20.0),
            Some("c2".into()),
        )
        .unwrap();
        assert!(matches!(
            average_spectra(&[s, other]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn averaging_rejects_mismatched_condition() {
        let s = sample_spectrum();
        let mut t = sample_spectrum();
        t.soc = Some(0.75);
        assert!(matches!(
            average_spectra(&[s, t]),
            Err(Error::Metadata(_))
        ));
    }

    #[test]
    fn groups_by_condition_in_first_seen_order() {
        let mut a = sample_spectrum();
        a.soc = Some(0.5);
        let mut b = sample_spectrum();
        b.soc = Some(0.25);
        let mut c = sample_spectrum();
        c.soc = Some(0.5);
        let groups = group_by_condition(&[a, b, c]).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1, vec![0, 2]);
        assert_eq!(groups[1].1, vec![1]);
    }
}
