//! A measurement campaign for one cell type: impedance sweeps over a
//! (state of charge, temperature) grid plus one voltage curve per
//! temperature.

use std::path::Path;

use crate::ocv::{average_ocv, OcvCurve};
use crate::spectrum::{average_spectra, group_by_condition, ImpedanceSpectrum};
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct CellDataset {
    pub spectra: Vec<ImpedanceSpectrum>,
    pub ocv_curves: Vec<OcvCurve>,
}

impl CellDataset {
    pub fn new(
        spectra: Vec<ImpedanceSpectrum>,
        ocv_curves: Vec<OcvCurve>,
    ) -> Result<Self> {
        for (i, s) in spectra.iter().enumerate() {
            if s.soc.is_none() || s.temperature_c.is_none() {
                return Err(Error::Metadata(format!(
                    "spectrum {i} ({}) lacks state of charge or temperature",
                    s.cell_id.as_deref().unwrap_or("unnamed")
                )));
            }
        }
        for (i, c) in ocv_curves.iter().enumerate() {
            if c.temperature_c.is_none() {
                return Err(Error::Metadata(format!(
                    "voltage curve {i} lacks a temperature",
                )));
            }
        }
        Ok(Self {
            spectra,
            ocv_curves,
        })
    }

    /// Loads every `eis_*.csv` as a spectrum and every `ocv_*.csv` as a
    /// voltage curve from one directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut spectra = Vec::new();
        let mut ocv_curves = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .collect();
        entries.sort();
        for path in entries {
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if !name.ends_with(".csv") {
                continue;
            }
            if name.starts_with("eis") {
                spectra.push(ImpedanceSpectrum::read_csv(&path)?);
            } else if name.starts_with("ocv") {
                ocv_curves.push(OcvCurve::read_csv(&path)?);
            }
        }
        if spectra.is_empty() && ocv_curves.is_empty() {
            return Err(Error::Validation(format!(
                "no eis_*.csv or ocv_*.csv files found in {}",
                dir.display()
            )));
        }
        Self::new(spectra, ocv_curves)
    }

    /// Distinct temperatures, ascending, pooled from both kinds of data.
    pub fn temperatures(&self) -> Vec<f64> {
        let mut temps: Vec<f64> = Vec::new();
        let mut push = |t: f64| {
            if !temps.iter().any(|&x| (x - t).abs() <= 1e-6) {
                temps.push(t);
            }
        };
        for s in &self.spectra {
            if let Some(t) = s.temperature_c {
                push(t);
            }
        }
        for c in &self.ocv_curves {
            if let Some(t) = c.temperature_c {
                push(t);
            }
        }
        temps.sort_by(f64::total_cmp);
        temps
    }

    /// Distinct states of charge with a spectrum at the given temperature,
    /// ascending.
    pub fn socs_at(&self, temp_c: f64) -> Vec<f64> {
        let mut socs: Vec<f64> = Vec::new();
        for s in &self.spectra {
            if s.temperature_c.map_or(false, |t| (t - temp_c).abs() <= 1e-6) {
                let soc = s.soc.unwrap();
                if !socs.iter().any(|&x| (x - soc).abs() <= 1e-6) {
                    socs.push(soc);
                }
            }
        }
        socs.sort_by(f64::total_cmp);
        socs
    }

    pub fn spectrum_at(&self, soc: f64, temp_c: f64) -> Option<&ImpedanceSpectrum> {
        self.spectra.iter().find(|s| {
            s.soc.map_or(false, |x| (x - soc).abs() <= 1e-6)
                && s.temperature_c.map_or(false, |t| (t - temp_c).abs() <= 1e-6)
        })
    }

    pub fn ocv_at(&self, temp_c: f64) -> Option<&OcvCurve> {
        self.ocv_curves
            .iter()
            .find(|c| c.temperature_c.map_or(false, |t| (t - temp_c).abs() <= 1e-6))
    }

    /// Collapses repeat measurements: spectra sharing a (soc, temperature)
    /// condition are averaged, as are voltage curves sharing a temperature.
    /// Singles pass through untouched.
    pub fn average_repeats(&self) -> Result<Self> {
        let groups = group_by_condition(&self.spectra)?;
        let mut spectra = Vec::with_capacity(groups.len());
        for (_, members) in groups {
            if members.len() == 1 {
                spectra.push(self.spectra[members[0]].clone());
            } else {
                let group: Vec<_> =
                    members.iter().map(|&i| self.spectra[i].clone()).collect();
                spectra.push(average_spectra(&group)?);
            }
        }

        let mut ocv_curves: Vec<OcvCurve> = Vec::new();
        let mut claimed = vec![false; self.ocv_curves.len()];
        for i in 0..self.ocv_curves.len() {
            if claimed[i] {
                continue;
            }
            let t = self.ocv_curves[i].temperature_c;
            let mut group = vec![self.ocv_curves[i].clone()];
            for j in i + 1..self.ocv_curves.len() {
                let same = match (t, self.ocv_curves[j].temperature_c) {
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-6,
                    (None, None) => true,
                    _ => false,
                };
                if same {
                    claimed[j] = true;
                    group.push(self.ocv_curves[j].clone());
                }
            }
            if group.len() == 1 {
                ocv_curves.push(group.pop().unwrap());
            } else {
                ocv_curves.push(average_ocv(&group)?);
            }
        }
        Ok(Self {
            spectra,
            ocv_curves,
        })
    }

    /// Checks the dataset can support model construction: every temperature
    /// with spectra needs a voltage curve and at least two states of charge,
    /// and repeats must already be collapsed.
    pub fn validate_complete(&self) -> Result<()> {
        let temps = self.temperatures();
        if temps.is_empty() {
            return Err(Error::Validation("dataset is empty".into()));
        }
        for &t in &temps {
            let socs = self.socs_at(t);
            if socs.is_empty() {
                return Err(Error::Validation(format!(
                    "no spectra at {t} C"
                )));
            }
            if socs.len() < 2 {
                return Err(Error::Validation(format!(
                    "only one state of charge at {t} C, need at least two to fit trends"
                )));
            }
            if self.ocv_at(t).is_none() {
                return Err(Error::Validation(format!(
                    "no voltage curve at {t} C"
                )));
            }
        }
        let groups = group_by_condition(&self.spectra)?;
        for ((soc, t), members) in groups {
            if members.len() > 1 {
                return Err(Error::Validation(format!(
                    "{} repeat spectra at soc {soc}, {t} C; average repeats first",
                    members.len()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::ImpedancePoint;
    use num_complex::Complex64;

    fn spectrum(soc: f64, temp: f64, scale: f64) -> ImpedanceSpectrum {
        let points = (0..20)
            .map(|i| {
                let f = 10f64.powf(4.0 - 5.0 * i as f64 / 19.0);
                let jw = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
                let z = (0.5 + 1.0 / (1.0 + jw * 0.01)) * scale;
                ImpedancePoint {
                    freq_hz: f,
                    z_re: z.re,
                    z_im: z.im,
                }
            })
            .collect();
        ImpedanceSpectrum::new(points, Some(soc), Some(temp), Some("x".into()))
            .unwrap()
    }

    fn ocv(temp: f64) -> OcvCurve {
        let samples = (0..8)
            .map(|i| {
                let q = 55.0 * i as f64 / 7.0;
                (q, 4.2 - 1.2 * q / 55.0)
            })
            .collect();
        OcvCurve::new(samples, Some(temp), None).unwrap()
    }

    #[test]
    fn repeat_averaging_collapses_groups() {
        let ds = CellDataset::new(
            vec![
                spectrum(0.5, 20.0, 0.98),
                spectrum(0.5, 20.0, 1.02),
                spectrum(0.25, 20.0, 1.0),
            ],
            vec![ocv(20.0)],
        )
        .unwrap();
        assert!(ds.validate_complete().is_err());
        let collapsed = ds.average_repeats().unwrap();
        assert_eq!(collapsed.spectra.len(), 2);
        collapsed.validate_complete().unwrap();
        let avg = collapsed.spectrum_at(0.5, 20.0).unwrap();
        assert_eq!(avg.cell_id.as_deref(), Some("averaged"));
    }

    #[test]
    fn completeness_requires_ocv_per_temperature() {
        let ds = CellDataset::new(
            vec![spectrum(0.5, 20.0, 1.0), spectrum(0.25, 20.0, 1.0)],
            vec![],
        )
        .unwrap();
        let err = ds.validate_complete().unwrap_err();
        assert!(err.to_string().contains("voltage curve"));
    }

    #[test]
    fn completeness_requires_two_socs() {
        let ds = CellDataset::new(vec![spectrum(0.5, 20.0, 1.0)], vec![ocv(20.0)])
            .unwrap();
        assert!(ds.validate_complete().is_err());
    }

    #[test]
    fn spectra_require_condition_metadata() {
        let mut s = spectrum(0.5, 20.0, 1.0);
        s.soc = None;
        assert!(matches!(
            CellDataset::new(vec![s], vec![]),
            Err(Error::Metadata(_))
        ));
    }

    #[test]
    fn load_dir_sorts_by_kind() {
        let dir = tempfile::tempdir().unwrap();
        spectrum(0.5, 20.0, 1.0)
            .write_csv(&dir.path().join("eis_soc50_t20.csv"))
            .unwrap();
        spectrum(0.25, 20.0, 1.0)
            .write_csv(&dir.path().join("eis_soc25_t20.csv"))
            .unwrap();
        ocv(20.0)
            .write_csv(&dir.path().join("ocv_t20.csv"))
            .unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignore me").unwrap();
        let ds = CellDataset::load_dir(dir.path()).unwrap();
        assert_eq!(ds.spectra.len(), 2);
        assert_eq!(ds.ocv_curves.len(), 1);
        ds.validate_complete().unwrap();
    }
}
