//! Sampled spectra and their CSV representation.
//!
//! Files carry one metadata comment line followed by a `freq_hz,value` table:
//!
//! ```text
//! # units: dbm, rbw_hz: 250000, detuning_hz: 5.365e9
//! freq_hz,value
//! 5.30e9,-71.2
//! ```
//!
//! Metadata keys are optional; `units` defaults to `linear`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Linear,
    /// Power in dBm; linear equivalent is mW.
    Dbm,
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Units::Linear),
            "dbm" | "db" => Ok(Units::Dbm),
            other => Err(Error::Parse(format!("unknown units '{other}' (expected dbm or linear)"))),
        }
    }
}

impl Units {
    fn as_str(self) -> &'static str {
        match self {
            Units::Linear => "linear",
            Units::Dbm => "dbm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub units: Units,
    pub rbw_hz: Option<f64>,
    pub detuning_hz: Option<f64>,
    pub label: Option<String>,
}

impl SpectrumMeta {
    fn header(&self) -> String {
        let mut h = format!("# units: {}", self.units.as_str());
        if let Some(r) = self.rbw_hz {
            write!(h, ", rbw_hz: {r}").unwrap();
        }
        if let Some(d) = self.detuning_hz {
            write!(h, ", detuning_hz: {d}").unwrap();
        }
        if let Some(l) = &self.label {
            write!(h, ", label: {l}").unwrap();
        }
        h
    }

    fn parse_header(line: &str) -> Result<Self> {
        let mut meta = SpectrumMeta::default();
        let body = line.trim_start_matches('#');
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("metadata item '{item}' is not 'key: value'")))?;
            let value = value.trim();
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("metadata {key}: '{value}' is not a number")))
            };
            match key.trim() {
                "units" => meta.units = value.parse()?,
                "rbw_hz" => meta.rbw_hz = Some(num()?),
                "detuning_hz" => meta.detuning_hz = Some(num()?),
                "label" => meta.label = Some(value.to_string()),
                other => log::warn!("ignoring unknown spectrum metadata key '{other}'"),
            }
        }
        Ok(meta)
    }
}

fn check_axis(freq: &[f64], n_values: usize) -> Result<()> {
    if freq.len() != n_values {
        return Err(Error::invalid(format!(
            "frequency axis has {} samples but there are {n_values} values",
            freq.len()
        )));
    }
    if freq.is_empty() {
        return Err(Error::invalid("empty spectrum"));
    }
    if freq.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("non-finite frequency"));
    }
    if let Some(w) = freq.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "frequency axis must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Real-valued trace on a strictly increasing frequency axis (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    freq_hz: Vec<f64>,
    values: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn new(freq_hz: Vec<f64>, values: Vec<f64>, meta: SpectrumMeta) -> Result<Self> {
        check_axis(&freq_hz, values.len())?;
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("spectrum contains NaN"));
        }
        Ok(Self { freq_hz, values, meta })
    }

    pub fn linear(freq_hz: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(freq_hz, values, SpectrumMeta::default())
    }

    pub fn freq_hz(&self) -> &[f64] {
        &self.freq_hz
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in the linear power domain (mW for dBm input).
    pub fn linear_values(&self) -> Vec<f64> {
        match self.meta.units {
            Units::Linear => self.values.clone(),
            Units::Dbm => self.values.iter().map(|v| 10f64.powf(v / 10.0)).collect(),
        }
    }

    /// Copy converted to linear units.
    pub fn to_linear(&self) -> Spectrum {
        Spectrum {
            freq_hz: self.freq_hz.clone(),
            values: self.linear_values(),
            meta: SpectrumMeta {
                units: Units::Linear,
                ..self.meta.clone()
            },
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Spectrum> {
        Spectrum::new(self.freq_hz.clone(), values, self.meta.clone())
    }

    /// Linear interpolation; `None` outside the axis.
    pub fn interpolate(&self, f: f64) -> Option<f64> {
        let x = &self.freq_hz;
        if f < x[0] || f > x[x.len() - 1] {
            return None;
        }
        let i = x.partition_point(|&v| v < f);
        if x[i] == f {
            return Some(self.values[i]);
        }
        let (x0, x1) = (x[i - 1], x[i]);
        let t = (f - x0) / (x1 - x0);
        Some(self.values[i - 1] + t * (self.values[i] - self.values[i - 1]))
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.meta.header();
        out.push_str("\nfreq_hz,value\n");
        for (f, v) in self.freq_hz.iter().zip(&self.values) {
            writeln!(out, "{f},{v}").unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = SpectrumMeta::default();
        let mut body_start = 0;
        for line in text.lines() {
            let t = line.trim();
            if t.starts_with('#') {
                meta = SpectrumMeta::parse_header(t)?;
                body_start += line.len() + 1;
            } else if t.is_empty() {
                body_start += line.len() + 1;
            } else {
                break;
            }
        }
        let body = text.get(body_start.min(text.len())..).unwrap_or("");
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "freq_hz" {
            return Err(Error::Parse(format!(
                "expected header 'freq_hz,value', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut freq = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("row {}: bad number in column {}", i + 1, j + 1)))
            };
            freq.push(parse(0)?);
            values.push(parse(1)?);
        }
        Spectrum::new(freq, values, meta)
    }
}

/// Complex response on a strictly increasing frequency axis (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum {
    freq_hz: Vec<f64>,
    values: Vec<Complex64>,
    pub meta: SpectrumMeta,
}

impl ComplexSpectrum {
    pub fn new(freq_hz: Vec<f64>, values: Vec<Complex64>, meta: SpectrumMeta) -> Result<Self> {
        check_axis(&freq_hz, values.len())?;
        Ok(Self { freq_hz, values, meta })
    }

    pub fn freq_hz(&self) -> &[f64] {
        &self.freq_hz
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn magnitude(&self) -> Spectrum {
        Spectrum {
            freq_hz: self.freq_hz.clone(),
            values: self.values.iter().map(|z| z.norm()).collect(),
            meta: SpectrumMeta {
                units: Units::Linear,
                ..self.meta.clone()
            },
        }
    }

    pub fn phase(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.arg()).collect()
    }

    /// CSV `freq_hz,value,re,im,phase_rad`; `value` is the magnitude so the
    /// file also reads back as a plain [`Spectrum`].
    pub fn to_csv(&self) -> String {
        let meta = SpectrumMeta {
            units: Units::Linear,
            ..self.meta.clone()
        };
        let mut out = meta.header();
        out.push_str("\nfreq_hz,value,re,im,phase_rad\n");
        for (f, z) in self.freq_hz.iter().zip(&self.values) {
            writeln!(out, "{f},{},{},{},{}", z.norm(), z.re, z.im, z.arg()).unwrap();
        }
        out
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = Spectrum::new(
            vec![1.0e9, 1.5e9, 2.0e9],
            vec![-70.0, -65.5, 0.1],
            SpectrumMeta {
                units: Units::Dbm,
                rbw_hz: Some(250e3),
                detuning_hz: Some(5.365e9),
                label: None,
            },
        )
        .unwrap();
        let text = s.to_csv();
        assert!(text.starts_with("# units: dbm, rbw_hz: 250000, detuning_hz: 5365000000\nfreq_hz,value\n"));
        assert_eq!(Spectrum::from_csv(&text).unwrap(), s);
    }

    #[test]
    fn header_is_optional() {
        let s = Spectrum::from_csv("freq_hz,value\n1,2\n3,4\n").unwrap();
        assert_eq!(s.meta.units, Units::Linear);
        assert_eq!(s.values(), &[2.0, 4.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Spectrum::from_csv("freq_hz,value\n2,1\n1,1\n").is_err());
        assert!(Spectrum::from_csv("freq_hz,value\n1,x\n").is_err());
        assert!(Spectrum::from_csv("f,v\n1,1\n").is_err());
        assert!(Spectrum::from_csv("# units: furlongs\nfreq_hz,value\n1,1\n").is_err());
        assert!(Spectrum::linear(vec![], vec![]).is_err());
    }

    #[test]
    fn dbm_conversion() {
        let s = Spectrum::new(
            vec![0.0, 1.0],
            vec![0.0, -30.0],
            SpectrumMeta { units: Units::Dbm, ..Default::default() },
        )
        .unwrap();
        let l = s.linear_values();
        assert!((l[0] - 1.0).abs() < 1e-15);
        assert!((l[1] - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn interpolation() {
        let s = Spectrum::linear(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 6.0]).unwrap();
        assert_eq!(s.interpolate(2.0), Some(4.0));
        assert_eq!(s.interpolate(3.0), Some(6.0));
        assert_eq!(s.interpolate(0.0), Some(0.0));
        assert_eq!(s.interpolate(3.5), None);
    }

    #[test]
    fn complex_csv_reads_back_as_magnitude() {
        let c = ComplexSpectrum::new(
            vec![1.0, 2.0],
            vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, -1.0)],
            SpectrumMeta::default(),
        )
        .unwrap();
        let s = Spectrum::from_csv(&c.to_csv()).unwrap();
        assert_eq!(s.values(), &[5.0, 1.0]);
    }
}
