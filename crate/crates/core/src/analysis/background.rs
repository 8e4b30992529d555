use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{Spectrum, SpectrumMeta, Units};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSubtraction {
    /// Linear-power difference on the overlap of both axes.
    pub spectrum: Spectrum,
    /// Points that went negative and were set to zero.
    pub clamped: usize,
    /// Signal points outside the background axis, dropped.
    pub dropped: usize,
}

/// Frequencies, signal, background and the number of dropped points.
type Aligned = (Vec<f64>, Vec<f64>, Vec<f64>, usize);

fn background_on(signal: &Spectrum, background: &Spectrum) -> Result<Aligned> {
    let bg = background.to_linear();
    let sig = signal.linear_values();
    let mut freq = Vec::new();
    let mut s = Vec::new();
    let mut b = Vec::new();
    for (f, v) in signal.freq_hz().iter().zip(sig) {
        if let Some(x) = bg.interpolate(*f) {
            freq.push(*f);
            s.push(v);
            b.push(x);
        }
    }
    if freq.is_empty() {
        return Err(Error::invalid(format!(
            "signal [{}, {}] Hz and background [{}, {}] Hz do not overlap",
            signal.freq_hz()[0],
            signal.freq_hz()[signal.len() - 1],
            background.freq_hz()[0],
            background.freq_hz()[background.len() - 1]
        )));
    }
    let dropped = signal.len() - freq.len();
    Ok((freq, s, b, dropped))
}

/// Subtracts `background`, interpolated onto the signal axis, in the linear
/// power domain. dBm inputs are converted first.
pub fn subtract_background(signal: &Spectrum, background: &Spectrum) -> Result<BackgroundSubtraction> {
    let (freq, s, b, dropped) = background_on(signal, background)?;
    let mut clamped = 0;
    let values = s
        .iter()
        .zip(&b)
        .map(|(s, b)| {
            let d = s - b;
            if d < 0.0 {
                clamped += 1;
                0.0
            } else {
                d
            }
        })
        .collect();
    if clamped > 0 {
        log::info!("background subtraction clamped {clamped} points to zero");
    }
    Ok(BackgroundSubtraction {
        spectrum: Spectrum::new(
            freq,
            values,
            SpectrumMeta {
                units: Units::Linear,
                ..signal.meta.clone()
            },
        )?,
        clamped,
        dropped,
    })
}

/// Inverse of [`subtract_background`] where nothing was clamped.
pub fn add_background(signal: &Spectrum, background: &Spectrum) -> Result<Spectrum> {
    let (freq, s, b, _) = background_on(signal, background)?;
    Spectrum::new(
        freq,
        s.iter().zip(&b).map(|(s, b)| s + b).collect(),
        SpectrumMeta {
            units: Units::Linear,
            ..signal.meta.clone()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(n: usize) -> Vec<f64> {
        (0..n).map(|i| 5.0e9 + 1e5 * i as f64).collect()
    }

    #[test]
    fn self_subtraction_is_zero() {
        let s = Spectrum::linear(axis(50), (0..50).map(|i| 1.0 + i as f64).collect()).unwrap();
        let r = subtract_background(&s, &s).unwrap();
        assert!(r.spectrum.values().iter().all(|v| *v == 0.0));
        assert_eq!(r.clamped, 0);
    }

    #[test]
    fn recovers_lorentzian_area() {
        let f = axis(2001);
        let (f0, hw, area) = (5.1e9, 3e6, 2.0e6);
        let floor = |x: f64| 3.0 + 1e-9 * (x - 5.0e9);
        let peak = |x: f64| area * hw / std::f64::consts::PI / ((x - f0).powi(2) + hw * hw);
        let sig = Spectrum::linear(f.clone(), f.iter().map(|&x| peak(x) + floor(x)).collect()).unwrap();
        let bgf: Vec<f64> = (0..300).map(|i| 4.9e9 + 1e6 * i as f64).collect();
        let bg = Spectrum::linear(bgf.clone(), bgf.iter().map(|&x| floor(x)).collect()).unwrap();
        let r = subtract_background(&sig, &bg).unwrap();
        let v = r.spectrum.values();
        let x = r.spectrum.freq_hz();
        let integral: f64 = x.windows(2).zip(v.windows(2)).map(|(x, v)| 0.5 * (v[0] + v[1]) * (x[1] - x[0])).sum();
        let window = ((x[x.len() - 1] - f0) / hw).atan() - ((x[0] - f0) / hw).atan();
        let expected = area * window / std::f64::consts::PI;
        assert!(((integral - expected) / expected).abs() < 0.01);
    }

    #[test]
    fn dbm_matches_linear() {
        let f = axis(20);
        let lin: Vec<f64> = (0..20).map(|i| 1e-6 * (2.0 + i as f64)).collect();
        let db: Vec<f64> = lin.iter().map(|v| 10.0 * v.log10()).collect();
        let bg = Spectrum::linear(f.clone(), vec![1e-6; 20]).unwrap();
        let a = subtract_background(&Spectrum::linear(f.clone(), lin).unwrap(), &bg).unwrap();
        let s_db = Spectrum::new(f, db, SpectrumMeta { units: Units::Dbm, ..Default::default() }).unwrap();
        let b = subtract_background(&s_db, &bg).unwrap();
        for (x, y) in a.spectrum.values().iter().zip(b.spectrum.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_and_clamping() {
        let f = axis(10);
        let s = Spectrum::linear(f.clone(), vec![5.0, 6.0, 7.0, 1.0, 9.0, 9.5, 3.0, 4.0, 8.0, 7.5]).unwrap();
        let bg = Spectrum::linear(f.clone(), vec![2.0; 10]).unwrap();
        let r = subtract_background(&s, &bg).unwrap();
        assert_eq!(r.clamped, 1);
        let back = add_background(&r.spectrum, &bg).unwrap();
        for (i, (x, y)) in back.values().iter().zip(s.values()).enumerate() {
            if i != 3 {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disjoint_axes_fail() {
        let a = Spectrum::linear(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let b = Spectrum::linear(vec![3.0, 4.0], vec![1.0, 1.0]).unwrap();
        assert!(subtract_background(&a, &b).is_err());
    }
}
