//! The binned-spectrum interchange record shared by files and the service:
//! `{"mz_start":50,"mz_end":350,"intensities":[301 numbers]}`.

use serde::{Deserialize, Serialize};
use specid_core::spectra::{BinnedSpectrum, MZ_END, MZ_START, N_BINS};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRecord {
    pub mz_start: u32,
    pub mz_end: u32,
    pub intensities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("expected mz_start {MZ_START} and mz_end {MZ_END}, found {0} and {1}")]
    Range(u32, u32),
    #[error("expected {N_BINS} bins, found {0}")]
    Length(usize),
    #[error("intensity at bin {0} is negative or not finite")]
    Intensity(usize),
}

impl SpectrumRecord {
    pub fn to_spectrum(&self) -> Result<BinnedSpectrum, RecordError> {
        if (self.mz_start, self.mz_end) != (MZ_START, MZ_END) {
            return Err(RecordError::Range(self.mz_start, self.mz_end));
        }
        if self.intensities.len() != N_BINS {
            return Err(RecordError::Length(self.intensities.len()));
        }
        if let Some(i) = self.intensities.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(RecordError::Intensity(i));
        }
        Ok(BinnedSpectrum::new(self.intensities.clone()).expect("record validated"))
    }
}

impl From<&BinnedSpectrum> for SpectrumRecord {
    fn from(s: &BinnedSpectrum) -> Self {
        Self { mz_start: MZ_START, mz_end: MZ_END, intensities: s.intensities().to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut v = vec![0.0; N_BINS];
        v[68] = 1.0;
        let s = BinnedSpectrum::new(v).unwrap();
        let json = serde_json::to_string(&SpectrumRecord::from(&s)).unwrap();
        assert!(json.starts_with(r#"{"mz_start":50,"mz_end":350,"intensities":[0.0,"#));
        let back: SpectrumRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_spectrum().unwrap(), s);
    }

    #[test]
    fn validation() {
        let rec = |lo, hi, n| SpectrumRecord { mz_start: lo, mz_end: hi, intensities: vec![0.5; n] };
        assert_eq!(rec(50, 350, 300).to_spectrum().unwrap_err().to_string(), "expected 301 bins, found 300");
        assert_eq!(rec(30, 350, 321).to_spectrum().unwrap_err(), RecordError::Range(30, 350));
        let mut r = rec(50, 350, 301);
        r.intensities[7] = -0.1;
        assert_eq!(r.to_spectrum().unwrap_err(), RecordError::Intensity(7));
    }
}
