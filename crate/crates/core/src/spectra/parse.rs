use alloc::vec::Vec;

use super::{BinnedSpectrum, SpectrumError, MZ_START, N_BINS};

/// One centroided peak as read from a text spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub mz: f64,
    pub intensity: f64,
}

impl Peak {
    pub fn new(mz: f64, intensity: f64) -> Self {
        Self { mz, intensity }
    }
}

/// Parses a text peak list: one `m/z,intensity` or `m/z intensity` pair per
/// line, `#` to end of line is a comment. Line numbers in errors are 1-based.
pub fn parse_spectrum(text: &str) -> Result<Vec<Peak>, SpectrumError> {
    let mut peaks = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = if content.contains(',') {
            content.split(',').map(str::trim).collect()
        } else {
            content.split_whitespace().collect()
        };
        if fields.len() != 2 {
            return Err(SpectrumError::Malformed { line });
        }
        let intensity = parse_number(fields.pop().unwrap(), line)?;
        let mz = parse_number(fields.pop().unwrap(), line)?;
        if intensity < 0.0 {
            return Err(SpectrumError::NegativeIntensity { line });
        }
        peaks.push(Peak { mz, intensity });
    }
    if peaks.is_empty() {
        return Err(SpectrumError::EmptyInput);
    }
    Ok(peaks)
}

fn parse_number(field: &str, line: usize) -> Result<f64, SpectrumError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(SpectrumError::Malformed { line }),
    }
}

/// Accumulates peaks into unit bins by rounding m/z to the nearest integer.
///
/// Peaks whose rounded m/z falls outside 50..=350 (i.e. m/z outside
/// [49.5, 350.5)) are dropped. The result is not normalized.
pub fn bin_peaks(peaks: &[Peak]) -> Result<BinnedSpectrum, SpectrumError> {
    if peaks.is_empty() {
        return Err(SpectrumError::EmptyInput);
    }
    let mut bins = alloc::vec![0.0; N_BINS];
    let mut kept = 0usize;
    for p in peaks {
        if !p.intensity.is_finite() || p.intensity < 0.0 {
            return Err(SpectrumError::InvalidIntensity { bin: 0 });
        }
        let rounded = libm::round(p.mz);
        let offset = rounded - MZ_START as f64;
        if offset >= 0.0 && offset < N_BINS as f64 {
            bins[offset as usize] += p.intensity;
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(SpectrumError::AllPeaksOutOfRange);
    }
    BinnedSpectrum::new(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn comma_pairs() {
        let p = parse_spectrum("118,100.0\n204,35.2").unwrap();
        assert_eq!(p, vec![Peak::new(118.0, 100.0), Peak::new(204.0, 35.2)]);
    }

    #[test]
    fn comments_and_whitespace() {
        let p = parse_spectrum("# hdr\n60 5.0").unwrap();
        assert_eq!(p, vec![Peak::new(60.0, 5.0)]);
        let p = parse_spectrum("\n  87\t12.5   # trailing\n\n").unwrap();
        assert_eq!(p, vec![Peak::new(87.0, 12.5)]);
    }

    #[test]
    fn negative_intensity() {
        assert_eq!(parse_spectrum("60,-1"), Err(SpectrumError::NegativeIntensity { line: 1 }));
    }

    #[test]
    fn malformed_line_reported() {
        assert_eq!(parse_spectrum("60,1\n61;2"), Err(SpectrumError::Malformed { line: 2 }));
        assert_eq!(parse_spectrum("60,1,3"), Err(SpectrumError::Malformed { line: 1 }));
        assert_eq!(parse_spectrum("60"), Err(SpectrumError::Malformed { line: 1 }));
        assert_eq!(parse_spectrum("# a\n60 nan"), Err(SpectrumError::Malformed { line: 2 }));
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_spectrum(""), Err(SpectrumError::EmptyInput));
        assert_eq!(parse_spectrum("# only a comment\n"), Err(SpectrumError::EmptyInput));
    }

    #[test]
    fn boundary_bin() {
        let s = bin_peaks(&[Peak::new(50.0, 2.0)]).unwrap();
        assert_eq!(s.intensities()[0], 2.0);
        assert!(s.intensities()[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rounding_accumulates() {
        // 350 and 350.4 both round to 350 -> last bin.
        let s = bin_peaks(&[Peak::new(350.0, 1.0), Peak::new(350.4, 1.0)]).unwrap();
        assert_eq!(s.intensities()[300], 2.0);
        assert_eq!(s.intensities().iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn half_open_edges() {
        let s = bin_peaks(&[Peak::new(49.5, 1.0), Peak::new(350.5, 7.0), Peak::new(49.4, 3.0)]).unwrap();
        assert_eq!(s.intensities()[0], 1.0);
        assert_eq!(s.intensities().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn out_of_range() {
        assert_eq!(bin_peaks(&[Peak::new(30.0, 1.0)]), Err(SpectrumError::AllPeaksOutOfRange));
        assert_eq!(bin_peaks(&[]), Err(SpectrumError::EmptyInput));
    }
}
