//! Sample quantiles and moments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub mean: f64,
    /// Divisor `m − 1`.
    pub variance: f64,
    /// `m₄/m₂² − 3` with divisor-`m` central moments; `None` for a constant sample.
    pub kurtosis: Option<f64>,
    pub count: usize,
}

/// Quantile of sorted data by linear interpolation between order
/// statistics at position `h = (m − 1)p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: m });
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(vec![*bad]));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mf = m as f64;
    let mean = samples.iter().sum::<f64>() / mf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in samples {
        let d2 = (x - mean).powi(2);
        m2 += d2;
        m4 += d2 * d2;
    }
    let variance = m2 / (mf - 1.0);
    let (m2, m4) = (m2 / mf, m4 / mf);
    let kurtosis = (m2 > 0.0).then(|| m4 / (m2 * m2) - 3.0);
    let q = |p| quantile_sorted(&sorted, p);
    Ok(Summary {
        q05: q(0.05),
        q25: q(0.25),
        q50: q(0.5),
        q75: q(0.75),
        q95: q(0.95),
        mean,
        variance,
        kurtosis,
        count: m,
    })
}

/// Like [`summarize`], but a single sample gives all quantiles equal to it,
/// zero variance and no kurtosis.
pub fn summarize_any(samples: &[f64]) -> Result<Summary> {
    match samples {
        [x] if x.is_finite() => Ok(Summary {
            q05: *x,
            q25: *x,
            q50: *x,
            q75: *x,
            q95: *x,
            mean: *x,
            variance: 0.0,
            kurtosis: None,
            count: 1,
        }),
        _ => summarize(samples),
    }
}

/// Root mean squared deviation about `target`.
pub fn rmse(samples: &[f64], target: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    Some((samples.iter().map(|x| (x - target).powi(2)).sum::<f64>() / samples.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_points() {
        let s = summarize(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(s.q50, 3.0);
        assert_eq!(s.q25, 2.0);
        assert!((s.q05 - 1.2).abs() < 1e-15);
        assert!((s.q95 - 4.8).abs() < 1e-15);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.variance, 2.5);
        // central moments 2 and 6.8
        assert!((s.kurtosis.unwrap() - (6.8 / 4.0 - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(summarize(&[1.0]), Err(Error::InsufficientSamples { needed: 2, got: 1 }));
        let one = summarize_any(&[2.0]).unwrap();
        assert_eq!((one.q50, one.variance, one.kurtosis), (2.0, 0.0, None));
        assert!(summarize_any(&[]).is_err());
    }

    #[test]
    fn constant_sample_has_no_kurtosis() {
        let s = summarize(&[1.5; 4]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.kurtosis, None);
    }

    #[test]
    fn rmse_values() {
        assert_eq!(rmse(&[], 1.0), None);
        assert_eq!(rmse(&[1.0, 3.0], 2.0), Some(1.0));
    }
}
