//! Exponential fits and the small aggregates used in summaries.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive value {y} at n = {n}; exponential fit needs y > 0")]
    Domain { n: f64, y: f64 },
    #[error("all abscissae are equal")]
    Degenerate,
}

/// `y = a exp(b n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub a: f64,
    pub b: f64,
    /// RMS of `ln y - ln(a exp(b n))`.
    pub log_rms: f64,
    pub points: usize,
}

impl ExpFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.a * (self.b * n).exp()
    }
}

/// Ordinary least squares of `ln y` on `n`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExpFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    if let Some(&(n, y)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(FitError::Domain { n, y });
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let b = sxy / sxx;
    let intercept = my - b * mx;
    let log_rms = (points.iter().map(|p| (p.1.ln() - intercept - b * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(ExpFit { a: intercept.exp(), b, log_rms, points: points.len() })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Lower median: element `(len - 1) / 2` of the sorted values.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

pub fn min(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_exponential() {
        let pts: Vec<(f64, f64)> = (6..=16).map(|n| (n as f64, 8.2 * (0.21 * n as f64).exp())).collect();
        let fit = fit_exponential(&pts).unwrap();
        assert!((fit.a - 8.2).abs() < 1e-10);
        assert!((fit.b - 0.21).abs() < 1e-10);
        assert!(fit.log_rms < 1e-12);
        let decay: Vec<(f64, f64)> = (8..=14).map(|n| (n as f64, 0.9 * (-0.2 * n as f64).exp())).collect();
        let fit = fit_exponential(&decay).unwrap();
        assert!((fit.a - 0.9).abs() < 1e-10 && (fit.b + 0.2).abs() < 1e-10);
    }

    #[test]
    fn constant_data_has_zero_rate() {
        let fit = fit_exponential(&[(1.0, 3.0), (2.0, 3.0), (5.0, 3.0)]).unwrap();
        assert_eq!(fit.b, 0.0);
        assert!((fit.a - 3.0).abs() < 1e-15);
    }

    #[test]
    fn fit_errors() {
        assert_eq!(fit_exponential(&[(1.0, 1.0), (2.0, 2.0)]), Err(FitError::TooFewPoints(2)));
        assert!(matches!(fit_exponential(&[(1.0, 1.0), (2.0, 0.0), (3.0, 2.0)]), Err(FitError::Domain { .. })));
        assert_eq!(fit_exponential(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(FitError::Degenerate));
    }

    #[test]
    fn aggregates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(lower_median(&v), 2.0);
        assert_eq!(lower_median(&[5.0, 1.0, 3.0]), 3.0);
        assert_eq!(mean(&v), 2.5);
        assert!((std_dev(&v) - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(std_dev(&[7.0]), 0.0);
        assert_eq!((min(&v), max(&v)), (1.0, 4.0));
    }
}
