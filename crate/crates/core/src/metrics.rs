//! Out-of-sample error measures and the paired comparison test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Squared error of `pred` relative to the squared error of predicting the
/// training mean.
pub fn smse(y_test: &[f64], pred: &[f64], y_train_mean: f64) -> Result<f64> {
    check_lengths(y_test.len(), pred.len())?;
    let num: f64 = y_test.iter().zip(pred).map(|(y, p)| (y - p) * (y - p)).sum();
    let den: f64 = y_test.iter().map(|y| (y - y_train_mean) * (y - y_train_mean)).sum();
    if den == 0.0 {
        return Err(Error::Metric("every test outcome equals the training mean".into()));
    }
    Ok(num / den)
}

pub fn rmse(y: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(y.len(), pred.len())?;
    let sse: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / y.len() as f64).sqrt())
}

pub fn accuracy(y: &[u8], labels: &[u8]) -> Result<f64> {
    check_lengths(y.len(), labels.len())?;
    let hits = y.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Metric(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::Metric("no observations".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub t: f64,
    /// `P(T <= t)`: small when `a` is systematically below `b`.
    pub p_value: f64,
    /// Set when the differences have zero variance; `p_value` is then 0.5.
    pub degenerate: bool,
}

/// One-sided paired t test of `mean(a - b) < 0` with `n - 1` degrees of freedom.
pub fn paired_one_sided_t(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    check_lengths(a.len(), b.len())?;
    let n = a.len();
    if n < 2 {
        return Err(Error::Metric("paired t test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    if var.is_nan() || var <= 0.0 {
        // All differences equal: the limit of t is +-inf, or 0/0 when they are zero.
        let (t, p_value) = if mean < 0.0 {
            (f64::NEG_INFINITY, 0.0)
        } else if mean > 0.0 {
            (f64::INFINITY, 1.0)
        } else {
            (f64::NAN, 0.5)
        };
        return Ok(PairedTest {
            t,
            p_value,
            degenerate: true,
        });
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::Metric(e.to_string()))?;
    Ok(PairedTest {
        t,
        p_value: dist.cdf(t),
        degenerate: false,
    })
}
