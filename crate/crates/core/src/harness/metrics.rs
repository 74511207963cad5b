use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sample_count: usize,
    pub rmse: f64,
    /// RMSE over each quarter of the trace; `None` for an empty quarter
    /// (fewer than four samples).
    pub rmse_quarters: [Option<f64>; 4],
    pub max_abs_error: f64,
}

pub fn rmse(errors: &[f64]) -> Option<f64> {
    if errors.is_empty() {
        return None;
    }
    let sq: f64 = errors.iter().map(|e| e * e).sum();
    Some((sq / errors.len() as f64).sqrt())
}

/// RMSE of `a - b` over the common length.
pub fn rmse_between(a: &[f64], b: &[f64]) -> Option<f64> {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    rmse(&diff)
}

/// Quarter `q` covers `[q·n/4, (q+1)·n/4)`.
pub fn quarter_bounds(n: usize, q: usize) -> std::ops::Range<usize> {
    (q * n / 4)..((q + 1) * n / 4)
}

pub fn compute_metrics(errors: &[f64]) -> Result<Metrics> {
    let rmse_all = rmse(errors).ok_or(Error::EmptyTrace)?;
    let n = errors.len();
    let rmse_quarters = std::array::from_fn(|q| rmse(&errors[quarter_bounds(n, q)]));
    Ok(Metrics {
        sample_count: n,
        rmse: rmse_all,
        rmse_quarters,
        max_abs_error: errors.iter().fold(0.0, |m, e| m.max(e.abs())),
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let denom = (saa * sbb).sqrt();
    (denom > 0.0).then(|| sab / denom)
}

/// Shift `s` in `[-max_shift, max_shift]` maximizing the correlation between
/// `signal[k + s]` and `reference[k]`. Positive values mean `signal` lags
/// `reference`. Ties resolve to the most negative shift.
pub fn xcorr_lag(signal: &[f64], reference: &[f64], max_shift: usize) -> Option<isize> {
    let n = signal.len().min(reference.len());
    let max_shift = max_shift.min(n.saturating_sub(2)) as isize;
    let mut best: Option<(f64, isize)> = None;
    for s in -max_shift..=max_shift {
        let (sig, refr) = if s >= 0 {
            let s = s as usize;
            (&signal[s..n], &reference[..n - s])
        } else {
            let s = (-s) as usize;
            (&signal[..n - s], &reference[s..n])
        };
        if let Some(r) = pearson(sig, refr) {
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, s));
            }
        }
    }
    best.map(|(_, s)| s)
}
