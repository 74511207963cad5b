//! Triangular membership partitions over one symmetric universe of discourse.
//!
//! Membership triangles sit on a uniform grid of apexes spanning
//! `[-current_limit, +current_limit]`, each reaching down to its neighbours'
//! apexes, so interior points always carry total grade 1. The outermost sets
//! are shoulders: values beyond the universe are clamped before evaluation.
//!
//! Defuzzification uses a separate list of gravity centers. They start on the
//! apexes and are then moved on-line by [`FuzzyPartition::adjust_centers`];
//! the triangles themselves only move when the universe is expanded.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::GradeVector;
use crate::error::{Error, Result};

/// Sum of output grades below which defuzzification falls back to a
/// caller-supplied value.
pub const DEFUZZ_EPSILON: f64 = 1e-9;

/// Minimum separation between neighbouring gravity centers, relative to the
/// current universe half-width.
pub const CENTER_SEPARATION: f64 = 1e-6;

/// Conventional labels for partitions of up to seven sets; larger partitions
/// get numbered labels.
pub fn labels(n_sets: usize) -> Vec<String> {
    let named: &[&str] = match n_sets {
        3 => &["N", "ZE", "P"],
        5 => &["NB", "NS", "ZE", "PS", "PB"],
        7 => &["NB", "NM", "NS", "ZE", "PS", "PM", "PB"],
        _ => &[],
    };
    if !named.is_empty() {
        return named.iter().map(|s| (*s).to_owned()).collect();
    }
    let half = n_sets / 2;
    (0..n_sets)
        .map(|i| match i.cmp(&half) {
            std::cmp::Ordering::Less => format!("N{}", half - i),
            std::cmp::Ordering::Equal => "ZE".to_owned(),
            std::cmp::Ordering::Greater => format!("P{}", i - half),
        })
        .collect()
}

fn uniform_peaks(n_sets: usize, limit: f64) -> Vec<f64> {
    let span = (n_sets - 1) as f64;
    (0..n_sets)
        .map(|i| limit * ((2.0 * i as f64 - span) / span))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRecord")]
pub struct FuzzyPartition {
    labels: Vec<String>,
    init_limit: f64,
    current_limit: f64,
    peaks: Vec<f64>,
    centers: Vec<f64>,
}

/// Unvalidated wire form of a partition.
#[derive(Deserialize)]
struct PartitionRecord {
    labels: Vec<String>,
    init_limit: f64,
    current_limit: f64,
    peaks: Vec<f64>,
    centers: Vec<f64>,
}

impl TryFrom<PartitionRecord> for FuzzyPartition {
    type Error = Error;

    fn try_from(rec: PartitionRecord) -> Result<Self> {
        let mut p = FuzzyPartition::uniform(rec.peaks.len(), rec.init_limit)?;
        if rec.labels.len() != p.n_sets() || rec.centers.len() != p.n_sets() {
            return Err(Error::Dimension {
                expected: p.n_sets(),
                found: rec.labels.len().min(rec.centers.len()),
            });
        }
        if !(rec.current_limit >= rec.init_limit && rec.current_limit.is_finite()) {
            return Err(Error::config("current_limit must be finite and >= init_limit"));
        }
        let ordered = rec.centers.windows(2).all(|w| w[0] < w[1]);
        let inside = rec
            .centers
            .iter()
            .all(|c| c.abs() <= rec.current_limit);
        if !ordered || !inside {
            return Err(Error::config(
                "gravity centers must be strictly increasing inside the universe",
            ));
        }
        p.labels = rec.labels;
        p.current_limit = rec.current_limit;
        p.peaks = uniform_peaks(p.n_sets(), rec.current_limit);
        p.centers = rec.centers;
        Ok(p)
    }
}

impl FuzzyPartition {
    /// Uniform partition of `n_sets` triangles over `[-init_limit, init_limit]`
    /// with centers on the apexes.
    pub fn uniform(n_sets: usize, init_limit: f64) -> Result<Self> {
        if n_sets < 3 || n_sets.is_multiple_of(2) {
            return Err(Error::config(format!(
                "partition needs an odd set count >= 3, got {n_sets}"
            )));
        }
        if !(init_limit > 0.0 && init_limit.is_finite()) {
            return Err(Error::config(format!(
                "universe half-width must be positive and finite, got {init_limit}"
            )));
        }
        let peaks = uniform_peaks(n_sets, init_limit);
        Ok(Self {
            labels: labels(n_sets),
            init_limit,
            current_limit: init_limit,
            centers: peaks.clone(),
            peaks,
        })
    }

    pub fn n_sets(&self) -> usize {
        self.peaks.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn init_limit(&self) -> f64 {
        self.init_limit
    }

    pub fn current_limit(&self) -> f64 {
        self.current_limit
    }

    pub fn peaks(&self) -> &[f64] {
        &self.peaks
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Range that any defuzzified value falls in.
    pub fn center_bounds(&self) -> (f64, f64) {
        (self.centers[0], self.centers[self.n_sets() - 1])
    }

    /// Triangular membership grades of `x`. Non-finite input yields an
    /// all-zero vector.
    pub fn fuzzify(&self, x: f64) -> GradeVector {
        let n = self.n_sets();
        let mut grades = vec![0.0; n];
        if x.is_nan() {
            return GradeVector::from_valid(grades);
        }
        let x = x.clamp(-self.current_limit, self.current_limit);
        // index of the segment [peaks[i], peaks[i + 1]] containing x
        let i = self.peaks.partition_point(|&p| p <= x).clamp(1, n - 1) - 1;
        let (lo, hi) = (self.peaks[i], self.peaks[i + 1]);
        let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        grades[i] = 1.0 - t;
        grades[i + 1] = t;
        GradeVector::from_valid(grades)
    }

    /// Center-of-gravity defuzzification `Σ y_i·CG_i / Σ y_i`. Returns
    /// `fallback` when the grades are (numerically) all zero.
    pub fn defuzzify(&self, y: &GradeVector, fallback: f64) -> Result<f64> {
        if y.len() != self.n_sets() {
            return Err(Error::Dimension {
                expected: self.n_sets(),
                found: y.len(),
            });
        }
        let weight = y.sum();
        if weight < DEFUZZ_EPSILON {
            return Ok(fallback);
        }
        let moment: f64 = y.iter().zip(&self.centers).map(|(g, c)| g * c).sum();
        let (lo, hi) = self.center_bounds();
        Ok((moment / weight).clamp(lo, hi))
    }

    /// Moves every gravity center by `alpha · error_integral · y_hat_i`, then
    /// restores strict ordering and containment in the universe.
    pub fn adjust_centers(&self, error_integral: f64, y_hat: &GradeVector, alpha: f64) -> Result<Self> {
        if y_hat.len() != self.n_sets() {
            return Err(Error::Dimension {
                expected: self.n_sets(),
                found: y_hat.len(),
            });
        }
        let mut next = self.clone();
        let drive = alpha * error_integral;
        if drive == 0.0 || y_hat.iter().all(|g| g == 0.0) {
            return Ok(next);
        }
        for (c, g) in next.centers.iter_mut().zip(y_hat.iter()) {
            *c += drive * g;
        }
        next.enforce_center_order();
        Ok(next)
    }

    fn enforce_center_order(&mut self) {
        let limit = self.current_limit;
        let gap = CENTER_SEPARATION * limit;
        let n = self.centers.len();
        for c in &mut self.centers {
            *c = c.clamp(-limit, limit);
        }
        for i in 1..n {
            let floor = self.centers[i - 1] + gap;
            if self.centers[i] < floor {
                self.centers[i] = floor;
            }
        }
        self.centers[n - 1] = self.centers[n - 1].min(limit);
        for i in (0..n - 1).rev() {
            let ceil = self.centers[i + 1] - gap;
            if self.centers[i] > ceil {
                self.centers[i] = ceil;
            }
        }
    }

    /// Ratcheting universe expansion: the half-width grows to
    /// `init_limit + beta·|value|` when that exceeds the current width, and
    /// apexes and centers are rescaled with it. It never shrinks.
    pub fn expand_universe(&self, value: f64, beta: f64) -> Self {
        let mut next = self.clone();
        if !value.is_finite() {
            return next;
        }
        let candidate = self.init_limit * (1.0 + beta * value.abs() / self.init_limit);
        if candidate > self.current_limit {
            let factor = candidate / self.current_limit;
            next.current_limit = candidate;
            next.peaks = uniform_peaks(self.n_sets(), candidate);
            for c in &mut next.centers {
                *c *= factor;
            }
            // rescaling can push the outermost center a few ulps past the limit
            next.enforce_center_order();
        }
        next
    }
}

impl fmt::Display for FuzzyPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "universe: init {} current {}",
            self.init_limit, self.current_limit
        )?;
        writeln!(f, "{:<6} {:>14} {:>14}", "label", "peak", "center")?;
        for ((l, p), c) in self.labels.iter().zip(&self.peaks).zip(&self.centers) {
            writeln!(f, "{l:<6} {p:>14.6} {c:>14.6}")?;
        }
        Ok(())
    }
}
