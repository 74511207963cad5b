//! Pointwise fuzzy set operations and the max-min relational calculus.
//!
//! A [`GradeVector`] holds the membership grades of one crisp value over an
//! ordered family of linguistic labels. A [`RelationalMatrix`] links an input
//! family (rows) to an output family (columns); entry `(i, j)` is the
//! possibility of the rule `IF input is i THEN output is j`.
//!
//! Every value entering these types is checked to lie in `[0, 1]`. Nothing is
//! clamped on the way in.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_grade(index: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::GradeOutOfRange { index, value })
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Membership grades over an ordered label family, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GradeVector(Vec<f64>);

impl GradeVector {
    pub fn new(grades: Vec<f64>) -> Result<Self> {
        for (i, &g) in grades.iter().enumerate() {
            check_grade(i, g)?;
        }
        Ok(Self(grades))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    /// Crate-internal constructor for values already known to be in range.
    pub(crate) fn from_valid(grades: Vec<f64>) -> Self {
        debug_assert!(grades.iter().all(|g| (0.0..=1.0).contains(g)));
        Self(grades)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_grade(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }
}

impl TryFrom<Vec<f64>> for GradeVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GradeVector> for Vec<f64> {
    fn from(g: GradeVector) -> Self {
        g.0
    }
}

impl Index<usize> for GradeVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Elementwise max.
pub fn union(a: &GradeVector, b: &GradeVector) -> Result<GradeVector> {
    a.zip_with(b, f64::max)
}

/// Elementwise min.
pub fn intersection(a: &GradeVector, b: &GradeVector) -> Result<GradeVector> {
    a.zip_with(b, f64::min)
}

pub fn complement(a: &GradeVector) -> GradeVector {
    GradeVector(a.0.iter().map(|g| 1.0 - g).collect())
}

/// Triangular norm used to build a Cartesian product.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TNorm {
    #[default]
    Min,
    Product,
}

impl TNorm {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Min => a.min(b),
            TNorm::Product => a * b,
        }
    }
}

/// Dense row-major possibility matrix. Rows index the input labels, columns
/// the output labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RelationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl RelationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len(cols, row.len())?;
            for &p in row {
                check_grade(entries.len(), p)?;
                entries.push(p);
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub(crate) fn from_valid(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        debug_assert!(entries.iter().all(|p| (0.0..=1.0).contains(p)));
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn column_max(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        check_len(self.rows, other.rows)?;
        check_len(self.cols, other.cols)
    }
}

impl TryFrom<Vec<Vec<f64>>> for RelationalMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<RelationalMatrix> for Vec<Vec<f64>> {
    fn from(r: RelationalMatrix) -> Self {
        r.to_rows()
    }
}

impl fmt::Display for RelationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|p| format!("{p:.3}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Fuzzy Cartesian product: entry `(i, j) = norm(x_i, y_j)`.
pub fn cartesian_product(x: &GradeVector, y: &GradeVector, norm: TNorm) -> RelationalMatrix {
    let entries = x
        .iter()
        .flat_map(|xi| y.iter().map(move |yj| norm.apply(xi, yj)))
        .collect();
    RelationalMatrix::from_valid(x.len(), y.len(), entries)
}

/// Max-min composition `x • R`: output `j` is `max_i min(x_i, R_ij)`.
pub fn max_min_compose(x: &GradeVector, r: &RelationalMatrix) -> Result<GradeVector> {
    check_len(r.rows(), x.len())?;
    let mut out = vec![0.0f64; r.cols()];
    for (i, xi) in x.iter().enumerate() {
        for (o, &p) in out.iter_mut().zip(r.row(i)) {
            *o = o.max(xi.min(p));
        }
    }
    Ok(GradeVector(out))
}

/// Entrywise max of two relations.
pub fn relation_union(r1: &RelationalMatrix, r2: &RelationalMatrix) -> Result<RelationalMatrix> {
    r1.check_same_shape(r2)?;
    let entries = r1
        .entries
        .iter()
        .zip(&r2.entries)
        .map(|(&a, &b)| a.max(b))
        .collect();
    Ok(RelationalMatrix::from_valid(r1.rows, r1.cols, entries))
}

/// One linguistic reading of a matrix entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub input: String,
    pub output: String,
    pub possibility: f64,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "IF {} THEN {} with possibility {:.4}",
            self.input, self.output, self.possibility
        )
    }
}

/// Reads every entry at or above `threshold` as an IF-THEN rule, strongest
/// first. Ties keep row-major order.
pub fn explain_rules<S: AsRef<str>>(
    r: &RelationalMatrix,
    in_labels: &[S],
    out_labels: &[S],
    threshold: f64,
) -> Result<Vec<Rule>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config(format!(
            "rule threshold {threshold} is outside [0, 1]"
        )));
    }
    check_len(r.rows(), in_labels.len())?;
    check_len(r.cols(), out_labels.len())?;

    let mut rules: Vec<Rule> = (0..r.rows())
        .flat_map(|i| (0..r.cols()).map(move |j| (i, j)))
        .filter(|&(i, j)| r.get(i, j) >= threshold)
        .map(|(i, j)| Rule {
            input: in_labels[i].as_ref().to_owned(),
            output: out_labels[j].as_ref().to_owned(),
            possibility: r.get(i, j),
        })
        .collect();
    rules.sort_by(|a, b| b.possibility.total_cmp(&a.possibility));
    Ok(rules)
}
