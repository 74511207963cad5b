//! CSV input series and trace files.
//!
//! Files are UTF-8 with LF line endings and `.` as decimal separator. Input
//! series use the header `t,u,y`; traces append `y_hat,e`. Numbers are
//! written with nine significant digits so repeated runs diff cleanly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const SERIES_HEADER: [&str; 3] = ["t", "u", "y"];
pub const TRACE_HEADER: [&str; 5] = ["t", "u", "y", "y_hat", "e"];

/// Nine-significant-digit decimal rendering. Plain notation for magnitudes
/// in `[1e-5, 1e9)`, scientific otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_owned()))
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Sampled input/output stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Median sample spacing, if there are at least two samples.
    pub fn median_dt(&self) -> Option<f64> {
        let mut gaps: Vec<f64> = self.t.windows(2).map(|w| w[1] - w[0]).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(f64::total_cmp);
        let mid = gaps.len() / 2;
        Some(if gaps.len() % 2 == 1 {
            gaps[mid]
        } else {
            0.5 * (gaps[mid - 1] + gaps[mid])
        })
    }
}

/// Reads a `t,u,y` series. Extra trailing columns (as in trace files) are
/// ignored. `t` must be strictly increasing.
pub fn load_series(path: &Path) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<&str> = headers.iter().take(3).collect();
    if names != SERIES_HEADER {
        return Err(Error::Format {
            path: path.to_owned(),
            message: format!("header must start with t,u,y (found {})", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut series = Series::default();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("missing column {name}"),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("column {name}: cannot parse {raw:?} as a number"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("column {name}: non-finite value"),
                })
            }
        };
        let t = field(0, "t")?;
        let u = field(1, "u")?;
        let y = field(2, "y")?;
        if let Some(&prev) = series.t.last() {
            if t <= prev {
                return Err(Error::Format {
                    path: path.to_owned(),
                    message: format!("line {line}: time {t} does not increase (previous {prev})"),
                });
            }
        }
        series.t.push(t);
        series.u.push(u);
        series.y.push(y);
    }
    Ok(series)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn render(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = String::with_capacity(16 * header.len() * (rows + 1));
    out.push_str(&header.join(","));
    out.push('\n');
    for k in 0..rows {
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_sig(col[k]));
        }
        out.push('\n');
    }
    out
}

pub fn render_series(s: &Series) -> String {
    render(&SERIES_HEADER, &[&s.t, &s.u, &s.y])
}

pub fn write_series(path: &Path, s: &Series) -> Result<()> {
    fs::write(path, render_series(s)).map_err(|e| Error::io(path, e))
}

/// One row of an identification trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub u: f64,
    pub y: f64,
    pub y_hat: f64,
    pub e: f64,
}

pub fn render_trace(records: &[TraceRecord]) -> String {
    let col = |f: fn(&TraceRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let (t, u, y, y_hat, e) = (
        col(|r| r.t),
        col(|r| r.u),
        col(|r| r.y),
        col(|r| r.y_hat),
        col(|r| r.e),
    );
    render(&TRACE_HEADER, &[&t, &u, &y, &y_hat, &e])
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    fs::write(path, render_trace(records)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.001), "0.001");
        assert_eq!(format_sig(-2.5), "-2.5");
        assert_eq!(format_sig(std::f64::consts::PI), "3.14159265");
        assert_eq!(format_sig(127.32395447351627), "127.323954");
        assert_eq!(format_sig(9.9999999996), "10");
        assert_eq!(format_sig(1.5e-7), "1.5e-7");
        assert_eq!(format_sig(123456789012.0), "1.23456789e11");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333");
    }

    #[test]
    fn median_spacing() {
        let s = Series {
            t: vec![0.0, 1.0, 2.0, 4.0],
            u: vec![0.0; 4],
            y: vec![0.0; 4],
        };
        assert_eq!(s.median_dt(), Some(1.0));
        assert_eq!(Series::default().median_dt(), None);
    }

    #[test]
    fn trace_header_and_row() {
        let text = render_trace(&[TraceRecord {
            t: 0.001,
            u: 1.0,
            y: 2.0,
            y_hat: 1.5,
            e: 0.5,
        }]);
        assert_eq!(text, "t,u,y,y_hat,e\n0.001,1,2,1.5,0.5\n");
    }
}
