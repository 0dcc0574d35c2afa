//! Plain CSV emission shared by the trajectory, bound and comparison exports.
//!
//! Numbers are written with 17 significant digits in scientific notation so
//! that identical inputs give byte-identical files. Non-finite values are
//! written as empty cells.

use std::fmt::Write;

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

/// Accumulates rows for a CSV document with a fixed header.
#[derive(Debug, Clone)]
pub struct Csv {
    width: usize,
    out: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut out = String::new();
        push_row(&mut out, header.iter().map(|h| h.as_ref()));
        Csv { width: header.len(), out }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        assert_eq!(cells.len(), self.width, "csv row width mismatch");
        push_row(&mut self.out, cells.iter().map(|c| c.as_ref()));
    }

    pub fn finish(self) -> String {
        self.out
    }
}

fn push_row<'a>(out: &mut String, cells: impl Iterator<Item = &'a str>) {
    for (i, cell) in cells.enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{cell}");
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.125), "1.2500000000000000e-1");
        assert_eq!(num(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(num(f64::NEG_INFINITY), "");
        assert_eq!(num(f64::NAN), "");
    }

    #[test]
    fn rows_are_comma_separated() {
        let mut csv = Csv::new(&["n", "v"]);
        csv.row(&["0".to_string(), num(1.0)]);
        assert_eq!(csv.finish(), "n,v\n0,1.0000000000000000e0\n");
    }
}
