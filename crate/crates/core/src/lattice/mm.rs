//! Matrix-market coordinate text for debugging dumps.

use std::fmt::Write;

use faer::c64;

use crate::error::{Error, Result};
use crate::linalg::Csr;

pub fn to_matrix_market(m: &Csr) -> String {
    let trips = m.triplets();
    let mut out = String::from("%%MatrixMarket matrix coordinate complex general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows, m.ncols, trips.len());
    for (r, c, v) in trips {
        let _ = writeln!(out, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im);
    }
    out
}

pub fn from_matrix_market(text: &str) -> Result<Csr> {
    let parse = |msg: &str| Error::Parse(msg.to_string());
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| parse("empty matrix-market text"))?;
    if !header.starts_with("%%MatrixMarket matrix coordinate complex general") {
        return Err(parse("unsupported matrix-market header"));
    }
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size: Vec<usize> = lines
        .next()
        .ok_or_else(|| parse("missing size line"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse("bad size line")))
        .collect::<Result<_>>()?;
    if size.len() != 3 {
        return Err(parse("size line needs three integers"));
    }
    let mut trips = Vec::with_capacity(size[2]);
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(parse("entry line needs four fields"));
        }
        let r: usize = t[0].parse().map_err(|_| parse("bad row index"))?;
        let c: usize = t[1].parse().map_err(|_| parse("bad column index"))?;
        let re: f64 = t[2].parse().map_err(|_| parse("bad real part"))?;
        let im: f64 = t[3].parse().map_err(|_| parse("bad imaginary part"))?;
        if r == 0 || c == 0 || r > size[0] || c > size[1] {
            return Err(parse("index out of range"));
        }
        trips.push((r - 1, c - 1, c64::new(re, im)));
    }
    if trips.len() != size[2] {
        return Err(parse("entry count mismatch"));
    }
    Ok(Csr::from_triplets(size[0], size[1], &trips))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let m = Csr::from_triplets(3, 2, &[(0, 1, c64::new(1.5, -2.0)), (2, 0, c64::new(0.1, 1e-20))]);
        let back = from_matrix_market(&to_matrix_market(&m)).unwrap();
        assert_eq!(m, back);
        assert!(from_matrix_market("%%MatrixMarket matrix coordinate complex general\n2 2 1\n3 1 0 0\n").is_err());
    }
}
