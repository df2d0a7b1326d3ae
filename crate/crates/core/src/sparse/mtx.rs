//! Matrix Market coordinate format (real, general).

use std::fmt::Write as _;

use super::CsrMatrix;
use crate::error::LinalgError;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Serializes with 1-based indices and 17 significant digits.
pub fn to_matrix_market(a: &CsrMatrix) -> String {
    let mut out = String::with_capacity(64 + a.nnz() * 40);
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for r in 0..a.nrows() {
        for (c, v) in a.row_iter(r) {
            let _ = writeln!(out, "{} {} {:.16e}", r + 1, c + 1, v);
        }
    }
    out
}

/// Parses a coordinate real general (or symmetric) Matrix Market text.
pub fn from_matrix_market(text: &str) -> Result<CsrMatrix, LinalgError> {
    let mut lines = text.lines();
    let banner = lines.next().ok_or_else(|| LinalgError::Invalid("empty matrix market text".into()))?;
    let banner_lc = banner.to_ascii_lowercase();
    if !banner_lc.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(LinalgError::Invalid(format!("unsupported banner {banner:?}")));
    }
    let symmetric = banner_lc.contains("symmetric");
    let mut body = lines.filter(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let size = body.next().ok_or_else(|| LinalgError::Invalid("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| LinalgError::Invalid(format!("bad size token {t:?}"))))
        .collect::<Result<_, _>>()?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(LinalgError::Invalid("size line needs three integers".into()));
    };
    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    for _ in 0..nnz {
        let line = body.next().ok_or_else(|| LinalgError::Invalid("fewer entries than declared".into()))?;
        let mut t = line.split_whitespace();
        let mut next_index = || -> Result<usize, LinalgError> {
            let tok = t.next().ok_or_else(|| LinalgError::Invalid(format!("short entry {line:?}")))?;
            let k: usize = tok.parse().map_err(|_| LinalgError::Invalid(format!("bad index {tok:?}")))?;
            k.checked_sub(1).ok_or_else(|| LinalgError::Invalid("index 0 in matrix market".into()))
        };
        let r = next_index()?;
        let c = next_index()?;
        let tok = t.next().ok_or_else(|| LinalgError::Invalid(format!("short entry {line:?}")))?;
        let v: f64 = tok.parse().map_err(|_| LinalgError::Invalid(format!("bad value {tok:?}")))?;
        triplets.push((r, c, v));
        if symmetric && r != c {
            triplets.push((c, r, v));
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let a = CsrMatrix::from_triplets(3, 2, &[(0, 1, 1.0 / 3.0), (2, 0, -2.5e-17), (1, 1, 7.0)]).unwrap();
        let back = from_matrix_market(&to_matrix_market(&a)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn symmetric_banner_mirrors() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2\n2 1 -1\n";
        let a = from_matrix_market(text).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }

    #[test]
    fn truncated_body_errors() {
        assert!(from_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n").is_err());
    }
}
