//! Dense matrix helpers shared by the kernel and spectral code.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{io_err, Error, Result};

pub type Matrix = faer::Mat<f64>;

/// Gram matrix of the rows, `X Xᵀ`.
pub fn row_gram(x: &Matrix) -> Matrix {
    let g: Matrix = x * x.transpose();
    symmetrize(&g)
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    same_shape(a, b)?;
    Ok(Matrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * b[(i, j)]))
}

pub fn same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch(a.nrows(), a.ncols(), b.nrows(), b.ncols()));
    }
    Ok(())
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> Result<f64> {
    same_shape(a, b)?;
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    Ok(m)
}

/// `s·I + t·M` for square `M`.
pub fn shift_scale(m: &Matrix, t: f64, s: f64) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        t * m[(i, j)] + if i == j { s } else { 0.0 }
    })
}

pub fn is_finite(a: &Matrix) -> bool {
    (0..a.ncols()).all(|j| a.col_as_slice(j).iter().all(|v| v.is_finite()))
}

/// Header carried by matrix CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixHeader {
    pub kind: String,
    pub upsilon: f64,
    pub h: f64,
}

/// Row-major CSV: `n,kind,upsilon,h` on the first line, the values on the
/// second, then `n` rows.
pub fn write_matrix_csv(path: &Path, m: &Matrix, header: &MatrixHeader) -> Result<()> {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 24);
    out.push_str("n,kind,upsilon,h\n");
    let _ = writeln!(out, "{},{},{},{}", m.nrows(), header.kind, header.upsilon, header.h);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_matrix_csv(path: &Path) -> Result<(Matrix, MatrixHeader)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |msg: &str| Error::Parse { path: path.to_path_buf(), msg: msg.to_string() };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("n,kind,upsilon,h") {
        return Err(bad("expected header `n,kind,upsilon,h`"));
    }
    let meta: Vec<&str> = lines.next().ok_or_else(|| bad("missing header values"))?.split(',').collect();
    if meta.len() != 4 {
        return Err(bad("header values must have 4 fields"));
    }
    let n: usize = meta[0].trim().parse().map_err(|_| bad("bad n"))?;
    let header = MatrixHeader {
        kind: meta[1].trim().to_string(),
        upsilon: meta[2].trim().parse().map_err(|_| bad("bad upsilon"))?,
        h: meta[3].trim().parse().map_err(|_| bad("bad h"))?,
    };
    let rows = parse_rows(&mut lines, n, n).map_err(|m| bad(&m))?;
    Ok((rows, header))
}

pub(crate) fn parse_rows<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    nrows: usize,
    ncols: usize,
) -> std::result::Result<Matrix, String> {
    let mut m = Matrix::zeros(nrows, ncols);
    for i in 0..nrows {
        let line = lines.next().ok_or_else(|| format!("expected {nrows} rows, got {i}"))?;
        let mut count = 0;
        for (j, field) in line.split(',').enumerate() {
            if j >= ncols {
                return Err(format!("row {i} has more than {ncols} fields"));
            }
            m[(i, j)] = field.trim().parse().map_err(|_| format!("row {i}: bad number `{field}`"))?;
            count += 1;
        }
        if count != ncols {
            return Err(format!("row {i} has {count} fields, expected {ncols}"));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_loops() {
        let x = Matrix::from_fn(4, 3, |i, j| (i as f64) - 0.5 * j as f64);
        let g = row_gram(&x);
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..3).map(|k| x[(i, k)] * x[(j, k)]).sum();
                assert!((g[(i, j)] - dot).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = Matrix::from_fn(3, 3, |i, j| 0.1 + i as f64 * 1.5 - j as f64 / 7.0);
        let hdr = MatrixHeader { kind: "W".into(), upsilon: 0.5, h: 200.0 };
        write_matrix_csv(&path, &m, &hdr).unwrap();
        let (back, h2) = read_matrix_csv(&path).unwrap();
        assert_eq!(h2, hdr);
        assert_eq!(max_abs_diff(&m, &back).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(hadamard(&a, &b), Err(Error::ShapeMismatch(2, 2, 3, 2))));
    }
}
