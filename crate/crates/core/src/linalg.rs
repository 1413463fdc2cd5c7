//! Small dense helpers shared by the numeric modules.

use std::io::{BufRead, Write};

use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Mean of every column.
pub fn column_means(m: &Matrix) -> Vector {
    let n = m.nrows().max(1) as f64;
    Vector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

/// Subtracts `means` from every row.
pub fn center_columns(m: &Matrix, means: &Vector) -> Matrix {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    out
}

/// Adds `bias` to every row.
pub fn add_row_bias(m: &mut Matrix, bias: &Vector) {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col.add_scalar_mut(bias[j]);
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Lower Cholesky factor `L` of `m + shift·I`, so that `L Lᵀ = m + shift·I`.
///
/// Fails when the shifted matrix is not numerically positive definite.
pub fn cholesky_lower(m: &Matrix, shift: f64) -> Result<Matrix> {
    let d = m.nrows();
    let mut shifted = m.clone();
    for i in 0..d {
        shifted[(i, i)] += shift;
    }
    let scale = shifted.diagonal().amax().max(1e-300);
    let floor = f64::EPSILON * d as f64 * scale;
    let not_pd = || {
        Error::numeric(
            None,
            "covariance not positive definite after regularization; increase the regularizer",
        )
    };
    let l = Cholesky::new(shifted).ok_or_else(not_pd)?.unpack();
    if l.diagonal().iter().any(|&p| !(p * p > floor)) {
        return Err(not_pd());
    }
    Ok(l)
}

/// The `k` leading singular triplets `(U_k, σ_k, V_k)` of `m`, largest first.
///
/// Uses the eigendecomposition of the smaller Gram matrix and falls back to a
/// full SVD when the `k`-th singular value is too small for that to be exact.
pub fn top_singular(m: &Matrix, k: usize) -> (Matrix, Vector, Matrix) {
    let (r, c) = m.shape();
    let wide = r < c;
    let gram = if wide { m * m.transpose() } else { m.transpose() * m };
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let top = eig.eigenvalues[order[0]];
    let kth = eig.eigenvalues[order[k - 1]];
    if top.is_finite() && top > 0.0 && kth > 1e-8 * top {
        let sv = Vector::from_iterator(k, order.iter().map(|&i| eig.eigenvalues[i].sqrt()));
        let basis = Matrix::from_fn(eig.eigenvectors.nrows(), k, |i, j| eig.eigenvectors[(i, order[j])]);
        let mut other = if wide { m.transpose() * &basis } else { m * &basis };
        for j in 0..k {
            other.column_mut(j).unscale_mut(sv[j]);
        }
        return if wide { (basis, sv, other) } else { (other, sv, basis) };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    order.truncate(k);
    (
        Matrix::from_fn(r, k, |i, j| u[(i, order[j])]),
        Vector::from_iterator(k, order.iter().map(|&i| s[i])),
        Matrix::from_fn(c, k, |i, j| v_t[(order[j], i)]),
    )
}

/// Writes `matrix <rows> <cols>` followed by one whitespace-separated row per line.
pub fn write_matrix<W: Write>(out: &mut W, m: &Matrix) -> std::io::Result<()> {
    writeln!(out, "matrix {} {}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads a block written by [`write_matrix`].
pub fn read_matrix<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<Matrix> {
    let header = next_line(lines)?;
    let mut it = header.split_whitespace();
    if it.next() != Some("matrix") {
        return Err(Error::arg(format!("expected matrix header, got {header:?}")));
    }
    let rows = parse_usize(it.next())?;
    let cols = parse_usize(it.next())?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let line = next_line(lines)?;
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|e| Error::arg(format!("bad matrix entry {tok:?}: {e}")))?,
            );
        }
        if data.len() - before != cols {
            return Err(Error::arg(format!(
                "matrix row has {} entries, expected {cols}",
                data.len() - before
            )));
        }
    }
    Ok(Matrix::from_row_slice(rows, cols, &data))
}

pub(crate) fn next_line<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<String> {
    match lines.next() {
        Some(line) => Ok(line?),
        None => Err(Error::arg("unexpected end of input")),
    }
}

fn parse_usize(tok: Option<&str>) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::arg("missing or malformed dimension"))
}
