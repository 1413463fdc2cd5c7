//! Canonical correlation analysis between two paired views.
//!
//! The constrained problem `max vₛᵀ Σ_ST v_t` subject to
//! `vₛᵀ Σ_SS vₛ = v_tᵀ Σ_TT v_t = 1` is solved through the singular value
//! decomposition of the whitened cross-covariance `L_s⁻¹ Σ_ST L_t⁻ᵀ`, where
//! `L_s L_sᵀ = Σ_SS + r_s I` and `L_t L_tᵀ = Σ_TT + r_t I`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::{center_columns, column_means, cholesky_lower, read_matrix, top_singular, write_matrix};
use crate::{Matrix, Vector};

/// Relative ridge used by [`Regularization::Auto`]: `r = 1e-4 · tr(Σ) / d`.
pub const AUTO_REG_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularization {
    /// Scale-aware ridge `1e-4 · tr(Σ)/d`, computed per view.
    #[default]
    Auto,
    /// The same absolute ridge on both views.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovTriple {
    pub ss: Matrix,
    pub st: Matrix,
    pub tt: Matrix,
    pub n: usize,
    pub mean_source: Vector,
    pub mean_target: Vector,
    pub centered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcaProjection {
    /// `d_s × k` canonical directions of the source view.
    pub v_source: Matrix,
    /// `d_t × k` canonical directions of the target view.
    pub v_target: Matrix,
    /// Canonical correlations, descending, clamped into `[0, 1]`.
    pub correlations: Vector,
    pub mean_source: Vector,
    pub mean_target: Vector,
    pub reg_source: f64,
    pub reg_target: f64,
    pub centered: bool,
}

/// Sample covariances of paired activations scaled by `1/(n−1)`.
///
/// With `centered = false` the raw cross products are used and the stored
/// means are zero.
pub fn covariances(h_source: &Matrix, h_target: &Matrix, centered: bool) -> Result<CovTriple> {
    if h_source.nrows() != h_target.nrows() {
        return Err(Error::arg(format!(
            "views have {} and {} rows",
            h_source.nrows(),
            h_target.nrows()
        )));
    }
    let n = h_source.nrows();
    if n < 2 {
        return Err(Error::arg("covariance needs at least two paired rows"));
    }
    let (mean_source, mean_target) = if centered {
        (column_means(h_source), column_means(h_target))
    } else {
        (Vector::zeros(h_source.ncols()), Vector::zeros(h_target.ncols()))
    };
    let s = center_columns(h_source, &mean_source);
    let t = center_columns(h_target, &mean_target);
    let scale = 1.0 / (n - 1) as f64;
    let st = s.transpose() * &t * scale;
    let mut ss = s.transpose() * &s * scale;
    let mut tt = t.transpose() * &t * scale;
    ss.fill_lower_triangle_with_upper_triangle();
    tt.fill_lower_triangle_with_upper_triangle();
    Ok(CovTriple {
        ss,
        st,
        tt,
        n,
        mean_source,
        mean_target,
        centered,
    })
}

fn ridge(cov: &Matrix, reg: Regularization) -> f64 {
    match reg {
        Regularization::Auto => AUTO_REG_SCALE * cov.trace() / cov.nrows().max(1) as f64,
        Regularization::Fixed(r) => r,
    }
}

/// Top-`k` canonical pairs of a covariance triple.
///
/// Each pair is sign-normalized so that the largest-magnitude loading of its
/// source direction is positive.
pub fn solve_cca(cov: &CovTriple, k: usize, reg: Regularization) -> Result<CcaProjection> {
    let (ds, dt) = cov.st.shape();
    if k == 0 || k > ds.min(dt) {
        return Err(Error::arg(format!(
            "k = {k} outside 1..={} for views of width {ds} and {dt}",
            ds.min(dt)
        )));
    }
    let reg_source = ridge(&cov.ss, reg);
    let reg_target = ridge(&cov.tt, reg);
    if !(reg_source >= 0.0 && reg_target >= 0.0) {
        return Err(Error::arg("regularizer must be non-negative"));
    }
    let ls = cholesky_lower(&cov.ss, reg_source)?;
    let lt = cholesky_lower(&cov.tt, reg_target)?;
    let half = ls.solve_lower_triangular(&cov.st).expect("nonzero pivots");
    let whitened = lt
        .solve_lower_triangular(&half.transpose())
        .expect("nonzero pivots")
        .transpose();
    let (u_k, sv, v_k) = top_singular(&whitened, k);
    if !sv.iter().all(|s| s.is_finite()) {
        return Err(Error::numeric(None, "non-finite singular values in CCA"));
    }
    let mut v_source = ls.tr_solve_lower_triangular(&u_k).expect("nonzero pivots");
    let mut v_target = lt.tr_solve_lower_triangular(&v_k).expect("nonzero pivots");
    for j in 0..k {
        let col = v_source.column(j);
        let lead = col.iter().fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            v_source.column_mut(j).neg_mut();
            v_target.column_mut(j).neg_mut();
        }
    }
    let correlations = sv.map(|s| s.clamp(0.0, 1.0));
    Ok(CcaProjection {
        v_source,
        v_target,
        correlations,
        mean_source: cov.mean_source.clone(),
        mean_target: cov.mean_target.clone(),
        reg_source,
        reg_target,
        centered: cov.centered,
    })
}

/// Convenience: covariances followed by [`solve_cca`].
pub fn fit(
    h_source: &Matrix,
    h_target: &Matrix,
    k: usize,
    reg: Regularization,
    centered: bool,
) -> Result<CcaProjection> {
    solve_cca(&covariances(h_source, h_target, centered)?, k, reg)
}

/// Sum over canonical pairs of `|vₛᵀ Σ_ST v_t| / √(vₛᵀ Σ̃_SS vₛ · v_tᵀ Σ̃_TT v_t)`,
/// where the covariances are measured on the given data and `Σ̃` carries the
/// same ridge the projection was fitted with. On the fitting data this equals
/// the sum of the canonical correlations.
pub fn correlation_score(h_source: &Matrix, h_target: &Matrix, proj: &CcaProjection) -> Result<f64> {
    if h_source.ncols() != proj.v_source.nrows() || h_target.ncols() != proj.v_target.nrows() {
        return Err(Error::arg(format!(
            "activations of width {}/{} do not fit projections of {}/{} rows",
            h_source.ncols(),
            h_target.ncols(),
            proj.v_source.nrows(),
            proj.v_target.nrows()
        )));
    }
    if h_source.nrows() != h_target.nrows() || h_source.nrows() < 2 {
        return Err(Error::arg("correlation score needs at least two paired rows"));
    }
    let prep = |h: &Matrix| {
        if proj.centered {
            center_columns(h, &column_means(h))
        } else {
            h.clone()
        }
    };
    let a = prep(h_source) * &proj.v_source;
    let b = prep(h_target) * &proj.v_target;
    let scale = 1.0 / (h_source.nrows() - 1) as f64;
    let mut total = 0.0;
    for j in 0..a.ncols() {
        let (ca, cb) = (a.column(j), b.column(j));
        let cross = ca.dot(&cb) * scale;
        let var_a = ca.norm_squared() * scale + proj.reg_source * proj.v_source.column(j).norm_squared();
        let var_b = cb.norm_squared() * scale + proj.reg_target * proj.v_target.column(j).norm_squared();
        let denom = (var_a * var_b).sqrt();
        if denom > 0.0 {
            total += cross.abs() / denom;
        }
    }
    Ok(total)
}

/// `(h − mean) · v`.
pub fn project(h: &Matrix, v: &Matrix, mean: &Vector) -> Result<Matrix> {
    if h.ncols() != v.nrows() || mean.len() != v.nrows() {
        return Err(Error::arg(format!(
            "cannot project width-{} data with a {}x{} map",
            h.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(center_columns(h, mean) * v)
}

impl CcaProjection {
    pub fn k(&self) -> usize {
        self.correlations.len()
    }

    pub fn project_source(&self, h: &Matrix) -> Result<Matrix> {
        project(h, &self.v_source, &self.mean_source)
    }

    pub fn project_target(&self, h: &Matrix) -> Result<Matrix> {
        project(h, &self.v_target, &self.mean_target)
    }

    pub fn correlation_sum(&self) -> f64 {
        self.correlations.sum()
    }

    /// Text block: `cca 1`, a `reg <r_s> <r_t> <centered>` line, then the
    /// source directions, target directions, correlations, source mean and
    /// target mean as matrix blocks.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "cca 1")?;
        writeln!(out, "reg {:e} {:e} {}", self.reg_source, self.reg_target, self.centered)?;
        write_matrix(out, &self.v_source)?;
        write_matrix(out, &self.v_target)?;
        for v in [&self.correlations, &self.mean_source, &self.mean_target] {
            write_matrix(out, &Matrix::from_row_slice(1, v.len(), v.as_slice()))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<CcaProjection> {
        let magic = crate::linalg::next_line(lines)?;
        if magic.trim() != "cca 1" {
            return Err(Error::arg(format!("not a projection block: {magic:?}")));
        }
        let reg_line = crate::linalg::next_line(lines)?;
        let fields: Vec<&str> = reg_line.split_whitespace().collect();
        let bad = || Error::arg(format!("malformed reg line {reg_line:?}"));
        if fields.len() != 4 || fields[0] != "reg" {
            return Err(bad());
        }
        let reg_source: f64 = fields[1].parse().map_err(|_| bad())?;
        let reg_target: f64 = fields[2].parse().map_err(|_| bad())?;
        let centered: bool = fields[3].parse().map_err(|_| bad())?;
        let v_source = read_matrix(lines)?;
        let v_target = read_matrix(lines)?;
        let mut vecs = Vec::new();
        for _ in 0..3 {
            let m = read_matrix(lines)?;
            vecs.push(Vector::from_iterator(m.len(), m.iter().copied()));
        }
        let mean_target = vecs.pop().unwrap();
        let mean_source = vecs.pop().unwrap();
        let correlations = vecs.pop().unwrap();
        Ok(CcaProjection {
            v_source,
            v_target,
            correlations,
            mean_source,
            mean_target,
            reg_source,
            reg_target,
            centered,
        })
    }
}
