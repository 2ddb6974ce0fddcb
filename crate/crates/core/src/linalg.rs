//! Dense numeric kernel on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Point};

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol` times the largest one.
pub fn numeric_rank(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    if m.is_empty() {
        return Err(Error::Empty("matrix"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("rank tolerance must be positive"));
    }
    let s = singular_values(m);
    let top = s[0];
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|v| **v > tol * top).count())
}

/// Smallest over largest singular value; 0 for rank-deficient input.
pub fn inverse_condition(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    ExactSquare,
    LeastNormUnderdetermined,
    LeastSquares,
}

/// Solve `A x = y` in the requested sense.
pub fn solve_constrained(a: &DMatrix<f64>, y: &DVector<f64>, mode: SolveMode, tol: f64) -> Result<DVector<f64>> {
    if a.nrows() != y.len() {
        return Err(Error::Dimension {
            context: "solve right-hand side".into(),
            expected: a.nrows(),
            got: y.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("system matrix"));
    }
    match mode {
        SolveMode::ExactSquare => {
            if a.nrows() != a.ncols() {
                return Err(Error::invalid("exact solve needs a square matrix"));
            }
            let rank = numeric_rank(a, tol)?;
            if rank < a.nrows() {
                return Err(Error::Singular { rank, needed: a.nrows() });
            }
            let x = a
                .clone()
                .lu()
                .solve(y)
                .ok_or(Error::Singular { rank, needed: a.nrows() })?;
            // one step of iterative refinement
            let r = y - a * &x;
            match a.clone().lu().solve(&r) {
                Some(dx) => Ok(x + dx),
                None => Ok(x),
            }
        }
        SolveMode::LeastNormUnderdetermined => {
            let rank = numeric_rank(a, tol)?;
            if rank < a.nrows() {
                return Err(Error::Singular { rank, needed: a.nrows() });
            }
            // x = A^T (A A^T)^{-1} y, refined once
            let gram = a * a.transpose();
            let chol = gram.clone().cholesky();
            let x = match &chol {
                Some(c) => a.transpose() * c.solve(y),
                None => pinv_solve(a, y, tol)?,
            };
            let r = y - a * &x;
            let dx = match &chol {
                Some(c) => a.transpose() * c.solve(&r),
                None => pinv_solve(a, &r, tol)?,
            };
            Ok(x + dx)
        }
        SolveMode::LeastSquares => pinv_solve(a, y, tol),
    }
}

fn pinv_solve(a: &DMatrix<f64>, y: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.max();
    svd.solve(y, (tol * top).max(f64::MIN_POSITIVE))
        .map_err(|e| Error::invalid(format!("svd solve failed: {e}")))
}

/// Orthonormal basis (as columns) of the null space of `a` (k x d).
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let d = a.ncols();
    let rows = a.nrows().max(d);
    let mut padded = DMatrix::zeros(rows, d);
    padded.view_mut((0, 0), (a.nrows(), d)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top == 0.0 || svd.singular_values[i] <= tol * top)
        .collect();
    let mut basis = DMatrix::zeros(d, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).transpose());
    }
    basis
}

/// Orthonormal basis (as columns) of the span of `vectors`.
pub fn span_basis(vectors: &[DVector<f64>], tol: f64) -> DMatrix<f64> {
    let d = vectors[0].len();
    let m = DMatrix::from_columns(vectors);
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested u");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top > 0.0 && svd.singular_values[i] > tol * top)
        .collect();
    let mut basis = DMatrix::zeros(d, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    basis
}

/// Least-squares affine map from `inputs` to `outputs` with its worst residual.
#[derive(Clone, Debug)]
pub struct AffineFit {
    pub map: AffineMap,
    pub residual: f64,
}

pub fn affine_fit(inputs: &[Point], outputs: &[Point], tol: f64) -> Result<AffineFit> {
    if inputs.is_empty() {
        return Err(Error::Empty("affine fit points"));
    }
    if inputs.len() != outputs.len() {
        return Err(Error::Dimension {
            context: "affine fit pairs".into(),
            expected: inputs.len(),
            got: outputs.len(),
        });
    }
    let n = inputs[0].len();
    let q = outputs[0].len();
    let rows = inputs.len();
    let x = DMatrix::from_fn(rows, n + 1, |i, j| if j < n { inputs[i][j] } else { 1.0 });
    let mut matrix = DMatrix::zeros(q, n);
    let mut offset = DVector::zeros(q);
    for k in 0..q {
        let y = DVector::from_fn(rows, |i, _| outputs[i][k]);
        let coef = pinv_solve(&x, &y, tol)?;
        for j in 0..n {
            matrix[(k, j)] = coef[j];
        }
        offset[k] = coef[n];
    }
    let map = AffineMap { matrix, offset };
    let residual = inputs
        .iter()
        .zip(outputs)
        .map(|(a, b)| (map.apply(a) - b).amax())
        .fold(0.0, f64::max);
    Ok(AffineFit { map, residual })
}

/// All k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
