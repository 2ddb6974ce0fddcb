use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Point = DVector<f64>;

pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

/// Oriented hyperplane `w.x + b = 0`; its value is a ReLU preactivation.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub w: DVector<f64>,
    pub b: f64,
}

impl Hyperplane {
    pub fn new(w: DVector<f64>, b: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Empty("hyperplane weights"));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::invalid("hyperplane weight vector is zero"));
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("hyperplane has non-finite parameters"));
        }
        Ok(Hyperplane { w, b })
    }

    pub fn from_slice(w: &[f64], b: f64) -> Result<Self> {
        Self::new(DVector::from_column_slice(w), b)
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.w.dot(x) + self.b
    }

    pub fn scaled(&self, s: f64) -> Self {
        Hyperplane {
            w: &self.w * s,
            b: self.b * s,
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Same hyperplane with unit-norm weights.
    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.w.norm())
    }

    /// Column (w, b) of a linear-output matrix.
    pub fn column(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(n + 1, |i, _| if i < n { self.w[i] } else { self.b })
    }
}

/// `x -> W x + b`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineMap {
    #[serde(rename = "W", with = "crate::io::matrix")]
    pub matrix: DMatrix<f64>,
    #[serde(rename = "b", with = "crate::io::vector")]
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != offset.len() {
            return Err(Error::Dimension {
                context: "affine map offset".into(),
                expected: matrix.nrows(),
                got: offset.len(),
            });
        }
        Ok(AffineMap { matrix, offset })
    }

    pub fn identity(n: usize) -> Self {
        AffineMap {
            matrix: DMatrix::identity(n, n),
            offset: DVector::zeros(n),
        }
    }

    /// Constant map with value `value`, encoded with a zero matrix.
    pub fn constant(input_dim: usize, value: DVector<f64>) -> Self {
        AffineMap {
            matrix: DMatrix::zeros(value.len(), input_dim),
            offset: value,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    /// `self` after `inner`: x -> self(inner(x)).
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            matrix: &self.matrix * &inner.matrix,
            offset: &self.matrix * &inner.offset + &self.offset,
        }
    }

    /// Output coordinate `k` as a (w, b) pair.
    pub fn row(&self, k: usize) -> (DVector<f64>, f64) {
        (self.matrix.row(k).transpose(), self.offset[k])
    }
}

pub fn centroid(points: &[Point]) -> Point {
    let mut c = DVector::zeros(points[0].len());
    for p in points {
        c += p;
    }
    c / points.len() as f64
}
