use std::collections::{HashMap, HashSet};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Point};

/// Finite point set carrying one target affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct Subdomain {
    pub points: Vec<Point>,
    pub map: AffineMap,
}

/// Discrete piecewise linear function: disjoint subdomains with their own maps.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePwl {
    pub dim: usize,
    pub output_dim: usize,
    pub subdomains: Vec<Subdomain>,
}

fn key(p: &Point) -> Vec<u64> {
    // +0.0 and -0.0 are the same point
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Index of the first repeated point, if any.
pub fn find_duplicate(points: &[&Point]) -> Option<usize> {
    let mut seen = HashSet::new();
    points.iter().position(|p| !seen.insert(key(p)))
}

impl DiscretePwl {
    pub fn new(dim: usize, output_dim: usize, subdomains: Vec<Subdomain>) -> Result<Self> {
        let pwl = DiscretePwl { dim, output_dim, subdomains };
        pwl.validate()?;
        Ok(pwl)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        if self.subdomains.is_empty() {
            return Err(Error::Empty("subdomains"));
        }
        for (i, s) in self.subdomains.iter().enumerate() {
            if s.points.is_empty() {
                return Err(Error::invalid(format!("subdomain {i} has no points")));
            }
            if s.map.input_dim() != self.dim || s.map.output_dim() != self.output_dim {
                return Err(Error::invalid(format!(
                    "subdomain {i} map is {}->{}, expected {}->{}",
                    s.map.input_dim(),
                    s.map.output_dim(),
                    self.dim,
                    self.output_dim
                )));
            }
            for p in &s.points {
                if p.len() != self.dim {
                    return Err(Error::Dimension {
                        context: format!("subdomain {i} point"),
                        expected: self.dim,
                        got: p.len(),
                    });
                }
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("subdomain {i} has a non-finite point")));
                }
            }
        }
        let all: Vec<&Point> = self.subdomains.iter().flat_map(|s| &s.points).collect();
        if let Some(k) = find_duplicate(&all) {
            return Err(Error::invalid(format!("point {:?} appears twice", all[k].as_slice())));
        }
        Ok(())
    }

    pub fn num_points(&self) -> usize {
        self.subdomains.iter().map(|s| s.points.len()).sum()
    }

    /// (subdomain index, point) for every point.
    pub fn labeled_points(&self) -> Vec<(usize, &Point)> {
        self.subdomains
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.points.iter().map(move |p| (i, p)))
            .collect()
    }

    pub fn target(&self, subdomain: usize, x: &Point) -> DVector<f64> {
        self.subdomains[subdomain].map.apply(x)
    }

    /// One subdomain per point, each with the constant value of its old map.
    pub fn singletons(&self) -> DiscretePwl {
        let subdomains = self
            .labeled_points()
            .into_iter()
            .map(|(i, p)| Subdomain {
                points: vec![p.clone()],
                map: AffineMap::constant(self.dim, self.target(i, p)),
            })
            .collect();
        DiscretePwl {
            dim: self.dim,
            output_dim: self.output_dim,
            subdomains,
        }
    }

    /// Sample interpolation problem: point x_i must map to y_i.
    pub fn from_samples(points: &[Point], values: &[DVector<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("samples"));
        }
        if points.len() != values.len() {
            return Err(Error::Dimension {
                context: "sample values".into(),
                expected: points.len(),
                got: values.len(),
            });
        }
        let mut first_seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for (k, p) in points.iter().enumerate() {
            let j = *first_seen.entry(key(p)).or_insert(k);
            if values[j] != values[k] {
                return Err(Error::invalid(format!(
                    "sample {:?} has conflicting targets",
                    p.as_slice()
                )));
            }
        }
        let dim = points[0].len();
        let mut seen = HashSet::new();
        let subdomains = points
            .iter()
            .zip(values)
            .filter(|(p, _)| seen.insert(key(p)))
            .map(|(p, y)| Subdomain {
                points: vec![p.clone()],
                map: AffineMap::constant(dim, y.clone()),
            })
            .collect();
        DiscretePwl::new(dim, values[0].len(), subdomains)
    }

    /// Same function restricted to output coordinate `k`.
    pub fn coordinate(&self, k: usize) -> DiscretePwl {
        DiscretePwl {
            dim: self.dim,
            output_dim: 1,
            subdomains: self
                .subdomains
                .iter()
                .map(|s| Subdomain {
                    points: s.points.clone(),
                    map: AffineMap {
                        matrix: s.map.matrix.rows(k, 1).into_owned(),
                        offset: s.map.offset.rows(k, 1).into_owned(),
                    },
                })
                .collect(),
        }
    }
}
