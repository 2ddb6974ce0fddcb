//! JSON interchange formats.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Hyperplane, Point};
use crate::network::{Activation, Layer, Network};
use crate::pwl::{DiscretePwl, Subdomain};

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> std::result::Result<DMatrix<f64>, String> {
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(format!("row {i} has length {}, expected {ncols}", rows[i].len()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err("non-finite matrix entry".into());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    input_dim: usize,
    layers: Vec<LayerJson>,
}

impl Serialize for Network {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetworkJson {
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerJson {
                    weights: rows_of(&l.weights),
                    biases: l.biases.iter().copied().collect(),
                    activation: l.activation,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = NetworkJson::deserialize(d)?;
        let mut fan = raw.input_dim;
        let mut layers = Vec::new();
        for (i, l) in raw.layers.iter().enumerate() {
            let w = matrix_from_rows(&l.weights, fan).map_err(|e| D::Error::custom(format!("layer {i}: {e}")))?;
            let b = DVector::from_vec(l.biases.clone());
            layers.push(Layer::new(w, b, l.activation).map_err(|e| D::Error::custom(format!("layer {i}: {e}")))?);
            fan = l.weights.len();
        }
        Network::new(raw.input_dim, layers).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct SubdomainJson {
    points: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PwlJson {
    dim: usize,
    output_dim: usize,
    subdomains: Vec<SubdomainJson>,
}

impl Serialize for DiscretePwl {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PwlJson {
            dim: self.dim,
            output_dim: self.output_dim,
            subdomains: self
                .subdomains
                .iter()
                .map(|sd| SubdomainJson {
                    points: sd.points.iter().map(|p| p.iter().copied().collect()).collect(),
                    w: rows_of(&sd.map.matrix),
                    b: sd.map.offset.iter().copied().collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscretePwl {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PwlJson::deserialize(d)?;
        let mut subdomains = Vec::new();
        for (i, sd) in raw.subdomains.into_iter().enumerate() {
            let ctx = |e: String| D::Error::custom(format!("subdomain {i}: {e}"));
            let matrix = matrix_from_rows(&sd.w, raw.dim).map_err(ctx)?;
            let offset = DVector::from_vec(sd.b);
            let map = AffineMap::new(matrix, offset).map_err(|e| ctx(e.to_string()))?;
            let points = sd.points.into_iter().map(DVector::from_vec).collect();
            subdomains.push(Subdomain { points, map });
        }
        DiscretePwl::new(raw.dim, raw.output_dim, subdomains).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct HyperplaneJson {
    w: Vec<f64>,
    b: f64,
}

impl Serialize for Hyperplane {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HyperplaneJson {
            w: self.w.iter().copied().collect(),
            b: self.b,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Hyperplane {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = HyperplaneJson::deserialize(d)?;
        Hyperplane::new(DVector::from_vec(raw.w), raw.b).map_err(D::Error::custom)
    }
}

/// Points as a JSON array of arrays.
pub fn points_from_json(text: &str) -> Result<Vec<Point>> {
    let raw: Vec<Vec<f64>> = serde_json::from_str(text)?;
    if raw.is_empty() {
        return Err(Error::Empty("points"));
    }
    let dim = raw[0].len();
    if dim == 0 {
        return Err(Error::invalid("points must have at least one coordinate"));
    }
    if let Some(i) = raw.iter().position(|p| p.len() != dim) {
        return Err(Error::Dimension {
            context: format!("point {i}"),
            expected: dim,
            got: raw[i].len(),
        });
    }
    Ok(raw.into_iter().map(DVector::from_vec).collect())
}

pub fn points_to_json(points: &[Point]) -> serde_json::Value {
    serde_json::Value::from(points.iter().map(|p| p.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// `#[serde(with = "crate::io::vector")]` for `DVector<f64>` as a plain array.
pub mod vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// `#[serde(with = "crate::io::vectors")]` for lists of points.
pub mod vectors {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = v.iter().map(|p| p.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        Ok(Vec::<Vec<f64>>::deserialize(d)?.into_iter().map(DVector::from_vec).collect())
    }
}

/// `#[serde(with = "crate::io::matrix")]` for `DMatrix<f64>` as rows.
pub mod matrix {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::rows_of(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        super::matrix_from_rows(&rows, ncols).map_err(D::Error::custom)
    }
}
