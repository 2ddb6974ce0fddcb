use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Dense layer; weights are units x fan-in.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: DMatrix<f64>, biases: DVector<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != biases.len() {
            return Err(Error::Dimension {
                context: "layer biases".into(),
                expected: weights.nrows(),
                got: biases.len(),
            });
        }
        Ok(Layer { weights, biases, activation })
    }

    /// ReLU layer whose units are the given hyperplanes.
    pub fn from_hyperplanes(planes: &[Hyperplane]) -> Result<Self> {
        let first = planes.first().ok_or(Error::Empty("layer units"))?;
        let n = first.dim();
        let mut weights = DMatrix::zeros(planes.len(), n);
        let mut biases = DVector::zeros(planes.len());
        for (i, h) in planes.iter().enumerate() {
            if h.dim() != n {
                return Err(Error::Dimension {
                    context: format!("unit {i} fan-in"),
                    expected: n,
                    got: h.dim(),
                });
            }
            weights.set_row(i, &h.w.transpose());
            biases[i] = h.b;
        }
        Ok(Layer { weights, biases, activation: Activation::Relu })
    }

    pub fn units(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    /// Unit `i` as a (w, b) pair.
    pub fn unit(&self, i: usize) -> (DVector<f64>, f64) {
        (self.weights.row(i).transpose(), self.biases[i])
    }

    pub fn preactivation(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * x + &self.biases
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = self.preactivation(x);
        match self.activation {
            Activation::Relu => z.map(relu),
            Activation::Linear => z,
        }
    }
}

pub fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Zero,
}

impl Sign {
    pub fn of(preactivation: f64, tol: f64) -> Sign {
        if preactivation > tol {
            Sign::Plus
        } else {
            Sign::Zero
        }
    }
}

/// Which units a point activates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActivationPattern {
    pub signs: Vec<Sign>,
}

impl ActivationPattern {
    pub fn from_preactivations(z: &DVector<f64>, tol: f64) -> Self {
        ActivationPattern {
            signs: z.iter().map(|v| Sign::of(*v, tol)).collect(),
        }
    }

    pub fn active_units(&self) -> Vec<usize> {
        self.signs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Sign::Plus)
            .map(|(i, _)| i)
            .collect()
    }
}

/// How a point set activates one unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitActivation {
    Simultaneous,
    Never,
    Partial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternReport {
    pub per_point: Vec<ActivationPattern>,
    pub aggregate: Vec<UnitActivation>,
}

pub fn activation_pattern(layer: &Layer, points: &[Point], tol: f64) -> Result<PatternReport> {
    if layer.activation != Activation::Relu {
        return Err(Error::invalid("activation patterns need a ReLU layer"));
    }
    if points.is_empty() {
        return Err(Error::Empty("pattern points"));
    }
    let mut per_point = Vec::with_capacity(points.len());
    for (k, p) in points.iter().enumerate() {
        if p.len() != layer.fan_in() {
            return Err(Error::Dimension {
                context: format!("pattern point {k}"),
                expected: layer.fan_in(),
                got: p.len(),
            });
        }
        per_point.push(ActivationPattern::from_preactivations(&layer.preactivation(p), tol));
    }
    let aggregate = (0..layer.units())
        .map(|u| {
            let plus = per_point.iter().filter(|a| a.signs[u] == Sign::Plus).count();
            if plus == per_point.len() {
                UnitActivation::Simultaneous
            } else if plus == 0 {
                UnitActivation::Never
            } else {
                UnitActivation::Partial
            }
        })
        .collect();
    Ok(PatternReport { per_point, aggregate })
}

/// Per-layer record of one forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    pub preactivations: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub patterns: Vec<ActivationPattern>,
}

impl Trace {
    pub fn output(&self) -> &DVector<f64> {
        self.outputs.last().expect("network has layers")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        let mut fan = input_dim;
        for (i, l) in layers.iter().enumerate() {
            if l.fan_in() != fan {
                return Err(Error::Dimension {
                    context: format!("layer {i} fan-in"),
                    expected: fan,
                    got: l.fan_in(),
                });
            }
            if l.biases.len() != l.units() {
                return Err(Error::Dimension {
                    context: format!("layer {i} biases"),
                    expected: l.units(),
                    got: l.biases.len(),
                });
            }
            fan = l.units();
        }
        Ok(Network { input_dim, layers })
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::units)
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::units).collect()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        let w = self.widths();
        w[..w.len() - 1].to_vec()
    }

    fn check_input(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                context: "layer 0 input".into(),
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for l in &self.layers {
            h = l.apply(&h);
        }
        Ok(h)
    }

    pub fn forward_traced(&self, x: &DVector<f64>, tol: f64) -> Result<Trace> {
        self.check_input(x)?;
        let mut trace = Trace {
            preactivations: Vec::new(),
            outputs: Vec::new(),
            patterns: Vec::new(),
        };
        let mut h = x.clone();
        for l in &self.layers {
            let z = l.preactivation(&h);
            h = match l.activation {
                Activation::Relu => z.map(relu),
                Activation::Linear => z.clone(),
            };
            trace.patterns.push(ActivationPattern::from_preactivations(&z, tol));
            trace.preactivations.push(z);
            trace.outputs.push(h.clone());
        }
        Ok(trace)
    }

    /// Layer notation such as `2(1)4(1)6(1)9(1)1'(1)`; equal consecutive
    /// layers collapse into `m(d)`, a prime marks linear units.
    pub fn architecture(&self) -> String {
        let mut s = format!("{}(1)", self.input_dim);
        let mut i = 0;
        while i < self.layers.len() {
            let l = &self.layers[i];
            let mut run = 1;
            while i + run < self.layers.len()
                && self.layers[i + run].units() == l.units()
                && self.layers[i + run].activation == l.activation
            {
                run += 1;
            }
            let prime = if l.activation == Activation::Linear { "'" } else { "" };
            s.push_str(&format!("{}{}({})", l.units(), prime, run));
            i += run;
        }
        s
    }
}
