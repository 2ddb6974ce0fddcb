//! Embedded-subspace machinery: decomposing a wide layer's image into a
//! pivot block plus an affinely dependent complement, moving hyperplanes
//! between the two spaces, and pass-through layers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bundles::common_point_bundle;
use crate::config::{BundleConfig, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Hyperplane, Point};
use crate::linalg::{affine_fit, numeric_rank, singular_values, solve_constrained, SolveMode};
use crate::network::{activation_pattern, Layer, UnitActivation};

/// x⁽¹⁾ = [x′; W_c x′ + b_c] up to a row permutation, with x′ = W_n x + b_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDecomposition {
    pub pivot_rows: Vec<usize>,
    pub complement_rows: Vec<usize>,
    #[serde(with = "crate::io::matrix")]
    pub wc: DMatrix<f64>,
    #[serde(with = "crate::io::vector")]
    pub bc: DVector<f64>,
    pub base_affine: AffineMap,
}

/// Rows greedily chosen to maximize the smallest singular value of the block.
pub fn greedy_pivots(m: &DMatrix<f64>, k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..m.nrows() {
            if chosen.contains(&r) {
                continue;
            }
            let mut rows = chosen.clone();
            rows.push(r);
            let block = DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)]);
            let s = singular_values(&block).last().copied().unwrap_or(0.0);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((r, s));
            }
        }
        if let Some((r, _)) = best {
            chosen.push(r);
        }
    }
    chosen.sort_unstable();
    chosen
}

impl EmbeddingDecomposition {
    /// Decomposes the image of an affine map x ↦ W x + b with rank(W) = n.
    pub fn from_affine(map: &AffineMap, tol: &Tolerances) -> Result<Self> {
        let n = map.input_dim();
        let m = map.output_dim();
        if m < n {
            return Err(Error::invalid(format!("embedding needs at least {n} rows, got {m}")));
        }
        let rank = numeric_rank(&map.matrix, tol.rank)?;
        if rank < n {
            return Err(Error::Singular { rank, needed: n });
        }
        let pivot_rows = greedy_pivots(&map.matrix, n);
        let complement_rows: Vec<usize> = (0..m).filter(|r| !pivot_rows.contains(r)).collect();
        let wn = DMatrix::from_fn(n, n, |i, j| map.matrix[(pivot_rows[i], j)]);
        let bn = DVector::from_fn(n, |i, _| map.offset[pivot_rows[i]]);
        let wr = DMatrix::from_fn(complement_rows.len(), n, |i, j| map.matrix[(complement_rows[i], j)]);
        let br = DVector::from_fn(complement_rows.len(), |i, _| map.offset[complement_rows[i]]);
        let inv = wn
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { rank: n - 1, needed: n })?;
        let wc = &wr * &inv;
        let bc = &br - &wc * &bn;
        Ok(EmbeddingDecomposition {
            pivot_rows,
            complement_rows,
            wc,
            bc,
            base_affine: AffineMap::new(wn, bn)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.pivot_rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.pivot_rows.len() + self.complement_rows.len()
    }

    /// Full-space point for pivot coordinates x′.
    pub fn embed(&self, xp: &DVector<f64>) -> DVector<f64> {
        let comp = &self.wc * xp + &self.bc;
        let mut out = DVector::zeros(self.ambient_dim());
        for (i, &r) in self.pivot_rows.iter().enumerate() {
            out[r] = xp[i];
        }
        for (i, &r) in self.complement_rows.iter().enumerate() {
            out[r] = comp[i];
        }
        out
    }

    /// Pivot coordinates of a full-space point.
    pub fn project(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| y[self.pivot_rows[i]])
    }
}

/// Certificate that `outputs` is an affine image of `inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineCertificate {
    pub map: AffineMap,
    pub residual: f64,
    pub determinant: f64,
}

impl AffineCertificate {
    pub fn holds(&self, tol: &Tolerances) -> bool {
        self.residual <= tol.exactness && self.determinant.abs() > tol.rank
    }
}

/// Fits a square affine map taking `inputs` onto `outputs`.
pub fn certify_affine(inputs: &[Point], outputs: &[Point], tol: &Tolerances) -> Result<AffineCertificate> {
    let fit = affine_fit(inputs, outputs, tol.rank)?;
    let determinant = if fit.map.matrix.is_square() {
        fit.map.matrix.determinant()
    } else {
        0.0
    };
    Ok(AffineCertificate {
        map: fit.map,
        residual: fit.residual,
        determinant,
    })
}

/// Decomposition of a layer whose units are all active on `points`.
pub fn decompose_embedding(layer: &Layer, points: &[Point], tol: &Tolerances) -> Result<(EmbeddingDecomposition, AffineCertificate)> {
    let n = layer.fan_in();
    if layer.units() <= n {
        return Err(Error::invalid(format!(
            "embedding needs more units than inputs ({} <= {n})",
            layer.units()
        )));
    }
    let rep = activation_pattern(layer, points, tol.activation)?;
    if let Some(u) = rep.aggregate.iter().position(|a| *a != UnitActivation::Simultaneous) {
        return Err(Error::invalid(format!("unit {u} is not activated by every point")));
    }
    let map = AffineMap::new(layer.weights.clone(), layer.biases.clone())?;
    let emb = EmbeddingDecomposition::from_affine(&map, tol)?;
    let mut worst: f64 = 0.0;
    let mut images = Vec::with_capacity(points.len());
    for x in points {
        let y = layer.apply(x);
        let back = emb.embed(&emb.project(&y));
        worst = worst.max((back - &y).amax() / y.amax().max(1.0));
        images.push(emb.project(&y));
    }
    if worst > 1e-9 {
        return Err(Error::invalid(format!("embedding reconstruction residual {worst:e}")));
    }
    let cert = certify_affine(points, &images, tol)?;
    Ok((emb, cert))
}

/// Pulls a hyperplane of the ambient space back to pivot coordinates.
pub fn restrict_hyperplane(h: &Hyperplane, emb: &EmbeddingDecomposition) -> Result<Hyperplane> {
    if h.dim() != emb.ambient_dim() {
        return Err(Error::Dimension {
            context: "restrict_hyperplane".into(),
            expected: emb.ambient_dim(),
            got: h.dim(),
        });
    }
    let wn = DVector::from_fn(emb.dim(), |i, _| h.w[emb.pivot_rows[i]]);
    let wcomp = DVector::from_fn(emb.complement_rows.len(), |i, _| h.w[emb.complement_rows[i]]);
    let w = wn + emb.wc.transpose() * &wcomp;
    let b = wcomp.dot(&emb.bc) + h.b;
    if w.amax() <= 1e-12 * h.w.amax() {
        return Err(Error::invalid("hyperplane is parallel to the embedded subspace"));
    }
    Ok(Hyperplane { w, b })
}

/// Complement weights for `lift_hyperplane`.
#[derive(Clone, Debug, PartialEq)]
pub enum FreeWeights {
    /// Minimum-norm lift.
    LeastNorm,
    /// Complement weights fixed to these values.
    Fixed(DVector<f64>),
}

/// A hyperplane of the ambient space whose restriction is `target`.
pub fn lift_hyperplane(target: &Hyperplane, emb: &EmbeddingDecomposition, free: &FreeWeights, tol: &Tolerances) -> Result<Hyperplane> {
    let n = emb.dim();
    let c = emb.complement_rows.len();
    if target.dim() != n {
        return Err(Error::Dimension {
            context: "lift_hyperplane".into(),
            expected: n,
            got: target.dim(),
        });
    }
    let (wn, wcomp, b) = match free {
        FreeWeights::Fixed(v) => {
            if v.len() != c {
                return Err(Error::Dimension {
                    context: "lift_hyperplane free weights".into(),
                    expected: c,
                    got: v.len(),
                });
            }
            (&target.w - emb.wc.transpose() * v, v.clone(), target.b - v.dot(&emb.bc))
        }
        FreeWeights::LeastNorm => {
            // [I  W_cᵀ 0; 0 b_cᵀ 1] (w_n, w_c, b) = (w′, b′)
            let mut a = DMatrix::zeros(n + 1, n + c + 1);
            for i in 0..n {
                a[(i, i)] = 1.0;
            }
            a.view_mut((0, n), (n, c)).copy_from(&emb.wc.transpose());
            for j in 0..c {
                a[(n, n + j)] = emb.bc[j];
            }
            a[(n, n + c)] = 1.0;
            let sol = solve_constrained(&a, &target.column(), SolveMode::LeastNormUnderdetermined, tol.rank)?;
            (sol.rows(0, n).into_owned(), sol.rows(n, c).into_owned(), sol[n + c])
        }
    };
    let mut w = DVector::zeros(n + c);
    for (i, &r) in emb.pivot_rows.iter().enumerate() {
        w[r] = wn[i];
    }
    for (i, &r) in emb.complement_rows.iter().enumerate() {
        w[r] = wcomp[i];
    }
    Hyperplane::new(w, b)
}

/// The same hyperplane expressed in coordinates x′ = A x + c.
pub fn transform_hyperplane(h: &Hyperplane, map: &AffineMap) -> Result<Hyperplane> {
    let inv = map
        .matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::invalid("affine map is singular"))?;
    let w = inv.transpose() * &h.w;
    let b = h.b - w.dot(&map.offset);
    Hyperplane::new(w, b)
}

/// A group of foreign points and the coordinates only they activate.
#[derive(Clone, Debug)]
pub struct ForeignGroup<'a> {
    pub points: &'a [Point],
    pub dims: &'a [usize],
}

/// Common weight on `off_dims` that drives every foreign point's
/// preactivation below zero: s_i = w Σ x_off + C_i ≤ −Σ x_off.
pub fn interference_avoiding_weight(fixed: &[f64], sums: &[f64], tol: &Tolerances) -> Result<f64> {
    if fixed.len() != sums.len() {
        return Err(Error::invalid("one fixed term per foreign point"));
    }
    let mut bound = f64::INFINITY;
    for (c, s) in fixed.iter().zip(sums) {
        if *s <= tol.activation {
            return Err(Error::invalid("foreign point has a zero coordinate on its exclusive dims"));
        }
        bound = bound.min(-c / s);
    }
    if bound.is_infinite() {
        bound = 0.0;
    }
    Ok(bound - 1.0)
}

/// How the non-pivot weights of a lifted hyperplane are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complement {
    /// Complement weights fixed to zero.
    #[default]
    Zero,
    /// Minimum-norm lift.
    LeastNorm,
}

impl Complement {
    pub fn free_weights(self, emb: &EmbeddingDecomposition) -> FreeWeights {
        match self {
            Complement::Zero => FreeWeights::Fixed(DVector::zeros(emb.complement_rows.len())),
            Complement::LeastNorm => FreeWeights::LeastNorm,
        }
    }
}

/// Fits a certificate only when the points affinely span their space.
pub fn certify_if_spanning(inputs: &[Point], outputs: &[Point], tol: &Tolerances) -> Result<Option<AffineCertificate>> {
    let n = match inputs.first() {
        Some(x) => x.len(),
        None => return Ok(None),
    };
    if inputs.len() < n + 1 {
        return Ok(None);
    }
    let diffs = DMatrix::from_fn(n, inputs.len() - 1, |i, j| inputs[j + 1][i] - inputs[0][i]);
    if numeric_rank(&diffs, tol.rank)? < n {
        return Ok(None);
    }
    certify_affine(inputs, outputs, tol).map(Some)
}

/// `count` ≥ n units carrying `images` (points on the embedded subspace) to
/// an affine copy while every foreign group lands on zero outputs.
///
/// The first n units are the pivot coordinate hyperplanes through a common
/// point below the data, so the copy is a pure shift; further units come
/// from a common-point bundle through the same point.
pub fn passthrough_layer(
    emb: &EmbeddingDecomposition,
    images: &[Point],
    foreign: &[ForeignGroup<'_>],
    count: usize,
    complement: Complement,
    cfg: &BundleConfig,
    tol: &Tolerances,
) -> Result<(Layer, Option<AffineCertificate>)> {
    let n = emb.dim();
    if count < n {
        return Err(Error::invalid(format!("pass-through needs at least {n} units, got {count}")));
    }
    let xp: Vec<Point> = images.iter().map(|y| emb.project(y)).collect();
    let first = xp.first().ok_or(Error::Empty("pass-through images"))?;
    let anchor = DVector::from_fn(n, |j, _| xp.iter().map(|x| x[j]).fold(first[j], f64::min) - 1.0);
    let mut local: Vec<Hyperplane> = (0..n)
        .map(|j| {
            let w = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
            Hyperplane { w, b: -anchor[j] }
        })
        .collect();
    if count > n {
        let u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let base = Hyperplane::new(u.clone(), -u.dot(&anchor))?;
        let bundle = common_point_bundle(&base, &anchor, &xp, count - n, cfg)?;
        local.extend(bundle.hyperplanes);
    }
    let free = complement.free_weights(emb);
    let mut planes = Vec::with_capacity(count);
    for h in &local {
        let lifted = lift_hyperplane(h, emb, &free, tol)?;
        planes.push(deactivate_foreign(&lifted, foreign, tol)?);
    }
    let layer = Layer::from_hyperplanes(&planes)?;
    let outs: Vec<Point> = images.iter().map(|y| layer.apply(y).rows(0, n).into_owned()).collect();
    let cert = certify_if_spanning(&xp, &outs, tol)?;
    Ok((layer, cert))
}

/// Base hyperplane with direction (1,…,1)/√n that leaves every point on its
/// plus side by a wide margin, and the anchor point on it.
pub fn enclosing_base(points: &[Point], tol: &Tolerances) -> Result<(Hyperplane, Point)> {
    let n = points.first().ok_or(Error::Empty("enclosing_base points"))?.len();
    let u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let lo = points.iter().map(|x| u.dot(x)).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|x| u.dot(x)).fold(f64::NEG_INFINITY, f64::max);
    let offset = (hi - lo).max(1.0) + tol.margin;
    let t = lo - offset;
    let anchor = &u * t;
    Ok((Hyperplane::new(u.clone(), -t)?, anchor))
}

/// Sets the weights of `h` on every foreign group's dims to the common
/// interference-avoiding value.
pub fn deactivate_foreign(h: &Hyperplane, foreign: &[ForeignGroup<'_>], tol: &Tolerances) -> Result<Hyperplane> {
    let mut out = h.clone();
    let mut fixed = Vec::new();
    let mut sums = Vec::new();
    for g in foreign {
        for x in g.points {
            // h's own weights on foreign dims are replaced, so C_i excludes them
            let mut c = h.b;
            for j in 0..x.len() {
                if !g.dims.contains(&j) {
                    c += h.w[j] * x[j];
                }
            }
            fixed.push(c);
            sums.push(g.dims.iter().map(|&j| x[j]).sum());
        }
    }
    if fixed.is_empty() {
        return Ok(out);
    }
    let w = interference_avoiding_weight(&fixed, &sums, tol)?;
    for g in foreign {
        for &j in g.dims {
            out.w[j] = w;
        }
    }
    Ok(out)
}

/// Rank of a pass-through pair's second weight matrix and whether it reaches n.
pub fn rank_condition_check(weights: &DMatrix<f64>, n: usize, tol: &Tolerances) -> Result<(bool, usize)> {
    let r = numeric_rank(weights, tol.rank)?;
    Ok((r >= n, r))
}

/// Requested hidden widths for `widen_network`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WidthTarget {
    Uniform(usize),
    PerLayer(Vec<usize>),
}

impl WidthTarget {
    fn resolve(&self, current: &[usize]) -> Result<Vec<usize>> {
        let want = match self {
            WidthTarget::Uniform(m) => vec![*m; current.len()],
            WidthTarget::PerLayer(w) => w.clone(),
        };
        if want.len() != current.len() {
            return Err(Error::invalid(format!(
                "{} target widths for {} hidden layers",
                want.len(),
                current.len()
            )));
        }
        for (l, (w, c)) in want.iter().zip(current).enumerate() {
            if w < c {
                return Err(Error::invalid(format!("layer {} width {w} is below the existing {c}", l + 1)));
            }
        }
        Ok(want)
    }
}

/// Spreads `extra` units round-robin over `groups` slots.
fn spread(extra: usize, groups: usize) -> Vec<usize> {
    (0..groups).map(|g| extra / groups + usize::from(g < extra % groups)).collect()
}

/// Adds units to every hidden layer of a synthesized network without
/// changing its outputs on the data: new units extend the existing groups
/// and the output layer is re-solved.
pub fn widen_network(
    plan: &crate::report::SynthesisPlan,
    target: &WidthTarget,
    cfg: &BundleConfig,
    tol: &Tolerances,
) -> Result<crate::report::Synthesis> {
    use crate::report::{Synthesis, SynthesisPlan};
    match plan {
        SynthesisPlan::Shallow(p) => {
            let current: usize = p.stages.iter().map(|s| s.units).sum();
            let want = target.resolve(&[current])?;
            let extra = spread(want[0] - current, p.stages.len());
            crate::shallow::widen_shallow(p, &extra, cfg, tol).map(Synthesis::Shallow)
        }
        SynthesisPlan::Deep(p) => {
            let current = p.widths();
            let want = target.resolve(&current)?;
            let extras = p
                .extras
                .iter()
                .zip(want.iter().zip(&current))
                .map(|(old, (w, c))| {
                    let add = spread(w - c, old.len());
                    old.iter().zip(add).map(|(a, b)| a + b).collect()
                })
                .collect();
            crate::deep::recompile(p, extras, cfg, tol).map(Synthesis::Deep)
        }
    }
}
