//! Families of hyperplanes sharing a classification of given point sets.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{BundleConfig, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, Point};
use crate::linalg::numeric_rank;
use crate::ordering::separate;

/// One try at a perturbation-to-base ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleRound {
    /// Base scale; the perturbation-to-base ratio is 1/scale.
    pub scale: f64,
    pub agrees: bool,
    /// Smallest signed margin over all members and points (positive = agreement).
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub hyperplanes: Vec<Hyperplane>,
    pub rounds: Vec<BundleRound>,
}

/// (n+1) x k matrix whose columns are (w, b) of each hyperplane.
pub fn parameter_matrix(planes: &[Hyperplane]) -> DMatrix<f64> {
    let n = planes[0].dim();
    DMatrix::from_fn(n + 1, planes.len(), |r, c| if r < n { planes[c].w[r] } else { planes[c].b })
}

fn checked_epsilons(cfg: &BundleConfig, n: usize) -> Result<Vec<f64>> {
    let eps = cfg.epsilons_for(n);
    for (i, e) in eps.iter().enumerate() {
        if !(*e > 0.0 && *e < 1.0) {
            return Err(Error::invalid(format!("epsilon {i} = {e} is outside (0, 1)")));
        }
        if eps[..i].contains(e) {
            return Err(Error::invalid(format!("epsilon {i} = {e} is repeated")));
        }
    }
    Ok(eps)
}

/// Offsets of member k on the n free parameters: none for the base, a unit
/// step on parameter k-1 for k <= n, powers of the epsilons after that.
fn perturbation(k: usize, n: usize, eps: &[f64]) -> Vec<f64> {
    if k == 0 {
        vec![0.0; n]
    } else if k <= n {
        (0..n).map(|i| if i == k - 1 { 1.0 } else { 0.0 }).collect()
    } else {
        eps[..n].iter().map(|e| e.powi(k as i32)).collect()
    }
}

/// Largest-magnitude weight coordinate, then the others in increasing order.
fn pivot_order(w: &DVector<f64>) -> (usize, Vec<usize>) {
    let p = w.iamax();
    (p, (0..w.len()).filter(|&j| j != p).collect())
}

/// Signed margins of `h`: plus points count positive, zero points negated.
fn worst_margin(h: &Hyperplane, plus: &[Point], zero: &[Point]) -> (f64, usize) {
    let mut worst = (f64::INFINITY, 0);
    for (k, x) in plus.iter().enumerate() {
        let v = h.eval(x);
        if v < worst.0 {
            worst = (v, k);
        }
    }
    for (k, x) in zero.iter().enumerate() {
        let v = -h.eval(x);
        if v < worst.0 {
            worst = (v, plus.len() + k);
        }
    }
    worst
}

fn check_base(base: &Hyperplane, plus: &[Point], zero: &[Point], margin: f64) -> Result<()> {
    let (m, k) = worst_margin(base, plus, zero);
    if m < margin * (1.0 - 1e-9) {
        return Err(Error::invalid(format!(
            "base hyperplane misses the margin {margin:e} at point {k} (value {m:e})"
        )));
    }
    Ok(())
}

/// Grows the base scale until every member built by `members(scale)` agrees
/// with the base on all points with margin >= margin/2.
fn grow_until_agreement<F>(plus: &[Point], zero: &[Point], cfg: &BundleConfig, members: F) -> Result<Bundle>
where
    F: Fn(f64) -> Vec<Hyperplane>,
{
    let mut rounds = Vec::new();
    let mut scale = 1.0;
    let mut last = (0.0, 0);
    for _ in 0..=cfg.max_halvings {
        let planes = members(scale);
        let (m, k) = planes
            .iter()
            .map(|h| worst_margin(h, plus, zero))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
        let agrees = m >= 0.5 * cfg.margin;
        rounds.push(BundleRound { scale, agrees, worst_margin: m });
        if agrees {
            return Ok(Bundle { hyperplanes: planes, rounds });
        }
        last = (m, k);
        scale *= 2.0;
    }
    Err(Error::BundleBudget {
        rounds: rounds.len(),
        point: last.1,
        margin: last.0,
    })
}

/// `count` hyperplanes classifying `plus`/`zero` exactly like `base`.
///
/// Members 1..=n add 1 to one free parameter each (the non-pivot weights,
/// then the bias), so with count >= n+1 the stacked parameter matrix has
/// full rank n+1 with determinant equal to the pivot weight. Later members
/// perturb all free parameters by eps_i^k. When a member would flip a
/// point, the base is scaled up instead of shrinking the perturbations.
pub fn same_classification_bundle(
    base: &Hyperplane,
    plus: &[Point],
    zero: &[Point],
    count: usize,
    cfg: &BundleConfig,
) -> Result<Bundle> {
    if count == 0 {
        return Err(Error::invalid("bundle needs at least one hyperplane"));
    }
    check_base(base, plus, zero, cfg.margin)?;
    if count == 1 {
        return Ok(Bundle {
            hyperplanes: vec![base.clone()],
            rounds: Vec::new(),
        });
    }
    let n = base.dim();
    let eps = checked_epsilons(cfg, n)?;
    let unit = base.scaled(1.0 / base.w.norm());
    let (_, others) = pivot_order(&unit.w);
    grow_until_agreement(plus, zero, cfg, |scale| {
        let b0 = unit.scaled(scale);
        (0..count)
            .map(|k| {
                let mut h = b0.clone();
                let d = perturbation(k, n, &eps);
                for (i, &j) in others.iter().enumerate() {
                    h.w[j] += d[i];
                }
                h.b += d[n - 1];
                h
            })
            .collect()
    })
}

/// Hyperplanes w + (0, e, e^2, ..., e^(n-1)), b + e^n for each given e,
/// all classifying `plus`/`zero` like `base`; any n+1 of them stack into a
/// full-rank parameter matrix.
pub fn column_bundle(
    base: &Hyperplane,
    plus: &[Point],
    zero: &[Point],
    epsilons: &[f64],
    cfg: &BundleConfig,
) -> Result<Bundle> {
    check_base(base, plus, zero, cfg.margin)?;
    let n = base.dim();
    let unit = base.scaled(1.0 / base.w.norm());
    let (_, others) = pivot_order(&unit.w);
    grow_until_agreement(plus, zero, cfg, |scale| {
        let b0 = unit.scaled(scale);
        epsilons
            .iter()
            .map(|&e| {
                let mut h = b0.clone();
                for (i, &j) in others.iter().enumerate() {
                    h.w[j] += e.powi(i as i32 + 1);
                }
                h.b += e.powi(n as i32);
                h
            })
            .collect()
    })
}

/// `count` (>= n for a full bundle) hyperplanes through `anchor` with
/// `plus` on every plus side; the first n weight rows form a nonsingular
/// matrix, so `anchor` is their only common point.
pub fn common_point_bundle(
    base: &Hyperplane,
    anchor: &Point,
    plus: &[Point],
    count: usize,
    cfg: &BundleConfig,
) -> Result<Bundle> {
    let n = base.dim();
    let scale_ref = base.w.norm() * anchor.norm().max(1.0);
    if base.eval(anchor).abs() > 1e-9 * scale_ref {
        return Err(Error::invalid("anchor is not on the base hyperplane"));
    }
    check_base(base, plus, &[], cfg.margin)?;
    if count == 0 {
        return Err(Error::invalid("bundle needs at least one hyperplane"));
    }
    let eps = checked_epsilons(cfg, n)?;
    let unit_w = &base.w / base.w.norm();
    let (_, others) = pivot_order(&unit_w);
    let bundle = grow_until_agreement(plus, &[], cfg, |scale| {
        (0..count)
            .map(|k| {
                let mut w = &unit_w * scale;
                let d = perturbation(k, n - 1, &eps[..n - 1]);
                for (i, &j) in others.iter().enumerate() {
                    w[j] += d[i];
                }
                let b = -w.dot(anchor);
                Hyperplane { w, b }
            })
            .collect()
    })?;
    if count >= n {
        let w = DMatrix::from_fn(n, n, |r, c| bundle.hyperplanes[r].w[c]);
        let rank = numeric_rank(&w, 1e-12)?;
        if rank < n {
            return Err(Error::Singular { rank, needed: n });
        }
    }
    Ok(bundle)
}

/// Bundle A keeps `d1` on all plus sides and `d2` on all zero sides;
/// bundle B does the reverse.
pub fn reversed_pair_bundles(
    d1: &[Point],
    d2: &[Point],
    k1: usize,
    k2: usize,
    cfg: &BundleConfig,
    tol: &Tolerances,
) -> Result<(Bundle, Bundle)> {
    let sep = separate(d1, d2, tol)?;
    let base = sep.hyperplane.ok_or(Error::Inseparable { margin: sep.margin })?;
    let a = same_classification_bundle(&base, d1, d2, k1, cfg)?;
    let b = same_classification_bundle(&base.negated(), d2, d1, k2, cfg)?;
    Ok((a, b))
}
