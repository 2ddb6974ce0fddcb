//! Linear separability, maximum-cover hyperplanes and distinguishable orders.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{centroid, Hyperplane, Point};
use crate::linalg::{combinations, span_basis};
use crate::lp::LinearProgram;
use crate::pwl::find_duplicate;
use crate::randmat::unit_vector;

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationResult {
    pub separable: bool,
    /// D1 on the plus side, D2 on the zero side.
    pub hyperplane: Option<Hyperplane>,
    /// Smallest |preactivation| over both sets.
    pub margin: f64,
}

/// Maximum-margin separation of `d1` (plus side) from `d2` (zero side).
///
/// The returned hyperplane has unit-norm weights with the boundary halfway
/// between the two sets, scaled up when needed so the margin is at least
/// `tol.margin`.
pub fn separate(d1: &[Point], d2: &[Point], tol: &Tolerances) -> Result<SeparationResult> {
    if d1.is_empty() || d2.is_empty() {
        return Err(Error::Empty("separation sets"));
    }
    let n = d1[0].len();
    let all: Vec<Point> = d1.iter().chain(d2).cloned().collect();
    let c = centroid(&all);
    // vars: w (n, boxed), b, t
    let mut lp = LinearProgram::new(n + 2);
    for j in 0..n {
        lp.bound(j, -1.0, 1.0);
    }
    lp.bound(n + 1, f64::NEG_INFINITY, 1e12);
    let mut obj = vec![0.0; n + 2];
    obj[n + 1] = 1.0;
    lp.set_objective(obj);
    for (x, sign) in d1.iter().map(|x| (x, 1.0)).chain(d2.iter().map(|x| (x, -1.0))) {
        // sign * (w.(x-c) + b) >= t
        let mut row = vec![0.0; n + 2];
        for j in 0..n {
            row[j] = -sign * (x[j] - c[j]);
        }
        row[n] = -sign;
        row[n + 1] = 1.0;
        lp.le(row, 0.0);
    }
    let sol = lp.maximize()?;
    let t = sol.x[n + 1];
    if t <= tol.lp_feasibility {
        return Ok(SeparationResult {
            separable: false,
            hyperplane: None,
            margin: t,
        });
    }
    let w = DVector::from_column_slice(&sol.x[..n]);
    let u = &w / w.norm();
    let plus: Vec<&Point> = d1.iter().collect();
    let zero: Vec<&Point> = d2.iter().collect();
    match place_boundary(&u, &plus, &zero, &[], tol.margin) {
        Some(h) => {
            let margin = all.iter().map(|x| h.eval(x).abs()).fold(f64::INFINITY, f64::min);
            Ok(SeparationResult {
                separable: true,
                hyperplane: Some(h),
                margin,
            })
        }
        None => Ok(SeparationResult {
            separable: false,
            hyperplane: None,
            margin: 0.0,
        }),
    }
}

/// Hyperplane with normal `u` putting `plus` strictly above and `zero`
/// strictly below the boundary. The boundary sits at the middle of the
/// widest gap among all projected points in the admissible interval, and
/// the result is scaled so every listed point keeps |value| >= `margin`.
pub fn place_boundary(
    u: &DVector<f64>,
    plus: &[&Point],
    zero: &[&Point],
    others: &[&Point],
    margin: f64,
) -> Option<Hyperplane> {
    let proj = |x: &Point| u.dot(x);
    let lo = plus.iter().map(|x| proj(x)).fold(f64::INFINITY, f64::min);
    let all: Vec<f64> = plus.iter().chain(zero).chain(others).map(|x| proj(x)).collect();
    let spread = all.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - all.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = if zero.is_empty() {
        lo - spread.max(1.0)
    } else {
        zero.iter().map(|x| proj(x)).fold(f64::NEG_INFINITY, f64::max)
    };
    if lo.is_nan() || hi.is_nan() || lo <= hi {
        return None;
    }
    let mut cuts: Vec<f64> = all.iter().copied().filter(|v| *v > hi && *v < lo).collect();
    cuts.push(hi);
    cuts.push(lo);
    cuts.sort_by(f64::total_cmp);
    let (mut best_gap, mut mid) = (-1.0, 0.5 * (lo + hi));
    for pair in cuts.windows(2) {
        let gap = pair[1] - pair[0];
        if gap > best_gap {
            best_gap = gap;
            mid = 0.5 * (pair[0] + pair[1]);
        }
    }
    let h = Hyperplane { w: u.clone(), b: -mid };
    let m = all.iter().map(|v| (v - mid).abs()).fold(f64::INFINITY, f64::min);
    if m <= 0.0 {
        return None;
    }
    Some(if m < margin { h.scaled(1.01 * margin / m) } else { h })
}

/// Result of the maximum-cover search around one star sample.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximumHyperplane {
    /// Star on the plus side, covered samples on the zero side.
    pub hyperplane: Hyperplane,
    /// Unit normal used for translations.
    pub direction: DVector<f64>,
    pub covered: Vec<usize>,
    pub uncovered: Vec<usize>,
}

const DIRECTION_TOL: f64 = 1e-9;

/// Generalized cross product of d-1 vectors in R^d.
fn cross_product(rows: &[&DVector<f64>]) -> DVector<f64> {
    let d = rows.len() + 1;
    let mut u = DVector::zeros(d);
    for j in 0..d {
        let minor = DMatrix::from_fn(d - 1, d - 1, |r, c| rows[r][if c < j { c } else { c + 1 }]);
        let det = minor.determinant();
        u[j] = if j % 2 == 0 { det } else { -det };
    }
    u
}

/// Direction u maximizing #{i : u.v_i < 0}; returns (u, covered indices).
/// Exact: an optimal open cone of the central arrangement always has an
/// extreme ray cut out by d-1 independent vectors, so it suffices to try
/// every such ray and resolve the vectors lying on it recursively.
pub fn max_open_halfspace(vectors: &[DVector<f64>]) -> (DVector<f64>, Vec<usize>) {
    let ids: Vec<usize> = (0..vectors.len()).collect();
    let d = vectors.first().map_or(1, |v| v.len());
    best_halfspace(vectors, &ids, d)
}

fn best_halfspace(vectors: &[DVector<f64>], ids: &[usize], d: usize) -> (DVector<f64>, Vec<usize>) {
    let mut e1 = DVector::zeros(d);
    e1[0] = 1.0;
    if ids.is_empty() {
        return (e1, Vec::new());
    }
    let vs: Vec<DVector<f64>> = ids.iter().map(|&i| vectors[i].normalize()).collect();
    let basis = span_basis(&vs, 1e-10);
    let r = basis.ncols();
    if r < d {
        let projected: Vec<DVector<f64>> = vs.iter().map(|v| basis.transpose() * v).collect();
        let local: Vec<usize> = (0..projected.len()).collect();
        let (u, cov) = best_halfspace(&projected, &local, r);
        return (&basis * u, cov.into_iter().map(|k| ids[k]).collect());
    }
    if d == 1 {
        let neg: Vec<usize> = ids.iter().zip(&vs).filter(|(_, v)| v[0] < 0.0).map(|(i, _)| *i).collect();
        let pos: Vec<usize> = ids.iter().zip(&vs).filter(|(_, v)| v[0] > 0.0).map(|(i, _)| *i).collect();
        return if neg.len() >= pos.len() {
            (DVector::from_element(1, 1.0), neg)
        } else {
            (DVector::from_element(1, -1.0), pos)
        };
    }
    let mut best: Option<(DVector<f64>, Vec<usize>)> = None;
    for subset in combinations(vs.len(), d - 1) {
        let rows: Vec<&DVector<f64>> = subset.iter().map(|&k| &vs[k]).collect();
        let u0 = cross_product(&rows);
        let norm = u0.norm();
        if norm < 1e-12 {
            continue;
        }
        let u0 = u0 / norm;
        for sign in [1.0, -1.0] {
            let u = &u0 * sign;
            let dots: Vec<f64> = vs.iter().map(|v| u.dot(v)).collect();
            let strict: Vec<usize> = (0..vs.len()).filter(|&k| dots[k] < -DIRECTION_TOL).collect();
            let on: Vec<usize> = (0..vs.len()).filter(|&k| dots[k].abs() <= DIRECTION_TOL).collect();
            let bound = strict.len() + on.len();
            if best.as_ref().is_some_and(|(_, c)| bound <= c.len()) {
                continue;
            }
            // resolve the vectors on the ray inside its orthogonal complement
            let (tilt, on_cov) = if on.len() == d - 1 {
                // independent: every one of them can be covered
                let a = DMatrix::from_fn(on.len(), d, |r, c| vs[on[r]][c]);
                let y = DVector::from_element(on.len(), -1.0);
                let tilt = a.transpose() * (&a * a.transpose()).try_inverse().unwrap_or_else(|| DMatrix::identity(on.len(), on.len())) * y;
                (tilt, on.clone())
            } else {
                let on_vecs: Vec<DVector<f64>> = on.iter().map(|&k| &vs[k] - &u * u.dot(&vs[k])).collect();
                let local: Vec<usize> = (0..on.len()).collect();
                let (t, c) = best_halfspace(&on_vecs, &local, d);
                (t, c.into_iter().map(|k| on[k]).collect())
            };
            let mut eta: f64 = 1.0;
            for k in 0..vs.len() {
                if dots[k].abs() > DIRECTION_TOL {
                    let s = tilt.dot(&vs[k]).abs();
                    if s > 0.0 {
                        eta = eta.min(0.5 * dots[k].abs() / s);
                    }
                }
            }
            let dir = (&u + &tilt * eta).normalize();
            let mut cov: Vec<usize> = strict.iter().chain(&on_cov).copied().collect();
            cov.sort_unstable();
            if best.as_ref().is_none_or(|(_, c)| cov.len() > c.len()) {
                best = Some((dir, cov));
                if best.as_ref().unwrap().1.len() == vs.len() {
                    break;
                }
            }
        }
        if best.as_ref().is_some_and(|(_, c)| c.len() == vs.len()) {
            break;
        }
    }
    let (u, cov) = best.unwrap_or((e1, Vec::new()));
    (u, cov.into_iter().map(|k| ids[k]).collect())
}

/// Hyperplane keeping `star` on its plus side while covering as many
/// of the remaining samples as possible on its zero side.
pub fn maximum_hyperplane(delta: &[Point], star: &Point, tol: &Tolerances) -> Result<MaximumHyperplane> {
    let vectors: Vec<DVector<f64>> = delta.iter().map(|p| p - star).collect();
    if vectors.iter().any(|v| v.amax() == 0.0) {
        return Err(Error::invalid("star sample coincides with a remaining sample"));
    }
    let n = star.len();
    if delta.is_empty() {
        let mut u = DVector::zeros(n);
        u[0] = 1.0;
        let h = place_boundary(&u, &[star], &[], &[], tol.margin).expect("single point");
        return Ok(MaximumHyperplane {
            hyperplane: h,
            direction: u,
            covered: Vec::new(),
            uncovered: Vec::new(),
        });
    }
    let (mut u, covered) = max_open_halfspace(&vectors);
    let uncovered: Vec<usize> = (0..delta.len()).filter(|i| !covered.contains(i)).collect();
    // prefer the max-margin direction separating star from the cover
    if !covered.is_empty() {
        let cov_pts: Vec<Point> = covered.iter().map(|&i| delta[i].clone()).collect();
        let sep = separate(std::slice::from_ref(star), &cov_pts, tol)?;
        if let Some(h) = sep.hyperplane {
            let lp_dir = h.w.normalize();
            let s = lp_dir.dot(star);
            let ok = uncovered.iter().all(|&i| lp_dir.dot(&delta[i]) >= s);
            if ok {
                u = lp_dir;
            }
        }
    }
    let plus = [star];
    let zero: Vec<&Point> = covered.iter().map(|&i| &delta[i]).collect();
    let hyperplane = place_boundary(&u, &plus, &zero, &[], tol.margin)
        .ok_or_else(|| Error::Ordering("maximum hyperplane lost its cover".into()))?;
    Ok(MaximumHyperplane {
        hyperplane,
        direction: u,
        covered,
        uncovered,
    })
}

/// Minimum cover size test over every subset (exponential; test oracle).
pub fn maximum_cover_bruteforce(delta: &[Point], star: &Point, tol: &Tolerances) -> Result<usize> {
    let n = delta.len();
    for size in (1..=n).rev() {
        for subset in combinations(n, size) {
            let pts: Vec<Point> = subset.iter().map(|&i| delta[i].clone()).collect();
            if separate(std::slice::from_ref(star), &pts, tol)?.separable {
                return Ok(size);
            }
        }
    }
    Ok(0)
}

/// Hyperplanes realizing a distinguishable order of singleton subdomains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishableOrder {
    /// Indices into the input, in distinguishable order.
    pub order: Vec<usize>,
    pub hyperplanes: Vec<Hyperplane>,
    pub trace: OrderTrace,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderTrace {
    /// Groups of remaining samples that met a translated hyperplane simultaneously.
    pub ties: Vec<Vec<usize>>,
    pub perturbations: Vec<PerturbationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub star: usize,
    pub round: usize,
    pub halvings: usize,
    pub alpha: f64,
    pub preserved: bool,
}

const TIE_REL: f64 = 1e-7;
const MAX_PERTURBATION_ROUNDS: usize = 32;
const MAX_HALVINGS: usize = 60;

/// Groups of indices whose values lie within `gap` of each other.
fn tie_groups(vals: &[(usize, f64)], gap: f64) -> Vec<Vec<usize>> {
    let mut sorted = vals.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut groups = Vec::new();
    let mut cur = vec![sorted[0].0];
    for w in sorted.windows(2) {
        if w[1].1 - w[0].1 < gap {
            cur.push(w[1].0);
        } else {
            if cur.len() > 1 {
                groups.push(std::mem::take(&mut cur));
            }
            cur = vec![w[1].0];
        }
    }
    if cur.len() > 1 {
        groups.push(cur);
    }
    groups
}

/// Distinguishable order for distinct points treated as singleton subdomains.
///
/// Inductive construction: each new point gets the maximum-cover hyperplane
/// over the points placed so far; previously placed points left on its plus
/// side move to the rear of the order, each with a translated copy of that
/// hyperplane. Points tied along the normal are split apart by a small
/// seeded random tilt of the normal first.
pub fn distinguishable_order(points: &[Point], tol: &Tolerances, seed: u64) -> Result<DistinguishableOrder> {
    if points.is_empty() {
        return Err(Error::Empty("points to order"));
    }
    let refs: Vec<&Point> = points.iter().collect();
    if let Some(k) = find_duplicate(&refs) {
        return Err(Error::invalid(format!("duplicate point {:?}", points[k].as_slice())));
    }
    let n = points[0].len();
    let mut trace = OrderTrace::default();
    let mut order: Vec<usize> = Vec::new();
    let mut planes: Vec<Hyperplane> = Vec::new();
    let others_of = |placed: &[usize]| -> Vec<&Point> {
        (0..points.len()).filter(|i| !placed.contains(i)).map(|i| &points[i]).collect()
    };

    // first point: any hyperplane with it on the plus side
    let c = centroid(points);
    let mut u = &points[0] - &c;
    if u.norm() < 1e-12 {
        u = DVector::zeros(n);
        u[0] = 1.0;
    }
    let u = u.normalize();
    let h = place_boundary(&u, &[&points[0]], &[], &others_of(&[0]), tol.margin).expect("single point");
    order.push(0);
    planes.push(h);
    if points.len() > 1 {
        let u = (&points[1] - &points[0]).normalize();
        let h = place_boundary(&u, &[&points[1]], &[&points[0]], &others_of(&[0, 1]), tol.margin)
            .ok_or_else(|| Error::Ordering("cannot split the first two points".into()))?;
        order.push(1);
        planes.push(h);
    }

    for i in 2..points.len() {
        let star = &points[i];
        let delta: Vec<Point> = order.iter().map(|&k| points[k].clone()).collect();
        let mh = maximum_hyperplane(&delta, star, tol)?;
        let covered: Vec<usize> = mh.covered.iter().map(|&k| order[k]).collect();
        let uncovered: Vec<usize> = mh.uncovered.iter().map(|&k| order[k]).collect();
        let mut u = mh.direction.clone();

        let scale = points.iter().map(|p| p.amax()).fold(1.0, f64::max);
        let gap = TIE_REL * scale;
        let tied = |u: &DVector<f64>| -> Vec<Vec<usize>> {
            if uncovered.is_empty() {
                return Vec::new();
            }
            let vals: Vec<(usize, f64)> = uncovered
                .iter()
                .map(|&k| (k, u.dot(&points[k])))
                .chain(std::iter::once((i, u.dot(star))))
                .collect();
            tie_groups(&vals, gap)
        };
        let preserved = |v: &DVector<f64>| -> bool {
            let s = v.dot(star);
            covered.iter().all(|&k| v.dot(&points[k]) < s)
                && uncovered.iter().all(|&k| v.dot(&points[k]) > s)
        };
        let mut ties = tied(&u);
        if !ties.is_empty() {
            trace.ties.extend(ties.iter().cloned());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut round = 0;
            while !ties.is_empty() {
                if round >= MAX_PERTURBATION_ROUNDS {
                    return Err(Error::PerturbationBudget(format!(
                        "point {i}: ties {ties:?} survive {MAX_PERTURBATION_ROUNDS} rounds"
                    )));
                }
                let mut eps = unit_vector(&mut rng, n);
                // a star tie resolves only if the tied sample moves above the star
                for g in &ties {
                    if let Some(&k) = g.iter().find(|&&k| k != i) {
                        if g.contains(&i) && eps.dot(&(&points[k] - star)) < 0.0 {
                            eps = -eps;
                        }
                    }
                }
                let mut alpha = 1e-3 * u.norm();
                let mut accepted = None;
                for h in 0..=MAX_HALVINGS {
                    let cand = (&u + &eps * alpha).normalize();
                    let ok = preserved(&cand);
                    trace.perturbations.push(PerturbationRecord {
                        star: i,
                        round,
                        halvings: h,
                        alpha,
                        preserved: ok,
                    });
                    if ok {
                        accepted = Some(cand);
                        break;
                    }
                    alpha *= 0.5;
                }
                if let Some(cand) = accepted {
                    u = cand;
                    ties = tied(&u);
                }
                round += 1;
            }
        }

        let placed_then: Vec<usize> = order.iter().copied().chain(std::iter::once(i)).collect();
        let zero: Vec<&Point> = covered.iter().map(|&k| &points[k]).collect();
        let mut others: Vec<&Point> = others_of(&placed_then);
        others.extend(uncovered.iter().map(|&k| &points[k]));
        let h = place_boundary(&u, &[star], &zero, &others, tol.margin)
            .ok_or_else(|| Error::Ordering(format!("no hyperplane for point {i}")))?;
        // uncovered samples move to the rear, nearest first
        let keep: Vec<(usize, Hyperplane)> = order
            .iter()
            .zip(&planes)
            .filter(|(k, _)| !uncovered.contains(k))
            .map(|(k, p)| (*k, p.clone()))
            .collect();
        order = keep.iter().map(|(k, _)| *k).collect();
        planes = keep.into_iter().map(|(_, p)| p).collect();
        order.push(i);
        planes.push(h);
        let mut rear = uncovered.clone();
        rear.sort_by(|a, b| u.dot(&points[*a]).total_cmp(&u.dot(&points[*b])).then(a.cmp(b)));
        for k in rear {
            let zero: Vec<&Point> = order.iter().map(|&j| &points[j]).collect();
            let mut placed = order.clone();
            placed.push(k);
            let h = place_boundary(&u, &[&points[k]], &zero, &others_of(&placed), tol.margin)
                .ok_or_else(|| Error::Ordering(format!("cannot translate toward point {k}")))?;
            order.push(k);
            planes.push(h);
        }
    }

    let sets: Vec<Vec<Point>> = order.iter().map(|&k| vec![points[k].clone()]).collect();
    check_distinguishable(&sets, &planes, tol.margin)?;
    Ok(DistinguishableOrder {
        order,
        hyperplanes: planes,
        trace,
    })
}

/// Checks the distinguishable-order conditions on sets listed in order:
/// set ν lies on the plus side of hyperplane ν and every earlier set on its
/// zero side, all with |value| >= `margin`.
pub fn check_distinguishable(sets: &[Vec<Point>], planes: &[Hyperplane], margin: f64) -> Result<()> {
    if sets.len() != planes.len() {
        return Err(Error::Ordering(format!("{} sets but {} hyperplanes", sets.len(), planes.len())));
    }
    let slack = margin * (1.0 - 1e-9);
    for (nu, plane) in planes.iter().enumerate() {
        for (k, x) in sets[nu].iter().enumerate() {
            let v = plane.eval(x);
            if v < slack {
                return Err(Error::Ordering(format!("set {nu} point {k} has value {v:e} on its own hyperplane")));
            }
        }
        for (mu, set) in sets.iter().enumerate().take(nu) {
            for (k, x) in set.iter().enumerate() {
                let v = plane.eval(x);
                if v > -slack {
                    return Err(Error::Ordering(format!(
                        "earlier set {mu} point {k} has value {v:e} on hyperplane {nu}"
                    )));
                }
            }
        }
    }
    Ok(())
}
