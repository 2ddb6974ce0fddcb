//! Hyperplane arrangements: region counts, general position, brute-force
//! enumeration and distinguishable region construction.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, Point};
use crate::linalg::{combinations, numeric_rank};
use crate::lp::LinearProgram;
use crate::network::Sign;
use crate::ordering::check_distinguishable;
use crate::par::{map_range, Execution};
use crate::randmat::unit_vector;

pub const PARALLEL_SIN: f64 = 1e-9;
pub const COINCIDENT_POINTS: f64 = 1e-7;
pub const REGION_BOX: f64 = 1e6;
pub const REGION_MARGIN: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrangement {
    pub dim: usize,
    pub hyperplanes: Vec<Hyperplane>,
}

impl Arrangement {
    pub fn new(dim: usize, hyperplanes: Vec<Hyperplane>) -> Result<Self> {
        if hyperplanes.is_empty() {
            return Err(Error::Empty("arrangement hyperplanes"));
        }
        if let Some(i) = hyperplanes.iter().position(|h| h.dim() != dim) {
            return Err(Error::Dimension {
                context: format!("hyperplane {i}"),
                expected: dim,
                got: hyperplanes[i].dim(),
            });
        }
        Ok(Arrangement { dim, hyperplanes })
    }

    pub fn len(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperplanes.is_empty()
    }

    /// Sign of every hyperplane at `x`.
    pub fn signs_at(&self, x: &Point, tol: f64) -> Vec<Sign> {
        self.hyperplanes.iter().map(|h| Sign::of(h.eval(x), tol)).collect()
    }
}

/// Full-dimensional region given by its sign vector and an interior point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub signs: Vec<Sign>,
    #[serde(with = "crate::io::vector")]
    pub witness: Point,
}

fn binom(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Sum of C(m, i) for i = 0..=n: exact region count in general position,
/// an upper bound otherwise.
pub fn count_regions_bound(n: usize, m: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    let mut total: u64 = 0;
    for i in 0..=n.min(m) {
        let c = binom(m as u64, i as u64).ok_or_else(|| Error::invalid("region count overflows u64"))?;
        total = total.checked_add(c).ok_or_else(|| Error::invalid("region count overflows u64"))?;
    }
    Ok(total)
}

/// Incidence data of a planar line arrangement.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarIncidence {
    /// Number of lines through each multi-line point (3 or more).
    pub multi_points: Vec<usize>,
    /// Sizes of the classes of mutually parallel lines (2 or more).
    pub parallel_classes: Vec<usize>,
}

/// Intersection point and the line pairs meeting there.
type Cluster = (DVector<f64>, Vec<(usize, usize)>);

/// Detects concurrency points and parallel classes of a line arrangement.
pub fn planar_incidence(arr: &Arrangement) -> Result<PlanarIncidence> {
    if arr.dim != 2 {
        return Err(Error::invalid("planar incidence needs dim = 2"));
    }
    let lines: Vec<Hyperplane> = arr.hyperplanes.iter().map(Hyperplane::normalized).collect();
    let m = lines.len();
    let sin = |a: &Hyperplane, b: &Hyperplane| (a.w[0] * b.w[1] - a.w[1] * b.w[0]).abs();
    let parallel = |i: usize, j: usize| sin(&lines[i], &lines[j]) < PARALLEL_SIN;
    for i in 0..m {
        for j in i + 1..m {
            if parallel(i, j) {
                let s = lines[i].w.dot(&lines[j].w).signum();
                if (lines[i].b - s * lines[j].b).abs() < COINCIDENT_POINTS {
                    return Err(Error::invalid(format!("lines {i} and {j} coincide")));
                }
            }
        }
    }
    // parallel classes
    let mut class = vec![usize::MAX; m];
    let mut sizes = Vec::new();
    for i in 0..m {
        if class[i] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        for (j, c) in class.iter_mut().enumerate().skip(i) {
            if *c == usize::MAX && (j == i || parallel(i, j)) {
                *c = id;
                size += 1;
            }
        }
        sizes.push(size);
    }
    for i in 0..m {
        for j in 0..m {
            if (class[i] == class[j]) != parallel(i, j) && i != j {
                return Err(Error::invalid("parallelism is not transitive within tolerance"));
            }
        }
    }
    // intersection clusters
    let mut centers: Vec<Cluster> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if parallel(i, j) {
                continue;
            }
            let a = DMatrix::from_row_slice(2, 2, &[lines[i].w[0], lines[i].w[1], lines[j].w[0], lines[j].w[1]]);
            let rhs = DVector::from_column_slice(&[-lines[i].b, -lines[j].b]);
            let p = a.lu().solve(&rhs).ok_or_else(|| Error::invalid("degenerate intersection"))?;
            match centers.iter_mut().find(|(c, _)| (c - &p).norm() < COINCIDENT_POINTS) {
                Some((_, pairs)) => pairs.push((i, j)),
                None => centers.push((p, vec![(i, j)])),
            }
        }
    }
    let mut multi_points = Vec::new();
    for (c, pairs) in &centers {
        let through: Vec<usize> = (0..m).filter(|&k| lines[k].eval(c).abs() < COINCIDENT_POINTS).collect();
        let expected = through.len() * (through.len().saturating_sub(1)) / 2;
        let consistent = pairs.len() == expected
            && pairs.iter().all(|(i, j)| through.contains(i) && through.contains(j));
        if !consistent {
            return Err(Error::invalid(format!(
                "ambiguous incidence near ({:.3e}, {:.3e})",
                c[0], c[1]
            )));
        }
        if through.len() >= 3 {
            multi_points.push(through.len());
        }
    }
    Ok(PlanarIncidence {
        multi_points,
        parallel_classes: sizes.into_iter().filter(|&s| s >= 2).collect(),
    })
}

/// Closed-form region count of a planar line arrangement:
/// 1 + m + C(m,2) - sum over multi-points of C(i-1,2) - sum over parallel classes of C(p,2).
pub fn count_regions_2d(arr: &Arrangement) -> Result<u64> {
    let inc = planar_incidence(arr)?;
    let m = arr.len() as u64;
    let c2 = |k: u64| k * k.saturating_sub(1) / 2;
    let mut n = 1 + m + c2(m);
    for &i in &inc.multi_points {
        n -= c2(i as u64 - 1);
    }
    for &p in &inc.parallel_classes {
        n -= c2(p as u64);
    }
    Ok(n)
}

/// Interior point of the open region with the given signs, if any:
/// maximize t with s_j (w_j.x + b_j) >= t inside a box.
pub fn region_witness(planes: &[Hyperplane], signs: &[Sign], bound: f64) -> Result<Option<(Point, f64)>> {
    let n = planes[0].dim();
    let unit: Vec<Hyperplane> = planes.iter().map(Hyperplane::normalized).collect();
    let mut lp = LinearProgram::new(n + 1);
    for j in 0..n {
        lp.bound(j, -bound, bound);
    }
    lp.bound(n, f64::NEG_INFINITY, 1.0);
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    lp.set_objective(obj);
    for (h, s) in unit.iter().zip(signs) {
        let sg = if *s == Sign::Plus { 1.0 } else { -1.0 };
        let mut row: Vec<f64> = h.w.iter().map(|w| -sg * w).collect();
        row.push(1.0);
        lp.le(row, sg * h.b);
    }
    let sol = lp.maximize()?;
    let t = sol.x[n];
    if t > REGION_MARGIN {
        Ok(Some((DVector::from_column_slice(&sol.x[..n]), t)))
    } else {
        Ok(None)
    }
}

/// Witness with the smallest max-norm among points keeping half the best margin.
fn compact_witness(planes: &[Hyperplane], signs: &[Sign], t: f64) -> Result<Point> {
    let n = planes[0].dim();
    let unit: Vec<Hyperplane> = planes.iter().map(Hyperplane::normalized).collect();
    // vars: x (n), r
    let mut lp = LinearProgram::new(n + 1);
    lp.bound(n, 0.0, f64::INFINITY);
    let mut obj = vec![0.0; n + 1];
    obj[n] = -1.0;
    lp.set_objective(obj);
    for j in 0..n {
        let mut row = vec![0.0; n + 1];
        row[j] = 1.0;
        row[n] = -1.0;
        lp.le(row.clone(), 0.0);
        row[j] = -1.0;
        lp.le(row, 0.0);
    }
    for (h, s) in unit.iter().zip(signs) {
        let sg = if *s == Sign::Plus { 1.0 } else { -1.0 };
        let mut row: Vec<f64> = h.w.iter().map(|w| -sg * w).collect();
        row.push(0.0);
        lp.le(row, sg * h.b - 0.5 * t);
    }
    let sol = lp.maximize()?;
    Ok(DVector::from_column_slice(&sol.x[..n]))
}

fn signs_from_bits(bits: usize, m: usize) -> Vec<Sign> {
    (0..m).map(|j| if bits >> j & 1 == 1 { Sign::Plus } else { Sign::Zero }).collect()
}

/// Every nonempty open region, found by testing each sign vector with an LP.
pub fn enumerate_regions(arr: &Arrangement, cap: usize, exec: Execution) -> Result<Vec<Region>> {
    let m = arr.len();
    if m > cap {
        return Err(Error::invalid(format!("{m} hyperplanes exceed the enumeration cap {cap}")));
    }
    let found = map_range(1usize << m, exec, |bits| {
        let signs = signs_from_bits(bits, m);
        region_witness(&arr.hyperplanes, &signs, REGION_BOX).map(|w| w.map(|(x, _)| Region { signs, witness: x }))
    });
    let mut regions = Vec::new();
    for r in found {
        if let Some(r) = r? {
            regions.push(r);
        }
    }
    Ok(regions)
}

/// Both general-position clauses: any k <= n hyperplanes meet in an
/// (n-k)-flat, and any n+1 of them have empty intersection.
pub fn general_position(arr: &Arrangement, tol: f64) -> bool {
    let n = arr.dim;
    let m = arr.len();
    let unit: Vec<Hyperplane> = arr.hyperplanes.iter().map(Hyperplane::normalized).collect();
    for k in 1..=m.min(n) {
        for subset in combinations(m, k) {
            let w = DMatrix::from_fn(k, n, |r, c| unit[subset[r]].w[c]);
            if numeric_rank(&w, tol).unwrap_or(0) < k {
                return false;
            }
        }
    }
    if m > n {
        for subset in combinations(m, n + 1) {
            let wb = DMatrix::from_fn(n + 1, n + 1, |r, c| if c < n { unit[subset[r]].w[c] } else { unit[subset[r]].b });
            if numeric_rank(&wb, tol).unwrap_or(0) < n + 1 {
                return false;
            }
        }
    }
    true
}

const DIRECTION_TRIES: usize = 64;

/// Builds m hyperplanes and m regions in distinguishable order: each new
/// hyperplane is translated until all earlier regions sit on its zero side,
/// and the new region is carved out of its plus side (preferring the part
/// of the first region, then later ones).
pub fn distinguishable_regions(n: usize, m: usize, seed: u64) -> Result<(Arrangement, Vec<Region>)> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("need n >= 1 and m >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let direction = |k: usize, rng: &mut ChaCha8Rng| -> DVector<f64> {
        if n == 2 {
            let theta = std::f64::consts::FRAC_PI_2 + k as f64 * 2.399_963_229_728_653;
            DVector::from_column_slice(&[theta.cos(), theta.sin()])
        } else {
            unit_vector(rng, n)
        }
    };
    let first = Hyperplane::new(direction(0, &mut rng), 0.0)?;
    let mut planes = vec![first];
    let mut witnesses: Vec<Point> = vec![planes[0].w.clone()];
    for k in 1..m {
        let mut added = false;
        for attempt in 0..DIRECTION_TRIES {
            let u = if attempt == 0 { direction(k, &mut rng) } else { unit_vector(&mut rng, n) };
            let top = witnesses.iter().map(|p| u.dot(p)).fold(f64::NEG_INFINITY, f64::max);
            let h = Hyperplane::new(u, -(top + 1.0))?;
            let mut trial = planes.clone();
            trial.push(h);
            for base in &witnesses {
                let mut signs: Vec<Sign> = planes.iter().map(|p| Sign::of(p.eval(base), 0.0)).collect();
                signs.push(Sign::Plus);
                if let Some((_, t)) = region_witness(&trial, &signs, REGION_BOX)? {
                    let x = compact_witness(&trial, &signs, t)?;
                    planes = trial;
                    witnesses.push(x);
                    added = true;
                    break;
                }
            }
            if added {
                break;
            }
        }
        if !added {
            return Err(Error::invalid(format!("could not add distinguishable region {k}")));
        }
    }
    let arr = Arrangement::new(n, planes)?;
    let regions: Vec<Region> = witnesses
        .into_iter()
        .map(|x| Region {
            signs: arr.signs_at(&x, 0.0),
            witness: x,
        })
        .collect();
    let sets: Vec<Vec<Point>> = regions.iter().map(|r| vec![r.witness.clone()]).collect();
    let scaled: Vec<Hyperplane> = arr.hyperplanes.iter().map(Hyperplane::normalized).collect();
    check_distinguishable(&sets, &scaled, 1e-9)?;
    Ok((arr, regions))
}
