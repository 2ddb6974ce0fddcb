//! Small deterministic instances used by the demo command, docs and tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{point, AffineMap, Hyperplane, Point};
use crate::pwl::{DiscretePwl, Subdomain};

pub const NAMES: [&str; 5] = ["fig2", "fig5", "fig7", "fig9", "decoder"];

fn linear(row: &[f64], b: f64) -> AffineMap {
    AffineMap {
        matrix: DMatrix::from_row_slice(1, row.len(), row),
        offset: DVector::from_element(1, b),
    }
}

fn triangle(x: f64, y: f64, s: f64) -> Vec<Point> {
    vec![point(&[x, y]), point(&[x + s, y]), point(&[x, y + s])]
}

/// Two separable clusters in the plane carrying different linear maps.
pub fn fig2() -> Result<DiscretePwl> {
    DiscretePwl::new(
        2,
        1,
        vec![
            Subdomain {
                points: triangle(0.0, 0.0, 1.0),
                map: linear(&[1.0, -1.0], 0.5),
            },
            Subdomain {
                points: triangle(3.0, 3.0, 1.0),
                map: linear(&[-2.0, 0.5], 3.0),
            },
        ],
    )
}

/// Samples on a grid, so that maximum lines meet pairs of points parallel to
/// themselves and the order needs perturbed lines.
pub fn fig5() -> (Vec<Point>, Vec<DVector<f64>>) {
    let mut pts = Vec::new();
    for y in 0..2 {
        for x in 0..3 {
            pts.push(point(&[x as f64, y as f64]));
        }
    }
    pts.push(point(&[1.0, 0.5]));
    let vals = (0..pts.len()).map(|i| DVector::from_element(1, (i as f64 * 0.7).sin())).collect();
    (pts, vals)
}

/// Two three-point sets and three lines: D1 activates lines 1 and 3, D2
/// activates all three.
pub struct Fig7 {
    pub d1: Vec<Point>,
    pub d2: Vec<Point>,
    pub lines: Vec<Hyperplane>,
}

pub fn fig7() -> Fig7 {
    Fig7 {
        d1: triangle(0.0, 0.0, 1.0),
        d2: triangle(4.0, 0.0, 1.0),
        lines: vec![
            Hyperplane::from_slice(&[0.0, 1.0], 1.0).expect("nonzero"),
            Hyperplane::from_slice(&[1.0, 0.0], -2.5).expect("nonzero"),
            Hyperplane::from_slice(&[1.0, 1.0], 2.0).expect("nonzero"),
        ],
    }
}

/// Three subdomains: the first two close together, the third far off.
pub fn fig9() -> Result<DiscretePwl> {
    DiscretePwl::new(
        2,
        1,
        vec![
            Subdomain {
                points: triangle(0.0, 0.0, 0.5),
                map: linear(&[1.0, 2.0], -1.0),
            },
            Subdomain {
                points: triangle(2.0, 0.0, 0.5),
                map: linear(&[-1.0, 0.5], 2.0),
            },
            Subdomain {
                points: triangle(1.0, 5.0, 0.5),
                map: linear(&[0.25, -3.0], 0.0),
            },
        ],
    )
}

/// 3×3 image flattened along anti-diagonals, alternating direction.
pub fn zigzag(image: &[[f64; 3]; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(9);
    for s in 0..5usize {
        let mut diag: Vec<(usize, usize)> = (0..3).filter_map(|i| s.checked_sub(i).filter(|j| *j < 3).map(|j| (i, j))).collect();
        if s % 2 == 0 {
            diag.reverse();
        }
        out.extend(diag.into_iter().map(|(i, j)| image[i][j]));
    }
    out
}

/// Codes in the plane paired with zigzag-flattened gray images.
pub fn decoder() -> (Vec<Point>, Vec<Point>) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let codes = vec![point(&[0.0, 0.0]), point(&[1.0, 0.2]), point(&[0.3, 1.1])];
    let targets = (0..3)
        .map(|_| {
            let mut img = [[0.0; 3]; 3];
            for row in img.iter_mut() {
                for v in row.iter_mut() {
                    *v = (rng.random_range(0..256) as f64) / 255.0;
                }
            }
            DVector::from_vec(zigzag(&img))
        })
        .collect();
    (codes, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_order() {
        let img = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]];
        assert_eq!(zigzag(&img), vec![1.0, 2.0, 4.0, 7.0, 5.0, 3.0, 6.0, 8.0, 9.0]);
    }

    #[test]
    fn fig7_patterns() {
        let f = fig7();
        for x in &f.d1 {
            let on: Vec<bool> = f.lines.iter().map(|l| l.eval(x) > 0.0).collect();
            assert_eq!(on, vec![true, false, true]);
        }
        for x in &f.d2 {
            assert!(f.lines.iter().all(|l| l.eval(x) > 0.0));
        }
    }
}
