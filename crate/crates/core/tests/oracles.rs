//! Frozen expected values computed by hand or by independent formulas.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use pwlnet::arrangement::{count_regions_2d, count_regions_bound, enumerate_regions, Arrangement};
use pwlnet::io::{points_from_json, points_to_json};
use pwlnet::linalg::{numeric_rank, solve_constrained, SolveMode};
use pwlnet::lp::LinearProgram;
use pwlnet::ordering::{maximum_cover_bruteforce, maximum_hyperplane, separate};
use pwlnet::randmat::{sample_matrix, SphereSampler};
use pwlnet::{point, Activation, Execution, Hyperplane, Layer, Network, Tolerances};

fn lines(defs: &[([f64; 2], f64)]) -> Arrangement {
    Arrangement::new(2, defs.iter().map(|(w, b)| Hyperplane::from_slice(w, *b).unwrap()).collect()).unwrap()
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[test]
fn rank_agrees_with_cofactor_determinant() {
    // third row = first + second: cofactor determinant is exactly 0
    let singular = [[1.0, 2.0, 3.0], [0.5, -1.0, 4.0], [1.5, 1.0, 7.0]];
    let regular = [[2.0, 0.0, 1.0], [1.0, 3.0, -1.0], [0.0, 1.0, 4.0]];
    assert_eq!(det3(singular), 0.0);
    assert_eq!(det3(regular), 27.0);
    let m = |a: [[f64; 3]; 3]| DMatrix::from_fn(3, 3, |r, c| a[r][c]);
    assert_eq!(numeric_rank(&m(singular), 1e-9).unwrap(), 2);
    assert_eq!(numeric_rank(&m(regular), 1e-9).unwrap(), 3);
}

#[test]
fn square_solve_matches_cramer() {
    // 3x + y = 9, x + 2y = 8: Cramer gives x = 10/5, y = 15/5
    let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let x = solve_constrained(&a, &DVector::from_vec(vec![9.0, 8.0]), SolveMode::ExactSquare, 1e-9).unwrap();
    assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
}

#[test]
fn least_norm_solution_of_one_equation() {
    // x + y + z = 3: the minimum-norm point is (1, 1, 1)
    let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
    let x = solve_constrained(&a, &DVector::from_element(1, 3.0), SolveMode::LeastNormUnderdetermined, 1e-9).unwrap();
    assert!((x - DVector::from_element(3, 1.0)).amax() < 1e-12);
}

#[test]
fn absolute_value_network() {
    let hidden = Layer::new(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), DVector::zeros(2), Activation::Relu).unwrap();
    let out = Layer::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::zeros(1), Activation::Linear).unwrap();
    let net = Network::new(1, vec![hidden, out]).unwrap();
    for x in [-3.5, -1.0, 0.0, 0.25, 7.0] {
        assert_eq!(net.forward(&point(&[x])).unwrap()[0], f64::abs(x));
    }
    assert_eq!(net.architecture(), "1(1)2(1)1'(1)");
}

#[test]
fn general_position_counts() {
    // sum_{i<=n} C(m, i)
    let expected = [((1, 5), 6), ((2, 3), 7), ((2, 4), 11), ((2, 5), 16), ((3, 4), 15), ((3, 6), 42), ((4, 4), 16)];
    for ((n, m), want) in expected {
        assert_eq!(count_regions_bound(n, m).unwrap(), want, "n={n} m={m}");
    }
}

#[test]
fn planar_counts_with_degeneracies() {
    // three lines through the origin: 6 sectors
    let concurrent = lines(&[([1.0, 0.0], 0.0), ([0.0, 1.0], 0.0), ([1.0, 1.0], 0.0)]);
    // two parallel lines cut by a third: 6 regions
    let parallel = lines(&[([1.0, 0.0], 0.0), ([1.0, 0.0], -1.0), ([0.0, 1.0], 0.0)]);
    // four lines in general position: 11
    let generic = lines(&[([1.0, 0.0], 0.0), ([0.0, 1.0], 0.0), ([1.0, 1.0], -1.0), ([1.0, -2.0], 0.5)]);
    for (arr, want) in [(concurrent, 6), (parallel, 6), (generic, 11)] {
        assert_eq!(count_regions_2d(&arr).unwrap(), want);
        assert_eq!(enumerate_regions(&arr, 12, Execution::Sequential).unwrap().len() as u64, want);
    }
}

#[test]
fn lp_textbook_optimum() {
    // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0: vertex (8/5, 6/5)
    let mut lp = LinearProgram::new(2);
    lp.set_objective(vec![1.0, 1.0]);
    lp.le(vec![1.0, 2.0], 4.0);
    lp.le(vec![3.0, 1.0], 6.0);
    lp.bound(0, 0.0, f64::INFINITY);
    lp.bound(1, 0.0, f64::INFINITY);
    let s = lp.maximize().unwrap();
    assert!((s.objective - 2.8).abs() < 1e-9);
    assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);
}

#[test]
fn separation_of_unit_square_corners() {
    let tol = Tolerances::default();
    let d1 = vec![point(&[0.0, 0.0])];
    let d2 = vec![point(&[1.0, 0.0]), point(&[0.0, 1.0]), point(&[1.0, 1.0])];
    let r = separate(&d1, &d2, &tol).unwrap();
    assert!(r.separable);
    let h = r.hyperplane.unwrap();
    assert!(h.eval(&d1[0]) > 0.0 && d2.iter().all(|x| h.eval(x) < 0.0));
    // xor is not separable
    let a = vec![point(&[0.0, 0.0]), point(&[1.0, 1.0])];
    let b = vec![point(&[1.0, 0.0]), point(&[0.0, 1.0])];
    assert!(!separate(&a, &b, &tol).unwrap().separable);
}

#[test]
fn maximum_hyperplane_matches_exhaustive_cover() {
    let tol = Tolerances::default();
    // star at the center of 7 evenly spaced points: 4 consecutive ones span
    // 154 degrees and fit in an open half-plane avoiding the star, 5 do not
    let star = point(&[0.0, 0.0]);
    let ring: Vec<_> = (0..7)
        .map(|k| {
            let t = k as f64 * std::f64::consts::TAU / 7.0;
            point(&[t.cos(), t.sin()])
        })
        .collect();
    let mh = maximum_hyperplane(&ring, &star, &tol).unwrap();
    assert_eq!(mh.covered.len(), 4);
    assert_eq!(maximum_cover_bruteforce(&ring, &star, &tol).unwrap(), 4);
}

#[test]
fn sphere_samples_pass_chi_square() {
    // on the unit 2-sphere each coordinate is uniform on [-1, 1]
    let sampler = SphereSampler::new(3, 17).unwrap();
    let w = sample_matrix(&sampler, 20_000);
    let bins = 20;
    let mut counts = vec![0.0; bins];
    for r in 0..w.nrows() {
        assert!((w.row(r).norm() - 1.0).abs() < 1e-12);
        let z = w[(r, 2)];
        counts[(((z + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let expect = w.nrows() as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p > 1e-3, "chi-square {stat} p = {p}");
}

#[test]
fn points_json_round_trip() {
    let pts = vec![point(&[0.1, -2.0]), point(&[1e-17, 3.25])];
    let text = points_to_json(&pts).to_string();
    assert_eq!(points_from_json(&text).unwrap(), pts);
    assert!(points_from_json("[[1, 2], [3]]").is_err());
}
