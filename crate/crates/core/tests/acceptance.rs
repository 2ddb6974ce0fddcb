//! Acceptance suite: one pass/fail line per criterion, then a combined assert.
//! Run with `cargo test -p pwlnet --test acceptance -- --nocapture` to see the lines.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pwlnet::affine::{
    certify_affine, lift_hyperplane, passthrough_layer, restrict_hyperplane, transform_hyperplane, widen_network, Complement,
    EmbeddingDecomposition, FreeWeights, WidthTarget,
};
use pwlnet::arrangement::{count_regions_2d, count_regions_bound, enumerate_regions, general_position, Arrangement};
use pwlnet::deep::{synth_decoder, synth_deep, DeepSynthesis};
use pwlnet::linalg::{affine_fit, singular_values};
use pwlnet::randmat::{rank_probability, unit_vector, SphereSampler};
use pwlnet::report::Synthesis;
use pwlnet::shallow::{max_residual, synth_classifier, synth_interpolate, synth_multi_output, synth_two_subdomains};
use pwlnet::{fixtures, Activation, AffineMap, BundleConfig, DiscretePwl, Execution, Hyperplane, Layer, Point, Subdomain, Tolerances};

const EXACT: f64 = 1e-8;
const ACTIVATION: f64 = 1e-9;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn cfg() -> BundleConfig {
    BundleConfig::default()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f));
    let dt = t0.elapsed();
    let (mut pass, mut detail) = match res {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(l) = limit {
        if dt > l {
            pass = false;
            detail.push_str(&format!("; over the {l:?} budget"));
        }
    }
    println!("criterion {id:>2} {} {name}: {detail} ({:.2} s)", if pass { "PASS" } else { "FAIL" }, dt.as_secs_f64());
    pass
}

fn random_points(rng: &mut ChaCha8Rng, count: usize, n: usize, spread: f64) -> Vec<Point> {
    (0..count).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-spread..spread))).collect()
}

fn random_map(rng: &mut ChaCha8Rng, n: usize, out: usize) -> AffineMap {
    AffineMap::new(DMatrix::from_fn(out, n, |_, _| rng.random_range(-2.0..2.0)), DVector::from_fn(out, |_, _| rng.random_range(-2.0..2.0)))
        .unwrap()
}

/// Well separated clusters around random centers with random affine maps.
fn random_clusters(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DiscretePwl {
    let reach = 3.0 * k as f64;
    let mut centers: Vec<Point> = Vec::new();
    while centers.len() < k {
        let c = DVector::from_fn(n, |_, _| rng.random_range(-reach..reach));
        if centers.iter().all(|d| (d - &c).norm() > 3.0) {
            centers.push(c);
        }
    }
    let subdomains = centers
        .iter()
        .map(|c| Subdomain {
            points: (0..rng.random_range(1..=n + 2)).map(|_| c + DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5))).collect(),
            map: random_map(rng, n, 1),
        })
        .collect();
    DiscretePwl::new(n, 1, subdomains).unwrap()
}

fn region_figure() -> Outcome {
    let arr = Arrangement::new(
        2,
        vec![
            Hyperplane::from_slice(&[1.0, 0.0], 0.0).unwrap(),
            Hyperplane::from_slice(&[0.0, 1.0], 0.0).unwrap(),
            Hyperplane::from_slice(&[1.0, 1.0], -1.0).unwrap(),
        ],
    )
    .unwrap();
    let formula = count_regions_2d(&arr).unwrap();
    let found = enumerate_regions(&arr, 12, Execution::Parallel).unwrap().len();
    outcome(formula == 7 && found == 7, format!("formula {formula}, enumerated {found}, expected 7"))
}

fn region_formulas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    let mut checked = 0;
    // planar: half generic, half with parallel and concurrent lines from a grid
    for k in 0..60 {
        let m = 1 + k % 8;
        let planes: Vec<Hyperplane> = (0..m)
            .map(|_| {
                if k % 2 == 0 {
                    Hyperplane::new(unit_vector(&mut rng, 2), rng.random_range(-1.0..1.0)).unwrap()
                } else {
                    let dirs = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]];
                    let d = dirs[rng.random_range(0..4)];
                    Hyperplane::from_slice(&d, rng.random_range(-2..=2) as f64).unwrap()
                }
            })
            .collect();
        // identical lines are not an arrangement of m hyperplanes
        let mut uniq: Vec<Hyperplane> = Vec::new();
        for p in planes {
            if !uniq.iter().any(|q| q.w == p.w && q.b == p.b) {
                uniq.push(p);
            }
        }
        let arr = Arrangement::new(2, uniq).unwrap();
        let found = enumerate_regions(&arr, 12, Execution::Parallel).unwrap().len() as u64;
        if found != count_regions_2d(&arr).unwrap() {
            mismatches += 1;
        }
        checked += 1;
    }
    let mut spatial = 0;
    while spatial < 50 {
        let m = 1 + spatial % 6;
        let planes = (0..m).map(|_| Hyperplane::new(unit_vector(&mut rng, 3), rng.random_range(-1.0..1.0)).unwrap()).collect();
        let arr = Arrangement::new(3, planes).unwrap();
        if !general_position(&arr, 1e-9) {
            continue;
        }
        let found = enumerate_regions(&arr, 12, Execution::Parallel).unwrap().len() as u64;
        if found != count_regions_bound(3, m).unwrap() {
            mismatches += 1;
        }
        spatial += 1;
        checked += 1;
    }
    outcome(mismatches == 0, format!("{checked} arrangements, {mismatches} mismatches"))
}

fn three_layer_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut width_errors = 0;
    for k in 0..50 {
        let n = 1 + k % 4;
        let nu = rng.random_range(1..=25);
        let pts = random_points(&mut rng, nu, n, 1.0);
        let vals: Vec<DVector<f64>> = (0..nu).map(|_| DVector::from_element(1, rng.random_range(-5.0..5.0))).collect();
        let syn = synth_interpolate(&pts, &vals, &cfg(), &tol(), k as u64).unwrap();
        if syn.network.hidden_widths() != vec![nu * (n + 1)] {
            width_errors += 1;
        }
        worst = worst.max(max_residual(&syn.network, &syn.plan.pwl).unwrap());
    }
    outcome(worst <= EXACT && width_errors == 0, format!("50 instances, worst residual {worst:.2e}, {width_errors} width errors"))
}

fn multi_output_sharing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let pts = random_points(&mut rng, 8, 2, 2.0);
    let vals: Vec<DVector<f64>> = (0..8).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0))).collect();
    let a = synth_multi_output(&DiscretePwl::from_samples(&pts, &vals).unwrap(), 0, &cfg(), &tol(), 1).unwrap();
    let changed: Vec<DVector<f64>> = vals.iter().map(|v| DVector::from_vec(vec![v[0], rng.random_range(-3.0..3.0)])).collect();
    let b = synth_multi_output(&DiscretePwl::from_samples(&pts, &changed).unwrap(), 0, &cfg(), &tol(), 1).unwrap();
    let bits = |s: &pwlnet::shallow::ShallowSynthesis| {
        let out = s.network.layers.last().unwrap();
        let mut v: Vec<u64> = out.weights.row(0).iter().map(|x| x.to_bits()).collect();
        v.push(out.biases[0].to_bits());
        v
    };
    let (ba, bb) = (bits(&a), bits(&b));
    let differing = ba.iter().zip(&bb).filter(|(x, y)| x != y).count();
    let hidden_same = a.network.layers[0] == b.network.layers[0];
    let per_coord = |s: &pwlnet::shallow::ShallowSynthesis| (0..2).map(|k| coord_residual(s, k)).fold(0.0, f64::max);
    let worst = per_coord(&a).max(per_coord(&b));
    outcome(
        differing == 0 && ba.len() == bb.len() && hidden_same && worst <= EXACT,
        format!("{differing} differing values in output unit 1, hidden layer shared {hidden_same}, worst coordinate residual {worst:.2e}"),
    )
}

fn coord_residual(s: &pwlnet::shallow::ShallowSynthesis, k: usize) -> f64 {
    s.plan
        .pwl
        .labeled_points()
        .into_iter()
        .map(|(d, x)| (s.network.forward(x).unwrap()[k] - s.plan.pwl.target(d, x)[k]).abs())
        .fold(0.0, f64::max)
}

fn classifier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut misses = 0;
    let mut worst_other: f64 = f64::NEG_INFINITY;
    let mut min_own = f64::INFINITY;
    for k in 0..20 {
        let mu = 2 + k % 3;
        let count = rng.random_range(mu..=30);
        let n = 1 + k % 3;
        let pts = random_points(&mut rng, count, n, 2.0);
        let labels: Vec<usize> = (0..count).map(|i| if i < mu { i } else { rng.random_range(0..mu) }).collect();
        let syn = synth_classifier(&pts, &labels, mu, &cfg(), &tol(), k as u64).unwrap();
        for (x, &l) in pts.iter().zip(&labels) {
            let y = syn.network.forward(x).unwrap();
            min_own = min_own.min(y[l]);
            for c in (0..mu).filter(|c| *c != l) {
                worst_other = worst_other.max(y[c]);
            }
            if y.argmax().0 != l {
                misses += 1;
            }
        }
    }
    outcome(
        min_own > 0.0 && worst_other <= ACTIVATION && misses == 0,
        format!("20 instances, min own output {min_own:.3}, max other output {worst_other:.1e}, {misses} argmax misses"),
    )
}

fn deep_synthesis(traces: &mut Vec<DeepSynthesis>) -> Outcome {
    let f9 = synth_deep(&fixtures::fig9().unwrap(), &cfg(), &tol()).unwrap();
    let arch = f9.network.architecture();
    let isolated = f9.isolation.iter().all(|a| a.passed && a.max_foreign_output <= ACTIVATION);
    let mut ok = arch == "2(1)4(1)6(1)9(1)1'(1)" && f9.max_residual <= EXACT && isolated;
    let mut detail = format!("fixture {arch} residual {:.1e} isolation {isolated}", f9.max_residual);
    traces.push(f9);
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    let mut non_monotone = 0;
    for k in 0..24 {
        let n = 1 + k % 3;
        let subdomains = 2 + k % 5;
        let syn = synth_deep(&random_clusters(&mut rng, n, subdomains), &cfg(), &tol()).unwrap();
        worst = worst.max(syn.max_residual);
        if !syn.widths_monotone() {
            non_monotone += 1;
        }
        traces.push(syn);
    }
    ok &= worst <= EXACT && non_monotone == 0;
    detail.push_str(&format!("; 24 random instances, worst residual {worst:.1e}, {non_monotone} non-monotone"));
    outcome(ok, detail)
}

fn interference(traces: &[DeepSynthesis]) -> Outcome {
    let bound = -tol().margin / 2.0;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut audits = 0;
    for t in traces {
        for a in &t.isolation {
            audits += 1;
            worst = worst.max(a.max_foreign_preactivation);
            violations += a.violations;
            if a.max_foreign_preactivation > bound {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && audits > 0,
        format!("{} traces, {audits} layer audits, max foreign preactivation {worst:.2e} (bound {bound:e}), {violations} violations", traces.len()),
    )
}

fn affine_machinery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = 1 + k % 3;
        let m = n + 1 + k % 4;
        let emb = EmbeddingDecomposition::from_affine(&random_map(&mut rng, n, m), &tol()).unwrap();
        let t = Hyperplane::new(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)), rng.random_range(-1.0..1.0)).unwrap();
        let free = if k % 2 == 0 { FreeWeights::LeastNorm } else { FreeWeights::Fixed(DVector::from_fn(m - n, |_, _| rng.random_range(-1.0..1.0))) };
        let back = restrict_hyperplane(&lift_hyperplane(&t, &emb, &free, &tol()).unwrap(), &emb).unwrap();
        worst = worst.max((&back.w - &t.w).amax()).max((back.b - t.b).abs());
    }
    let pts = random_points(&mut rng, 6, 2, 1.0);
    let first = Layer::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]), DVector::from_element(3, 5.0), Activation::Relu).unwrap();
    let mut images: Vec<Point> = pts.iter().map(|x| first.apply(x)).collect();
    for _ in 0..3 {
        let map = affine_fit(&pts, &images, tol().rank).unwrap().map;
        let emb = EmbeddingDecomposition::from_affine(&map, &tol()).unwrap();
        let (layer, _) = passthrough_layer(&emb, &images, &[], 3, Complement::Zero, &cfg(), &tol()).unwrap();
        images = images.iter().map(|y| layer.apply(y)).collect();
    }
    let firsts: Vec<Point> = images.iter().map(|y| y.rows(0, 2).into_owned()).collect();
    let cert = certify_affine(&pts, &firsts, &tol()).unwrap();
    outcome(
        worst <= 1e-9 && cert.residual <= EXACT && cert.determinant.abs() > 1e-9,
        format!(
            "restrict after lift worst {worst:.1e} over 100 pairs; depth-3 chain fit residual {:.1e}, |det| {:.3}",
            cert.residual,
            cert.determinant.abs()
        ),
    )
}

fn widening() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let pts = random_points(&mut rng, 7, 2, 1.0);
    let vals: Vec<DVector<f64>> = (0..7).map(|_| DVector::from_element(1, rng.random_range(-2.0..2.0))).collect();
    let (codes, targets) = fixtures::decoder();
    let cases = vec![
        ("fig9 deep", Synthesis::Deep(synth_deep(&fixtures::fig9().unwrap(), &cfg(), &tol()).unwrap())),
        ("decoder", Synthesis::Deep(synth_decoder(&codes, &targets, &cfg(), &tol()).unwrap())),
        ("fig2 shallow", Synthesis::Shallow(synth_two_subdomains(&fixtures::fig2().unwrap(), &cfg(), &tol()).unwrap())),
        ("interpolation", Synthesis::Shallow(synth_interpolate(&pts, &vals, &cfg(), &tol(), 3).unwrap())),
    ];
    let mut worst: f64 = 0.0;
    let mut shapes = Vec::new();
    let mut shape_ok = true;
    for (name, syn) in cases {
        let m = syn.network().hidden_widths().into_iter().max().unwrap() + 5;
        let wide = widen_network(&syn.plan(), &WidthTarget::Uniform(m), &cfg(), &tol()).unwrap();
        let net = wide.network();
        shape_ok &= net.hidden_widths().iter().all(|w| *w == m);
        for (_, x) in syn.plan().pwl().labeled_points() {
            worst = worst.max((net.forward(x).unwrap() - syn.network().forward(x).unwrap()).amax());
        }
        shapes.push(format!("{name} {}", net.architecture()));
    }
    outcome(worst <= EXACT && shape_ok, format!("{}; worst output change {worst:.1e}", shapes.join(", ")))
}

fn decoder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    let mut non_monotone = 0;
    for k in 0..12 {
        let n = 2 + k % 8;
        let ne = 1 + k % (n - 1);
        let pairs = rng.random_range(2..=8);
        let codes = random_points(&mut rng, pairs, ne, 2.0);
        let targets = random_points(&mut rng, pairs, n, 1.0);
        let syn = synth_decoder(&codes, &targets, &cfg(), &tol()).unwrap();
        for (c, t) in codes.iter().zip(&targets) {
            worst = worst.max((syn.network.forward(c).unwrap() - t).amax());
        }
        if !syn.widths_monotone() {
            non_monotone += 1;
        }
    }
    outcome(worst <= EXACT && non_monotone == 0, format!("12 decoders, worst reconstruction {worst:.1e}, {non_monotone} non-monotone"))
}

fn rank_monte_carlo() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, m) in [(2, 2), (3, 3), (3, 5), (4, 8)] {
        let s = SphereSampler::new(n, 12).unwrap();
        let r = rank_probability(&s, m, 100_000, 1e-9, Execution::Parallel).unwrap();
        ok &= r.full_rank_fraction == 1.0;
        parts.push(format!("({n},{m}) {} near-singular {}", r.full_rank_fraction, r.near_singular_count));
    }
    outcome(ok, parts.join(", "))
}

fn preactivation_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 10_000 {
        let n = 1 + done % 4;
        let map = random_map(&mut rng, n, n);
        let s = singular_values(&map.matrix);
        if s[n - 1] < 1e-3 * s[0] {
            continue;
        }
        let h = Hyperplane::new(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)), rng.random_range(-1.0..1.0)).unwrap();
        let x = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let hp = transform_hyperplane(&h, &map).unwrap();
        worst = worst.max((h.eval(&x) - hp.eval(&map.apply(&x))).abs());
        done += 1;
    }
    outcome(worst <= 1e-10, format!("10000 triples, worst preactivation gap {worst:.1e}"))
}

#[test]
fn acceptance() {
    let mut traces = Vec::new();
    let s = Some;
    let results = [
        run(1, "region count of the three-line figure", s(Duration::from_secs(1)), region_figure),
        run(2, "enumeration matches the counting formulas", s(Duration::from_secs(30)), region_formulas),
        run(3, "three-layer interpolation is exact", s(Duration::from_secs(60)), three_layer_exactness),
        run(4, "output units share the hidden layer", None, multi_output_sharing),
        run(5, "one-hot ReLU classifier", None, classifier),
        run(6, "deep synthesis", None, || deep_synthesis(&mut traces)),
        run(7, "foreign units stay below -margin/2", None, || interference(&traces)),
        run(8, "lift, restrict and pass-through chains", None, affine_machinery),
        run(9, "widening keeps outputs", None, widening),
        run(10, "decoder", None, decoder),
        run(11, "random unit-row matrices have full rank", s(Duration::from_secs(30)), rank_monte_carlo),
        run(12, "preactivations survive affine changes of coordinates", None, preactivation_invariance),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
