//! Three-layer synthesis: one hidden layer of hyperplane bundles and an
//! output layer solved subdomain by subdomain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bundles::{parameter_matrix, same_classification_bundle, BundleRound};
use crate::config::{BundleConfig, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Hyperplane, Point};
use crate::linalg::{numeric_rank, solve_constrained, SolveMode};
use crate::network::{activation_pattern, Activation, Layer, Network};
use crate::ordering::{check_distinguishable, distinguishable_order, place_boundary, separate, OrderTrace};
use crate::pwl::DiscretePwl;

/// Columns (w, b) of the hyperplanes a data set activates.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOutputMatrix {
    pub columns: Vec<Hyperplane>,
}

impl LinearOutputMatrix {
    pub fn new(columns: Vec<Hyperplane>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Empty("linear-output matrix columns"));
        }
        Ok(LinearOutputMatrix { columns })
    }

    pub fn dim(&self) -> usize {
        self.columns[0].dim()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        parameter_matrix(&self.columns)
    }
}

/// A hyperplane whose output weight is already fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedContribution {
    pub hyperplane: Hyperplane,
    pub weight: f64,
}

/// Coefficient vector (w, b) of `target` minus the fixed contributions.
fn reduced_target(target: (&DVector<f64>, f64), fixed: &[FixedContribution], n: usize) -> DVector<f64> {
    let mut rhs = DVector::from_fn(n + 1, |i, _| if i < n { target.0[i] } else { target.1 });
    for f in fixed {
        rhs -= f.hyperplane.column() * f.weight;
    }
    rhs
}

/// Output weights α with Σ α_i (w_i.x + b_i) + fixed(x) = target(x)
/// identically, by matching coefficients. Square systems are solved
/// exactly, wider ones by their least-norm solution.
pub fn solve_output_weights(
    w: &LinearOutputMatrix,
    target: (&DVector<f64>, f64),
    fixed: &[FixedContribution],
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let n = w.dim();
    let m = w.matrix();
    let rank = numeric_rank(&m, tol.rank)?;
    if rank < n + 1 {
        return Err(Error::Singular { rank, needed: n + 1 });
    }
    let rhs = reduced_target(target, fixed, n);
    let mode = if m.ncols() == n + 1 {
        SolveMode::ExactSquare
    } else {
        SolveMode::LeastNormUnderdetermined
    };
    solve_constrained(&m, &rhs, mode, tol.rank)
}

/// Like `solve_output_weights` with an extra free output bias β; returns (α, β).
pub fn solve_output_weights_with_bias(
    w: &LinearOutputMatrix,
    target: (&DVector<f64>, f64),
    fixed: &[FixedContribution],
    tol: &Tolerances,
) -> Result<(DVector<f64>, f64)> {
    let n = w.dim();
    let base = w.matrix();
    let rank = numeric_rank(&base, tol.rank)?;
    if rank < n + 1 {
        return Err(Error::Singular { rank, needed: n + 1 });
    }
    let k = base.ncols();
    let mut m = DMatrix::zeros(n + 1, k + 1);
    m.view_mut((0, 0), (n + 1, k)).copy_from(&base);
    m[(n, k)] = 1.0;
    let rhs = reduced_target(target, fixed, n);
    let sol = solve_constrained(&m, &rhs, SolveMode::LeastNormUnderdetermined, tol.rank)?;
    Ok((sol.rows(0, k).into_owned(), sol[k]))
}

/// How output units are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Linear units without bias.
    Linear,
    /// ReLU units with a bias (classification heads).
    Relu,
}

/// One stage: a subdomain, its distinguishing hyperplane and its bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub subdomain: usize,
    pub hyperplane: Hyperplane,
    pub first_unit: usize,
    pub units: usize,
    pub rounds: Vec<BundleRound>,
}

/// Everything needed to rebuild or widen a three-layer network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShallowPlan {
    /// The function actually synthesized (after any singleton split).
    pub pwl: DiscretePwl,
    pub stages: Vec<Stage>,
    pub output: OutputKind,
    pub order_trace: OrderTrace,
}

#[derive(Clone, Debug)]
pub struct ShallowSynthesis {
    pub network: Network,
    pub plan: ShallowPlan,
    /// Numeric rank of each stage's parameter matrix.
    pub stage_ranks: Vec<usize>,
    /// Largest coefficient-matching residual over all solves.
    pub coefficient_residual: f64,
}

/// Target coefficients per subdomain and output coordinate.
pub type TargetFn<'a> = dyn Fn(usize, usize) -> (DVector<f64>, f64) + 'a;

fn affine_target(pwl: &DiscretePwl) -> impl Fn(usize, usize) -> (DVector<f64>, f64) + '_ {
    move |s, o| pwl.subdomains[s].map.row(o)
}

/// Builds the network for subdomains taken in a distinguishable order.
///
/// `order[ν]` is a subdomain index and `planes[ν]` its hyperplane; every
/// hyperplane must classify each later subdomain uniformly (all plus or
/// all zero). `extra[ν]` redundant units widen stage ν beyond n+1.
pub fn synth_distinguishable(
    pwl: &DiscretePwl,
    order: &[usize],
    planes: &[Hyperplane],
    extra: &[usize],
    output: OutputKind,
    cfg: &BundleConfig,
    tol: &Tolerances,
) -> Result<ShallowSynthesis> {
    let k = order.len();
    if k != pwl.subdomains.len() || planes.len() != k {
        return Err(Error::invalid("order and hyperplanes must cover every subdomain once"));
    }
    let mut seen = vec![false; k];
    for &s in order {
        if s >= k || seen[s] {
            return Err(Error::invalid("order is not a permutation"));
        }
        seen[s] = true;
    }
    let extra: Vec<usize> = if extra.is_empty() { vec![0; k] } else { extra.to_vec() };
    if extra.len() != k {
        return Err(Error::invalid("one extra-unit count per stage"));
    }
    let sets: Vec<Vec<Point>> = order.iter().map(|&s| pwl.subdomains[s].points.clone()).collect();
    check_distinguishable(&sets, planes, tol.margin)?;
    // uniform classification of later subdomains
    let mut active_on: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (nu, plane) in planes.iter().enumerate().take(k) {
        for (mu, set) in sets.iter().enumerate().skip(nu + 1) {
            let vals: Vec<f64> = set.iter().map(|x| plane.eval(x)).collect();
            if vals.iter().all(|v| *v >= tol.margin) {
                active_on[mu].push(nu);
            } else if !vals.iter().all(|v| *v <= -tol.margin) {
                return Err(Error::Ordering(format!(
                    "hyperplane of stage {nu} splits subdomain {} (stage {mu})",
                    order[mu]
                )));
            }
        }
    }
    let n = pwl.dim;
    let all: Vec<Point> = pwl.subdomains.iter().flat_map(|s| s.points.iter().cloned()).collect();
    let mut stages = Vec::with_capacity(k);
    let mut units: Vec<Hyperplane> = Vec::new();
    let mut stage_ranks = Vec::new();
    for nu in 0..k {
        let (plus, zero): (Vec<Point>, Vec<Point>) = all.iter().cloned().partition(|x| planes[nu].eval(x) > 0.0);
        let bundle = same_classification_bundle(&planes[nu], &plus, &zero, n + 1 + extra[nu], cfg)
            .map_err(|e| e.at(format!("bundle of stage {nu}")))?;
        stage_ranks.push(numeric_rank(&parameter_matrix(&bundle.hyperplanes), tol.rank)?);
        stages.push(Stage {
            subdomain: order[nu],
            hyperplane: planes[nu].clone(),
            first_unit: units.len(),
            units: bundle.hyperplanes.len(),
            rounds: bundle.rounds,
        });
        units.extend(bundle.hyperplanes);
    }
    let hidden = Layer::from_hyperplanes(&units)?;
    let target = affine_target(pwl);
    let mut out_w = DMatrix::zeros(pwl.output_dim, units.len());
    let mut out_b = DVector::zeros(pwl.output_dim);
    let mut coefficient_residual: f64 = 0.0;
    for o in 0..pwl.output_dim {
        let mut beta: Option<f64> = None;
        for nu in 0..k {
            let st = &stages[nu];
            let mut fixed: Vec<FixedContribution> = Vec::new();
            for &mu in &active_on[nu] {
                let sm = &stages[mu];
                for u in sm.first_unit..sm.first_unit + sm.units {
                    fixed.push(FixedContribution {
                        hyperplane: units[u].clone(),
                        weight: out_w[(o, u)],
                    });
                }
            }
            let bias_unit = Hyperplane { w: DVector::zeros(n), b: 1.0 };
            if let Some(b) = beta {
                fixed.push(FixedContribution { hyperplane: bias_unit.clone(), weight: b });
            }
            let cols = LinearOutputMatrix::new(units[st.first_unit..st.first_unit + st.units].to_vec())?;
            let (tw, tb) = target(order[nu], o);
            let alpha = match (output, beta) {
                (OutputKind::Relu, None) => {
                    let (a, b) = solve_output_weights_with_bias(&cols, (&tw, tb), &fixed, tol)
                        .map_err(|e| e.at(format!("output {o} stage {nu}")))?;
                    beta = Some(b);
                    fixed.push(FixedContribution { hyperplane: bias_unit, weight: b });
                    a
                }
                _ => solve_output_weights(&cols, (&tw, tb), &fixed, tol)
                    .map_err(|e| e.at(format!("output {o} stage {nu}")))?,
            };
            // coefficient residual of the realized local affine form
            let mut got = DVector::zeros(n + 1);
            for f in &fixed {
                got += f.hyperplane.column() * f.weight;
            }
            for (i, a) in alpha.iter().enumerate() {
                got += cols.columns[i].column() * *a;
            }
            let want = DVector::from_fn(n + 1, |i, _| if i < n { tw[i] } else { tb });
            coefficient_residual = coefficient_residual.max((got - want).amax());
            for (i, a) in alpha.iter().enumerate() {
                out_w[(o, st.first_unit + i)] = *a;
            }
        }
        if let Some(b) = beta {
            out_b[o] = b;
        }
    }
    let out_act = match output {
        OutputKind::Linear => Activation::Linear,
        OutputKind::Relu => Activation::Relu,
    };
    let network = Network::new(n, vec![hidden, Layer::new(out_w, out_b, out_act)?])?;
    Ok(ShallowSynthesis {
        network,
        plan: ShallowPlan {
            pwl: pwl.clone(),
            stages,
            output,
            order_trace: OrderTrace::default(),
        },
        stage_ranks,
        coefficient_residual,
    })
}

/// Singleton route: every point is its own subdomain with a constant target.
fn synth_singletons(
    pwl: &DiscretePwl,
    extra_per_stage: usize,
    output: OutputKind,
    cfg: &BundleConfig,
    tol: &Tolerances,
    seed: u64,
) -> Result<ShallowSynthesis> {
    let single = pwl.singletons();
    let points: Vec<Point> = single.subdomains.iter().map(|s| s.points[0].clone()).collect();
    let ord = distinguishable_order(&points, tol, seed)?;
    let extra = vec![extra_per_stage; points.len()];
    let mut syn = synth_distinguishable(&single, &ord.order, &ord.hyperplanes, &extra, output, cfg, tol)?;
    syn.plan.order_trace = ord.trace;
    Ok(syn)
}

/// Interpolates samples (x_i, y_i) with hidden width ν(n+1).
pub fn synth_interpolate(
    points: &[Point],
    values: &[DVector<f64>],
    cfg: &BundleConfig,
    tol: &Tolerances,
    seed: u64,
) -> Result<ShallowSynthesis> {
    let pwl = DiscretePwl::from_samples(points, values)?;
    synth_singletons(&pwl, 0, OutputKind::Linear, cfg, tol, seed)
}

/// Two subdomains: D1 inside one hyperplane's plus side and D2 split off by a
/// second one; hidden width 2(n+1).
pub fn synth_two_subdomains(pwl: &DiscretePwl, cfg: &BundleConfig, tol: &Tolerances) -> Result<ShallowSynthesis> {
    if pwl.subdomains.len() != 2 {
        return Err(Error::invalid("two-subdomain synthesis needs exactly two subdomains"));
    }
    let d1 = &pwl.subdomains[0].points;
    let d2 = &pwl.subdomains[1].points;
    let sep = separate(d2, d1, tol)?;
    let l2 = sep.hyperplane.ok_or_else(|| {
        Error::invalid("subdomains are not linearly separable; use interpolation through singletons instead")
    })?;
    let all: Vec<&Point> = d1.iter().chain(d2).collect();
    let u = l2.w.normalize();
    let l1 = place_boundary(&u, &all, &[], &[], tol.margin).ok_or_else(|| Error::invalid("no enclosing hyperplane"))?;
    synth_distinguishable(pwl, &[0, 1], &[l1, l2], &[], OutputKind::Linear, cfg, tol)
}

/// Shared hidden layer with one output unit per coordinate. Routes: two
/// separable subdomains, otherwise singletons in distinguishable order.
pub fn synth_multi_output(
    pwl: &DiscretePwl,
    extra_per_stage: usize,
    cfg: &BundleConfig,
    tol: &Tolerances,
    seed: u64,
) -> Result<ShallowSynthesis> {
    if pwl.subdomains.len() == 2 && extra_per_stage == 0 {
        if let Ok(s) = synth_two_subdomains(pwl, cfg, tol) {
            return Ok(s);
        }
    }
    synth_singletons(pwl, extra_per_stage, OutputKind::Linear, cfg, tol, seed)
}

/// ReLU classifier: output i is positive exactly on category i.
pub fn synth_classifier(
    points: &[Point],
    labels: &[usize],
    categories: usize,
    cfg: &BundleConfig,
    tol: &Tolerances,
    seed: u64,
) -> Result<ShallowSynthesis> {
    if points.len() != labels.len() {
        return Err(Error::invalid("one label per point"));
    }
    for c in 0..categories {
        if !labels.contains(&c) {
            return Err(Error::invalid(format!("category {c} has no points")));
        }
    }
    if let Some(l) = labels.iter().find(|l| **l >= categories) {
        return Err(Error::invalid(format!("label {l} out of range")));
    }
    let values: Vec<DVector<f64>> = labels
        .iter()
        .map(|&l| DVector::from_fn(categories, |i, _| if i == l { 1.0 } else { -1.0 }))
        .collect();
    let pwl = DiscretePwl::from_samples(points, &values)?;
    synth_singletons(&pwl, 0, OutputKind::Relu, cfg, tol, seed)
}

/// Rebuild with `extra[ν]` more units in stage ν; outputs on the data are unchanged.
pub fn widen_shallow(plan: &ShallowPlan, extra: &[usize], cfg: &BundleConfig, tol: &Tolerances) -> Result<ShallowSynthesis> {
    let order: Vec<usize> = plan.stages.iter().map(|s| s.subdomain).collect();
    let planes: Vec<Hyperplane> = plan.stages.iter().map(|s| s.hyperplane.clone()).collect();
    let base: Vec<usize> = plan.stages.iter().map(|s| s.units - (plan.pwl.dim + 1)).collect();
    let total: Vec<usize> = base.iter().zip(extra).map(|(a, b)| a + b).collect();
    let mut syn = synth_distinguishable(&plan.pwl, &order, &planes, &total, plan.output, cfg, tol)?;
    syn.plan.order_trace = plan.order_trace.clone();
    Ok(syn)
}

/// Stage-wise activation audit: points of stage ν activate exactly the
/// units of the earlier stages whose hyperplanes claim them, plus their own.
pub fn audit_stages(syn: &ShallowSynthesis, tol: &Tolerances) -> Result<Vec<bool>> {
    let hidden = &syn.network.layers[0];
    let stages = &syn.plan.stages;
    let mut out = Vec::new();
    for (nu, st) in stages.iter().enumerate() {
        let pts = &syn.plan.pwl.subdomains[st.subdomain].points;
        let rep = activation_pattern(hidden, pts, tol.activation)?;
        let mut ok = true;
        for pat in &rep.per_point {
            for (mu, sm) in stages.iter().enumerate() {
                let claims = mu == nu || (mu < nu && pts.iter().all(|x| sm.hyperplane.eval(x) > 0.0));
                for u in sm.first_unit..sm.first_unit + sm.units {
                    let on = pat.signs[u] == crate::network::Sign::Plus;
                    if on != claims {
                        ok = false;
                    }
                }
            }
        }
        out.push(ok);
    }
    Ok(out)
}

/// Network evaluating a target affine map per point, for residual checks.
pub fn max_residual(net: &Network, pwl: &DiscretePwl) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (s, x) in pwl.labeled_points() {
        let y = net.forward(x)?;
        worst = worst.max((y - realized_target(net, pwl, s, x)).amax());
    }
    Ok(worst)
}

/// Target as seen through the output activation: a ReLU head realizes
/// the positive part of the function.
pub fn realized_target(net: &Network, pwl: &DiscretePwl, s: usize, x: &Point) -> DVector<f64> {
    let t = pwl.target(s, x);
    match net.layers.last().map(|l| l.activation) {
        Some(Activation::Relu) => t.map(crate::network::relu),
        _ => t,
    }
}

/// Constant map helper for tests and fixtures.
pub fn constant_target(dim: usize, value: f64) -> AffineMap {
    AffineMap::constant(dim, DVector::from_element(1, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use crate::pwl::Subdomain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn square_solve_recovers_own_column() {
        let cols = vec![
            Hyperplane::from_slice(&[1.0, 0.5], 0.2).unwrap(),
            Hyperplane::from_slice(&[0.0, 1.0], 1.0).unwrap(),
            Hyperplane::from_slice(&[1.0, 1.0], -3.0).unwrap(),
        ];
        let w = LinearOutputMatrix::new(cols.clone()).unwrap();
        let a = solve_output_weights(&w, (&cols[0].w, cols[0].b), &[], &tol()).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-12 && a[1].abs() < 1e-12 && a[2].abs() < 1e-12);
        let z = solve_output_weights(&w, (&DVector::zeros(2), 0.0), &[], &tol()).unwrap();
        assert!(z.amax() < 1e-12);
    }

    #[test]
    fn rank_deficient_matrix_reports_rank() {
        let h = Hyperplane::from_slice(&[1.0, 0.0], 1.0).unwrap();
        let w = LinearOutputMatrix::new(vec![h.clone(), h.scaled(2.0), h.scaled(3.0)]).unwrap();
        match solve_output_weights(&w, (&DVector::zeros(2), 1.0), &[], &tol()) {
            Err(Error::Singular { rank, needed }) => assert_eq!((rank, needed), (1, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixed_contribution_is_absorbed() {
        // four columns built by perturbing the base (w, b) = ((1, 0.5), 0.2)
        let eps: [f64; 3] = [0.3, 0.7, 0.5];
        let cols: Vec<Hyperplane> = (0..4)
            .map(|k| {
                let p = |i: usize| eps[i].powi(k + 1);
                Hyperplane::from_slice(&[1.0 + p(0), 0.5 + p(1)], 0.2 + p(2)).unwrap()
            })
            .collect();
        let w = LinearOutputMatrix::new(cols.clone()).unwrap();
        let fixed = vec![FixedContribution {
            hyperplane: Hyperplane::from_slice(&[1.0, 0.0], 0.0).unwrap(),
            weight: 2.0,
        }];
        let tw = DVector::from_vec(vec![-1.0, 4.0]);
        let tb = 0.5;
        let a = solve_output_weights(&w, (&tw, tb), &fixed, &tol()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = point(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
            let got: f64 = cols.iter().zip(a.iter()).map(|(h, a)| a * h.eval(&x)).sum::<f64>() + 2.0 * x[0];
            assert!((got - (tw.dot(&x) + tb)).abs() < 1e-8);
        }
    }

    #[test]
    fn three_singletons_with_constant_targets() {
        let pts = vec![point(&[0.0, 0.0]), point(&[1.0, 0.3]), point(&[-0.4, 2.0])];
        let vals = vec![scalar(1.0), scalar(-2.0), scalar(0.5)];
        let syn = synth_interpolate(&pts, &vals, &BundleConfig::default(), &tol(), 1).unwrap();
        assert_eq!(syn.network.hidden_widths(), vec![9]);
        for (x, y) in pts.iter().zip(&vals) {
            assert!((syn.network.forward(x).unwrap()[0] - y[0]).abs() < 1e-8);
        }
        assert!(audit_stages(&syn, &tol()).unwrap().iter().all(|b| *b));
    }

    #[test]
    fn one_point_gives_width_n_plus_one() {
        let syn = synth_interpolate(&[point(&[1.0, 2.0, 3.0])], &[scalar(4.0)], &BundleConfig::default(), &tol(), 1)
            .unwrap();
        assert_eq!(syn.network.architecture(), "3(1)4(1)1'(1)");
        assert!((syn.network.forward(&point(&[1.0, 2.0, 3.0])).unwrap()[0] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn conflicting_samples_are_rejected() {
        let p = point(&[1.0]);
        assert!(synth_interpolate(&[p.clone(), p], &[scalar(1.0), scalar(2.0)], &BundleConfig::default(), &tol(), 1)
            .is_err());
    }

    #[test]
    fn random_interpolation_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            let pts: Vec<Point> = (0..10).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).collect();
            let vals: Vec<DVector<f64>> = (0..10).map(|_| scalar(rng.random_range(-5.0..5.0))).collect();
            let syn = synth_interpolate(&pts, &vals, &BundleConfig::default(), &tol(), 5).unwrap();
            assert_eq!(syn.network.hidden_widths(), vec![10 * (n + 1)]);
            assert!(max_residual(&syn.network, &syn.plan.pwl).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn staged_outputs_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Point> = (0..6).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0))).collect();
        let vals: Vec<DVector<f64>> = (0..6).map(|_| scalar(rng.random_range(-1.0..1.0))).collect();
        let syn = synth_interpolate(&pts, &vals, &BundleConfig::default(), &tol(), 9).unwrap();
        let net = &syn.network;
        let stages = &syn.plan.stages;
        // truncate hidden + output layer to the first ν stages
        let truncate = |nu: usize| {
            let units = stages[nu - 1].first_unit + stages[nu - 1].units;
            let h = &net.layers[0];
            let o = &net.layers[1];
            Network::new(
                2,
                vec![
                    Layer::new(h.weights.rows(0, units).into_owned(), h.biases.rows(0, units).into_owned(), Activation::Relu)
                        .unwrap(),
                    Layer::new(o.weights.columns(0, units).into_owned(), o.biases.clone(), Activation::Linear).unwrap(),
                ],
            )
            .unwrap()
        };
        for nu in 1..stages.len() {
            let a = truncate(nu);
            let b = truncate(nu + 1);
            for st in &stages[..nu] {
                let x = &syn.plan.pwl.subdomains[st.subdomain].points[0];
                assert_eq!(a.forward(x).unwrap()[0].to_bits(), b.forward(x).unwrap()[0].to_bits());
            }
        }
    }

    fn fig2_like() -> DiscretePwl {
        let d1 = vec![point(&[0.0, 0.0]), point(&[1.0, 0.0]), point(&[0.0, 1.0])];
        let d2 = vec![point(&[3.0, 3.0]), point(&[4.0, 3.0]), point(&[3.0, 4.0])];
        let f1 = AffineMap::new(DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), scalar(0.5)).unwrap();
        let f2 = AffineMap::new(DMatrix::from_row_slice(1, 2, &[-2.0, 0.5]), scalar(3.0)).unwrap();
        DiscretePwl::new(2, 1, vec![Subdomain { points: d1, map: f1 }, Subdomain { points: d2, map: f2 }]).unwrap()
    }

    #[test]
    fn two_subdomains_use_two_bundles() {
        let pwl = fig2_like();
        let syn = synth_two_subdomains(&pwl, &BundleConfig::default(), &tol()).unwrap();
        assert_eq!(syn.network.architecture(), "2(1)6(1)1'(1)");
        assert!(max_residual(&syn.network, &pwl).unwrap() <= 1e-8);
        assert!(audit_stages(&syn, &tol()).unwrap().iter().all(|b| *b));
    }

    #[test]
    fn interleaved_two_subdomains_are_rejected() {
        let d1 = vec![point(&[0.0, 0.0]), point(&[2.0, 0.0])];
        let d2 = vec![point(&[1.0, 0.0]), point(&[3.0, 0.0])];
        let c = AffineMap::constant(2, scalar(1.0));
        let pwl = DiscretePwl::new(2, 1, vec![Subdomain { points: d1, map: c.clone() }, Subdomain { points: d2, map: c }])
            .unwrap();
        assert!(synth_two_subdomains(&pwl, &BundleConfig::default(), &tol()).is_err());
        let syn = synth_multi_output(&pwl, 0, &BundleConfig::default(), &tol(), 1).unwrap();
        assert!(max_residual(&syn.network, &syn.plan.pwl).unwrap() <= 1e-8);
    }

    #[test]
    fn classifier_is_one_hot() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point> = (0..9).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0))).collect();
        let labels: Vec<usize> = (0..9).map(|i| i % 3).collect();
        let syn = synth_classifier(&pts, &labels, 3, &BundleConfig::default(), &tol(), 2).unwrap();
        assert!(syn.network.architecture().ends_with("3(1)"));
        for (x, l) in pts.iter().zip(&labels) {
            let y = syn.network.forward(x).unwrap();
            for c in 0..3 {
                if c == *l {
                    assert!(y[c] > 0.0);
                } else {
                    assert!(y[c] <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn widening_preserves_outputs() {
        let pts = vec![point(&[0.0, 0.0]), point(&[1.0, 0.3]), point(&[-0.4, 2.0])];
        let vals = vec![scalar(1.0), scalar(-2.0), scalar(0.5)];
        let syn = synth_interpolate(&pts, &vals, &BundleConfig::default(), &tol(), 1).unwrap();
        let wide = widen_shallow(&syn.plan, &[2, 0, 3], &BundleConfig::default(), &tol()).unwrap();
        assert_eq!(wide.network.hidden_widths(), vec![14]);
        for x in &pts {
            let d = (syn.network.forward(x).unwrap() - wide.network.forward(x).unwrap()).amax();
            assert!(d <= 1e-8);
        }
    }
}
