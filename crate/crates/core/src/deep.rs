//! Deep synthesis: a partition tree of the subdomains compiled into one
//! hidden layer per tree level, with every group's units silenced on all
//! other groups.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::affine::{
    deactivate_foreign, enclosing_base, interference_avoiding_weight, lift_hyperplane,
    passthrough_layer, rank_condition_check, transform_hyperplane, AffineCertificate, Complement,
    EmbeddingDecomposition, ForeignGroup,
};
use crate::bundles::{reversed_pair_bundles, same_classification_bundle};
use crate::config::{BundleConfig, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Hyperplane, Point};
use crate::network::{Activation, Layer, Network};
use crate::ordering::separate;
use crate::pwl::{find_duplicate, DiscretePwl};
use crate::shallow::{solve_output_weights, LinearOutputMatrix};

/// Common weight for `off_dims` that silences a unit on every image in
/// `foreign`; the unit's weights on the other dims and its bias are fixed.
pub fn interference_avoiding_weights(
    weights: &DVector<f64>,
    bias: f64,
    off_dims: &[usize],
    foreign: &[Point],
    tol: &Tolerances,
) -> Result<f64> {
    let mut fixed = Vec::with_capacity(foreign.len());
    let mut sums = Vec::with_capacity(foreign.len());
    for x in foreign {
        let mut c = bias;
        for j in 0..x.len() {
            if !off_dims.contains(&j) {
                c += weights[j] * x[j];
            }
        }
        let s: f64 = off_dims.iter().map(|&j| x[j]).sum();
        if off_dims.iter().any(|&j| x[j] <= tol.activation) {
            return Err(Error::invalid("foreign image is not positive on every off dim"));
        }
        fixed.push(c);
        sums.push(s);
    }
    interference_avoiding_weight(&fixed, &sums, tol)
}

/// A piece of a subdomain; pieces smaller than their subdomain appear when
/// no separable bipartition exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub subdomain: usize,
    #[serde(with = "crate::io::vectors")]
    pub points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionNode {
    Leaf {
        piece: usize,
    },
    Split {
        a: Box<PartitionNode>,
        b: Box<PartitionNode>,
        /// Plus side holds `a`.
        separator: Hyperplane,
        margin: f64,
    },
}

impl PartitionNode {
    pub fn leaves(&self) -> Vec<usize> {
        match self {
            PartitionNode::Leaf { piece } => vec![*piece],
            PartitionNode::Split { a, b, .. } => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }

    pub fn height(&self) -> usize {
        match self {
            PartitionNode::Leaf { .. } => 0,
            PartitionNode::Split { a, b, .. } => 1 + a.height().max(b.height()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionTree {
    pub root: PartitionNode,
    pub pieces: Vec<Piece>,
}

impl PartitionTree {
    pub fn points_of(&self, node: &PartitionNode) -> Vec<Point> {
        node.leaves()
            .into_iter()
            .flat_map(|p| self.pieces[p].points.iter().cloned())
            .collect()
    }
}

const EXHAUSTIVE_GROUPS: usize = 8;

/// Recursive bipartition of the subdomains into linearly separable halves.
pub fn build_partition_tree(subdomains: &[Vec<Point>], tol: &Tolerances) -> Result<PartitionTree> {
    if subdomains.is_empty() || subdomains.iter().any(|s| s.is_empty()) {
        return Err(Error::Empty("partition subdomains"));
    }
    let all: Vec<&Point> = subdomains.iter().flatten().collect();
    if let Some(i) = find_duplicate(&all) {
        return Err(Error::invalid(format!("point {:?} appears twice", all[i].as_slice())));
    }
    let mut pieces: Vec<Piece> = subdomains
        .iter()
        .enumerate()
        .map(|(i, s)| Piece { subdomain: i, points: s.clone() })
        .collect();
    let members: Vec<usize> = (0..pieces.len()).collect();
    let root = split_group(members, &mut pieces, tol)?;
    Ok(PartitionTree { root, pieces })
}

fn split_group(mut members: Vec<usize>, pieces: &mut Vec<Piece>, tol: &Tolerances) -> Result<PartitionNode> {
    if members.len() == 1 {
        return Ok(PartitionNode::Leaf { piece: members[0] });
    }
    loop {
        if let Some((a, b, separator, margin)) = best_bipartition(&members, pieces, tol)? {
            let a = split_group(a, pieces, tol)?;
            let b = split_group(b, pieces, tol)?;
            return Ok(PartitionNode::Split {
                a: Box::new(a),
                b: Box::new(b),
                separator,
                margin,
            });
        }
        // no separable bipartition: break multi-point pieces into singletons
        let multi: Vec<usize> = members.iter().copied().filter(|&i| pieces[i].points.len() > 1).collect();
        if multi.is_empty() {
            return Err(Error::Ordering("distinct points admit no separable bipartition".into()));
        }
        for i in multi {
            let rest = pieces[i].points.split_off(1);
            let subdomain = pieces[i].subdomain;
            for p in rest {
                members.push(pieces.len());
                pieces.push(Piece { subdomain, points: vec![p] });
            }
        }
    }
}

type Bipartition = (Vec<usize>, Vec<usize>, Hyperplane, f64);

/// `true` marks a member on side b; member 0 always stays on side a.
type Mask = Vec<bool>;

fn best_bipartition(members: &[usize], pieces: &[Piece], tol: &Tolerances) -> Result<Option<Bipartition>> {
    let g = members.len();
    let masks: Vec<Mask> = if g <= EXHAUSTIVE_GROUPS {
        (1..(1u64 << (g - 1)))
            .map(|m| (0..g).map(|i| i > 0 && (m >> (i - 1)) & 1 == 1).collect())
            .collect()
    } else {
        greedy_masks(members, pieces)
    };
    let mut best: Option<(Mask, Hyperplane, f64)> = None;
    for mask in masks {
        if mask.iter().all(|b| *b) || !mask.iter().any(|b| *b) {
            continue;
        }
        let side = |want: bool| -> Vec<Point> {
            (0..g)
                .filter(|&i| mask[i] == want)
                .flat_map(|i| pieces[members[i]].points.iter().cloned())
                .collect()
        };
        let sep = separate(&side(false), &side(true), tol)?;
        if let Some(h) = sep.hyperplane {
            if best.as_ref().is_none_or(|(_, _, m)| sep.margin > *m * (1.0 + 1e-12)) {
                best = Some((mask, h, sep.margin));
            }
        }
    }
    Ok(best.map(|(mask, h, margin)| {
        let a = (0..g).filter(|&i| !mask[i]).map(|i| members[i]).collect();
        let b = (0..g).filter(|&i| mask[i]).map(|i| members[i]).collect();
        (a, b, h, margin)
    }))
}

/// Farthest-centroid split, then every single-member split.
fn greedy_masks(members: &[usize], pieces: &[Piece]) -> Vec<Mask> {
    let g = members.len();
    let cents: Vec<Point> = members.iter().map(|&i| crate::geometry::centroid(&pieces[i].points)).collect();
    let mut far = (0, 1, -1.0);
    for i in 0..g {
        for j in i + 1..g {
            let d = (&cents[i] - &cents[j]).norm();
            if d > far.2 {
                far = (i, j, d);
            }
        }
    }
    let (i0, j0, _) = far;
    let mut mask: Mask = (0..g)
        .map(|k| k == j0 || (k != i0 && (&cents[k] - &cents[j0]).norm() < (&cents[k] - &cents[i0]).norm()))
        .collect();
    if mask[0] {
        mask.iter_mut().for_each(|b| *b = !*b);
    }
    let mut out = vec![mask];
    for k in 1..g {
        out.push((0..g).map(|i| i == k).collect());
    }
    out.push((0..g).map(|i| i != 0).collect());
    out
}

/// What a group of units in one hidden layer does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupRole {
    /// One side of a parent group being split; side 0 is the separator's plus side.
    Split { side: usize },
    Passthrough,
    Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitGroup {
    pub role: GroupRole,
    pub pieces: Vec<usize>,
    pub first_unit: usize,
    pub units: usize,
}

/// Per-layer unit groups plus the inputs that determine them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepPlan {
    pub pwl: DiscretePwl,
    pub tree: PartitionTree,
    pub layers: Vec<Vec<UnitGroup>>,
    /// Units beyond the minimum, per layer and group.
    pub extras: Vec<Vec<usize>>,
    pub complement: Complement,
}

impl DeepPlan {
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.iter().map(|g| g.units).sum()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationAudit {
    pub layer: usize,
    pub passed: bool,
    /// Smallest own-unit output over group points.
    pub min_own_output: f64,
    /// Largest output a point produces on a unit of another group.
    pub max_foreign_output: f64,
    /// Largest preactivation a point produces on a unit of another group.
    pub max_foreign_preactivation: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionAudit {
    pub layer: usize,
    pub group: usize,
    /// Largest gap between the group's outputs and its composite affine map.
    pub residual: f64,
    pub rank: usize,
    pub certificate: Option<AffineCertificate>,
}

#[derive(Clone, Debug)]
pub struct DeepSynthesis {
    pub network: Network,
    pub plan: DeepPlan,
    pub isolation: Vec<IsolationAudit>,
    pub transmission: Vec<TransmissionAudit>,
    pub max_residual: f64,
}

impl DeepSynthesis {
    pub fn widths_monotone(&self) -> bool {
        self.network.hidden_widths().windows(2).all(|p| p[1] >= p[0])
    }

    /// Every foreign preactivation is at most −δ/2.
    pub fn interference_ok(&self, tol: &Tolerances) -> bool {
        self.isolation.iter().all(|a| a.max_foreign_preactivation <= -tol.margin / 2.0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct DeepOptions {
    pub complement: Complement,
    /// Extra units per layer and group; empty means none.
    pub extras: Vec<Vec<usize>>,
}

/// Layer-by-layer skeleton: (role, source group index in the previous
/// frontier, node) per group.
fn skeleton(tree: &PartitionTree) -> Vec<Vec<(GroupRole, usize, &PartitionNode)>> {
    let h = tree.root.height();
    let mut frontier: Vec<&PartitionNode> = vec![&tree.root];
    let mut layers = Vec::with_capacity(h + 1);
    for _ in 0..h {
        let mut layer = Vec::new();
        let mut next = Vec::new();
        for (src, node) in frontier.iter().enumerate() {
            match node {
                PartitionNode::Split { a, b, .. } => {
                    layer.push((GroupRole::Split { side: 0 }, src, a.as_ref()));
                    layer.push((GroupRole::Split { side: 1 }, src, b.as_ref()));
                    next.push(a.as_ref());
                    next.push(b.as_ref());
                }
                PartitionNode::Leaf { .. } => {
                    layer.push((GroupRole::Passthrough, src, *node));
                    next.push(*node);
                }
            }
        }
        layers.push(layer);
        frontier = next;
    }
    layers.push(frontier.iter().enumerate().map(|(i, n)| (GroupRole::Output, i, *n)).collect());
    layers
}

/// Group state between layers: the input-space hyperplanes of its units
/// (their preactivations on the group's points) and their unit indices.
struct GroupState {
    points: Vec<usize>,
    planes: Vec<Hyperplane>,
    first_unit: usize,
}

impl GroupState {
    fn dims(&self) -> Vec<usize> {
        (self.first_unit..self.first_unit + self.planes.len()).collect()
    }

    /// Composite map from the input to the full previous-layer output, valid on the group.
    fn full_map(&self, width: usize, n: usize) -> AffineMap {
        let mut m = DMatrix::zeros(width, n);
        let mut c = DVector::zeros(width);
        for (k, h) in self.planes.iter().enumerate() {
            m.row_mut(self.first_unit + k).copy_from(&h.w.transpose());
            c[self.first_unit + k] = h.b;
        }
        AffineMap { matrix: m, offset: c }
    }
}

/// Builds the network for `pwl` with one output unit per coordinate.
pub fn synth_deep_multi(
    pwl: &DiscretePwl,
    options: &DeepOptions,
    cfg: &BundleConfig,
    tol: &Tolerances,
) -> Result<DeepSynthesis> {
    let sets: Vec<Vec<Point>> = pwl.subdomains.iter().map(|s| s.points.clone()).collect();
    let tree = build_partition_tree(&sets, tol)?;
    compile(pwl, tree, options, cfg, tol)
}

/// Single-output deep synthesis.
pub fn synth_deep(pwl: &DiscretePwl, cfg: &BundleConfig, tol: &Tolerances) -> Result<DeepSynthesis> {
    if pwl.output_dim != 1 {
        return Err(Error::invalid("single-output synthesis needs output_dim 1"));
    }
    synth_deep_multi(pwl, &DeepOptions::default(), cfg, tol)
}

/// Maps each code to its target point.
pub fn synth_decoder(codes: &[Point], targets: &[Point], cfg: &BundleConfig, tol: &Tolerances) -> Result<DeepSynthesis> {
    if codes.len() != targets.len() {
        return Err(Error::Dimension {
            context: "decoder pairs".into(),
            expected: codes.len(),
            got: targets.len(),
        });
    }
    let refs: Vec<&Point> = codes.iter().collect();
    if let Some(i) = find_duplicate(&refs) {
        return Err(Error::invalid(format!("code {:?} is not unique", codes[i].as_slice())));
    }
    let pwl = DiscretePwl::from_samples(codes, targets)?;
    synth_deep_multi(&pwl, &DeepOptions::default(), cfg, tol)
}

/// Recompiles a plan with additional units.
pub fn recompile(plan: &DeepPlan, extras: Vec<Vec<usize>>, cfg: &BundleConfig, tol: &Tolerances) -> Result<DeepSynthesis> {
    let options = DeepOptions {
        complement: plan.complement,
        extras,
    };
    compile(&plan.pwl, plan.tree.clone(), &options, cfg, tol)
}

fn compile(
    pwl: &DiscretePwl,
    tree: PartitionTree,
    options: &DeepOptions,
    cfg: &BundleConfig,
    tol: &Tolerances,
) -> Result<DeepSynthesis> {
    let n = pwl.dim;
    let skel = skeleton(&tree);
    let extras: Vec<Vec<usize>> = if options.extras.is_empty() {
        skel.iter().map(|l| vec![0; l.len()]).collect()
    } else {
        options.extras.clone()
    };
    if extras.len() != skel.len() || extras.iter().zip(&skel).any(|(e, l)| e.len() != l.len()) {
        return Err(Error::invalid("extra-unit table does not match the layer groups"));
    }
    // flat point list; piece index per point
    let mut points: Vec<Point> = Vec::new();
    let mut piece_of: Vec<usize> = Vec::new();
    for (i, p) in tree.pieces.iter().enumerate() {
        for x in &p.points {
            points.push(x.clone());
            piece_of.push(i);
        }
    }
    let members_of = |node: &PartitionNode| -> Vec<usize> {
        let leaves = node.leaves();
        (0..points.len()).filter(|&k| leaves.contains(&piece_of[k])).collect()
    };
    let mut images: Vec<DVector<f64>> = points.clone();
    let mut states = vec![GroupState {
        points: (0..points.len()).collect(),
        planes: (0..n)
            .map(|i| Hyperplane {
                w: DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }),
                b: 0.0,
            })
            .collect(),
        first_unit: 0,
    }];
    let mut width = n;
    let mut layers: Vec<Layer> = Vec::new();
    let mut plan_layers: Vec<Vec<UnitGroup>> = Vec::new();
    let mut transmission = Vec::new();

    for (li, groups) in skel.iter().enumerate() {
        let mut units: Vec<Hyperplane> = Vec::new();
        let mut next: Vec<GroupState> = Vec::new();
        let mut plan_groups = Vec::new();
        let mut gi = 0;
        while gi < groups.len() {
            let (role, src, _) = groups[gi];
            let state = &states[src];
            let full = state.full_map(width, n);
            let emb = EmbeddingDecomposition::from_affine(&full, tol)
                .map_err(|e| e.at(format!("layer {} group {gi} embedding", li + 1)))?;
            let foreign_imgs: Vec<(Vec<Point>, Vec<usize>)> = states
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != src)
                .map(|(_, s)| (s.points.iter().map(|&p| images[p].clone()).collect(), s.dims()))
                .collect();
            let foreign: Vec<ForeignGroup<'_>> = foreign_imgs
                .iter()
                .map(|(p, d)| ForeignGroup { points: p, dims: d })
                .collect();
            let convert = |h: &Hyperplane| -> Result<Hyperplane> {
                let hp = transform_hyperplane(h, &emb.base_affine)?;
                let lifted = lift_hyperplane(&hp, &emb, &options.complement.free_weights(&emb), tol)?;
                deactivate_foreign(&lifted, &foreign, tol)
            };
            let ctx = |e: Error| e.at(format!("layer {} group {gi}", li + 1));
            let mut emitted: Vec<(GroupRole, &PartitionNode, Vec<Hyperplane>, usize)> = Vec::new();
            match role {
                GroupRole::Split { .. } => {
                    let (_, _, na) = groups[gi];
                    let (_, _, nb) = groups[gi + 1];
                    let pa = tree.points_of(na);
                    let pb = tree.points_of(nb);
                    let (ea, eb) = (extras[li][gi], extras[li][gi + 1]);
                    let (ba, bb) = reversed_pair_bundles(&pa, &pb, n + ea, n + eb, cfg, tol).map_err(ctx)?;
                    let ua: Vec<Hyperplane> = ba.hyperplanes.iter().map(convert).collect::<Result<_>>().map_err(ctx)?;
                    let ub: Vec<Hyperplane> = bb.hyperplanes.iter().map(convert).collect::<Result<_>>().map_err(ctx)?;
                    emitted.push((groups[gi].0, na, ua, gi));
                    emitted.push((groups[gi + 1].0, nb, ub, gi + 1));
                    gi += 2;
                }
                GroupRole::Passthrough => {
                    let own: Vec<Point> = state.points.iter().map(|&p| images[p].clone()).collect();
                    let (layer, cert) =
                        passthrough_layer(&emb, &own, &foreign, n + extras[li][gi], options.complement, cfg, tol)
                            .map_err(ctx)?;
                    let planes: Vec<Hyperplane> = (0..layer.units())
                        .map(|u| {
                            let (w, b) = layer.unit(u);
                            Hyperplane { w, b }
                        })
                        .collect();
                    transmission.push(TransmissionAudit {
                        layer: li + 1,
                        group: gi,
                        residual: 0.0,
                        rank: 0,
                        certificate: cert,
                    });
                    emitted.push((role, groups[gi].2, planes, gi));
                    gi += 1;
                }
                GroupRole::Output => {
                    let pts: Vec<Point> = state.points.iter().map(|&p| points[p].clone()).collect();
                    let (base, _) = enclosing_base(&pts, tol)?;
                    let bundle = same_classification_bundle(&base, &pts, &[], n + 1 + extras[li][gi], cfg).map_err(ctx)?;
                    let u: Vec<Hyperplane> = bundle.hyperplanes.iter().map(convert).collect::<Result<_>>().map_err(ctx)?;
                    emitted.push((role, groups[gi].2, u, gi));
                    gi += 1;
                }
            }
            for (role, node, layer_planes, _) in emitted {
                let first_unit = units.len();
                // input-space hyperplanes of the new units, valid on the group
                let composite: Vec<Hyperplane> = layer_planes
                    .iter()
                    .map(|h| Hyperplane {
                        w: full.matrix.transpose() * &h.w,
                        b: h.w.dot(&full.offset) + h.b,
                    })
                    .collect();
                plan_groups.push(UnitGroup {
                    role,
                    pieces: node.leaves(),
                    first_unit,
                    units: layer_planes.len(),
                });
                units.extend(layer_planes);
                next.push(GroupState {
                    points: members_of(node),
                    planes: composite,
                    first_unit,
                });
            }
        }
        let layer = Layer::from_hyperplanes(&units)?;
        for img in images.iter_mut() {
            *img = layer.apply(img);
        }
        width = layer.units();
        layers.push(layer);
        plan_layers.push(plan_groups);
        states = next;
        // composite-map transmission check for every group
        for (g, s) in states.iter().enumerate() {
            let mut residual: f64 = 0.0;
            for &p in &s.points {
                for (k, h) in s.planes.iter().enumerate() {
                    let want = h.eval(&points[p]);
                    residual = residual.max((images[p][s.first_unit + k] - want).abs() / want.abs().max(1.0));
                }
            }
            let w = DMatrix::from_fn(s.planes.len(), n, |r, c| s.planes[r].w[c]);
            let (_, rank) = rank_condition_check(&w, n, tol)?;
            if let Some(t) = transmission.iter_mut().find(|t| t.layer == li + 1 && t.group == g && t.rank == 0) {
                t.residual = residual;
                t.rank = rank;
            } else {
                transmission.push(TransmissionAudit {
                    layer: li + 1,
                    group: g,
                    residual,
                    rank,
                    certificate: None,
                });
            }
        }
    }

    // output layer: each leaf's last-layer units against its subdomain map
    let mu = pwl.output_dim;
    let mut out_w = DMatrix::zeros(mu, width);
    for s in &states {
        let piece = piece_of[s.points[0]];
        let map = &pwl.subdomains[tree.pieces[piece].subdomain].map;
        let cols = LinearOutputMatrix::new(s.planes.clone())?;
        for o in 0..mu {
            let (tw, tb) = map.row(o);
            let alpha = solve_output_weights(&cols, (&tw, tb), &[], tol).map_err(|e| e.at(format!("output {o}")))?;
            for (k, a) in alpha.iter().enumerate() {
                out_w[(o, s.first_unit + k)] = *a;
            }
        }
    }
    layers.push(Layer::new(out_w, DVector::zeros(mu), Activation::Linear)?);
    let network = Network::new(n, layers)?;
    let plan = DeepPlan {
        pwl: pwl.clone(),
        tree,
        layers: plan_layers,
        extras,
        complement: options.complement,
    };
    let isolation = audit_isolation(&network, &plan, tol)?;
    let mut max_residual: f64 = 0.0;
    for (s, x) in pwl.labeled_points() {
        max_residual = max_residual.max((network.forward(x)? - pwl.target(s, x)).amax());
    }
    Ok(DeepSynthesis {
        network,
        plan,
        isolation,
        transmission,
        max_residual,
    })
}

/// Group-isolation audit of every hidden layer.
pub fn audit_isolation(net: &Network, plan: &DeepPlan, tol: &Tolerances) -> Result<Vec<IsolationAudit>> {
    let points: Vec<(usize, &Point)> = plan
        .tree
        .pieces
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.points.iter().map(move |x| (i, x)))
        .collect();
    let traces: Vec<_> = points
        .iter()
        .map(|(_, x)| net.forward_traced(x, tol.activation))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (li, groups) in plan.layers.iter().enumerate() {
        let mut audit = IsolationAudit {
            layer: li + 1,
            passed: true,
            min_own_output: f64::INFINITY,
            max_foreign_output: f64::NEG_INFINITY,
            max_foreign_preactivation: f64::NEG_INFINITY,
            violations: 0,
        };
        for ((piece, _), tr) in points.iter().zip(&traces) {
            let z = &tr.preactivations[li];
            let y = &tr.outputs[li];
            for g in groups {
                let own = g.pieces.contains(piece);
                for u in g.first_unit..g.first_unit + g.units {
                    if own {
                        audit.min_own_output = audit.min_own_output.min(y[u]);
                        if y[u] <= tol.activation {
                            audit.violations += 1;
                        }
                    } else {
                        audit.max_foreign_output = audit.max_foreign_output.max(y[u]);
                        audit.max_foreign_preactivation = audit.max_foreign_preactivation.max(z[u]);
                        if y[u] > tol.activation {
                            audit.violations += 1;
                        }
                    }
                }
            }
        }
        audit.passed = audit.violations == 0;
        out.push(audit);
    }
    Ok(out)
}
