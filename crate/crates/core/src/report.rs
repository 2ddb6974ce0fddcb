//! Construction reports and re-verification.

use serde::{Deserialize, Serialize};

use crate::bundles::BundleRound;
use crate::config::Tolerances;
use crate::deep::{DeepPlan, DeepSynthesis, IsolationAudit};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::ordering::OrderTrace;
use crate::pwl::DiscretePwl;
use crate::shallow::{audit_stages, max_residual, realized_target, ShallowPlan, ShallowSynthesis};

/// What is needed to rebuild or widen a synthesized network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthesisPlan {
    Shallow(ShallowPlan),
    Deep(DeepPlan),
}

impl SynthesisPlan {
    pub fn pwl(&self) -> &DiscretePwl {
        match self {
            SynthesisPlan::Shallow(p) => &p.pwl,
            SynthesisPlan::Deep(p) => &p.pwl,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Synthesis {
    Shallow(ShallowSynthesis),
    Deep(DeepSynthesis),
}

impl Synthesis {
    pub fn network(&self) -> &Network {
        match self {
            Synthesis::Shallow(s) => &s.network,
            Synthesis::Deep(s) => &s.network,
        }
    }

    pub fn plan(&self) -> SynthesisPlan {
        match self {
            Synthesis::Shallow(s) => SynthesisPlan::Shallow(s.plan.clone()),
            Synthesis::Deep(s) => SynthesisPlan::Deep(s.plan.clone()),
        }
    }

    pub fn report(&self, tol: &Tolerances, seed: u64, wall_clock_ms: f64) -> Result<ConstructionReport> {
        let network = self.network();
        let pwl = self.plan().pwl().clone();
        let mut rep = ConstructionReport {
            architecture: network.architecture(),
            max_residual: max_residual(network, &pwl)?,
            activation_audits: Vec::new(),
            rank_audits: Vec::new(),
            affine_fit_residuals: Vec::new(),
            order_trace: None,
            bundle_rounds: Vec::new(),
            tolerances: *tol,
            tolerance_note: format!(
                "preactivations in (0, {:e}] are treated as inactive",
                tol.activation
            ),
            seed,
            wall_clock_ms,
            plan: self.plan(),
        };
        match self {
            Synthesis::Shallow(s) => {
                for (i, ok) in audit_stages(s, tol)?.into_iter().enumerate() {
                    rep.activation_audits.push(ActivationAudit {
                        layer: 1,
                        group: i,
                        passed: ok,
                        detail: format!("stage {i} activates exactly its claimed bundles"),
                    });
                }
                for (i, (rank, st)) in s.stage_ranks.iter().zip(&s.plan.stages).enumerate() {
                    rep.rank_audits.push(RankAudit {
                        context: format!("stage {i} linear-output matrix"),
                        rank: *rank,
                        needed: network.input_dim + 1,
                        passed: *rank > network.input_dim,
                    });
                    rep.bundle_rounds.push(st.rounds.clone());
                }
                rep.order_trace = Some(s.plan.order_trace.clone());
            }
            Synthesis::Deep(s) => {
                for a in &s.isolation {
                    rep.activation_audits.push(ActivationAudit::from_isolation(a));
                }
                for t in &s.transmission {
                    rep.rank_audits.push(RankAudit {
                        context: format!("layer {} group {} transmitted map", t.layer, t.group),
                        rank: t.rank,
                        needed: network.input_dim,
                        passed: t.rank >= network.input_dim,
                    });
                    rep.affine_fit_residuals.push(t.residual);
                    if let Some(c) = &t.certificate {
                        rep.affine_fit_residuals.push(c.residual);
                    }
                }
            }
        }
        Ok(rep)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationAudit {
    pub layer: usize,
    pub group: usize,
    pub passed: bool,
    pub detail: String,
}

impl ActivationAudit {
    fn from_isolation(a: &IsolationAudit) -> Self {
        ActivationAudit {
            layer: a.layer,
            group: 0,
            passed: a.passed,
            detail: format!(
                "own outputs >= {:e}, foreign outputs <= {:e}, foreign preactivations <= {:e}, {} violations",
                a.min_own_output, a.max_foreign_output, a.max_foreign_preactivation, a.violations
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankAudit {
    pub context: String,
    pub rank: usize,
    pub needed: usize,
    pub passed: bool,
}

/// Certificate attached to every synthesized network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub architecture: String,
    pub max_residual: f64,
    pub activation_audits: Vec<ActivationAudit>,
    pub rank_audits: Vec<RankAudit>,
    pub affine_fit_residuals: Vec<f64>,
    pub order_trace: Option<OrderTrace>,
    /// Scale-doubling rounds per bundle.
    pub bundle_rounds: Vec<Vec<BundleRound>>,
    pub tolerances: Tolerances,
    pub tolerance_note: String,
    pub seed: u64,
    pub wall_clock_ms: f64,
    pub plan: SynthesisPlan,
}

impl ConstructionReport {
    pub fn audits_pass(&self) -> bool {
        self.activation_audits.iter().all(|a| a.passed) && self.rank_audits.iter().all(|r| r.passed)
    }

    /// Recomputes the residual of `net` on the recorded function; reports
    /// are re-verified rather than trusted.
    pub fn recheck(&self, net: &Network) -> Result<()> {
        if net.architecture() != self.architecture {
            return Err(Error::invalid(format!(
                "architecture {} does not match the report's {}",
                net.architecture(),
                self.architecture
            )));
        }
        let r = max_residual(net, self.plan.pwl())?;
        if r != self.max_residual {
            return Err(Error::invalid(format!(
                "recomputed residual {r:e} differs from the reported {:e}",
                self.max_residual
            )));
        }
        Ok(())
    }
}

/// Per-point evaluation record of `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub subdomain: usize,
    pub residual: f64,
    /// Active hidden units per layer.
    pub active_units: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub architecture: String,
    pub max_residual: f64,
    pub passed: bool,
    pub points: Vec<PointCheck>,
}

/// Traced evaluation of `net` on every point of `pwl`.
pub fn verify(net: &Network, pwl: &DiscretePwl, tol: &Tolerances) -> Result<Verification> {
    if net.input_dim != pwl.dim || net.output_dim() != pwl.output_dim {
        return Err(Error::Dimension {
            context: "network against function".into(),
            expected: pwl.dim,
            got: net.input_dim,
        });
    }
    let mut points = Vec::with_capacity(pwl.num_points());
    let mut worst: f64 = 0.0;
    for (s, x) in pwl.labeled_points() {
        let tr = net.forward_traced(x, tol.activation)?;
        let residual = (tr.output() - realized_target(net, pwl, s, x)).amax();
        worst = worst.max(residual);
        let hidden = tr.patterns.len().saturating_sub(1);
        points.push(PointCheck {
            subdomain: s,
            residual,
            active_units: tr.patterns[..hidden].iter().map(|p| p.active_units()).collect(),
        });
    }
    Ok(Verification {
        architecture: net.architecture(),
        max_residual: worst,
        passed: worst <= tol.exactness,
        points,
    })
}
