use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;

use pwlnet::affine::{widen_network, Complement, WidthTarget};
use pwlnet::arrangement::{count_regions_2d, count_regions_bound, enumerate_regions, general_position, Arrangement};
use pwlnet::deep::{synth_decoder, synth_deep_multi, DeepOptions};
use pwlnet::io::{points_from_json, read_json, write_json};
use pwlnet::ordering::distinguishable_order;
use pwlnet::randmat::{rank_probability, SphereSampler};
use pwlnet::report::{verify, ConstructionReport, Synthesis};
use pwlnet::shallow::{synth_classifier, synth_multi_output};
use pwlnet::{fixtures, Config, DiscretePwl, Execution, Hyperplane, Network, Point, Sign};

use crate::{Cli, Command, ComplementArg, Failure};

type Outcome = Result<(), Failure>;

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut cfg: Config = match &cli.config {
        Some(p) => read_json(p).with_context(|| format!("reading config {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn read_points(path: &Path) -> anyhow::Result<Vec<Point>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    points_from_json(&text).with_context(|| format!("parsing points in {}", path.display()))
}

fn emit<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Writes the network and report, prints the report and fails on residual.
fn finish(syn: &Synthesis, cfg: &Config, started: Instant, out: &Path, report: Option<&Path>) -> Outcome {
    let elapsed = started.elapsed().as_secs_f64() * 1e3;
    let rep = syn.report(&cfg.tolerances, cfg.seed, elapsed)?;
    write_json(out, syn.network())?;
    if let Some(p) = report {
        write_json(p, &rep)?;
    }
    eprintln!(
        "{}  max residual {:.3e}  audits {}",
        rep.architecture,
        rep.max_residual,
        if rep.audits_pass() { "pass" } else { "FAIL" }
    );
    emit(&rep)?;
    if rep.max_residual > cfg.tolerances.exactness {
        return Err(Failure::Verification(format!("max residual {:e}", rep.max_residual)));
    }
    Ok(())
}

#[derive(Deserialize)]
struct ArrangementJson {
    dim: usize,
    hyperplanes: Vec<Hyperplane>,
}

pub fn run(cli: Cli) -> Outcome {
    let cfg = load_config(&cli)?;
    let tol = cfg.tolerances;
    let started = Instant::now();
    match cli.command {
        Command::Synth3 {
            pwl,
            out,
            multi,
            classify,
            extra_units,
            report,
        } => {
            let f: DiscretePwl = read_json(&pwl)?;
            let syn = if classify {
                if extra_units > 0 {
                    return Err(anyhow!("--extra-units is not supported with --classify").into());
                }
                let mut points = Vec::new();
                let mut labels = Vec::new();
                for (i, s) in f.subdomains.iter().enumerate() {
                    points.extend(s.points.iter().cloned());
                    labels.extend(std::iter::repeat_n(i, s.points.len()));
                }
                synth_classifier(&points, &labels, f.subdomains.len(), &cfg.bundle, &tol, cfg.seed)?
            } else {
                if f.output_dim > 1 && !multi {
                    return Err(anyhow!("function has {} outputs; pass --multi", f.output_dim).into());
                }
                synth_multi_output(&f, extra_units, &cfg.bundle, &tol, cfg.seed)?
            };
            finish(&Synthesis::Shallow(syn), &cfg, started, &out, report.as_deref())
        }
        Command::Synthdeep {
            pwl,
            out,
            outputs,
            complement,
            report,
        } => {
            let f: DiscretePwl = read_json(&pwl)?;
            if let Some(mu) = outputs {
                if mu != f.output_dim {
                    return Err(anyhow!("--outputs {mu} but the function has {} outputs", f.output_dim).into());
                }
            }
            let options = DeepOptions {
                complement: match complement {
                    ComplementArg::Zero => Complement::Zero,
                    ComplementArg::LeastNorm => Complement::LeastNorm,
                },
                extras: Vec::new(),
            };
            let syn = synth_deep_multi(&f, &options, &cfg.bundle, &tol)?;
            finish(&Synthesis::Deep(syn), &cfg, started, &out, report.as_deref())
        }
        Command::Decode {
            codes,
            targets,
            out,
            report,
        } => {
            let c = read_points(&codes)?;
            let t = read_points(&targets)?;
            let syn = synth_decoder(&c, &t, &cfg.bundle, &tol)?;
            finish(&Synthesis::Deep(syn), &cfg, started, &out, report.as_deref())
        }
        Command::Widen {
            net,
            widths,
            report,
            out,
            new_report,
        } => {
            let network: Network = read_json(&net)?;
            let rep: ConstructionReport = read_json(&report)?;
            rep.recheck(&network).context("network does not match its report")?;
            let target = match widths.as_slice() {
                [m] => WidthTarget::Uniform(*m),
                w => WidthTarget::PerLayer(w.to_vec()),
            };
            let syn = widen_network(&rep.plan, &target, &cfg.bundle, &tol)?;
            let pwl = rep.plan.pwl();
            let mut change: f64 = 0.0;
            for (_, x) in pwl.labeled_points() {
                let d = network.forward(x)? - syn.network().forward(x)?;
                change = change.max(d.amax());
            }
            eprintln!("output change on the data {change:.3e}");
            finish(&syn, &cfg, started, &out, new_report.as_deref())
        }
        Command::Order { points } => {
            let pts = read_points(&points)?;
            let ord = distinguishable_order(&pts, &tol, cfg.seed)?;
            eprintln!(
                "{} points ordered, {} tie groups, {} perturbations",
                pts.len(),
                ord.trace.ties.len(),
                ord.trace.perturbations.len()
            );
            emit(&ord)?;
            Ok(())
        }
        Command::CountRegions {
            arrangement,
            enumerate,
            csv,
            sequential,
        } => {
            let a: ArrangementJson = read_json(&arrangement)?;
            let arr = Arrangement::new(a.dim, a.hyperplanes)?;
            let planar = if arr.dim == 2 { Some(count_regions_2d(&arr)?) } else { None };
            let mut result = json!({
                "dim": arr.dim,
                "hyperplanes": arr.len(),
                "general_position": general_position(&arr, tol.rank),
                "general_position_count": count_regions_bound(arr.dim, arr.len())?,
                "planar_count": planar,
            });
            if enumerate {
                let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
                let regions = enumerate_regions(&arr, cfg.region_cap, exec)?;
                result["enumerated_count"] = json!(regions.len());
                if let Some(path) = csv {
                    let mut text = String::from("region,signs,witness\n");
                    for (i, r) in regions.iter().enumerate() {
                        let signs: String = r.signs.iter().map(|s| if *s == Sign::Plus { '+' } else { '0' }).collect();
                        let w: Vec<String> = r.witness.iter().map(|v| v.to_string()).collect();
                        text.push_str(&format!("{i},{signs},{}\n", w.join(" ")));
                    }
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                }
                result["regions"] = serde_json::to_value(&regions)?;
            }
            eprintln!(
                "{} hyperplanes in dimension {}: bound {}{}",
                arr.len(),
                arr.dim,
                result["general_position_count"],
                planar.map(|p| format!(", planar count {p}")).unwrap_or_default()
            );
            emit(&result)?;
            Ok(())
        }
        Command::RankProb {
            n,
            m,
            trials,
            tol: rank_tol,
            sequential,
        } => {
            let sampler = SphereSampler::new(n, cfg.seed)?;
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let stats = rank_probability(&sampler, m, trials, rank_tol, exec)?;
            eprintln!(
                "n={n} m={m}: full rank in {:.6} of {trials} trials, {} near-singular",
                stats.full_rank_fraction, stats.near_singular_count
            );
            emit(&stats)?;
            Ok(())
        }
        Command::Verify { net, pwl, report } => {
            let network: Network = read_json(&net)?;
            let f: DiscretePwl = read_json(&pwl)?;
            let v = verify(&network, &f, &tol)?;
            if let Some(p) = report {
                let rep: ConstructionReport = read_json(&p)?;
                if let Err(e) = rep.recheck(&network) {
                    emit(&v)?;
                    return Err(Failure::Verification(e.to_string()));
                }
            }
            eprintln!("{}  max residual {:.3e}", v.architecture, v.max_residual);
            emit(&v)?;
            if !v.passed {
                return Err(Failure::Verification(format!("max residual {:e}", v.max_residual)));
            }
            Ok(())
        }
        Command::Demo { fixture, out_dir } => demo(&fixture, &out_dir, &cfg, started),
        Command::Eval { net, points } => {
            let network: Network = read_json(&net)?;
            let pts = read_points(&points)?;
            let outs: Vec<Vec<f64>> = pts
                .iter()
                .map(|x| network.forward(x).map(|y| y.as_slice().to_vec()))
                .collect::<pwlnet::Result<_>>()?;
            eprintln!("{} points through {}", pts.len(), network.architecture());
            emit(&outs)?;
            Ok(())
        }
    }
}

fn demo(name: &str, dir: &Path, cfg: &Config, started: Instant) -> Outcome {
    let tol = cfg.tolerances;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let syn = match name {
        "fig2" => {
            let f = fixtures::fig2()?;
            Synthesis::Shallow(pwlnet::shallow::synth_two_subdomains(&f, &cfg.bundle, &tol)?)
        }
        "fig5" => {
            let (pts, vals) = fixtures::fig5();
            Synthesis::Shallow(pwlnet::shallow::synth_interpolate(&pts, &vals, &cfg.bundle, &tol, cfg.seed)?)
        }
        "fig7" => {
            // the two sets as subdomains of a constant function pair
            let f7 = fixtures::fig7();
            let mk = |pts: Vec<Point>, v: f64| pwlnet::Subdomain {
                points: pts,
                map: pwlnet::AffineMap::constant(2, nalgebra::DVector::from_element(1, v)),
            };
            let f = DiscretePwl::new(2, 1, vec![mk(f7.d1, 1.0), mk(f7.d2, -1.0)])?;
            Synthesis::Deep(pwlnet::deep::synth_deep(&f, &cfg.bundle, &tol)?)
        }
        "fig9" => {
            let f = fixtures::fig9()?;
            Synthesis::Deep(pwlnet::deep::synth_deep(&f, &cfg.bundle, &tol)?)
        }
        "decoder" => {
            let (codes, targets) = fixtures::decoder();
            Synthesis::Deep(synth_decoder(&codes, &targets, &cfg.bundle, &tol)?)
        }
        other => return Err(anyhow!("unknown fixture {other}").into()),
    };
    write_json(&dir.join(format!("{name}_pwl.json")), syn.plan().pwl())?;
    finish(
        &syn,
        cfg,
        started,
        &dir.join(format!("{name}_net.json")),
        Some(&dir.join(format!("{name}_report.json"))),
    )
}
