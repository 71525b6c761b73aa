use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use l0cert::cover::{cover_verify, CoverParams};
use l0cert::geometry::{
    in_hull, relative_excess_volumes, volume_hull, volume_hull_multichannel, volume_scaled_l1,
    volume_scaled_l1_multichannel,
};
use l0cert::network::{load_model, FORMAT_VERSION};
use l0cert::oracles::mc_volume;
use l0cert::propagation::compute_bounds;
use l0cert::verifier::{
    success_rate_experiment, verify, Falsification, Query, RateExperiment, Verdict,
};
use l0cert::{Ball0Spec, BoxDomain, Error, Network, Result, Strategy};

use crate::input::{parse_input, resolve, Resolved};
use crate::{flatten, BoundsArgs, Command, CompareArgs, OutArg, QueryArgs, VerifyArgs, VolumeArgs};

pub fn run(command: &Command) -> Result<u8> {
    match command {
        Command::Bounds(a) => bounds(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Volume(a) => volume(a),
        Command::Compare(a) => compare(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn emit(out: &OutArg, text: &str) -> Result<()> {
    match &out.out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(q: &QueryArgs) -> Result<(Network<f64>, Resolved)> {
    let net = load_model(&read(&q.model)?)?;
    let doc = parse_input(&read(&q.input)?)?;
    let resolved = resolve(&doc, &net, q.label)?;
    Ok((net, resolved))
}

fn spec_for(r: &Resolved, t: usize) -> Result<Ball0Spec<f64>> {
    let all = (0..r.domain.entries()).collect();
    Ball0Spec::with_perturbable(
        &r.domain,
        r.input.point.clone(),
        t,
        r.perturbable.clone().unwrap_or(all),
    )
}

fn strategies(filter: &[Strategy]) -> Vec<Strategy> {
    if filter.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        Strategy::ALL
            .into_iter()
            .filter(|s| filter.contains(s))
            .collect()
    }
}

/// `# key=value` provenance lines for CSV outputs.
fn csv_header(command: &str, pairs: &[(&str, String)]) -> String {
    let mut s = format!("# l0cert {command} format_version={FORMAT_VERSION}\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "# {k}={v}");
    }
    s
}

fn list(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn bounds(a: &BoundsArgs) -> Result<u8> {
    let (net, r) = load(&a.query)?;
    let spec = spec_for(&r, a.t)?;
    let chosen = strategies(&a.strategy);
    let results = chosen
        .iter()
        .map(|&s| compute_bounds(&net, &spec, &r.domain, s))
        .collect::<Result<Vec<_>>>()?;
    let mut out = csv_header(
        "bounds",
        &[
            ("model", a.query.model.display().to_string()),
            ("input", a.query.input.display().to_string()),
            ("t", a.t.to_string()),
            ("perturbable", list(spec.perturbable())),
        ],
    );
    out.push_str("layer,kind,neuron");
    for s in &chosen {
        let _ = write!(out, ",{s}_lower,{s}_upper");
    }
    out.push('\n');
    for (layer, stage) in net.stages().iter().enumerate() {
        let kind = match stage {
            l0cert::network::Stage::Affine(_) => "affine",
            l0cert::network::Stage::Relu { .. } => "relu",
        };
        for neuron in 0..stage.out_dim() {
            let _ = write!(out, "{layer},{kind},{neuron}");
            for p in &results {
                let b = &p.layers[layer][neuron];
                let _ = write!(out, ",{:?},{:?}", b.lower, b.upper);
            }
            out.push('\n');
        }
    }
    emit(&a.out, &out)?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyConfig {
    model: String,
    input: String,
    label: usize,
    t: usize,
    strategy: Strategy,
    complete: bool,
    seed: u64,
    cap_corners: usize,
    perturbable: Vec<usize>,
}

fn verify_cmd(a: &VerifyArgs) -> Result<u8> {
    let (net, r) = load(&a.query)?;
    let spec = spec_for(&r, a.t)?;
    let seed = a.seed.seed;
    let config = VerifyConfig {
        model: a.query.model.display().to_string(),
        input: a.query.input.display().to_string(),
        label: r.input.label,
        t: a.t,
        strategy: if a.complete {
            Strategy::TopT
        } else {
            a.strategy
        },
        complete: a.complete,
        seed,
        cap_corners: a.cap_corners,
        perturbable: spec.perturbable().to_vec(),
    };
    let budget = Falsification {
        corner_budget: a.cap_corners,
        ..Falsification::with_seed(seed)
    };
    let (report, stats) = if a.complete {
        let params = CoverParams {
            indices: Some(spec.perturbable().to_vec()),
            seed,
            corner_budget: budget.corner_budget,
            sample_budget: budget.sample_budget,
            ..CoverParams::default()
        };
        let (report, stats) = cover_verify(&net, &r.input, &r.domain, a.t, &params)?;
        (report, Some(stats))
    } else {
        let q = Query {
            net: &net,
            input: &r.input,
            domain: &r.domain,
            spec,
            strategy: a.strategy,
        };
        (verify(&q, &budget)?, None)
    };
    let code = match report.verdict {
        Verdict::Verified => 0,
        Verdict::Falsified { .. } => 1,
        Verdict::Unknown => 4,
    };
    let mut doc = json!({
        "format_version": l0cert::verifier::REPORT_VERSION,
        "config": config,
        "report": report,
    });
    if let Some(s) = stats {
        doc["cover_stats"] = serde_json::to_value(s).expect("stats are plain data");
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("report is plain data");
    text.push('\n');
    emit(&a.out, &text)?;
    Ok(code)
}

fn volume(a: &VolumeArgs) -> Result<u8> {
    let ks = flatten(&a.k);
    let ts = flatten(&a.t);
    if ks.is_empty() || ts.is_empty() {
        return Err(Error::InvalidArgument(
            "volume needs at least one -k and one -t".into(),
        ));
    }
    let d = a.channels;
    let mut out = csv_header(
        "volume",
        &[
            ("k", list(&ks)),
            ("t", list(&ts)),
            ("channels", d.to_string()),
            ("lower", a.lower.to_string()),
            ("upper", a.upper.to_string()),
            ("mc", a.mc.map_or("none".into(), |n| n.to_string())),
            ("seed", a.seed.seed.to_string()),
        ],
    );
    out.push_str("k,t,vol_hull,vol_l1,excess_l1,excess_box");
    if a.mc.is_some() {
        out.push_str(",mc_hull,mc_std_error");
    }
    out.push('\n');
    for &k in &ks {
        let domain = BoxDomain::uniform(k, d, a.lower, a.upper)?;
        for &t in ts.iter().filter(|&&t| t >= 1 && t <= k) {
            let (hull, l1, excess) = if d == 1 {
                let e = relative_excess_volumes(&domain, t)?;
                (
                    volume_hull(&domain, t)?,
                    volume_scaled_l1(&domain, t)?,
                    (e.excess_l1, e.excess_box),
                )
            } else {
                let hull = volume_hull_multichannel(&domain, t)?;
                let l1 = volume_scaled_l1_multichannel(&domain, t)?;
                (
                    hull,
                    l1,
                    ((l1 - hull) / hull, (domain.volume() - hull) / hull),
                )
            };
            let _ = write!(
                out,
                "{k},{t},{hull:?},{l1:?},{:?},{:?}",
                excess.0 + 0.0,
                excess.1 + 0.0
            );
            if let Some(n) = a.mc {
                let center = vec![0.5 * (a.lower + a.upper); k * d];
                let spec = Ball0Spec::new(&domain, center, t)?;
                let seed = l0cert::seed::derive_seed_for(a.seed.seed, &[k, t, d]);
                let est = mc_volume(
                    |y| in_hull(&spec, &domain, y).unwrap_or(false),
                    &domain,
                    n,
                    seed,
                )?;
                let _ = write!(out, ",{:?},{:?}", est.mean, est.std_error);
            }
            out.push('\n');
        }
    }
    emit(&a.out, &out)?;
    Ok(0)
}

fn compare(a: &CompareArgs) -> Result<u8> {
    let (net, r) = load(&a.query)?;
    let ks = flatten(&a.k);
    let ts = flatten(&a.t);
    if ks.is_empty() || ts.is_empty() {
        return Err(Error::InvalidArgument(
            "compare needs at least one -k and one -t".into(),
        ));
    }
    let chosen = strategies(&a.strategy);
    let mut out = csv_header(
        "compare",
        &[
            ("model", a.query.model.display().to_string()),
            ("input", a.query.input.display().to_string()),
            ("label", r.input.label.to_string()),
            ("k", list(&ks)),
            ("t", list(&ts)),
            ("trials", a.trials.to_string()),
            ("seed", a.seed.seed.to_string()),
        ],
    );
    out.push_str("k,t,strategy,trials,verified,rate\n");
    for &k in &ks {
        for &t in ts.iter().filter(|&&t| t >= 1 && t <= k) {
            let config = RateExperiment {
                subset_size: k,
                radius: t,
                trials: a.trials,
                seed: l0cert::seed::derive_seed_for(a.seed.seed, &[k, t]),
            };
            for row in success_rate_experiment(&net, &r.input, &r.domain, &config, &chosen)? {
                let _ = writeln!(
                    out,
                    "{k},{t},{},{},{},{}",
                    row.strategy, row.trials, row.verified, row.rate
                );
            }
        }
    }
    emit(&a.out, &out)?;
    Ok(0)
}
