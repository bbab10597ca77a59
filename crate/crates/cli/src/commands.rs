use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use covert_adsi::analytic::{
    bsc_rewrite_causal, bsc_rewrite_noisy_causal, bsc_rewrite_noisy_noncausal, bsc_rewrite_noncausal,
    cooperative_capacity, gaussian_lower, GaussianInstance,
};
use covert_adsi::channels::{rewrite_noiseless, rewrite_noisy, AdsiChannel, RewriteSpec};
use covert_adsi::codesim::{simulate, SimConfig};
use covert_adsi::probkit::CondKernel;
use covert_adsi::regions::{eval_region, optimize_region, OptConfig, RegionId, RegionParams};
use rayon::prelude::*;
use serde::Deserialize;

use crate::bundle::bundled_files;
use crate::output::{sig9, write_artifact, Csv, RunManifest};
use crate::{
    CliError, Command, CurveArgs, CurveMode, FixturesArgs, GaussianArgs, OptimizeArgs, Outcome, RateEvalArgs,
    ReplayArgs, SimulateArgs, SweepParam,
};

type CliResult<T> = Result<T, CliError>;

/// What a command produced besides its artifact.
struct Done {
    outcome: Outcome,
    inputs: Vec<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    notes: Vec<String>,
    resolved: Option<serde_json::Value>,
}

impl Done {
    fn ok(inputs: Vec<PathBuf>, out: Option<PathBuf>) -> Self {
        Done {
            outcome: Outcome::Ok,
            inputs,
            seed: None,
            out,
            notes: Vec::new(),
            resolved: None,
        }
    }
}

pub fn run(command: Command, manifest: Option<&Path>) -> CliResult<Outcome> {
    let command = match command {
        Command::Replay(args) => replay(&args)?,
        c => c,
    };
    let config = serde_json::to_value(&command).expect("command serializes");
    let name = config["command"].as_str().unwrap_or_default().to_string();
    let start = Instant::now();
    let done = match &command {
        Command::RateEval(a) => rate_eval(a)?,
        Command::Optimize(a) => optimize(a)?,
        Command::RewriteCurves(a) => rewrite_curves(a)?,
        Command::Gaussian(a) => gaussian(a)?,
        Command::Simulate(a) => simulate_cmd(a)?,
        Command::Fixtures(a) => fixtures(a)?,
        Command::Replay(_) => return Err(CliError::Usage("a manifest cannot record a replay".into())),
    };
    let mut m = RunManifest::new(&name, done.inputs, config, done.seed);
    m.notes = done.notes;
    m.resolved = done.resolved;
    let target = manifest.map(Path::to_path_buf).or_else(|| {
        done.out.map(|p| {
            let mut name = p.into_os_string();
            name.push(".manifest.json");
            PathBuf::from(name)
        })
    });
    m.emit(target.as_deref(), start.elapsed()).map_err(|source| CliError::Io {
        path: target.unwrap_or_else(|| "<stderr>".into()),
        source,
    })?;
    Ok(done.outcome)
}

fn replay(args: &ReplayArgs) -> CliResult<Command> {
    #[derive(Deserialize)]
    struct Recorded {
        config: Command,
    }
    let text = read(&args.manifest_file)?;
    let rec: Recorded = serde_json::from_str(&text)
        .map_err(|e| covert_adsi::Error::Parse(format!("{}: {e}", args.manifest_file.display())))?;
    let mut cmd = rec.config;
    if let Some(out) = &args.out {
        match &mut cmd {
            Command::RateEval(a) => a.out = Some(out.clone()),
            Command::Optimize(a) => a.out = Some(out.clone()),
            Command::RewriteCurves(a) => a.out = Some(out.clone()),
            Command::Gaussian(a) => a.out = Some(out.clone()),
            Command::Simulate(a) => a.out = Some(out.clone()),
            Command::Fixtures(a) => a.out_dir = out.clone(),
            Command::Replay(_) => {}
        }
    }
    Ok(cmd)
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(out: Option<&Path>, text: &str) -> CliResult<()> {
    write_artifact(out, text).map_err(|source| CliError::Io {
        path: out.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()),
        source,
    })
}

fn load_channel(path: &Path) -> CliResult<AdsiChannel> {
    Ok(AdsiChannel::from_json(&read(path)?)?)
}

fn load_params(path: &Path, ch: &AdsiChannel) -> CliResult<RegionParams> {
    Ok(RegionParams::from_json(&read(path)?, ch)?)
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn rate_eval(a: &RateEvalArgs) -> CliResult<Done> {
    let ch = load_channel(&a.channel)?;
    let params = load_params(&a.params, &ch)?;
    if let Some(r) = a.region {
        if r != params.region {
            return Err(covert_adsi::Error::Shape(format!(
                "--region {r} but the parameter file is for {}",
                params.region
            ))
            .into());
        }
    }
    let report = eval_region(&ch, params.region, &params)?;
    if a.json {
        write(None, &pretty(&report))?;
    } else {
        print!("{}", report.table());
    }
    if let Some(out) = &a.out {
        write(Some(out), &pretty(&report))?;
    }
    let mut done = Done::ok(vec![a.channel.clone(), a.params.clone()], a.out.clone());
    if !report.feasible {
        let v = report.violations();
        eprintln!("infeasible: {}", v.join("; "));
        done.notes = v;
        done.outcome = Outcome::Infeasible;
    }
    Ok(done)
}

fn optimize(a: &OptimizeArgs) -> CliResult<Done> {
    let ch = load_channel(&a.channel)?;
    let cfg = OptConfig {
        seed: a.seed,
        restarts: a.restarts,
        u_size: a.u_size,
        v_size: a.v_size,
        x_given_a: a.x_given_a,
        allow_over_cap: a.allow_over_cap,
        ..OptConfig::default()
    };
    let o = optimize_region(&ch, a.region, &cfg)?;
    print!("{}", o.report.table());
    match o.best_restart {
        Some(r) => println!("  best restart: {r} of {}", o.trace.len()),
        None => println!("  no feasible restart; reporting the no-communication point"),
    }
    if let Some(out) = &a.out {
        let body = serde_json::json!({
            "report": o.report,
            "best_restart": o.best_restart,
            "trace": o.trace,
            "opt_config": cfg,
        });
        write(Some(out), &pretty(&body))?;
    }
    if let Some(p) = &a.params_out {
        write(Some(p), &(o.params.to_json(&ch) + "\n"))?;
    }
    let mut done = Done::ok(vec![a.channel.clone()], a.out.clone());
    done.seed = Some(a.seed);
    done.notes.extend(o.report.search_value.clone());
    done.resolved = Some(serde_json::json!(cfg));
    Ok(done)
}

/// `LO:HI:STEP` (inclusive) or `a,b,c`.
fn parse_grid(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("--{flag} `{text}`: expected LO:HI:STEP or a comma list"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(bad());
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            // snap to 12 decimals so 0.01 steps land on 0.5 exactly
            (0..n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect()
        }
        [_] => text.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<CliResult<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(CliError::Usage(format!("--{flag} is empty")));
    }
    Ok(grid)
}

struct CurveRow {
    param: f64,
    causal: f64,
    noncausal: f64,
    feasible: bool,
    nocovert: f64,
}

fn rewrite_curves(a: &CurveArgs) -> CliResult<Done> {
    let (eps_fixed, params) = match a.mode {
        CurveMode::Noiseless => match (&a.eps_grid, a.eps) {
            (Some(g), None) => (None, parse_grid("eps-grid", g)?),
            (None, Some(e)) => (None, vec![e]),
            _ => return Err(CliError::Usage("noiseless mode takes exactly one of --eps, --eps-grid".into())),
        },
        CurveMode::Noisy => {
            let eps = a.eps.ok_or_else(|| CliError::Usage("noisy mode needs --eps".into()))?;
            let g = a
                .delta_grid
                .as_deref()
                .ok_or_else(|| CliError::Usage("noisy mode needs --delta-grid".into()))?;
            (Some(eps), parse_grid("delta-grid", g)?)
        }
    };
    let cfg = OptConfig {
        seed: a.seed,
        restarts: a.restarts,
        ..OptConfig::default()
    };
    let rows: Vec<CurveRow> = params
        .par_iter()
        .map(|&p| -> CliResult<CurveRow> {
            let (causal, nc, spec) = match eps_fixed {
                None => (
                    bsc_rewrite_causal(p)?,
                    bsc_rewrite_noncausal(p, a.grid)?,
                    RewriteSpec::new(CondKernel::bsc(p)?, None, "0")?,
                ),
                Some(eps) => (
                    bsc_rewrite_noisy_causal(eps, p)?,
                    bsc_rewrite_noisy_noncausal(eps, p, a.grid)?,
                    RewriteSpec::new(CondKernel::bsc(eps)?, Some(CondKernel::bsc(p)?), "0")?,
                ),
            };
            let ch = if eps_fixed.is_none() { rewrite_noiseless(&spec)? } else { rewrite_noisy(&spec)? };
            let nocovert = optimize_region(&ch, RegionId::NoCovertC, &cfg)?.report.rate;
            Ok(CurveRow {
                param: p,
                causal: causal.rate,
                noncausal: nc.rate,
                feasible: nc.feasible,
                nocovert,
            })
        })
        .collect::<CliResult<_>>()?;

    let mut csv = Csv::new(&[
        "param",
        "covert_causal",
        "covert_noncausal",
        "noncausal_feasible",
        "capacity_causal_nocovert",
    ]);
    for r in &rows {
        csv.row(&[
            sig9(r.param),
            sig9(r.causal),
            sig9(r.noncausal),
            r.feasible.to_string(),
            sig9(r.nocovert),
        ]);
    }
    write(a.out.as_deref(), &csv.finish())?;
    let mut done = Done::ok(Vec::new(), a.out.clone());
    done.seed = Some(a.seed);
    done.resolved = Some(serde_json::json!({ "grid_points": params, "opt_config": cfg }));
    done.notes.push(format!(
        "param is {}; capacity_causal_nocovert is a search value (best of {} restarts on NO_COVERT_C), not a certified capacity",
        if eps_fixed.is_some() { "delta" } else { "eps" },
        a.restarts
    ));
    Ok(done)
}

fn require(name: &str, v: Option<f64>) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{name}")))
}

fn instance(a: &GaussianArgs) -> CliResult<GaussianInstance> {
    Ok(GaussianInstance {
        p_x: require("p-x", a.p_x)?,
        p_a: require("p-a", a.p_a)?,
        t: require("t", a.t)?,
        sigma_y2: require("sigma-y2", a.sigma_y2)?,
        sigma_z2: require("sigma-z2", a.sigma_z2)?,
    })
}

fn gaussian(a: &GaussianArgs) -> CliResult<Done> {
    let done = Done::ok(Vec::new(), a.out.clone());
    let Some(param) = a.sweep else {
        let r = gaussian_lower(&instance(a)?)?;
        let text = if a.json {
            pretty(&r)
        } else {
            let mut s = format!(
                "case {:?}\nupper {}\nlower {}\nlower_conditions_met {}\n",
                r.case_label,
                sig9(r.upper),
                sig9(r.lower),
                r.lower_conditions_met
            );
            if let (Some(l), Some(rh)) = (r.condition_lhs, r.condition_rhs) {
                s += &format!("condition {} >= {}\n", sig9(l), sig9(rh));
            }
            for d in &r.diagnostics {
                s += &format!("note: {d}\n");
            }
            s
        };
        write(a.out.as_deref(), &text)?;
        return Ok(done);
    };

    let (from, to) = (require("from", a.from)?, require("to", a.to)?);
    if a.steps == 0 {
        return Err(CliError::Usage("--steps must be positive".into()));
    }
    let grid: Vec<f64> = if a.steps == 1 {
        vec![from]
    } else {
        (0..a.steps).map(|i| from + (to - from) * i as f64 / (a.steps - 1) as f64).collect()
    };
    let csv = if param == SweepParam::H {
        let (p_a, p_x, sy) = (require("p-a", a.p_a)?, require("p-x", a.p_x)?, require("sigma-y2", a.sigma_y2)?);
        let mut csv = Csv::new(&["param", "cooperative_capacity"]);
        for h in grid {
            csv.row(&[sig9(h), sig9(cooperative_capacity(h, p_a, p_x, sy)?)]);
        }
        csv
    } else {
        // the swept field need not be given
        let base = GaussianArgs {
            p_x: a.p_x.or(Some(0.0)),
            p_a: a.p_a.or(Some(0.0)),
            t: a.t.or(Some(1.0)),
            sigma_y2: a.sigma_y2.or(Some(1.0)),
            sigma_z2: a.sigma_z2.or(Some(1.0)),
            ..a.clone()
        };
        let given = |v: Option<f64>, p: SweepParam| v.is_some() || p == param;
        for (name, v, p) in [
            ("p-x", a.p_x, SweepParam::Px),
            ("p-a", a.p_a, SweepParam::Pa),
            ("t", a.t, SweepParam::T),
            ("sigma-y2", a.sigma_y2, SweepParam::SigmaY2),
            ("sigma-z2", a.sigma_z2, SweepParam::SigmaZ2),
        ] {
            if !given(v, p) {
                return Err(CliError::Usage(format!("missing --{name}")));
            }
        }
        let inst = instance(&base)?;
        let mut csv = Csv::new(&["param", "case", "upper", "lower", "lower_conditions_met"]);
        for v in grid {
            let mut i = inst;
            match param {
                SweepParam::Px => i.p_x = v,
                SweepParam::Pa => i.p_a = v,
                SweepParam::T => i.t = v,
                SweepParam::SigmaY2 => i.sigma_y2 = v,
                SweepParam::SigmaZ2 => i.sigma_z2 = v,
                SweepParam::H => unreachable!(),
            }
            let r = gaussian_lower(&i)?;
            csv.row(&[
                sig9(v),
                format!("{:?}", r.case_label),
                sig9(r.upper),
                sig9(r.lower),
                r.lower_conditions_met.to_string(),
            ]);
        }
        csv
    };
    write(a.out.as_deref(), &csv.finish())?;
    Ok(done)
}

fn simulate_cmd(a: &SimulateArgs) -> CliResult<Done> {
    let ch = load_channel(&a.channel)?;
    let params = load_params(&a.params, &ch)?;
    let mut inputs = vec![a.channel.clone(), a.params.clone()];
    let mut cfg = match &a.config {
        Some(p) => {
            inputs.push(p.clone());
            serde_json::from_str::<SimConfig>(&read(p)?)
                .map_err(|e| covert_adsi::Error::Parse(format!("{}: {e}", p.display())))?
        }
        None => SimConfig::default(),
    };
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.bits_m = a.bits_m.unwrap_or(cfg.bits_m);
    cfg.bits_k = a.bits_k.unwrap_or(cfg.bits_k);
    cfg.bits_i = a.bits_i.unwrap_or(cfg.bits_i);
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.cap = a.cap.unwrap_or(cfg.cap);

    let mut done = Done::ok(inputs, a.out.clone());
    done.seed = Some(cfg.seed);
    done.resolved = Some(serde_json::json!(cfg));
    let Some(list) = &a.n_sweep else {
        let report = simulate(&ch, &params, &cfg)?;
        write(a.out.as_deref(), &pretty(&report))?;
        if report.degenerate_mass > 0.0 {
            done.notes.push(format!("degenerate encoder mass {}", report.degenerate_mass));
        }
        return Ok(done);
    };

    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be positive".into()));
    }
    let ns = list
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("--n-sweep `{list}`: expected a comma list of blocklengths")))?;
    let bits = |rate: Option<f64>, fixed: u32, n: usize| match rate {
        Some(r) => (r * n as f64).floor() as u32,
        None => fixed,
    };
    let mut csv = Csv::new(&[
        "n",
        "bits_m",
        "bits_k",
        "seeds",
        "mean_covert_div",
        "mean_per_symbol_div",
        "mean_p_err",
    ]);
    for n in ns {
        let c = SimConfig {
            n,
            bits_m: bits(a.rate_m, cfg.bits_m, n),
            bits_k: bits(a.rate_k, cfg.bits_k, n),
            ..cfg.clone()
        };
        let (mut div, mut per, mut err) = (0.0, 0.0, 0.0);
        for j in 0..a.seeds {
            let r = simulate(&ch, &params, &SimConfig { seed: cfg.seed + j, ..c.clone() })?;
            div += r.covert_div;
            per += r.per_symbol_div;
            err += r.p_err;
        }
        let k = a.seeds as f64;
        csv.row(&[
            n.to_string(),
            c.bits_m.to_string(),
            c.bits_k.to_string(),
            a.seeds.to_string(),
            sig9(div / k),
            sig9(per / k),
            sig9(err / k),
        ]);
    }
    write(a.out.as_deref(), &csv.finish())?;
    Ok(done)
}

fn fixtures(a: &FixturesArgs) -> CliResult<Done> {
    fs::create_dir_all(&a.out_dir).map_err(|source| CliError::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    for (name, text) in bundled_files()? {
        let path = a.out_dir.join(&name);
        write(Some(&path), &text)?;
        println!("{}", path.display());
    }
    Ok(Done::ok(Vec::new(), None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_inclusive_and_snapped() {
        let g = parse_grid("g", "0:0.5:0.01").unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g[50], 0.5);
        assert_eq!(g[30], 0.3);
        assert_eq!(parse_grid("g", "0.4").unwrap(), vec![0.4]);
        assert_eq!(parse_grid("g", "0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("g", "1:0:0.1").is_err());
        assert!(parse_grid("g", "0:1:0").is_err());
        assert!(parse_grid("g", ",").is_err());
    }
}
