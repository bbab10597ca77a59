//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Runs without the libtest harness so the lines always print.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use covert_adsi::analytic::{
    bsc_rewrite_causal, bsc_rewrite_noisy_causal, bsc_rewrite_noisy_noncausal, bsc_rewrite_noncausal,
    cooperative_capacity, gaussian_lower, gaussian_upper, rate_a, rate_b, GaussianCase, GaussianInstance,
    DEFAULT_BETA_GRID,
};
use covert_adsi::channels::{rewrite_noiseless, rewrite_noisy, RewriteSpec};
use covert_adsi::codesim::{build_codebook, covertness_gap, simulate, SimConfig, DEFAULT_SIM_CAP};
use covert_adsi::fixtures::{
    bsco_channel, bsco_params, dirty_binary_channel, dirty_binary_params, rewrite_bsc_channel,
    rewrite_causal_params, BscoSpec, DIRTY_BETA,
};
use covert_adsi::probkit::{index_symbols, Axis, CondKernel, JointPmf};
use covert_adsi::regions::{
    eval_region, optimize_region, verify_construction, FactorKind, OptConfig, RegionId, RegionParams, Tolerances,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C1_RATE: f64 = 0.188722;
const C1_TOL: f64 = 1e-5;
const C1_BUDGET: Duration = Duration::from_millis(1);

const C2_RATE: f64 = 0.200094;
const C2_TOL: f64 = 1e-5;
const C2_BETA: f64 = 0.36064;
const C2_BETA_TOL: f64 = 1e-3;
const C2_ALPHA_TOL: f64 = 1e-9;
const C2_BUDGET: Duration = Duration::from_secs(1);

const C3_POINTS: usize = 50;
const C3_TOL: f64 = 1e-9;

const C4_EPS: f64 = 0.48;
const C4_POINTS: usize = 100;
const C4_TOL: f64 = 1e-12;

const C5_INSTANCES: usize = 100;
const C5_TOL: f64 = 1e-9;

const C6_RATE: f64 = 0.5;
const C6_TOL: f64 = 1e-12;

const C7_RATE_TOL: f64 = 1e-9;
const C7_DIV_TOL: f64 = 1e-12;
const C7_BUDGET: Duration = Duration::from_secs(5);

const C8_TOL: f64 = 1e-9;

const C9_EPS: f64 = 0.25;
const C9_RESTARTS: usize = 64;
const C9_U: usize = 3;
const C9_BELOW: f64 = 0.01;
const C9_ABOVE: f64 = 1e-6;
const C9_BUDGET: Duration = Duration::from_secs(60);

const C10_JOINTS: usize = 200;
const C10_CONFIGS: usize = 20;
const C10_INFO_TOL: f64 = 1e-10;
const C10_CELL_TOL: f64 = 1e-12;

const C11_EPS: f64 = 0.3;
const C11_SEEDS: u64 = 32;
const C11_BUDGET: Duration = Duration::from_secs(300);

/// Binary entropy in bits, kept local so the checks do not lean on the
/// library under test.
fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Result<String, String> {
    let r = bsc_rewrite_causal(0.5).map_err(|e| e.to_string())?;
    ensure((r.rate - C1_RATE).abs() <= C1_TOL, format!("rate {}", r.rate))?;
    ensure((r.rate - (h(0.5) - h(0.25))).abs() <= 1e-12, "closed form mismatch")?;
    let reps = 1000;
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(bsc_rewrite_causal(std::hint::black_box(0.5)).unwrap());
    }
    let per = t.elapsed() / reps;
    ensure(per < C1_BUDGET, format!("{per:?} per call"))?;
    Ok(format!("rate {:.6}, {per:?} per call", r.rate))
}

fn criterion_2() -> Result<String, String> {
    let t = Instant::now();
    let r = bsc_rewrite_noncausal(0.5, DEFAULT_BETA_GRID).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    let beta = r.beta.ok_or("no maximizing beta")?;
    ensure(r.rate >= C2_RATE - C2_TOL, format!("rate {}", r.rate))?;
    ensure((beta - C2_BETA).abs() <= C2_BETA_TOL, format!("beta {beta}"))?;
    ensure((r.alpha - 1.0 / (2.0 - beta)).abs() <= C2_ALPHA_TOL, format!("alpha {}", r.alpha))?;
    ensure(took < C2_BUDGET, format!("{took:?}"))?;
    Ok(format!("rate {:.6} at beta {beta:.5}, {took:?}", r.rate))
}

fn criterion_3() -> Result<String, String> {
    for i in 1..=C3_POINTS {
        let eps = 0.5 * i as f64 / C3_POINTS as f64;
        let base = bsc_rewrite_causal(eps).map_err(|e| e.to_string())?.rate;
        let at0 = bsc_rewrite_noisy_causal(eps, 0.0).map_err(|e| e.to_string())?.rate;
        let at_half = bsc_rewrite_noisy_causal(eps, 0.5).map_err(|e| e.to_string())?.rate;
        ensure((at0 - base).abs() <= C3_TOL, format!("eps {eps}: {at0} vs {base}"))?;
        ensure(at_half == 0.0, format!("eps {eps}: rate at delta 1/2 is {at_half}"))?;
    }
    Ok(format!("{C3_POINTS} eps values"))
}

fn criterion_4() -> Result<String, String> {
    let mut feasible = 0;
    let mut worst = f64::INFINITY;
    for i in 0..C4_POINTS {
        let delta = 0.01 + 0.49 * i as f64 / (C4_POINTS - 1) as f64;
        let nc = bsc_rewrite_noisy_noncausal(C4_EPS, delta, DEFAULT_BETA_GRID).map_err(|e| e.to_string())?;
        let c = bsc_rewrite_noisy_causal(C4_EPS, delta).map_err(|e| e.to_string())?;
        if !nc.feasible {
            continue;
        }
        feasible += 1;
        worst = worst.min(nc.rate - c.rate);
        ensure(
            nc.rate >= c.rate - C4_TOL,
            format!("delta {delta}: non-causal {} < causal {}", nc.rate, c.rate),
        )?;
    }
    ensure(feasible > 0, "no feasible grid point")?;
    Ok(format!("{feasible}/{C4_POINTS} feasible, min margin {worst:.3e}"))
}

fn criterion_5() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut c_checked = 0;
    for _ in 0..C5_INSTANCES {
        let t = rng.random_range(0.5..10.0);
        let p_x = t * rng.random_range(0.01..0.99);
        let sigma_y2 = rng.random_range(0.1..5.0);
        let sigma_z2 = rng.random_range(0.1..5.0);
        let mut inst = GaussianInstance { p_x, p_a: 0.0, t, sigma_y2, sigma_z2 };
        inst.p_a = inst.boundary();
        let ra = rate_a(&inst).map_err(|e| e.to_string())?;
        let rb = rate_b(&inst);
        ensure((ra - rb).abs() <= C5_TOL, format!("{inst:?}: R_A {ra} vs R_B {rb}"))?;

        // P_X >= T rules out Case B, P_X + P_A >= 2T rules out Case A
        let big_px = t * rng.random_range(1.0..3.0);
        let big = GaussianInstance {
            p_x: big_px,
            p_a: (2.0 * t - big_px).max(0.0) + rng.random_range(0.0..5.0),
            t,
            sigma_y2: sigma_y2.min(sigma_z2),
            sigma_z2: sigma_y2.max(sigma_z2),
        };
        let lo = gaussian_lower(&big).map_err(|e| e.to_string())?;
        ensure(lo.case_label == GaussianCase::C, format!("{big:?} is not Case C"))?;
        let up = gaussian_upper(&big).map_err(|e| e.to_string())?;
        ensure(lo.lower_conditions_met && lo.lower == up, format!("{big:?}: {} vs {up}", lo.lower))?;
        c_checked += 1;
    }
    Ok(format!("{C5_INSTANCES} boundary instances, {c_checked} Case C instances"))
}

fn criterion_6() -> Result<String, String> {
    for (p_a, p_x, s) in [(1.0, 4.0, 1.0), (0.3, 0.1, 2.0), (7.0, 0.0, 0.5)] {
        let c = cooperative_capacity(1.0, p_a, p_x, s).map_err(|e| e.to_string())?;
        ensure(c == 0.0, format!("h = 1 gives {c}"))?;
    }
    let c = cooperative_capacity(2.0, 1.0, 4.0, 1.0).map_err(|e| e.to_string())?;
    ensure((c - C6_RATE).abs() <= C6_TOL, format!("{c}"))?;
    Ok(format!("C(2) = {c}"))
}

fn criterion_7() -> Result<String, String> {
    let t = Instant::now();
    let ch = dirty_binary_channel(DIRTY_BETA).map_err(|e| e.to_string())?;
    let p = dirty_binary_params(&ch, 0.5).map_err(|e| e.to_string())?;
    let r = eval_region(&ch, RegionId::Cor2C, &p).map_err(|e| e.to_string())?;
    ensure((r.rate - (1.0 - h(DIRTY_BETA))).abs() <= C7_RATE_TOL, format!("rate {}", r.rate))?;
    ensure(r.covert_div.abs() <= C7_DIV_TOL, format!("covert_div {}", r.covert_div))?;
    ensure(r.feasible, "construction reported infeasible")?;
    for n in [1, 2, 4, 8] {
        let cfg = SimConfig {
            n,
            bits_m: 2,
            bits_k: 1,
            bits_i: 0,
            trials: 200,
            seed: 11,
            cap: DEFAULT_SIM_CAP,
        };
        let rep = simulate(&ch, &p, &cfg).map_err(|e| e.to_string())?;
        ensure(rep.covert_div == 0.0, format!("n = {n}: covert_div {}", rep.covert_div))?;
    }
    let took = t.elapsed();
    ensure(took < C7_BUDGET, format!("{took:?}"))?;
    Ok(format!("rate {:.9}, {took:?}", r.rate))
}

fn criterion_8() -> Result<String, String> {
    let spec = BscoSpec::default();
    let ch = bsco_channel(spec).map_err(|e| e.to_string())?;
    let p = bsco_params(&ch, spec).map_err(|e| e.to_string())?;
    let v = verify_construction(&ch, RegionId::Thm3C, &p, Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(v.pass, format!("failures: {:?}", v.failures))?;
    let m = &v.report.measures;
    for (key, want) in [("I(V;Y|A,U)", 1.0), ("I(V;Z)", 0.0), ("I(V;S|A)", 1.0)] {
        let got = *m.get(key).ok_or(format!("{key} not reported"))?;
        ensure((got - want).abs() <= C8_TOL, format!("{key} = {got}"))?;
    }
    Ok(format!("rate {:.6}", v.report.rate))
}

fn criterion_9() -> Result<String, String> {
    let ch = rewrite_bsc_channel(C9_EPS).map_err(|e| e.to_string())?;
    let target = bsc_rewrite_causal(C9_EPS).map_err(|e| e.to_string())?.rate;
    ensure((target - (h(C9_EPS) - h(C9_EPS * C9_EPS))).abs() <= 1e-12, "analytic target")?;
    let cfg = OptConfig {
        restarts: C9_RESTARTS,
        u_size: Some(C9_U),
        seed: 2024,
        ..OptConfig::default()
    };
    let t = Instant::now();
    let o = optimize_region(&ch, RegionId::Cor2C, &cfg).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    let rate = o.report.rate;
    ensure(o.report.feasible, "best point infeasible")?;
    ensure(rate >= target - C9_BELOW, format!("rate {rate} vs {target}"))?;
    ensure(rate <= target + C9_ABOVE, format!("rate {rate} above {target}"))?;
    ensure(took < C9_BUDGET, format!("{took:?}"))?;
    Ok(format!("rate {rate:.9} vs {target:.9}, {took:?}"))
}

fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let r: Vec<f64> = (0..cols).map(|_| rng.random_range(0.0..1.0f64).powi(2)).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

fn criterion_10() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for j in 0..C10_JOINTS {
        let (nx, ny, nz) = (rng.random_range(2..4), rng.random_range(2..4), rng.random_range(2..4));
        // Markov chain X -> Y -> Z
        let px = &random_rows(&mut rng, 1, nx)[0];
        let wy = random_rows(&mut rng, nx, ny);
        let wz = random_rows(&mut rng, ny, nz);
        let mut tensor = Vec::with_capacity(nx * ny * nz);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    tensor.push(px[x] * wy[x][y] * wz[y][z]);
                }
            }
        }
        let joint = JointPmf::new(
            vec![
                Axis::new("X", index_symbols(nx)),
                Axis::new("Y", index_symbols(ny)),
                Axis::new("Z", index_symbols(nz)),
            ],
            tensor,
        )
        .map_err(|e| e.to_string())?;
        let mi = |a: &[&str], b: &[&str], c: &[&str]| joint.conditional_mutual_information(a, b, c).unwrap();
        let chain = mi(&["X"], &["Y"], &[]) + mi(&["X"], &["Z"], &["Y"]);
        ensure(
            (mi(&["X"], &["Y", "Z"], &[]) - chain).abs() <= C10_INFO_TOL,
            format!("chain rule, joint {j}"),
        )?;
        ensure(
            mi(&["X"], &["Z"], &[]) <= mi(&["X"], &["Y"], &[]) + C10_INFO_TOL,
            format!("data processing, joint {j}"),
        )?;
        let p = covert_adsi::probkit::Pmf::from_probs(wy[0].clone()).unwrap();
        let q = covert_adsi::probkit::Pmf::from_probs(wy[1].clone()).unwrap();
        let kl = covert_adsi::probkit::kl_divergence(&p, &q).unwrap();
        let tv = covert_adsi::probkit::total_variation(&p, &q).unwrap();
        ensure(
            tv <= (kl * std::f64::consts::LN_2 / 2.0).sqrt() + 1e-12,
            format!("Pinsker, joint {j}: tv {tv} kl {kl}"),
        )?;
    }

    for c in 0..C10_CONFIGS {
        let beta = rng.random_range(0.05..0.45);
        let ch = dirty_binary_channel(beta).map_err(|e| e.to_string())?;
        let mut p = RegionParams::zeros(RegionId::Cor2C, &ch, 2, 1, false);
        p.set(&ch, FactorKind::PA, random_rows(&mut rng, 1, 2)).unwrap();
        p.set(&ch, FactorKind::PU, random_rows(&mut rng, 2, 2)).unwrap();
        p.set(&ch, FactorKind::PX, random_rows(&mut rng, 4, 2)).unwrap();
        let cfg = SimConfig {
            n: rng.random_range(1..5),
            bits_m: rng.random_range(0..3),
            bits_k: rng.random_range(0..2),
            bits_i: 0,
            trials: 50,
            seed: rng.random(),
            cap: DEFAULT_SIM_CAP,
        };
        let a = simulate(&ch, &p, &cfg).map_err(|e| e.to_string())?;
        let b = simulate(&ch, &p, &cfg).map_err(|e| e.to_string())?;
        ensure(a.pinsker_holds(), format!("config {c}: Pinsker fails {a:?}"))?;
        ensure(
            serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(),
            format!("config {c}: reports differ"),
        )?;
    }

    for eps in [0.1, 0.25, 0.4, 0.48] {
        let plain = rewrite_noiseless(&RewriteSpec::new(CondKernel::bsc(eps).unwrap(), None, "0").unwrap())
            .map_err(|e| e.to_string())?;
        let noisy = rewrite_noisy(
            &RewriteSpec::new(CondKernel::bsc(eps).unwrap(), Some(CondKernel::bsc(0.0).unwrap()), "0").unwrap(),
        )
        .map_err(|e| e.to_string())?;
        ensure(plain.sizes() == noisy.sizes(), "reduction shapes differ")?;
        let worst = plain
            .law_data()
            .iter()
            .zip(noisy.law_data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure(worst <= C10_CELL_TOL, format!("eps {eps}: cell gap {worst}"))?;
        ensure(plain.state_kernel() == noisy.state_kernel(), "state kernels differ")?;
    }
    Ok(format!("{C10_JOINTS} joints, {C10_CONFIGS} sim configs, 4 reductions"))
}

fn criterion_11() -> Result<String, String> {
    let t = Instant::now();
    let ch = rewrite_bsc_channel(C11_EPS).map_err(|e| e.to_string())?;
    let p = rewrite_causal_params(&ch, C11_EPS).map_err(|e| e.to_string())?;
    let mut per_symbol = Vec::new();
    for n in [2usize, 4, 6, 8] {
        let mut acc = 0.0;
        for seed in 0..C11_SEEDS {
            let cfg = SimConfig {
                n,
                bits_m: n as u32 / 2,
                bits_k: n as u32 / 2,
                bits_i: 0,
                trials: 1,
                seed,
                cap: DEFAULT_SIM_CAP,
            };
            let cb = build_codebook(&ch, &p, &cfg).map_err(|e| e.to_string())?;
            acc += covertness_gap(&ch, &cb, cfg.cap).map_err(|e| e.to_string())?.0 / n as f64;
        }
        per_symbol.push(acc / C11_SEEDS as f64);
    }
    for w in per_symbol.windows(2) {
        ensure(w[1] <= w[0], format!("per-symbol gaps {per_symbol:?}"))?;
    }
    let took = t.elapsed();
    ensure(took < C11_BUDGET, format!("{took:?}"))?;
    let shown: Vec<String> = per_symbol.iter().map(|g| format!("{g:.4}")).collect();
    Ok(format!("per-symbol gap n=2,4,6,8: {}, {took:?}", shown.join(" ")))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Result<String, String>); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let mut failed = 0;
    for (id, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {id:>2}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2}: FAIL ({why})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
