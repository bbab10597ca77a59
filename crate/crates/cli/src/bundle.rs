use covert_adsi::codesim::SimConfig;
use covert_adsi::fixtures::{
    bsco_channel, bsco_params, dirty_binary_channel, dirty_binary_params, rewrite_bsc_channel, rewrite_causal_params,
    BscoSpec, DIRTY_BETA, REWRITE_EPS,
};
use covert_adsi::Result;

/// Crossover of the small rewrite example used for blocklength sweeps.
pub const SIM_REWRITE_EPS: f64 = 0.3;

/// Every bundled example file as `(name, contents)`.
pub fn bundled_files() -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let dirty = dirty_binary_channel(DIRTY_BETA)?;
    out.push(("dirty_channel.json".into(), dirty.to_json()));
    out.push(("dirty_cor2_params.json".into(), dirty_binary_params(&dirty, 0.5)?.to_json(&dirty)));
    out.push((
        "dirty_sim.json".into(),
        sim_json(&SimConfig {
            n: 8,
            bits_m: 2,
            bits_k: 1,
            trials: 2000,
            seed: 1,
            ..SimConfig::default()
        }),
    ));

    let spec = BscoSpec::default();
    let bsco = bsco_channel(spec)?;
    out.push(("bsco_channel.json".into(), bsco.to_json()));
    out.push(("bsco_thm3_params.json".into(), bsco_params(&bsco, spec)?.to_json(&bsco)));

    for eps in REWRITE_EPS.into_iter().chain([SIM_REWRITE_EPS]) {
        let ch = rewrite_bsc_channel(eps)?;
        out.push((format!("rewrite_bsc_eps{eps}_channel.json"), ch.to_json()));
        out.push((format!("rewrite_bsc_eps{eps}_cor2_params.json"), rewrite_causal_params(&ch, eps)?.to_json(&ch)));
    }
    out.push((
        "rewrite_sim.json".into(),
        sim_json(&SimConfig {
            n: 4,
            bits_m: 2,
            bits_k: 2,
            trials: 2000,
            seed: 0,
            ..SimConfig::default()
        }),
    ));

    for (_, text) in &mut out {
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }
    Ok(out)
}

fn sim_json(cfg: &SimConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}
