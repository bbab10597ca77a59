use covert_adsi::codesim::{
    build_codebook, covertness_gap, induced_warden_distribution, likelihood_encode, product_q0, simulate,
    simulate_error, SimConfig, DEFAULT_SIM_CAP,
};
use covert_adsi::fixtures::{dirty_binary_channel, dirty_binary_params, rewrite_bsc_channel, rewrite_noncausal_params};
use covert_adsi::probkit::{compose_joint, Axis, Factor, Pmf};
use covert_adsi::regions::{FactorKind, RegionId, RegionParams};
use covert_adsi::ErrorKind;

fn cfg(n: usize, bits_m: u32, bits_k: u32, trials: usize, seed: u64) -> SimConfig {
    SimConfig {
        n,
        bits_m,
        bits_k,
        bits_i: 0,
        trials,
        seed,
        cap: DEFAULT_SIM_CAP,
    }
}

#[test]
fn copy_channel_with_distinct_words_never_errs() {
    // beta = 0: the receiver sees the action word itself
    let ch = dirty_binary_channel(0.0).unwrap();
    let p = dirty_binary_params(&ch, 0.5).unwrap();
    let c = cfg(10, 2, 0, 500, 1);
    let cb = build_codebook(&ch, &p, &c).unwrap();
    let words: Vec<&[usize]> = (0..4).map(|m| cb.action_word(m, 0)).collect();
    let distinct = (0..4).all(|i| (i + 1..4).all(|j| words[i] != words[j]));
    assert!(distinct, "seed gives repeated words; pick another");
    let e = simulate_error(&ch, &cb, c.trials, c.seed, c.cap).unwrap();
    assert_eq!(e.errors, 0);
}

#[test]
fn identical_words_give_a_coin_flip() {
    let ch = dirty_binary_channel(0.2).unwrap();
    let p = dirty_binary_params(&ch, 1.0).unwrap();
    let c = cfg(6, 1, 0, 4000, 2);
    let cb = build_codebook(&ch, &p, &c).unwrap();
    assert_eq!(cb.action_word(0, 0), cb.action_word(1, 0));
    let e = simulate_error(&ch, &cb, c.trials, c.seed, c.cap).unwrap();
    let sigma = (0.25 / c.trials as f64).sqrt();
    assert!((e.p_err - 0.5).abs() <= 3.0 * sigma, "{}", e.p_err);
}

#[test]
fn dirty_channel_error_falls_with_blocklength() {
    let ch = dirty_binary_channel(0.2).unwrap();
    let p = dirty_binary_params(&ch, 0.5).unwrap();
    let seeds = 16;
    let mut avg = Vec::new();
    for n in [4, 8, 12] {
        let mut acc = 0.0;
        for seed in 0..seeds {
            acc += simulate(&ch, &p, &cfg(n, 1, 0, 2000, seed)).unwrap().p_err;
        }
        avg.push(acc / seeds as f64);
    }
    assert!(avg[1] < 0.25, "{avg:?}");
    assert!(avg[0] > avg[1] && avg[1] > avg[2], "{avg:?}");
}

#[test]
fn single_letter_distribution_matches_composition() {
    let ch = dirty_binary_channel(0.3).unwrap();
    let mut p = RegionParams::zeros(RegionId::Cor2C, &ch, 2, 1, false);
    p.set(&ch, FactorKind::PA, vec![vec![0.4, 0.6]]).unwrap();
    p.set(&ch, FactorKind::PU, vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
    p.set(&ch, FactorKind::PX, vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.25, 0.75], vec![0.0, 1.0]])
        .unwrap();
    let cb = build_codebook(&ch, &p, &cfg(1, 0, 0, 1, 9)).unwrap();
    let (a, u) = (cb.action_word(0, 0)[0], cb.u_word(0, 0, 0)[0]);
    let w = induced_warden_distribution(&ch, &cb, DEFAULT_SIM_CAP).unwrap();

    let labels = ch.alphabets().clone();
    let joint = compose_joint(&[
        Factor::root("S", &ch.state_kernel().row_pmf(a)),
        Factor::cond(
            &["S"],
            "X",
            &covert_adsi::probkit::CondKernel::new(
                labels.s.clone(),
                labels.x.clone(),
                (0..2).map(|s| p.p_x[(u * 2 + s) * 2..][..2].to_vec()).collect(),
            )
            .unwrap(),
        ),
        Factor::cond_multi(
            &["X", "S"],
            vec![Axis::new("Y", labels.y.clone()), Axis::new("Z", labels.z.clone())],
            &{
                let rows = (0..2)
                    .flat_map(|x| (0..2).map(move |s| (x, s)))
                    .map(|(x, s)| ch.law_row(a, s, x).to_vec())
                    .collect();
                covert_adsi::probkit::CondKernel::new(
                    covert_adsi::probkit::product_symbols(&[&labels.x, &labels.s]),
                    covert_adsi::probkit::product_symbols(&[&labels.y, &labels.z]),
                    rows,
                )
                .unwrap()
            },
        ),
    ])
    .unwrap();
    let z = joint.marginal_pmf("Z").unwrap();
    for (got, want) in w.probs.iter().zip(z.probs()) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn innocent_codebook_is_exactly_covert() {
    let ch = rewrite_bsc_channel(0.3).unwrap();
    let p = RegionParams::no_communication(RegionId::Cor2C, &ch, 2, 1, false);
    for n in [1, 3, 6] {
        let cb = build_codebook(&ch, &p, &cfg(n, 2, 1, 1, 4)).unwrap();
        assert_eq!(covertness_gap(&ch, &cb, DEFAULT_SIM_CAP).unwrap(), (0.0, 0.0));
    }
    let q = product_q0(&ch, 2, DEFAULT_SIM_CAP).unwrap();
    let q0 = Pmf::bernoulli(0.3).unwrap();
    assert!((q[3] - q0.probs()[1] * q0.probs()[1]).abs() < 1e-15);
}

#[test]
fn noncausal_scheme_runs_end_to_end() {
    let ch = rewrite_bsc_channel(0.5).unwrap();
    let p = rewrite_noncausal_params(&ch, 0.5, 0.36064).unwrap();
    let c = SimConfig { bits_i: 2, ..cfg(4, 1, 1, 300, 5) };
    let r = simulate(&ch, &p, &c).unwrap();
    assert!(r.pinsker_holds());
    assert!(r.covert_div.is_finite());
    assert!((0.0..=1.0).contains(&r.p_err));
    let cb = build_codebook(&ch, &p, &c).unwrap();
    let s = cb.u_word(0, 0, 0).to_vec();
    // a zero-weight state word either encodes or reports the degenerate case
    match likelihood_encode(&cb, 0, 0, &s, 0.3) {
        Ok(i) => assert!(i < 4),
        Err(e) => assert_eq!(e.kind(), ErrorKind::Input),
    }
}

#[test]
fn enumeration_cap_names_the_dimension() {
    let ch = dirty_binary_channel(0.2).unwrap();
    let p = dirty_binary_params(&ch, 0.5).unwrap();
    let c = SimConfig { cap: 1 << 10, ..cfg(11, 0, 0, 1, 0) };
    let err = simulate(&ch, &p, &c).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Capacity);
    assert!(err.to_string().contains("|Z|^n"), "{err}");
}
