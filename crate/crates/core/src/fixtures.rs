//! Worked example channels and constructions used by the tests, the CLI
//! bundles and the benches.

use crate::analytic::{bsc_rewrite_causal, bsc_rewrite_noncausal_at};
use crate::channels::{rewrite_noiseless, AdsiChannel, Alphabets, Law, RewriteSpec};
use crate::error::{Error, Result};
use crate::probkit::{index_symbols, symbols, CondKernel};
use crate::regions::{FactorKind, RegionId, RegionParams};

pub const DIRTY_BETA: f64 = 0.2;
pub const REWRITE_EPS: [f64; 4] = [0.25, 0.4, 0.48, 0.5];

/// Binary dirty-state channel: `S = A xor N`, `N ~ Bern(beta)`, the receiver
/// sees `Y = S` and the warden `Z = X xor S`. Innocent symbols are `0`.
pub fn dirty_binary_channel(beta: f64) -> Result<AdsiChannel> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta = {beta} is not a probability")));
    }
    let bits = index_symbols(2);
    let state = CondKernel::from_rows(vec![vec![1.0 - beta, beta], vec![beta, 1.0 - beta]])?;
    let mut rows = Vec::new();
    for x in 0..2 {
        for s in 0..2 {
            let mut r = vec![0.0; 4];
            r[s * 2 + (x ^ s)] = 1.0;
            rows.push(r);
        }
    }
    AdsiChannel::new(
        Alphabets {
            a: bits.clone(),
            s: bits.clone(),
            x: bits.clone(),
            y: bits.clone(),
            z: bits,
        },
        state,
        Law::Plain(CondKernel::from_rows(rows)?),
        "0",
        "0",
    )
}

/// `A ~ Bern(alpha)`, `U = X = A`: the warden sees the bare state noise.
pub fn dirty_binary_params(ch: &AdsiChannel, alpha: f64) -> Result<RegionParams> {
    let mut p = RegionParams::zeros(RegionId::Cor2C, ch, 2, 1, false);
    p.set(ch, FactorKind::PA, vec![vec![1.0 - alpha, alpha]])?;
    p.set_fn(ch, FactorKind::PU, |a, u| (a == u) as u8 as f64)?;
    p.set_fn(ch, FactorKind::PX, |us, x| (us / 2 == x) as u8 as f64)?;
    Ok(p)
}

/// Crossovers and state noise of the antipodal-output example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscoSpec {
    /// Warden crossover for `S_Z = 0, 1`.
    pub warden: [f64; 2],
    /// Receiver crossover for `S_Y = 0, 1`.
    pub receiver: [f64; 2],
    /// `S_Z = A xor N_Z`, `N_Z ~ Bern(lambda)`.
    pub lambda: f64,
}

impl Default for BscoSpec {
    fn default() -> Self {
        BscoSpec {
            warden: [0.05, 0.1],
            receiver: [0.2, 0.3],
            lambda: 0.2,
        }
    }
}

/// Channel with state `S = (S_Y, S_Z)`, `S_Y ~ Bern(1/2)` independent of
/// the action. Inputs are `{0, 1, -1}`: `0` is the innocent symbol and
/// makes both outputs uniform. The receiver observes `(Y~, S_Y)`.
pub fn bsco_channel(spec: BscoSpec) -> Result<AdsiChannel> {
    let all = [spec.warden[0], spec.warden[1], spec.receiver[0], spec.receiver[1], spec.lambda];
    if all.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("crossovers and lambda must be probabilities".into()));
    }
    let nz = |a: usize, sz: usize| if sz == a { 1.0 - spec.lambda } else { spec.lambda };
    let state = CondKernel::from_fn(index_symbols(2), symbols(&["y0z0", "y0z1", "y1z0", "y1z1"]), |a, s| {
        0.5 * nz(a, s % 2)
    })?;
    // output index 0 is +1, 1 is -1; input index 1 is +1, 2 is -1
    let bsco = |x: usize, eps: f64, out: usize| match x {
        0 => 0.5,
        _ if x - 1 == out => 1.0 - eps,
        _ => eps,
    };
    let mut rows = Vec::new();
    for x in 0..3 {
        for s in 0..4 {
            let (sy, sz) = (s / 2, s % 2);
            let mut r = vec![0.0; 8];
            for yt in 0..2 {
                for z in 0..2 {
                    let y = yt * 2 + sy;
                    r[y * 2 + z] = bsco(x, spec.receiver[sy], yt) * bsco(x, spec.warden[sz], z);
                }
            }
            rows.push(r);
        }
    }
    AdsiChannel::new(
        Alphabets {
            a: index_symbols(2),
            s: symbols(&["y0z0", "y0z1", "y1z0", "y1z1"]),
            x: symbols(&["0", "1", "-1"]),
            y: symbols(&["1_0", "1_1", "-1_0", "-1_1"]),
            z: symbols(&["1", "-1"]),
        },
        state,
        Law::Plain(CondKernel::from_rows(rows)?),
        "0",
        "0",
    )
}

/// `V = S_Y`, `U` uniform over `{1, -1}` independent of the action, `X = U`.
pub fn bsco_params(ch: &AdsiChannel, spec: BscoSpec) -> Result<RegionParams> {
    let mut p = RegionParams::zeros(RegionId::Thm3C, ch, 2, 2, false);
    p.set(ch, FactorKind::PA, vec![vec![0.5, 0.5]])?;
    p.set_fn(ch, FactorKind::PU, |_, _| 0.5)?;
    p.set(ch, FactorKind::PV, vec![vec![0.5, 0.5]])?;
    let lambda = spec.lambda;
    p.set_fn(ch, FactorKind::QS, |av, s| {
        let (a, v) = (av / 2, av % 2);
        let (sy, sz) = (s / 2, s % 2);
        if sy != v {
            0.0
        } else if sz == a {
            1.0 - lambda
        } else {
            lambda
        }
    })?;
    p.set_fn(ch, FactorKind::PX, |us, x| (us / 4 + 1 == x) as u8 as f64)?;
    Ok(p)
}

/// Noiseless rewrite reduction of a BSC first-round channel.
pub fn rewrite_bsc_channel(eps: f64) -> Result<AdsiChannel> {
    rewrite_noiseless(&RewriteSpec::new(CondKernel::bsc(eps)?, None, "0")?)
}

/// Causal scheme on the noiseless rewrite reduction: write `A = U` with
/// `A ~ Bern(alpha)` and rewrite only when the read-back differs from `U`.
/// `alpha` is chosen so that the final content has the innocent law.
pub fn rewrite_causal_params(ch: &AdsiChannel, eps: f64) -> Result<RegionParams> {
    let alpha = bsc_rewrite_causal(eps)?.alpha;
    let mut p = RegionParams::zeros(RegionId::Cor2C, ch, 2, 1, false);
    p.set(ch, FactorKind::PA, vec![vec![1.0 - alpha, alpha]])?;
    p.set_fn(ch, FactorKind::PU, |a, u| (a == u) as u8 as f64)?;
    p.set_fn(ch, FactorKind::PX, |us, x| {
        let (u, s) = (us / 2, us % 2);
        let target = if u == s { 0 } else { u + 1 };
        (x == target) as u8 as f64
    })?;
    Ok(p)
}

/// Non-causal scheme on the noiseless rewrite reduction: `A ~ Bern(alpha)`;
/// after a failed `1` the encoder keeps the `0` with probability `beta`
/// (`U = 1`), otherwise it rewrites every mismatch with `A`.
pub fn rewrite_noncausal_params(ch: &AdsiChannel, eps: f64, beta: f64) -> Result<RegionParams> {
    let alpha = bsc_rewrite_noncausal_at(eps, beta)?.alpha;
    let mut p = RegionParams::zeros(RegionId::Cor1Nc, ch, 2, 1, true);
    p.set(ch, FactorKind::PA, vec![vec![1.0 - alpha, alpha]])?;
    p.set_fn(ch, FactorKind::PU, |as_, u| {
        let (a, s) = (as_ / 2, as_ % 2);
        match (a == 1 && s == 0, u) {
            (true, 1) => beta,
            (true, _) => 1.0 - beta,
            (false, u) => (u == 0) as u8 as f64,
        }
    })?;
    p.set_fn(ch, FactorKind::PX, |aus, x| {
        let (a, u, s) = (aus / 4, (aus / 2) % 2, aus % 2);
        let target = if s == a || u == 1 { 0 } else { a + 1 };
        (x == target) as u8 as f64
    })?;
    Ok(p)
}
