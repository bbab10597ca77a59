//! Exact small-blocklength simulation of the single-block covert scheme:
//! random codebooks, the likelihood encoder, MAP decoding, and the exact
//! induced warden distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{no_comm_distribution, AdsiChannel};
use crate::error::{Error, Result};
use crate::probkit::{kl_slices, tv_slices};
use crate::regions::{RegionId, RegionParams};

pub const DEFAULT_SIM_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Blocklength.
    pub n: usize,
    /// `|M| = 2^bits_m`.
    pub bits_m: u32,
    /// `|K| = 2^bits_k` shared key values.
    pub bits_k: u32,
    /// Local indices per `(m, k)` for the non-causal encoder; must be 0 for
    /// causal parameters.
    #[serde(default)]
    pub bits_i: u32,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub cap: u128,
}

fn default_cap() -> u128 {
    DEFAULT_SIM_CAP
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 4,
            bits_m: 1,
            bits_k: 0,
            bits_i: 0,
            trials: 1000,
            seed: 0,
            cap: DEFAULT_SIM_CAP,
        }
    }
}

/// Per-letter tables derived once from the channel and the parameters.
#[derive(Debug, Clone, PartialEq)]
struct Tables {
    na: usize,
    nu: usize,
    ns: usize,
    ny: usize,
    nz: usize,
    q_s: Vec<f64>,
    p_u: Vec<f64>,
    /// `Q_{S|AU}`, rows `(a, u)`; all-zero where `P_{U|A}(u|a) = 0`.
    q_s_au: Vec<f64>,
    /// `P_{X|AUS}` rows `(a, u, s)`.
    p_x: Vec<f64>,
    nx: usize,
    /// `Σ_x P(x|a,u,s) W(z|a,s,x)`, rows `(a, u, s)`.
    gz: Vec<f64>,
    gy: Vec<f64>,
}

impl Tables {
    fn new(ch: &AdsiChannel, p: &RegionParams) -> Self {
        let (na, ns, nx, ny, nz) = ch.sizes();
        let nu = p.u_size;
        let q_s: Vec<f64> = (0..na).flat_map(|a| ch.state_kernel().row(a).to_vec()).collect();
        let causal = p.region == RegionId::Cor2C;
        let mut p_u = vec![0.0; na * nu];
        let mut joint = vec![0.0; na * nu * ns];
        for a in 0..na {
            for s in 0..ns {
                for u in 0..nu {
                    let pu = if causal {
                        p.p_u[a * nu + u]
                    } else {
                        p.p_u[(a * ns + s) * nu + u]
                    };
                    joint[(a * nu + u) * ns + s] = q_s[a * ns + s] * pu;
                }
            }
        }
        for a in 0..na {
            for u in 0..nu {
                let row = &joint[(a * nu + u) * ns..][..ns];
                p_u[a * nu + u] = if causal { p.p_u[a * nu + u] } else { row.iter().sum() };
            }
        }
        let mut q_s_au = vec![0.0; na * nu * ns];
        for au in 0..na * nu {
            let row = &joint[au * ns..][..ns];
            let tot: f64 = row.iter().sum();
            if tot > 0.0 {
                for s in 0..ns {
                    q_s_au[au * ns + s] = row[s] / tot;
                }
            }
        }
        let mut p_x = vec![0.0; na * nu * ns * nx];
        let mut gz = vec![0.0; na * nu * ns * nz];
        let mut gy = vec![0.0; na * nu * ns * ny];
        for a in 0..na {
            for u in 0..nu {
                for s in 0..ns {
                    let r = (a * nu + u) * ns + s;
                    let src = if p.x_given_a { r } else { u * ns + s };
                    p_x[r * nx..][..nx].copy_from_slice(&p.p_x[src * nx..][..nx]);
                    for x in 0..nx {
                        let px = p_x[r * nx + x];
                        if px == 0.0 {
                            continue;
                        }
                        for (z, w) in ch.warden_row(a, s, x).into_iter().enumerate() {
                            gz[r * nz + z] += px * w;
                        }
                        for (y, w) in ch.receiver_row(a, s, x).into_iter().enumerate() {
                            gy[r * ny + y] += px * w;
                        }
                    }
                }
            }
        }
        Tables {
            na,
            nu,
            ns,
            ny,
            nz,
            q_s,
            p_u,
            q_s_au,
            p_x,
            nx,
            gz,
            gy,
        }
    }

    fn gz_row(&self, a: usize, u: usize, s: usize) -> &[f64] {
        &self.gz[((a * self.nu + u) * self.ns + s) * self.nz..][..self.nz]
    }

    fn gy_row(&self, a: usize, u: usize, s: usize) -> &[f64] {
        &self.gy[((a * self.nu + u) * self.ns + s) * self.ny..][..self.ny]
    }
}

/// Random codebook with words stored flat: action words indexed
/// `(m, k, t)`, auxiliary words `(m, k, i, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub n: usize,
    pub n_m: usize,
    pub n_k: usize,
    /// Local indices per `(m, k)`; 1 for causal codebooks.
    pub n_i: usize,
    pub causal: bool,
    pub seed: u64,
    pub action_words: Vec<usize>,
    pub u_words: Vec<usize>,
    tables: Tables,
}

impl Codebook {
    pub fn action_word(&self, m: usize, k: usize) -> &[usize] {
        &self.action_words[(m * self.n_k + k) * self.n..][..self.n]
    }

    pub fn u_word(&self, m: usize, k: usize, i: usize) -> &[usize] {
        &self.u_words[((m * self.n_k + k) * self.n_i + i) * self.n..][..self.n]
    }

    /// `(|M|, |K|, n)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_m, self.n_k, self.n)
    }

    /// Likelihood-encoder weights `Q_{S|AU}^n(s^n | a^n, u^n(i))` over `i`.
    fn weights(&self, m: usize, k: usize, s_seq: &[usize]) -> Vec<f64> {
        let t = &self.tables;
        let a = self.action_word(m, k);
        (0..self.n_i)
            .map(|i| {
                let u = self.u_word(m, k, i);
                (0..self.n)
                    .map(|j| t.q_s_au[(a[j] * t.nu + u[j]) * t.ns + s_seq[j]])
                    .product()
            })
            .collect()
    }

    /// Encoder index distribution; uniform when every weight vanishes.
    fn index_law(&self, m: usize, k: usize, s_seq: &[usize]) -> (Vec<f64>, bool) {
        let w = self.weights(m, k, s_seq);
        let tot: f64 = w.iter().sum();
        if tot > 0.0 {
            (w.iter().map(|x| x / tot).collect(), false)
        } else {
            (vec![1.0 / self.n_i as f64; self.n_i], true)
        }
    }
}

fn check_cap(what: &str, base: usize, exp: usize, cap: u128) -> Result<u128> {
    let cells = (base as u128).checked_pow(exp as u32).filter(|_| exp <= u32::MAX as usize);
    match cells {
        Some(c) if c <= cap => Ok(c),
        _ => Err(Error::Capacity {
            what: what.to_string(),
            cells: cells.unwrap_or(u128::MAX),
            cap,
        }),
    }
}

fn sample(row: &[f64], draw: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if draw < acc {
            return i;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn check_inputs(ch: &AdsiChannel, params: &RegionParams, cfg: &SimConfig) -> Result<bool> {
    let causal = match params.region {
        RegionId::Cor2C => true,
        RegionId::Cor1Nc => false,
        r => {
            return Err(Error::Domain(format!(
                "the simulator takes COR1_NC or COR2_C parameters, not {r}"
            )))
        }
    };
    params.validate(ch)?;
    if cfg.n == 0 {
        return Err(Error::Domain("blocklength must be at least 1".into()));
    }
    if causal && cfg.bits_i > 0 {
        return Err(Error::Domain("causal codebooks have no local index; set bits_i = 0".into()));
    }
    let words = 1u128
        .checked_shl(cfg.bits_m + cfg.bits_k + cfg.bits_i)
        .filter(|_| cfg.bits_m + cfg.bits_k + cfg.bits_i < 127)
        .unwrap_or(u128::MAX);
    if words.saturating_mul(cfg.n as u128) > cfg.cap {
        return Err(Error::Capacity {
            what: "codebook symbols |M||K||I| n".into(),
            cells: words.saturating_mul(cfg.n as u128),
            cap: cfg.cap,
        });
    }
    Ok(causal)
}

/// Draw a codebook: action words iid from `P_A`, auxiliary words from
/// `P_{U|A}` along the action word. Non-causal parameters get `2^bits_i`
/// auxiliary words per `(m, k)`, drawn from the `P_{U|A}` they induce.
pub fn build_codebook(ch: &AdsiChannel, params: &RegionParams, cfg: &SimConfig) -> Result<Codebook> {
    let causal = check_inputs(ch, params, cfg)?;
    let tables = Tables::new(ch, params);
    let (n_m, n_k) = (1usize << cfg.bits_m, 1usize << cfg.bits_k);
    let n_i = 1usize << cfg.bits_i;
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut action_words = Vec::with_capacity(n_m * n_k * n);
    let mut u_words = Vec::with_capacity(n_m * n_k * n_i * n);
    for _ in 0..n_m * n_k {
        let a: Vec<usize> = (0..n).map(|_| sample(&params.p_a, rng.random())).collect();
        for _ in 0..n_i {
            for &at in &a {
                let row = &tables.p_u[at * tables.nu..][..tables.nu];
                u_words.push(sample(row, rng.random()));
            }
        }
        action_words.extend(a);
    }
    Ok(Codebook {
        n,
        n_m,
        n_k,
        n_i,
        causal,
        seed: cfg.seed,
        action_words,
        u_words,
        tables,
    })
}

/// Pick the local index with probability proportional to the likelihood
/// of the state word; `draw` is a uniform number in `[0, 1)`.
pub fn likelihood_encode(cb: &Codebook, m: usize, k: usize, s_seq: &[usize], draw: f64) -> Result<usize> {
    if cb.causal {
        return Err(Error::Domain("likelihood encoding needs a non-causal codebook".into()));
    }
    if m >= cb.n_m || k >= cb.n_k {
        return Err(Error::Shape(format!("(m, k) = ({m}, {k}) outside the codebook")));
    }
    if s_seq.len() != cb.n || s_seq.iter().any(|&s| s >= cb.tables.ns) {
        return Err(Error::Shape(format!("state word must have {} symbols below {}", cb.n, cb.tables.ns)));
    }
    let w = cb.weights(m, k, s_seq);
    let tot: f64 = w.iter().sum();
    if tot <= 0.0 {
        return Err(Error::EncoderDegenerate(format!(
            "state word {s_seq:?} has zero likelihood under every index of (m, k) = ({m}, {k})"
        )));
    }
    let probs: Vec<f64> = w.iter().map(|x| x / tot).collect();
    Ok(sample(&probs, draw))
}

/// Exact `P_{Z^n | C}` over `Z^n`, first time index slowest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WardenDistribution {
    pub n: usize,
    pub z_size: usize,
    pub probs: Vec<f64>,
    /// Probability that the non-causal encoder met a state word with zero
    /// likelihood under every index and fell back to a uniform pick.
    pub degenerate_mass: f64,
}

fn kron(acc: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(acc.len() * w.len());
    for &a in acc {
        out.extend(w.iter().map(|&b| a * b));
    }
    out
}

fn kron_all<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    rows.fold(vec![1.0], |acc, w| kron(&acc, w))
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn state_word(mut idx: usize, ns: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % ns;
        idx /= ns;
    }
}

/// `P(z^n | m, k)` and the degenerate-encoder mass for one codeword pair.
fn conditional_z(cb: &Codebook, mk: usize) -> (Vec<f64>, f64) {
    let t = &cb.tables;
    let (m, k) = (mk / cb.n_k, mk % cb.n_k);
    let a = cb.action_word(m, k);
    if cb.causal {
        let u = cb.u_word(m, k, 0);
        let rows: Vec<Vec<f64>> = (0..cb.n)
            .map(|j| {
                let mut h = vec![0.0; t.nz];
                for s in 0..t.ns {
                    let q = t.q_s[a[j] * t.ns + s];
                    for (z, g) in t.gz_row(a[j], u[j], s).iter().enumerate() {
                        h[z] += q * g;
                    }
                }
                h
            })
            .collect();
        return (kron_all(rows.iter().map(|r| r.as_slice())), 0.0);
    }
    let mut acc = vec![0.0; t.nz.pow(cb.n as u32)];
    let mut degenerate = 0.0;
    let mut s = vec![0; cb.n];
    for idx in 0..t.ns.pow(cb.n as u32) {
        state_word(idx, t.ns, &mut s);
        let qs: f64 = (0..cb.n).map(|j| t.q_s[a[j] * t.ns + s[j]]).product();
        if qs == 0.0 {
            continue;
        }
        let (law, degen) = cb.index_law(m, k, &s);
        if degen {
            degenerate += qs;
        }
        for (i, pi) in law.iter().enumerate() {
            if *pi == 0.0 {
                continue;
            }
            let u = cb.u_word(m, k, i);
            let v = kron_all((0..cb.n).map(|j| t.gz_row(a[j], u[j], s[j])));
            let c = qs * pi;
            for (x, y) in acc.iter_mut().zip(&v) {
                *x += c * y;
            }
        }
    }
    (acc, degenerate)
}

/// Pairwise sum of `P(z^n | m, k)` over a range of codeword pairs; the
/// split points depend only on the range, so the result is independent of
/// scheduling.
fn pairwise(cb: &Codebook, lo: usize, hi: usize) -> (Vec<f64>, f64) {
    if hi - lo == 1 {
        return conditional_z(cb, lo);
    }
    let mid = lo + (hi - lo) / 2;
    let ((mut l, dl), (r, dr)) = rayon::join(|| pairwise(cb, lo, mid), || pairwise(cb, mid, hi));
    add_into(&mut l, &r);
    (l, dl + dr)
}

/// Exact warden output distribution induced by the codebook, averaged over
/// uniform messages and keys.
pub fn induced_warden_distribution(ch: &AdsiChannel, cb: &Codebook, cap: u128) -> Result<WardenDistribution> {
    let (na, ns, _, _, nz) = ch.sizes();
    if (na, ns, nz) != (cb.tables.na, cb.tables.ns, cb.tables.nz) {
        return Err(Error::Shape("codebook was built for a different channel".into()));
    }
    check_cap("|Z|^n", nz, cb.n, cap)?;
    if !cb.causal {
        check_cap("|S|^n", ns, cb.n, cap)?;
    }
    let total = cb.n_m * cb.n_k;
    let (mut probs, degenerate) = pairwise(cb, 0, total);
    let scale = total as f64;
    for p in probs.iter_mut() {
        *p /= scale;
    }
    Ok(WardenDistribution {
        n: cb.n,
        z_size: nz,
        probs,
        degenerate_mass: degenerate / scale,
    })
}

/// `Q_0^{⊗n}` in the same layout and multiplication order as the induced
/// distribution.
pub fn product_q0(ch: &AdsiChannel, n: usize, cap: u128) -> Result<Vec<f64>> {
    check_cap("|Z|^n", ch.sizes().4, n, cap)?;
    let q0 = no_comm_distribution(ch).probs().to_vec();
    Ok(kron_all((0..n).map(|_| q0.as_slice())))
}

/// `(D(P_{Z^n|C} || Q_0^{⊗n}), TV)` in bits.
pub fn covertness_gap(ch: &AdsiChannel, cb: &Codebook, cap: u128) -> Result<(f64, f64)> {
    let p = induced_warden_distribution(ch, cb, cap)?;
    let q = product_q0(ch, cb.n, cap)?;
    Ok((kl_slices(&p.probs, &q), tv_slices(&p.probs, &q)))
}

/// Monte Carlo error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub p_err: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub errors: usize,
    pub trials: usize,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

fn run_trial(ch: &AdsiChannel, cb: &Codebook, seed: u64, trial: usize) -> bool {
    let t = &cb.tables;
    let n = cb.n;
    let mut rng = trial_rng(seed, trial);
    let m = rng.random_range(0..cb.n_m);
    let k = rng.random_range(0..cb.n_k);
    let a = cb.action_word(m, k);
    let s: Vec<usize> = (0..n)
        .map(|j| sample(&t.q_s[a[j] * t.ns..][..t.ns], rng.random()))
        .collect();
    let i = if cb.causal {
        0
    } else {
        let (law, _) = cb.index_law(m, k, &s);
        sample(&law, rng.random())
    };
    let u = cb.u_word(m, k, i);
    let y: Vec<usize> = (0..n)
        .map(|j| {
            let r = (a[j] * t.nu + u[j]) * t.ns + s[j];
            let x = sample(&t.p_x[r * t.nx..][..t.nx], rng.random());
            sample(&ch.receiver_row(a[j], s[j], x), rng.random())
        })
        .collect();
    decode(cb, k, &y) != m
}

/// Exact MAP over `(m, i)` given the key; ties go to the lowest message.
fn decode(cb: &Codebook, k: usize, y: &[usize]) -> usize {
    let t = &cb.tables;
    let n = cb.n;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut s = vec![0; n];
    for m in 0..cb.n_m {
        let a = cb.action_word(m, k);
        if cb.causal {
            let u = cb.u_word(m, k, 0);
            let score: f64 = (0..n)
                .map(|j| {
                    (0..t.ns)
                        .map(|sj| t.q_s[a[j] * t.ns + sj] * t.gy_row(a[j], u[j], sj)[y[j]])
                        .sum::<f64>()
                })
                .product();
            if score > best.1 {
                best = (m, score);
            }
            continue;
        }
        let mut scores = vec![0.0; cb.n_i];
        for idx in 0..t.ns.pow(n as u32) {
            state_word(idx, t.ns, &mut s);
            let qs: f64 = (0..n).map(|j| t.q_s[a[j] * t.ns + s[j]]).product();
            if qs == 0.0 {
                continue;
            }
            let (law, _) = cb.index_law(m, k, &s);
            for (i, pi) in law.iter().enumerate() {
                if *pi == 0.0 {
                    continue;
                }
                let u = cb.u_word(m, k, i);
                let like: f64 = (0..n).map(|j| t.gy_row(a[j], u[j], s[j])[y[j]]).product();
                scores[i] += qs * pi * like;
            }
        }
        for sc in scores {
            if sc > best.1 {
                best = (m, sc);
            }
        }
    }
    best.0
}

/// Error frequency over `trials` independent blocks, each with its own
/// counter-derived random stream.
pub fn simulate_error(ch: &AdsiChannel, cb: &Codebook, trials: usize, seed: u64, cap: u128) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is needed".into()));
    }
    if !cb.causal {
        check_cap("|S|^n", ch.sizes().1, cb.n, cap)?;
    }
    let errors = (0..trials)
        .into_par_iter()
        .filter(|&tr| run_trial(ch, cb, seed, tr))
        .count();
    let p = errors as f64 / trials as f64;
    Ok(ErrorEstimate {
        p_err: p,
        half_width: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
        errors,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub region: RegionId,
    pub covert_div: f64,
    pub covert_tv: f64,
    pub per_symbol_div: f64,
    pub p_err: f64,
    pub p_err_half_width: f64,
    pub degenerate_mass: f64,
}

impl SimReport {
    /// `TV <= sqrt(KL_nats / 2)`, with the divergence converted from bits.
    pub fn pinsker_holds(&self) -> bool {
        self.covert_tv <= (self.covert_div * std::f64::consts::LN_2 / 2.0).sqrt() + 1e-9
    }
}

/// Build a codebook, compute the exact covertness gap and estimate the
/// error probability.
pub fn simulate(ch: &AdsiChannel, params: &RegionParams, cfg: &SimConfig) -> Result<SimReport> {
    let cb = build_codebook(ch, params, cfg)?;
    let warden = induced_warden_distribution(ch, &cb, cfg.cap)?;
    let q = product_q0(ch, cfg.n, cfg.cap)?;
    let covert_div = kl_slices(&warden.probs, &q);
    let covert_tv = tv_slices(&warden.probs, &q);
    let err = simulate_error(ch, &cb, cfg.trials, cfg.seed, cfg.cap)?;
    Ok(SimReport {
        config: cfg.clone(),
        region: params.region,
        covert_div,
        covert_tv,
        per_symbol_div: covert_div / cfg.n as f64,
        p_err: err.p_err,
        p_err_half_width: err.half_width,
        degenerate_mass: warden.degenerate_mass,
    })
}
