//! Closed-form rates for writing on a rewritable BSC memory, the Gaussian
//! channel bounds, the cooperative Gaussian capacity, and the dirty binary
//! example.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::probkit::h2;

/// Default number of β grid points.
pub const DEFAULT_BETA_GRID: usize = 4096;

/// Smallest grid the β search accepts.
pub const MIN_BETA_GRID: usize = 1000;

/// Feasibility conditions are accepted down to this (rounding) margin.
const COND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewriteResult {
    pub rate: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub feasible: bool,
    /// Value of the non-causal side condition (feasible iff ≥ 0).
    pub condition: Option<f64>,
}

fn check_unit(name: &str, v: f64, lo: f64, hi: f64, open_lo: bool) -> Result<()> {
    let ok = if open_lo { v > lo && v <= hi } else { v >= lo && v <= hi };
    if !ok || v.is_nan() {
        let l = if open_lo { "(" } else { "[" };
        return Err(Error::Domain(format!("{name} = {v} outside {l}{lo}, {hi}]")));
    }
    Ok(())
}

/// Causal covert capacity with noiseless feedback: `h(ε) − h(ε²)`.
pub fn bsc_rewrite_causal(eps: f64) -> Result<RewriteResult> {
    check_unit("eps", eps, 0.0, 0.5, false)?;
    let e2 = eps * eps;
    let den = 1.0 - 2.0 * e2;
    Ok(RewriteResult {
        rate: h2(eps) - h2(e2),
        alpha: eps * (1.0 - eps) / den,
        beta: None,
        feasible: true,
        condition: None,
    })
}

#[derive(Debug, Clone, Copy)]
struct Point {
    beta: f64,
    rate: f64,
    alpha: f64,
    cond: f64,
    valid: bool,
}

impl Point {
    fn feasible(&self) -> bool {
        self.valid && self.cond >= -COND_TOL
    }

    fn result(&self) -> RewriteResult {
        RewriteResult {
            rate: self.rate,
            alpha: self.alpha,
            beta: Some(self.beta),
            feasible: self.feasible(),
            condition: Some(self.cond),
        }
    }
}

fn noncausal_point(eps: f64, beta: f64) -> Point {
    let e2 = eps * eps;
    let alpha = (eps - e2) / (1.0 - 2.0 * e2 - beta * (eps - e2));
    let k = 1.0 - beta * eps;
    let rate = (1.0 - alpha) * (h2(eps) - h2(e2))
        + alpha * k * (h2((1.0 - beta) * eps / k) - h2((1.0 - beta) * e2 / k));
    let cond = alpha * (h2(e2 * (1.0 - beta) + eps * beta) - k * h2((1.0 - beta) * e2 / k))
        - alpha * (h2(eps) - k * h2((1.0 - beta) * eps / k));
    Point {
        beta,
        rate,
        alpha,
        cond,
        valid: (0.0..=1.0).contains(&alpha),
    }
}

fn noisy_noncausal_point(eps: f64, delta: f64, beta: f64) -> Point {
    let c = eps * (1.0 - delta) + (1.0 - eps) * delta;
    let p0 = eps * delta + eps * c;
    let p1 = (1.0 - eps) * (1.0 - delta) + beta * (1.0 - eps) * delta + (1.0 - beta) * (1.0 - eps) * c;
    let alpha = if (p1 - p0).abs() < 1e-15 { 0.0 } else { (eps - p0) / (p1 - p0) };
    let k = 1.0 - c * beta;
    let inner = (c * eps * (1.0 - beta) + eps * delta) / k;
    let side = if c > 0.0 { h2((1.0 - eps) * delta / c) } else { 0.0 };
    let rate = h2(eps)
        - (1.0 - alpha) * h2((1.0 - eps) * (1.0 - delta + c))
        - alpha * k * h2(inner)
        - alpha * c * beta * side
        - alpha * h2(c)
        + alpha * k * h2(c * (1.0 - beta) / k);
    let cond = alpha
        * (h2(c * eps * (1.0 - beta) + beta * eps * (1.0 - delta) + eps * delta)
            - k * h2(inner)
            - c * beta * side)
        - alpha * (h2(c) - k * h2(c * (1.0 - beta) / k));
    Point {
        beta,
        rate,
        alpha,
        cond,
        valid: (0.0..=1.0).contains(&alpha),
    }
}

/// Non-causal scheme evaluated at one β (no search).
pub fn bsc_rewrite_noncausal_at(eps: f64, beta: f64) -> Result<RewriteResult> {
    check_unit("eps", eps, 0.0, 0.5, true)?;
    check_unit("beta", beta, 0.0, 1.0, false)?;
    Ok(noncausal_point(eps, beta).result())
}

/// Noisy non-causal scheme evaluated at one β (no search).
pub fn bsc_rewrite_noisy_noncausal_at(eps: f64, delta: f64, beta: f64) -> Result<RewriteResult> {
    check_unit("eps", eps, 0.0, 0.5, true)?;
    check_unit("delta", delta, 0.0, 0.5, false)?;
    check_unit("beta", beta, 0.0, 1.0, false)?;
    Ok(noisy_noncausal_point(eps, delta, beta).result())
}

/// Grid search over β ∈ [0,1], then golden-section refinement inside the
/// neighbouring cells. Ties go to the smallest β.
fn search_beta(grid: usize, f: impl Fn(f64) -> Point) -> Result<RewriteResult> {
    if grid < MIN_BETA_GRID {
        return Err(Error::Domain(format!(
            "beta grid of {grid} points is below the minimum of {MIN_BETA_GRID}"
        )));
    }
    let step = 1.0 / (grid - 1) as f64;
    let pts: Vec<Point> = (0..grid).map(|i| f(i as f64 * step)).collect();
    let argmax = |pred: &dyn Fn(&Point) -> bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, p) in pts.iter().enumerate() {
            if pred(p) && best.is_none_or(|b| p.rate > pts[b].rate) {
                best = Some(i);
            }
        }
        best
    };
    let best = match argmax(&|p| p.valid) {
        Some(i) if pts[i].feasible() => Some(i),
        _ => argmax(&|p| p.feasible()),
    };
    let Some(i) = best else {
        let mut r = pts[0].result();
        r.rate = 0.0;
        r.feasible = false;
        return Ok(r);
    };
    let lo = i.saturating_sub(1) as f64 * step;
    let hi = ((i + 1).min(grid - 1)) as f64 * step;
    let refined = golden_max(lo, hi, |b| {
        let p = f(b);
        if p.feasible() {
            p.rate
        } else {
            f64::NEG_INFINITY
        }
    });
    let cand = f(refined);
    if cand.feasible() && cand.rate > pts[i].rate {
        Ok(cand.result())
    } else {
        Ok(pts[i].result())
    }
}

fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if b - a < 1e-13 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

/// Non-causal covert rate with noiseless feedback, maximized over β.
pub fn bsc_rewrite_noncausal(eps: f64, grid: usize) -> Result<RewriteResult> {
    check_unit("eps", eps, 0.0, 0.5, true)?;
    search_beta(grid, |b| noncausal_point(eps, b))
}

/// Causal covert capacity when the feedback passes a BSC(δ).
pub fn bsc_rewrite_noisy_causal(eps: f64, delta: f64) -> Result<RewriteResult> {
    check_unit("eps", eps, 0.0, 0.5, false)?;
    check_unit("delta", delta, 0.0, 0.5, false)?;
    let p0 = noisy_error(eps, delta);
    let den = 1.0 - 2.0 * p0;
    Ok(RewriteResult {
        rate: h2(eps) - h2(p0),
        alpha: if den > 0.0 { (eps - p0) / den } else { 0.0 },
        beta: None,
        feasible: true,
        condition: None,
    })
}

/// Error probability of the rewrite-on-mismatch strategy,
/// `εδ(2−ε) + ε²(1−δ)`, written so δ = ½ returns ε exactly.
fn noisy_error(eps: f64, delta: f64) -> f64 {
    eps - (eps - eps * eps) * (1.0 - 2.0 * delta)
}

/// Non-causal covert rate with noisy feedback, maximized over β.
pub fn bsc_rewrite_noisy_noncausal(eps: f64, delta: f64, grid: usize) -> Result<RewriteResult> {
    check_unit("eps", eps, 0.0, 0.5, true)?;
    check_unit("delta", delta, 0.0, 0.5, false)?;
    search_beta(grid, |b| noisy_noncausal_point(eps, delta, b))
}

/// Rate `1 − h(p)` of uniform inputs with rewrite-on-mismatch and no
/// covertness requirement; a reference value for the unconstrained search.
pub fn bsc_rewrite_causal_nocovert(eps: f64, delta: f64) -> Result<f64> {
    check_unit("eps", eps, 0.0, 0.5, false)?;
    check_unit("delta", delta, 0.0, 0.5, false)?;
    Ok(1.0 - h2(noisy_error(eps, delta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianInstance {
    pub p_x: f64,
    pub p_a: f64,
    pub t: f64,
    pub sigma_y2: f64,
    pub sigma_z2: f64,
}

impl GaussianInstance {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("T", self.t), ("sigma_Y^2", self.sigma_y2), ("sigma_Z^2", self.sigma_z2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{n} = {v} must be positive")));
            }
        }
        for (n, v) in [("P_X", self.p_x), ("P_A", self.p_a)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{n} = {v} must be non-negative")));
            }
        }
        Ok(())
    }

    /// `2√(T P_X) − P_X`, the action power where Cases A and B meet.
    pub fn boundary(&self) -> f64 {
        2.0 * (self.t * self.p_x).sqrt() - self.p_x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GaussianCase {
    A,
    B,
    C,
}

/// Case label; ties resolve to the earlier letter.
pub fn gaussian_case(inst: &GaussianInstance) -> GaussianCase {
    let b = inst.boundary();
    if inst.p_a <= b && inst.p_x + inst.p_a < 2.0 * inst.t {
        GaussianCase::A
    } else if inst.p_a > b && inst.p_x < inst.t {
        GaussianCase::B
    } else {
        GaussianCase::C
    }
}

fn half_log1p(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

pub fn rate_a(inst: &GaussianInstance) -> Result<f64> {
    let GaussianInstance { p_x, p_a, t, sigma_y2: s, .. } = *inst;
    let den = 4.0 * t * s * (t - p_a + s);
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "Case A denominator T - P_A + sigma_Y^2 = {} is not positive",
            t - p_a + s
        )));
    }
    let sum = p_x + p_a;
    let num = 4.0 * t * s * sum + 4.0 * t * t * p_x - (t + s) * sum * sum;
    Ok(half_log1p(num / den))
}

pub fn rate_b(inst: &GaussianInstance) -> f64 {
    let root = (inst.t * inst.p_x).sqrt();
    let gap = inst.t.sqrt() - inst.p_x.sqrt();
    half_log1p((2.0 * root - inst.p_x) / (gap * gap + inst.sigma_y2))
}

pub fn rate_c(inst: &GaussianInstance) -> f64 {
    half_log1p(inst.t / inst.sigma_y2)
}

/// Converse bound on the covert capacity.
pub fn gaussian_upper(inst: &GaussianInstance) -> Result<f64> {
    inst.validate()?;
    match gaussian_case(inst) {
        GaussianCase::A => rate_a(inst),
        GaussianCase::B => Ok(rate_b(inst)),
        GaussianCase::C => Ok(rate_c(inst)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianBoundResult {
    pub case_label: GaussianCase,
    pub upper: f64,
    pub lower: f64,
    pub lower_conditions_met: bool,
    /// Left and right sides of the Case A key condition, when evaluated.
    pub condition_lhs: Option<f64>,
    pub condition_rhs: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Achievability bound with its side conditions.
pub fn gaussian_lower(inst: &GaussianInstance) -> Result<GaussianBoundResult> {
    let upper = gaussian_upper(inst)?;
    let case_label = gaussian_case(inst);
    let GaussianInstance { p_x, p_a, t, sigma_y2: sy, sigma_z2: sz } = *inst;
    let mut diagnostics = Vec::new();
    let (met, lhs, rhs) = match case_label {
        GaussianCase::A => {
            diagnostics.push("sigma_1 read as sigma_Y in the Case A condition".to_string());
            let alpha = (p_x + p_a) / (2.0 * t);
            let t_star = (1.0 - alpha) * (1.0 - alpha) * t;
            let px_star = t - t_star - p_a;
            if px_star <= 0.0 {
                diagnostics.push(format!("P_X* = {px_star} is not positive"));
                (false, None, None)
            } else {
                let lhs = 0.5 * (px_star * (t + sy) / (sy * (px_star + sy) * (t - p_a + sy))).log2();
                let sq = (px_star + sy) * (px_star + sy);
                let r1 = 0.5
                    * ((t + sz)
                        / ((1.0 - alpha) * (1.0 - alpha) * t * (px_star * sz + sy * sy) + sz * sq))
                        .log2();
                let r2 = 0.5 * ((t + sz) / ((t + sz - p_a) * sq)).log2();
                let rhs = r1.max(r2);
                if lhs < rhs {
                    diagnostics.push(format!("key condition fails: {lhs} < {rhs}"));
                }
                (lhs >= rhs, Some(lhs), Some(rhs))
            }
        }
        GaussianCase::B | GaussianCase::C => {
            if sy <= sz {
                (true, None, None)
            } else {
                diagnostics.push(format!("sigma_Y^2 = {sy} exceeds sigma_Z^2 = {sz}"));
                (false, None, None)
            }
        }
    };
    Ok(GaussianBoundResult {
        case_label,
        upper,
        lower: if met { upper } else { 0.0 },
        lower_conditions_met: met,
        condition_lhs: lhs,
        condition_rhs: rhs,
        diagnostics,
    })
}

/// Capacity when the action and the channel input cooperate against a
/// known interference scaled by `h`.
pub fn cooperative_capacity(h: f64, p_a: f64, p_x: f64, sigma_y2: f64) -> Result<f64> {
    if !(sigma_y2 > 0.0) {
        return Err(Error::Domain(format!("sigma_Y^2 = {sigma_y2} must be positive")));
    }
    if !(p_a >= 0.0) || !(p_x >= 0.0) {
        return Err(Error::Domain("powers must be non-negative".into()));
    }
    let beta = if p_a == 0.0 { 1.0 } else { (p_x / p_a).sqrt().min(1.0) };
    let g = (h - 1.0) * (h - 1.0);
    Ok(half_log1p(g * beta * beta * p_a / sigma_y2))
}

/// `h(λ) − h(β)` with `λ = αβ + (1−α)(1−β)`, returned unclamped.
pub fn dirty_binary_example_rate(alpha: f64, beta: f64) -> Result<f64> {
    check_unit("alpha", alpha, 0.0, 1.0, false)?;
    check_unit("beta", beta, 0.0, 1.0, false)?;
    let lambda = alpha * beta + (1.0 - alpha) * (1.0 - beta);
    Ok(h2(lambda) - h2(beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn causal_examples() {
        close(bsc_rewrite_causal(0.5).unwrap().rate, 0.188722, 1e-6);
        assert_eq!(bsc_rewrite_causal(0.0).unwrap().rate, 0.0);
        close(bsc_rewrite_causal(0.25).unwrap().rate, 0.811278124459 - 0.337290067450, 1e-9);
        assert!(bsc_rewrite_causal(0.6).is_err());
        assert!(bsc_rewrite_causal(-0.1).is_err());
    }

    #[test]
    fn noncausal_examples() {
        let r = bsc_rewrite_noncausal(0.5, DEFAULT_BETA_GRID).unwrap();
        assert!(r.feasible);
        assert!(r.rate >= 0.200094 - 1e-5, "{}", r.rate);
        let b = r.beta.unwrap();
        assert!((b - 0.36064).abs() <= 1e-3, "{b}");
        close(r.alpha, 1.0 / (2.0 - b), 1e-9);
        for eps in [0.1, 0.25, 0.4, 0.5] {
            let c = bsc_rewrite_causal(eps).unwrap();
            let at0 = bsc_rewrite_noncausal_at(eps, 0.0).unwrap();
            close(at0.rate, c.rate, 1e-12);
            close(at0.alpha, c.alpha, 1e-12);
            assert!(bsc_rewrite_noncausal(eps, 1000).unwrap().rate >= c.rate - 1e-9);
        }
        assert!(bsc_rewrite_noncausal(0.0, 4096).is_err());
        assert!(bsc_rewrite_noncausal(0.3, 10).is_err());
    }

    #[test]
    fn noisy_causal_examples() {
        for eps in [0.0, 0.1, 0.3, 0.5] {
            let a = bsc_rewrite_noisy_causal(eps, 0.0).unwrap();
            let b = bsc_rewrite_causal(eps).unwrap();
            close(a.rate, b.rate, 1e-12);
            assert_eq!(bsc_rewrite_noisy_causal(eps, 0.5).unwrap().rate, 0.0);
        }
        let r = bsc_rewrite_noisy_causal(0.4, 0.1).unwrap();
        close(r.rate, h2(0.4) - h2(0.208), 1e-12);
        close(r.rate, 0.23335, 1e-4);
    }

    #[test]
    fn noisy_noncausal_reduces_to_noiseless() {
        for eps in [0.05, 0.25, 0.4, 0.5] {
            for i in 0..=20 {
                let b = i as f64 / 20.0;
                let n = noncausal_point(eps, b);
                let m = noisy_noncausal_point(eps, 0.0, b);
                close(m.rate, n.rate, 1e-9);
                close(m.alpha, n.alpha, 1e-9);
                close(m.cond, n.cond, 1e-9);
            }
        }
    }

    #[test]
    fn noisy_noncausal_beta_zero_is_causal() {
        for (eps, delta) in [(0.48, 0.05), (0.3, 0.2), (0.4, 0.5)] {
            let p = noisy_noncausal_point(eps, delta, 0.0);
            close(p.rate, bsc_rewrite_noisy_causal(eps, delta).unwrap().rate, 1e-12);
            close(p.cond, 0.0, 1e-12);
        }
    }

    #[test]
    fn noisy_noncausal_gain_only_at_small_delta() {
        let nc = bsc_rewrite_noisy_noncausal(0.48, 0.005, DEFAULT_BETA_GRID).unwrap();
        let c = bsc_rewrite_noisy_causal(0.48, 0.005).unwrap();
        assert!(nc.feasible);
        assert!(nc.rate > c.rate + 1e-3, "{} vs {}", nc.rate, c.rate);
        // by δ = 0.05 the best β is 0 and the two schemes coincide
        let nc = bsc_rewrite_noisy_noncausal(0.48, 0.05, DEFAULT_BETA_GRID).unwrap();
        let c = bsc_rewrite_noisy_causal(0.48, 0.05).unwrap();
        assert_eq!(nc.beta, Some(0.0));
        close(nc.rate, c.rate, 1e-12);
    }

    #[test]
    fn constrained_re_search_skips_infeasible_maximizer() {
        // unconstrained maximum at this point violates the side condition
        let p = noisy_noncausal_point(0.4, 0.1, 0.5);
        assert!(p.cond < 0.0);
        let r = bsc_rewrite_noisy_noncausal(0.4, 0.1, 2048).unwrap();
        assert!(r.feasible);
        assert!(r.condition.unwrap() >= -COND_TOL);
    }

    #[test]
    fn nocovert_reference_dominates_covert() {
        for (e, d) in [(0.25, 0.0), (0.4, 0.1), (0.5, 0.3)] {
            let free = bsc_rewrite_causal_nocovert(e, d).unwrap();
            assert!(free >= bsc_rewrite_noisy_causal(e, d).unwrap().rate);
        }
        close(bsc_rewrite_causal_nocovert(0.25, 0.0).unwrap(), 1.0 - h2(0.0625), 1e-15);
    }

    fn inst(t: f64, p_x: f64, p_a: f64, sy: f64, sz: f64) -> GaussianInstance {
        GaussianInstance { p_x, p_a, t, sigma_y2: sy, sigma_z2: sz }
    }

    #[test]
    fn gaussian_cases() {
        assert_eq!(gaussian_case(&inst(4.0, 4.0, 4.0, 1.0, 1.0)), GaussianCase::C);
        assert_eq!(gaussian_case(&inst(4.0, 1.0, 1.0, 1.0, 1.0)), GaussianCase::A);
        assert_eq!(gaussian_case(&inst(4.0, 1.0, 4.0, 1.0, 1.0)), GaussianCase::B);
        // tie on the A/B boundary goes to A
        assert_eq!(gaussian_case(&inst(4.0, 1.0, 3.0, 1.0, 1.0)), GaussianCase::A);
    }

    #[test]
    fn gaussian_bounds() {
        close(gaussian_upper(&inst(4.0, 4.0, 4.0, 1.0, 2.0)).unwrap(), 1.160964, 1e-6);
        let l = gaussian_lower(&inst(4.0, 4.0, 4.0, 1.0, 2.0)).unwrap();
        assert!(l.lower_conditions_met);
        assert_eq!(l.lower, l.upper);
        let b = gaussian_lower(&inst(4.0, 1.0, 4.0, 2.0, 1.0)).unwrap();
        assert_eq!(b.case_label, GaussianCase::B);
        assert!(!b.lower_conditions_met);
        assert_eq!(b.lower, 0.0);
        let a = gaussian_lower(&inst(4.0, 1.0, 1.0, 0.5, 4.0)).unwrap();
        assert_eq!(a.case_label, GaussianCase::A);
        assert!(a.condition_lhs.is_some() && a.condition_rhs.is_some());
        assert!(a.diagnostics.iter().any(|d| d.contains("sigma_1")));
        assert_eq!(gaussian_upper(&inst(4.0, 0.0, 0.0, 1.0, 1.0)).unwrap(), 0.0);
        assert!(gaussian_upper(&inst(0.0, 1.0, 1.0, 1.0, 1.0)).is_err());
        assert!(gaussian_upper(&inst(1.0, -1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn rate_a_degenerate_denominator() {
        assert!(rate_a(&inst(1.0, 0.0, 3.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn ab_boundary_continuity() {
        for (t, p_x) in [(4.0, 1.0), (2.0, 0.3), (9.0, 4.0)] {
            let mut g = inst(t, p_x, 0.0, 0.7, 1.0);
            g.p_a = g.boundary();
            close(rate_a(&g).unwrap(), rate_b(&g), 1e-12);
        }
    }

    #[test]
    fn cooperative_examples() {
        assert_eq!(cooperative_capacity(1.0, 3.0, 2.0, 1.0).unwrap(), 0.0);
        close(cooperative_capacity(2.0, 1.0, 4.0, 1.0).unwrap(), 0.5, 1e-12);
        close(cooperative_capacity(2.0, 4.0, 1.0, 1.0).unwrap(), 0.5, 1e-12);
        assert_eq!(cooperative_capacity(2.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(cooperative_capacity(2.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn dirty_binary_examples() {
        close(dirty_binary_example_rate(0.5, 0.2).unwrap(), 0.278072, 1e-6);
        close(dirty_binary_example_rate(0.5, 0.3).unwrap(), 1.0 - h2(0.3), 1e-15);
        for a in [0.0, 0.3, 1.0] {
            close(dirty_binary_example_rate(a, 0.5).unwrap(), 0.0, 1e-15);
        }
        // λ stays between β and 1−β, so the rate is never negative
        assert_eq!(dirty_binary_example_rate(1.0, 0.2).unwrap(), 0.0);
        assert!(dirty_binary_example_rate(0.1, 0.2).unwrap() > 0.0);
        assert!(dirty_binary_example_rate(1.2, 0.2).is_err());
    }
}
