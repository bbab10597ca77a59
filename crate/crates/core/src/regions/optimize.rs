use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate, prepare, state_residual, RegionReport};
use super::params::{FactorShape, RegionParams};
use super::{RegionId, Tolerances};
use crate::channels::AdsiChannel;
use crate::error::{Error, Result};

/// Search budget and tolerances for [`optimize_region`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Defaults to `min(cap, |X|)`.
    pub u_size: Option<usize>,
    /// Defaults to `min(cap, 2)`; ignored by regions without `V`.
    pub v_size: Option<usize>,
    pub x_given_a: bool,
    /// Penalty doublings.
    pub epochs: usize,
    /// Coordinate sweeps per epoch.
    pub sweeps: usize,
    pub initial_penalty: f64,
    pub tolerances: Tolerances,
    /// Permit auxiliary sizes above the cardinality caps.
    pub allow_over_cap: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            seed: 0,
            restarts: 16,
            u_size: None,
            v_size: None,
            x_given_a: false,
            epochs: 12,
            sweeps: 25,
            initial_penalty: 4.0,
            tolerances: Tolerances::default(),
            allow_over_cap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub seed: u64,
    /// Exact rate after restoration, when the point is feasible.
    pub rate: Option<f64>,
    pub covert_div: f64,
    pub restored: bool,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub params: RegionParams,
    pub report: RegionReport,
    pub trace: Vec<RestartTrace>,
    /// Winning restart; `None` means the no-communication fallback.
    pub best_restart: Option<usize>,
}

const UPPER_LABEL: &str =
    "search value: best point found by the restart search, an under-estimate of the upper bound, not a certified bound";

struct Problem<'a> {
    ch: &'a AdsiChannel,
    q0: Vec<f64>,
    shapes: Vec<FactorShape>,
    tol: Tolerances,
}

impl Problem<'_> {
    fn penalty(&self, r: &RegionReport) -> f64 {
        let mut pen = 0.0;
        if r.region.is_covert() {
            pen += r.p_z.iter().zip(&self.q0).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        }
        pen += r.marginal_residual.iter().map(|d| d * d).sum::<f64>();
        pen += r.slacks.values().map(|s| s.min(0.0).powi(2)).sum::<f64>();
        pen
    }

    fn objective(&self, p: &RegionParams, w: f64) -> f64 {
        match evaluate(self.ch, p, self.tol, &self.q0, false) {
            Ok(r) if r.rate.is_finite() => r.rate - w * self.penalty(&r),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Equality residuals with one redundant component dropped per
    /// distribution, followed by row sums minus one.
    fn residual(&self, p: &RegionParams) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        if p.region.is_covert() {
            let r = evaluate(self.ch, p, self.tol, &self.q0, false)?;
            let nz = r.p_z.len();
            out.extend(r.p_z[..nz - 1].iter().zip(&self.q0).map(|(a, b)| a - b));
        }
        let ns = self.ch.sizes().1;
        for row in state_residual(self.ch, p).chunks(ns) {
            out.extend_from_slice(&row[..ns - 1]);
        }
        for s in &self.shapes {
            for row in p.table(s.kind).chunks(s.cols) {
                out.push(row.iter().sum::<f64>() - 1.0);
            }
        }
        Ok(out)
    }
}

/// Euclidean projection of `v` onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn dirichlet_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let draws: Vec<f64> = (0..cols).map(|_| Exp1.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        out.extend(draws.iter().map(|d| d / sum));
    }
    out
}

fn ascend(pb: &Problem, p: &mut RegionParams, cfg: &OptConfig) {
    let mut steps = vec![0.1; pb.shapes.len()];
    let mut w = cfg.initial_penalty;
    let h = 1e-7;
    for _ in 0..cfg.epochs {
        let mut f = pb.objective(p, w);
        for _ in 0..cfg.sweeps {
            let start = f;
            for (bi, s) in pb.shapes.iter().enumerate() {
                let n = s.rows * s.cols;
                let mut grad = vec![0.0; n];
                for i in 0..n {
                    let old = p.table(s.kind)[i];
                    p.table_mut(s.kind)[i] = old + h;
                    grad[i] = (pb.objective(p, w) - f) / h;
                    p.table_mut(s.kind)[i] = old;
                }
                if grad.iter().any(|g| !g.is_finite()) {
                    continue;
                }
                let saved = p.table(s.kind).to_vec();
                let mut accepted = false;
                for _ in 0..8 {
                    let t = p.table_mut(s.kind);
                    for (i, row) in t.chunks_mut(s.cols).enumerate() {
                        for (j, x) in row.iter_mut().enumerate() {
                            *x = saved[i * s.cols + j] + steps[bi] * grad[i * s.cols + j];
                        }
                        project_simplex(row);
                    }
                    let fnew = pb.objective(p, w);
                    if fnew > f {
                        f = fnew;
                        steps[bi] = (steps[bi] * 1.5).min(10.0);
                        accepted = true;
                        break;
                    }
                    steps[bi] *= 0.5;
                }
                if !accepted {
                    p.table_mut(s.kind).copy_from_slice(&saved);
                    steps[bi] = steps[bi].max(1e-8);
                }
            }
            if f - start <= 1e-13 * (1.0 + f.abs()) {
                break;
            }
        }
        w *= 2.0;
    }
}

/// Gauss-Newton projection onto the equality constraints. Coordinates at
/// zero stay frozen so the point stays inside the simplices.
fn restore(pb: &Problem, p: &mut RegionParams) -> Result<bool> {
    let mut coords: Vec<(usize, usize)> = Vec::new();
    for (bi, s) in pb.shapes.iter().enumerate() {
        for i in 0..s.rows * s.cols {
            coords.push((bi, i));
        }
    }
    let mut frozen: Vec<bool> = coords
        .iter()
        .map(|&(bi, i)| p.table(pb.shapes[bi].kind)[i] < 1e-12)
        .collect();
    for (c, fz) in coords.iter().zip(&frozen) {
        if *fz {
            p.table_mut(pb.shapes[c.0].kind)[c.1] = 0.0;
        }
    }
    let h = 1e-7;
    for _ in 0..60 {
        let r = pb.residual(p)?;
        if r.iter().all(|v| v.abs() < 1e-13) {
            return Ok(true);
        }
        let free: Vec<usize> = (0..coords.len()).filter(|&k| !frozen[k]).collect();
        if free.is_empty() {
            return Ok(false);
        }
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, free.len());
        for (col, &k) in free.iter().enumerate() {
            let (bi, i) = coords[k];
            let kind = pb.shapes[bi].kind;
            let old = p.table(kind)[i];
            p.table_mut(kind)[i] = old + h;
            let rp = pb.residual(p)?;
            p.table_mut(kind)[i] = old;
            for row in 0..m {
                jac[(row, col)] = (rp[row] - r[row]) / h;
            }
        }
        let rv = DVector::from_vec(r);
        let mut gram = &jac * jac.transpose();
        for d in 0..m {
            gram[(d, d)] += 1e-14;
        }
        let y = match gram.clone().cholesky() {
            Some(c) => c.solve(&rv),
            None => match gram.svd(true, true).solve(&rv, 1e-14) {
                Ok(y) => y,
                Err(_) => return Ok(false),
            },
        };
        let delta = -(jac.transpose() * y);
        let mut clipped = false;
        for (col, &k) in free.iter().enumerate() {
            let (bi, i) = coords[k];
            let kind = pb.shapes[bi].kind;
            let v = p.table(kind)[i] + delta[col];
            if v <= 0.0 {
                p.table_mut(kind)[i] = 0.0;
                frozen[k] = true;
                clipped = true;
            } else {
                p.table_mut(kind)[i] = v;
            }
        }
        if !clipped && delta.amax() < 1e-17 {
            break;
        }
    }
    Ok(pb.residual(p)?.iter().all(|v| v.abs() < 1e-12))
}

struct Outcome {
    params: RegionParams,
    report: Option<RegionReport>,
    trace: RestartTrace,
}

fn run_restart(pb: &Problem, region: RegionId, sizes: (usize, usize), cfg: &OptConfig, k: usize) -> Outcome {
    let seed = cfg.seed.wrapping_add(k as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = RegionParams::zeros(region, pb.ch, sizes.0, sizes.1, cfg.x_given_a);
    for s in &pb.shapes {
        *p.table_mut(s.kind) = dirichlet_rows(&mut rng, s.rows, s.cols);
    }
    ascend(pb, &mut p, cfg);
    let needs_restore = region.is_covert() || region.has_marginal_condition();
    let restored = if needs_restore {
        let mut q = p.clone();
        match restore(pb, &mut q) {
            Ok(true) => {
                p = q;
                true
            }
            _ => false,
        }
    } else {
        true
    };
    let report = evaluate(pb.ch, &p, pb.tol, &pb.q0, true).ok();
    let feasible = restored && report.as_ref().is_some_and(|r| r.feasible);
    let trace = RestartTrace {
        restart: k,
        seed,
        rate: feasible.then(|| report.as_ref().map(|r| r.rate)).flatten(),
        covert_div: report.as_ref().map_or(f64::NAN, |r| r.covert_div),
        restored,
        feasible,
    };
    Outcome {
        params: p,
        report: if feasible { report } else { None },
        trace,
    }
}

/// Random-restart penalized coordinate ascent with a final exact
/// feasibility restoration. Deterministic for a fixed seed; restarts run
/// in parallel and are merged by rate, ties to the lowest index.
pub fn optimize_region(ch: &AdsiChannel, region: RegionId, cfg: &OptConfig) -> Result<Optimized> {
    let (u_cap, v_cap) = region.caps(ch);
    let nx = ch.sizes().2;
    let u = cfg.u_size.unwrap_or(u_cap.min(nx).max(1));
    let v = if region.has_v() { cfg.v_size.unwrap_or(v_cap.min(2)) } else { 1 };
    if !cfg.allow_over_cap && (u > u_cap || v > v_cap) {
        return Err(Error::Domain(format!(
            "auxiliary sizes |U| = {u}, |V| = {v} exceed the caps {u_cap}, {v_cap} for {region}"
        )));
    }
    if u == 0 || v == 0 {
        return Err(Error::Domain("auxiliary sizes must be positive".into()));
    }
    let fallback = RegionParams::no_communication(region, ch, u, v, cfg.x_given_a);
    let q0 = prepare(ch, region, &fallback)?;
    let pb = Problem {
        ch,
        q0,
        shapes: fallback.shapes(ch),
        tol: cfg.tolerances,
    };
    let outcomes: Vec<Outcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| run_restart(&pb, region, (u, v), cfg, k))
        .collect();
    let mut best: Option<usize> = None;
    for (k, o) in outcomes.iter().enumerate() {
        if let Some(r) = &o.report {
            if best.is_none_or(|b| r.rate > outcomes[b].report.as_ref().expect("feasible").rate) {
                best = Some(k);
            }
        }
    }
    let trace = outcomes.iter().map(|o| o.trace.clone()).collect();
    let (params, mut report) = match best {
        Some(k) => {
            let o = &outcomes[k];
            (o.params.clone(), o.report.clone().expect("feasible"))
        }
        None => {
            let r = evaluate(ch, &fallback, cfg.tolerances, &pb.q0, true)?;
            (fallback, r)
        }
    };
    if region.is_upper() {
        report.search_value = Some(UPPER_LABEL.to_string());
    }
    Ok(Optimized {
        params,
        report,
        trace,
        best_restart: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5];
        project_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
        let mut v = vec![2.0, 0.0, -1.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
        let mut v = vec![0.4, 0.4, 0.4];
        project_simplex(&mut v);
        for x in &v {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dirichlet_rows_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = dirichlet_rows(&mut rng, 4, 3);
        for row in t.chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(row.iter().all(|&x| x > 0.0));
        }
    }
}
