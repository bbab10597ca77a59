use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::params::RegionParams;
use super::{RegionId, Tolerances};
use crate::channels::{no_comm_distribution, AdsiChannel};
use crate::error::{Error, Result};
use crate::probkit::{
    compose_dense, kl_slices, marginal_dense, tv_slices, DenseFactor, InfoCache, DEFAULT_CELL_CAP,
};

// variable ids used to address joint axes
const A: usize = 0;
const S: usize = 1;
const U: usize = 2;
const V: usize = 3;
const X: usize = 4;
const Y: usize = 5;
const Z: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Caps {
    pub u_cap: usize,
    pub v_cap: usize,
    pub u_size: usize,
    pub v_size: usize,
    pub within_caps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub region: RegionId,
    pub rate: f64,
    /// The terms whose minimum is the rate.
    pub rate_terms: BTreeMap<String, f64>,
    /// Signed margins of each inequality (positive = satisfied).
    pub slacks: BTreeMap<String, f64>,
    /// Every information quantity the region uses.
    pub measures: BTreeMap<String, f64>,
    /// `D(P_Z || Q_0)` in bits; not finite when `P_Z` leaves `supp Q_0`.
    pub covert_div: f64,
    pub covert_tv: f64,
    /// Largest TV gap between the implied and actual state kernels.
    pub marginal_gap: f64,
    pub feasible: bool,
    pub p_z: Vec<f64>,
    pub q0: Vec<f64>,
    pub caps: Caps,
    pub tolerances: Tolerances,
    /// Set on optimizer output for upper-bound regions.
    pub search_value: Option<String>,
    #[serde(skip)]
    pub(crate) marginal_residual: Vec<f64>,
}

impl RegionReport {
    /// Names of the conditions that fail under the report's tolerances.
    pub fn violations(&self) -> Vec<String> {
        let tol = &self.tolerances;
        let mut out = Vec::new();
        if self.region.is_covert() && !(self.covert_div <= tol.cov) {
            out.push(format!("covertness D(P_Z||Q_0) = {:.3e} > {:.1e}", self.covert_div, tol.cov));
        }
        if self.region.has_marginal_condition() && self.marginal_gap > tol.marg {
            out.push(format!("state marginal gap {:.3e} > {:.1e}", self.marginal_gap, tol.marg));
        }
        for (k, v) in &self.slacks {
            if *v < -tol.slack {
                out.push(format!("{k} (slack {v:.6e})"));
            }
        }
        out
    }

    /// Human-readable constraint table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "region {}", self.region);
        let _ = writeln!(s, "  rate                       {:.9}", self.rate);
        for (k, v) in &self.rate_terms {
            let _ = writeln!(s, "    term {k:<40} {v:.9}");
        }
        let mark = |ok: bool| if ok { "ok " } else { "FAIL" };
        for (k, v) in &self.slacks {
            let _ = writeln!(s, "  [{}] {k:<55} {v:+.9}", mark(*v >= -self.tolerances.slack));
        }
        if self.region.is_covert() {
            let ok = self.covert_div <= self.tolerances.cov;
            let _ = writeln!(s, "  [{}] P_Z = Q_0   D = {:.3e}  TV = {:.3e}", mark(ok), self.covert_div, self.covert_tv);
        }
        if self.region.has_marginal_condition() {
            let ok = self.marginal_gap <= self.tolerances.marg;
            let _ = writeln!(s, "  [{}] state marginal   TV = {:.3e}", mark(ok), self.marginal_gap);
        }
        if let Some(label) = &self.search_value {
            let _ = writeln!(s, "  note: {label}");
        }
        let _ = writeln!(s, "  feasible: {}", self.feasible);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub pass: bool,
    pub failures: Vec<String>,
    pub table: String,
    pub report: RegionReport,
}

pub(crate) fn check_compat(ch: &AdsiChannel, region: RegionId, x_given_a: bool) -> Result<()> {
    if region.is_upper() && ch.general_law() {
        return Err(Error::Domain(format!(
            "{region} needs a law W_YZ|XS; this channel's law depends on the action"
        )));
    }
    if region.is_upper() && x_given_a {
        return Err(Error::Domain(format!("{region} does not accept P_X|AUS")));
    }
    if region == RegionId::Cor3Yz && !ch.y_equals_z() {
        return Err(Error::Domain("COR3_YZ needs a channel with Y = Z".into()));
    }
    Ok(())
}

struct Chain<'a> {
    vars: Vec<usize>,
    factors: Vec<DenseFactor<'a>>,
}

impl<'a> Chain<'a> {
    fn push(&mut self, out: &[(usize, usize)], given: &[usize], table: &'a [f64]) {
        let given = given
            .iter()
            .map(|g| self.vars.iter().position(|v| v == g).expect("given axis defined"))
            .collect();
        self.factors.push(DenseFactor {
            given,
            out_sizes: out.iter().map(|o| o.1).collect(),
            table,
        });
        self.vars.extend(out.iter().map(|o| o.0));
    }
}

/// Joint tensor of the region's factorization and the variable order.
fn build_joint(ch: &AdsiChannel, p: &RegionParams) -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    let (na, ns, nx, ny, nz) = ch.sizes();
    let (nu, nv) = (p.u_size, p.v_size);
    let q = ch.state_kernel().data();
    let law = ch.law_data();
    let px_given: &[usize] = if p.x_given_a { &[A, U, S] } else { &[U, S] };
    let mut c = Chain {
        vars: Vec::new(),
        factors: Vec::new(),
    };
    c.push(&[(A, na)], &[], &p.p_a);
    match p.region {
        RegionId::Thm1Nc | RegionId::Thm3C => {
            c.push(&[(U, nu)], &[A], &p.p_u);
            c.push(&[(V, nv)], &[], &p.p_v);
            if p.region == RegionId::Thm1Nc {
                c.push(&[(S, ns)], &[A, U, V], &p.q_s);
            } else {
                c.push(&[(S, ns)], &[A, V], &p.q_s);
            }
        }
        RegionId::Cor1Nc | RegionId::NoCovertNc | RegionId::Thm2UpperNc => {
            c.push(&[(S, ns)], &[A], q);
            c.push(&[(U, nu)], &[A, S], &p.p_u);
            if p.region == RegionId::Thm2UpperNc {
                c.push(&[(V, nv)], &[U, S], &p.p_v);
            }
        }
        RegionId::Cor2C | RegionId::NoCovertC | RegionId::Cor3Yz | RegionId::Thm4UpperC => {
            c.push(&[(U, nu)], &[A], &p.p_u);
            c.push(&[(S, ns)], &[A], q);
            if p.region == RegionId::Thm4UpperC {
                c.push(&[(V, nv)], &[U, S], &p.p_v);
            }
        }
    }
    c.push(&[(X, nx)], px_given, &p.p_x);
    c.push(&[(Y, ny), (Z, nz)], &[A, S, X], law);
    let (shape, data) = compose_dense(&c.factors, DEFAULT_CELL_CAP)?;
    Ok((c.vars, shape, data))
}

/// Implied `Σ_v Σ_u P_V P_{U|A} Q_{S|AUV}` (or `Σ_v P_V Q_{S|AV}`) minus the
/// channel's `Q_{S|A}`, row by row over `a`.
fn marginal_residual(ch: &AdsiChannel, p: &RegionParams) -> Vec<f64> {
    let (na, ns, _, _, _) = ch.sizes();
    let (nu, nv) = (p.u_size, p.v_size);
    let mut out = vec![0.0; na * ns];
    for a in 0..na {
        for v in 0..nv {
            let pv = p.p_v[v];
            match p.region {
                RegionId::Thm1Nc => {
                    for u in 0..nu {
                        let w = pv * p.p_u[a * nu + u];
                        let row = &p.q_s[((a * nu + u) * nv + v) * ns..][..ns];
                        for s in 0..ns {
                            out[a * ns + s] += w * row[s];
                        }
                    }
                }
                _ => {
                    let row = &p.q_s[(a * nv + v) * ns..][..ns];
                    for s in 0..ns {
                        out[a * ns + s] += pv * row[s];
                    }
                }
            }
        }
        for s in 0..ns {
            out[a * ns + s] -= ch.state_kernel().get(a, s);
        }
    }
    out
}

/// Evaluate at fixed factors. With `strict = false` mutual informations are
/// taken raw (no clamping, no negativity check), which finite differences
/// on unnormalized perturbations need.
pub(crate) fn evaluate(
    ch: &AdsiChannel,
    p: &RegionParams,
    tol: Tolerances,
    q0: &[f64],
    strict: bool,
) -> Result<RegionReport> {
    let (vars, shape, data) = build_joint(ch, p)?;
    let mask = |vs: &[usize]| -> u64 {
        vs.iter()
            .map(|v| 1u64 << vars.iter().position(|w| w == v).expect("variable in joint"))
            .fold(0, |m, b| m | b)
    };
    let mut info = InfoCache::new(&shape, &data);
    let mut measures = BTreeMap::new();
    let mut mi = |name: &str, a: &[usize], b: &[usize], c: &[usize]| -> Result<f64> {
        let v = if strict {
            info.cmi(mask(a), mask(b), mask(c))?
        } else {
            info.cmi_raw(mask(a), mask(b), mask(c))
        };
        measures.insert(name.to_string(), v);
        Ok(v)
    };
    let mut terms: Vec<(&str, f64)> = Vec::new();
    let mut slacks: Vec<(&str, f64)> = Vec::new();
    match p.region {
        RegionId::Thm1Nc => {
            let iauy = mi("I(A,U;Y)", &[A, U], &[Y], &[])?;
            let iusa = mi("I(U;S|A)", &[U], &[S], &[A])?;
            let iauvy = mi("I(A,U,V;Y)", &[A, U, V], &[Y], &[])?;
            let iuvsa = mi("I(U,V;S|A)", &[U, V], &[S], &[A])?;
            let ivyau = mi("I(V;Y|A,U)", &[V], &[Y], &[A, U])?;
            let ivz = mi("I(V;Z)", &[V], &[Z], &[])?;
            let iauvz = mi("I(A,U,V;Z)", &[A, U, V], &[Z], &[])?;
            let iavz = mi("I(A,V;Z)", &[A, V], &[Z], &[])?;
            terms.push(("I(A,U;Y) - I(U;S|A)", iauy - iusa));
            terms.push(("I(A,U,V;Y) - I(U,V;S|A)", iauvy - iuvsa));
            slacks.push(("I(V;Y|A,U) > I(V;Z)", ivyau - ivz));
            slacks.push(("I(A,U,V;Y) >= I(A,U,V;Z)", iauvy - iauvz));
            slacks.push(("I(A,U,V;Y) >= I(A,V;Z) + I(U;S|A)", iauvy - iavz - iusa));
            slacks.push((
                "I(A,U,V;Y) + I(V;Y|A,U) >= I(A,V;Z) + I(U,V;S|A)",
                iauvy + ivyau - iavz - iuvsa,
            ));
        }
        RegionId::Cor1Nc | RegionId::NoCovertNc => {
            let iauy = mi("I(A,U;Y)", &[A, U], &[Y], &[])?;
            let iusa = mi("I(U;S|A)", &[U], &[S], &[A])?;
            terms.push(("I(A,U;Y) - I(U;S|A)", iauy - iusa));
            if p.region == RegionId::Cor1Nc {
                let iauz = mi("I(A,U;Z)", &[A, U], &[Z], &[])?;
                let iaz = mi("I(A;Z)", &[A], &[Z], &[])?;
                slacks.push(("I(A,U;Y) >= I(A,U;Z)", iauy - iauz));
                slacks.push(("I(A,U;Y) >= I(A;Z) + I(U;S|A)", iauy - iaz - iusa));
            }
        }
        RegionId::Thm2UpperNc => {
            let iuy = mi("I(U;Y)", &[U], &[Y], &[])?;
            let iusa = mi("I(U;S|A)", &[U], &[S], &[A])?;
            let iuvy = mi("I(U,V;Y)", &[U, V], &[Y], &[])?;
            let iusva = mi("I(U;S|V,A)", &[U], &[S], &[V, A])?;
            let ivauy = mi("I(V;A,U,Y)", &[V], &[A, U, Y], &[])?;
            let ivz = mi("I(V;Z)", &[V], &[Z], &[])?;
            let ivs = mi("I(V;S)", &[V], &[S], &[])?;
            let floor = ivz - ivs;
            terms.push(("I(U;Y) - I(U;S|A)", iuy - iusa));
            terms.push(("I(U,V;Y) - I(U;S|V,A)", iuvy - iusva));
            terms.push(("I(V;A,U,Y)", ivauy));
            slacks.push(("I(U;Y) - I(U;S|A) >= I(V;Z) - I(V;S)", iuy - iusa - floor));
            slacks.push(("I(U,V;Y) - I(U;S|V,A) >= I(V;Z) - I(V;S)", iuvy - iusva - floor));
            slacks.push(("I(V;A,U,Y) >= I(V;Z) - I(V;S)", ivauy - floor));
        }
        RegionId::Thm3C => {
            let iauy = mi("I(A,U;Y)", &[A, U], &[Y], &[])?;
            let iauvy = mi("I(A,U,V;Y)", &[A, U, V], &[Y], &[])?;
            let ivsa = mi("I(V;S|A)", &[V], &[S], &[A])?;
            let ivyau = mi("I(V;Y|A,U)", &[V], &[Y], &[A, U])?;
            let ivz = mi("I(V;Z)", &[V], &[Z], &[])?;
            let iauvz = mi("I(A,U,V;Z)", &[A, U, V], &[Z], &[])?;
            let iavz = mi("I(A,V;Z)", &[A, V], &[Z], &[])?;
            terms.push(("I(A,U;Y)", iauy));
            terms.push(("I(A,U,V;Y) - I(V;S|A)", iauvy - ivsa));
            slacks.push(("I(V;Y|A,U) > I(V;Z)", ivyau - ivz));
            slacks.push(("I(A,U,V;Y) >= I(A,U,V;Z)", iauvy - iauvz));
            slacks.push((
                "I(A,U,V;Y) + I(V;Y|A,U) >= I(A,V;Z) + I(V;S|A)",
                iauvy + ivyau - iavz - ivsa,
            ));
        }
        RegionId::Cor2C | RegionId::NoCovertC => {
            let iauy = mi("I(A,U;Y)", &[A, U], &[Y], &[])?;
            terms.push(("I(A,U;Y)", iauy));
            if p.region == RegionId::Cor2C {
                let iauz = mi("I(A,U;Z)", &[A, U], &[Z], &[])?;
                slacks.push(("I(A,U;Y) >= I(A,U;Z)", iauy - iauz));
            }
        }
        RegionId::Thm4UpperC => {
            let iuy = mi("I(U;Y)", &[U], &[Y], &[])?;
            let ivz = mi("I(V;Z)", &[V], &[Z], &[])?;
            terms.push(("I(U;Y)", iuy));
            slacks.push(("I(U;Y) >= I(V;Z)", iuy - ivz));
        }
        RegionId::Cor3Yz => {
            let iuy = mi("I(U;Y)", &[U], &[Y], &[])?;
            terms.push(("I(U;Y)", iuy));
        }
    }
    let rate = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    slacks.push(("R >= 0", rate));

    let z_pos = vars.iter().position(|&v| v == Z).expect("Z axis");
    let p_z = marginal_dense(&shape, &data, 1 << z_pos);
    let covert_div = kl_slices(&p_z, q0);
    let covert_tv = tv_slices(&p_z, q0);

    let (marginal_gap, residual) = if p.region.has_marginal_condition() {
        let r = marginal_residual(ch, p);
        let ns = ch.sizes().1;
        let gap = r
            .chunks(ns)
            .enumerate()
            .filter(|(a, _)| p.p_a[*a] > 0.0)
            .map(|(_, row)| 0.5 * row.iter().map(|d| d.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        (gap, r)
    } else {
        (0.0, Vec::new())
    };

    let (u_cap, v_cap) = p.region.caps(ch);
    let caps = Caps {
        u_cap,
        v_cap,
        u_size: p.u_size,
        v_size: p.v_size,
        within_caps: p.u_size <= u_cap && p.v_size <= v_cap,
    };
    let mut report = RegionReport {
        region: p.region,
        rate,
        rate_terms: terms.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        slacks: slacks.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        measures,
        covert_div,
        covert_tv,
        marginal_gap,
        feasible: false,
        p_z,
        q0: q0.to_vec(),
        caps,
        tolerances: tol,
        search_value: None,
        marginal_residual: residual,
    };
    report.feasible = report.violations().is_empty();
    Ok(report)
}

pub(crate) fn prepare(ch: &AdsiChannel, region: RegionId, params: &RegionParams) -> Result<Vec<f64>> {
    if params.region != region {
        return Err(Error::Shape(format!(
            "parameters are shaped for {}, not {region}",
            params.region
        )));
    }
    check_compat(ch, region, params.x_given_a)?;
    params.validate(ch)?;
    Ok(no_comm_distribution(ch).probs().to_vec())
}

/// Evaluate a region at fixed factors under the default tolerances.
/// Infeasible inputs are reported, not rejected.
pub fn eval_region(ch: &AdsiChannel, region: RegionId, params: &RegionParams) -> Result<RegionReport> {
    let q0 = prepare(ch, region, params)?;
    evaluate(ch, params, Tolerances::default(), &q0, true)
}

/// Strict check of a user construction; fails on any violated condition.
pub fn verify_construction(
    ch: &AdsiChannel,
    region: RegionId,
    params: &RegionParams,
    tol: Tolerances,
) -> Result<Verification> {
    let q0 = prepare(ch, region, params)?;
    let report = evaluate(ch, params, tol, &q0, true)?;
    let failures = report.violations();
    Ok(Verification {
        pass: failures.is_empty(),
        failures,
        table: report.table(),
        report,
    })
}

pub(crate) fn state_residual(ch: &AdsiChannel, p: &RegionParams) -> Vec<f64> {
    if p.region.has_marginal_condition() {
        marginal_residual(ch, p)
    } else {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{rewrite_noiseless, Alphabets, Law, RewriteSpec};
    use crate::probkit::{h2, index_symbols, CondKernel};
    use crate::regions::FactorKind;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    /// Y = S, Z = X xor S, S = A xor N with the state noise depending on A.
    fn dirty(beta0: f64, beta1: f64) -> AdsiChannel {
        let bits = index_symbols(2);
        let state = CondKernel::from_rows(vec![vec![1.0 - beta0, beta0], vec![beta1, 1.0 - beta1]]).unwrap();
        let mut rows = Vec::new();
        for x in 0..2 {
            for s in 0..2 {
                let mut r = vec![0.0; 4];
                r[s * 2 + (x ^ s)] = 1.0;
                rows.push(r);
            }
        }
        AdsiChannel::new(
            Alphabets { a: bits.clone(), s: bits.clone(), x: bits.clone(), y: bits.clone(), z: bits },
            state,
            Law::Plain(CondKernel::from_rows(rows).unwrap()),
            "0",
            "0",
        )
        .unwrap()
    }

    fn copy_params(ch: &AdsiChannel) -> RegionParams {
        let mut p = RegionParams::zeros(RegionId::Cor2C, ch, 2, 1, false);
        p.set(ch, FactorKind::PA, vec![vec![0.5, 0.5]]).unwrap();
        p.set_fn(ch, FactorKind::PU, |a, u| (a == u) as u8 as f64).unwrap();
        p.set_fn(ch, FactorKind::PX, |us, x| (us / 2 == x) as u8 as f64).unwrap();
        p
    }

    #[test]
    fn dirty_example_rate_and_covertness() {
        let ch = dirty(0.2, 0.2);
        let r = eval_region(&ch, RegionId::Cor2C, &copy_params(&ch)).unwrap();
        close(r.rate, 1.0 - h2(0.2), 1e-12);
        assert!(r.covert_div.abs() <= 1e-12);
        assert!(r.feasible, "{}", r.table());
    }

    #[test]
    fn mismatched_warden_law_fails_covertness() {
        // Q_0 = Bern(0.3) while the scheme produces Bern(0.25)
        let ch = dirty(0.3, 0.2);
        let v = verify_construction(&ch, RegionId::Cor2C, &copy_params(&ch), Tolerances::default()).unwrap();
        assert!(!v.pass);
        assert!(v.failures.iter().any(|f| f.starts_with("covertness")));
        assert!(v.table.contains("FAIL"));
    }

    #[test]
    fn no_communication_point_is_feasible_everywhere() {
        let ch = rewrite_noiseless(&RewriteSpec::new(CondKernel::bsc(0.3).unwrap(), None, "0").unwrap()).unwrap();
        for region in RegionId::ALL {
            if region == RegionId::Cor3Yz && !ch.y_equals_z() {
                continue;
            }
            let p = RegionParams::no_communication(region, &ch, 2, 2, false);
            let r = eval_region(&ch, region, &p).unwrap();
            close(r.rate, 0.0, 1e-12);
            assert_eq!(r.covert_div, 0.0);
            assert!(r.feasible, "{region}: {}", r.table());
        }
    }

    #[test]
    fn rejects_wrong_shapes_and_regions() {
        let ch = dirty(0.2, 0.2);
        let p = copy_params(&ch);
        assert!(matches!(eval_region(&ch, RegionId::Cor1Nc, &p), Err(Error::Shape(_))));
        let mut q = p.clone();
        q.p_x.pop();
        assert!(matches!(eval_region(&ch, RegionId::Cor2C, &q), Err(Error::Shape(_))));
        let mut q = p.clone();
        q.p_a = vec![0.7, 0.7];
        assert!(matches!(eval_region(&ch, RegionId::Cor2C, &q), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn upper_regions_reject_general_law_and_x_given_a() {
        let ch = crate::channels::rewrite_noisy(
            &RewriteSpec::new(CondKernel::bsc(0.2).unwrap(), Some(CondKernel::bsc(0.1).unwrap()), "0").unwrap(),
        )
        .unwrap();
        let p = RegionParams::no_communication(RegionId::Thm4UpperC, &ch, 2, 2, false);
        assert!(matches!(eval_region(&ch, RegionId::Thm4UpperC, &p), Err(Error::Domain(_))));
        let ch = dirty(0.2, 0.2);
        let p = RegionParams::no_communication(RegionId::Thm2UpperNc, &ch, 2, 2, true);
        assert!(matches!(eval_region(&ch, RegionId::Thm2UpperNc, &p), Err(Error::Domain(_))));
        let p = RegionParams::no_communication(RegionId::Cor3Yz, &ch, 2, 1, false);
        assert!(matches!(eval_region(&ch, RegionId::Cor3Yz, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn params_json_round_trip() {
        let ch = dirty(0.2, 0.2);
        let p = copy_params(&ch);
        let back = RegionParams::from_json(&p.to_json(&ch), &ch).unwrap();
        assert_eq!(back, p);
        let bad = p.to_json(&ch).replace("P_X|US", "P_X|Q");
        assert!(RegionParams::from_json(&bad, &ch).is_err());
    }

    #[test]
    fn report_json_has_contract_fields() {
        let ch = dirty(0.2, 0.2);
        let r = eval_region(&ch, RegionId::Cor2C, &copy_params(&ch)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for k in ["rate", "slacks", "covert_div", "marginal_gap", "feasible"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
    }
}
