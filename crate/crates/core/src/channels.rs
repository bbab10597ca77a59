//! Channels with action-dependent states, their validation, and the
//! rewrite / defective-memory reductions.
//!
//! A channel is the tuple `(A, S, X, Y, Z, Q_{S|A}, W_{YZ|XS})`, or the
//! general form `W_{YZ|ASX}` when the law also depends on the action.
//! Internally the law is always stored in the general layout
//! `[a][s][x][y][z]`; `general_law` records which form the channel was
//! declared in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::probkit::{check_row, product_symbols, CondKernel, Pmf};

/// Distinguished first symbol of the second-round input alphabet.
pub const NO_REWRITE: &str = "no-rewrite";

/// The five alphabets of a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabets {
    pub a: Vec<String>,
    pub s: Vec<String>,
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
}

/// Channel law as supplied by the caller.
#[derive(Debug, Clone)]
pub enum Law {
    /// `W_{YZ|XS}`: rows indexed by `(x, s)`, outputs by `(y, z)`.
    Plain(CondKernel),
    /// `W_{YZ|ASX}`: rows indexed by `(a, s, x)`, outputs by `(y, z)`.
    General(CondKernel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdsiChannel {
    alph: Alphabets,
    state_kernel: CondKernel,
    law: Vec<f64>,
    general_law: bool,
    a_independent: bool,
    a0: usize,
    x0: usize,
    filled_rows: Vec<String>,
}

fn position(labels: &[String], sym: &str, what: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == sym)
        .ok_or_else(|| Error::Domain(format!("innocent {what} `{sym}` is not in its alphabet")))
}

impl AdsiChannel {
    pub fn new(
        alph: Alphabets,
        state_kernel: CondKernel,
        law: Law,
        innocent_action: &str,
        innocent_input: &str,
    ) -> Result<Self> {
        for (name, l) in [
            ("A", &alph.a),
            ("S", &alph.s),
            ("X", &alph.x),
            ("Y", &alph.y),
            ("Z", &alph.z),
        ] {
            if l.is_empty() {
                return Err(Error::Shape(format!("alphabet {name} is empty")));
            }
            for (i, s) in l.iter().enumerate() {
                if l[..i].contains(s) {
                    return Err(Error::Shape(format!("alphabet {name} repeats `{s}`")));
                }
            }
        }
        if state_kernel.n_in() != alph.a.len() || state_kernel.n_out() != alph.s.len() {
            return Err(Error::Shape(format!(
                "state kernel is {}x{}, expected |A| x |S| = {}x{}",
                state_kernel.n_in(),
                state_kernel.n_out(),
                alph.a.len(),
                alph.s.len()
            )));
        }
        let (na, ns, nx) = (alph.a.len(), alph.s.len(), alph.x.len());
        let nyz = alph.y.len() * alph.z.len();
        let (general_law, data) = match law {
            Law::Plain(k) => {
                if k.n_in() != nx * ns || k.n_out() != nyz {
                    return Err(Error::Shape(format!(
                        "law W_YZ|XS is {}x{}, expected {}x{nyz}",
                        k.n_in(),
                        k.n_out(),
                        nx * ns
                    )));
                }
                let mut data = Vec::with_capacity(na * ns * nx * nyz);
                for _a in 0..na {
                    for s in 0..ns {
                        for x in 0..nx {
                            data.extend_from_slice(k.row(x * ns + s));
                        }
                    }
                }
                (false, data)
            }
            Law::General(k) => {
                if k.n_in() != na * ns * nx || k.n_out() != nyz {
                    return Err(Error::Shape(format!(
                        "law W_YZ|ASX is {}x{}, expected {}x{nyz}",
                        k.n_in(),
                        k.n_out(),
                        na * ns * nx
                    )));
                }
                (true, k.data().to_vec())
            }
        };
        let block = ns * nx * nyz;
        let a_independent = (1..na).all(|a| data[a * block..(a + 1) * block] == data[..block]);
        let a0 = position(&alph.a, innocent_action, "action")?;
        let x0 = position(&alph.x, innocent_input, "input")?;
        Ok(AdsiChannel {
            alph,
            state_kernel,
            law: data,
            general_law,
            a_independent,
            a0,
            x0,
            filled_rows: Vec::new(),
        })
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alph
    }

    pub fn state_kernel(&self) -> &CondKernel {
        &self.state_kernel
    }

    /// True when the law was declared as `W_{YZ|ASX}`.
    pub fn general_law(&self) -> bool {
        self.general_law
    }

    /// True when the stored law does not vary with the action.
    pub fn a_independent(&self) -> bool {
        self.a_independent
    }

    pub fn innocent_action(&self) -> usize {
        self.a0
    }

    pub fn innocent_input(&self) -> usize {
        self.x0
    }

    /// Posterior rows that had zero reach and were filled uniformly.
    pub fn filled_rows(&self) -> &[String] {
        &self.filled_rows
    }

    pub fn sizes(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.alph.a.len(),
            self.alph.s.len(),
            self.alph.x.len(),
            self.alph.y.len(),
            self.alph.z.len(),
        )
    }

    /// Flattened `(y, z)` distribution for one `(a, s, x)`.
    pub fn law_row(&self, a: usize, s: usize, x: usize) -> &[f64] {
        let (_, ns, nx, ny, nz) = self.sizes();
        let nyz = ny * nz;
        let r = (a * ns + s) * nx + x;
        &self.law[r * nyz..(r + 1) * nyz]
    }

    /// The law laid out as `[a][s][x][y][z]`.
    pub fn law_data(&self) -> &[f64] {
        &self.law
    }

    /// The law as a kernel from `(a, s, x)` to `(y, z)`.
    pub fn law_kernel(&self) -> CondKernel {
        let inputs = product_symbols(&[&self.alph.a, &self.alph.s, &self.alph.x]);
        let outputs = product_symbols(&[&self.alph.y, &self.alph.z]);
        CondKernel::from_raw(inputs, outputs, self.law.clone())
    }

    /// Warden marginal `W_Z(.|a,s,x)`.
    pub fn warden_row(&self, a: usize, s: usize, x: usize) -> Vec<f64> {
        let (_, _, _, ny, nz) = self.sizes();
        let row = self.law_row(a, s, x);
        let mut out = vec![0.0; nz];
        for y in 0..ny {
            for z in 0..nz {
                out[z] += row[y * nz + z];
            }
        }
        out
    }

    /// Receiver marginal `W_Y(.|a,s,x)`.
    pub fn receiver_row(&self, a: usize, s: usize, x: usize) -> Vec<f64> {
        let (_, _, _, ny, nz) = self.sizes();
        let row = self.law_row(a, s, x);
        (0..ny).map(|y| row[y * nz..(y + 1) * nz].iter().sum()).collect()
    }

    /// True when receiver and warden observe the same output.
    pub fn y_equals_z(&self) -> bool {
        if self.alph.y != self.alph.z {
            return false;
        }
        let n = self.alph.y.len();
        self.law
            .chunks(n * n)
            .all(|row| (0..n).all(|y| (0..n).all(|z| y == z || row[y * n + z] == 0.0)))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChannelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_channel()
    }

    pub fn to_json(&self) -> String {
        let file = ChannelFile::from_channel(self);
        serde_json::to_string_pretty(&file).expect("channel serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InnocentFile {
    a: String,
    x: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    alphabets: BTreeMap<String, Vec<String>>,
    state_kernel: Vec<Vec<f64>>,
    law: Value,
    innocent: InnocentFile,
    general_law: bool,
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn lookup<'v>(v: &'v Value, key: &str, path: &str) -> Result<&'v Value> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse(format!("law{path} is not an object")))?;
    obj.get(key)
        .ok_or_else(|| Error::Parse(format!("law{path} has no entry for `{key}`")))
}

fn check_keys(v: &Value, allowed: &[String], path: &str) -> Result<()> {
    if let Some(obj) = v.as_object() {
        for k in obj.keys() {
            if !allowed.contains(k) {
                return Err(Error::Parse(format!("law{path} has unknown symbol `{k}`")));
            }
        }
    }
    Ok(())
}

fn read_matrix(v: &Value, ny: usize, nz: usize, path: &str) -> Result<Vec<f64>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("law{path} is not a |Y|x|Z| matrix")))?;
    if rows.len() != ny {
        return Err(Error::Shape(format!("law{path} has {} rows, expected {ny}", rows.len())));
    }
    let mut out = Vec::with_capacity(ny * nz);
    for r in rows {
        let r = r
            .as_array()
            .ok_or_else(|| Error::Parse(format!("law{path} row is not an array")))?;
        if r.len() != nz {
            return Err(Error::Shape(format!("law{path} row has {} entries, expected {nz}", r.len())));
        }
        for x in r {
            out.push(
                x.as_f64()
                    .ok_or_else(|| Error::Parse(format!("law{path} entry is not a number")))?,
            );
        }
    }
    check_row(&format!("law{path}"), &mut out)?;
    Ok(out)
}

impl ChannelFile {
    fn into_channel(self) -> Result<AdsiChannel> {
        let get = |k: &str| -> Result<Vec<String>> {
            let v = self
                .alphabets
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("alphabets.{k} missing")))?;
            if let Some(bad) = v.iter().find(|s| !valid_symbol(s)) {
                return Err(Error::Parse(format!("symbol `{bad}` uses characters outside [A-Za-z0-9_-]")));
            }
            Ok(v)
        };
        if let Some(k) = self
            .alphabets
            .keys()
            .find(|k| !["A", "S", "X", "Y", "Z"].contains(&k.as_str()))
        {
            return Err(Error::Parse(format!("unknown alphabet `{k}`")));
        }
        let alph = Alphabets {
            a: get("A")?,
            s: get("S")?,
            x: get("X")?,
            y: get("Y")?,
            z: get("Z")?,
        };
        let state_kernel = CondKernel::new(alph.a.clone(), alph.s.clone(), self.state_kernel)?;
        let (ny, nz) = (alph.y.len(), alph.z.len());
        let outputs = product_symbols(&[&alph.y, &alph.z]);
        let law = if self.general_law {
            let mut rows = Vec::new();
            check_keys(&self.law, &alph.a, "")?;
            for a in &alph.a {
                let va = lookup(&self.law, a, "")?;
                check_keys(va, &alph.s, &format!(".{a}"))?;
                for s in &alph.s {
                    let vs = lookup(va, s, &format!(".{a}"))?;
                    check_keys(vs, &alph.x, &format!(".{a}.{s}"))?;
                    for x in &alph.x {
                        let path = format!(".{a}.{s}.{x}");
                        rows.push(read_matrix(lookup(vs, x, &format!(".{a}.{s}"))?, ny, nz, &path)?);
                    }
                }
            }
            let inputs = product_symbols(&[&alph.a, &alph.s, &alph.x]);
            Law::General(CondKernel::new(inputs, outputs, rows)?)
        } else {
            let mut rows = Vec::new();
            check_keys(&self.law, &alph.x, "")?;
            for x in &alph.x {
                let vx = lookup(&self.law, x, "")?;
                check_keys(vx, &alph.s, &format!(".{x}"))?;
                for s in &alph.s {
                    let path = format!(".{x}.{s}");
                    rows.push(read_matrix(lookup(vx, s, &format!(".{x}"))?, ny, nz, &path)?);
                }
            }
            let inputs = product_symbols(&[&alph.x, &alph.s]);
            Law::Plain(CondKernel::new(inputs, outputs, rows)?)
        };
        AdsiChannel::new(alph, state_kernel, law, &self.innocent.a, &self.innocent.x)
    }

    fn from_channel(ch: &AdsiChannel) -> Self {
        let al = &ch.alph;
        let mut alphabets = BTreeMap::new();
        for (k, v) in [("A", &al.a), ("S", &al.s), ("X", &al.x), ("Y", &al.y), ("Z", &al.z)] {
            alphabets.insert(k.to_string(), v.clone());
        }
        let nz = al.z.len();
        let matrix = |a: usize, s: usize, x: usize| -> Value {
            let row = ch.law_row(a, s, x);
            Value::Array(
                row.chunks(nz)
                    .map(|r| Value::Array(r.iter().map(|&p| Value::from(p)).collect()))
                    .collect(),
            )
        };
        let mut law = serde_json::Map::new();
        if ch.general_law {
            for (a, an) in al.a.iter().enumerate() {
                let mut ma = serde_json::Map::new();
                for (s, sn) in al.s.iter().enumerate() {
                    let mut ms = serde_json::Map::new();
                    for (x, xn) in al.x.iter().enumerate() {
                        ms.insert(xn.clone(), matrix(a, s, x));
                    }
                    ma.insert(sn.clone(), Value::Object(ms));
                }
                law.insert(an.clone(), Value::Object(ma));
            }
        } else {
            for (x, xn) in al.x.iter().enumerate() {
                let mut mx = serde_json::Map::new();
                for (s, sn) in al.s.iter().enumerate() {
                    mx.insert(sn.clone(), matrix(0, s, x));
                }
                law.insert(xn.clone(), Value::Object(mx));
            }
        }
        ChannelFile {
            alphabets,
            state_kernel: ch.state_kernel.rows(),
            law: Value::Object(law),
            innocent: InnocentFile {
                a: al.a[ch.a0].clone(),
                x: al.x[ch.x0].clone(),
            },
            general_law: ch.general_law,
        }
    }
}

/// Warden output distribution when nothing is sent:
/// `Q_0(z) = sum_s Q_{S|A}(s|a0) W_Z(z|a0,s,x0)`.
pub fn no_comm_distribution(ch: &AdsiChannel) -> Pmf {
    let (_, ns, _, _, nz) = ch.sizes();
    let mut q0 = vec![0.0; nz];
    for s in 0..ns {
        let qs = ch.state_kernel.get(ch.a0, s);
        if qs == 0.0 {
            continue;
        }
        let w = ch.warden_row(ch.a0, s, ch.x0);
        for z in 0..nz {
            q0[z] += qs * w[z];
        }
    }
    Pmf::new(ch.alph.z.clone(), q0).expect("rows of a valid channel compose to a pmf")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportCheck {
    pub holds: bool,
    /// Warden symbols reachable by some input but outside `supp(Q_0)`.
    pub offenders: Vec<String>,
}

/// Check `supp W_Z(.|x) ⊆ supp Q_0` over every reachable `(a, s, x)`.
pub fn support_condition_holds(ch: &AdsiChannel) -> SupportCheck {
    let q0 = no_comm_distribution(ch);
    let (na, ns, nx, _, nz) = ch.sizes();
    let mut reach = vec![false; nz];
    for a in 0..na {
        for s in 0..ns {
            if ch.state_kernel.get(a, s) == 0.0 {
                continue;
            }
            for x in 0..nx {
                for (z, w) in ch.warden_row(a, s, x).into_iter().enumerate() {
                    if w > 0.0 {
                        reach[z] = true;
                    }
                }
            }
        }
    }
    let offenders: Vec<String> = (0..nz)
        .filter(|&z| reach[z] && q0.probs()[z] == 0.0)
        .map(|z| ch.alph.z[z].clone())
        .collect();
    SupportCheck {
        holds: offenders.is_empty(),
        offenders,
    }
}

/// Two-round writing over `W_{Y|X}`, with optional noisy feedback `Q_{T|Y}`.
#[derive(Debug, Clone)]
pub struct RewriteSpec {
    pub forward: CondKernel,
    pub backward: Option<CondKernel>,
    pub innocent: String,
}

impl RewriteSpec {
    pub fn new(forward: CondKernel, backward: Option<CondKernel>, innocent: &str) -> Result<Self> {
        if let Some(b) = &backward {
            if b.input_labels() != forward.output_labels() {
                return Err(Error::Shape(
                    "backward channel input alphabet must equal forward output alphabet".into(),
                ));
            }
        }
        if forward.input_labels().iter().any(|l| l == NO_REWRITE) {
            return Err(Error::Domain(format!("input alphabet already contains `{NO_REWRITE}`")));
        }
        position(forward.input_labels(), innocent, "input")?;
        Ok(RewriteSpec {
            forward,
            backward,
            innocent: innocent.to_string(),
        })
    }
}

/// Memory with random per-cell defects `D ~ P_D` and law `W_{Y|XD}`.
#[derive(Debug, Clone)]
pub struct DefectSpec {
    pub x_labels: Vec<String>,
    pub defect_prior: Pmf,
    /// Rows indexed by `(x, d)`, x slowest.
    pub law: CondKernel,
    pub innocent: String,
}

impl DefectSpec {
    pub fn new(x_labels: Vec<String>, defect_prior: Pmf, law: CondKernel, innocent: &str) -> Result<Self> {
        if law.n_in() != x_labels.len() * defect_prior.len() {
            return Err(Error::Shape(format!(
                "defect law has {} rows, expected |X||D| = {}",
                law.n_in(),
                x_labels.len() * defect_prior.len()
            )));
        }
        if x_labels.iter().any(|l| l == NO_REWRITE) {
            return Err(Error::Domain(format!("input alphabet already contains `{NO_REWRITE}`")));
        }
        position(&x_labels, innocent, "input")?;
        Ok(DefectSpec {
            x_labels,
            defect_prior,
            law,
            innocent: innocent.to_string(),
        })
    }
}

fn second_round_inputs(x: &[String]) -> Vec<String> {
    let mut v = vec![NO_REWRITE.to_string()];
    v.extend_from_slice(x);
    v
}

/// Put a distribution on the diagonal of the `(y, z)` output since Y = Z.
fn diagonal(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n * n];
    for (i, &v) in p.iter().enumerate() {
        out[i * n + i] = v;
    }
    out
}

/// Noiseless feedback: A = X1, S = Y1, X = {no-rewrite} ∪ X, Y = Z = Y2.
pub fn rewrite_noiseless(spec: &RewriteSpec) -> Result<AdsiChannel> {
    if spec.backward.is_some() {
        return Err(Error::Domain("noiseless reduction given a backward channel".into()));
    }
    let w = &spec.forward;
    let xs = w.input_labels().to_vec();
    let ys = w.output_labels().to_vec();
    let x2 = second_round_inputs(&xs);
    let ny = ys.len();
    let mut rows = Vec::with_capacity(x2.len() * ny);
    for xi in 0..x2.len() {
        for s in 0..ny {
            let y2: Vec<f64> = if xi == 0 {
                (0..ny).map(|y| if y == s { 1.0 } else { 0.0 }).collect()
            } else {
                w.row(xi - 1).to_vec()
            };
            rows.push(diagonal(&y2));
        }
    }
    let law = CondKernel::from_raw(
        product_symbols(&[&x2, &ys]),
        product_symbols(&[&ys, &ys]),
        rows.concat(),
    );
    AdsiChannel::new(
        Alphabets {
            a: xs,
            s: ys.clone(),
            x: x2,
            y: ys.clone(),
            z: ys,
        },
        w.clone(),
        Law::Plain(law),
        &spec.innocent,
        &spec.innocent,
    )
}

/// Noisy feedback through `Q_{T|Y}`: S = T and the no-rewrite row is the
/// Bayes posterior `P_{Y|XT}`.
pub fn rewrite_noisy(spec: &RewriteSpec) -> Result<AdsiChannel> {
    let w = &spec.forward;
    let q = spec
        .backward
        .as_ref()
        .ok_or_else(|| Error::Domain("noisy reduction needs a backward channel".into()))?;
    let xs = w.input_labels().to_vec();
    let ys = w.output_labels().to_vec();
    let ts = q.output_labels().to_vec();
    let x2 = second_round_inputs(&xs);
    let (nx, ny, nt) = (xs.len(), ys.len(), ts.len());

    let mut state = Vec::with_capacity(nx * nt);
    for x1 in 0..nx {
        for t in 0..nt {
            state.push((0..ny).map(|y| w.get(x1, y) * q.get(y, t)).sum::<f64>());
        }
    }
    let state_kernel = CondKernel::from_raw(xs.clone(), ts.clone(), state);

    let mut filled = Vec::new();
    let mut data = Vec::with_capacity(nx * nt * x2.len() * ny * ny);
    for x1 in 0..nx {
        for t in 0..nt {
            let joint: Vec<f64> = (0..ny).map(|y| w.get(x1, y) * q.get(y, t)).collect();
            let den: f64 = joint.iter().sum();
            let posterior: Vec<f64> = if den > 0.0 {
                joint.iter().map(|v| v / den).collect()
            } else {
                filled.push(format!("x1={},t={}", xs[x1], ts[t]));
                vec![1.0 / ny as f64; ny]
            };
            for xi in 0..x2.len() {
                if xi == 0 {
                    data.extend(diagonal(&posterior));
                } else {
                    data.extend(diagonal(w.row(xi - 1)));
                }
            }
        }
    }
    let law = CondKernel::from_raw(
        product_symbols(&[&xs, &ts, &x2]),
        product_symbols(&[&ys, &ys]),
        data,
    );
    let mut ch = AdsiChannel::new(
        Alphabets {
            a: xs,
            s: ts,
            x: x2,
            y: ys.clone(),
            z: ys,
        },
        state_kernel,
        Law::General(law),
        &spec.innocent,
        &spec.innocent,
    )?;
    ch.filled_rows = filled;
    Ok(ch)
}

/// Defective memory with noiseless read-back of the first round.
pub fn defect_memory(spec: &DefectSpec) -> Result<AdsiChannel> {
    let xs = spec.x_labels.clone();
    let ys = spec.law.output_labels().to_vec();
    let pd = spec.defect_prior.probs();
    let (nx, nd, ny) = (xs.len(), pd.len(), ys.len());
    let w = |x: usize, d: usize, y: usize| spec.law.get(x * nd + d, y);
    let x2 = second_round_inputs(&xs);

    let mut state = Vec::with_capacity(nx * ny);
    for x1 in 0..nx {
        for y1 in 0..ny {
            state.push((0..nd).map(|d| pd[d] * w(x1, d, y1)).sum::<f64>());
        }
    }
    let state_kernel = CondKernel::from_raw(xs.clone(), ys.clone(), state);

    let mut filled = Vec::new();
    let mut data = Vec::with_capacity(nx * ny * x2.len() * ny * ny);
    for x1 in 0..nx {
        for y1 in 0..ny {
            let joint: Vec<f64> = (0..nd).map(|d| pd[d] * w(x1, d, y1)).collect();
            let den: f64 = joint.iter().sum();
            let post: Vec<f64> = if den > 0.0 {
                joint.iter().map(|v| v / den).collect()
            } else {
                filled.push(format!("x1={},y1={}", xs[x1], ys[y1]));
                vec![1.0 / nd as f64; nd]
            };
            for xi in 0..x2.len() {
                let y2: Vec<f64> = if xi == 0 {
                    (0..ny).map(|y| if y == y1 { 1.0 } else { 0.0 }).collect()
                } else {
                    (0..ny)
                        .map(|y| (0..nd).map(|d| w(xi - 1, d, y) * post[d]).sum())
                        .collect()
                };
                data.extend(diagonal(&y2));
            }
        }
    }
    let law = CondKernel::from_raw(
        product_symbols(&[&xs, &ys, &x2]),
        product_symbols(&[&ys, &ys]),
        data,
    );
    let mut ch = AdsiChannel::new(
        Alphabets {
            a: xs,
            s: ys.clone(),
            x: x2,
            y: ys.clone(),
            z: ys,
        },
        state_kernel,
        Law::General(law),
        &spec.innocent,
        &spec.innocent,
    )?;
    ch.filled_rows = filled;
    Ok(ch)
}
