use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RegionId;
use crate::channels::AdsiChannel;
use crate::error::{Error, Result};
use crate::probkit::{check_row, INPUT_TOL};

/// The five factor slots a region can use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FactorKind {
    /// `P_A`.
    PA,
    /// `P_{U|A}` or `P_{U|AS}`.
    PU,
    /// `P_V` or `P_{V|US}`.
    PV,
    /// `Q_{S|AUV}` or `Q_{S|AV}`.
    QS,
    /// `P_{X|US}` or `P_{X|AUS}`.
    PX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct FactorShape {
    pub kind: FactorKind,
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
}

/// Row-stochastic factor tables for one region, stored row-major. Rows of
/// multi-variable conditionals are ordered with the first listed variable
/// slowest, e.g. `P_{X|AUS}` rows run over `(a, u, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionParams {
    pub region: RegionId,
    pub u_size: usize,
    pub v_size: usize,
    /// Channel input drawn from `P_{X|AUS}` instead of `P_{X|US}`.
    pub x_given_a: bool,
    pub p_a: Vec<f64>,
    pub p_u: Vec<f64>,
    pub p_v: Vec<f64>,
    pub q_s: Vec<f64>,
    pub p_x: Vec<f64>,
}

pub(crate) fn factor_shapes(
    region: RegionId,
    ch: &AdsiChannel,
    u: usize,
    v: usize,
    x_given_a: bool,
) -> Vec<FactorShape> {
    use FactorKind::*;
    let (na, ns, nx, _, _) = ch.sizes();
    let shape = |kind, name, rows, cols| FactorShape { kind, name, rows, cols };
    let mut out = vec![shape(PA, "P_A", 1, na)];
    match region {
        RegionId::Cor1Nc | RegionId::NoCovertNc | RegionId::Thm2UpperNc => {
            out.push(shape(PU, "P_U|AS", na * ns, u))
        }
        _ => out.push(shape(PU, "P_U|A", na, u)),
    }
    match region {
        RegionId::Thm1Nc => {
            out.push(shape(PV, "P_V", 1, v));
            out.push(shape(QS, "Q_S|AUV", na * u * v, ns));
        }
        RegionId::Thm3C => {
            out.push(shape(PV, "P_V", 1, v));
            out.push(shape(QS, "Q_S|AV", na * v, ns));
        }
        RegionId::Thm2UpperNc | RegionId::Thm4UpperC => out.push(shape(PV, "P_V|US", u * ns, v)),
        _ => {}
    }
    if x_given_a {
        out.push(shape(PX, "P_X|AUS", na * u * ns, nx));
    } else {
        out.push(shape(PX, "P_X|US", u * ns, nx));
    }
    out
}

impl RegionParams {
    /// All-zero tables of the right shapes; fill them with [`set`](Self::set).
    pub fn zeros(region: RegionId, ch: &AdsiChannel, u_size: usize, v_size: usize, x_given_a: bool) -> Self {
        let v_size = if region.has_v() { v_size } else { 1 };
        let mut p = RegionParams {
            region,
            u_size,
            v_size,
            x_given_a,
            p_a: Vec::new(),
            p_u: Vec::new(),
            p_v: Vec::new(),
            q_s: Vec::new(),
            p_x: Vec::new(),
        };
        for s in p.shapes(ch) {
            *p.table_mut(s.kind) = vec![0.0; s.rows * s.cols];
        }
        p
    }

    /// The no-communication point: `A = a_0`, `U` and `V` constant,
    /// `X = x_0`, and the state drawn from the channel's own kernel.
    pub fn no_communication(region: RegionId, ch: &AdsiChannel, u_size: usize, v_size: usize, x_given_a: bool) -> Self {
        let mut p = RegionParams::zeros(region, ch, u_size, v_size, x_given_a);
        let (a0, x0) = (ch.innocent_action(), ch.innocent_input());
        let na = ch.sizes().0;
        for s in p.shapes(ch) {
            let t = p.table_mut(s.kind);
            for r in 0..s.rows {
                match s.kind {
                    FactorKind::PA => t[a0] = 1.0,
                    FactorKind::PU | FactorKind::PV => t[r * s.cols] = 1.0,
                    FactorKind::PX => t[r * s.cols + x0] = 1.0,
                    FactorKind::QS => {
                        let a = r / (s.rows / na);
                        t[r * s.cols..(r + 1) * s.cols].copy_from_slice(ch.state_kernel().row(a));
                    }
                }
            }
        }
        p
    }

    pub(crate) fn shapes(&self, ch: &AdsiChannel) -> Vec<FactorShape> {
        factor_shapes(self.region, ch, self.u_size, self.v_size, self.x_given_a)
    }

    pub fn table(&self, kind: FactorKind) -> &[f64] {
        match kind {
            FactorKind::PA => &self.p_a,
            FactorKind::PU => &self.p_u,
            FactorKind::PV => &self.p_v,
            FactorKind::QS => &self.q_s,
            FactorKind::PX => &self.p_x,
        }
    }

    pub(crate) fn table_mut(&mut self, kind: FactorKind) -> &mut Vec<f64> {
        match kind {
            FactorKind::PA => &mut self.p_a,
            FactorKind::PU => &mut self.p_u,
            FactorKind::PV => &mut self.p_v,
            FactorKind::QS => &mut self.q_s,
            FactorKind::PX => &mut self.p_x,
        }
    }

    /// Replace one factor from explicit rows; rows are validated.
    pub fn set(&mut self, ch: &AdsiChannel, kind: FactorKind, rows: Vec<Vec<f64>>) -> Result<()> {
        let shape = self
            .shapes(ch)
            .into_iter()
            .find(|s| s.kind == kind)
            .ok_or_else(|| Error::Shape(format!("region {} has no {kind:?} factor", self.region)))?;
        if rows.len() != shape.rows {
            return Err(Error::Shape(format!(
                "{} has {} rows, expected {}",
                shape.name,
                rows.len(),
                shape.rows
            )));
        }
        let mut flat = Vec::with_capacity(shape.rows * shape.cols);
        for (i, mut r) in rows.into_iter().enumerate() {
            if r.len() != shape.cols {
                return Err(Error::Shape(format!(
                    "{} row {i} has {} entries, expected {}",
                    shape.name,
                    r.len(),
                    shape.cols
                )));
            }
            check_row(&format!("{} row {i}", shape.name), &mut r)?;
            flat.extend(r);
        }
        *self.table_mut(kind) = flat;
        Ok(())
    }

    /// Fill one factor from `f(row, col)`.
    pub fn set_fn(&mut self, ch: &AdsiChannel, kind: FactorKind, f: impl Fn(usize, usize) -> f64) -> Result<()> {
        let shape = self
            .shapes(ch)
            .into_iter()
            .find(|s| s.kind == kind)
            .ok_or_else(|| Error::Shape(format!("region {} has no {kind:?} factor", self.region)))?;
        let rows = (0..shape.rows)
            .map(|r| (0..shape.cols).map(|c| f(r, c)).collect())
            .collect();
        self.set(ch, kind, rows)
    }

    /// Check shapes and row sums against a channel.
    pub fn validate(&self, ch: &AdsiChannel) -> Result<()> {
        if self.u_size == 0 || self.v_size == 0 {
            return Err(Error::Shape("auxiliary alphabets must be non-empty".into()));
        }
        if !self.region.has_v() && self.v_size != 1 {
            return Err(Error::Shape(format!("region {} has no V; v_size must be 1", self.region)));
        }
        for s in self.shapes(ch) {
            let t = self.table(s.kind);
            if t.len() != s.rows * s.cols {
                return Err(Error::Shape(format!(
                    "{} has {} entries, expected {}x{}",
                    s.name,
                    t.len(),
                    s.rows,
                    s.cols
                )));
            }
            for (i, row) in t.chunks(s.cols).enumerate() {
                if let Some(&bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                    return Err(Error::InvalidProbability {
                        context: format!("{} row {i}", s.name),
                        value: bad,
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > INPUT_TOL {
                    return Err(Error::NotNormalized {
                        context: format!("{} row {i}", s.name),
                        sum,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str, ch: &AdsiChannel) -> Result<Self> {
        let file: ParamsFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut p = RegionParams::zeros(file.region, ch, file.u_size, file.v_size.unwrap_or(1), file.x_given_a);
        let shapes = p.shapes(ch);
        for name in file.factors.keys() {
            if !shapes.iter().any(|s| s.name == name) {
                return Err(Error::Shape(format!(
                    "factor `{name}` does not belong to region {}",
                    file.region
                )));
            }
        }
        let mut factors = file.factors;
        for s in shapes {
            let rows = factors
                .remove(s.name)
                .ok_or_else(|| Error::Shape(format!("missing factor `{}`", s.name)))?;
            p.set(ch, s.kind, rows)?;
        }
        Ok(p)
    }

    pub fn to_json(&self, ch: &AdsiChannel) -> String {
        let factors = self
            .shapes(ch)
            .into_iter()
            .map(|s| {
                let rows = self.table(s.kind).chunks(s.cols).map(|r| r.to_vec()).collect();
                (s.name.to_string(), rows)
            })
            .collect();
        let file = ParamsFile {
            region: self.region,
            u_size: self.u_size,
            v_size: self.region.has_v().then_some(self.v_size),
            x_given_a: self.x_given_a,
            factors,
        };
        serde_json::to_string_pretty(&file).expect("params serialize")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    region: RegionId,
    u_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_size: Option<usize>,
    #[serde(default)]
    x_given_a: bool,
    factors: BTreeMap<String, Vec<Vec<f64>>>,
}
