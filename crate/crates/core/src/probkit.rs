//! Dense finite-alphabet probability objects and Shannon measures.
//!
//! All logarithms are base 2, so every measure is in bits. `0 log 0` is taken
//! as 0. Tensors are stored densely in row-major order (last axis fastest).

use serde::Serialize;

use crate::error::{Error, Result};

/// Default limit on the number of cells a composed joint may hold.
pub const DEFAULT_CELL_CAP: usize = 10_000_000;

/// Input rows may be off by this much before they are rejected.
pub const INPUT_TOL: f64 = 1e-9;

/// Rows closer than this to unit mass are stored untouched.
const EXACT_TOL: f64 = 1e-12;

/// Negative mutual information above `-MI_CLAMP` is rounding noise.
pub const MI_CLAMP: f64 = 1e-10;

/// Validate a probability row in place, renormalizing small drift.
pub(crate) fn check_row(context: &str, row: &mut [f64]) -> Result<()> {
    for &p in row.iter() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidProbability {
                context: context.to_string(),
                value: p,
            });
        }
    }
    let sum: f64 = row.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev > INPUT_TOL {
        return Err(Error::NotNormalized {
            context: context.to_string(),
            sum,
        });
    }
    if dev > EXACT_TOL {
        for p in row.iter_mut() {
            *p /= sum;
        }
    }
    Ok(())
}

fn check_labels(context: &str, labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Shape(format!("{context}: empty alphabet")));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::Shape(format!("{context}: duplicate symbol `{l}`")));
        }
    }
    Ok(())
}

/// Owned symbol list from string slices.
pub fn symbols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Symbols `"0"`, `"1"`, ... `"n-1"`.
pub fn index_symbols(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Labels of a product alphabet, first factor slowest.
pub fn product_symbols(parts: &[&[String]]) -> Vec<String> {
    let mut out = vec![String::new()];
    for (k, part) in parts.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * part.len());
        for prefix in &out {
            for s in part.iter() {
                if k == 0 {
                    next.push(s.clone());
                } else {
                    next.push(format!("{prefix},{s}"));
                }
            }
        }
        out = next;
    }
    out
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Domain(format!("binary entropy argument {p} outside [0,1]")));
    }
    Ok(h2(p))
}

/// Unchecked binary entropy; callers guarantee `p` in [0,1].
#[inline]
pub(crate) fn h2(p: f64) -> f64 {
    xlog(p) + xlog(1.0 - p)
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn xlog(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

pub(crate) fn entropy_of(v: &[f64]) -> f64 {
    v.iter().map(|&p| xlog(p)).sum()
}

/// A probability mass function over a labelled alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(labels: Vec<String>, mut probs: Vec<f64>) -> Result<Self> {
        check_labels("pmf", &labels)?;
        if labels.len() != probs.len() {
            return Err(Error::Shape(format!(
                "pmf has {} labels but {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        check_row("pmf", &mut probs)?;
        Ok(Pmf { labels, probs })
    }

    /// Pmf over `"0".."n-1"`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Pmf::new(index_symbols(probs.len()), probs)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("Bernoulli parameter {p} outside [0,1]")));
        }
        Pmf::from_probs(vec![1.0 - p, p])
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        let n = labels.len().max(1);
        Pmf::new(labels, vec![1.0 / n as f64; n])
    }

    pub fn point(labels: Vec<String>, index: usize) -> Result<Self> {
        if index >= labels.len() {
            return Err(Error::Shape(format!("point mass index {index} out of range")));
        }
        let mut probs = vec![0.0; labels.len()];
        probs[index] = 1.0;
        Pmf::new(labels, probs)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

/// A row-stochastic matrix: one distribution over outputs per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondKernel {
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    data: Vec<f64>,
}

impl CondKernel {
    pub fn new(
        input_labels: Vec<String>,
        output_labels: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_labels("kernel input", &input_labels)?;
        check_labels("kernel output", &output_labels)?;
        if rows.len() != input_labels.len() {
            return Err(Error::Shape(format!(
                "kernel has {} input symbols but {} rows",
                input_labels.len(),
                rows.len()
            )));
        }
        let n_out = output_labels.len();
        let mut data = Vec::with_capacity(rows.len() * n_out);
        for (i, mut row) in rows.into_iter().enumerate() {
            if row.len() != n_out {
                return Err(Error::Shape(format!(
                    "kernel row `{}` has {} entries, expected {n_out}",
                    input_labels[i],
                    row.len()
                )));
            }
            check_row(&format!("kernel row `{}`", input_labels[i]), &mut row)?;
            data.extend_from_slice(&row);
        }
        Ok(CondKernel {
            input_labels,
            output_labels,
            data,
        })
    }

    /// Kernel with `"0".."n-1"` labels on both sides.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_in = rows.len();
        let n_out = rows.first().map_or(0, |r| r.len());
        CondKernel::new(index_symbols(n_in), index_symbols(n_out), rows)
    }

    /// Build from a closure `f(input, output)`.
    pub fn from_fn(
        input_labels: Vec<String>,
        output_labels: Vec<String>,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let rows = (0..input_labels.len())
            .map(|i| (0..output_labels.len()).map(|j| f(i, j)).collect())
            .collect();
        CondKernel::new(input_labels, output_labels, rows)
    }

    pub fn identity(labels: Vec<String>) -> Result<Self> {
        let out = labels.clone();
        CondKernel::from_fn(labels, out, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Binary symmetric channel on `{0,1}`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("BSC parameter {p} outside [0,1]")));
        }
        CondKernel::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Trusted constructor for data produced inside the crate.
    pub(crate) fn from_raw(
        input_labels: Vec<String>,
        output_labels: Vec<String>,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), input_labels.len() * output_labels.len());
        CondKernel {
            input_labels,
            output_labels,
            data,
        }
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn n_in(&self) -> usize {
        self.input_labels.len()
    }

    pub fn n_out(&self) -> usize {
        self.output_labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_out();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_out() + j]
    }

    pub fn row_pmf(&self, i: usize) -> Pmf {
        Pmf {
            labels: self.output_labels.clone(),
            probs: self.row(i).to_vec(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_in()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// A named axis of a joint distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub labels: Vec<String>,
}

impl Axis {
    pub fn new(name: &str, labels: Vec<String>) -> Self {
        Axis {
            name: name.to_string(),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Joint pmf over a product of named axes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    axes: Vec<Axis>,
    tensor: Vec<f64>,
}

impl JointPmf {
    pub fn new(axes: Vec<Axis>, tensor: Vec<f64>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            check_labels(&format!("axis `{}`", a.name), &a.labels)?;
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Shape(format!("duplicate axis name `{}`", a.name)));
            }
        }
        let cells: usize = axes.iter().map(|a| a.len()).product();
        if cells != tensor.len() {
            return Err(Error::Shape(format!(
                "joint over {cells} cells given {} values",
                tensor.len()
            )));
        }
        let mut tensor = tensor;
        check_row("joint", &mut tensor)?;
        Ok(JointPmf { axes, tensor })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn tensor(&self) -> &[f64] {
        &self.tensor
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    fn mask_of(&self, names: &[&str]) -> Result<u64> {
        let mut m = 0u64;
        for n in names {
            m |= 1 << self.axis_index(n)?;
        }
        Ok(m)
    }

    /// Cell value at the given symbol coordinates (one per axis, in order).
    pub fn prob(&self, coords: &[&str]) -> Result<f64> {
        if coords.len() != self.axes.len() {
            return Err(Error::Shape("coordinate count differs from rank".into()));
        }
        let mut idx = 0;
        for (ax, c) in self.axes.iter().zip(coords) {
            let k = ax
                .labels
                .iter()
                .position(|l| l == c)
                .ok_or_else(|| Error::LabelMismatch(format!("`{c}` not on axis `{}`", ax.name)))?;
            idx = idx * ax.len() + k;
        }
        Ok(self.tensor[idx])
    }

    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        if keep.is_empty() {
            return Err(Error::Shape("marginalize needs at least one axis".into()));
        }
        let mask = self.mask_of(keep)?;
        let data = marginal_dense(&self.shape(), &self.tensor, mask);
        let axes = self
            .axes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, a)| a.clone())
            .collect();
        Ok(JointPmf { axes, tensor: data })
    }

    pub fn marginal_pmf(&self, axis: &str) -> Result<Pmf> {
        let i = self.axis_index(axis)?;
        let data = marginal_dense(&self.shape(), &self.tensor, 1 << i);
        Ok(Pmf {
            labels: self.axes[i].labels.clone(),
            probs: data,
        })
    }

    pub fn entropy(&self, axes: &[&str]) -> Result<f64> {
        let mask = self.mask_of(axes)?;
        Ok(entropy_of(&marginal_dense(&self.shape(), &self.tensor, mask)))
    }

    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.conditional_mutual_information(a, b, &[])
    }

    pub fn conditional_mutual_information(
        &self,
        a: &[&str],
        b: &[&str],
        c: &[&str],
    ) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Shape("mutual information needs nonempty groups".into()));
        }
        let (ma, mb, mc) = (self.mask_of(a)?, self.mask_of(b)?, self.mask_of(c)?);
        for (x, y) in [(ma, mb), (ma, mc), (mb, mc)] {
            if x & y != 0 {
                let i = (x & y).trailing_zeros() as usize;
                return Err(Error::OverlappingGroups(self.axes[i].name.clone()));
            }
        }
        let mut info = InfoCache::new(&self.shape(), &self.tensor);
        info.cmi(ma, mb, mc)
    }
}

/// Row-major strides of a shape.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Sum a dense tensor down to the axes selected by `mask`.
pub(crate) fn marginal_dense(shape: &[usize], data: &[f64], mask: u64) -> Vec<f64> {
    let rank = shape.len();
    let mut os = vec![0usize; rank];
    let mut size = 1usize;
    for ax in (0..rank).rev() {
        if mask >> ax & 1 == 1 {
            os[ax] = size;
            size *= shape[ax];
        }
    }
    if size == data.len() {
        return data.to_vec();
    }
    let mut out = vec![0.0; size];
    if rank == 0 {
        out[0] = data.iter().sum();
        return out;
    }
    let mut idx = vec![0usize; rank];
    let mut o = 0usize;
    for &v in data {
        out[o] += v;
        let mut ax = rank;
        while ax > 0 {
            ax -= 1;
            idx[ax] += 1;
            o += os[ax];
            if idx[ax] < shape[ax] {
                break;
            }
            o -= os[ax] * shape[ax];
            idx[ax] = 0;
        }
    }
    out
}

/// Memoized marginal entropies of one dense tensor, keyed by axis mask.
pub(crate) struct InfoCache<'a> {
    shape: Vec<usize>,
    data: &'a [f64],
    cache: std::collections::HashMap<u64, f64>,
}

impl<'a> InfoCache<'a> {
    pub(crate) fn new(shape: &[usize], data: &'a [f64]) -> Self {
        InfoCache {
            shape: shape.to_vec(),
            data,
            cache: std::collections::HashMap::new(),
        }
    }

    pub(crate) fn h(&mut self, mask: u64) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        if let Some(&v) = self.cache.get(&mask) {
            return v;
        }
        let v = entropy_of(&marginal_dense(&self.shape, self.data, mask));
        self.cache.insert(mask, v);
        v
    }

    /// I(a;b|c) without any clamping.
    pub(crate) fn cmi_raw(&mut self, a: u64, b: u64, c: u64) -> f64 {
        self.h(a | c) + self.h(b | c) - self.h(a | b | c) - self.h(c)
    }

    /// I(a;b|c), clamping rounding noise and rejecting real negatives.
    pub(crate) fn cmi(&mut self, a: u64, b: u64, c: u64) -> Result<f64> {
        let v = self.cmi_raw(a, b, c);
        if v >= 0.0 {
            Ok(v)
        } else if v >= -MI_CLAMP {
            Ok(0.0)
        } else {
            Err(Error::Inconsistent(format!("mutual information {v} is negative")))
        }
    }
}

/// One link of a factorization chain over dense axes.
pub(crate) struct DenseFactor<'a> {
    /// Axis positions (in the chain built so far) the factor conditions on.
    pub given: Vec<usize>,
    /// Sizes of the axes this factor appends.
    pub out_sizes: Vec<usize>,
    /// Row-major table: one row per joint value of `given`.
    pub table: &'a [f64],
}

/// Multiply a chain of factors into a dense tensor; returns (shape, data).
pub(crate) fn compose_dense(factors: &[DenseFactor], cap: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut shape: Vec<usize> = Vec::new();
    let mut data = vec![1.0];
    for (fi, f) in factors.iter().enumerate() {
        let n_out: usize = f.out_sizes.iter().product();
        let mut n_rows = 1usize;
        for &g in &f.given {
            if g >= shape.len() {
                return Err(Error::Shape(format!(
                    "factor {fi} conditions on an axis that is not yet defined"
                )));
            }
            n_rows *= shape[g];
        }
        if f.table.len() != n_rows * n_out {
            return Err(Error::Shape(format!(
                "factor {fi} table has {} entries, expected {}",
                f.table.len(),
                n_rows * n_out
            )));
        }
        let cells = data.len() as u128 * n_out as u128;
        if cells > cap as u128 {
            return Err(Error::Capacity {
                what: "joint tensor".into(),
                cells,
                cap: cap as u128,
            });
        }
        let st = strides(&shape);
        let mut next = vec![0.0; data.len() * n_out];
        for (idx, &p) in data.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut row = 0usize;
            for &g in &f.given {
                row = row * shape[g] + (idx / st[g]) % shape[g];
            }
            let r = &f.table[row * n_out..(row + 1) * n_out];
            let dst = &mut next[idx * n_out..(idx + 1) * n_out];
            for (d, &q) in dst.iter_mut().zip(r) {
                *d = p * q;
            }
        }
        shape.extend_from_slice(&f.out_sizes);
        data = next;
    }
    Ok((shape, data))
}

/// A factor of a chain: a kernel conditioned on earlier axes.
#[derive(Debug, Clone)]
pub struct Factor {
    pub given: Vec<String>,
    pub out: Vec<Axis>,
    pub kernel: CondKernel,
}

impl Factor {
    /// Unconditioned factor introducing axis `name` with law `pmf`.
    pub fn root(name: &str, pmf: &Pmf) -> Factor {
        Factor {
            given: Vec::new(),
            out: vec![Axis::new(name, pmf.labels.clone())],
            kernel: CondKernel::from_raw(vec!["()".into()], pmf.labels.clone(), pmf.probs.clone()),
        }
    }

    /// Kernel over a single new axis `name`, conditioned on `given`.
    pub fn cond(given: &[&str], name: &str, kernel: &CondKernel) -> Factor {
        Factor {
            given: given.iter().map(|s| s.to_string()).collect(),
            out: vec![Axis::new(name, kernel.output_labels.clone())],
            kernel: kernel.clone(),
        }
    }

    /// Kernel whose output is a product of several new axes.
    pub fn cond_multi(given: &[&str], out: Vec<Axis>, kernel: &CondKernel) -> Factor {
        Factor {
            given: given.iter().map(|s| s.to_string()).collect(),
            out,
            kernel: kernel.clone(),
        }
    }
}

/// Multiply a factorization chain into a joint pmf.
pub fn compose_joint(factors: &[Factor]) -> Result<JointPmf> {
    compose_joint_capped(factors, DEFAULT_CELL_CAP)
}

pub fn compose_joint_capped(factors: &[Factor], cap: usize) -> Result<JointPmf> {
    let mut axes: Vec<Axis> = Vec::new();
    let mut dense = Vec::with_capacity(factors.len());
    for f in factors {
        let mut given = Vec::with_capacity(f.given.len());
        let mut rows = 1usize;
        for g in &f.given {
            let i = axes
                .iter()
                .position(|a| &a.name == g)
                .ok_or_else(|| Error::UnknownAxis(g.clone()))?;
            given.push(i);
            rows *= axes[i].len();
        }
        if rows != f.kernel.n_in() {
            return Err(Error::Shape(format!(
                "kernel for {:?} has {} rows, conditioning alphabet has {rows}",
                f.out.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
                f.kernel.n_in()
            )));
        }
        let n_out: usize = f.out.iter().map(|a| a.len()).product();
        if n_out != f.kernel.n_out() {
            return Err(Error::Shape(format!(
                "kernel has {} outputs, declared axes span {n_out}",
                f.kernel.n_out()
            )));
        }
        for a in &f.out {
            if axes.iter().any(|b| b.name == a.name) {
                return Err(Error::Shape(format!("axis `{}` introduced twice", a.name)));
            }
            axes.push(a.clone());
        }
        dense.push(DenseFactor {
            given,
            out_sizes: f.out.iter().map(|a| a.len()).collect(),
            table: f.kernel.data(),
        });
    }
    let (_, data) = compose_dense(&dense, cap)?;
    JointPmf::new(axes, data)
}

pub fn marginalize(joint: &JointPmf, keep: &[&str]) -> Result<JointPmf> {
    joint.marginalize(keep)
}

pub fn entropy(joint: &JointPmf, axes: &[&str]) -> Result<f64> {
    joint.entropy(axes)
}

pub fn mutual_information(joint: &JointPmf, a: &[&str], b: &[&str]) -> Result<f64> {
    joint.mutual_information(a, b)
}

pub fn conditional_mutual_information(
    joint: &JointPmf,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    joint.conditional_mutual_information(a, b, c)
}

fn same_labels(p: &Pmf, q: &Pmf) -> Result<()> {
    if p.labels != q.labels {
        return Err(Error::LabelMismatch(format!(
            "{:?} vs {:?}",
            p.labels, q.labels
        )));
    }
    Ok(())
}

/// D(p||q) in bits; `f64::INFINITY` when p charges a symbol q does not.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    same_labels(p, q)?;
    Ok(kl_slices(&p.probs, &q.probs))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

/// Total variation distance, half the L1 distance.
pub fn total_variation(p: &Pmf, q: &Pmf) -> Result<f64> {
    same_labels(p, q)?;
    Ok(tv_slices(&p.probs, &q.probs))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    (0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()).min(1.0)
}
