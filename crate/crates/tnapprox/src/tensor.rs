//! Dense labeled tensors, pairwise contraction and the flop counter.
//!
//! Storage is row-major in mode order: the last mode varies fastest.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Labels at or above this value are reserved for labels minted at run time.
pub const FRESH_LABEL_BASE: u64 = 1 << 40;

static NEXT_LABEL: AtomicU64 = AtomicU64::new(FRESH_LABEL_BASE);

/// Returns a label never handed out before in this process.
pub fn fresh_label() -> u64 {
    NEXT_LABEL.fetch_add(1, Ordering::Relaxed)
}

/// A mode: unique id plus dimension. Two modes with the same id are the same edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub id: u64,
    pub size: usize,
}

impl Mode {
    pub fn new(id: u64, size: usize) -> Self {
        Mode { id, size }
    }

    pub fn fresh(size: usize) -> Self {
        Mode { id: fresh_label(), size }
    }

    /// Natural-log weight of the mode.
    pub fn weight(&self) -> f64 {
        (self.size as f64).ln()
    }
}

/// Accumulated cost-model flops of one job. Not shared across threads.
#[derive(Debug, Default)]
pub struct FlopCounter {
    total: Cell<u128>,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, n: u128) {
        self.total.set(self.total.get().saturating_add(n));
    }

    pub fn total(&self) -> u128 {
        self.total.get()
    }
}

/// Product of mode sizes, saturating at `u128::MAX`.
pub fn size_of(modes: &[Mode]) -> u128 {
    modes.iter().fold(1u128, |acc, m| acc.saturating_mul(m.size as u128))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    modes: Vec<Mode>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(modes: Vec<Mode>, data: Vec<f64>) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if m.size == 0 {
                return Err(Error::InvalidTensor(format!("mode {} has size 0", m.id)));
            }
            if modes[..i].iter().any(|o| o.id == m.id) {
                return Err(Error::InvalidTensor(format!("duplicate mode label {}", m.id)));
            }
        }
        let expected = size_of(&modes);
        if expected != data.len() as u128 {
            return Err(Error::InvalidTensor(format!(
                "data length {} does not match mode sizes (product {expected})",
                data.len()
            )));
        }
        Ok(Tensor { modes, data })
    }

    pub fn zeros(modes: Vec<Mode>) -> Result<Self> {
        let n = size_of(&modes) as usize;
        Tensor::new(modes, vec![0.0; n])
    }

    pub fn scalar(x: f64) -> Self {
        Tensor { modes: Vec::new(), data: vec![x] }
    }

    /// Identity matrix joining `a` and `b`; sizes must agree.
    pub fn identity(a: Mode, b: Mode) -> Result<Self> {
        if a.size != b.size {
            return Err(Error::ContractShape { label: a.id, left: a.size, right: b.size });
        }
        let n = a.size;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Tensor::new(vec![a, b], data)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn order(&self) -> usize {
        self.modes.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = u64> + '_ {
        self.modes.iter().map(|m| m.id)
    }

    pub fn mode(&self, label: u64) -> Option<Mode> {
        self.modes.iter().copied().find(|m| m.id == label)
    }

    pub fn has(&self, label: u64) -> bool {
        self.modes.iter().any(|m| m.id == label)
    }

    /// Value of a zero-order tensor.
    pub fn scalar_value(&self) -> Option<f64> {
        if self.modes.is_empty() {
            Some(self.data[0])
        } else {
            None
        }
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let mut off = 0;
        for (m, &i) in self.modes.iter().zip(index) {
            off = off * m.size + i;
        }
        self.data[off]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, f: f64) {
        self.data.iter_mut().for_each(|x| *x *= f);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Renames labels through `map`; labels absent from `map` are kept.
    pub fn relabeled(&self, map: &BTreeMap<u64, u64>) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| Mode { id: *map.get(&m.id).unwrap_or(&m.id), size: m.size })
            .collect();
        Tensor { modes, data: self.data.clone() }
    }

    pub fn relabel_in_place(&mut self, from: u64, to: u64) {
        for m in self.modes.iter_mut() {
            if m.id == from {
                m.id = to;
            }
        }
    }

    /// Reorders modes to `order`, which must be a permutation of the labels.
    pub fn permuted(&self, order: &[u64]) -> Result<Self> {
        if order.len() != self.modes.len() {
            return Err(Error::InvalidTensor(format!(
                "permutation of length {} for tensor of order {}",
                order.len(),
                self.modes.len()
            )));
        }
        let mut axes = Vec::with_capacity(order.len());
        for &l in order {
            let ax = self.modes.iter().position(|m| m.id == l).ok_or(Error::UnknownLabel(l))?;
            if axes.contains(&ax) {
                return Err(Error::InvalidTensor(format!("label {l} repeated in permutation")));
            }
            axes.push(ax);
        }
        if axes.iter().enumerate().all(|(i, &a)| i == a) {
            return Ok(self.clone());
        }
        let modes: Vec<Mode> = axes.iter().map(|&a| self.modes[a]).collect();
        let data = permute_data(&self.data, &self.modes, &axes);
        Ok(Tensor { modes, data })
    }

    /// Matrix with rows over `rows` (in the given order) and columns over the
    /// remaining modes in tensor order.
    pub fn matricize(&self, rows: &[u64]) -> Result<Matricized> {
        for &l in rows {
            if !self.has(l) {
                return Err(Error::UnknownLabel(l));
            }
        }
        let cols: Vec<u64> = self.labels().filter(|l| !rows.contains(l)).collect();
        let order: Vec<u64> = rows.iter().chain(cols.iter()).copied().collect();
        let t = self.permuted(&order)?;
        let row_modes: Vec<Mode> = t.modes[..rows.len()].to_vec();
        let col_modes: Vec<Mode> = t.modes[rows.len()..].to_vec();
        let m = size_of(&row_modes) as usize;
        let n = size_of(&col_modes) as usize;
        let mat = Array2::from_shape_vec((m, n), t.data).expect("shape checked");
        Ok(Matricized { mat, rows: row_modes, cols: col_modes })
    }

    /// Inverse of [`Tensor::matricize`]: modes are `rows` followed by `cols`.
    pub fn from_matrix(mat: Array2<f64>, rows: Vec<Mode>, cols: Vec<Mode>) -> Result<Self> {
        if mat.nrows() as u128 != size_of(&rows) || mat.ncols() as u128 != size_of(&cols) {
            return Err(Error::InvalidTensor("matrix shape does not match modes".into()));
        }
        let data = if mat.is_standard_layout() {
            mat.into_raw_vec_and_offset().0
        } else {
            mat.iter().copied().collect()
        };
        let mut modes = rows;
        modes.extend(cols);
        Tensor::new(modes, data)
    }
}

/// A matricized tensor together with the modes spanning rows and columns.
#[derive(Clone, Debug)]
pub struct Matricized {
    pub mat: Array2<f64>,
    pub rows: Vec<Mode>,
    pub cols: Vec<Mode>,
}

impl Matricized {
    pub fn into_tensor(self) -> Result<Tensor> {
        Tensor::from_matrix(self.mat, self.rows, self.cols)
    }
}

fn permute_data(src: &[f64], modes: &[Mode], axes: &[usize]) -> Vec<f64> {
    let n = modes.len();
    let mut src_strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        src_strides[i] = src_strides[i + 1] * modes[i + 1].size;
    }
    let dims: Vec<usize> = axes.iter().map(|&a| modes[a].size).collect();
    let strides: Vec<usize> = axes.iter().map(|&a| src_strides[a]).collect();
    let total = src.len();
    let mut out = Vec::with_capacity(total);
    if n == 0 {
        out.push(src[0]);
        return out;
    }
    let inner = dims[n - 1];
    let inner_stride = strides[n - 1];
    let mut idx = vec![0usize; n - 1];
    let mut base = 0usize;
    loop {
        if inner_stride == 1 {
            out.extend_from_slice(&src[base..base + inner]);
        } else {
            let mut off = base;
            for _ in 0..inner {
                out.push(src[off]);
                off += inner_stride;
            }
        }
        let mut k = n - 1;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            base += strides[k];
            if idx[k] < dims[k] {
                break;
            }
            base -= strides[k] * dims[k];
            idx[k] = 0;
        }
    }
}

/// Cost-model charge for contracting `a` with `b`: product of sizes over the
/// union of their modes.
pub fn contraction_cost(a: &[Mode], b: &[Mode]) -> u128 {
    let mut c = size_of(a);
    for m in b {
        if !a.iter().any(|x| x.id == m.id) {
            c *= m.size as u128;
        }
    }
    c
}

/// Contracts all shared labels. Output modes: free modes of `a` (in order)
/// followed by free modes of `b` (in order).
pub fn contract(a: &Tensor, b: &Tensor, flops: &FlopCounter) -> Result<Tensor> {
    let mut shared = Vec::new();
    for m in &a.modes {
        if let Some(o) = b.mode(m.id) {
            if o.size != m.size {
                return Err(Error::ContractShape { label: m.id, left: m.size, right: o.size });
            }
            shared.push(m.id);
        }
    }
    let free_a: Vec<Mode> = a.modes.iter().copied().filter(|m| !shared.contains(&m.id)).collect();
    let free_b: Vec<Mode> = b.modes.iter().copied().filter(|m| !shared.contains(&m.id)).collect();
    flops.add(contraction_cost(&a.modes, &b.modes));

    let order_a: Vec<u64> = free_a.iter().map(|m| m.id).chain(shared.iter().copied()).collect();
    let order_b: Vec<u64> = shared.iter().copied().chain(free_b.iter().map(|m| m.id)).collect();
    let pa = a.permuted(&order_a)?;
    let pb = b.permuted(&order_b)?;
    let m = size_of(&free_a) as usize;
    let n = size_of(&free_b) as usize;
    let k = pa.data.len() / m;
    let va = ArrayView2::from_shape((m, k), &pa.data).expect("shape");
    let vb = ArrayView2::from_shape((k, n), &pb.data).expect("shape");
    let c = va.dot(&vb);
    let mut modes = free_a;
    modes.extend(free_b);
    let data = c.into_raw_vec_and_offset().0;
    Ok(Tensor { modes, data })
}

/// Contracts a list of tensors, greedily picking the pair whose result is
/// smallest. Pairs sharing no label are only joined once no sharing pair is
/// left.
pub fn contract_all(mut ts: Vec<Tensor>, flops: &FlopCounter) -> Result<Tensor> {
    if ts.is_empty() {
        return Ok(Tensor::scalar(1.0));
    }
    while ts.len() > 1 {
        let mut best: Option<(bool, u128, u128, usize, usize)> = None;
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                let share = ts[i].modes.iter().any(|m| ts[j].has(m.id));
                let cost = contraction_cost(&ts[i].modes, &ts[j].modes);
                let mut out = 1u128;
                for m in ts[i].modes.iter().chain(ts[j].modes.iter()) {
                    let in_i = ts[i].has(m.id);
                    let in_j = ts[j].has(m.id);
                    if in_i != in_j {
                        out *= m.size as u128;
                    }
                }
                let key = (!share, out, cost, i, j);
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
        }
        let (_, _, _, i, j) = best.expect("at least two tensors");
        let tj = ts.swap_remove(j);
        let ti = ts.swap_remove(i);
        let c = contract(&ti, &tj, flops)?;
        ts.push(c);
    }
    Ok(ts.pop().expect("one tensor"))
}

/// Frobenius distance relative to the norm of `reference`, after aligning modes.
pub fn relative_distance(a: &Tensor, reference: &Tensor) -> Result<f64> {
    let order: Vec<u64> = reference.labels().collect();
    let pa = a.permuted(&order)?;
    let mut diff = 0.0;
    for (x, y) in pa.data.iter().zip(reference.data.iter()) {
        diff += (x - y) * (x - y);
    }
    let n = reference.norm();
    Ok(if n == 0.0 { diff.sqrt() } else { diff.sqrt() / n })
}
