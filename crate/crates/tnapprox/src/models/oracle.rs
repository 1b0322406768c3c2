use super::Graph;
use crate::error::{Error, Result};
use crate::netgraph::TensorNetwork;
use crate::tensor::{contract, FlopCounter, Tensor};

/// Largest number of joint edge configurations the brute-force oracle sums.
pub const BRUTE_FORCE_LIMIT: u128 = 1 << 24;

/// Number of joint edge configurations, saturating at `u128::MAX`.
pub fn configuration_space(g: &TensorNetwork) -> u128 {
    g.edges().iter().fold(1u128, |acc, e| acc.saturating_mul(e.mode.size as u128))
}

/// A real number stored as `sign · exp(ln_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogValue {
    pub fn new(x: f64) -> Self {
        if x == 0.0 {
            LogValue { sign: 0.0, ln_abs: f64::NEG_INFINITY }
        } else {
            LogValue { sign: x.signum(), ln_abs: x.abs().ln() }
        }
    }

    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

/// Kahan-Babuska (Neumaier) running sum.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exact value of a closed network by explicit summation over every joint
/// assignment of its edge indices.
///
/// Each tensor is scaled to unit max-entry first and the scales are summed
/// in log space; terms are accumulated with compensated summation.
pub fn brute_force_ln_z(g: &TensorNetwork) -> Result<LogValue> {
    g.validate()?;
    if !g.dangling().is_empty() {
        return Err(Error::InvalidNetwork("brute-force oracle needs a closed network".into()));
    }
    let edges = g.edges();
    let space = configuration_space(g);
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(space));
    }
    let mut ln_scale = 0.0;
    let mut tensors: Vec<Tensor> = Vec::new();
    let mut slot = std::collections::BTreeMap::new();
    for (v, t) in g.tensors() {
        let m = t.max_abs();
        if m == 0.0 {
            return Ok(LogValue::new(0.0));
        }
        let mut t = t.clone();
        t.scale(1.0 / m);
        ln_scale += m.ln();
        slot.insert(v, tensors.len());
        tensors.push(t);
    }
    // Flat-index stride of each edge in each endpoint tensor.
    let stride = |t: &Tensor, label: u64| -> usize {
        let pos = t.modes().iter().position(|m| m.id == label).expect("edge label");
        t.modes()[pos + 1..].iter().map(|m| m.size).product()
    };
    let touches: Vec<Vec<(usize, usize)>> = edges
        .iter()
        .map(|e| {
            [Some(e.a), e.b]
                .into_iter()
                .flatten()
                .map(|v| {
                    let k = slot[&v];
                    (k, stride(&tensors[k], e.mode.id))
                })
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = edges.iter().map(|e| e.mode.size).collect();
    let mut digits = vec![0usize; edges.len()];
    let mut flat = vec![0usize; tensors.len()];
    let mut acc = Neumaier::default();
    loop {
        acc.add(tensors.iter().zip(&flat).map(|(t, &i)| t.data()[i]).product());
        // Odometer step, updating only the tensors whose index changed.
        let mut k = 0;
        loop {
            if k == digits.len() {
                let total = acc.total();
                let mut out = LogValue::new(total);
                out.ln_abs += ln_scale;
                return Ok(out);
            }
            digits[k] += 1;
            if digits[k] < sizes[k] {
                for &(t, s) in &touches[k] {
                    flat[t] += s;
                }
                break;
            }
            for &(t, s) in &touches[k] {
                flat[t] -= s * (sizes[k] - 1);
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// `ln Z` of the Ising model on `g` summed directly over spin configurations.
pub fn spin_sum_ln_z(g: &Graph, beta: f64) -> Result<f64> {
    let n = g.num_vertices;
    let space = u32::try_from(n).ok().and_then(|k| 1u128.checked_shl(k)).unwrap_or(u128::MAX);
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(space));
    }
    let energy = |c: usize| -> f64 {
        g.edges.iter().map(|&(a, b)| if (c >> a) & 1 == (c >> b) & 1 { 1.0 } else { -1.0 }).sum()
    };
    // Largest exponent is at the aligned configuration since beta >= 0.
    let top = beta * g.edges.len() as f64;
    let mut acc = Neumaier::default();
    for c in 0..1usize << n {
        acc.add((beta * energy(c) - top).exp());
    }
    Ok(top + acc.total().ln())
}

/// Largest intermediate, in entries, that `sequential_ln_z` would build.
pub fn sequential_width(g: &TensorNetwork) -> u128 {
    let mut absorbed = std::collections::BTreeSet::new();
    let mut widest = 1u128;
    for v in g.vertices() {
        absorbed.insert(v);
        let open: u128 = g
            .edges()
            .iter()
            .filter(|e| {
                let a = absorbed.contains(&e.a);
                match e.b {
                    None => a,
                    Some(b) => a != absorbed.contains(&b),
                }
            })
            .fold(1u128, |acc, e| acc.saturating_mul(e.mode.size as u128));
        widest = widest.max(open);
    }
    widest
}

/// Exact value by absorbing vertices one at a time in ascending id order,
/// rescaling after every step.
pub fn sequential_ln_z(g: &TensorNetwork, flops: &FlopCounter) -> Result<LogValue> {
    g.validate()?;
    let mut ln_scale = 0.0;
    let mut acc = Tensor::scalar(1.0);
    for (_, t) in g.tensors() {
        acc = contract(&acc, t, flops)?;
        let m = acc.max_abs();
        if m == 0.0 {
            return Ok(LogValue::new(0.0));
        }
        acc.scale(1.0 / m);
        ln_scale += m.ln();
    }
    let v = acc
        .scalar_value()
        .ok_or_else(|| Error::InvalidNetwork("sequential oracle needs a closed network".into()))?;
    let mut out = LogValue::new(v);
    out.ln_abs += ln_scale;
    Ok(out)
}
