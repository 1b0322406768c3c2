use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{truncated_eig, truncated_factor, ZERO_CUTOFF};
use crate::netgraph::TensorNetwork;
use crate::tensor::{contract, fresh_label, FlopCounter, Mode, Tensor};
use crate::treeapprox::{qr_toward, truncate_tree_canonical, TreeTensorNetwork};

/// A chain of tensors, one physical label per site. Consecutive sites share
/// bond labels; the ends have no outer bond.
#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    pub tensors: Vec<Tensor>,
    pub phys: Vec<u64>,
}

impl Mps {
    /// Entries uniform on `[-1, 1)`, every bond of size `bond`.
    pub fn random<R: Rng>(phys: &[u64], phys_size: usize, bond: usize, rng: &mut R) -> Self {
        let n = phys.len();
        let bonds: Vec<Mode> = (0..n.saturating_sub(1)).map(|_| Mode::fresh(bond)).collect();
        let tensors = (0..n)
            .map(|i| {
                let mut modes = Vec::with_capacity(3);
                if i > 0 {
                    modes.push(bonds[i - 1]);
                }
                modes.push(Mode::new(phys[i], phys_size));
                if i + 1 < n {
                    modes.push(bonds[i]);
                }
                random_tensor(modes, rng)
            })
            .collect();
        Mps { tensors, phys: phys.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Dimension of each bond, left to right.
    pub fn bond_sizes(&self) -> Vec<usize> {
        self.tensors
            .windows(2)
            .map(|w| w[0].modes().iter().filter(|m| w[1].has(m.id)).map(|m| m.size).product())
            .collect()
    }

    pub fn to_network(&self) -> Result<TensorNetwork> {
        TensorNetwork::from_tensors(self.tensors.clone())
    }

    pub fn contract(&self, flops: &FlopCounter) -> Result<Tensor> {
        self.to_network()?.contract(flops)
    }

    /// Sites `0..n` of a tree network whose vertex `i` is site `i`.
    fn from_tree(t: TreeTensorNetwork, phys: Vec<u64>) -> Self {
        Mps { tensors: t.network.into_map().into_values().collect(), phys }
    }
}

/// A chain of operators: site `i` maps `inputs[i]` to `outputs[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    pub tensors: Vec<Tensor>,
    pub inputs: Vec<u64>,
    pub outputs: Vec<u64>,
}

impl Mpo {
    pub fn random<R: Rng>(inputs: &[u64], outputs: &[u64], phys_size: usize, bond: usize, rng: &mut R) -> Self {
        let n = inputs.len();
        let bonds: Vec<Mode> = (0..n.saturating_sub(1)).map(|_| Mode::fresh(bond)).collect();
        let tensors = (0..n)
            .map(|i| {
                let mut modes = Vec::with_capacity(4);
                if i > 0 {
                    modes.push(bonds[i - 1]);
                }
                modes.push(Mode::new(outputs[i], phys_size));
                modes.push(Mode::new(inputs[i], phys_size));
                if i + 1 < n {
                    modes.push(bonds[i]);
                }
                random_tensor(modes, rng)
            })
            .collect();
        Mpo { tensors, inputs: inputs.to_vec(), outputs: outputs.to_vec() }
    }

    /// Product of identities joined by bonds of size 1.
    pub fn identity(inputs: &[u64], outputs: &[u64], phys_size: usize) -> Self {
        let n = inputs.len();
        let bonds: Vec<Mode> = (0..n.saturating_sub(1)).map(|_| Mode::fresh(1)).collect();
        let tensors = (0..n)
            .map(|i| {
                let mut modes = Vec::with_capacity(4);
                if i > 0 {
                    modes.push(bonds[i - 1]);
                }
                modes.push(Mode::new(outputs[i], phys_size));
                modes.push(Mode::new(inputs[i], phys_size));
                if i + 1 < n {
                    modes.push(bonds[i]);
                }
                let data = (0..phys_size * phys_size).map(|k| if k / phys_size == k % phys_size { 1.0 } else { 0.0 }).collect();
                Tensor::new(modes, data).expect("identity shape")
            })
            .collect();
        Mpo { tensors, inputs: inputs.to_vec(), outputs: outputs.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }
}

fn random_tensor<R: Rng>(modes: Vec<Mode>, rng: &mut R) -> Tensor {
    let n: usize = modes.iter().map(|m| m.size).product();
    Tensor::new(modes, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("random shape")
}

fn check(mpo: &Mpo, mps: &Mps) -> Result<()> {
    if mpo.inputs != mps.phys || mpo.is_empty() {
        return Err(Error::InvalidParameter("operator inputs do not match the state's physical labels".into()));
    }
    for (o, s) in mpo.tensors.iter().zip(&mps.tensors) {
        for m in o.modes() {
            if let Some(x) = s.mode(m.id) {
                if x.size != m.size {
                    return Err(Error::ContractShape { label: m.id, left: m.size, right: x.size });
                }
            }
        }
    }
    Ok(())
}

/// Applies `mpo` to `mps` site by site from the left, truncating each new
/// bond against only the already-contracted prefix.
pub fn mpo_mps_zipup(mpo: &Mpo, mps: &Mps, chi: usize, flops: &FlopCounter) -> Result<Mps> {
    check(mpo, mps)?;
    let n = mps.len();
    let mut out = Vec::with_capacity(n);
    let mut carry: Option<Tensor> = None;
    let mut left: Option<Mode> = None;
    for i in 0..n {
        let x = match &carry {
            Some(c) => contract(c, &mps.tensors[i], flops)?,
            None => mps.tensors[i].clone(),
        };
        let x = contract(&x, &mpo.tensors[i], flops)?;
        let mut rows: Vec<u64> = left.iter().map(|m| m.id).collect();
        rows.push(mpo.outputs[i]);
        if i + 1 == n {
            out.push(x);
            break;
        }
        let m = x.matricize(&rows)?;
        let fz = truncated_factor(&m.mat, chi, flops)?;
        let b = Mode::fresh(fz.rank());
        out.push(Tensor::from_matrix(fz.u, m.rows, vec![b])?);
        carry = Some(Tensor::from_matrix(fz.s, vec![b], m.cols)?);
        left = Some(b);
    }
    Ok(Mps { tensors: out, phys: mpo.outputs.clone() })
}

/// Forms the exact product and truncates it with the canonicalization-based
/// tree algorithm, rooted at the first site so bonds are cut right to left.
pub fn mpo_mps_fullenv(mpo: &Mpo, mps: &Mps, chi: usize, flops: &FlopCounter) -> Result<Mps> {
    check(mpo, mps)?;
    let product: Vec<Tensor> =
        mps.tensors.iter().zip(&mpo.tensors).map(|(s, o)| contract(s, o, flops)).collect::<Result<_>>()?;
    let tree = TreeTensorNetwork::new(TensorNetwork::from_tensors(product)?, 0)?;
    let out = truncate_tree_canonical(&tree, chi, flops)?;
    Ok(Mps::from_tree(out, mpo.outputs.clone()))
}

/// Density-matrix truncation of the product with cached left environments.
///
/// A left-to-right sweep stores each prefix contracted with its mirror image.
/// A right-to-left sweep then forms each site's density matrix from the
/// cached prefix, the site, and the already-projected suffix, and keeps its
/// leading eigenvectors.
pub fn mpo_mps_dm(mpo: &Mpo, mps: &Mps, chi: usize, flops: &FlopCounter) -> Result<Mps> {
    check(mpo, mps)?;
    let n = mps.len();
    let mut primes: BTreeMap<u64, u64> = BTreeMap::new();
    // Mirror copies keep the output label, which the prefix traces out.
    let bra_s: Vec<Tensor> = mps.tensors.iter().map(|t| prime_all(t, None, &mut primes)).collect();
    let bra_o: Vec<Tensor> =
        mpo.tensors.iter().zip(&mpo.outputs).map(|(t, &o)| prime_all(t, Some(o), &mut primes)).collect();

    // left[i]: sites 0..=i contracted with their mirror.
    let mut left: Vec<Tensor> = Vec::with_capacity(n);
    for i in 0..n.saturating_sub(1) {
        let mut x = match left.last() {
            Some(l) => contract(l, &mps.tensors[i], flops)?,
            None => mps.tensors[i].clone(),
        };
        x = contract(&x, &mpo.tensors[i], flops)?;
        x = contract(&x, &bra_o[i], flops)?;
        x = contract(&x, &bra_s[i], flops)?;
        left.push(x);
    }

    let mut out: Vec<Tensor> = vec![Tensor::scalar(1.0); n];
    // right: sites i+1.. projected onto their kept subspace, open toward i.
    let mut right: Option<Tensor> = None;
    let mut right_bra: Option<Tensor> = None;
    let mut carried: Option<Mode> = None;
    for i in (1..n).rev() {
        let o = mpo.outputs[i];
        let mut x = contract(&left[i - 1], &mps.tensors[i], flops)?;
        x = contract(&x, &mpo.tensors[i], flops)?;
        if let Some(r) = &right {
            x = contract(&x, r, flops)?;
        }
        let o_primed = fresh_label();
        let mut bra_op = bra_o[i].clone();
        bra_op.relabel_in_place(o, o_primed);
        x = contract(&x, &bra_op, flops)?;
        x = contract(&x, &bra_s[i], flops)?;
        if let Some(r) = &right_bra {
            x = contract(&x, r, flops)?;
        }
        let mut rows = vec![o];
        let mut cols = vec![o_primed];
        if let Some(c) = carried {
            rows.push(c.id);
            cols.push(primes[&c.id]);
        }
        let order: Vec<u64> = rows.iter().chain(cols.iter()).copied().collect();
        let rho = x.permuted(&order)?;
        let row_modes: Vec<Mode> = rows.iter().map(|&l| rho.mode(l).expect("label")).collect();
        let dim: usize = row_modes.iter().map(|m| m.size).product();
        let mat = ndarray::Array2::from_shape_vec((dim, dim), rho.into_data()).expect("square");
        let (u, _) = truncated_eig(&mat, chi, ZERO_CUTOFF, flops)?;
        let b = Mode::fresh(u.ncols());
        let u_t = Tensor::from_matrix(u, row_modes, vec![b])?;

        let mut c = match &right {
            Some(r) => contract(&mps.tensors[i], r, flops)?,
            None => mps.tensors[i].clone(),
        };
        c = contract(&c, &mpo.tensors[i], flops)?;
        c = contract(&c, &u_t, flops)?;
        let c_bra = prime_all(&c, None, &mut primes);
        out[i] = u_t;
        right = Some(c);
        right_bra = Some(c_bra);
        carried = Some(b);
    }
    let mut root = contract(&mps.tensors[0], &mpo.tensors[0], flops)?;
    if let Some(r) = &right {
        root = contract(&root, r, flops)?;
    }
    out[0] = root;
    Ok(Mps { tensors: out, phys: mpo.outputs.clone() })
}

fn prime_all(t: &Tensor, keep: Option<u64>, primes: &mut BTreeMap<u64, u64>) -> Tensor {
    let map: BTreeMap<u64, u64> =
        t.labels().filter(|&l| Some(l) != keep).map(|l| (l, *primes.entry(l).or_insert_with(fresh_label))).collect();
    t.relabeled(&map)
}

/// Exchanges the physical labels of sites `site` and `site + 1`, keeping at
/// most `gamma` singular values on the new bond between them.
///
/// The rest of the chain is first made orthogonal toward the pair so the
/// truncation sees the full environment.
pub fn swap_adjacent(mps: &Mps, site: usize, gamma: usize, flops: &FlopCounter) -> Result<Mps> {
    let n = mps.len();
    if site + 1 >= n {
        return Err(Error::InvalidParameter(format!("cannot swap site {site} of a {n}-site chain")));
    }
    let mut tree = TreeTensorNetwork::new(mps.to_network()?, site)?;
    let toward = tree.parents_from(site);
    for x in tree.post_order_from(site) {
        if x != site && x != site + 1 {
            qr_toward(&mut tree, x, toward[&x], flops)?;
        }
    }
    let a = tree.network.tensor(site).expect("site").clone();
    let b = tree.network.tensor(site + 1).expect("site").clone();
    let pair = contract(&a, &b, flops)?;
    let left_bond: Vec<u64> = a.labels().filter(|&l| l != mps.phys[site] && !b.has(l)).collect();
    let mut rows = left_bond;
    rows.push(mps.phys[site + 1]);
    let m = pair.matricize(&rows)?;
    let fz = truncated_factor(&m.mat, gamma, flops)?;
    let bond = Mode::fresh(fz.rank());
    let mut tensors: Vec<Tensor> = tree.network.into_map().into_values().collect();
    tensors[site] = Tensor::from_matrix(fz.u, m.rows, vec![bond])?;
    tensors[site + 1] = Tensor::from_matrix(fz.s, vec![bond], m.cols)?;
    let mut phys = mps.phys.clone();
    phys.swap(site, site + 1);
    Ok(Mps { tensors, phys })
}
