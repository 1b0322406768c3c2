//! Orthogonal and truncated spectral factorizations with cost-model charges.

use log::warn;
use ndarray::{s, Array2, ArrayView2};
use ndarray_linalg::{Eigh, JobSvd, SVDDC, UPLO};

use crate::error::{Error, Result};
use crate::tensor::FlopCounter;

/// Relative threshold below which spectral directions are treated as null.
pub const ZERO_CUTOFF: f64 = 1e-15;

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

pub fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>, flops: &FlopCounter) -> Array2<f64> {
    flops.add(a.nrows() as u128 * a.ncols() as u128 * b.ncols() as u128);
    a.dot(&b)
}

/// Thin QR: `Q` is m×k with orthonormal columns, `R` is k×n, k = min(m, n).
pub fn qr(m: &Array2<f64>, flops: &FlopCounter) -> Result<(Array2<f64>, Array2<f64>)> {
    let (rows, cols) = m.dim();
    flops.add(rows as u128 * cols as u128 * rows.min(cols) as u128);
    if rows >= cols {
        let (q, r) = ndarray_linalg::QR::qr(m).map_err(|e| Error::Linalg(e.to_string()))?;
        Ok((q, r))
    } else {
        // Factor the leading square block and carry the rest through Qᵀ.
        let head = m.slice(s![.., ..rows]).to_owned();
        let (q, r_head) = ndarray_linalg::QR::qr(&head).map_err(|e| Error::Linalg(e.to_string()))?;
        let tail = q.t().dot(&m.slice(s![.., rows..]));
        let mut r = Array2::zeros((rows, cols));
        r.slice_mut(s![.., ..rows]).assign(&r_head);
        r.slice_mut(s![.., rows..]).assign(&tail);
        Ok((q, r))
    }
}

/// Leading eigenpairs of a symmetric PSD matrix.
///
/// Keeps `min(chi, #{λ > cutoff·λ_max})` pairs and at least one. Columns of
/// `U` follow descending eigenvalue; ties keep ascending original index.
pub fn truncated_eig(
    l: &Array2<f64>,
    chi: usize,
    cutoff: f64,
    flops: &FlopCounter,
) -> Result<(Array2<f64>, Vec<f64>)> {
    if chi == 0 {
        return Err(Error::InvalidParameter("chi must be at least 1".into()));
    }
    let n = l.nrows();
    if l.ncols() != n {
        return Err(Error::Linalg(format!("density matrix is {}x{}", n, l.ncols())));
    }
    let scale = l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let asym = l.iter().zip(l.t().iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if asym > SYMMETRY_TOL * scale {
        warn!("symmetrizing matrix with relative asymmetry {:.3e}", asym / scale);
    }
    let sym = (l + &l.t()) * 0.5;
    let (vals, vecs) = sym.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let lmax = vals[idx[0]].max(0.0);
    let lmin = vals[idx[n - 1]];
    if lmin < -PSD_TOL * lmax {
        return Err(Error::NotPsd { value: lmin, tolerance: -PSD_TOL * lmax });
    }
    let above = idx.iter().filter(|&&i| vals[i] > cutoff * lmax).count();
    let k = chi.min(above).max(1);
    flops.add(n as u128 * n as u128 * k as u128);

    let mut u = Array2::zeros((n, k));
    let mut kept = Vec::with_capacity(k);
    for (c, &i) in idx[..k].iter().enumerate() {
        u.column_mut(c).assign(&vecs.column(i));
        kept.push(vals[i]);
    }
    Ok((u, kept))
}

/// Rank-truncated factorization `m ≈ U S` from the singular value decomposition.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub u: Array2<f64>,
    pub s: Array2<f64>,
    /// All singular values in descending order, kept and discarded.
    pub singular_values: Vec<f64>,
}

impl Factorization {
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn discarded(&self) -> &[f64] {
        &self.singular_values[self.rank()..]
    }
}

/// `U` has orthonormal columns and rank `min(chi, #{σ > 1e-15·σ_max})`, at least one.
pub fn truncated_factor(m: &Array2<f64>, chi: usize, flops: &FlopCounter) -> Result<Factorization> {
    if chi == 0 {
        return Err(Error::InvalidParameter("chi must be at least 1".into()));
    }
    let (rows, cols) = m.dim();
    let (u, sv, vt) = m.svddc(JobSvd::Some).map_err(|e| Error::Linalg(e.to_string()))?;
    let u = u.expect("requested U");
    let vt = vt.expect("requested Vt");
    let smax = sv.first().copied().unwrap_or(0.0);
    let above = sv.iter().filter(|&&x| x > ZERO_CUTOFF * smax).count();
    let k = chi.min(above).max(1).min(sv.len());
    flops.add(rows as u128 * cols as u128 * k as u128);
    let u_k = u.slice(s![.., ..k]).to_owned();
    let mut s_k = vt.slice(s![..k, ..]).to_owned();
    for (i, mut row) in s_k.rows_mut().into_iter().enumerate() {
        row *= sv[i];
    }
    Ok(Factorization { u: u_k, s: s_k, singular_values: sv.to_vec() })
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}
