//! Dense linear algebra for desk-scale regression problems.
//!
//! Everything here is sequential and deterministic: the same input always
//! produces bit-identical output. The SVD is a one-sided (Hestenes) Jacobi
//! iteration with cyclic sweeps, followed by a fixed sign rule on the right
//! singular vectors.
//!
//! When singular values coincide the individual singular vectors are fixed by
//! the Jacobi sweep order only; the spanned subspaces are the stable objects.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{PcrError, Result};

/// Relative off-diagonal level below which a sweep counts as converged.
pub const JACOBI_TOL: f64 = 1e-12;
/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 60;

/// Row-major dense matrix with finite entries and at least one row and column.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(PcrError::Shape(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(PcrError::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(PcrError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * p);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(PcrError::Shape(format!(
                    "row {i} has {} entries, expected {p}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, p, data)
    }

    /// Builds a matrix column by column.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, |c| c.as_ref().len());
        let mut data = vec![0.0; n * p];
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != n {
                return Err(PcrError::Shape(format!(
                    "column {j} has {} entries, expected {n}",
                    c.len()
                )));
            }
            for (i, &v) in c.iter().enumerate() {
                data[i * p + j] = v;
            }
        }
        Self::new(n, p, data)
    }

    /// Zero matrix. Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in diag.iter().enumerate() {
            data[i * n + i] = v;
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(PcrError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut data = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out = &mut data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: rhs.cols,
            data,
        })
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(PcrError::Shape(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ · v`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(PcrError::Shape(format!(
                "cannot multiply transpose of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, rhs: &DenseMatrix) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(PcrError::Shape(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise absolute difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &DenseMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = PcrError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.to_rows()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

/// A selection of singular triplets. Indices are zero-based and refer to the
/// descending order of the singular values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subset {
    /// The first `d` components.
    Leading(usize),
    /// The last `k` components.
    Trailing(usize),
    All,
    Single(usize),
    Indices(Vec<usize>),
}

impl Subset {
    pub fn indices(&self, p: usize) -> Result<Vec<usize>> {
        match self {
            Subset::Leading(d) if *d <= p => Ok((0..*d).collect()),
            Subset::Trailing(k) if *k <= p => Ok((p - k..p).collect()),
            Subset::Leading(c) | Subset::Trailing(c) => Err(PcrError::ComponentRange { d: *c, p }),
            Subset::All => Ok((0..p).collect()),
            Subset::Single(q) if *q < p => Ok(vec![*q]),
            Subset::Single(q) => Err(PcrError::IndexOutOfRange { index: *q, len: p }),
            Subset::Indices(idx) => {
                if let Some(&bad) = idx.iter().find(|&&q| q >= p) {
                    return Err(PcrError::IndexOutOfRange { index: bad, len: p });
                }
                Ok(idx.clone())
            }
        }
    }
}

/// Split of the `p` components into the first `d` retained and the last `k`
/// omitted ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSplit {
    pub d: usize,
    pub k: usize,
    pub p: usize,
}

impl ComponentSplit {
    pub fn new(d: usize, p: usize) -> Result<Self> {
        if d == 0 || d > p {
            return Err(PcrError::ComponentRange { d, p });
        }
        Ok(Self { d, k: p - d, p })
    }

    pub fn retained(&self) -> Subset {
        Subset::Leading(self.d)
    }

    pub fn omitted(&self) -> Subset {
        Subset::Trailing(self.k)
    }
}

/// Thin SVD `X = U Σ Vᵀ` with `U` n×p, `Σ` descending and `V` p×p.
///
/// Sign rule: in every column of `V` the entry of largest magnitude is
/// positive, the lowest row index winning ties.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    /// Relative rank tolerance: singular values at or below
    /// `rank_tol * max(sigma)` count as zero.
    pub rank_tol: f64,
}

impl SvdFactors {
    /// Default relative tolerance `1e-12 · max(n, p)`.
    pub fn default_rank_tol(n: usize, p: usize) -> f64 {
        1e-12 * n.max(p) as f64
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn p(&self) -> usize {
        self.v.rows()
    }

    /// Absolute cut-off `rank_tol · max(sigma)`.
    pub fn threshold(&self) -> f64 {
        self.rank_tol * self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self) -> usize {
        let t = self.threshold();
        self.sigma.iter().filter(|&&s| s > t).count()
    }

    pub fn u_col(&self, q: usize) -> Vec<f64> {
        self.u.column(q)
    }

    pub fn v_col(&self, q: usize) -> Vec<f64> {
        self.v.column(q)
    }

    /// Component scores `Uᵀy`.
    pub fn scores(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.u.t_mul_vec(y)
    }

    /// `U Σ Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (n, p) = (self.n(), self.p());
        let mut us = self.u.clone();
        for i in 0..n {
            for j in 0..p {
                us.data[i * p + j] *= self.sigma[j];
            }
        }
        us.matmul(&self.v.transpose())
            .expect("factor shapes are consistent")
    }
}

/// Thin SVD of an n×p matrix (n ≥ p) by cyclic one-sided Jacobi rotations.
///
/// `rank_tol` is stored on the factors as a relative tolerance; see
/// [`SvdFactors::default_rank_tol`].
pub fn svd_thin(x: &DenseMatrix, rank_tol: f64) -> Result<SvdFactors> {
    let (n, p) = (x.rows(), x.cols());
    if n < p {
        return Err(PcrError::Shape(format!(
            "thin SVD needs rows >= cols, got {n}x{p}"
        )));
    }
    if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(PcrError::NonFinite {
            row: pos / p,
            col: pos % p,
        });
    }
    if !(rank_tol.is_finite() && rank_tol >= 0.0) {
        return Err(PcrError::Config(format!(
            "invalid rank tolerance {rank_tol}"
        )));
    }

    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = p < 2;
    let mut last_off = 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut max_off = 0.0f64;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = norm2(&a[i]);
                let beta = norm2(&a[j]);
                let gamma = dot(&a[i], &a[j]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let off = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                max_off = max_off.max(off);
                if off <= f64::EPSILON {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (zeta.abs() + 1.0f64.hypot(zeta));
                let c = 1.0 / 1.0f64.hypot(t);
                let s = c * t;
                rotate(&mut a, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        last_off = max_off;
        converged = max_off <= JACOBI_TOL;
    }
    if !converged {
        return Err(PcrError::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: last_off,
        });
    }

    let norms: Vec<f64> = a.iter().map(|c| norm2(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    // Stable sort: equal singular values keep their sweep order.
    order.sort_by(|&l, &r| norms[r].total_cmp(&norms[l]));

    let mut sigma = Vec::with_capacity(p);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut deficient = Vec::new();
    for &j in &order {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / s).collect());
        } else {
            deficient.push(u_cols.len());
            u_cols.push(vec![0.0; n]);
        }
        v_cols.push(v[j].clone());
    }
    for slot in deficient {
        u_cols[slot] = complete_basis(&u_cols, slot, n);
    }

    for (uc, vc) in u_cols.iter_mut().zip(v_cols.iter_mut()) {
        let mut lead = 0;
        for (i, val) in vc.iter().enumerate() {
            if val.abs() > vc[lead].abs() {
                lead = i;
            }
        }
        if vc[lead] < 0.0 {
            vc.iter_mut().for_each(|x| *x = -*x);
            uc.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok(SvdFactors {
        u: DenseMatrix::from_columns(&u_cols)?,
        sigma,
        v: DenseMatrix::from_columns(&v_cols)?,
        rank_tol,
    })
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (xi, xj) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*xi, *xj);
        *xi = c * a - s * b;
        *xj = s * a + c * b;
    }
}

/// Unit vector orthogonal to every non-zero column in `cols` other than `slot`.
fn complete_basis(cols: &[Vec<f64>], slot: usize, n: usize) -> Vec<f64> {
    for e in 0..n {
        let mut cand = vec![0.0; n];
        cand[e] = 1.0;
        // Two Gram-Schmidt passes.
        for _ in 0..2 {
            for (q, c) in cols.iter().enumerate() {
                if q == slot || norm2(c) == 0.0 {
                    continue;
                }
                let proj = dot(&cand, c);
                cand.iter_mut().zip(c).for_each(|(x, ci)| *x -= proj * ci);
            }
        }
        let len = norm2(&cand).sqrt();
        if len > 0.5 {
            cand.iter_mut().for_each(|x| *x /= len);
            return cand;
        }
    }
    unreachable!("fewer than n orthonormal columns always leave room")
}

/// Hat matrix `U_S U_Sᵀ` of the selected left singular vectors. An empty
/// selection gives the n×n zero matrix.
pub fn hat_matrix(f: &SvdFactors, subset: &Subset) -> Result<DenseMatrix> {
    let idx = subset.indices(f.p())?;
    Ok(outer_sum(&f.u, &idx, |_| 1.0))
}

/// `V_S Σ_S⁻² V_Sᵀ`, the Moore–Penrose pseudo-inverse of `X_SᵀX_S`.
pub fn gram_pseudo_inverse(f: &SvdFactors, subset: &Subset) -> Result<DenseMatrix> {
    let idx = subset.indices(f.p())?;
    let threshold = f.threshold();
    for &q in &idx {
        if f.sigma[q] <= threshold {
            return Err(PcrError::RankDeficient {
                index: q,
                sigma: f.sigma[q],
                threshold,
            });
        }
    }
    Ok(outer_sum(&f.v, &idx, |q| f.sigma[q].powi(-2)))
}

/// Loading projector `V_S V_Sᵀ`.
pub fn loading_projector(f: &SvdFactors, subset: &Subset) -> Result<DenseMatrix> {
    let idx = subset.indices(f.p())?;
    Ok(outer_sum(&f.v, &idx, |_| 1.0))
}

/// `Σ_{q∈idx} w(q) m_q m_qᵀ` over columns of `m`.
fn outer_sum(m: &DenseMatrix, idx: &[usize], weight: impl Fn(usize) -> f64) -> DenseMatrix {
    let r = m.rows();
    let mut out = DenseMatrix::zeros(r, r);
    for &q in idx {
        let c = m.column(q);
        let w = weight(q);
        for i in 0..r {
            let wi = w * c[i];
            if wi == 0.0 {
                continue;
            }
            for (o, cj) in out.data[i * r..(i + 1) * r].iter_mut().zip(&c) {
                *o += wi * cj;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DenseMatrix {
        DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]).unwrap()
    }

    fn svd(x: &DenseMatrix) -> SvdFactors {
        svd_thin(x, SvdFactors::default_rank_tol(x.rows(), x.cols())).unwrap()
    }

    #[test]
    fn identity_decomposes_to_identity() {
        let f = svd(&DenseMatrix::identity(3));
        assert_eq!(f.sigma, vec![1.0, 1.0, 1.0]);
        assert_eq!(f.u, DenseMatrix::identity(3));
        assert_eq!(f.v, DenseMatrix::identity(3));
    }

    #[test]
    fn toy_matrix_factors() {
        let f = svd(&toy());
        assert_eq!(f.sigma, vec![2.0, 1.0]);
        assert_eq!(f.v_col(0), vec![0.0, 1.0]);
        assert_eq!(f.v_col(1), vec![1.0, 0.0]);
        assert_eq!(f.u_col(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(f.u_col(1), vec![1.0, 0.0, 0.0]);
        assert_eq!(f.reconstruct(), toy());
    }

    #[test]
    fn zero_singular_value_gets_completed_basis() {
        let x = DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, 0.0]]).unwrap();
        let f = svd(&x);
        assert_eq!(f.sigma, vec![3.0, 0.0]);
        assert_eq!(f.reconstruct(), x);
        let utu = f.u.transpose().matmul(&f.u).unwrap();
        assert!(utu.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
        assert_eq!(f.rank(), 1);
    }

    #[test]
    fn sign_rule_makes_largest_loading_positive() {
        let x =
            DenseMatrix::from_rows(&[[-1.0, -2.0], [-3.0, 1.0], [0.5, -4.0], [2.0, 2.0]]).unwrap();
        let f = svd(&x);
        for q in 0..2 {
            let col = f.v_col(q);
            let lead = col
                .iter()
                .copied()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn rejects_wide_and_non_finite_input() {
        let wide = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(svd_thin(&wide, 1e-12), Err(PcrError::Shape(_))));
        assert!(matches!(
            DenseMatrix::from_rows(&[[1.0, f64::NAN]]),
            Err(PcrError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn hat_matrix_toy_and_identity() {
        let f = svd(&toy());
        let h1 = hat_matrix(&f, &Subset::Leading(1)).unwrap();
        assert_eq!(h1, DenseMatrix::from_diag(&[0.0, 1.0, 0.0]).unwrap());
        let h = hat_matrix(&f, &Subset::All).unwrap();
        assert!((h.trace() - 2.0).abs() < 1e-15);
        let hk = hat_matrix(&f, &Subset::Trailing(1)).unwrap();
        assert!(h.max_abs_diff(&h1.add(&hk).unwrap()) < 1e-15);

        let fi = svd(&DenseMatrix::identity(3));
        let h2 = hat_matrix(&fi, &Subset::Single(1)).unwrap();
        assert_eq!(h2, DenseMatrix::from_diag(&[0.0, 1.0, 0.0]).unwrap());
    }

    #[test]
    fn empty_subset_gives_zero_hat_matrix() {
        let f = svd(&toy());
        let h = hat_matrix(&f, &Subset::Trailing(0)).unwrap();
        assert_eq!(h, DenseMatrix::zeros(3, 3));
        assert!(hat_matrix(&f, &Subset::Single(2)).is_err());
        assert!(hat_matrix(&f, &Subset::Leading(3)).is_err());
    }

    #[test]
    fn gram_pseudo_inverse_toy() {
        let f = svd(&toy());
        let g1 = gram_pseudo_inverse(&f, &Subset::Leading(1)).unwrap();
        assert_eq!(g1, DenseMatrix::from_diag(&[0.0, 0.25]).unwrap());
        let g = gram_pseudo_inverse(&f, &Subset::All).unwrap();
        assert_eq!(g, DenseMatrix::from_diag(&[1.0, 0.25]).unwrap());

        let fi = svd(&DenseMatrix::identity(4));
        let gs = gram_pseudo_inverse(&fi, &Subset::Indices(vec![0, 2])).unwrap();
        assert_eq!(gs, DenseMatrix::from_diag(&[1.0, 0.0, 1.0, 0.0]).unwrap());
    }

    #[test]
    fn gram_pseudo_inverse_names_offending_index() {
        let x = DenseMatrix::from_rows(&[[3.0, 0.0], [0.0, 0.0], [0.0, 0.0]]).unwrap();
        let f = svd(&x);
        assert!(gram_pseudo_inverse(&f, &Subset::Leading(1)).is_ok());
        match gram_pseudo_inverse(&f, &Subset::All) {
            Err(PcrError::RankDeficient { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn loading_projector_toy() {
        let f = svd(&toy());
        let p1 = loading_projector(&f, &Subset::Leading(1)).unwrap();
        assert_eq!(p1.diag(), vec![0.0, 1.0]);
        let p2 = loading_projector(&f, &Subset::All).unwrap();
        assert_eq!(p2, DenseMatrix::identity(2));
    }

    #[test]
    fn serde_round_trip_as_nested_rows() {
        let json = serde_json::to_string(&toy()).unwrap();
        assert_eq!(json, "[[1.0,0.0],[0.0,2.0],[0.0,0.0]]");
        let back: DenseMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, toy());
        assert!(serde_json::from_str::<DenseMatrix>("[[1.0],[2.0,3.0]]").is_err());
    }
}
