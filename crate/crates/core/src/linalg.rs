//! Dense symmetric matrices and the handful of kernels the approximation
//! pipeline needs: trace inner product, cyclic Jacobi eigendecomposition,
//! psd and rank tests, block-diagonal sums and the Hermitian-to-real
//! embedding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::{JACOBI_MAX_SWEEPS, JACOBI_TOL, SYM_TOL};

/// Dense real symmetric matrix, row-major, full storage.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRaw", into = "SymMatrixRaw")]
pub struct SymMatrix {
    side: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SymMatrixRaw {
    side: usize,
    data: Vec<f64>,
}

impl TryFrom<SymMatrixRaw> for SymMatrix {
    type Error = Error;
    fn try_from(raw: SymMatrixRaw) -> Result<Self> {
        SymMatrix::from_row_major(raw.side, raw.data)
    }
}

impl From<SymMatrix> for SymMatrixRaw {
    fn from(m: SymMatrix) -> Self {
        SymMatrixRaw {
            side: m.side,
            data: m.data,
        }
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.side, self.side)?;
        for row in self.rows() {
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

impl SymMatrix {
    pub fn zeros(side: usize) -> Self {
        assert!(side >= 1, "matrix side must be positive");
        Self {
            side,
            data: vec![0.0; side * side],
        }
    }

    pub fn identity(side: usize) -> Self {
        let mut m = Self::zeros(side);
        for i in 0..side {
            m.data[i * side + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = x;
        }
        m
    }

    /// Build from `f(i, j)` evaluated on the upper triangle and mirrored.
    pub fn from_fn(side: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(side);
        for i in 0..side {
            for j in i..side {
                let x = f(i, j);
                m.data[i * side + j] = x;
                m.data[j * side + i] = x;
            }
        }
        m
    }

    /// Row-major entries; rejects non-square or asymmetric input.
    pub fn from_row_major(side: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidInput("matrix side must be positive".into()));
        }
        if data.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                got: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry {bad}")));
        }
        let m = Self { side, data };
        let asym = m.asymmetry();
        if asym > SYM_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let side = rows.len();
        let mut data = Vec::with_capacity(side * side);
        for row in rows {
            if row.len() != side {
                return Err(Error::DimensionMismatch {
                    expected: side,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(side, data)
    }

    /// `weight · v vᵗ`
    pub fn outer(weight: f64, v: &[f64]) -> Self {
        let mut m = Self::zeros(v.len());
        m.add_outer(weight, v);
        m
    }

    /// `self += weight · v vᵗ`
    pub fn add_outer(&mut self, weight: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.side);
        let n = self.side;
        for i in 0..n {
            let wi = weight * v[i];
            let row = &mut self.data[i * n..(i + 1) * n];
            for (x, &vj) in row.iter_mut().zip(v) {
                *x += wi * vj;
            }
        }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.side + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.side)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.side).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.side).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True iff every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.side;
        (0..n).all(|i| (0..n).all(|j| i == j || self.data[i * n + j] == 0.0))
    }

    fn asymmetry(&self) -> f64 {
        let n = self.side;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            side: self.side,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_side(self.side, other.side)?;
        Ok(Self {
            side: self.side,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_side(self.side, other.side)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `Bᵗ A B` for the `d × k` matrix `B` whose columns are `basis[0..k]`.
    pub fn congruence(&self, basis: &[&[f64]]) -> Self {
        let n = self.side;
        let k = basis.len();
        let av: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| {
                debug_assert_eq!(b.len(), n);
                self.rows().map(|row| dot(row, b)).collect()
            })
            .collect();
        let mut out = Self::zeros(k.max(1));
        if k == 0 {
            return out;
        }
        for (p, bp) in basis.iter().enumerate() {
            for (q, aq) in av.iter().enumerate().skip(p) {
                let x = dot(bp, aq);
                out.data[p * k + q] = x;
                out.data[q * k + p] = x;
            }
        }
        out
    }
}

fn check_side(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `⟨a, b⟩ = tr(ba) = Σ_ij a_ij b_ij`
pub fn trace_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_side(a.side, b.side)?;
    Ok(dot(&a.data, &b.data))
}

pub fn frobenius(a: &SymMatrix) -> f64 {
    dot(&a.data, &a.data).sqrt()
}

/// Spectral decomposition with eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    side: usize,
    values: Vec<f64>,
    /// Eigenvector `k` occupies `vectors[k*side..(k+1)*side]`.
    vectors: Vec<f64>,
}

impl EigenDecomp {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.side..(k + 1) * self.side]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.side)
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.side);
        for (k, &lambda) in self.values.iter().enumerate() {
            m.add_outer(lambda, self.vector(k));
        }
        m
    }

    /// Eigendecomposition of a diagonal matrix: the standard basis, reordered.
    fn of_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));
        let mut vectors = vec![0.0; n * n];
        for (k, &i) in order.iter().enumerate() {
            vectors[k * n + i] = 1.0;
        }
        Self {
            side: n,
            values: order.iter().map(|&i| diag[i]).collect(),
            vectors,
        }
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Converges when the off-diagonal Frobenius mass drops below
/// `tol · ‖a‖_F`. Ties in the sorted spectrum keep their original index order.
/// Diagonal input is returned as-is with standard basis vectors.
pub fn sym_eig(a: &SymMatrix, tol: f64) -> Result<EigenDecomp> {
    let n = a.side;
    if a.is_diagonal() {
        return Ok(EigenDecomp::of_diagonal(&a.diagonal()));
    }
    let tol = if tol > 0.0 { tol } else { JACOBI_TOL };
    let mut m = a.data.clone();
    // v holds eigenvectors as rows (v[k*n..]) so that updates are contiguous.
    let mut v = SymMatrix::identity(n).data;
    let norm = frobenius(a);
    let threshold = tol * norm;

    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut residual = off(&m);
    let mut sweeps = 0;
    while residual > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vp = v[p * n + k];
                    let vq = v[q * n + k];
                    v[p * n + k] = c * vp - s * vq;
                    v[q * n + k] = s * vp + c * vq;
                }
            }
        }
        sweeps += 1;
        residual = off(&m);
    }

    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        vectors.extend_from_slice(&v[i * n..(i + 1) * n]);
    }
    Ok(EigenDecomp {
        side: n,
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors,
    })
}

fn relative_scale(eig: &EigenDecomp) -> f64 {
    eig.max_abs_value().max(1.0)
}

/// `λ_min ≥ −tol · max(1, |λ_max|)`; a failed eigensolve counts as not psd.
pub fn is_psd(a: &SymMatrix, tol: f64) -> bool {
    match sym_eig(a, JACOBI_TOL) {
        Ok(eig) => eig_is_psd(&eig, tol),
        Err(_) => false,
    }
}

pub(crate) fn eig_is_psd(eig: &EigenDecomp, tol: f64) -> bool {
    let min = eig.values().last().copied().unwrap_or(0.0);
    min >= -tol * relative_scale(eig)
}

/// Number of eigenvalues with `|λ| > tol · max(1, |λ_max|)`.
pub fn numerical_rank(a: &SymMatrix, tol: f64) -> usize {
    match sym_eig(a, JACOBI_TOL) {
        Ok(eig) => eig_rank(&eig, tol),
        Err(_) => a.side,
    }
}

pub(crate) fn eig_rank(eig: &EigenDecomp, tol: f64) -> usize {
    let cutoff = tol * relative_scale(eig);
    eig.values().iter().filter(|x| x.abs() > cutoff).count()
}

/// `a ⊕ b`
pub fn block_diag_sum(a: &SymMatrix, b: &SymMatrix) -> SymMatrix {
    let (na, nb) = (a.side, b.side);
    let n = na + nb;
    let mut out = SymMatrix::zeros(n);
    for i in 0..na {
        out.data[i * n..i * n + na].copy_from_slice(&a.data[i * na..(i + 1) * na]);
    }
    for i in 0..nb {
        let row = na + i;
        out.data[row * n + na..(row + 1) * n].copy_from_slice(&b.data[i * nb..(i + 1) * nb]);
    }
    out
}

/// Complex Hermitian matrix stored as a symmetric real part and an
/// antisymmetric imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix {
    side: usize,
    real: Vec<f64>,
    imag: Vec<f64>,
}

impl HermMatrix {
    pub fn new(side: usize, real: Vec<f64>, imag: Vec<f64>) -> Result<Self> {
        let re = SymMatrix::from_row_major(side, real)?;
        if imag.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                got: imag.len(),
            });
        }
        let scale = imag.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..side {
            for j in i..side {
                let skew = (imag[i * side + j] + imag[j * side + i]).abs();
                if skew > SYM_TOL * scale {
                    return Err(Error::NotSymmetric { asymmetry: skew });
                }
            }
        }
        Ok(Self {
            side,
            real: re.data,
            imag,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn real(&self, i: usize, j: usize) -> f64 {
        self.real[i * self.side + j]
    }

    pub fn imag(&self, i: usize, j: usize) -> f64 {
        self.imag[i * self.side + j]
    }
}

/// `M ↦ (1/√2)·[[Re M, −Im M], [Im M, Re M]]`, a linear isometry from
/// Hermitian `d × d` matrices into real symmetric `2d × 2d` matrices that
/// maps psd to psd.
pub fn hermitian_embed(m: &HermMatrix) -> SymMatrix {
    let d = m.side;
    let n = 2 * d;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = SymMatrix::zeros(n);
    for i in 0..d {
        for j in 0..d {
            let re = s * m.real(i, j);
            let im = s * m.imag(i, j);
            out.data[i * n + j] = re;
            out.data[(i + d) * n + (j + d)] = re;
            out.data[i * n + (j + d)] = -im;
            out.data[(i + d) * n + j] = im;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::{PSD_TOL, RANK_TOL};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = crate::rng::rng_from_seed(seed);
        let vals: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        SymMatrix::from_fn(n, |i, j| vals[i * n + j])
    }

    fn random_wwt(rows: usize, cols: usize, seed: u64) -> SymMatrix {
        let mut rng = crate::rng::rng_from_seed(seed);
        let w: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
        SymMatrix::from_fn(rows, |i, j| {
            (0..cols).map(|k| w[i * cols + k] * w[j * cols + k]).sum()
        })
    }

    #[test]
    fn trace_inner_examples() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(trace_inner(&i2, &i2).unwrap(), 2.0);
        let a = random_sym(4, 1);
        assert_eq!(trace_inner(&a, &SymMatrix::zeros(4)).unwrap(), 0.0);
        let b = random_sym(5, 2);
        let c = random_sym(5, 3);
        let mut oracle = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                oracle += b.get(i, j) * c.get(i, j);
            }
        }
        assert!((trace_inner(&b, &c).unwrap() - oracle).abs() < 1e-12);
        assert!(matches!(
            trace_inner(&b, &i2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frobenius_examples() {
        assert!((frobenius(&SymMatrix::identity(3)) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius(&SymMatrix::zeros(3)), 0.0);
        let a = random_sym(6, 4);
        let oracle = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((frobenius(&a) - oracle).abs() < 1e-12);
    }

    #[test]
    fn eig_of_diagonal_is_permuted_identity() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let eig = sym_eig(&a, JACOBI_TOL).unwrap();
        assert_eq!(eig.values(), &[3.0, 2.0, 1.0]);
        assert_eq!(eig.vector(0), &[1.0, 0.0, 0.0]);
        assert_eq!(eig.vector(1), &[0.0, 0.0, 1.0]);
        assert_eq!(eig.vector(2), &[0.0, 1.0, 0.0]);

        let eig = sym_eig(&SymMatrix::identity(4), JACOBI_TOL).unwrap();
        assert!(eig.values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn eig_reconstructs_random_matrix() {
        for seed in 0..5 {
            let a = random_sym(8, 100 + seed);
            let eig = sym_eig(&a, JACOBI_TOL).unwrap();
            let rec = eig.reconstruct();
            let rel = frobenius(&rec.sub(&a).unwrap()) / frobenius(&a);
            assert!(rel < 1e-10, "relative reconstruction error {rel}");
            assert!(eig.values().windows(2).all(|w| w[0] >= w[1]));
            for p in 0..8 {
                for q in 0..8 {
                    let g = dot(eig.vector(p), eig.vector(q));
                    let want = if p == q { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eig_is_deterministic() {
        let a = random_sym(7, 9);
        assert_eq!(sym_eig(&a, JACOBI_TOL).unwrap(), sym_eig(&a, JACOBI_TOL).unwrap());
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&SymMatrix::identity(4), PSD_TOL));
        assert!(!is_psd(&SymMatrix::from_diagonal(&[1.0, -1.0]), PSD_TOL));
        assert!(is_psd(&random_wwt(5, 3, 11), PSD_TOL));
    }

    #[test]
    fn rank_examples() {
        let u = [0.6, 0.8, 0.0];
        assert_eq!(numerical_rank(&SymMatrix::outer(1.0, &u), RANK_TOL), 1);
        assert_eq!(numerical_rank(&SymMatrix::zeros(3), RANK_TOL), 0);
        assert_eq!(numerical_rank(&random_wwt(7, 3, 12), RANK_TOL), 3);
    }

    #[test]
    fn block_diag_examples() {
        let one = SymMatrix::identity(1);
        assert_eq!(block_diag_sum(&one, &one), SymMatrix::identity(2));
        let a = random_sym(3, 5);
        let padded = block_diag_sum(&a, &SymMatrix::zeros(1));
        for i in 0..4 {
            for j in 0..4 {
                let want = if i < 3 && j < 3 { a.get(i, j) } else { 0.0 };
                assert_eq!(padded.get(i, j), want);
            }
        }
        let (a2, b, b2) = (random_sym(3, 6), random_sym(3, 7), random_sym(3, 8));
        let lhs = trace_inner(&block_diag_sum(&a, &b), &block_diag_sum(&a2, &b2)).unwrap();
        let rhs = trace_inner(&a, &a2).unwrap() + trace_inner(&b, &b2).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn embed_real_and_scalar() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = HermMatrix::new(1, vec![2.5], vec![0.0]).unwrap();
        assert_eq!(
            hermitian_embed(&h),
            SymMatrix::from_diagonal(&[2.5 * s, 2.5 * s])
        );
        let a = random_sym(3, 13);
        let h = HermMatrix::new(3, a.as_slice().to_vec(), vec![0.0; 9]).unwrap();
        let e = hermitian_embed(&h);
        assert_eq!(e, block_diag_sum(&a.scaled(s), &a.scaled(s)));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            SymMatrix::from_row_major(2, vec![1.0, 2.0, 3.0, 4.0]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(SymMatrix::from_row_major(2, vec![1.0; 3]).is_err());
        assert!(HermMatrix::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]).is_err());
    }
}
