//! Instance families: identity, orthogonal projections, the geometric
//! completely positive family `V = (b ⊗ C | D ⊗ a)`, and random instances.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramRep;
use crate::instance::CpsdInstance;
use crate::linalg::{dot, SymMatrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Identity,
    Projection,
    CpGeometric,
    RandomPsd,
    RandomDiagonal,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::Projection => "projection",
            Family::CpGeometric => "cp_geometric",
            Family::RandomPsd => "random_psd",
            Family::RandomDiagonal => "random_diagonal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    /// Factor side; ignored by `identity` and `cp_geometric`.
    pub d: usize,
    /// Geometric ratio for `cp_geometric`.
    pub q: f64,
    /// Inner dimension of `W_i` for `random_psd`; defaults to `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_dim: Option<usize>,
    /// Projection ranks for `projection`; defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            d: n,
            q: 0.5,
            inner_dim: None,
            ranks: None,
            seed: 0,
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<CpsdInstance> {
    match spec.family {
        Family::Identity => identity_instance(spec.n),
        Family::Projection => {
            let ranks = spec.ranks.clone().unwrap_or_else(|| vec![1; spec.n]);
            if ranks.len() != spec.n {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    got: ranks.len(),
                });
            }
            projection_instance(spec.n, spec.d, &ranks, spec.seed)
        }
        Family::CpGeometric => cp_geometric_instance(spec.n, spec.q),
        Family::RandomPsd => {
            random_psd_instance(spec.n, spec.d, spec.inner_dim.unwrap_or(spec.d), spec.seed)
        }
        Family::RandomDiagonal => random_diagonal_instance(spec.n, spec.d, spec.seed),
    }
}

fn need_positive(name: &str, x: usize) -> Result<()> {
    if x == 0 {
        Err(Error::InvalidInput(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// `I_n` witnessed by `E_11, …, E_nn`; `ℓ = L = 1`.
pub fn identity_instance(n: usize) -> Result<CpsdInstance> {
    need_positive("n", n)?;
    let factors = (0..n).map(|i| SymMatrix::from_diagonal(&unit(n, i))).collect();
    Ok(CpsdInstance::from_witness(GramRep::new_unchecked(factors)?))
}

/// Orthonormalize columns with two passes of modified Gram–Schmidt.
fn orthonormalize(mut cols: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    for k in 0..cols.len() {
        for _ in 0..2 {
            for j in 0..k {
                let c = dot(&cols[j], &cols[k]);
                let (head, tail) = cols.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= c * y;
                }
            }
        }
        let norm = dot(&cols[k], &cols[k]).sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidInput("subspace basis is rank deficient".into()));
        }
        cols[k].iter_mut().for_each(|x| *x /= norm);
    }
    Ok(cols)
}

/// Witness by the orthogonal projections onto the spans of `bases[i]`.
pub fn projection_instance_from_subspaces(bases: Vec<Vec<Vec<f64>>>) -> Result<CpsdInstance> {
    let d = bases
        .first()
        .and_then(|b| b.first())
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidInput("need at least one non-empty basis".into()))?;
    let mut factors = Vec::with_capacity(bases.len());
    for basis in bases {
        if basis.is_empty() || basis.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput("every basis must be non-empty with common dimension".into()));
        }
        let mut p = SymMatrix::zeros(d);
        for v in orthonormalize(basis)? {
            p.add_outer(1.0, &v);
        }
        factors.push(p);
    }
    Ok(CpsdInstance::from_witness(GramRep::new_unchecked(factors)?))
}

/// Projections of rank `ranks[i]` onto random subspaces of `ℝ^d`. Then
/// `M_ii = tr(P_i) = ranks[i]` and `ℓ = L = max ranks`.
pub fn projection_instance(n: usize, d: usize, ranks: &[usize], seed: u64) -> Result<CpsdInstance> {
    need_positive("n", n)?;
    need_positive("d", d)?;
    if ranks.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ranks.len(),
        });
    }
    if let Some(&bad) = ranks.iter().find(|&&k| k == 0 || k > d) {
        return Err(Error::InvalidInput(format!("projection rank {bad} outside [1, {d}]")));
    }
    let bases = ranks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut rng = rng::rng_from_seed(rng::split(seed, i as u64));
            (0..k)
                .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
                .collect()
        })
        .collect();
    projection_instance_from_subspaces(bases)
}

/// Columns of `V = (b ⊗ C | D ⊗ a)` with `C = diag(c)`, `D = diag(d)`.
pub fn cp_geometric_columns(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    need_positive("n", n)?;
    if b.len() != n || c.len() != n || d.len() != n {
        return Err(Error::InvalidInput("a, b, c, d must share a length".into()));
    }
    if a.iter().chain(b).chain(c).chain(d).any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("a, b, c, d must be strictly positive".into()));
    }
    let mut cols = Vec::with_capacity(2 * n);
    // (b ⊗ C)[:, j] = b ⊗ (c_j e_j)
    for j in 0..n {
        let mut v = vec![0.0; n * n];
        for (k, &bk) in b.iter().enumerate() {
            v[k * n + j] = bk * c[j];
        }
        cols.push(v);
    }
    // (D ⊗ a)[:, j] = (d_j e_j) ⊗ a
    for j in 0..n {
        let mut v = vec![0.0; n * n];
        for (k, &ak) in a.iter().enumerate() {
            v[j * n + k] = d[j] * ak;
        }
        cols.push(v);
    }
    Ok(cols)
}

/// `M = VᵗV ∈ CP^{2n}` witnessed by the diagonal matrices `diag(v_i)`.
pub fn cp_geometric_general(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<CpsdInstance> {
    let cols = cp_geometric_columns(a, b, c, d)?;
    let factors = cols.iter().map(|v| SymMatrix::from_diagonal(v)).collect();
    Ok(CpsdInstance::from_witness(GramRep::new_unchecked(factors)?))
}

/// `a = b = (1−q)(1, q, …, q^{n−1})`, `c = d = 1`. Every column has
/// 1-norm `1 − qⁿ < 1`, so `ℓ, L < 1`.
pub fn cp_geometric_instance(n: usize, q: f64) -> Result<CpsdInstance> {
    need_positive("n", n)?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!("q = {q} outside (0, 1)")));
    }
    let a: Vec<f64> = (0..n).map(|k| (1.0 - q) * q.powi(k as i32)).collect();
    let ones = vec![1.0; n];
    cp_geometric_general(&a, &a, &ones, &ones)
}

/// `A_i = W_i W_iᵗ` with `W_i` a `d × inner_dim` standard Gaussian matrix.
pub fn random_psd_instance(n: usize, d: usize, inner_dim: usize, seed: u64) -> Result<CpsdInstance> {
    need_positive("n", n)?;
    need_positive("d", d)?;
    need_positive("inner_dim", inner_dim)?;
    let factors = (0..n)
        .map(|i| {
            let mut rng = rng::rng_from_seed(rng::split(seed, i as u64));
            let w: Vec<f64> = (0..d * inner_dim).map(|_| rng.sample(StandardNormal)).collect();
            SymMatrix::from_fn(d, |p, q| {
                dot(&w[p * inner_dim..(p + 1) * inner_dim], &w[q * inner_dim..(q + 1) * inner_dim])
            })
        })
        .collect();
    Ok(CpsdInstance::from_witness(GramRep::new_unchecked(factors)?))
}

/// Diagonal factors with entries uniform on `[0, 1)`; the target is
/// completely positive.
pub fn random_diagonal_instance(n: usize, d: usize, seed: u64) -> Result<CpsdInstance> {
    need_positive("n", n)?;
    need_positive("d", d)?;
    let factors = (0..n)
        .map(|i| {
            let mut rng = rng::rng_from_seed(rng::split(seed, i as u64));
            let diag: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            SymMatrix::from_diagonal(&diag)
        })
        .collect();
    Ok(CpsdInstance::from_witness(GramRep::new_unchecked(factors)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::{gram, rep_side};
    use crate::linalg::{is_psd, numerical_rank};
    use crate::tol::{PSD_TOL, RANK_TOL};

    #[test]
    fn identity_examples() {
        let one = identity_instance(1).unwrap();
        assert_eq!(one.target(), &SymMatrix::identity(1));
        assert_eq!(gram(identity_instance(3).unwrap().witness()), SymMatrix::identity(3));
        let ten = identity_instance(10).unwrap();
        assert_eq!((ten.ell(), ten.big_l()), (1.0, 1.0));
        assert_eq!(rep_side(ten.witness()), 10);
        assert!(identity_instance(0).is_err());
    }

    #[test]
    fn orthogonal_lines_give_identity() {
        let bases = (0..4).map(|i| vec![unit(6, i)]).collect();
        let inst = projection_instance_from_subspaces(bases).unwrap();
        assert!(inst.target().max_abs_diff(&SymMatrix::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn projections_are_idempotent() {
        let inst = projection_instance(5, 8, &[1, 2, 3, 4, 8], 3).unwrap();
        for (p, k) in inst.witness().factors().iter().zip([1.0, 2.0, 3.0, 4.0, 8.0]) {
            let p2 = SymMatrix::from_fn(8, |i, j| (0..8).map(|t| p.get(i, t) * p.get(t, j)).sum());
            let err = crate::linalg::frobenius(&p2.sub(p).unwrap());
            assert!(err < 1e-9);
            assert!((p.trace() - k).abs() < 1e-12);
        }
        assert!((inst.ell() - inst.big_l()).abs() < 1e-9);
        assert!((inst.ell() - 8.0).abs() < 1e-9);
        assert!(projection_instance(2, 3, &[1, 4], 0).is_err());
        assert!(projection_instance(2, 3, &[0, 1], 0).is_err());
    }

    #[test]
    fn geometric_n1_by_hand() {
        // a = b = (1 - q), V = [[b c, d a]] with one row.
        let q = 0.25;
        let inst = cp_geometric_instance(1, q).unwrap();
        let x = (1.0 - q) * (1.0 - q);
        let want = SymMatrix::from_rows(&[vec![x, x], vec![x, x]]).unwrap();
        assert!(inst.target().max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn geometric_column_norms() {
        for (n, q) in [(3, 0.5), (5, 0.5), (7, 0.2), (4, 0.9)] {
            let inst = cp_geometric_instance(n, q).unwrap();
            assert_eq!(inst.n(), 2 * n);
            assert_eq!(inst.witness().side(), n * n);
            let want = 1.0 - q.powi(n as i32);
            for f in inst.witness().factors() {
                assert!((f.trace() - want).abs() < 1e-12);
                assert!(f.is_diagonal());
            }
            assert!(inst.ell() < 1.0 && inst.big_l() < 1.0);
            assert!(inst.target().min_entry() >= 0.0);
            assert!(is_psd(inst.target(), PSD_TOL));
        }
    }

    #[test]
    fn geometric_two_routes() {
        let (n, q) = (4, 0.3f64);
        let a: Vec<f64> = (0..n).map(|k| (1.0 - q) * q.powi(k)).collect();
        let ones = vec![1.0; n as usize];
        let cols = cp_geometric_columns(&a, &a, &ones, &ones).unwrap();
        let vtv = SymMatrix::from_fn(cols.len(), |i, j| dot(&cols[i], &cols[j]));
        let inst = cp_geometric_instance(n as usize, q).unwrap();
        assert!(gram(inst.witness()).max_abs_diff(&vtv).unwrap() < 1e-10);
    }

    #[test]
    fn random_instances() {
        let rank1 = random_psd_instance(3, 6, 1, 4).unwrap();
        for f in rank1.witness().factors() {
            assert_eq!(numerical_rank(f, RANK_TOL), 1);
        }
        assert_eq!(random_psd_instance(3, 6, 2, 5).unwrap(), random_psd_instance(3, 6, 2, 5).unwrap());
        let full = random_psd_instance(4, 20, 20, 6).unwrap();
        for f in full.witness().factors() {
            assert_eq!(numerical_rank(f, RANK_TOL), 20);
        }
        let diag = random_diagonal_instance(4, 40, 7).unwrap();
        assert!(diag.witness().factors().iter().all(SymMatrix::is_diagonal));
    }
}
