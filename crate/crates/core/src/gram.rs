//! Gram representations by psd matrices and their compression.
//!
//! A [`GramRep`] is a list of psd factors `A_1, …, A_n` of common side `d`.
//! Its Gram matrix `(⟨A_i, A_j⟩)_ij` is completely positive semidefinite, and
//! `d` upper-bounds the cpsd-rank of that matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::linalg::{eig_is_psd, eig_rank, frobenius, sym_eig, trace_inner, SymMatrix};
use crate::tol::{COMPRESS_RESIDUAL_TOL, JACOBI_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramRep {
    factors: Vec<SymMatrix>,
}

impl GramRep {
    /// Validates that factors share a side and are psd within `psd_tol`.
    pub fn new(factors: Vec<SymMatrix>, psd_tol: f64) -> Result<Self> {
        let rep = Self::new_unchecked(factors)?;
        for (i, f) in rep.factors.iter().enumerate() {
            let eig = sym_eig(f, JACOBI_TOL)?;
            if !eig_is_psd(&eig, psd_tol) {
                let min = eig.values().last().copied().unwrap_or(0.0);
                return Err(Error::InvalidInput(format!(
                    "factor {i} is not psd (min eigenvalue {min:e})"
                )));
            }
        }
        Ok(rep)
    }

    /// Checks shape only. Used where psd-ness holds by construction.
    pub fn new_unchecked(factors: Vec<SymMatrix>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::InvalidInput("a Gram representation needs at least one factor".into()));
        };
        let d = first.side();
        if let Some(bad) = factors.iter().find(|f| f.side() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.side(),
            });
        }
        Ok(Self { factors })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn side(&self) -> usize {
        self.factors[0].side()
    }

    pub fn factors(&self) -> &[SymMatrix] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<SymMatrix> {
        self.factors
    }

    pub fn factor_sum(&self) -> SymMatrix {
        let mut sum = SymMatrix::zeros(self.side());
        for f in &self.factors {
            sum = sum.add(f).expect("factors share a side");
        }
        sum
    }
}

/// `(⟨A_i, A_j⟩)_{i,j}`
pub fn gram(rep: &GramRep) -> SymMatrix {
    let f = rep.factors();
    SymMatrix::from_fn(f.len(), |i, j| {
        trace_inner(&f[i], &f[j]).expect("factors share a side")
    })
}

/// Side of the witness; an upper bound on the cpsd-rank of its Gram matrix.
pub fn rep_side(rep: &GramRep) -> usize {
    rep.side()
}

/// Largest factor rank; an upper bound on the Gram-cpsd-rank.
pub fn gram_rank_of_rep(rep: &GramRep, tol: f64) -> Result<usize> {
    let mut best = 0;
    for f in rep.factors() {
        best = best.max(eig_rank(&sym_eig(f, JACOBI_TOL)?, tol));
    }
    Ok(best)
}

/// Rotate every factor into the eigenbasis of `Σ A_i` and keep the leading
/// `r × r` block, `r = rank(Σ A_i)`.
///
/// Since each `A_i` is psd and dominated by the sum, its mass outside the
/// range of the sum vanishes; the restriction keeps every pairwise trace
/// inner product. The rank cutoff is `tol · λ_max(Σ A_i)`. Errors if a factor
/// loses more than `1e-7 · ‖A_i‖_F` of Frobenius mass to the restriction.
pub fn compress_rep(rep: &GramRep, tol: f64) -> Result<GramRep> {
    compress_rep_with(rep, tol, Exec::default())
}

pub fn compress_rep_with(rep: &GramRep, tol: f64, exec: Exec) -> Result<GramRep> {
    let sum = rep.factor_sum();
    let eig = sym_eig(&sum, JACOBI_TOL)?;
    let lambda_max = eig.values().first().copied().unwrap_or(0.0);
    let cutoff = tol * lambda_max;
    let r = if lambda_max > 0.0 {
        eig.values().iter().filter(|&&x| x > cutoff).count()
    } else {
        0
    };
    if r == 0 {
        return GramRep::new_unchecked(vec![SymMatrix::zeros(1); rep.len()]);
    }
    let basis: Vec<&[f64]> = eig.vectors().collect();
    let d = rep.side();

    let factors = exec::try_map_range(exec, rep.len(), |i| {
        let factor = &rep.factors()[i];
        let rotated = factor.congruence(&basis);
        let mut discarded = 0.0;
        for p in 0..d {
            for q in 0..d {
                if p >= r || q >= r {
                    let x = rotated.get(p, q);
                    discarded += x * x;
                }
            }
        }
        let discarded = discarded.sqrt();
        if discarded >= COMPRESS_RESIDUAL_TOL * frobenius(factor) && discarded > 0.0 {
            return Err(Error::CompressionResidual {
                factor: i,
                residual: discarded,
            });
        }
        Ok(SymMatrix::from_fn(r, |p, q| rotated.get(p, q)))
    })?;
    GramRep::new_unchecked(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_psd, numerical_rank};
    use crate::tol::{PSD_TOL, RANK_TOL};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn elementary(n: usize) -> GramRep {
        let factors = (0..n)
            .map(|i| {
                let mut d = vec![0.0; n];
                d[i] = 1.0;
                SymMatrix::from_diagonal(&d)
            })
            .collect();
        GramRep::new(factors, PSD_TOL).unwrap()
    }

    fn wwt(rng: &mut crate::rng::Rng, d: usize, k: usize) -> SymMatrix {
        let w: Vec<f64> = (0..d * k).map(|_| rng.sample(StandardNormal)).collect();
        SymMatrix::from_fn(d, |i, j| (0..k).map(|t| w[i * k + t] * w[j * k + t]).sum())
    }

    #[test]
    fn gram_of_elementary_is_identity() {
        assert_eq!(gram(&elementary(4)), SymMatrix::identity(4));
    }

    #[test]
    fn gram_of_single_factor() {
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let rep = GramRep::new(vec![a.clone()], PSD_TOL).unwrap();
        let g = gram(&rep);
        assert_eq!(g.side(), 1);
        assert!((g.get(0, 0) - frobenius(&a).powi(2)).abs() < 1e-12);
        assert_eq!(rep_side(&rep), 2);
    }

    #[test]
    fn random_gram_is_dnn() {
        let mut rng = crate::rng::rng_from_seed(5);
        let rep = GramRep::new((0..4).map(|_| wwt(&mut rng, 5, 3)).collect(), PSD_TOL).unwrap();
        let g = gram(&rep);
        assert!(is_psd(&g, PSD_TOL));
        assert!(g.min_entry() >= -1e-12);
    }

    #[test]
    fn elementary_ranks() {
        let rep = elementary(6);
        assert_eq!(rep_side(&rep), 6);
        assert_eq!(gram_rank_of_rep(&rep, RANK_TOL).unwrap(), 1);
        let c = compress_rep(&rep, RANK_TOL).unwrap();
        assert_eq!(rep_side(&c), 6);
        assert_eq!(gram(&c), gram(&rep));
    }

    #[test]
    fn full_rank_factor_rank() {
        let mut rng = crate::rng::rng_from_seed(8);
        let rep = GramRep::new(vec![wwt(&mut rng, 4, 6)], PSD_TOL).unwrap();
        assert_eq!(gram_rank_of_rep(&rep, RANK_TOL).unwrap(), 4);
    }

    #[test]
    fn compress_embedded_blocks() {
        let mut rng = crate::rng::rng_from_seed(21);
        let d = 10;
        let factors: Vec<SymMatrix> = (0..3)
            .map(|_| {
                let block = wwt(&mut rng, 2, 2);
                SymMatrix::from_fn(d, |i, j| if i < 2 && j < 2 { block.get(i, j) } else { 0.0 })
            })
            .collect();
        let rep = GramRep::new(factors, PSD_TOL).unwrap();
        let c = compress_rep(&rep, RANK_TOL).unwrap();
        assert_eq!(rep_side(&c), 2);
        let g0 = gram(&rep);
        let err = gram(&c).max_abs_diff(&g0).unwrap();
        assert!(err <= 1e-8 * g0.max_abs().max(1.0));
        assert!(c.factors().iter().all(|f| is_psd(f, PSD_TOL)));
    }

    #[test]
    fn compress_positive_definite_sum_keeps_side() {
        let mut rng = crate::rng::rng_from_seed(3);
        let rep = GramRep::new((0..3).map(|_| wwt(&mut rng, 4, 4)).collect(), PSD_TOL).unwrap();
        let c = compress_rep(&rep, RANK_TOL).unwrap();
        assert_eq!(rep_side(&c), 4);
        assert!(gram(&c).max_abs_diff(&gram(&rep)).unwrap() < 1e-8 * gram(&rep).max_abs());
        assert_eq!(numerical_rank(&rep.factor_sum(), RANK_TOL), 4);
    }

    #[test]
    fn compress_zero_rep() {
        let rep = GramRep::new(vec![SymMatrix::zeros(5); 3], PSD_TOL).unwrap();
        let c = compress_rep(&rep, RANK_TOL).unwrap();
        assert_eq!(rep_side(&c), 1);
        assert_eq!(c.len(), 3);
        assert_eq!(gram(&c), SymMatrix::zeros(3));
    }

    #[test]
    fn rejects_non_psd_and_ragged() {
        let bad = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(GramRep::new(vec![bad], PSD_TOL).is_err());
        assert!(GramRep::new(vec![SymMatrix::zeros(2), SymMatrix::zeros(3)], PSD_TOL).is_err());
        assert!(GramRep::new(vec![], PSD_TOL).is_err());
    }
}
