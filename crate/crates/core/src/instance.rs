//! A target matrix together with the Gram witness that certifies it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{gram, GramRep};
use crate::linalg::{block_diag_sum, SymMatrix};
use crate::tol::WITNESS_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpsdInstance {
    target: SymMatrix,
    witness: GramRep,
    /// `max_i tr(A_i)`, read off the witness. Different witnesses of the same
    /// target can give different values.
    ell: f64,
    /// `max_i M_ii`
    big_l: f64,
}

impl CpsdInstance {
    /// Pairs `target` with `witness`, checking that the witness reproduces the
    /// target to `1e-8 · max(1, max entry)` and that the target is
    /// entrywise nonnegative to the same tolerance.
    pub fn new(target: SymMatrix, witness: GramRep) -> Result<Self> {
        if target.side() != witness.len() {
            return Err(Error::DimensionMismatch {
                expected: target.side(),
                got: witness.len(),
            });
        }
        let scale = target.max_abs().max(1.0);
        let deviation = gram(&witness).max_abs_diff(&target)?;
        if deviation > WITNESS_TOL * scale {
            return Err(Error::InconsistentWitness { deviation });
        }
        if target.min_entry() < -WITNESS_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "target has negative entry {:e}",
                target.min_entry()
            )));
        }
        Ok(Self::from_parts(target, witness))
    }

    /// Target computed from the witness.
    pub fn from_witness(witness: GramRep) -> Self {
        let target = gram(&witness);
        Self::from_parts(target, witness)
    }

    fn from_parts(target: SymMatrix, witness: GramRep) -> Self {
        let ell = witness
            .factors()
            .iter()
            .map(SymMatrix::trace)
            .fold(0.0, f64::max);
        let big_l = target.diagonal().into_iter().fold(0.0, f64::max);
        Self {
            target,
            witness,
            ell,
            big_l,
        }
    }

    pub fn n(&self) -> usize {
        self.target.side()
    }

    pub fn target(&self) -> &SymMatrix {
        &self.target
    }

    pub fn witness(&self) -> &GramRep {
        &self.witness
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn big_l(&self) -> f64 {
        self.big_l
    }
}

/// `λ·M` witnessed by `√λ·A_i`.
pub fn instance_scale(inst: &CpsdInstance, lambda: f64) -> Result<CpsdInstance> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "scale factor must be a nonnegative number, got {lambda}"
        )));
    }
    let root = lambda.sqrt();
    let factors = inst.witness.factors().iter().map(|f| f.scaled(root)).collect();
    Ok(CpsdInstance::from_parts(
        inst.target.scaled(lambda),
        GramRep::new_unchecked(factors)?,
    ))
}

/// `A + B` witnessed by the block sums `A_i ⊕ B_i`.
pub fn instance_add(a: &CpsdInstance, b: &CpsdInstance) -> Result<CpsdInstance> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.n(),
        });
    }
    let factors = a
        .witness
        .factors()
        .iter()
        .zip(b.witness.factors())
        .map(|(x, y)| block_diag_sum(x, y))
        .collect();
    Ok(CpsdInstance::from_parts(
        a.target.add(&b.target)?,
        GramRep::new_unchecked(factors)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::PSD_TOL;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn identity_instance(n: usize) -> CpsdInstance {
        let factors = (0..n)
            .map(|i| {
                let mut d = vec![0.0; n];
                d[i] = 1.0;
                SymMatrix::from_diagonal(&d)
            })
            .collect();
        CpsdInstance::from_witness(GramRep::new(factors, PSD_TOL).unwrap())
    }

    fn random_instance(n: usize, d: usize, seed: u64) -> CpsdInstance {
        let mut rng = crate::rng::rng_from_seed(seed);
        let factors = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
                SymMatrix::from_fn(d, |i, j| (0..d).map(|k| w[i * d + k] * w[j * d + k]).sum())
            })
            .collect();
        CpsdInstance::from_witness(GramRep::new(factors, PSD_TOL).unwrap())
    }

    #[test]
    fn scale_examples() {
        let inst = random_instance(3, 3, 1);
        assert_eq!(instance_scale(&inst, 1.0).unwrap(), inst);

        let zero = instance_scale(&inst, 0.0).unwrap();
        assert_eq!(zero.target(), &SymMatrix::zeros(3));
        assert!(zero.witness().factors().iter().all(|f| f.max_abs() == 0.0));

        let four = instance_scale(&identity_instance(5), 4.0).unwrap();
        assert_eq!(four.target(), &SymMatrix::identity(5).scaled(4.0));
        assert!(gram(four.witness()).max_abs_diff(four.target()).unwrap() < 1e-12);

        assert!(instance_scale(&inst, -1.0).is_err());
    }

    #[test]
    fn add_examples() {
        let a = random_instance(3, 3, 2);
        let zero = instance_scale(&a, 0.0).unwrap();
        let s = instance_add(&a, &zero).unwrap();
        assert_eq!(s.target(), a.target());
        assert_eq!(s.witness().side(), 6);

        let i = identity_instance(4);
        let two = instance_add(&i, &i).unwrap();
        assert_eq!(two.target(), &SymMatrix::identity(4).scaled(2.0));
        assert_eq!(two.witness().side(), 8);

        let b = random_instance(3, 3, 3);
        let sum = instance_add(&a, &b).unwrap();
        let want = a.target().add(b.target()).unwrap();
        assert!(gram(sum.witness()).max_abs_diff(&want).unwrap() < 1e-10 * want.max_abs());

        assert!(instance_add(&a, &identity_instance(4)).is_err());
    }

    #[test]
    fn constants_from_witness() {
        let inst = identity_instance(10);
        assert_eq!(inst.ell(), 1.0);
        assert_eq!(inst.big_l(), 1.0);
    }

    #[test]
    fn rejects_inconsistent_witness() {
        let inst = identity_instance(3);
        let wrong = SymMatrix::identity(3).scaled(2.0);
        assert!(matches!(
            CpsdInstance::new(wrong, inst.witness().clone()),
            Err(Error::InconsistentWitness { .. })
        ));
        assert!(CpsdInstance::new(SymMatrix::identity(3), inst.witness().clone()).is_ok());
    }
}
