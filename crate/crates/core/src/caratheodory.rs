//! Trace-preserving low-rank approximation of a psd matrix by convex
//! combinations of spectraplex atoms `tr(A)·uuᵗ`, `‖u‖ = 1`.
//!
//! The atoms have diameter `√2·tr(A)`, so `k = ⌈tr(A)²/ε²⌉` of them suffice to
//! get within Frobenius distance `ε`. Every returned result has been checked
//! against that distance directly.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_is_psd, frobenius, sym_eig, EigenDecomp, SymMatrix};
use crate::rng;
use crate::tol::{Tolerances, JACOBI_TOL};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Maurey empirical mean with resampling.
    Sampling,
    /// Fully corrective Frank–Wolfe; deterministic.
    Greedy,
    /// Sampling, falling back to greedy once the retry budget is spent.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyUsed {
    /// The input already has few enough eigen-atoms.
    Exact,
    Sampling,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarathOptions {
    pub strategy: Strategy,
    pub retry_budget: usize,
    pub tol: Tolerances,
}

impl Default for CarathOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            retry_budget: 64,
            tol: Tolerances::default(),
        }
    }
}

/// `weight · vvᵗ` with `‖v‖ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarathResult {
    pub approx: SymMatrix,
    /// Distinct atoms, pairwise orthogonal; `approx = Σ weight · vvᵗ`.
    pub atoms: Vec<Atom>,
    pub support_size: usize,
    pub achieved_error: f64,
    pub strategy_used: StrategyUsed,
    pub retries: usize,
}

/// `⌈trace²/eps²⌉`, zero for a zero trace.
pub fn carath_bound(trace: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::OutOfRange {
            eps,
            reason: "must be positive".into(),
        });
    }
    if trace <= 0.0 {
        return Ok(0);
    }
    Ok(ceil_to_usize(trace * trace / (eps * eps)))
}

/// `⌈x⌉`, treating values within a relative `1e-12` above an integer as that
/// integer so that rounding noise in `x` cannot raise the bound by one.
pub(crate) fn ceil_to_usize(x: f64) -> usize {
    let f = x.floor();
    let c = if x - f <= 1e-12 * x.abs() { f } else { x.ceil() };
    if c >= usize::MAX as f64 {
        usize::MAX
    } else {
        c as usize
    }
}

/// Approximate psd `a` by `B` with `tr(B) = tr(a)`, `‖a − B‖_F < eps` and
/// `rank(B) ≤ ⌈tr(a)²/eps²⌉`.
pub fn low_rank_psd_approx(
    a: &SymMatrix,
    eps: f64,
    opts: &CarathOptions,
    seed: u64,
) -> Result<CarathResult> {
    let k = carath_bound(a.trace(), eps)?;
    let eig = sym_eig(a, JACOBI_TOL)?;
    if !eig_is_psd(&eig, opts.tol.psd) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.values().last().copied().unwrap_or(0.0),
        });
    }
    let trace = a.trace();
    let d = a.side();

    if trace <= 0.0 || eig.values()[0] <= 0.0 {
        let approx = SymMatrix::zeros(d);
        let err = frobenius(a);
        if err >= eps {
            return Err(Error::RetryExhausted {
                stage: "caratheodory",
                budget: 0,
                best: err,
                target: eps,
            });
        }
        return Ok(CarathResult {
            approx,
            atoms: Vec::new(),
            support_size: 0,
            achieved_error: err,
            strategy_used: StrategyUsed::Exact,
            retries: 0,
        });
    }

    let spectrum = Spectrum::new(&eig, trace);
    let cutoff = opts.tol.rank * eig.values()[0];
    let rank = eig.values().iter().filter(|&&x| x > cutoff).count();

    if rank <= k {
        let support: Vec<usize> = (0..rank).collect();
        let weights = spectrum.project_onto(&support);
        if let Some(res) = finish(a, &eig, &weights, trace, eps, StrategyUsed::Exact, 0) {
            return Ok(res);
        }
    }

    let mut best = f64::INFINITY;
    if matches!(opts.strategy, Strategy::Sampling | Strategy::Auto) {
        let probs: Vec<f64> = eig.values().iter().map(|&x| x.max(0.0)).collect();
        let dist = WeightedIndex::new(&probs).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for attempt in 0..opts.retry_budget {
            let mut rng = rng::rng_from_seed(rng::split(seed, attempt as u64));
            let mut counts = vec![0usize; d];
            for _ in 0..k {
                counts[dist.sample(&mut rng)] += 1;
            }
            let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / k as f64).collect();
            let err = spectrum.coordinate_error(&weights);
            best = best.min(err);
            if err < eps {
                if let Some(res) =
                    finish(a, &eig, &weights, trace, eps, StrategyUsed::Sampling, attempt)
                {
                    return Ok(res);
                }
            }
        }
        if opts.strategy == Strategy::Sampling {
            return Err(Error::RetryExhausted {
                stage: "caratheodory sampling",
                budget: opts.retry_budget,
                best,
                target: eps,
            });
        }
    }

    let (weights, _) = spectrum.greedy(eps, k);
    let retries = if opts.strategy == Strategy::Auto {
        opts.retry_budget
    } else {
        0
    };
    finish(a, &eig, &weights, trace, eps, StrategyUsed::Greedy, retries).ok_or_else(|| {
        Error::RetryExhausted {
            stage: "caratheodory greedy",
            budget: k,
            best: best.min(spectrum.coordinate_error(&weights)),
            target: eps,
        }
    })
}

/// Assemble `Σ_j trace·w_j·u_j u_jᵗ` and accept it if it is within `eps`.
fn finish(
    a: &SymMatrix,
    eig: &EigenDecomp,
    weights: &[f64],
    trace: f64,
    eps: f64,
    strategy_used: StrategyUsed,
    retries: usize,
) -> Option<CarathResult> {
    let mut approx = SymMatrix::zeros(a.side());
    let mut atoms = Vec::new();
    for (j, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            let weight = trace * w;
            approx.add_outer(weight, eig.vector(j));
            atoms.push(Atom {
                weight,
                vector: eig.vector(j).to_vec(),
            });
        }
    }
    let err = frobenius(&a.sub(&approx).ok()?);
    (err < eps).then_some(CarathResult {
        approx,
        support_size: atoms.len(),
        atoms,
        achieved_error: err,
        strategy_used,
        retries,
    })
}

/// The input in its own eigenbasis. Every candidate is a convex combination
/// of eigen-atoms, so distances reduce to distances between coefficient
/// vectors.
struct Spectrum<'a> {
    values: &'a [f64],
    trace: f64,
}

impl<'a> Spectrum<'a> {
    fn new(eig: &'a EigenDecomp, trace: f64) -> Self {
        Self {
            values: eig.values(),
            trace,
        }
    }

    /// `‖a − Σ trace·w_j u_j u_jᵗ‖_F`
    fn coordinate_error(&self, weights: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(weights)
            .map(|(&l, &w)| (l - self.trace * w).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Closest simplex point supported on `support`: `w_j = p_j + c` with the
    /// constant `c` restoring unit mass.
    fn project_onto(&self, support: &[usize]) -> Vec<f64> {
        let mut w = vec![0.0; self.values.len()];
        if support.is_empty() {
            return w;
        }
        let p = |j: usize| self.values[j].max(0.0) / self.trace;
        let mass: f64 = support.iter().map(|&j| p(j)).sum();
        let shift = (1.0 - mass) / support.len() as f64;
        for &j in support {
            w[j] = p(j) + shift;
        }
        // Only reachable when clipped negatives push mass above one.
        if w.iter().any(|&x| x < 0.0) {
            for x in &mut w {
                *x = x.max(0.0);
            }
            let total: f64 = w.iter().sum();
            for x in &mut w {
                *x /= total;
            }
        }
        w
    }

    /// Fully corrective Frank–Wolfe on `½‖a − x‖²` over the spectraplex.
    ///
    /// The residual `a − x` stays diagonal in the eigenbasis of `a`, so the
    /// linear minimization oracle (top eigenvector of the residual) is the
    /// eigen-atom with the largest residual coefficient. After each new atom
    /// the weights are re-optimized over the active set. Stops once the error
    /// drops below `eps` or `max_atoms` atoms are active. Returns the weights
    /// and the error after each step, which never increases.
    fn greedy(&self, eps: f64, max_atoms: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.values.len();
        let mut active: Vec<usize> = Vec::new();
        let mut weights = vec![0.0; n];
        let mut history = Vec::new();
        while active.len() < max_atoms.max(1) {
            let next = (0..n)
                .filter(|j| !active.contains(j))
                .map(|j| (j, self.values[j] - self.trace * weights[j]))
                .fold(None::<(usize, f64)>, |best, (j, r)| match best {
                    Some((_, br)) if br >= r => best,
                    _ => Some((j, r)),
                });
            let Some((j, residual)) = next else { break };
            if !active.is_empty() && residual <= 0.0 {
                break;
            }
            active.push(j);
            weights = self.project_onto(&active);
            let err = self.coordinate_error(&weights);
            history.push(err);
            if err < eps {
                break;
            }
        }
        (weights, history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, trace_inner};
    use crate::tol::RANK_TOL;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_psd(d: usize, trace: f64, seed: u64) -> SymMatrix {
        let mut rng = rng::rng_from_seed(seed);
        let w: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
        let m = SymMatrix::from_fn(d, |i, j| (0..d).map(|k| w[i * d + k] * w[j * d + k]).sum());
        let t = m.trace();
        m.scaled(trace / t)
    }

    fn check(a: &SymMatrix, eps: f64, res: &CarathResult) {
        assert!(res.achieved_error < eps);
        assert!(frobenius(&a.sub(&res.approx).unwrap()) < eps);
        assert!((res.approx.trace() - a.trace()).abs() <= 1e-9 * a.trace().max(1.0));
        assert!(res.support_size <= carath_bound(a.trace(), eps).unwrap());
        assert!(numerical_rank(&res.approx, RANK_TOL) <= res.support_size);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(carath_bound(1.0, 1.0).unwrap(), 1);
        assert_eq!(carath_bound(2.0, 0.5).unwrap(), 16);
        assert_eq!(carath_bound(0.0, 0.1).unwrap(), 0);
        assert!(carath_bound(1.0, 0.0).is_err());
        assert!(carath_bound(1.0, -1.0).is_err());
    }

    #[test]
    fn rank_one_is_returned_exactly() {
        let u = [0.6, 0.0, 0.8];
        let a = SymMatrix::outer(1.0, &u);
        let res = low_rank_psd_approx(&a, 0.01, &CarathOptions::default(), 1).unwrap();
        assert_eq!(res.support_size, 1);
        assert!(res.achieved_error < 1e-14);
        assert_eq!(res.strategy_used, StrategyUsed::Exact);
    }

    #[test]
    fn scaled_identity_single_atom() {
        let d = 5;
        let a = SymMatrix::identity(d).scaled(1.0 / d as f64);
        let res = low_rank_psd_approx(&a, 1.1, &CarathOptions::default(), 2).unwrap();
        assert_eq!(res.support_size, 1);
        check(&a, 1.1, &res);
        // any single atom is close enough
        let u = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert!(frobenius(&a.sub(&SymMatrix::outer(1.0, &u)).unwrap()) < 1.1);
    }

    #[test]
    fn random_50_trace_5() {
        let a = random_psd(50, 5.0, 7);
        let res = low_rank_psd_approx(&a, 0.5, &CarathOptions::default(), 3).unwrap();
        check(&a, 0.5, &res);
        assert!(res.support_size <= 100);
    }

    #[test]
    fn each_strategy_meets_contract() {
        let a = random_psd(30, 4.0, 11);
        for strategy in [Strategy::Sampling, Strategy::Greedy, Strategy::Auto] {
            for eps in [0.5 * 4.0, 0.3 * 4.0] {
                let opts = CarathOptions {
                    strategy,
                    ..CarathOptions::default()
                };
                let res = low_rank_psd_approx(&a, eps, &opts, 5).unwrap();
                check(&a, eps, &res);
            }
        }
    }

    #[test]
    fn bound_ignores_rounding_noise() {
        assert_eq!(ceil_to_usize(4.000000000000001), 4);
        assert_eq!(ceil_to_usize(4.0), 4);
        assert_eq!(ceil_to_usize(4.001), 5);
        assert_eq!(ceil_to_usize(0.3), 1);
        let tr = 7.3;
        let a = SymMatrix::identity(3).scaled(tr / 3.0);
        assert_eq!(carath_bound(a.trace(), 0.5 * tr).unwrap(), 4);
    }

    #[test]
    fn greedy_is_monotone() {
        let a = random_psd(25, 3.0, 12);
        let eig = sym_eig(&a, JACOBI_TOL).unwrap();
        let s = Spectrum::new(&eig, a.trace());
        let (_, history) = s.greedy(0.0, 25);
        assert!(history.len() > 5);
        assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn atoms_reproduce_approx() {
        let a = random_psd(12, 2.0, 13);
        let res = low_rank_psd_approx(&a, 0.7, &CarathOptions::default(), 9).unwrap();
        let mut sum = SymMatrix::zeros(12);
        for atom in &res.atoms {
            assert!((trace_inner(&SymMatrix::outer(1.0, &atom.vector), &SymMatrix::identity(12)).unwrap() - 1.0).abs() < 1e-12);
            sum.add_outer(atom.weight, &atom.vector);
        }
        assert!(sum.max_abs_diff(&res.approx).unwrap() < 1e-14);
        let total: f64 = res.atoms.iter().map(|a| a.weight).sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_stays_diagonal() {
        let a = SymMatrix::from_diagonal(&[0.5, 0.1, 0.3, 0.05, 0.05, 0.0]);
        for eps in [0.3, 0.1, 0.01] {
            let res = low_rank_psd_approx(&a, eps, &CarathOptions::default(), 4).unwrap();
            assert!(res.approx.is_diagonal());
            check(&a, eps, &res);
        }
    }

    #[test]
    fn zero_matrix() {
        let res = low_rank_psd_approx(&SymMatrix::zeros(4), 0.1, &CarathOptions::default(), 0).unwrap();
        assert_eq!(res.support_size, 0);
        assert_eq!(res.achieved_error, 0.0);
    }

    #[test]
    fn rejects_non_psd() {
        let a = SymMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(
            low_rank_psd_approx(&a, 0.1, &CarathOptions::default(), 0),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = random_psd(20, 3.0, 14);
        let opts = CarathOptions {
            strategy: Strategy::Sampling,
            ..CarathOptions::default()
        };
        let r1 = low_rank_psd_approx(&a, 1.2, &opts, 42).unwrap();
        let r2 = low_rank_psd_approx(&a, 1.2, &opts, 42).unwrap();
        assert_eq!(r1.approx, r2.approx);
    }
}
