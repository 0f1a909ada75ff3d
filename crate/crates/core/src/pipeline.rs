//! Two-stage low cpsd-rank approximation.
//!
//! Stage 1 replaces every witness factor `A_i` by a trace-preserving low-rank
//! `A'_i` with `‖A_i − A'_i‖_F < ε₁`; by Cauchy–Schwarz every Gram entry
//! moves by at most `2ε₁√L + ε₁²`. Stage 2 sends the eigenvectors of all
//! `A'_i` through one Johnson–Lindenstrauss map `Q` and rebuilds
//! `A''_i = Σ_k λ_{k,i} (Qu_{k,i})(Qu_{k,i})ᵗ`, moving every Gram entry by at
//! most `(6ε₂ + 9ε₂²)ℓ²`. Both stage errors and the final error are measured,
//! not inferred.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    bound_first, bound_second, check_theorem_range, epsilon1, epsilon2,
    first_bound_per_factor, rank_bounds, RankBounds,
};
use crate::caratheodory::{
    carath_bound, low_rank_psd_approx, Atom, CarathOptions, Strategy, StrategyUsed,
};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::gram::{compress_rep_with, gram, GramRep};
use crate::instance::CpsdInstance;
use crate::jl::{jl_dimension, jl_project, JlResult, PointSet};
use crate::linalg::SymMatrix;
use crate::rng;
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Carathéodory stage at the full budget, then compression.
    #[serde(rename = "stage1")]
    Stage1Only,
    /// Carathéodory at `ε/2`, then the projection stage at `ε/2`.
    #[serde(rename = "stage2")]
    Stage2Full,
    /// Whichever of the two has the smaller rank bound; ties go to stage 1.
    #[default]
    #[serde(rename = "auto")]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    pub eps: f64,
    pub mode: Mode,
    /// Keep diagonal witnesses diagonal so the output is completely positive.
    pub cp_mode: bool,
    pub seed: u64,
    pub strategy: Strategy,
    pub carath_retry_budget: usize,
    pub jl_retry_budget: usize,
    pub tol: Tolerances,
    pub exec: Exec,
}

impl ApproxParams {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            mode: Mode::Auto,
            cp_mode: false,
            seed: 0,
            strategy: Strategy::Auto,
            carath_retry_budget: 64,
            jl_retry_budget: 64,
            tol: Tolerances::default(),
            exec: Exec::default(),
        }
    }

    fn carath_options(&self) -> CarathOptions {
        CarathOptions {
            strategy: self.strategy,
            retry_budget: self.carath_retry_budget,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Metrics {
    /// Entrywise error this stage may spend.
    pub budget: f64,
    /// Per-factor Frobenius tolerance `√L(√(1 + budget/L) − 1)`.
    pub eps1: f64,
    /// `⌈ℓ²/ε₁²⌉`, the Carathéodory rank bound for every factor.
    pub rank_bound: usize,
    /// `⌈9Lℓ²/(2·budget²)⌉`, the closed-form per-factor bound.
    pub closed_form_rank_bound: usize,
    /// Whether `rank_bound ≤ closed_form_rank_bound`.
    pub ceiling_chain_holds: bool,
    pub support_sizes: Vec<usize>,
    pub strategies: Vec<StrategyUsed>,
    pub retries: usize,
    pub max_factor_error: f64,
    /// `max_ij |M_ij − ⟨A'_i, A'_j⟩|`
    pub entry_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Metrics {
    pub budget: f64,
    pub eps2: f64,
    /// `⌈ℓ²/ε₁²⌉`; every factor contributes at most this many eigenvectors.
    pub m: usize,
    pub point_count: usize,
    /// `⌈8 ln(point_count + 1)/ε₂²⌉`, zero when there are no points.
    pub r: usize,
    /// False when the points already live in at most `r` dimensions.
    pub projected: bool,
    pub output_side: usize,
    pub retries: usize,
    pub max_violation_ratio: f64,
    /// `max_ij |⟨A'_i, A'_j⟩ − ⟨A''_i, A''_j⟩|`
    pub entry_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Output {
    pub rep: GramRep,
    /// Atoms of each `A'_i`; their eigenvectors are pairwise orthonormal.
    pub atoms: Vec<Vec<Atom>>,
    pub metrics: Stage1Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Output {
    pub rep: GramRep,
    pub metrics: Stage2Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub eps: f64,
    /// The mode that actually ran.
    pub mode: Mode,
    pub cp_mode: bool,
    pub within_theorem_range: bool,
    pub seed: u64,
    pub n: usize,
    pub ell: f64,
    pub big_l: f64,
    pub output: SymMatrix,
    pub output_rep: GramRep,
    /// `max_ij |M_ij − N_ij|`
    pub achieved_error: f64,
    pub rep_side: usize,
    pub bounds: RankBounds,
    /// Every output factor is diagonal, so `N` is completely positive.
    pub completely_positive: bool,
    pub stage1: Stage1Metrics,
    pub stage2: Option<Stage2Metrics>,
}

/// Replace each witness factor by a low-rank approximation so that every
/// Gram entry moves by at most `eps_budget`.
pub fn stage1(inst: &CpsdInstance, eps_budget: f64, params: &ApproxParams) -> Result<Stage1Output> {
    let (ell, big_l) = (inst.ell(), inst.big_l());
    let eps1 = epsilon1(big_l, 2.0 * eps_budget)?;
    let opts = params.carath_options();
    let stream = rng::split(params.seed, rng::STREAM_STAGE1);
    let factors = inst.witness().factors();

    let results = exec::try_map_range(params.exec, factors.len(), |i| {
        low_rank_psd_approx(&factors[i], eps1, &opts, rng::split(stream, i as u64))
    })?;

    let rank_bound = carath_bound(ell, eps1)?;
    let closed_form_rank_bound = first_bound_per_factor(ell, big_l, eps_budget);
    for (i, res) in results.iter().enumerate() {
        if res.support_size > rank_bound {
            return Err(Error::Verification(format!(
                "factor {i} has {} atoms, above the bound {rank_bound}",
                res.support_size
            )));
        }
    }

    let metrics_base = (
        results.iter().map(|r| r.support_size).collect::<Vec<_>>(),
        results.iter().map(|r| r.strategy_used).collect::<Vec<_>>(),
        results.iter().map(|r| r.retries).sum::<usize>(),
        results.iter().map(|r| r.achieved_error).fold(0.0, f64::max),
    );
    let (approxes, atoms): (Vec<_>, Vec<_>) =
        results.into_iter().map(|r| (r.approx, r.atoms)).unzip();
    let rep = GramRep::new_unchecked(approxes)?;
    let entry_error = gram(&rep).max_abs_diff(inst.target())?;
    if entry_error > eps_budget {
        return Err(Error::Verification(format!(
            "stage 1 entry error {entry_error:e} exceeds budget {eps_budget:e}"
        )));
    }

    let (support_sizes, strategies, retries, max_factor_error) = metrics_base;
    Ok(Stage1Output {
        rep,
        atoms,
        metrics: Stage1Metrics {
            budget: eps_budget,
            eps1,
            rank_bound,
            closed_form_rank_bound,
            ceiling_chain_holds: rank_bound <= closed_form_rank_bound,
            support_sizes,
            strategies,
            retries,
            max_factor_error,
            entry_error,
        },
    })
}

/// Project the eigenvectors of the stage-1 factors to a common low
/// dimension so that every Gram entry moves by at most `eps_budget`.
pub fn stage2(
    s1: &Stage1Output,
    inst: &CpsdInstance,
    eps_budget: f64,
    params: &ApproxParams,
) -> Result<Stage2Output> {
    let (ell, big_l) = (inst.ell(), inst.big_l());
    let eps = 2.0 * eps_budget;
    let eps2 = epsilon2(ell, eps)?;
    let m = carath_bound(ell, epsilon1(big_l, eps)?)?;

    let point_count = s1.atoms.iter().map(Vec::len).sum::<usize>();
    if point_count > s1.atoms.len().saturating_mul(m) {
        return Err(Error::Verification(format!(
            "{point_count} eigenvectors exceed n·m = {}",
            s1.atoms.len() * m
        )));
    }

    let unchanged = |r: usize, retries: usize| Stage2Output {
        rep: s1.rep.clone(),
        metrics: Stage2Metrics {
            budget: eps_budget,
            eps2,
            m,
            point_count,
            r,
            projected: false,
            output_side: s1.rep.side(),
            retries,
            max_violation_ratio: 0.0,
            entry_error: 0.0,
        },
    };
    if point_count == 0 {
        return Ok(unchanged(0, 0));
    }

    let r = jl_dimension(point_count, eps2)?;
    let bound = bound_second(inst.n(), ell, big_l, eps);
    if r > bound {
        return Err(Error::Verification(format!(
            "projection dimension {r} exceeds the second rank bound {bound}"
        )));
    }

    let (rep, jl) = project_atoms(&s1.atoms, eps2, params)?;
    if jl.map.is_none() {
        return Ok(unchanged(r, jl.retries));
    }
    let entry_error = gram(&rep).max_abs_diff(&gram(&s1.rep))?;
    if entry_error > eps_budget {
        return Err(Error::Verification(format!(
            "stage 2 entry error {entry_error:e} exceeds budget {eps_budget:e}"
        )));
    }
    Ok(Stage2Output {
        metrics: Stage2Metrics {
            budget: eps_budget,
            eps2,
            m,
            point_count,
            r,
            projected: true,
            output_side: rep.side(),
            retries: jl.retries,
            max_violation_ratio: jl.max_violation_ratio,
            entry_error,
        },
        rep,
    })
}

/// Send every atom vector through one verified projection of distortion
/// `eps2` and rebuild `A''_i = Σ_k w_k (Qu_k)(Qu_k)ᵗ`. No rank bound is
/// enforced here; for atoms with orthonormal vectors per factor every Gram
/// entry moves by at most `(6·eps2 + 9·eps2²)·tr(A'_i)·tr(A'_j)`.
pub fn project_atoms(
    atoms: &[Vec<Atom>],
    eps2: f64,
    params: &ApproxParams,
) -> Result<(GramRep, JlResult)> {
    let mut owners = Vec::new();
    let mut points = Vec::new();
    for (i, list) in atoms.iter().enumerate() {
        for atom in list {
            owners.push((i, atom.weight));
            points.push(atom.vector.clone());
        }
    }
    let pts = PointSet::new(points)?;
    let jl = jl_project(
        &pts,
        eps2,
        params.jl_retry_budget,
        rng::split(params.seed, rng::STREAM_STAGE2),
        params.exec,
    )?;
    let mut factors = vec![SymMatrix::zeros(jl.embedded_dim); atoms.len()];
    for ((i, weight), v) in owners.iter().zip(&jl.projected) {
        factors[*i].add_outer(*weight, v);
    }
    Ok((GramRep::new_unchecked(factors)?, jl))
}

/// An `ε`-close cpsd matrix with a witness of side at most the bound of the
/// mode that ran. Requires `0 < ε < ½ min{ℓ², L}`.
pub fn approximate(inst: &CpsdInstance, params: &ApproxParams) -> Result<ApproxReport> {
    if params.cp_mode {
        return approximate_cp(inst, params);
    }
    let eps = params.eps;
    let bounds = rank_bounds(inst.n(), inst.ell(), inst.big_l(), eps)?;
    let mode = match params.mode {
        Mode::Auto if bounds.second < bounds.first => Mode::Stage2Full,
        Mode::Auto => Mode::Stage1Only,
        m => m,
    };

    let (rep, s1, s2, side_bound) = match mode {
        Mode::Stage2Full => {
            let s1 = stage1(inst, eps / 2.0, params)?;
            let s2 = stage2(&s1, inst, eps / 2.0, params)?;
            (s2.rep, s1.metrics, Some(s2.metrics), bounds.second)
        }
        _ => {
            let s1 = stage1(inst, eps, params)?;
            let rep = compress_rep_with(&s1.rep, params.tol.rank, params.exec)?;
            (rep, s1.metrics, None, bounds.first)
        }
    };
    finish(inst, params, mode, true, bounds, rep, s1, s2, side_bound)
}

/// Stage 1 only, for diagonal witnesses: diagonal factors stay diagonal, so
/// `N` is completely positive with cp-rank at most `n⌈9Lℓ²/2ε²⌉`.
///
/// The entrywise error guarantee of stage 1 does not depend on the range
/// hypothesis, so any `ε > 0` is accepted; the report records whether `ε`
/// was inside `(0, ½ min{ℓ², L})`.
pub fn approximate_cp(inst: &CpsdInstance, params: &ApproxParams) -> Result<ApproxReport> {
    if let Some(i) = inst.witness().factors().iter().position(|f| !f.is_diagonal()) {
        return Err(Error::InvalidInput(format!("witness factor {i} is not diagonal")));
    }
    let eps = params.eps;
    if !(eps > 0.0) {
        return Err(Error::OutOfRange {
            eps,
            reason: "must be positive".into(),
        });
    }
    let within = check_theorem_range(inst.ell(), inst.big_l(), eps).is_ok();
    let (n, ell, big_l) = (inst.n(), inst.ell(), inst.big_l());
    let bounds = RankBounds {
        first: bound_first(n, ell, big_l, eps),
        second: bound_second(n, ell, big_l, eps),
    };
    let s1 = stage1(inst, eps, params)?;
    let rep = compress_rep_with(&s1.rep, params.tol.rank, params.exec)?;
    if let Some(i) = rep.factors().iter().position(|f| !f.is_diagonal()) {
        return Err(Error::Verification(format!("output factor {i} lost diagonality")));
    }
    finish(inst, params, Mode::Stage1Only, within, bounds, rep, s1.metrics, None, bounds.first)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    inst: &CpsdInstance,
    params: &ApproxParams,
    mode: Mode,
    within_theorem_range: bool,
    bounds: RankBounds,
    rep: GramRep,
    stage1: Stage1Metrics,
    stage2: Option<Stage2Metrics>,
    side_bound: usize,
) -> Result<ApproxReport> {
    let output = gram(&rep);
    let achieved_error = output.max_abs_diff(inst.target())?;
    if !(achieved_error < params.eps) {
        return Err(Error::Verification(format!(
            "achieved error {achieved_error:e} is not below eps {}",
            params.eps
        )));
    }
    if rep.side() > side_bound {
        return Err(Error::Verification(format!(
            "witness side {} exceeds rank bound {side_bound}",
            rep.side()
        )));
    }
    Ok(ApproxReport {
        eps: params.eps,
        mode,
        cp_mode: params.cp_mode,
        within_theorem_range,
        seed: params.seed,
        n: inst.n(),
        ell: inst.ell(),
        big_l: inst.big_l(),
        completely_positive: rep.factors().iter().all(SymMatrix::is_diagonal),
        rep_side: rep.side(),
        output,
        output_rep: rep,
        achieved_error,
        bounds,
        stage1,
        stage2,
    })
}
