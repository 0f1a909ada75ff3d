//! Error budgets and cpsd-rank bounds of the two-stage construction.
//!
//! With `ℓ = max_i tr(A_i)` and `L = max_i M_ii`, for `0 < ε < ½ min{ℓ², L}`
//! the approximation `N` has a witness of side at most
//!
//! ```text
//! first  = n ⌈9Lℓ² / 2ε²⌉
//! second = ⌈(6ℓ)⁴ ln(n ⌈18Lℓ²/ε²⌉ + 1) / ε²⌉
//! ```

use serde::{Deserialize, Serialize};

use crate::caratheodory::ceil_to_usize;
use crate::error::{Error, Result};

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {x}")))
    }
}

/// `√(1+x) − 1` without cancellation.
fn sqrt1p_m1(x: f64) -> f64 {
    x / ((1.0 + x).sqrt() + 1.0)
}

/// Per-factor Frobenius budget of the Carathéodory stage:
/// `ε₁ = √L (√(1 + ε/2L) − 1)`, the solution of `2ε₁√L + ε₁² = ε/2`.
pub fn epsilon1(big_l: f64, eps: f64) -> Result<f64> {
    positive("L", big_l)?;
    positive("eps", eps)?;
    Ok(big_l.sqrt() * sqrt1p_m1(eps / (2.0 * big_l)))
}

/// Distortion of the projection stage:
/// `ε₂ = (√(1 + ε/2ℓ²) − 1)/3`, the solution of `(6ε₂ + 9ε₂²)ℓ² = ε/2`.
pub fn epsilon2(ell: f64, eps: f64) -> Result<f64> {
    positive("ell", ell)?;
    positive("eps", eps)?;
    Ok(sqrt1p_m1(eps / (2.0 * ell * ell)) / 3.0)
}

/// `√(1+x) ≤ 1 + x/2 − x²/9` on `[0, 1/4]`.
pub fn sqrt_ineq_check(x: f64) -> Result<bool> {
    if !(0.0..=0.25).contains(&x) {
        return Err(Error::InvalidInput(format!("x = {x} outside [0, 1/4]")));
    }
    Ok((1.0 + x).sqrt() <= 1.0 + x / 2.0 - x * x / 9.0)
}

/// Reject `ε` outside `(0, ½ min{ℓ², L})`.
pub fn check_theorem_range(ell: f64, big_l: f64, eps: f64) -> Result<()> {
    let limit = 0.5 * (ell * ell).min(big_l);
    if eps > 0.0 && eps < limit {
        return Ok(());
    }
    let mut reason = format!("need 0 < eps < min(ell^2, L)/2 = {limit} (ell = {ell}, L = {big_l})");
    if eps > 0.0 && eps < 0.5 * big_l * big_l {
        reason.push_str("; the looser projection-witness range eps < L^2/2 is not used");
    }
    Err(Error::OutOfRange { eps, reason })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankBounds {
    pub first: usize,
    pub second: usize,
}

impl RankBounds {
    pub fn min(&self) -> usize {
        self.first.min(self.second)
    }

    /// `"first"` unless the second bound is strictly smaller.
    pub fn which(&self) -> &'static str {
        if self.second < self.first {
            "second"
        } else {
            "first"
        }
    }
}

/// Per-factor rank after a Carathéodory stage that spends the whole budget:
/// `⌈9Lℓ²/2ε²⌉`.
pub fn first_bound_per_factor(ell: f64, big_l: f64, eps: f64) -> usize {
    ceil_to_usize(9.0 * big_l * ell * ell / (2.0 * eps * eps))
}

/// Per-factor rank after a Carathéodory stage that spends half the budget:
/// `⌈18Lℓ²/ε²⌉`.
pub fn half_budget_per_factor(ell: f64, big_l: f64, eps: f64) -> usize {
    ceil_to_usize(18.0 * big_l * ell * ell / (eps * eps))
}

pub fn bound_first(n: usize, ell: f64, big_l: f64, eps: f64) -> usize {
    n.saturating_mul(first_bound_per_factor(ell, big_l, eps))
}

pub fn bound_second(n: usize, ell: f64, big_l: f64, eps: f64) -> usize {
    let points = n as f64 * half_budget_per_factor(ell, big_l, eps) as f64;
    ceil_to_usize((6.0 * ell).powi(4) * (points + 1.0).ln() / (eps * eps))
}

/// Both bounds; `eps` must satisfy the theorem hypothesis.
pub fn rank_bounds(n: usize, ell: f64, big_l: f64, eps: f64) -> Result<RankBounds> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    check_theorem_range(ell, big_l, eps)?;
    Ok(RankBounds {
        first: bound_first(n, ell, big_l, eps),
        second: bound_second(n, ell, big_l, eps),
    })
}

/// Smallest `n` with `second(n) < n`, i.e. where the logarithmic bound
/// beats the trivial witness side `n` of the identity. Pure formula
/// evaluation; any `eps > 0` is accepted.
pub fn crossover(eps: f64, ell: f64, big_l: f64) -> Result<usize> {
    positive("eps", eps)?;
    positive("ell", ell)?;
    positive("L", big_l)?;
    let below = |n: usize| bound_second(n, ell, big_l, eps) < n;
    let mut hi = 1usize;
    while !below(hi) {
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::InvalidInput("crossover search overflowed".into()))?;
    }
    let mut lo = hi / 2; // below(lo) is false, or lo == 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
