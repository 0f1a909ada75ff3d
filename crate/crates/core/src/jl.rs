//! Gaussian Johnson–Lindenstrauss projection with a verified inner-product
//! distortion contract.
//!
//! For points `x_1, …, x_m` and `0 < ε < 1` the map `Q: ℝ^d → ℝ^r`,
//! `r = ⌈8 ln(m+1)/ε²⌉`, must satisfy for every pair (including `i = j`)
//!
//! ```text
//! |x_iᵗx_j − (Qx_i)ᵗ(Qx_j)| ≤ ε (‖x_i‖² + ‖x_j‖² − x_iᵗx_j).
//! ```
//!
//! Draws are checked against this and redrawn until it holds.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::caratheodory::ceil_to_usize;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::linalg::dot;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    norms_sq: Vec<f64>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("point set is empty".into()));
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::InvalidInput("points must have positive dimension".into()));
        }
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let norms_sq = points.iter().map(|p| dot(p, p)).collect();
        Ok(Self { points, norms_sq })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms_sq[i].sqrt()
    }
}

/// Row-major `r × d` matrix with i.i.d. `N(0, 1/r)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Projection {
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = rng::rng_from_seed(seed);
        let scale = 1.0 / (rows as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.data.chunks_exact(self.cols).map(|row| dot(row, x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JlResult {
    /// `⌈8 ln(m+1)/ε²⌉`
    pub target_dim: usize,
    /// Dimension of `projected`: `target_dim`, or the original dimension when
    /// that was already no larger and the identity map was used.
    pub embedded_dim: usize,
    pub projected: Vec<Vec<f64>>,
    /// `None` for the identity map.
    pub map: Option<Projection>,
    pub max_violation_ratio: f64,
    pub retries: usize,
}

/// The pair with the largest `lhs / rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstPair {
    pub i: usize,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl WorstPair {
    pub fn ratio(&self) -> f64 {
        ratio(self.lhs, self.rhs)
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// `⌈8 ln(m+1)/eps²⌉`
pub fn jl_dimension(m: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange {
            eps,
            reason: "JL distortion must lie in (0, 1)".into(),
        });
    }
    if m == 0 {
        return Err(Error::InvalidInput("point count must be positive".into()));
    }
    Ok(ceil_to_usize(8.0 * ((m + 1) as f64).ln() / (eps * eps)))
}

/// Checks every pair `i ≤ j`. Returns whether all hold and the worst pair.
pub fn verify_jl(
    pts: &PointSet,
    projected: &[Vec<f64>],
    eps: f64,
    exec: Exec,
) -> Result<(bool, WorstPair)> {
    if projected.len() != pts.len() {
        return Err(Error::DimensionMismatch {
            expected: pts.len(),
            got: projected.len(),
        });
    }
    let m = pts.len();
    let rows = exec::map_range(exec, m, |i| {
        let mut worst = WorstPair {
            i,
            j: i,
            lhs: 0.0,
            rhs: 0.0,
        };
        let mut ok = true;
        for j in i..m {
            let orig = dot(&pts.points[i], &pts.points[j]);
            let proj = dot(&projected[i], &projected[j]);
            let lhs = (orig - proj).abs();
            let rhs = eps * (pts.norms_sq[i] + pts.norms_sq[j] - orig);
            if lhs > rhs {
                ok = false;
            }
            if ratio(lhs, rhs) > worst.ratio() {
                worst = WorstPair { i, j, lhs, rhs };
            }
        }
        (ok, worst)
    });
    let ok = rows.iter().all(|(ok, _)| *ok);
    // first maximum in (i, j) order, independent of scheduling
    let worst = rows
        .into_iter()
        .map(|(_, w)| w)
        .fold(None::<WorstPair>, |best, w| match best {
            Some(b) if b.ratio() >= w.ratio() => Some(b),
            _ => Some(w),
        })
        .expect("point set is non-empty");
    Ok((ok, worst))
}

/// Project `pts` to `jl_dimension(m, eps)` dimensions, redrawing until
/// [`verify_jl`] passes. When the points already live in at most that many
/// dimensions the identity map is returned.
pub fn jl_project(
    pts: &PointSet,
    eps: f64,
    retry_budget: usize,
    seed: u64,
    exec: Exec,
) -> Result<JlResult> {
    let r = jl_dimension(pts.len(), eps)?;
    let d = pts.dim();
    if d <= r {
        return Ok(JlResult {
            target_dim: r,
            embedded_dim: d,
            projected: pts.points.clone(),
            map: None,
            max_violation_ratio: 0.0,
            retries: 0,
        });
    }
    let mut best = f64::INFINITY;
    for attempt in 0..retry_budget {
        let q = Projection::gaussian(r, d, rng::split(seed, attempt as u64));
        let projected = exec::map_range(exec, pts.len(), |i| q.apply(&pts.points[i]));
        let (ok, worst) = verify_jl(pts, &projected, eps, exec)?;
        if ok {
            return Ok(JlResult {
                target_dim: r,
                embedded_dim: r,
                projected,
                map: Some(q),
                max_violation_ratio: worst.ratio(),
                retries: attempt,
            });
        }
        best = best.min(worst.ratio());
    }
    Err(Error::RetryExhausted {
        stage: "johnson-lindenstrauss",
        budget: retry_budget,
        best,
        target: 1.0,
    })
}
