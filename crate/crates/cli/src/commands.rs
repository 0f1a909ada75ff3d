use std::fmt::Write as _;

use serde::Serialize;

use cpsd_core::bounds::{bound_first, bound_second, crossover, rank_bounds, RankBounds};
use cpsd_core::generators::{generate, GeneratorSpec};
use cpsd_core::gram::{gram, GramRep};
use cpsd_core::linalg::is_psd;
use cpsd_core::tol::{PSD_TOL, WITNESS_TOL};
use cpsd_core::{approximate, ApproxParams, Mode, SymMatrix};

use crate::schema::{matrices, InstanceFile, Meta, ReportFile};
use crate::CliError;

pub fn cmd_generate(spec: &GeneratorSpec) -> Result<InstanceFile, CliError> {
    let inst = generate(spec)?;
    Ok(InstanceFile::from_instance(&inst, Some(Meta::from_spec(spec))))
}

pub fn cmd_approximate(file: &InstanceFile, params: &ApproxParams) -> Result<ReportFile, CliError> {
    let inst = file.to_instance()?;
    let report = approximate(&inst, params)?;
    Ok(ReportFile::from_report(&report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub ell: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub eps: f64,
    pub first: usize,
    pub second: usize,
    pub min: usize,
    pub which: &'static str,
}

/// One row per point of the grid `ns × ells × ls × epss`, in that nesting order.
pub fn cmd_bounds(ns: &[usize], ells: &[f64], ls: &[f64], epss: &[f64]) -> Result<Vec<BoundsRow>, CliError> {
    let mut rows = Vec::with_capacity(ns.len() * ells.len() * ls.len() * epss.len());
    for &n in ns {
        for &ell in ells {
            for &big_l in ls {
                for &eps in epss {
                    let b = rank_bounds(n, ell, big_l, eps)?;
                    rows.push(BoundsRow {
                        n,
                        ell,
                        big_l,
                        eps,
                        first: b.first,
                        second: b.second,
                        min: b.min(),
                        which: b.which(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    // `{}` on f64 is locale independent and round-trips
    let mut out = String::from("n,ell,L,eps,first,second,min,which\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n, r.ell, r.big_l, r.eps, r.first, r.second, r.min, r.which
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverRow {
    pub eps: f64,
    pub ell: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub n_star: usize,
}

pub fn cmd_crossover(eps: f64, ell: f64, big_l: f64) -> Result<CrossoverRow, CliError> {
    Ok(CrossoverRow {
        eps,
        ell,
        big_l,
        n_star: crossover(eps, ell, big_l)?,
    })
}

/// Re-checks a report against its instance. The first failing check is
/// returned as [`CliError::Check`].
pub fn cmd_verify(inst: &InstanceFile, report: &ReportFile) -> Result<(), CliError> {
    let instance = inst.to_instance()?;
    let fail = |msg: String| Err(CliError::Check(msg));

    if report.n != instance.n() || report.output_rep.len() != instance.n() {
        return fail(format!(
            "size mismatch: instance has n = {}, report has n = {} and {} factors",
            instance.n(),
            report.n,
            report.output_rep.len()
        ));
    }

    let factors = match matrices(&report.output_rep, report.rep_side) {
        Ok(f) => f,
        Err(e) => return fail(format!("witness not psd: {e}")),
    };
    if let Some(i) = factors.iter().position(|f| !is_psd(f, PSD_TOL)) {
        return fail(format!("witness not psd: factor {i}"));
    }

    let output = match SymMatrix::from_rows(&report.output) {
        Ok(m) if m.side() == instance.n() => m,
        _ => return fail("output is not a symmetric n x n matrix".into()),
    };
    let error = output.max_abs_diff(instance.target())?;
    if !(error < report.eps) {
        return fail(format!("error bound violated: max entry error {error:e} >= eps {}", report.eps));
    }

    let rep = GramRep::new_unchecked(factors)?;
    let recomputed = gram(&rep);
    let mismatch = recomputed.max_abs_diff(&output)?;
    if mismatch > WITNESS_TOL * output.max_abs().max(1.0) {
        return fail(format!("gram mismatch: witness reproduces output only to {mismatch:e}"));
    }

    let (n, ell, big_l, eps) = (instance.n(), instance.ell(), instance.big_l(), report.eps);
    let bounds = RankBounds {
        first: bound_first(n, ell, big_l, eps),
        second: bound_second(n, ell, big_l, eps),
    };
    if bounds != report.bounds() {
        return fail(format!(
            "rank bounds mismatch: expected ({}, {}), report has ({}, {})",
            bounds.first, bounds.second, report.bound_first, report.bound_second
        ));
    }
    let side_bound = match report.mode {
        Mode::Stage2Full => bounds.second,
        _ => bounds.first,
    };
    if report.rep_side > side_bound {
        return fail(format!(
            "rank bound violated: side {} exceeds {side_bound}",
            report.rep_side
        ));
    }
    if report.completely_positive && !rep.factors().iter().all(SymMatrix::is_diagonal) {
        return fail("not completely positive: a witness factor is not diagonal".into());
    }
    Ok(())
}
