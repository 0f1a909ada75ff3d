//! On-disk JSON formats for instances and approximation reports.

use serde::{Deserialize, Serialize};

use cpsd_core::bounds::RankBounds;
use cpsd_core::generators::GeneratorSpec;
use cpsd_core::pipeline::{Stage1Metrics, Stage2Metrics};
use cpsd_core::tol::PSD_TOL;
use cpsd_core::{ApproxReport, CpsdInstance, GramRep, Mode, SymMatrix};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub family: String,
    pub seed: u64,
    pub params: serde_json::Value,
}

impl Meta {
    pub fn from_spec(spec: &GeneratorSpec) -> Self {
        let mut params = serde_json::to_value(spec).expect("generator spec serializes");
        if let Some(obj) = params.as_object_mut() {
            obj.remove("family");
            obj.remove("seed");
        }
        Self {
            family: spec.family.name().to_string(),
            seed: spec.seed,
            params,
        }
    }
}

/// A target matrix with its psd witness, all matrices as arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub d: usize,
    pub target: Vec<Vec<f64>>,
    pub factors: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

impl InstanceFile {
    pub fn from_instance(inst: &CpsdInstance, meta: Option<Meta>) -> Self {
        Self {
            n: inst.n(),
            d: inst.witness().side(),
            target: inst.target().to_rows(),
            factors: inst.witness().factors().iter().map(SymMatrix::to_rows).collect(),
            meta,
        }
    }

    /// Validates shape, symmetry, psd-ness and witness consistency.
    pub fn to_instance(&self) -> Result<CpsdInstance, CliError> {
        if self.factors.len() != self.n || self.target.len() != self.n {
            return Err(CliError::Parse(format!(
                "n = {} but found {} factors and {} target rows",
                self.n,
                self.factors.len(),
                self.target.len()
            )));
        }
        let factors = matrices(&self.factors, self.d)?;
        let target = SymMatrix::from_rows(&self.target)?;
        let witness = GramRep::new(factors, PSD_TOL)?;
        Ok(CpsdInstance::new(target, witness)?)
    }
}

/// Parse factors that must all have side `d`.
pub(crate) fn matrices(rows: &[Vec<Vec<f64>>], d: usize) -> Result<Vec<SymMatrix>, CliError> {
    rows.iter()
        .enumerate()
        .map(|(i, f)| {
            if f.len() != d {
                return Err(CliError::Parse(format!("factor {i} has side {}, expected {d}", f.len())));
            }
            Ok(SymMatrix::from_rows(f)?)
        })
        .collect()
}

/// Everything in an [`ApproxReport`] plus the output witness, so a report
/// can be checked against its instance without rerunning anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub eps: f64,
    pub mode: Mode,
    pub cp_mode: bool,
    pub within_theorem_range: bool,
    pub seed: u64,
    pub n: usize,
    pub ell: f64,
    pub big_l: f64,
    pub achieved_error: f64,
    pub rep_side: usize,
    pub bound_first: usize,
    pub bound_second: usize,
    pub bound_min: usize,
    pub bound_which: String,
    pub completely_positive: bool,
    pub eps1: f64,
    pub eps2: Option<f64>,
    pub m: Option<usize>,
    pub r: Option<usize>,
    pub retries: usize,
    pub stage1: Stage1Metrics,
    pub stage2: Option<Stage2Metrics>,
    pub output: Vec<Vec<f64>>,
    pub output_rep: Vec<Vec<Vec<f64>>>,
}

impl ReportFile {
    pub fn from_report(rep: &ApproxReport) -> Self {
        let s2 = rep.stage2.as_ref();
        Self {
            eps: rep.eps,
            mode: rep.mode,
            cp_mode: rep.cp_mode,
            within_theorem_range: rep.within_theorem_range,
            seed: rep.seed,
            n: rep.n,
            ell: rep.ell,
            big_l: rep.big_l,
            achieved_error: rep.achieved_error,
            rep_side: rep.rep_side,
            bound_first: rep.bounds.first,
            bound_second: rep.bounds.second,
            bound_min: rep.bounds.min(),
            bound_which: rep.bounds.which().to_string(),
            completely_positive: rep.completely_positive,
            eps1: rep.stage1.eps1,
            eps2: s2.map(|s| s.eps2),
            m: s2.map(|s| s.m),
            r: s2.map(|s| s.r),
            retries: rep.stage1.retries + s2.map_or(0, |s| s.retries),
            stage1: rep.stage1.clone(),
            stage2: rep.stage2.clone(),
            output: rep.output.to_rows(),
            output_rep: rep.output_rep.factors().iter().map(SymMatrix::to_rows).collect(),
        }
    }

    pub fn bounds(&self) -> RankBounds {
        RankBounds {
            first: self.bound_first,
            second: self.bound_second,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{what}: {e}")))
}
