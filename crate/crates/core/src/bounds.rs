//! Eigenvalue-ratio bounds checked pair by pair on a computed spectrum.
//!
//! Upper bounds report `margin = bound - ratio`; the Huang–Law lower bound
//! reports `margin = ratio - bound`. Either way a pair passes when its margin
//! is at least [`MARGIN_SLACK`].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::potential::{check_hypotheses, HypothesisReport, Potential, ShapeReport};
use crate::report::fmt_f64;
use crate::spectrum::Eigenvalue;

/// Floating-point slack on every inequality.
pub const MARGIN_SLACK: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "theorem21")]
    RatioSquares,
    #[serde(rename = "ab_square")]
    AbSquare,
    #[serde(rename = "ab_ceil")]
    AbCeil,
    #[serde(rename = "hk_single_well")]
    HkSingleWell,
    #[serde(rename = "hl_lower")]
    HlLower,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::RatioSquares => "theorem21",
            BoundKind::AbSquare => "ab_square",
            BoundKind::AbCeil => "ab_ceil",
            BoundKind::HkSingleWell => "hk_single_well",
            BoundKind::HlLower => "hl_lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub n: usize,
    pub m: usize,
    /// `lambda_n / lambda_m`.
    pub ratio: f64,
    pub bound: f64,
    pub bound_kind: BoundKind,
    pub eligible: bool,
    pub margin: f64,
}

impl PairCheck {
    pub fn passes(&self) -> bool {
        self.margin >= MARGIN_SLACK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub potential_id: String,
    pub n_max: usize,
    /// `false` when the bound's shape assumption does not hold; checks are
    /// still listed, all marked ineligible.
    pub applicable: bool,
    pub checks: Vec<PairCheck>,
    /// Every eligible pair has margin at least [`MARGIN_SLACK`].
    pub all_eligible_pass: bool,
    /// `None` when no pair is eligible.
    pub min_margin_eligible: Option<f64>,
}

impl BoundReport {
    fn new(potential_id: &str, n_max: usize, applicable: bool, checks: Vec<PairCheck>) -> Self {
        let eligible = checks.iter().filter(|c| c.eligible);
        let min_margin_eligible = eligible.clone().map(|c| c.margin).reduce(f64::min);
        let all_eligible_pass = eligible.clone().all(PairCheck::passes);
        BoundReport {
            potential_id: potential_id.to_string(),
            n_max,
            applicable,
            checks,
            all_eligible_pass,
            min_margin_eligible,
        }
    }

    pub fn eligible_count(&self) -> usize {
        self.checks.iter().filter(|c| c.eligible).count()
    }

    /// CSV with columns `n, m, ratio, bound, bound_kind, eligible, margin`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> io::Result<()> {
        if header {
            writeln!(w, "n,m,ratio,bound,bound_kind,eligible,margin")?;
        }
        for c in &self.checks {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.n,
                c.m,
                fmt_f64(c.ratio),
                fmt_f64(c.bound),
                c.bound_kind.as_str(),
                c.eligible,
                fmt_f64(c.margin)
            )?;
        }
        Ok(())
    }
}

/// Indices must be exactly `1..=len` with strictly increasing eigenvalues.
fn validate(eigs: &[Eigenvalue]) -> Result<()> {
    if eigs.is_empty() {
        return Err(Error::Input("empty eigenvalue list".into()));
    }
    for (k, e) in eigs.iter().enumerate() {
        if e.n != k + 1 {
            return Err(Error::Input(format!(
                "eigenvalue indices must run 1..={} without gaps; position {} has n = {}",
                eigs.len(),
                k,
                e.n
            )));
        }
        if !(e.lambda > 0.0) {
            return Err(Error::Input(format!("lambda_{} = {} is not positive", e.n, e.lambda)));
        }
    }
    if let Some(w) = eigs.windows(2).find(|w| !(w[1].lambda > w[0].lambda)) {
        return Err(Error::Input(format!(
            "eigenvalues must be strictly increasing: lambda_{} = {}, lambda_{} = {}",
            w[0].n, w[0].lambda, w[1].n, w[1].lambda
        )));
    }
    Ok(())
}

fn pairs(eigs: &[Eigenvalue]) -> impl Iterator<Item = (&Eigenvalue, &Eigenvalue)> {
    eigs.iter()
        .enumerate()
        .flat_map(move |(i, hi)| eigs[..i].iter().map(move |lo| (hi, lo)))
}

fn upper(hi: &Eigenvalue, lo: &Eigenvalue, bound: f64, kind: BoundKind, eligible: bool) -> PairCheck {
    let ratio = hi.lambda / lo.lambda;
    PairCheck {
        n: hi.n,
        m: lo.n,
        ratio,
        bound,
        bound_kind: kind,
        eligible,
        margin: bound - ratio,
    }
}

fn squares(n: usize, m: usize) -> f64 {
    let r = n as f64 / m as f64;
    r * r
}

/// `lambda_n / lambda_m <= n^2 / m^2` for single-barrier potentials, eligible
/// when `q(x0) <= pi^2 / 11` or `lambda_m >= 11 q(x0)`.
pub fn check_theorem21(p: &Potential, eigs: &[Eigenvalue], hyp: &HypothesisReport) -> Result<BoundReport> {
    validate(eigs)?;
    let checks = pairs(eigs)
        .map(|(hi, lo)| {
            let eligible = hyp.all_pairs_condition || lo.lambda >= hyp.eligibility_threshold;
            upper(hi, lo, squares(hi.n, lo.n), BoundKind::RatioSquares, eligible)
        })
        .collect();
    Ok(BoundReport::new(&p.spec().label(), eigs.len(), hyp.single_barrier, checks))
}

/// `lambda_n / lambda_1 <= n^2` and `lambda_n / lambda_m <= ceil(n / m)^2`
/// for nonnegative potentials.
pub fn check_ashbaugh_benguria(potential_id: &str, eigs: &[Eigenvalue]) -> Result<BoundReport> {
    validate(eigs)?;
    let mut checks = Vec::new();
    for (hi, lo) in pairs(eigs) {
        if lo.n == 1 {
            checks.push(upper(hi, lo, (hi.n * hi.n) as f64, BoundKind::AbSquare, true));
        }
        let c = hi.n.div_ceil(lo.n) as f64;
        checks.push(upper(hi, lo, c * c, BoundKind::AbCeil, true));
    }
    Ok(BoundReport::new(potential_id, eigs.len(), true, checks))
}

/// `lambda_n / lambda_m <= n^2 / m^2` for nonnegative single-well potentials.
pub fn check_horvath_kiss(p: &Potential, eigs: &[Eigenvalue], shape: &ShapeReport) -> Result<BoundReport> {
    validate(eigs)?;
    let applicable = shape.is_single_well() && shape.qmin >= 0.0;
    let checks = pairs(eigs)
        .map(|(hi, lo)| upper(hi, lo, squares(hi.n, lo.n), BoundKind::HkSingleWell, applicable))
        .collect();
    Ok(BoundReport::new(&p.spec().label(), eigs.len(), applicable, checks))
}

/// `lambda_n / lambda_m >= (n / m)^2 / (1 + xi)` with `xi = q_sup / (m^2 pi^2)`,
/// `m` the smaller 1-based index.
pub fn check_huang_law_lower(potential_id: &str, eigs: &[Eigenvalue], q_sup: f64) -> Result<BoundReport> {
    validate(eigs)?;
    if !(q_sup >= 0.0) {
        return Err(Error::Input(format!("q_sup must be nonnegative, got {q_sup}")));
    }
    let checks = pairs(eigs)
        .map(|(hi, lo)| {
            let mf = lo.n as f64;
            let xi = q_sup / (mf * mf * PI * PI);
            let bound = squares(hi.n, lo.n) / (1.0 + xi);
            let ratio = hi.lambda / lo.lambda;
            PairCheck {
                n: hi.n,
                m: lo.n,
                ratio,
                bound,
                bound_kind: BoundKind::HlLower,
                eligible: true,
                margin: ratio - bound,
            }
        })
        .collect();
    Ok(BoundReport::new(potential_id, eigs.len(), true, checks))
}

/// All bound suites for one potential, with the hypotheses that gate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSuite {
    pub potential_id: String,
    pub hypotheses: HypothesisReport,
    pub hypotheses_hold: bool,
    pub theorem21: BoundReport,
    pub ashbaugh_benguria: BoundReport,
    pub horvath_kiss: BoundReport,
    pub huang_law: BoundReport,
}

impl BoundSuite {
    /// Failures that count: the ratio-squares bound only when its hypotheses
    /// hold, Horváth–Kiss only when applicable, the others always (they need
    /// only `q >= 0`).
    pub fn passes(&self) -> bool {
        let t21 = !self.hypotheses_hold || self.theorem21.all_eligible_pass;
        let nonneg = self.hypotheses.nonnegative;
        let ab = !nonneg || self.ashbaugh_benguria.all_eligible_pass;
        let hl = !nonneg || self.huang_law.all_eligible_pass;
        t21 && ab && hl && self.horvath_kiss.all_eligible_pass
    }

    pub fn reports(&self) -> [&BoundReport; 4] {
        [&self.theorem21, &self.ashbaugh_benguria, &self.horvath_kiss, &self.huang_law]
    }
}

pub fn check_all(p: &Potential, eigs: &[Eigenvalue]) -> Result<BoundSuite> {
    let hyp = check_hypotheses(p);
    let id = p.spec().label();
    Ok(BoundSuite {
        theorem21: check_theorem21(p, eigs, &hyp)?,
        ashbaugh_benguria: check_ashbaugh_benguria(&id, eigs)?,
        horvath_kiss: check_horvath_kiss(p, eigs, &hyp.shape)?,
        huang_law: check_huang_law_lower(&id, eigs, hyp.shape.q_sup)?,
        hypotheses_hold: hyp.hypotheses_hold(),
        hypotheses: hyp,
        potential_id: id,
    })
}
