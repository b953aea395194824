//! Seeded batch runs of the bound suites over generated potentials.
//!
//! Potentials are independent and solved in parallel; results are sorted by
//! seed (and pairs by `n`, then `m`) so reports do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::bounds::{check_all, BoundSuite};
use crate::error::Result;
use crate::potential::{sample_admissible, FamilyParams, Potential, PotentialSpec};
use crate::report::fmt_f64;
use crate::spectrum::{spectrum, Eigenvalue, SpectrumConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base_seed: u64,
    pub count: usize,
    pub n_max: usize,
    pub family: FamilyParams,
    pub spectrum: SpectrumConfig,
}

impl SweepConfig {
    pub fn new(base_seed: u64, count: usize, n_max: usize) -> Self {
        SweepConfig {
            base_seed,
            count,
            n_max,
            family: FamilyParams::default(),
            spectrum: SpectrumConfig::with_n_max(n_max),
        }
    }

    /// Seed of the `k`-th potential.
    pub fn seed(&self, k: usize) -> u64 {
        self.base_seed.wrapping_add(k as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub seed: u64,
    pub spec: PotentialSpec,
    pub eigenvalues: Vec<Eigenvalue>,
    pub bounds: BoundSuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub base_seed: u64,
    pub count: usize,
    pub n_max: usize,
    pub entries: Vec<SweepEntry>,
    /// Smallest eligible ratio-squares margin over all potentials whose hypotheses hold.
    pub min_margin_eligible: Option<f64>,
    pub all_pass: bool,
}

pub fn run_one(seed: u64, cfg: &SweepConfig) -> Result<SweepEntry> {
    let spec = sample_admissible(seed, &cfg.family)?;
    let p = Potential::new(spec.clone())?;
    let eigenvalues = spectrum(&p, &SpectrumConfig { n_max: cfg.n_max, ..cfg.spectrum })?;
    let bounds = check_all(&p, &eigenvalues)?;
    Ok(SweepEntry {
        seed,
        spec,
        eigenvalues,
        bounds,
    })
}

/// Runs on the current rayon pool.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let mut entries = (0..cfg.count)
        .into_par_iter()
        .map(|k| run_one(cfg.seed(k), cfg))
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.seed);
    let min_margin_eligible = entries
        .iter()
        .filter(|e| e.bounds.hypotheses_hold)
        .filter_map(|e| e.bounds.theorem21.min_margin_eligible)
        .reduce(f64::min);
    let all_pass = entries.iter().all(|e| e.bounds.passes());
    Ok(SweepReport {
        base_seed: cfg.base_seed,
        count: cfg.count,
        n_max: cfg.n_max,
        entries,
        min_margin_eligible,
        all_pass,
    })
}

pub const CSV_HEADER: &str = "seed,potential_id,n,m,ratio,bound,bound_kind,eligible,margin";

/// Rows of one potential, sorted by `n`, then `m`.
pub fn write_entry_csv<W: Write>(e: &SweepEntry, mut w: W) -> io::Result<()> {
    let mut rows: Vec<_> = e.bounds.reports().into_iter().flat_map(|r| r.checks.iter()).collect();
    rows.sort_by_key(|c| (c.n, c.m, c.bound_kind.as_str()));
    for c in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            e.seed,
            e.bounds.potential_id,
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

impl SweepReport {
    /// One row per (potential, bound, pair), sorted by seed, then `n`, then `m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for e in &self.entries {
            write_entry_csv(e, &mut w)?;
        }
        Ok(())
    }
}
