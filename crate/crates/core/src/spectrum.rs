//! Dirichlet eigenvalues by oscillation counting on the Prüfer angle.
//!
//! `phi(1, z)` crosses each multiple of `pi` exactly once, upwards, as `z`
//! grows through an eigenvalue root `z_n`. Counting `floor(phi(1, z) / pi)`
//! therefore brackets every root robustly, and a safeguarded secant iteration
//! finishes it off.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::potential::{classify, Potential};
use crate::prufer::{shoot, IntegratorConfig};
use crate::report::fmt_f64;

/// Angle tolerance under which a count query is reported as sitting on an eigenvalue.
pub const COUNT_TIE_TOL: f64 = 1e-9;

/// Bracket width at which bisection hands over to the secant iteration.
const BISECT_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    /// 1-based index.
    pub n: usize,
    pub z: f64,
    /// `z * z`.
    pub lambda: f64,
    /// `|phi(1, z) - n pi|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub n_max: usize,
    pub root_tol: f64,
    pub bracket_growth: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            n_max: 12,
            root_tol: 1e-12,
            bracket_growth: 1.1,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl SpectrumConfig {
    pub fn with_n_max(n_max: usize) -> Self {
        SpectrumConfig {
            n_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::Input("n_max must be at least 1".into()));
        }
        if !(self.root_tol > 0.0 && self.root_tol <= 1e-4) {
            return Err(Error::Input(format!(
                "root_tol must lie in (0, 1e-4], got {}",
                self.root_tol
            )));
        }
        if !(self.bracket_growth > 1.0) || !self.bracket_growth.is_finite() {
            return Err(Error::Input(format!(
                "bracket_growth must exceed 1, got {}",
                self.bracket_growth
            )));
        }
        self.integrator.validate()
    }
}

/// Result of a counting query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: usize,
    pub phi_end: f64,
    /// `phi(1, z)` lies within [`COUNT_TIE_TOL`] of a positive multiple of `pi`.
    pub at_eigenvalue: bool,
}

/// Counting query with the tie flag.
pub fn count_eigenvalues_detail(p: &Potential, z: f64, cfg: &IntegratorConfig) -> Result<CountResult> {
    let phi = shoot(p, z, 1.0, cfg)?.phi;
    let count = ((phi + COUNT_TIE_TOL) / PI).floor().max(0.0) as usize;
    let nearest = (phi / PI).round();
    let at_eigenvalue = nearest >= 1.0 && (phi - nearest * PI).abs() <= COUNT_TIE_TOL;
    Ok(CountResult {
        count,
        phi_end: phi,
        at_eigenvalue,
    })
}

/// Number of eigenvalues `z_k^2` with `z_k < z` (an exact hit counts itself).
pub fn count_eigenvalues_below(p: &Potential, z: f64) -> Result<usize> {
    Ok(count_eigenvalues_detail(p, z, &IntegratorConfig::default())?.count)
}

/// Upper limit for the bracket search of the `n`-th root.
pub fn z_cap(q_sup: f64, n: usize) -> f64 {
    (n as f64 + 2.0) * PI + q_sup.max(0.0).sqrt() + 10.0
}

/// The `n`-th Dirichlet eigenvalue (1-based).
pub fn eigenvalue(p: &Potential, n: usize, cfg: &SpectrumConfig) -> Result<Eigenvalue> {
    if n == 0 {
        return Err(Error::Domain {
            what: "n",
            value: 0.0,
            range: "[1, inf)".into(),
        });
    }
    cfg.validate()?;
    let shape = classify(p);
    solve_root(p, n, shape.qmin, shape.q_sup, cfg)
}

fn solve_root(p: &Potential, n: usize, qmin: f64, q_sup: f64, cfg: &SpectrumConfig) -> Result<Eigenvalue> {
    let target = n as f64 * PI;
    let g = |z: f64| -> Result<f64> { Ok(shoot(p, z, 1.0, &cfg.integrator)?.phi - target) };
    let cap = z_cap(q_sup, n);
    let not_found = || Error::BracketNotFound { n, z_cap: cap };

    let nf = n as f64;
    let mut lo = (0.9 * (qmin + PI * PI * nf * nf).max(0.0).sqrt()).max(1e-3);
    let mut g_lo = g(lo)?;
    while g_lo >= 0.0 {
        lo /= cfg.bracket_growth;
        if lo < 1e-8 {
            return Err(not_found());
        }
        g_lo = g(lo)?;
    }
    let mut hi = lo;
    let mut g_hi = g_lo;
    while g_hi < 0.0 {
        lo = hi;
        g_lo = g_hi;
        if hi >= cap {
            return Err(not_found());
        }
        hi = (hi * cfg.bracket_growth).min(cap);
        g_hi = g(hi)?;
    }

    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm < 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }

    // secant from the better end, falling back to bisection outside the bracket
    let (mut z, mut gz) = if g_lo.abs() < g_hi.abs() { (lo, g_lo) } else { (hi, g_hi) };
    let (mut z_prev, mut g_prev) = if z == lo { (hi, g_hi) } else { (lo, g_lo) };
    for _ in 0..60 {
        if gz == 0.0 {
            break;
        }
        let mut next = if gz != g_prev {
            z - gz * (z - z_prev) / (gz - g_prev)
        } else {
            0.5 * (lo + hi)
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - z).abs();
        let g_next = g(next)?;
        if g_next < 0.0 {
            lo = next;
        } else {
            hi = next;
        }
        z_prev = z;
        g_prev = gz;
        z = next;
        gz = g_next;
        if step <= cfg.root_tol * (1.0 + z) || hi - lo <= cfg.root_tol * (1.0 + z) {
            break;
        }
    }
    // keep whichever bracket end has the smaller mismatch
    if g_prev.abs() < gz.abs() && (z_prev - z).abs() <= BISECT_WIDTH {
        z = z_prev;
        gz = g_prev;
    }
    Ok(Eigenvalue {
        n,
        z,
        lambda: z * z,
        residual: gz.abs(),
    })
}

/// Eigenvalues `1..=n_max`, solved in parallel and checked to be strictly increasing.
pub fn spectrum(p: &Potential, cfg: &SpectrumConfig) -> Result<Vec<Eigenvalue>> {
    cfg.validate()?;
    let shape = classify(p);
    let eigs = (1..=cfg.n_max)
        .into_par_iter()
        .map(|n| solve_root(p, n, shape.qmin, shape.q_sup, cfg))
        .collect::<Result<Vec<_>>>()?;
    for w in eigs.windows(2) {
        if !(w[1].z > w[0].z) {
            return Err(Error::Precondition(format!(
                "eigenvalues {} and {} are not strictly increasing ({} vs {})",
                w[0].n, w[1].n, w[0].lambda, w[1].lambda
            )));
        }
    }
    Ok(eigs)
}

/// CSV with columns `n, z, lambda, residual`.
pub fn write_csv<W: Write>(eigs: &[Eigenvalue], mut w: W) -> io::Result<()> {
    writeln!(w, "n,z,lambda,residual")?;
    for e in eigs {
        writeln!(
            w,
            "{},{},{},{}",
            e.n,
            fmt_f64(e.z),
            fmt_f64(e.lambda),
            fmt_f64(e.residual)
        )?;
    }
    Ok(())
}
