//! Derivative of the scaled angle `theta(x0, z) = phi(x0, z) / z` in `z`.
//!
//! `theta_dot_integral` evaluates the closed integral representation
//!
//! ```text
//! theta_dot(x, z) = 2 / (z^2 r^2(x)) * int_0^x r^2 (q / z) (sin^2 phi - phi sin phi cos phi) dt
//! ```
//!
//! over the dense output of a single trajectory. `theta_dot_fd` is the
//! independent check by central differences in `z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::potential::{check_hypotheses, classify, Potential};
use crate::prufer::{integrate, shoot, IntegratorConfig};
use crate::quadrature::integrate_panels;
use crate::report::fmt_f64;
use crate::spectrum::{spectrum, SpectrumConfig};

/// Absolute tolerance of the `theta_dot` quadrature.
pub const QUAD_TOL: f64 = 1e-12;

/// Values below `-VIOLATION_TOL` count as monotonicity violations.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Default central-difference step for a given `z`.
pub fn default_fd_step(z: f64) -> f64 {
    1e-4 * z.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaDotResult {
    pub z: f64,
    pub x0: f64,
    pub value_integral: f64,
    pub value_fd: f64,
    pub discrepancy: f64,
}

impl ThetaDotResult {
    /// Agreement within `max(abs_tol, rel_tol * |value|)`.
    pub fn agrees(&self, abs_tol: f64, rel_tol: f64) -> bool {
        self.discrepancy <= abs_tol.max(rel_tol * self.value_integral.abs())
    }
}

fn check_args(z: f64, x0: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain {
            what: "z",
            value: z,
            range: "(0, inf)".into(),
        });
    }
    if !(x0 > 0.0 && x0 <= 1.0) {
        return Err(Error::Domain {
            what: "x0",
            value: x0,
            range: "(0, 1]".into(),
        });
    }
    Ok(())
}

/// `theta_dot(x0, z)` from the integral representation, with a tight trajectory.
pub fn theta_dot_integral(p: &Potential, z: f64, x0: f64) -> Result<f64> {
    theta_dot_integral_with(p, z, x0, &IntegratorConfig::tight())
}

pub fn theta_dot_integral_with(p: &Potential, z: f64, x0: f64, cfg: &IntegratorConfig) -> Result<f64> {
    check_args(z, x0)?;
    let traj = integrate(p, z, x0, cfg)?;
    let log_r0 = traj.log_r_end();
    let tau = |t: f64| {
        let s = traj.state_at(t);
        let (sn, cs) = s.phi.sin_cos();
        let ratio = (2.0 * (s.log_r - log_r0)).exp();
        ratio * p.q(t) / z * (sn * sn - s.phi * sn * cs)
    };
    let scale = 2.0 / (z * z);
    Ok(scale * integrate_panels(&tau, traj.step_boundaries(), QUAD_TOL / scale))
}

/// `theta(x, z)`, taking `theta(0, z) = 0`.
fn theta_at(p: &Potential, z: f64, x: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(shoot(p, z, x, cfg)?.phi / z)
}

/// Central difference `(theta(x0, z + h) - theta(x0, z - h)) / 2h` at tight tolerance.
pub fn theta_dot_fd(p: &Potential, z: f64, x0: f64, h: f64) -> Result<f64> {
    check_args(z, x0)?;
    if !(h > 0.0) || !(z - h > 0.0) {
        return Err(Error::Domain {
            what: "h",
            value: h,
            range: format!("(0, {z})"),
        });
    }
    let cfg = IntegratorConfig::tight();
    let up = theta_at(p, z + h, x0, &cfg)?;
    let down = theta_at(p, z - h, x0, &cfg)?;
    Ok((up - down) / (2.0 * h))
}

/// Both evaluations side by side, with the default step.
pub fn theta_dot(p: &Potential, z: f64, x0: f64) -> Result<ThetaDotResult> {
    let value_integral = theta_dot_integral(p, z, x0)?;
    let value_fd = theta_dot_fd(p, z, x0, default_fd_step(z))?;
    Ok(ThetaDotResult {
        z,
        x0,
        value_integral,
        value_fd,
        discrepancy: (value_integral - value_fd).abs(),
    })
}

/// Which hypothesis set gates a monotonicity scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisSet {
    /// Nonnegative, single-barrier, `|q'| <= (2/15) min(q(0), q(1))` on `[0, 1]`.
    #[default]
    RatioBound,
    /// Nonnegative, nondecreasing on `[0, x0]`, `q' <= (2/15) q(0)` there.
    AngleMonotonicity,
}

/// Whether `p` satisfies the chosen hypothesis set.
pub fn hypotheses_hold(p: &Potential, set: HypothesisSet) -> bool {
    match set {
        HypothesisSet::RatioBound => check_hypotheses(p).hypotheses_hold(),
        HypothesisSet::AngleMonotonicity => {
            let shape = classify(p);
            let x0 = shape.x0;
            let budget = 2.0 / 15.0 * shape.q0;
            let xs: Vec<f64> = p.grid().filter(|&x| x <= x0).collect();
            let nondecreasing = xs
                .windows(2)
                .all(|w| p.q(w[1]) - p.q(w[0]) >= -crate::potential::MONOTONE_TOL);
            let slope_ok = xs.iter().all(|&x| p.dq(x) <= budget);
            shape.qmin >= 0.0 && nondecreasing && slope_ok
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityScan {
    pub x0: f64,
    pub z_grid: Vec<f64>,
    pub theta_dot_values: Vec<f64>,
    /// Central-difference check at every grid point.
    pub theta_dot_fd: Vec<f64>,
    pub discrepancies: Vec<f64>,
    pub min_value: f64,
    pub argmin_z: f64,
    /// `sqrt(11 q(x0))`.
    pub threshold_z: f64,
    /// Grid points with `theta_dot < -VIOLATION_TOL`.
    pub violations: Vec<(f64, f64)>,
}

impl MonotonicityScan {
    pub fn max_discrepancy(&self) -> f64 {
        self.discrepancies.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `z, theta_dot_integral, theta_dot_fd, discrepancy`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "z,theta_dot_integral,theta_dot_fd,discrepancy")?;
        for k in 0..self.z_grid.len() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(self.z_grid[k]),
                fmt_f64(self.theta_dot_values[k]),
                fmt_f64(self.theta_dot_fd[k]),
                fmt_f64(self.discrepancies[k])
            )?;
        }
        Ok(())
    }
}

/// Uniform grid of `grid_n` points over `[sqrt(11 q(x0)), z_max]`.
///
/// When `q(x0) = 0` the lower end would be `0`, where the angle is undefined;
/// the grid then starts at `z_max / grid_n`.
pub fn scan_grid(p: &Potential, x0: f64, z_max: f64, grid_n: usize) -> Result<(f64, Vec<f64>)> {
    if grid_n < 2 {
        return Err(Error::Input("grid_n must be at least 2".into()));
    }
    let threshold = (11.0 * p.q(x0).max(0.0)).sqrt();
    if !(z_max > threshold) {
        return Err(Error::Domain {
            what: "z_max",
            value: z_max,
            range: format!("({threshold}, inf)"),
        });
    }
    let start = if threshold > 0.0 { threshold } else { z_max / grid_n as f64 };
    let step = (z_max - start) / (grid_n - 1) as f64;
    let grid = (0..grid_n)
        .map(|k| if k + 1 == grid_n { z_max } else { start + step * k as f64 })
        .collect();
    Ok((threshold, grid))
}

/// `theta_dot(x0, .)` with its finite-difference check on a uniform grid.
pub fn monotonicity_scan(p: &Potential, x0: f64, z_max: f64, grid_n: usize) -> Result<MonotonicityScan> {
    check_args(z_max, x0)?;
    let (threshold_z, z_grid) = scan_grid(p, x0, z_max, grid_n)?;
    let rows = z_grid
        .par_iter()
        .map(|&z| {
            let r = theta_dot(p, z, x0)?;
            Ok((r.value_integral, r.value_fd))
        })
        .collect::<Result<Vec<_>>>()?;
    let theta_dot_values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let theta_dot_fd: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let discrepancies = rows.iter().map(|r| (r.0 - r.1).abs()).collect();
    let (argmin, min_value) = theta_dot_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    let violations = z_grid
        .iter()
        .zip(&theta_dot_values)
        .filter(|(_, &v)| v < -VIOLATION_TOL)
        .map(|(&z, &v)| (z, v))
        .collect();
    Ok(MonotonicityScan {
        x0,
        argmin_z: z_grid[argmin],
        z_grid,
        theta_dot_values,
        theta_dot_fd,
        discrepancies,
        min_value,
        threshold_z,
        violations,
    })
}

/// `Psi(z) = theta(x0, z) + theta~(1 - x0, z)`, the second term on the reversed potential.
pub fn psi(p: &Potential, z: f64) -> Result<f64> {
    let x0 = classify(p).x0;
    psi_at(p, &p.reverse(), x0, z, &IntegratorConfig::default())
}

/// [`psi`] with an explicit split point.
pub fn psi_split(p: &Potential, x0: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::Domain {
            what: "x0",
            value: x0,
            range: "[0, 1]".into(),
        });
    }
    psi_at(p, &p.reverse(), x0, z, &IntegratorConfig::default())
}

fn psi_at(p: &Potential, rev: &Potential, x0: f64, z: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain {
            what: "z",
            value: z,
            range: "(0, inf)".into(),
        });
    }
    Ok(theta_at(p, z, x0, cfg)? + theta_at(rev, z, 1.0 - x0, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiResidual {
    pub n: usize,
    pub z: f64,
    /// `|z_n Psi(z_n) - n pi|`.
    pub residual: f64,
}

/// Residuals of `z_n Psi(z_n) = n pi` for `n = 1..=n_max`.
pub fn psi_identity_check(p: &Potential, n_max: usize) -> Result<Vec<PsiResidual>> {
    let cfg = SpectrumConfig::with_n_max(n_max);
    let eigs = spectrum(p, &cfg)?;
    let x0 = classify(p).x0;
    let rev = p.reverse();
    eigs.par_iter()
        .map(|e| {
            let v = e.z * psi_at(p, &rev, x0, e.z, &cfg.integrator)?;
            Ok(PsiResidual {
                n: e.n,
                z: e.z,
                residual: (v - e.n as f64 * PI).abs(),
            })
        })
        .collect()
}
