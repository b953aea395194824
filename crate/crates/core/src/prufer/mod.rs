//! Modified Prüfer system for `-y'' + q y = z^2 y`, `y(0) = 0`, `y'(0) = 1`.
//!
//! With `y = r sin(phi)` and `y' = z r cos(phi)` the angle and radius obey
//!
//! ```text
//! phi'      = z - (q / z) sin^2(phi)
//! (log r)'  = (q / z) sin(phi) cos(phi)
//! ```
//!
//! Both components are integrated together by an adaptive Dormand–Prince 5(4)
//! scheme. `log r` is stored relative to `r(0) = 1/z`, so `log_r(0) = 0`; every
//! downstream formula only needs ratios of radii.

mod dopri;

use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::report::fmt_f64;
use dopri::{try_step, DenseStep, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub dense_output_n: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1e-2,
            dense_output_n: 1025,
        }
    }
}

impl IntegratorConfig {
    /// Configuration used for finite-difference oracles in `z`.
    pub fn tight() -> Self {
        IntegratorConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-14,
            ..Self::default()
        }
    }

    /// Same step limits, tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        IntegratorConfig {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.rel_tol) || !unit(self.abs_tol) {
            return Err(Error::Input(format!(
                "integrator tolerances must lie in (0, 1), got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step > 0.0 && self.max_step <= 1.0) {
            return Err(Error::Input(format!(
                "max_step must lie in (0, 1], got {}",
                self.max_step
            )));
        }
        if self.dense_output_n < 2 {
            return Err(Error::Input("dense_output_n must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruferState {
    pub x: f64,
    pub phi: f64,
    pub log_r: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest accepted weighted error estimate (at most 1).
    pub max_residual: f64,
}

/// Right-hand side of the Prüfer system.
#[inline]
pub fn prufer_rhs(q: f64, z: f64, phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    let qz = q / z;
    [z - qz * s * s, qz * s * c]
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain {
            what: "z",
            value: z,
            range: "(0, inf)".into(),
        });
    }
    Ok(())
}

fn check_x_end(x_end: f64) -> Result<()> {
    if !(x_end > 0.0 && x_end <= 1.0) {
        return Err(Error::Domain {
            what: "x_end",
            value: x_end,
            range: "(0, 1]".into(),
        });
    }
    Ok(())
}

/// Adaptive integration from 0 to `x_end`, stopping on every breakpoint of `q`.
fn drive(
    p: &Potential,
    z: f64,
    x_end: f64,
    cfg: &IntegratorConfig,
    mut on_step: Option<&mut Vec<DenseStep>>,
) -> Result<(State, IntegratorStats)> {
    let f = |x: f64, y: &State| prufer_rhs(p.q(x), z, y[0]);

    let mut ends: Vec<f64> = p
        .breakpoints()
        .into_iter()
        .filter(|&b| b > 0.0 && b < x_end)
        .collect();
    ends.push(x_end);

    let mut stats = IntegratorStats::default();
    let mut x = 0.0;
    let mut y: State = [0.0, 0.0];
    let mut k1 = f(x, &y);
    let mut h = cfg.max_step.min(1e-3 * (1.0 / z).min(1.0));
    let want_dense = on_step.is_some();

    for &end in &ends {
        let mut last_rejected = false;
        while x < end {
            let remaining = end - x;
            let mut hs = h.min(cfg.max_step);
            let hit_end = hs >= remaining * (1.0 - 1e-12);
            if hit_end {
                hs = remaining;
            }
            let out = try_step(&f, x, &y, &k1, hs, cfg.rel_tol, cfg.abs_tol, want_dense);
            let err = out.err.max(1e-300);
            if err <= 1.0 {
                let x_next = if hit_end { end } else { x + hs };
                if let (Some(steps), Some(r)) = (on_step.as_deref_mut(), out.dense) {
                    steps.push(DenseStep {
                        x,
                        h: hs,
                        y0: y,
                        y1: out.y1,
                        r,
                    });
                }
                stats.steps += 1;
                stats.max_residual = stats.max_residual.max(out.err);
                x = x_next;
                y = out.y1;
                k1 = out.k7;
                let mut fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                // a step clipped by the segment end says little about the scale
                h = if hit_end { (hs * fac).max(h) } else { hs * fac };
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h = hs * (0.9 * err.powf(-0.2)).max(0.2);
                if h < 1e-14 * (1.0 + x.abs()) {
                    return Err(Error::Integration { x, z });
                }
            }
        }
    }
    Ok((y, stats))
}

/// State at `x_end` without keeping the path.
pub fn shoot(p: &Potential, z: f64, x_end: f64, cfg: &IntegratorConfig) -> Result<PruferState> {
    check_z(z)?;
    check_x_end(x_end)?;
    let (y, _) = drive(p, z, x_end, cfg, None)?;
    Ok(PruferState {
        x: x_end,
        phi: y[0],
        log_r: y[1],
    })
}

/// Integrates the Prüfer system and keeps the continuous extension.
pub fn integrate(
    p: &Potential,
    z: f64,
    x_end: f64,
    cfg: &IntegratorConfig,
) -> Result<PruferTrajectory> {
    check_z(z)?;
    check_x_end(x_end)?;
    cfg.validate()?;
    let mut steps = Vec::new();
    let (_, stats) = drive(p, z, x_end, cfg, Some(&mut steps))?;
    let mut starts: Vec<f64> = steps.iter().map(|s| s.x).collect();
    starts.push(x_end);
    let increasing = steps.iter().all(|s| s.y1[0] > s.y0[0]);
    Ok(PruferTrajectory {
        z,
        x_end,
        steps,
        starts,
        stats,
        dense_output_n: cfg.dense_output_n,
        increasing,
    })
}

/// A Prüfer path for fixed `z`, evaluable anywhere in `[0, x_end]`.
#[derive(Debug, Clone)]
pub struct PruferTrajectory {
    z: f64,
    x_end: f64,
    steps: Vec<DenseStep>,
    /// Step start abscissae followed by `x_end`.
    starts: Vec<f64>,
    stats: IntegratorStats,
    dense_output_n: usize,
    increasing: bool,
}

impl PruferTrajectory {
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    /// Accepted step boundaries, from 0 to `x_end`.
    pub fn step_boundaries(&self) -> &[f64] {
        &self.starts
    }

    /// Whether `phi` increases across every accepted step.
    pub fn is_angle_increasing(&self) -> bool {
        self.increasing
    }

    fn step_index(&self, x: f64) -> usize {
        let k = self.starts.partition_point(|&s| s <= x);
        k.saturating_sub(1).min(self.steps.len() - 1)
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if !(0.0..=self.x_end).contains(&x) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                range: format!("[0, {}]", self.x_end),
            });
        }
        Ok(())
    }

    /// Interpolated state; `x` is clamped into the trajectory range.
    pub fn state_at(&self, x: f64) -> PruferState {
        let x = x.clamp(0.0, self.x_end);
        if x == 0.0 {
            return PruferState {
                x,
                phi: 0.0,
                log_r: 0.0,
            };
        }
        let [phi, log_r] = self.steps[self.step_index(x)].eval(x);
        PruferState { x, phi, log_r }
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.state_at(x).phi
    }

    pub fn log_r(&self, x: f64) -> f64 {
        self.state_at(x).log_r
    }

    /// `phi(x_end)`, exact endpoint of the last step.
    pub fn phi_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.y1[0])
    }

    pub fn log_r_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.y1[1])
    }

    /// Scaled angle `phi(x) / z`.
    pub fn theta(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        Ok(self.phi(x) / self.z)
    }

    /// The `x` at which `phi(x) = target`, on a strictly increasing angle.
    pub fn phi_inverse(&self, target: f64) -> Result<f64> {
        if !self.increasing {
            return Err(Error::Precondition(format!(
                "Prüfer angle is not increasing on [0, {}] for z = {}",
                self.x_end, self.z
            )));
        }
        let top = self.phi_end();
        if !(0.0..=top).contains(&target) {
            return Err(Error::Domain {
                what: "target angle",
                value: target,
                range: format!("[0, {top}]"),
            });
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        let k = self
            .steps
            .partition_point(|s| s.y1[0] < target)
            .min(self.steps.len() - 1);
        let step = &self.steps[k];
        let (mut lo, mut hi) = (step.x, step.x_end().min(self.x_end));
        let mut x = lo + (hi - lo) * (target - step.y0[0]) / (step.y1[0] - step.y0[0]);
        let scale = target.abs().max(1.0);
        for _ in 0..100 {
            let g = step.eval(x)[0] - target;
            if g.abs() <= 4.0 * f64::EPSILON * scale {
                break;
            }
            if g < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = step.eval_deriv(x, 0);
            let newton = x - g / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi.abs() {
                break;
            }
        }
        Ok(x)
    }

    /// Uniform dense samples merged with the accepted step boundaries.
    pub fn samples(&self) -> Vec<PruferState> {
        let n = self.dense_output_n;
        let mut xs: Vec<f64> = (0..n)
            .map(|j| self.x_end * j as f64 / (n - 1) as f64)
            .chain(self.starts.iter().copied())
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
        xs.into_iter().map(|x| self.state_at(x)).collect()
    }

    /// CSV dump with columns `x, phi, log_r`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,phi,log_r")?;
        for s in self.samples() {
            writeln!(w, "{},{},{}", fmt_f64(s.x), fmt_f64(s.phi), fmt_f64(s.log_r))?;
        }
        Ok(())
    }
}

/// `theta` as a free function.
pub fn theta(traj: &PruferTrajectory, x: f64) -> Result<f64> {
    traj.theta(x)
}

/// `phi_inverse` as a free function.
pub fn phi_inverse(traj: &PruferTrajectory, target: f64) -> Result<f64> {
    traj.phi_inverse(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Closed-form Prüfer angle and radius for `q = c < z^2`.
    pub(crate) fn constant_closed_form(c: f64, z: f64, x: f64) -> (f64, f64) {
        let w = (z * z - c).sqrt();
        let t = w * x;
        let k = (t / PI).round();
        let phi = k * PI + ((z / w) * (t - k * PI).tan()).atan();
        let (s, co) = t.sin_cos();
        let log_r = 0.5 * ((z * s / w).powi(2) + co * co).ln();
        (phi, log_r)
    }

    #[test]
    fn zero_potential_is_exact() {
        let p = Potential::constant(0.0).unwrap();
        let cfg = IntegratorConfig::default();
        let traj = integrate(&p, PI, 1.0, &cfg).unwrap();
        for s in traj.samples() {
            assert!((s.phi - PI * s.x).abs() <= 10.0 * cfg.abs_tol, "{s:?}");
            assert!(s.log_r.abs() <= 10.0 * cfg.abs_tol);
        }
        assert_eq!(traj.samples()[0], PruferState { x: 0.0, phi: 0.0, log_r: 0.0 });
    }

    #[test]
    fn constant_potential_matches_closed_form() {
        let p = Potential::constant(5.0).unwrap();
        let traj = integrate(&p, 10.0, 1.0, &IntegratorConfig::default()).unwrap();
        for s in traj.samples() {
            let (phi, log_r) = constant_closed_form(5.0, 10.0, s.x);
            // global error of a rel 1e-10 run, accumulated over ~3 oscillations
            assert!((s.phi - phi).abs() < 1e-9, "x={} {} vs {}", s.x, s.phi, phi);
            assert!((s.log_r - log_r).abs() < 1e-9);
        }
    }

    #[test]
    fn self_convergence_at_halved_tolerance() {
        let p = Potential::constant(5.0).unwrap();
        let cfg = IntegratorConfig::default();
        let a = shoot(&p, 10.0, 1.0, &cfg).unwrap().phi;
        let b = shoot(&p, 10.0, 1.0, &cfg.scaled(0.5)).unwrap().phi;
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        assert!((a - b).abs() <= 10.0 * cfg.rel_tol);
    }

    #[test]
    fn reconstruction_satisfies_equation() {
        // -y'' + q y = z^2 y checked with a five-point stencil on y = e^{log r} sin(phi)
        let (c, z) = (5.0, 10.0);
        let p = Potential::constant(c).unwrap();
        let traj = integrate(&p, z, 1.0, &IntegratorConfig::tight()).unwrap();
        let y = |x: f64| {
            let s = traj.state_at(x);
            s.log_r.exp() * s.phi.sin()
        };
        let h = 2e-3;
        let ymax = traj.samples().iter().map(|s| (s.log_r.exp() * s.phi.sin()).abs()).fold(0.0, f64::max);
        for x in [0.1, 0.27, 0.5, 0.63, 0.9] {
            let ypp = (-y(x + 2.0 * h) + 16.0 * y(x + h) - 30.0 * y(x) + 16.0 * y(x - h)
                - y(x - 2.0 * h))
                / (12.0 * h * h);
            let residual = (-ypp + c * y(x) - z * z * y(x)).abs() / (z * z * ymax);
            assert!(residual <= 1e-8, "x={x} residual {residual}");
        }
    }

    #[test]
    fn theta_examples() {
        let zero = Potential::constant(0.0).unwrap();
        let traj = integrate(&zero, 3.7, 1.0, &IntegratorConfig::default()).unwrap();
        assert!((traj.theta(0.7).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(traj.theta(0.0).unwrap(), 0.0);
        assert!(traj.theta(1.1).is_err());

        let five = Potential::constant(5.0).unwrap();
        let traj = integrate(&five, 10.0, 1.0, &IntegratorConfig::default()).unwrap();
        assert!(traj.theta(1.0).unwrap() < 1.0);
    }

    #[test]
    fn phi_inverse_examples() {
        let zero = Potential::constant(0.0).unwrap();
        let traj = integrate(&zero, 2.0 * PI, 1.0, &IntegratorConfig::default()).unwrap();
        assert!((traj.phi_inverse(PI).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(traj.phi_inverse(0.0).unwrap(), 0.0);
        assert!(traj.phi_inverse(7.0).is_err());

        // first zero of y' for q = 5, z = 10
        let five = Potential::constant(5.0).unwrap();
        let traj = integrate(&five, 10.0, 1.0, &IntegratorConfig::default()).unwrap();
        let x = traj.phi_inverse(PI / 2.0).unwrap();
        assert!((traj.phi(x) - PI / 2.0).abs() <= 1e-12);
        let yp = |x: f64| {
            let s = traj.state_at(x);
            s.log_r.exp() * s.phi.cos()
        };
        assert!(yp(x).abs() < 1e-8);
        assert!(yp(x - 1e-4) > 0.0 && yp(x + 1e-4) < 0.0);
        // closed form: y' = cos(w x) vanishes at w x = pi / 2
        assert!((x - PI / 2.0 / 95f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn phi_inverse_rejects_decreasing_angle() {
        // z^2 well below q makes phi' negative once sin^2(phi) is large
        let p = Potential::constant(400.0).unwrap();
        let traj = integrate(&p, 2.0, 1.0, &IntegratorConfig::default()).unwrap();
        if !traj.is_angle_increasing() {
            assert!(matches!(traj.phi_inverse(0.1), Err(Error::Precondition(_))));
        }
    }

    #[test]
    fn piecewise_potential_stops_on_nodes() {
        let p = Potential::new(crate::potential::PotentialSpec::PiecewiseLinear {
            nodes: vec![(0.0, 1.0), (0.3, 1.04), (1.0, 1.0)],
        })
        .unwrap();
        let traj = integrate(&p, 8.0, 1.0, &IntegratorConfig::default()).unwrap();
        assert!(traj.step_boundaries().contains(&0.3));
        let fine = shoot(&p, 8.0, 1.0, &IntegratorConfig::tight()).unwrap();
        assert!((traj.phi_end() - fine.phi).abs() < 1e-10);
    }

    #[test]
    fn invalid_arguments() {
        let p = Potential::constant(1.0).unwrap();
        let cfg = IntegratorConfig::default();
        assert!(matches!(integrate(&p, 0.0, 1.0, &cfg), Err(Error::Domain { .. })));
        assert!(matches!(integrate(&p, 1.0, 1.5, &cfg), Err(Error::Domain { .. })));
        let bad = IntegratorConfig { rel_tol: 2.0, ..cfg };
        assert!(integrate(&p, 1.0, 1.0, &bad).is_err());
    }

    #[test]
    fn sign_change_at_each_node() {
        let p = Potential::sine_bump(0.8, 0.03).unwrap();
        let z = 20.0;
        let traj = integrate(&p, z, 1.0, &IntegratorConfig::default()).unwrap();
        let nodes = (traj.phi_end() / PI).floor() as usize;
        for k in 1..=nodes {
            let x = traj.phi_inverse(k as f64 * PI).unwrap();
            let before = traj.phi(x - 1e-5).sin();
            let after = traj.phi((x + 1e-5).min(1.0)).sin();
            if x + 1e-5 <= 1.0 {
                assert!(before * after < 0.0, "node {k} at {x}");
            }
            let [dphi, _] = prufer_rhs(p.q(x), z, traj.phi(x));
            assert!((dphi - z).abs() < 1e-9);
        }
    }
}
