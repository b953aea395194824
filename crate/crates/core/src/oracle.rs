//! Independent eigenvalue oracle: second-order finite differences on a uniform
//! grid, with eigenvalues of the tridiagonal matrix located by Sturm-count
//! bisection and optionally Richardson-extrapolated from `N/2` and `N`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Relative width at which bisection stops.
pub const BISECTION_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FdConfig {
    /// Interior grid points of the finer grid.
    pub grid_n: usize,
    /// Combine `grid_n / 2` and `grid_n` as `(4 lambda_fine - lambda_coarse) / 3`.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            grid_n: 4096,
            richardson: true,
        }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 64 {
            return Err(Error::Input(format!("grid_n must be at least 64, got {}", self.grid_n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdEigenvalue {
    pub n: usize,
    pub lambda: f64,
}

/// Number of eigenvalues below `mu` of the symmetric tridiagonal matrix with
/// diagonal `diag` and every off-diagonal entry squared equal to `offdiag_sq`.
///
/// Uses the pivot (ratio) recurrence `d_k = diag_k - mu - offdiag_sq / d_{k-1}`,
/// which never overflows; tiny pivots are pushed to `-pivmin`.
pub fn sturm_count(diag: &[f64], offdiag_sq: f64, mu: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE * offdiag_sq.max(1.0);
    let mut count = 0;
    let mut d = 1.0;
    for (k, &a) in diag.iter().enumerate() {
        d = if k == 0 { a - mu } else { (a - mu) - offdiag_sq / d };
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Diagonal `2/h^2 + q(x_j)` and `offdiag_sq = 1/h^4` for `grid_n` interior points.
pub fn fd_matrix(p: &Potential, grid_n: usize) -> (Vec<f64>, f64) {
    let grid = FdGrid::new(p, grid_n);
    let diag = grid.q.iter().map(|q| 2.0 * grid.inv_h2 + q).collect();
    (diag, grid.inv_h2 * grid.inv_h2)
}

/// The finite-difference operator kept as `q(x_j)` and `1/h^2` separately.
struct FdGrid {
    q: Vec<f64>,
    inv_h2: f64,
}

impl FdGrid {
    fn new(p: &Potential, grid_n: usize) -> Self {
        let h = 1.0 / (grid_n + 1) as f64;
        FdGrid {
            q: (1..=grid_n).map(|j| p.q(j as f64 * h)).collect(),
            inv_h2: 1.0 / (h * h),
        }
    }

    /// Sturm count with pivots written as `d_k = e (1 + w_k)`, `e = 1/h^2`:
    /// `w_k = w_{k-1} / (1 + w_{k-1}) + (q_k - mu) / e`.
    /// Unlike the plain recurrence this never forms `2/h^2 - mu`, so rounding
    /// stays relative to `mu` instead of to the matrix norm.
    fn count(&self, mu: f64) -> usize {
        let tiny = f64::EPSILON * f64::EPSILON;
        let inv_e = 1.0 / self.inv_h2;
        let mut count = 0;
        // exact first pivot d_1 = 2e + c_1
        let mut w = 1.0 + (self.q[0] - mu) * inv_e;
        for k in 0..self.q.len() {
            let mut piv = 1.0 + w;
            if piv.abs() < tiny {
                piv = -tiny;
            }
            if piv < 0.0 {
                count += 1;
            }
            if let Some(&qn) = self.q.get(k + 1) {
                w = w / piv + (qn - mu) * inv_e;
            }
        }
        count
    }

    fn kth_eigenvalue(&self, k: usize) -> f64 {
        let qmin = self.q.iter().copied().fold(f64::INFINITY, f64::min);
        let qmax = self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lo = qmin;
        let mut hi = qmax + 4.0 * self.inv_h2;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count(mid) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= BISECTION_REL_TOL * mid.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Lowest `n_max` discrete eigenvalues on a single grid.
pub fn fd_eigenvalues(p: &Potential, grid_n: usize, n_max: usize) -> Vec<f64> {
    let grid = FdGrid::new(p, grid_n);
    (1..=n_max)
        .into_par_iter()
        .map(|k| grid.kth_eigenvalue(k))
        .collect()
}

/// Finite-difference eigenvalues `1..=n_max`.
pub fn fd_spectrum(p: &Potential, cfg: &FdConfig, n_max: usize) -> Result<Vec<FdEigenvalue>> {
    cfg.validate()?;
    if n_max == 0 || n_max > cfg.grid_n / 4 {
        return Err(Error::Precondition(format!(
            "n_max must lie in [1, grid_n / 4] = [1, {}], got {n_max}",
            cfg.grid_n / 4
        )));
    }
    let fine = fd_eigenvalues(p, cfg.grid_n, n_max);
    let values = if cfg.richardson {
        let coarse = fd_eigenvalues(p, cfg.grid_n / 2, n_max);
        fine.iter()
            .zip(&coarse)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect()
    } else {
        fine
    };
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(k, lambda)| FdEigenvalue { n: k + 1, lambda })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn discrete_zero(n: usize, grid_n: usize) -> f64 {
        let h = 1.0 / (grid_n + 1) as f64;
        // 2/h^2 (1 - cos(n pi h)) without the cancellation
        4.0 / (h * h) * (0.5 * n as f64 * PI * h).sin().powi(2)
    }

    #[test]
    fn sturm_examples() {
        assert_eq!(sturm_count(&[3.0], 1.0, 3.5), 1);
        assert_eq!(sturm_count(&[3.0], 1.0, 2.5), 0);

        let p = Potential::constant(0.0).unwrap();
        let (diag, off2) = fd_matrix(&p, 100);
        let mu = 0.5 * (discrete_zero(3, 100) + discrete_zero(4, 100));
        assert_eq!(sturm_count(&diag, off2, mu), 3);
        let floor = diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * off2.sqrt();
        assert_eq!(sturm_count(&diag, off2, floor - 1.0), 0);
        assert_eq!(sturm_count(&diag, off2, 1e12), 100);
    }

    #[test]
    fn zero_potential_matches_discrete_closed_form() {
        let p = Potential::constant(0.0).unwrap();
        let raw = fd_spectrum(&p, &FdConfig { grid_n: 4096, richardson: false }, 4).unwrap();
        for e in &raw {
            let exact = discrete_zero(e.n, 4096);
            assert!((e.lambda - exact).abs() <= 1e-10 * exact, "{e:?} {exact}");
        }
        let h = 1.0 / 4097.0;
        assert!((raw[0].lambda - PI * PI).abs() <= 1.01 * PI.powi(4) * h * h / 12.0);

        let rich = fd_spectrum(&p, &FdConfig::default(), 1).unwrap();
        assert!((rich[0].lambda - PI * PI).abs() <= 1e-8, "{}", rich[0].lambda - PI * PI);
    }

    #[test]
    fn constant_shift_is_exact() {
        let cfg = FdConfig { grid_n: 256, richardson: false };
        let a = fd_spectrum(&Potential::constant(0.0).unwrap(), &cfg, 8).unwrap();
        let b = fd_spectrum(&Potential::constant(5.0).unwrap(), &cfg, 8).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y.lambda - x.lambda - 5.0).abs() <= 1e-12 * y.lambda, "{x:?} {y:?}");
        }
    }

    #[test]
    fn second_order_convergence() {
        let p = Potential::sine_bump(0.8, 0.03).unwrap();
        let reference = fd_spectrum(&p, &FdConfig::default(), 5).unwrap();
        let e = |n: usize| fd_eigenvalues(&p, n, 5);
        let (a, b) = (e(127), e(255));
        for k in 0..5 {
            let ratio = (a[k] - reference[k].lambda) / (b[k] - reference[k].lambda);
            assert!((ratio - 4.0).abs() < 0.1, "n={} ratio {ratio}", k + 1);
        }
    }

    #[test]
    fn counts_between_returned_eigenvalues() {
        let p = Potential::sine_bump(1.0, 0.04).unwrap();
        let (diag, off2) = fd_matrix(&p, 512);
        let eigs = fd_eigenvalues(&p, 512, 8);
        for (k, w) in eigs.windows(2).enumerate() {
            assert_eq!(sturm_count(&diag, off2, 0.5 * (w[0] + w[1])), k + 1);
        }
    }

    #[test]
    fn scaled_count_agrees_with_plain_recurrence() {
        let p = Potential::sine_bump(1.0, 0.04).unwrap();
        let grid = FdGrid::new(&p, 300);
        let (diag, off2) = fd_matrix(&p, 300);
        for mu in [-5.0, 0.5, 10.0, 11.0, 40.0, 1e3, 2e4, 1e5, 3.6e5, 1e6] {
            assert_eq!(grid.count(mu), sturm_count(&diag, off2, mu), "mu={mu}");
        }
    }

    #[test]
    fn guards() {
        let p = Potential::constant(0.0).unwrap();
        assert!(fd_spectrum(&p, &FdConfig { grid_n: 32, richardson: false }, 1).is_err());
        assert!(matches!(
            fd_spectrum(&p, &FdConfig { grid_n: 64, richardson: false }, 17),
            Err(Error::Precondition(_))
        ));
        assert!(fd_spectrum(&p, &FdConfig { grid_n: 64, richardson: false }, 16).is_ok());
    }
}
