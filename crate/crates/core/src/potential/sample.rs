//! Seeded generator of admissible single-barrier potentials.
//!
//! Every generated potential is a nonnegative single barrier with
//! `sup |q'| <= (2/15) min(q(0), q(1))` by construction. Transition points are
//! snapped to the classification grid so that the grid maximum is `q(x0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PotentialSpec, DEFAULT_GRID_N};
use crate::error::{Error, Result};

/// Fraction of the derivative budget actually used, kept off the boundary so
/// rounding never pushes `sup |q'|` past `q*`.
const BUDGET_SAFETY: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    /// Range for the transition point `x0`; must lie inside `(0, 1)`.
    pub transition_range: (f64, f64),
    /// Range for the endpoint level of the potential.
    pub base_range: (f64, f64),
    /// Fraction in `[0, 1]` of the derivative budget `(2/15) min(q(0), q(1))`.
    pub amplitude_cap: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            transition_range: (0.25, 0.75),
            base_range: (0.1, 1.5),
            amplitude_cap: 1.0,
        }
    }
}

impl FamilyParams {
    fn validate(&self) -> Result<()> {
        let (t0, t1) = self.transition_range;
        let (b0, b1) = self.base_range;
        if !(t0 <= t1) || !(t0 > 0.0) || !(t1 < 1.0) {
            return Err(Error::Infeasible(format!(
                "transition_range ({t0}, {t1}) must be a nonempty subrange of (0, 1)"
            )));
        }
        if !(b0 <= b1) || !(b0 >= 0.0) || !b1.is_finite() {
            return Err(Error::Infeasible(format!(
                "base_range ({b0}, {b1}) must be a nonempty nonnegative range"
            )));
        }
        if !(0.0..=1.0).contains(&self.amplitude_cap) {
            return Err(Error::Infeasible(format!(
                "amplitude_cap {} must lie in [0, 1]",
                self.amplitude_cap
            )));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn snap_to_grid(x: f64) -> f64 {
    let last = (DEFAULT_GRID_N - 1) as f64;
    (x * last).round() / last
}

/// Deterministic in `seed`.
pub fn sample_admissible(seed: u64, params: &FamilyParams) -> Result<PotentialSpec> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = uniform(&mut rng, params.base_range);
    if params.amplitude_cap == 0.0 || base == 0.0 {
        return Ok(PotentialSpec::Constant { c: base });
    }
    // slope budget guaranteed below q* as long as both endpoints stay >= base
    let smax = BUDGET_SAFETY * params.amplitude_cap * 2.0 / 15.0 * base;
    let x0 = snap_to_grid(uniform(&mut rng, params.transition_range));

    let spec = match rng.gen_range(0..3) {
        0 => {
            let u: f64 = rng.gen_range(0.2..=1.0);
            PotentialSpec::SineBump {
                base,
                amplitude: u * smax / std::f64::consts::PI,
            }
        }
        1 => piecewise(&mut rng, base, smax, x0),
        _ => quadratic(&mut rng, base, smax, x0),
    };
    Ok(spec)
}

fn piecewise(rng: &mut ChaCha8Rng, base: f64, smax: f64, x0: f64) -> PotentialSpec {
    let m = x0.min(1.0 - x0);
    let w = 0.5 * smax * m;
    let b0 = base + rng.gen_range(0.0..=1.0) * w;
    let b1 = base + rng.gen_range(0.0..=1.0) * w;
    let v: f64 = rng.gen_range(0.2..=1.0);
    let peak = b0.max(b1) + v * (smax * m - w);

    let mut nodes = vec![(0.0, b0)];
    nodes.push(split_node(rng, (0.0, b0), (x0, peak), smax));
    nodes.push((x0, peak));
    nodes.push(split_node(rng, (x0, peak), (1.0, b1), smax));
    nodes.push((1.0, b1));
    PotentialSpec::PiecewiseLinear { nodes }
}

/// Intermediate node on a monotone segment keeping both sub-slopes within `smax`.
fn split_node(rng: &mut ChaCha8Rng, a: (f64, f64), b: (f64, f64), smax: f64) -> (f64, f64) {
    let alpha: f64 = rng.gen_range(0.25..=0.75);
    let x = snap_to_grid(a.0 + alpha * (b.0 - a.0));
    let alpha = (x - a.0) / (b.0 - a.0);
    let rise = b.1 - a.1;
    let slope = (rise / (b.0 - a.0)).abs();
    let rho = if slope > 0.0 { smax / slope } else { f64::INFINITY };
    let lo = (1.0 - rho * (1.0 - alpha)).max(0.0);
    let hi = (rho * alpha).min(1.0);
    let beta = if hi > lo { rng.gen_range(lo..=hi) } else { alpha };
    (x, a.1 + beta * rise)
}

/// `q(x) = peak - k (x - x0)^2` with `k` inside the derivative budget.
fn quadratic(rng: &mut ChaCha8Rng, base: f64, smax: f64, x0: f64) -> PotentialSpec {
    let big_m = x0.max(1.0 - x0);
    // both endpoints stay >= base: peak - k M^2 >= base; slope 2 k M <= smax
    let k = rng.gen_range(0.2..=1.0) * smax / (2.0 * big_m);
    let peak = base + k * big_m * big_m;
    PotentialSpec::Polynomial {
        coefficients: vec![peak - k * x0 * x0, 2.0 * k * x0, -k],
    }
}
