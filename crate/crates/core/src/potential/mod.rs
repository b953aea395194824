//! Potentials on the unit interval.
//!
//! A [`Potential`] wraps a validated [`PotentialSpec`] and evaluates `q` and `q'`
//! anywhere in `[0, 1]`. Shape classification and the ratio-bound hypotheses live
//! in [`shape`]; the seeded generator of admissible single-barrier potentials
//! lives in [`sample`].

mod sample;
mod shape;

pub use sample::{sample_admissible, FamilyParams};
pub use shape::{check_hypotheses, classify, HypothesisReport, Shape, ShapeReport, MONOTONE_TOL};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Size of the uniform grid used to validate and classify potentials.
pub const DEFAULT_GRID_N: usize = 4097;

/// Closed-form description of a potential on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `q(x) = c`.
    Constant { c: f64 },
    /// `q(x) = base + amplitude * sin(pi x)`.
    SineBump { base: f64, amplitude: f64 },
    /// Linear interpolation through `(x, value)` nodes spanning `[0, 1]`.
    PiecewiseLinear { nodes: Vec<(f64, f64)> },
    /// `q(x) = sum_k coefficients[k] * x^k`.
    Polynomial { coefficients: Vec<f64> },
}

impl PotentialSpec {
    /// Short human-readable label, used as a default report id. Contains no commas
    /// so it can sit in a CSV field unquoted.
    pub fn label(&self) -> String {
        match self {
            PotentialSpec::Constant { c } => format!("constant({c})"),
            PotentialSpec::SineBump { base, amplitude } => {
                format!("sine_bump({base} {amplitude})")
            }
            PotentialSpec::PiecewiseLinear { nodes } => {
                format!("piecewise_linear({} nodes)", nodes.len())
            }
            PotentialSpec::Polynomial { coefficients } => {
                format!("polynomial(degree {})", coefficients.len().saturating_sub(1))
            }
        }
    }

    fn validate_shape(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        match self {
            PotentialSpec::Constant { c } => {
                if !c.is_finite() || *c < 0.0 {
                    return bad(format!("constant value {c} must be finite and nonnegative"));
                }
            }
            PotentialSpec::SineBump { base, amplitude } => {
                if !base.is_finite() || !amplitude.is_finite() {
                    return bad("sine_bump parameters must be finite".into());
                }
            }
            PotentialSpec::PiecewiseLinear { nodes } => {
                if nodes.len() < 2 {
                    return bad("piecewise_linear needs at least two nodes".into());
                }
                if nodes.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
                    return bad("piecewise_linear nodes must be finite".into());
                }
                if nodes[0].0 != 0.0 || nodes[nodes.len() - 1].0 != 1.0 {
                    return bad("piecewise_linear nodes must start at x = 0 and end at x = 1".into());
                }
                if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("piecewise_linear abscissae must strictly increase".into());
                }
            }
            PotentialSpec::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return bad("polynomial needs at least one coefficient".into());
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return bad("polynomial coefficients must be finite".into());
                }
            }
        }
        Ok(())
    }
}

/// A validated potential: nonnegative on the dense grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    spec: PotentialSpec,
    eval_grid_n: usize,
}

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        Self::with_grid(spec, DEFAULT_GRID_N)
    }

    pub fn with_grid(spec: PotentialSpec, eval_grid_n: usize) -> Result<Self> {
        if eval_grid_n < 3 {
            return Err(Error::InvalidPotential(format!(
                "evaluation grid must have at least 3 points, got {eval_grid_n}"
            )));
        }
        spec.validate_shape()?;
        let p = Potential { spec, eval_grid_n };
        if let Some((x, q)) = p
            .grid()
            .map(|x| (x, p.q(x)))
            .find(|(_, q)| !(*q >= 0.0) || !q.is_finite())
        {
            return Err(Error::InvalidPotential(format!(
                "q({x}) = {q} is negative or not finite"
            )));
        }
        Ok(p)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(PotentialSpec::Constant { c })
    }

    pub fn sine_bump(base: f64, amplitude: f64) -> Result<Self> {
        Self::new(PotentialSpec::SineBump { base, amplitude })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn eval_grid_n(&self) -> usize {
        self.eval_grid_n
    }

    /// Uniform grid `j / (n - 1)`, `j = 0..n`.
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let last = (self.eval_grid_n - 1) as f64;
        (0..self.eval_grid_n).map(move |j| j as f64 / last)
    }

    /// Returns `(q(x), q'(x))`.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                range: "[0, 1]".into(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// `q(x)` with `x` clamped into `[0, 1]`.
    #[inline]
    pub fn q(&self, x: f64) -> f64 {
        self.eval_unchecked(x).0
    }

    /// `q'(x)` with `x` clamped into `[0, 1]`.
    #[inline]
    pub fn dq(&self, x: f64) -> f64 {
        self.eval_unchecked(x).1
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64) -> (f64, f64) {
        let x = x.clamp(0.0, 1.0);
        match &self.spec {
            PotentialSpec::Constant { c } => (*c, 0.0),
            PotentialSpec::SineBump { base, amplitude } => {
                let (s, c) = (PI * x).sin_cos();
                (base + amplitude * s, amplitude * PI * c)
            }
            PotentialSpec::PiecewiseLinear { nodes } => {
                // right-hand slope at interior nodes, left-hand slope at x = 1
                let k = match nodes.partition_point(|(xn, _)| *xn <= x) {
                    0 => 0,
                    k if k >= nodes.len() => nodes.len() - 2,
                    k => k - 1,
                };
                let (x0, v0) = nodes[k];
                let (x1, v1) = nodes[k + 1];
                let slope = (v1 - v0) / (x1 - x0);
                (v0 + slope * (x - x0), slope)
            }
            PotentialSpec::Polynomial { coefficients } => {
                let mut v = 0.0;
                let mut d = 0.0;
                for &c in coefficients.iter().rev() {
                    d = d * x + v;
                    v = v * x + c;
                }
                (v, d)
            }
        }
    }

    /// Interior points where `q'` may jump; integrators stop on them.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.spec {
            PotentialSpec::PiecewiseLinear { nodes } => {
                nodes[1..nodes.len() - 1].iter().map(|(x, _)| *x).collect()
            }
            _ => Vec::new(),
        }
    }

    /// `sup |q'|` over `[0, 1]`: closed form where available, grid maximum otherwise.
    pub fn sup_abs_derivative(&self) -> f64 {
        match &self.spec {
            PotentialSpec::Constant { .. } => 0.0,
            PotentialSpec::SineBump { amplitude, .. } => amplitude.abs() * PI,
            PotentialSpec::PiecewiseLinear { nodes } => nodes
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
            PotentialSpec::Polynomial { .. } => {
                self.grid().map(|x| self.dq(x).abs()).fold(0.0, f64::max)
            }
        }
    }

    /// `sup q` over the evaluation grid.
    pub fn grid_max(&self) -> f64 {
        self.grid().map(|x| self.q(x)).fold(0.0, f64::max)
    }

    /// `int_0^1 q`, by composite Simpson on the evaluation grid.
    pub fn integral(&self) -> f64 {
        // n - 1 intervals; Simpson needs an even count, otherwise fall back to trapezoid
        let n = self.eval_grid_n;
        let h = 1.0 / (n - 1) as f64;
        let vals: Vec<f64> = self.grid().map(|x| self.q(x)).collect();
        if (n - 1).is_multiple_of(2) {
            let mut s = vals[0] + vals[n - 1];
            for (j, v) in vals.iter().enumerate().take(n - 1).skip(1) {
                s += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            s * h / 3.0
        } else {
            let inner: f64 = vals[1..n - 1].iter().sum();
            h * (inner + 0.5 * (vals[0] + vals[n - 1]))
        }
    }

    /// The reflected potential `x -> q(1 - x)`.
    pub fn reverse(&self) -> Potential {
        let spec = match &self.spec {
            PotentialSpec::Constant { .. } | PotentialSpec::SineBump { .. } => self.spec.clone(),
            PotentialSpec::PiecewiseLinear { nodes } => PotentialSpec::PiecewiseLinear {
                nodes: nodes.iter().rev().map(|&(x, v)| (1.0 - x, v)).collect(),
            },
            PotentialSpec::Polynomial { coefficients } => PotentialSpec::Polynomial {
                coefficients: reflect_polynomial(coefficients),
            },
        };
        Potential {
            spec,
            eval_grid_n: self.eval_grid_n,
        }
    }
}

/// Coefficients of `p(1 - x)` given those of `p(x)`.
fn reflect_polynomial(c: &[f64]) -> Vec<f64> {
    let deg = c.len();
    let mut out = vec![0.0; deg];
    for (k, &ck) in c.iter().enumerate() {
        // (1 - x)^k = sum_j C(k, j) (-x)^j
        let mut binom = 1.0;
        for (j, o) in out.iter_mut().enumerate().take(k + 1) {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *o += ck * binom * sign;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

/// `evaluate` as a free function.
pub fn evaluate(p: &Potential, x: f64) -> Result<(f64, f64)> {
    p.evaluate(x)
}

/// `reverse` as a free function.
pub fn reverse(p: &Potential) -> Potential {
    p.reverse()
}
