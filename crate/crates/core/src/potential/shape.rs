use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::Potential;

/// Tolerance on consecutive grid differences when reading off monotonicity.
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    SingleBarrier,
    SingleWell,
    Constant,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub shape: Shape,
    /// Transition point: barrier maximum or well minimum (plateau midpoint).
    pub x0: f64,
    pub q_sup: f64,
    pub q0: f64,
    pub q1: f64,
    pub qmin: f64,
}

impl ShapeReport {
    /// Constant potentials count as both barrier and well.
    pub fn is_single_barrier(&self) -> bool {
        matches!(self.shape, Shape::SingleBarrier | Shape::Constant)
    }

    /// Single-well in the wide sense. Constants count, and so do monotone
    /// potentials (barriers whose maximum sits at an endpoint).
    pub fn is_single_well(&self) -> bool {
        match self.shape {
            Shape::SingleWell | Shape::Constant => true,
            Shape::SingleBarrier => self.x0 == 0.0 || self.x0 == 1.0,
            Shape::Other => false,
        }
    }
}

/// Reads the shape off the sign pattern of grid differences.
pub fn classify(p: &Potential) -> ShapeReport {
    let xs: Vec<f64> = p.grid().collect();
    let vs: Vec<f64> = xs.iter().map(|&x| p.q(x)).collect();
    let n = vs.len();

    let q_sup = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let qmin = vs.iter().copied().fold(f64::INFINITY, f64::min);

    let mut last_up = None;
    let mut first_up = None;
    let mut last_down = None;
    let mut first_down = None;
    for j in 0..n - 1 {
        let d = vs[j + 1] - vs[j];
        if d > MONOTONE_TOL {
            first_up.get_or_insert(j);
            last_up = Some(j);
        } else if d < -MONOTONE_TOL {
            first_down.get_or_insert(j);
            last_down = Some(j);
        }
    }

    let plateau_mid = |target: f64| {
        let first = vs.iter().position(|&v| (v - target).abs() <= MONOTONE_TOL).unwrap_or(0);
        let last = vs.iter().rposition(|&v| (v - target).abs() <= MONOTONE_TOL).unwrap_or(n - 1);
        0.5 * (xs[first] + xs[last])
    };

    let (shape, x0) = match (first_up, last_up, first_down, last_down) {
        (None, _, None, _) => (Shape::Constant, 0.5),
        (_, lu, fd, _) if lu.zip(fd).is_none_or(|(lu, fd)| lu < fd) => {
            (Shape::SingleBarrier, plateau_mid(q_sup))
        }
        (fu, _, _, ld) if ld.zip(fu).is_none_or(|(ld, fu)| ld < fu) => {
            (Shape::SingleWell, plateau_mid(qmin))
        }
        _ => (Shape::Other, plateau_mid(q_sup)),
    };

    ShapeReport {
        shape,
        x0,
        q_sup,
        q0: vs[0],
        q1: vs[n - 1],
        qmin,
    }
}

/// Hypotheses of the single-barrier ratio bound, each with a signed margin
/// (positive means satisfied with room to spare).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub shape: ShapeReport,
    pub nonnegative: bool,
    pub nonnegative_margin: f64,
    pub single_barrier: bool,
    /// `(2/15) * min(q(0), q(1))`.
    pub qstar: f64,
    pub sup_abs_dq: f64,
    pub deriv_bound_ok: bool,
    pub deriv_margin: f64,
    /// `q(x0)`, the barrier height.
    pub q_x0: f64,
    /// `11 q(x0)`: pairs with `lambda_m` at or above this are covered.
    pub eligibility_threshold: f64,
    /// `q(x0) <= pi^2 / 11`: every pair is covered.
    pub all_pairs_condition: bool,
    pub all_pairs_margin: f64,
}

impl HypothesisReport {
    /// Nonnegative single barrier whose slope stays within `qstar`.
    pub fn hypotheses_hold(&self) -> bool {
        self.nonnegative && self.single_barrier && self.deriv_bound_ok
    }
}

pub fn check_hypotheses(p: &Potential) -> HypothesisReport {
    let shape = classify(p);
    let qstar = 2.0 / 15.0 * shape.q0.min(shape.q1);
    let sup_abs_dq = p.sup_abs_derivative();
    let deriv_margin = qstar - sup_abs_dq;
    let q_x0 = shape.q_sup;
    let all_pairs_margin = PI * PI / 11.0 - q_x0;
    HypothesisReport {
        nonnegative: shape.qmin >= 0.0,
        nonnegative_margin: shape.qmin,
        single_barrier: shape.is_single_barrier(),
        qstar,
        sup_abs_dq,
        deriv_bound_ok: deriv_margin >= 0.0,
        deriv_margin,
        q_x0,
        eligibility_threshold: 11.0 * q_x0,
        all_pairs_condition: all_pairs_margin >= 0.0,
        all_pairs_margin,
        shape,
    }
}
