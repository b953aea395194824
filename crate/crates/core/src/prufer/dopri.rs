//! Dormand–Prince 5(4) stepper with Hairer's fourth-order continuous extension,
//! specialised to the two-component Prüfer system `(phi, log r)`.

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its interpolation coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DenseStep {
    pub x: f64,
    pub h: f64,
    pub y0: State,
    pub y1: State,
    /// `rcont2..rcont5` in Hairer's notation.
    pub r: [State; 4],
}

impl DenseStep {
    #[inline]
    pub fn x_end(&self) -> f64 {
        self.x + self.h
    }

    /// Interpolated state at `x` (expected inside the step).
    #[inline]
    pub fn eval(&self, x: f64) -> State {
        let t = ((x - self.x) / self.h).clamp(0.0, 1.0);
        let s = 1.0 - t;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.y0[i]
                + t * (self.r[0][i] + s * (self.r[1][i] + t * (self.r[2][i] + s * self.r[3][i])));
        }
        out
    }

    /// `d/dx` of the interpolant for component `i`.
    #[inline]
    pub fn eval_deriv(&self, x: f64, i: usize) -> f64 {
        let t = ((x - self.x) / self.h).clamp(0.0, 1.0);
        let [r2, r3, r4, r5] = [self.r[0][i], self.r[1][i], self.r[2][i], self.r[3][i]];
        let dt = r2
            + r3 * (1.0 - 2.0 * t)
            + r4 * (2.0 * t - 3.0 * t * t)
            + r5 * (2.0 * t - 6.0 * t * t + 4.0 * t * t * t);
        dt / self.h
    }
}

pub(crate) struct StepOutcome {
    pub y1: State,
    pub k7: State,
    /// Weighted RMS error estimate; the step is acceptable when `<= 1`.
    pub err: f64,
    pub dense: Option<[State; 4]>,
}

/// Attempts one step of size `h` from `(x, y)` with FSAL derivative `k1`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn try_step<F>(
    f: &F,
    x: f64,
    y: &State,
    k1: &State,
    h: f64,
    rtol: f64,
    atol: f64,
    want_dense: bool,
) -> StepOutcome
where
    F: Fn(f64, &State) -> State,
{
    let comb = |coef: &[(f64, &State)]| -> State {
        let mut out = *y;
        for (c, k) in coef {
            out[0] += h * c * k[0];
            out[1] += h * c * k[1];
        }
        out
    };
    let k2 = f(x + C2 * h, &comb(&[(A21, k1)]));
    let k3 = f(x + C3 * h, &comb(&[(A31, k1), (A32, &k2)]));
    let k4 = f(x + C4 * h, &comb(&[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        x + C5 * h,
        &comb(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        x + h,
        &comb(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y1 = comb(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(x + h, &y1);

    let mut acc = 0.0;
    for i in 0..2 {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = atol + rtol * y[i].abs().max(y1[i].abs());
        acc += (e / sk) * (e / sk);
    }
    let err = (acc / 2.0).sqrt();

    let dense = want_dense.then(|| {
        let mut r = [[0.0; 2]; 4];
        for i in 0..2 {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = ydiff;
            r[1][i] = bspl;
            r[2][i] = ydiff - h * k7[i] - bspl;
            r[3][i] = h
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        r
    });

    StepOutcome { y1, k7, err, dense }
}

#[cfg(test)]
mod tests {
    use super::*;

    // y0' = cos x, y1' = -y1 with y(0) = (0, 1): exact (sin x, e^{-x})
    fn rhs(x: f64, y: &State) -> State {
        [x.cos(), -y[1]]
    }

    #[test]
    fn single_step_is_fifth_order() {
        let y = [0.0, 1.0];
        let k1 = rhs(0.0, &y);
        let mut errs = Vec::new();
        for h in [0.2, 0.1] {
            let out = try_step(&rhs, 0.0, &y, &k1, h, 1e-10, 1e-12, false);
            errs.push((out.y1[0] - h.sin()).abs() + (out.y1[1] - (-h).exp()).abs());
        }
        // local error O(h^6)
        let ratio = errs[0] / errs[1];
        assert!(ratio > 40.0, "ratio {ratio}");
    }

    fn dense_error(h: f64) -> f64 {
        let y = [0.0, 1.0];
        let k1 = rhs(0.0, &y);
        let out = try_step(&rhs, 0.0, &y, &k1, h, 1e-10, 1e-12, true);
        let step = DenseStep { x: 0.0, h, y0: y, y1: out.y1, r: out.dense.unwrap() };
        [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|t| {
                let v = step.eval(t * h);
                (v[0] - (t * h).sin()).abs().max((v[1] - (-t * h).exp()).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn dense_output_is_fourth_order() {
        let (a, b) = (dense_error(0.2), dense_error(0.1));
        assert!(a / b > 20.0, "{a} {b}");
    }

    #[test]
    fn dense_output_interpolates() {
        let y = [0.0, 1.0];
        let k1 = rhs(0.0, &y);
        let h = 0.02;
        let out = try_step(&rhs, 0.0, &y, &k1, h, 1e-10, 1e-12, true);
        let step = DenseStep {
            x: 0.0,
            h,
            y0: y,
            y1: out.y1,
            r: out.dense.unwrap(),
        };
        for t in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let x = t * h;
            let v = step.eval(x);
            assert!((v[0] - x.sin()).abs() < 1e-9, "t={t}");
            assert!((v[1] - (-x).exp()).abs() < 1e-9, "t={t}");
            assert!((step.eval_deriv(x, 0) - x.cos()).abs() < 1e-7);
            assert!((step.eval_deriv(x, 1) + (-x).exp()).abs() < 1e-7);
        }
        let end = step.eval(h);
        assert!((end[0] - out.y1[0]).abs() < 1e-15 && (end[1] - out.y1[1]).abs() < 1e-15);
    }
}
