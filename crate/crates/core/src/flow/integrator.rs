//! Dormand–Prince 5(4) with the standard fourth-order dense output.

use super::FlowError;

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

/// One accepted step with its continuous extension.
pub struct DenseStep<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    rcont: &'a [Vec<f64>; 5],
}

impl DenseStep<'_> {
    /// Interpolated state at `t` in `[t0, t1]` (either orientation).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let r = self.rcont;
        (0..self.y0.len())
            .map(|i| r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i]))))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Adaptive embedded Runge–Kutta integrator.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t_end` (forward or backward),
    /// handing every accepted step to `observer`. Returns the final time and
    /// state, which is the end of the step on which the observer stopped.
    pub fn integrate<F, O>(&self, mut f: F, t0: f64, y0: &[f64], t_end: f64, mut observer: O) -> Result<(f64, Vec<f64>), FlowError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(&DenseStep) -> Control,
    {
        let n = y0.len();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut t = t0;
        let mut y = y0.to_vec();
        if span == 0.0 {
            return Ok((t, y));
        }
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut err = vec![0.0; n];
        f(t, &y, &mut k[0]);

        // starting step from the size of y and y'
        let sc = |y: &[f64], i: usize| self.atol + self.rtol * y[i].abs();
        let d0 = (y.iter().enumerate().map(|(i, v)| (v / sc(&y, i)).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d1 = (k[0].iter().enumerate().map(|(i, v)| (v / sc(&y, i)).powi(2)).sum::<f64>() / n as f64).sqrt();
        let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h = h.min(self.h_max).min(span);

        let mut steps = 0;
        let mut rejected_last = false;
        loop {
            if steps >= self.max_steps {
                return Err(FlowError::StepFailure(format!("more than {} steps", self.max_steps)));
            }
            steps += 1;
            let remaining = (t_end - t) * dir;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let hs = h * dir;
            let stage = |tmp: &mut Vec<f64>, y: &[f64], k: &[Vec<f64>; 7], coeffs: &[(usize, f64)]| {
                for i in 0..n {
                    let mut acc = 0.0;
                    for &(j, a) in coeffs {
                        acc += a * k[j][i];
                    }
                    tmp[i] = y[i] + hs * acc;
                }
            };
            stage(&mut tmp, &y, &k, &[(0, A21)]);
            f(t + C2 * hs, &tmp, &mut k[1]);
            stage(&mut tmp, &y, &k, &[(0, A31), (1, A32)]);
            f(t + C3 * hs, &tmp, &mut k[2]);
            stage(&mut tmp, &y, &k, &[(0, A41), (1, A42), (2, A43)]);
            f(t + C4 * hs, &tmp, &mut k[3]);
            stage(&mut tmp, &y, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            f(t + C5 * hs, &tmp, &mut k[4]);
            stage(&mut tmp, &y, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            f(t + hs, &tmp, &mut k[5]);
            stage(&mut y_new, &y, &k, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
            f(t + hs, &y_new, &mut k[6]);
            for i in 0..n {
                err[i] = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            }
            let norm = (err
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let s = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                    (e / s).powi(2)
                })
                .sum::<f64>()
                / n as f64)
                .sqrt();
            if !norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h *= 0.2;
                rejected_last = true;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(FlowError::StepFailure(format!("non-finite state near t = {t}")));
                }
                continue;
            }
            if norm <= 1.0 {
                let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
                for i in 0..n {
                    let dy = y_new[i] - y[i];
                    let bspl = hs * k[0][i] - dy;
                    rcont[0][i] = y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - hs * k[6][i] - bspl;
                    rcont[4][i] = hs
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                }
                let t_new = if last { t_end } else { t + hs };
                let control = observer(&DenseStep { t0: t, t1: t_new, y0: &y, y1: &y_new, rcont: &rcont });
                t = t_new;
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                if last || control == Control::Stop {
                    return Ok((t, y));
                }
                let mut fac = 0.9 * norm.powf(-0.2);
                fac = fac.clamp(0.2, 5.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                rejected_last = false;
                h = (h * fac).min(self.h_max);
            } else {
                h *= (0.9 * norm.powf(-0.2)).max(0.2);
                rejected_last = true;
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(FlowError::StepFailure(format!("step size underflow at t = {t}")));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let (t, y) = Dopri5::new(1e-12)
            .integrate(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], 2.0, |_| Control::Continue)
            .unwrap();
        assert_eq!(t, 2.0);
        assert!((y[0] - 2.0_f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_and_dense_output() {
        // y = cos t, y' = -sin t
        let mut worst: f64 = 0.0;
        let (_, y) = Dopri5::new(1e-10)
            .integrate(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[1.0, 0.0],
                -5.0,
                |step| {
                    for j in 1..4 {
                        let t = step.t0 + (step.t1 - step.t0) * j as f64 / 4.0;
                        worst = worst.max((step.eval(t)[0] - t.cos()).abs());
                    }
                    Control::Continue
                },
            )
            .unwrap();
        assert!((y[0] - 5.0_f64.cos()).abs() < 1e-8);
        assert!(worst < 1e-7, "dense output error {worst}");
    }

    #[test]
    fn observer_can_stop() {
        let solver = Dopri5 { h_max: 0.5, ..Dopri5::new(1e-8) };
        let (t, _) = solver
            .integrate(|_, _, dy| dy[0] = 1.0, 0.0, &[0.0], 10.0, |s| if s.y1[0] > 3.0 { Control::Stop } else { Control::Continue })
            .unwrap();
        assert!(t > 3.0 && t < 10.0);
    }
}
