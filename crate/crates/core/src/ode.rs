//! Adaptive Dormand–Prince 5(4) integrator for small non-stiff systems.

use crate::error::{Error, Result};

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            max_steps: 200_000,
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) and returns `y(t1)`.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    settings: &OdeSettings,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t0 == t1 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut h = span / 64.0;

    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(t, &y, &mut k[0]);

    for _ in 0..settings.max_steps {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            return Ok(y);
        }
        if h >= remaining {
            h = remaining;
        }
        let hs = h * dir;

        for i in 0..n {
            tmp[i] = y[i] + hs * A21 * k[0][i];
        }
        f(t + C2 * hs, &tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * hs, &tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * hs, &tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * hs, &tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i]
                + hs * (A61 * k[0][i]
                    + A62 * k[1][i]
                    + A63 * k[2][i]
                    + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        f(t + hs, &tmp, &mut k[5]);
        for i in 0..n {
            y_new[i] = y[i]
                + hs * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f(t + hs, &y_new, &mut k[6]);

        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = hs
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = settings.abs_tol + settings.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            return Err(Error::Numeric(format!(
                "ODE state became non-finite near t = {t}"
            )));
        }

        if err <= 1.0 {
            t += hs;
            if (t1 - t) * dir <= 0.0 || h == remaining {
                t = t1;
            }
            std::mem::swap(&mut y, &mut y_new);
            let last = k.pop().expect("seven stages");
            k.insert(0, last);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < span * 1e-15 {
            return Err(Error::Numeric(format!(
                "ODE step size underflow near t = {t}"
            )));
        }
        if t == t1 {
            return Ok(y);
        }
    }
    Err(Error::Numeric(
        "ODE integration exceeded the step budget".into(),
    ))
}
