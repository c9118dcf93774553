//! Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// Integrates `y' = f(x, y)` from `x0` to `x1`; returns the state at `x1` and
/// the number of accepted steps.
pub fn integrate<const N: usize, F>(f: F, x0: f64, x1: f64, y0: [f64; N], tol: Tolerance, h0: f64) -> ([f64; N], usize)
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let span = x1 - x0;
    if span == 0.0 {
        return (y0, 0);
    }
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut h = h0.abs().min(span.abs()).max(f64::EPSILON * span.abs()) * dir;
    let mut steps = 0;
    let mut k = [[0.0; N]; 7];
    k[0] = f(x, &y);
    while (x1 - x) * dir > 0.0 {
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        for s in 1..7 {
            let mut ys = y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().take(s).enumerate() {
                    acc += A[s][j] * kj[i];
                }
                *yi += h * acc;
            }
            k[s] = f(x + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][i];
                s4 += B4[s] * k[s][i];
            }
            y5[i] += h * s5;
            let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (s5 - s4)).abs() / sc);
        }
        if err <= 1.0 || h.abs() <= 16.0 * f64::EPSILON * x.abs().max(1.0) {
            x += h;
            y = y5;
            // first-same-as-last
            k[0] = k[6];
            steps += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    (y, steps)
}
