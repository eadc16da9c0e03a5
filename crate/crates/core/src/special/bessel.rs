//! Bessel functions of the first kind for integer order.
//!
//! Small arguments use the power series directly. Everything else goes
//! through Miller's backward recurrence normalized with
//! `J_0 + 2 sum_{m>=1} J_{2m} = 1`, which yields all orders `0..=k` at once.

const SERIES_LIMIT: f64 = 0.5;
const RESCALE: f64 = 1e250;

/// `J_k(x)` for any integer order.
pub fn bessel_j(k: i32, x: f64) -> f64 {
    let order = k.unsigned_abs() as usize;
    let mut value = if x < 0.0 {
        // J_k(-x) = (-1)^k J_k(x)
        let v = bessel_j_orders(order, -x)[order];
        if order % 2 == 1 { -v } else { v }
    } else {
        bessel_j_orders(order, x)[order]
    };
    if k < 0 && order % 2 == 1 {
        value = -value;
    }
    value
}

/// `d/dx J_k(x)` via `(J_{k-1} - J_{k+1}) / 2`.
pub fn bessel_j_derivative(k: i32, x: f64) -> f64 {
    if k == 0 {
        return -bessel_j(1, x);
    }
    0.5 * (bessel_j(k - 1, x) - bessel_j(k + 1, x))
}

/// `J_0(x), ..., J_{max_order}(x)` for `x >= 0`.
pub fn bessel_j_orders(max_order: usize, x: f64) -> Vec<f64> {
    debug_assert!(x >= 0.0, "bessel_j_orders expects x >= 0, got {x}");
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < SERIES_LIMIT {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = series(k, x);
        }
        return out;
    }
    miller(max_order, x, &mut out);
    out
}

/// `J_k(x)` and `J_k'(x)` for `k = 0..=max_order`.
pub fn bessel_j_with_derivatives(max_order: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let values = bessel_j_orders(max_order + 1, x);
    let mut derivs = vec![0.0; max_order + 1];
    derivs[0] = -values[1];
    for k in 1..=max_order {
        derivs[k] = 0.5 * (values[k - 1] - values[k + 1]);
    }
    let mut values = values;
    values.truncate(max_order + 1);
    (values, derivs)
}

fn series(k: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^k / k!
    let mut term = 1.0;
    for j in 1..=k {
        term *= half / j as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut m = 1.0;
    loop {
        term *= q / (m * (m + k as f64));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        m += 1.0;
    }
    sum
}

fn miller(max_order: usize, x: f64, out: &mut [f64]) {
    let span = (max_order as f64).max(x);
    let mut start = (span + 40.0 + 15.0 * span.cbrt()).ceil() as usize;
    start += start % 2;

    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    for m in (1..=start).rev() {
        let below = m as f64 * two_over_x * current - above;
        above = current;
        current = below;
        // `current` now holds the unnormalized J_{m-1}.
        let order = m - 1;
        if order <= max_order {
            out[order] = current;
        }
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE {
            current /= RESCALE;
            above /= RESCALE;
            norm /= RESCALE;
            if order <= max_order {
                for v in out[order..].iter_mut() {
                    *v /= RESCALE;
                }
            }
        }
    }
    norm += current;
    for v in out.iter_mut() {
        *v /= norm;
    }
}
