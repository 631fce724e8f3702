//! Integer-order Bessel functions of the first kind, `J_n(x)` for small `n`.

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 8;
pub const MAX_ARG: f64 = 50.0;
/// Below this the ascending series loses less than a few ulps to cancellation.
const SERIES_LIMIT: f64 = 8.0;

/// `J_n(x)` for `n <= 8`, `|x| <= 50`, with absolute error around 1e-13.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::domain("Bessel order", format!("{order} > {MAX_ORDER}")));
    }
    if !(x.abs() <= MAX_ARG) {
        return Err(Error::domain("Bessel argument", format!("|{x}| > {MAX_ARG}")));
    }
    // J_n(-x) = (-1)^n J_n(x)
    let sign = if x < 0.0 && order % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let value = if ax <= SERIES_LIMIT { series(order, ax) } else { miller(order, ax) };
    Ok(sign * value)
}

/// `sum_k (-1)^k (x/2)^{2k+n} / (k! (k+n)!)`.
pub(crate) fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
        if k > 200 {
            break;
        }
    }
    sum
}

/// Downward recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}` from well above the
/// turning point, normalized with `J_0 + 2 sum_k J_{2k} = 1`.
pub(crate) fn miller(order: u32, x: f64) -> f64 {
    let start = {
        let m = (x + 40.0 + 10.0 * x.sqrt()) as u32 + order;
        m + (m % 2)
    };
    let (mut above, mut current) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
        if idx == order {
            wanted = current;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * current;
        }
    }
    norm += current;
    wanted / norm
}
