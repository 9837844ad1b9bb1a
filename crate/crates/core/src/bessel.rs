//! Zeroth-order Bessel function of the first kind.

use std::f64::consts::PI;

// Below this the power series loses at most ~4 digits to cancellation;
// above it the Hankel expansion's smallest term is below 1e-10.
const SERIES_LIMIT: f64 = 12.0;

/// `J0(x)`, accurate to about 1e-10 absolute for all finite `x`.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        hankel(x)
    }
}

fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 1.0;
    while term.abs() > 1e-17 * sum.abs().max(1e-300) || k < 3.0 {
        term *= -q / (k * k);
        sum += term;
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

// J0(x) ~ sqrt(2/(pi x)) (P cos(x - pi/4) - Q sin(x - pi/4)), asymptotic
// series truncated at the smallest term.
fn hankel(x: f64) -> f64 {
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -odd * odd / (k as f64 * eight_x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
    }
    let phase = x - PI / 4.0;
    (2.0 / (PI * x)).sqrt() * (p * phase.cos() - q * phase.sin())
}
