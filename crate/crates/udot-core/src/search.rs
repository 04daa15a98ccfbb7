//! Crate-internal 1-d maximization: dense scan to find the basin, golden
//! section to polish. Shared by the surplus transforms and the conjugate
//! assembly; both only ever need maxima of smooth scalar functions on an
//! interval.

use crate::num;

/// Golden-section maximization of `f` on `[a, b]` down to interval width
/// `width_tol`; returns `(argmax, max)`. Assumes `f` is unimodal on the
/// bracket (callers establish that with a scan).
pub(crate) fn golden_max(
    f: &dyn Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    width_tol: f64,
) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while num::abs(b - a) > width_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Dense scan over `points + 1` samples of `[a, b]`, then golden polish on
/// the winning cell's neighborhood; returns `(argmax, max)`.
pub(crate) fn scan_max(f: &dyn Fn(f64) -> f64, a: f64, b: f64, points: usize) -> (f64, f64) {
    let h = (b - a) / points as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=points {
        let v = f(a + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + best_i.saturating_sub(1) as f64 * h;
    let hi = a + (best_i + 1).min(points) as f64 * h;
    golden_max(f, lo, hi, 1e-12 * f64::max(1.0, num::abs(b - a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_smooth_peaks() {
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        let (x, v) = scan_max(&f, -1.0, 1.0, 128);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(v.abs() < 1e-15);

        // Endpoint maxima are allowed.
        let g = |x: f64| x;
        let (x, _) = scan_max(&g, 0.0, 2.0, 64);
        assert!((x - 2.0).abs() < 1e-9);
    }
}
