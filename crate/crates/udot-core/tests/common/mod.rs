//! Shared oracle helpers for the integration tests.
//!
//! Everything in this module is deliberately *independent* of the library:
//! brute-force quadrature, central differences, exhaustive search, and a tiny
//! standalone RNG. Implementations in `udot-core` are accepted when they agree
//! with these oracles, so the oracles must not call back into the code they
//! judge.

#![allow(dead_code)]

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Composite midpoint rule for `∫_a^b f` with `n` panels.
///
/// Exact for affine integrands; second order otherwise. Good enough for the
/// closed-form cross-checks where we control the integrand.
pub fn midpoint_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += f(a + (i as f64 + 0.5) * h);
    }
    acc * h
}

/// Composite Simpson rule for `∫_a^b f` with `n` (even) panels.
pub fn simpson_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "Simpson needs an even panel count");
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Brute-force `sup` of `f` over `[a, b]`: dense scan plus a golden-section
/// polish inside the best bracketing cell. Returns `(argmax, max)`.
pub fn brute_force_sup<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, scan: usize) -> (f64, f64) {
    let h = (b - a) / scan as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=scan {
        let v = f(a + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + best_i.saturating_sub(1) as f64 * h;
    let hi = a + (best_i + 1).min(scan) as f64 * h;
    golden_max(f, lo, hi, 1e-12)
}

/// Golden-section maximization on `[a, b]` down to interval width `tol`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
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

/// Tiny standalone splitmix64 so oracle sampling never depends on the
/// library's RNG choices.
pub struct OracleRng(u64);

impl OracleRng {
    pub fn new(seed: u64) -> Self {
        OracleRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Exhaustive optimal-assignment oracle for a balanced `k × k` transport
/// instance with uniform weights `1/k`: enumerate all `k!` permutations and
/// maximize `Σ_i S[i][σ(i)] / k`. Feasible for `k ≤ 5` (≤ 120 permutations).
///
/// Returns `(best value, best permutation)`.
pub fn permutation_lp_oracle(surplus: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let k = surplus.len();
    assert!(k >= 1 && k <= 5, "enumeration oracle is for k <= 5");
    for row in surplus {
        assert_eq!(row.len(), k, "oracle needs a square surplus matrix");
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_perm = perm.clone();
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; k];
    let eval = |p: &[usize], best_val: &mut f64, best_perm: &mut Vec<usize>| {
        let v: f64 = p.iter().enumerate().map(|(i, &j)| surplus[i][j]).sum::<f64>() / k as f64;
        if v > *best_val {
            *best_val = v;
            *best_perm = p.to_vec();
        }
    };
    eval(&perm, &mut best_val, &mut best_perm);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            eval(&perm, &mut best_val, &mut best_perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    (best_val, best_perm)
}

/// Exact uniform source density on the annulus `1/2 ≤ |x| ≤ 1`:
/// area is `3π/4`, so the density is `4/(3π)`.
pub const ANNULUS_F: f64 = 4.0 / (3.0 * core::f64::consts::PI);

/// Exact uniform target density on the unit circle parameterized by angle:
/// `1/(2π)`.
pub const CIRCLE_G: f64 = 1.0 / (2.0 * core::f64::consts::PI);

/// Closed-form local operator for the annulus preset at offset `p = 0`:
/// the indifference set at angle `θ` and `p = 0` is the pair of radial
/// segments at angles `θ` and `θ + π`; the sub-level part for `0 ≤ q < 1/2`
/// keeps only the `θ` segment, on which the second target derivative of the
/// surplus is `-r` and the mobility factor is exactly 1, so
///
/// `G2 = ∫_{1/2}^{1} (q + r) · 4/(3π) dr = 1/(2π) + 2q/(3π)`.
pub fn annulus_g2_exact(q: f64) -> f64 {
    assert!((-0.5..0.5).contains(&q));
    CIRCLE_G + 2.0 * q / (3.0 * core::f64::consts::PI)
}

/// Closed-form `∂G2/∂q` for the annulus at `p = 0`, `0 ≤ q < 1/2`:
/// the kept radial segment has length `1/2` and mobility 1, so the
/// derivative is `f · 1/2 = 2/(3π)`.
pub const ANNULUS_DG2_DQ: f64 = 2.0 / (3.0 * core::f64::consts::PI);

/// Closed-form `∂G1/∂q` for the annulus at `p = 0`: both radial segments
/// contribute, total length 1, so `f · 1 = 4/(3π)`.
pub const ANNULUS_DG1_DQ: f64 = 4.0 / (3.0 * core::f64::consts::PI);
