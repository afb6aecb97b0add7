//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// `n`-point Gauss–Legendre rule on `[0, 1]`, nodes ascending.
///
/// Exact for polynomials of degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss rule on a box `[a0, a1] × [b0, b1]`: `(x, y, weight)`.
pub fn tensor_rule(n: usize, x: (f64, f64), y: (f64, f64)) -> Vec<(f64, f64, f64)> {
    let (t, w) = gauss_legendre(n);
    let (hx, hy) = (x.1 - x.0, y.1 - y.0);
    let mut out = Vec::with_capacity(n * n);
    for (ty, wy) in t.iter().zip(&w) {
        for (tx, wx) in t.iter().zip(&w) {
            out.push((x.0 + hx * tx, y.0 + hy * ty, wx * wy * hx * hy));
        }
    }
    out
}
