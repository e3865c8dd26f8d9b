//! Low-level numeric helpers: deterministic pairwise summation and
//! Gauss quadrature node/weight generation.

use num_complex::Complex64;

/// Pairwise (cascade) summation. Deterministic for a fixed slice and
/// accurate to O(eps * log n) relative error.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Complex pairwise summation.
pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; nodes are returned in
/// increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess for the i-th root (descending).
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| half * w).collect(),
    )
}

/// Gauss-Laguerre nodes with *modified* weights `w_i * exp(x_i)`, so that
/// `sum_i w~_i f(x_i) ~ int_0^inf f(x) dx` for integrands that already carry
/// their own exponential decay.
///
/// Works on the scaled functions `L_n(x) e^{-x/2}` throughout, which keeps
/// every intermediate in range for n up to a few hundred.
pub fn gauss_laguerre_modified(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n {
        // Stroud-Secrest initial guesses.
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * nf);
        } else if i == 1 {
            z += 15.0 / (1.0 + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2]);
        }
        for _ in 0..100 {
            let (l_n, l_nm1) = scaled_laguerre(n, z);
            // d/dx [L_n e^{-x/2}] = (n L_n - n L_{n-1})/x * e^{-x/2} - L_n e^{-x/2} / 2
            let deriv = nf * (l_n - l_nm1) / z - 0.5 * l_n;
            let z1 = z;
            z = z1 - l_n / deriv;
            if (z - z1).abs() < 1e-14 * z.max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        let (l_np1, _) = scaled_laguerre(n + 1, z);
        // w_i e^{x_i} = x_i / ((n+1) L_{n+1}(x_i) e^{-x_i/2})^2
        let denom = (nf + 1.0) * l_np1;
        weights[i] = z / (denom * denom);
    }
    (nodes, weights)
}

/// Returns `(L_n(x) e^{-x/2}, L_{n-1}(x) e^{-x/2})` by upward recurrence.
fn scaled_laguerre(n: usize, x: f64) -> (f64, f64) {
    let mut lm = 0.0;
    let mut l = (-0.5 * x).exp();
    for j in 0..n {
        let jf = j as f64;
        let lp = ((2.0 * jf + 1.0 - x) * l - jf * lm) / (jf + 1.0);
        lm = l;
        l = lp;
    }
    (l, lm)
}

/// ln C(n, k) via a log-factorial accumulation; exact enough (1e-14 relative)
/// for the binomial sizes used here.
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// ln n! by direct accumulation.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|i| (i as f64).ln()).sum()
}

/// e^{i t}.
pub fn cis(t: f64) -> Complex64 {
    Complex64::new(t.cos(), t.sin())
}
