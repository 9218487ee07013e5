//! Jacobi polynomials `P_k^(a,b)` on `[-1, 1]` and Gauss-Jacobi rules.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FeneError, Result};

/// Values `P_0(x), ..., P_n(x)` of the Jacobi family with parameters `(a, b)`.
pub fn jacobi_values(n: usize, a: f64, b: f64, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n == 0 {
        return p;
    }
    p.push(0.5 * (a - b) + 0.5 * (a + b + 2.0) * x);
    for k in 2..=n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let c1 = 2.0 * kf * (kf + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
        let next = (c2 * p[k - 1] - c3 * p[k - 2]) / c1;
        p.push(next);
    }
    p
}

/// Values and first derivatives of `P_0 .. P_n` at `x`.
pub fn jacobi_values_and_derivatives(n: usize, a: f64, b: f64, x: f64) -> (Vec<f64>, Vec<f64>) {
    let vals = jacobi_values(n, a, b, x);
    let mut ders = vec![0.0; n + 1];
    if n >= 1 {
        let shifted = jacobi_values(n - 1, a + 1.0, b + 1.0, x);
        for k in 1..=n {
            ders[k] = 0.5 * (k as f64 + a + b + 1.0) * shifted[k - 1];
        }
    }
    (vals, ders)
}

/// Gauss rule for `int_0^1 g(t) (1 - t)^alpha dt` with `n` nodes.
///
/// Nodes come from the Golub-Welsch eigenproblem, are polished by Newton
/// iteration on `P_n^(alpha,0)`, and weights use the closed form
/// `w = 2^(alpha+1) / ((1 - x^2) P_n'(x)^2)` before mapping to `[0, 1]`.
/// Returned nodes are ascending.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 || !(alpha > -1.0) || !alpha.is_finite() {
        return Err(FeneError::InvalidParameter(format!(
            "Gauss-Jacobi rule needs n >= 1 and alpha > -1 (n = {n}, alpha = {alpha})"
        )));
    }
    let (a, b) = (alpha, 0.0);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jac[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut xs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    xs.sort_by(|p, q| p.total_cmp(q));

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for mut x in xs {
        for _ in 0..8 {
            let (v, d) = jacobi_values_and_derivatives(n, a, b, x);
            let step = v[n] / d[n];
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = jacobi_values_and_derivatives(n, a, b, x);
        let w = 2f64.powf(a + 1.0) / ((1.0 - x * x) * d[n] * d[n]);
        nodes.push(0.5 * (x + 1.0));
        weights.push(w * 2f64.powf(-a - 1.0));
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_low_order() {
        let p = jacobi_values(3, 0.0, 0.0, 0.3);
        assert!((p[2] - 0.5 * (3.0 * 0.09 - 1.0)).abs() < 1e-15);
        assert!((p[3] - 0.5 * (5.0 * 0.027 - 3.0 * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (a, b) = (1.7, 2.0);
        let x = 0.21;
        let h = 1e-6;
        let (_, d) = jacobi_values_and_derivatives(6, a, b, x);
        let vp = jacobi_values(6, a, b, x + h);
        let vm = jacobi_values(6, a, b, x - h);
        for k in 0..=6 {
            let fd = (vp[k] - vm[k]) / (2.0 * h);
            assert!((fd - d[k]).abs() < 1e-7 * (1.0 + d[k].abs()));
        }
    }

    #[test]
    fn rule_integrates_weighted_monomials() {
        for alpha in [0.0, 0.5, 1.0, 2.5] {
            let n = 10;
            let (t, w) = gauss_jacobi_unit(n, alpha).unwrap();
            // int_0^1 t^j (1-t)^alpha dt = B(j+1, alpha+1), computed by recurrence.
            let mut exact = 1.0 / (alpha + 1.0);
            for j in 0..(2 * n) {
                let quad: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(j as i32)).sum();
                assert!(
                    ((quad - exact) / exact).abs() < 1e-13,
                    "alpha={alpha} j={j}: {quad} vs {exact}"
                );
                exact *= (j as f64 + 1.0) / (j as f64 + alpha + 2.0);
            }
            assert!(t.windows(2).all(|p| p[0] < p[1]));
            assert!(t[0] > 0.0 && t[n - 1] < 1.0);
            assert!(w.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gauss_jacobi_unit(0, 0.0).is_err());
        assert!(gauss_jacobi_unit(4, -1.0).is_err());
    }
}
