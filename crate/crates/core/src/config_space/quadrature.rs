use std::f64::consts::PI;

use super::jacobi::gauss_jacobi_unit;
use crate::error::{FeneError, Result};

/// One node of the configuration-space rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigNode {
    pub q: [f64; 2],
    pub radius: f64,
    pub angle: f64,
    /// `|q|^2 / b`.
    pub t: f64,
}

/// Tensor-product rule on the ball `B(0, sqrt(b))`.
///
/// Angles are uniform (trapezoid, exact for trigonometric polynomials of
/// degree `< n_angular`). The radial direction uses the variable
/// `t = |q|^2 / b` with a Gauss-Jacobi rule whose weight `(1 - t)^alpha`,
/// `alpha = b/2 - floor(b/2)`, carries the non-polynomial part of the
/// Maxwellian. Both `M * polynomial` and the stress integrand
/// `M F(q) (x) q = Z^-1 (1 - t)^(b/2 - 1) q (x) q` are then polynomial against
/// the rule weight and integrate exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigQuadrature {
    b: f64,
    n_radial: usize,
    n_angular: usize,
    alpha: f64,
    t_nodes: Vec<f64>,
    t_weights: Vec<f64>,
    nodes: Vec<ConfigNode>,
    weights: Vec<f64>,
    maxwellian: Vec<f64>,
}

/// Builds the rule; see [`ConfigQuadrature`].
pub fn build_quadrature(b: f64, n_radial: usize, n_angular: usize) -> Result<ConfigQuadrature> {
    if !(b > 2.0) || !b.is_finite() {
        return Err(FeneError::InvalidParameter(format!(
            "configuration space requires b > 2 (got {b})"
        )));
    }
    if n_radial < 4 {
        return Err(FeneError::InvalidParameter(format!(
            "n_radial = {n_radial} must be >= 4"
        )));
    }
    if n_angular < 8 || !n_angular.is_multiple_of(2) {
        return Err(FeneError::InvalidParameter(format!(
            "n_angular = {n_angular} must be even and >= 8"
        )));
    }
    let alpha = b / 2.0 - (b / 2.0).floor();
    let (t_nodes, t_weights) = gauss_jacobi_unit(n_radial, alpha)?;
    let z = maxwellian_normalizer(b);
    let dtheta = 2.0 * PI / n_angular as f64;
    let mut nodes = Vec::with_capacity(n_radial * n_angular);
    let mut weights = Vec::with_capacity(n_radial * n_angular);
    let mut maxwellian = Vec::with_capacity(n_radial * n_angular);
    for (&t, &w) in t_nodes.iter().zip(&t_weights) {
        let radius = (b * t).sqrt();
        // dq = (b/2) dt dtheta; divide out the rule weight.
        let area_w = 0.5 * b * dtheta * w / (1.0 - t).powf(alpha);
        let m = (1.0 - t).powf(b / 2.0) / z;
        for j in 0..n_angular {
            let angle = dtheta * j as f64;
            nodes.push(ConfigNode {
                q: [radius * angle.cos(), radius * angle.sin()],
                radius,
                angle,
                t,
            });
            weights.push(area_w);
            maxwellian.push(m);
        }
    }
    Ok(ConfigQuadrature {
        b,
        n_radial,
        n_angular,
        alpha,
        t_nodes,
        t_weights,
        nodes,
        weights,
        maxwellian,
    })
}

/// `Z = 2 pi b / (b + 2)`.
pub(crate) fn maxwellian_normalizer(b: f64) -> f64 {
    2.0 * PI * b / (b + 2.0)
}

impl ConfigQuadrature {
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    /// Jacobi exponent of the radial rule.
    pub fn jacobi_exponent(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ConfigNode] {
        &self.nodes
    }

    /// Area weights: `int_B f dq ~ sum_n weights[n] f(q_n)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Maxwellian at each node.
    pub fn maxwellian(&self) -> &[f64] {
        &self.maxwellian
    }

    /// Radial rule for `int_0^1 g(t) (1-t)^alpha dt`.
    pub fn radial_rule(&self) -> (&[f64], &[f64]) {
        (&self.t_nodes, &self.t_weights)
    }

    /// `int_B f dq` for node values `f`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(FeneError::SizeMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    /// `int_B f(q) dq` for a closure evaluated at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(&ConfigNode) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| w * f(n))
            .sum()
    }

    /// `int_B M f dq` for a closure evaluated at the nodes.
    pub fn integrate_weighted(&self, f: impl Fn(&ConfigNode) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.maxwellian)
            .map(|((n, w), m)| w * m * f(n))
            .sum()
    }
}

/// Boundary-layer cut-off: 1 for `|q| <= sqrt(b) - 2/n`, 0 for
/// `|q| >= sqrt(b) - 1/n`, and the monotone C^1 cubic `1 - 3s^2 + 2s^3` in between.
pub fn chi_cutoff(q: [f64; 2], b: f64, n: usize) -> f64 {
    chi_of_radius((q[0] * q[0] + q[1] * q[1]).sqrt(), b, n)
}

pub(crate) fn chi_of_radius(radius: f64, b: f64, n: usize) -> f64 {
    let nf = n as f64;
    let inner = b.sqrt() - 2.0 / nf;
    let s = (radius - inner) * nf;
    cubic_step_down(s)
}

/// `1` for `s <= 0`, `0` for `s >= 1`, `1 - 3s^2 + 2s^3` between.
pub fn cubic_step_down(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_and_probability() {
        for (b, nr) in [(4.0, 32), (4.0, 8), (5.0, 32), (3.0, 24)] {
            let quad = build_quadrature(b, nr, 32).unwrap();
            let area = quad.integrate_fn(|_| 1.0);
            if b == 4.0 {
                assert!((area - PI * b).abs() < 1e-10, "b={b} area={area}");
            }
            let mass = quad.integrate_weighted(|_| 1.0);
            assert!((mass - 1.0).abs() < 1e-10, "b={b} mass={mass}");
            let first_moment = quad.integrate_weighted(|n| n.q[0]);
            assert!(first_moment.abs() < 1e-12);
            assert!(quad.weights().iter().all(|&w| w > 0.0));
            assert!(quad.nodes().iter().all(|n| n.radius < b.sqrt()));
        }
    }

    #[test]
    fn second_moment_closed_form() {
        // int M |q|^2 dq = b * E[t] with t ~ Beta(1, b/2 + 1): b / (b/2 + 2).
        let b = 4.0;
        let quad = build_quadrature(b, 16, 16).unwrap();
        let m2 = quad.integrate_weighted(|n| n.q[0] * n.q[0] + n.q[1] * n.q[1]);
        assert!((m2 - b / (b / 2.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_quadrature(1.5, 8, 8).is_err());
        assert!(build_quadrature(4.0, 3, 8).is_err());
        assert!(build_quadrature(4.0, 8, 7).is_err());
        assert!(build_quadrature(4.0, 8, 6).is_err());
    }

    #[test]
    fn chi_plateaus_and_smoothness() {
        let b: f64 = 4.0;
        let n = 10;
        let root = b.sqrt();
        assert_eq!(chi_cutoff([0.0, 0.0], b, n), 1.0);
        assert_eq!(chi_cutoff([root - 0.5 / n as f64, 0.0], b, n), 0.0);
        let lo = root - 2.0 / n as f64;
        let hi = root - 1.0 / n as f64;
        let h = 1e-7;
        for knot in [lo, hi] {
            let left = chi_of_radius(knot - h, b, n);
            let right = chi_of_radius(knot + h, b, n);
            let at = chi_of_radius(knot, b, n);
            assert!((left - at).abs() < 1e-10 && (right - at).abs() < 1e-10);
            // Slope ~ 6 n s: both one-sided difference quotients vanish to O(h).
            assert!(((at - left) / h).abs() < 1e-4);
            assert!(((right - at) / h).abs() < 1e-4);
        }
        let mut prev = 1.0;
        for i in 0..=100 {
            let r = lo + (hi - lo) * i as f64 / 100.0;
            let v = chi_of_radius(r, b, n);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }
}
