//! Constitutive relations: the FENE spring, its Maxwellian, the isentropic
//! pressure law, Newtonian viscous stress and the density transform that turns
//! the compressible system into a symmetric hyperbolic-parabolic one.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{FeneError, Result};

/// Physical constants of the coupled model.
///
/// Construct through [`ModelParams::new`] or deserialize and call
/// [`ModelParams::validate`]; every solver validates the parameters it is
/// handed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Pressure coefficient in `p = a rho^gamma`.
    pub a: f64,
    /// Adiabatic exponent.
    pub gamma: f64,
    /// Shear viscosity.
    pub mu_s: f64,
    /// Bulk viscosity.
    pub mu_b: f64,
    /// Centre-of-mass diffusion coefficient.
    pub epsilon: f64,
    /// First entry of the Rouse matrix.
    pub a11: f64,
    /// Deborah number.
    pub lambda: f64,
    /// FENE extensibility; the configuration ball has radius `sqrt(b)`.
    pub b: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    2
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            a: 1.0,
            gamma: 1.4,
            mu_s: 0.5,
            mu_b: 0.1,
            epsilon: 0.0,
            a11: 1.0,
            lambda: 1.0,
            b: 4.0,
            dim: 2,
        }
    }
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: f64,
        gamma: f64,
        mu_s: f64,
        mu_b: f64,
        epsilon: f64,
        a11: f64,
        lambda: f64,
        b: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            a,
            gamma,
            mu_s,
            mu_b,
            epsilon,
            a11,
            lambda,
            b,
            dim: 2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &str); 9] = [
            (self.a > 0.0, "a > 0"),
            (self.gamma > 1.0, "gamma > 1"),
            (self.mu_s > 0.0, "mu_s > 0"),
            (self.mu_b >= 0.0, "mu_b >= 0"),
            (self.epsilon >= 0.0, "epsilon >= 0"),
            (self.a11 > 0.0, "a11 > 0"),
            (self.lambda > 0.0, "lambda > 0"),
            (self.b > 2.0, "b > 2"),
            (self.dim == 2, "dim == 2"),
        ];
        for (ok, what) in checks {
            let finite = [
                self.a,
                self.gamma,
                self.mu_s,
                self.mu_b,
                self.epsilon,
                self.a11,
                self.lambda,
                self.b,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !ok || !finite {
                return Err(FeneError::InvalidParameter(format!(
                    "model parameters violate `{what}`"
                )));
            }
        }
        Ok(())
    }

    /// Relaxation rate `A11 / (4 lambda)` in front of the configuration operator.
    pub fn relaxation_rate(&self) -> f64 {
        self.a11 / (4.0 * self.lambda)
    }

    /// `sqrt(2 a gamma / (gamma - 1))`, the prefactor of the density transform.
    fn r_scale(&self) -> f64 {
        (2.0 * self.a * self.gamma / (self.gamma - 1.0)).sqrt()
    }

    /// Normalizer `Z = int_B (1 - |q|^2/b)^(b/2) dq = 2 pi b / (b + 2)` (d = 2).
    pub fn maxwellian_normalizer(&self) -> f64 {
        2.0 * PI * self.b / (self.b + 2.0)
    }
}

/// Warner potential `U(s) = -(b/2) log(1 - 2s/b)` on `[0, b/2)`.
pub fn potential_u(s: f64, p: &ModelParams) -> Result<f64> {
    if !(0.0..p.b / 2.0).contains(&s) {
        return Err(FeneError::domain(
            "potential_u",
            format!("s = {s} outside [0, b/2) with b = {}", p.b),
        ));
    }
    Ok(-(p.b / 2.0) * (-2.0 * s / p.b).ln_1p())
}

fn check_in_ball(op: &'static str, q: [f64; 2], b: f64) -> Result<f64> {
    let q2 = q[0] * q[0] + q[1] * q[1];
    if q2 >= b || !q2.is_finite() {
        return Err(FeneError::domain(
            op,
            format!("|q|^2 = {q2} not below b = {b}"),
        ));
    }
    Ok(q2)
}

/// FENE spring force `F(q) = b q / (b - |q|^2)`.
pub fn spring_force(q: [f64; 2], p: &ModelParams) -> Result<[f64; 2]> {
    let q2 = check_in_ball("spring_force", q, p.b)?;
    let f = p.b / (p.b - q2);
    Ok([f * q[0], f * q[1]])
}

/// Normalized equilibrium density `M(q) = Z^-1 (1 - |q|^2/b)^(b/2)`.
pub fn maxwellian(q: [f64; 2], p: &ModelParams) -> Result<f64> {
    let q2 = check_in_ball("maxwellian", q, p.b)?;
    Ok(maxwellian_of_t(q2 / p.b, p))
}

/// Maxwellian as a function of `t = |q|^2 / b`.
pub(crate) fn maxwellian_of_t(t: f64, p: &ModelParams) -> f64 {
    (1.0 - t).powf(p.b / 2.0) / p.maxwellian_normalizer()
}

/// Isentropic pressure `a rho^gamma`.
pub fn pressure(rho: f64, p: &ModelParams) -> Result<f64> {
    if rho < 0.0 || !rho.is_finite() {
        return Err(FeneError::domain("pressure", format!("rho = {rho} < 0")));
    }
    Ok(p.a * rho.powf(p.gamma))
}

/// `r = sqrt(2 a gamma / (gamma - 1)) rho^((gamma - 1)/2)`.
pub fn density_to_r(rho: f64, p: &ModelParams) -> Result<f64> {
    if rho <= 0.0 || !rho.is_finite() {
        return Err(FeneError::domain("density_to_r", format!("rho = {rho} <= 0")));
    }
    Ok(density_to_r_unchecked(rho, p))
}

/// Inverse of [`density_to_r`].
pub fn r_to_density(r: f64, p: &ModelParams) -> Result<f64> {
    if r <= 0.0 || !r.is_finite() {
        return Err(FeneError::domain("r_to_density", format!("r = {r} <= 0")));
    }
    Ok(r_to_density_unchecked(r, p))
}

/// `D(r) = 1 / rho(r)`.
pub fn d_coefficient(r: f64, p: &ModelParams) -> Result<f64> {
    if r <= 0.0 || !r.is_finite() {
        return Err(FeneError::domain("d_coefficient", format!("r = {r} <= 0")));
    }
    Ok(d_coefficient_unchecked(r, p))
}

pub(crate) fn density_to_r_unchecked(rho: f64, p: &ModelParams) -> f64 {
    p.r_scale() * rho.powf(0.5 * (p.gamma - 1.0))
}

pub(crate) fn r_to_density_unchecked(r: f64, p: &ModelParams) -> f64 {
    (r / p.r_scale()).powf(2.0 / (p.gamma - 1.0))
}

pub(crate) fn d_coefficient_unchecked(r: f64, p: &ModelParams) -> f64 {
    1.0 / r_to_density_unchecked(r, p)
}

/// Newtonian viscous stress `mu_s (grad u + grad u^T - (2/d) div u I) + mu_b div u I`.
///
/// `grad_u[a][b] = d u_a / d x_b`.
pub fn viscous_stress(grad_u: [[f64; 2]; 2], p: &ModelParams) -> [[f64; 2]; 2] {
    let div = grad_u[0][0] + grad_u[1][1];
    let d = p.dim as f64;
    let mut s = [[0.0; 2]; 2];
    for (a, row) in s.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            let iso = if a == b {
                -p.mu_s * (2.0 / d) * div + p.mu_b * div
            } else {
                0.0
            };
            *entry = p.mu_s * (grad_u[a][b] + grad_u[b][a]) + iso;
        }
    }
    s
}

/// Kind of external body force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    #[default]
    Zero,
    SteadyField,
    TimePeriodic,
}

/// A single-mode trigonometric body force.
///
/// For a nonzero wave vector `k` the force is
/// `amplitude * (-k2, k1)/|k| * cos(k . x) * g(t)` with `g = 1` (steady) or
/// `g = cos t` (time periodic); it is divergence free and exactly
/// representable on any grid resolving `k`. For `k = 0` the force is the
/// uniform vector `amplitude * g(t) * (1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    #[serde(default)]
    pub kind: ForcingKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub mode: [i32; 2],
}

impl ForcingSpec {
    pub fn zero() -> Self {
        ForcingSpec::default()
    }

    pub fn is_zero(&self) -> bool {
        self.kind == ForcingKind::Zero || self.amplitude == 0.0
    }

    fn time_factor(&self, t: f64) -> f64 {
        match self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::SteadyField => 1.0,
            ForcingKind::TimePeriodic => t.cos(),
        }
    }

    fn direction(&self) -> [f64; 2] {
        let [k1, k2] = [self.mode[0] as f64, self.mode[1] as f64];
        let norm = (k1 * k1 + k2 * k2).sqrt();
        if norm == 0.0 {
            [1.0, 0.0]
        } else {
            [-k2 / norm, k1 / norm]
        }
    }

    /// Pointwise value `f(t, x)`.
    pub fn eval(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        if self.is_zero() {
            return [0.0, 0.0];
        }
        let phase = self.mode[0] as f64 * x[0] + self.mode[1] as f64 * x[1];
        let amp = self.amplitude * self.time_factor(t) * phase.cos();
        let d = self.direction();
        [amp * d[0], amp * d[1]]
    }
}
