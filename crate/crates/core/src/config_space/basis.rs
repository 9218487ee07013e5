use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::jacobi::jacobi_values_and_derivatives;
use super::quadrature::{maxwellian_normalizer, ConfigQuadrature};
use crate::error::{FeneError, Result};

/// Angular factor of a basis function: `cos(m theta)` or `sin(m theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AngularParity {
    Cos,
    Sin,
}

/// Weak forms of the relaxation operator restricted to one angular mode.
///
/// The trial space for angular index `m` is spanned by
/// `r^m P_k^(b/2, m)(2t - 1)`, `k < n_radial / 2`, times `cos(m theta)` (or
/// `sin`, which gives the same matrices).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlock {
    pub angular: usize,
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

/// Stiffness `a(f, g) = int M grad f . grad g dq` and mass
/// `m(f, g) = int M f g dq`, block diagonal over angular modes.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledOperator {
    pub radial_size: usize,
    pub blocks: Vec<OperatorBlock>,
}

impl AssembledOperator {
    /// Total number of trial functions, counting both parities for `m > 0`.
    pub fn dimension(&self) -> usize {
        self.blocks
            .iter()
            .map(|blk| if blk.angular == 0 { 1 } else { 2 } * self.radial_size)
            .sum()
    }
}

fn radial_size(quad: &ConfigQuadrature) -> usize {
    quad.n_radial() / 2
}

/// Largest angular index for which products of two basis functions times
/// one more factor of `q` stay below the trapezoid exactness limit.
fn max_angular(quad: &ConfigQuadrature) -> usize {
    quad.n_angular() / 2 - 2
}

/// `P_k^(b/2, m)(2t - 1)` and its `t`-derivative for `k < count`.
fn radial_polys(count: usize, b: f64, m: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let (v, d) = jacobi_values_and_derivatives(count - 1, b / 2.0, m as f64, 2.0 * t - 1.0);
    (v, d.into_iter().map(|x| 2.0 * x).collect())
}

/// Assemble the weak forms; see [`AssembledOperator`].
pub fn assemble_operator(quad: &ConfigQuadrature) -> AssembledOperator {
    let b = quad.b();
    let k_count = radial_size(quad);
    let (t_nodes, t_weights) = quad.radial_rule();
    let z = maxwellian_normalizer(b);
    let poly_power = b / 2.0 - quad.jacobi_exponent();
    let mut blocks = Vec::new();
    for m in 0..=max_angular(quad) {
        let mf = m as f64;
        let a_theta = if m == 0 { 2.0 * PI } else { PI };
        let mut stiffness = DMatrix::<f64>::zeros(k_count, k_count);
        let mut mass = DMatrix::<f64>::zeros(k_count, k_count);
        for (&t, &w) in t_nodes.iter().zip(t_weights) {
            let (p, dp) = radial_polys(k_count, b, m, t);
            let base = a_theta * 0.5 * b * w * (1.0 - t).powf(poly_power) / z;
            let mw = base * (b * t).powi(m as i32);
            let radial_part: Vec<f64> = (0..k_count)
                .map(|k| mf * p[k] + 2.0 * t * dp[k])
                .collect();
            let (sw, tang) = if m == 0 {
                (base * 4.0 * t / b, 0.0)
            } else {
                (base * (b * t).powi(m as i32 - 1), mf * mf)
            };
            for k in 0..k_count {
                for l in 0..=k {
                    mass[(k, l)] += mw * p[k] * p[l];
                    let s = if m == 0 {
                        sw * dp[k] * dp[l]
                    } else {
                        sw * (radial_part[k] * radial_part[l] + tang * p[k] * p[l])
                    };
                    stiffness[(k, l)] += s;
                }
            }
        }
        for k in 0..k_count {
            for l in 0..k {
                mass[(l, k)] = mass[(k, l)];
                stiffness[(l, k)] = stiffness[(k, l)];
            }
        }
        blocks.push(OperatorBlock {
            angular: m,
            stiffness,
            mass,
        });
    }
    AssembledOperator {
        radial_size: k_count,
        blocks,
    }
}

/// One generalized eigenpair of a block: eigenvalue, coefficients in the
/// radial Jacobi basis (normalized so `v^T mass v = 1`), and residual.
struct BlockPair {
    lambda: f64,
    coeffs: Vec<f64>,
    residual: f64,
}

fn solve_block(blk: &OperatorBlock) -> Result<Vec<BlockPair>> {
    let n = blk.mass.nrows();
    let scale = DVector::from_iterator(n, (0..n).map(|k| 1.0 / blk.mass[(k, k)].sqrt()));
    let scaled = |mat: &DMatrix<f64>| {
        DMatrix::from_fn(n, n, |i, j| mat[(i, j)] * scale[i] * scale[j])
    };
    let a = scaled(&blk.stiffness);
    let bm = scaled(&blk.mass);
    let chol = bm.clone().cholesky().ok_or_else(|| {
        FeneError::EigenSolver(format!(
            "mass matrix of angular mode {} is not positive definite",
            blk.angular
        ))
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| FeneError::EigenSolver("singular Cholesky factor".into()))?;
    let mut c = &l_inv * &a * l_inv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut pairs = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = eig.eigenvalues[j];
        let y = eig.eigenvectors.column(j).into_owned();
        let mut v = l_inv.transpose() * y;
        let norm = (v.transpose() * &bm * &v)[(0, 0)].sqrt();
        v /= norm;
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v = -v;
        }
        let residual = (&a * &v - (&bm * &v) * lambda).norm();
        if !lambda.is_finite() || !residual.is_finite() {
            return Err(FeneError::EigenSolver(format!(
                "non-finite eigenpair in angular mode {} (residual {residual:e})",
                blk.angular
            )));
        }
        let coeffs = v.iter().zip(scale.iter()).map(|(x, s)| x * s).collect();
        pairs.push(BlockPair {
            lambda,
            coeffs,
            residual,
        });
    }
    pairs.sort_by(|p, q| p.lambda.total_cmp(&q.lambda));
    Ok(pairs)
}

/// Identity of one eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMode {
    pub angular: usize,
    pub parity: AngularParity,
    /// Position within its angular block, ordered by eigenvalue.
    pub radial_index: usize,
    /// Coefficients over `P_k^(b/2, m)(2t - 1)`; the function is
    /// `r^m sum_k coeffs[k] P_k(2t - 1) cos/sin(m theta)`.
    pub radial_coeffs: Vec<f64>,
}

#[derive(Debug)]
struct BasisInner {
    quad: ConfigQuadrature,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    modes: Vec<BasisMode>,
    /// `values[i * n_nodes + node]`.
    values: Vec<f64>,
    gradients: Vec<[f64; 2]>,
    /// `int M phi_i F (x) q dq`, row-major 2x2.
    stress: Vec<[f64; 4]>,
}

/// First `n_basis` eigenfunctions of the relaxation operator, orthonormal in
/// `L^2_M`, tabulated on the quadrature nodes. Cheap to clone.
#[derive(Debug, Clone)]
pub struct ConfigBasis {
    inner: Arc<BasisInner>,
}

impl PartialEq for ConfigBasis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.quad == other.inner.quad
                && self.inner.eigenvalues == other.inner.eigenvalues)
    }
}

/// Generalized eigenpairs of [`assemble_operator`], lowest `n_basis` kept.
///
/// Ties are broken by `(angular, parity, radial_index)` so that the ordering is
/// deterministic. The constant mode comes first with `phi_0 = +1`.
pub fn eigen_basis(quad: &ConfigQuadrature, n_basis: usize) -> Result<ConfigBasis> {
    let op = assemble_operator(quad);
    if n_basis == 0 || n_basis > op.dimension() {
        return Err(FeneError::InvalidParameter(format!(
            "n_basis = {n_basis} must lie in 1..={}",
            op.dimension()
        )));
    }
    let mut candidates: Vec<(f64, BasisMode, f64)> = Vec::new();
    for blk in &op.blocks {
        let pairs = solve_block(blk)?;
        for (k, pair) in pairs.into_iter().enumerate() {
            let parities: &[AngularParity] = if blk.angular == 0 {
                &[AngularParity::Cos]
            } else {
                &[AngularParity::Cos, AngularParity::Sin]
            };
            for &parity in parities {
                candidates.push((
                    pair.lambda,
                    BasisMode {
                        angular: blk.angular,
                        parity,
                        radial_index: k,
                        radial_coeffs: pair.coeffs.clone(),
                    },
                    pair.residual,
                ));
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.angular.cmp(&y.1.angular))
            .then(x.1.parity.cmp(&y.1.parity))
            .then(x.1.radial_index.cmp(&y.1.radial_index))
    });
    candidates.truncate(n_basis);
    // Lowest eigenvalues grow with the angular index, so a kept mode at the
    // cap means higher blocks could also contribute.
    let cap = max_angular(quad);
    if candidates.iter().any(|c| c.1.angular == cap) {
        return Err(FeneError::InvalidParameter(format!(
            "n_angular = {} resolves angular modes up to {cap}, too few for n_basis = {n_basis}",
            quad.n_angular()
        )));
    }

    let worst = candidates.iter().map(|c| c.2).fold(0.0, f64::max);
    if worst > 1e-6 {
        return Err(FeneError::EigenSolver(format!(
            "eigenpair residual {worst:e} exceeds 1e-6"
        )));
    }

    let b = quad.b();
    let n_nodes = quad.len();
    let mut values = vec![0.0; n_basis * n_nodes];
    let mut gradients = vec![[0.0; 2]; n_basis * n_nodes];
    for (i, (_, mode, _)) in candidates.iter().enumerate() {
        for (n, node) in quad.nodes().iter().enumerate() {
            let (v, g) = eval_mode(mode, b, node.radius, node.angle);
            values[i * n_nodes + n] = v;
            gradients[i * n_nodes + n] = g;
        }
    }
    let mut stress = vec![[0.0; 4]; n_basis];
    for (i, s) in stress.iter_mut().enumerate() {
        for (n, node) in quad.nodes().iter().enumerate() {
            let w = quad.weights()[n] * quad.maxwellian()[n] * values[i * n_nodes + n];
            let f = b / (b - node.radius * node.radius);
            let q = node.q;
            s[0] += w * f * q[0] * q[0];
            s[1] += w * f * q[0] * q[1];
            s[2] += w * f * q[1] * q[0];
            s[3] += w * f * q[1] * q[1];
        }
    }
    Ok(ConfigBasis {
        inner: Arc::new(BasisInner {
            quad: quad.clone(),
            eigenvalues: candidates.iter().map(|c| c.0).collect(),
            residuals: candidates.iter().map(|c| c.2).collect(),
            modes: candidates.into_iter().map(|c| c.1).collect(),
            values,
            gradients,
            stress,
        }),
    })
}

/// Value and Cartesian gradient of one eigenfunction at polar `(radius, angle)`.
fn eval_mode(mode: &BasisMode, b: f64, radius: f64, angle: f64) -> (f64, [f64; 2]) {
    let m = mode.angular;
    let mf = m as f64;
    let t = radius * radius / b;
    let (p, dp) = radial_polys(mode.radial_coeffs.len(), b, m, t);
    let mut poly = 0.0;
    let mut dpoly = 0.0;
    for (k, c) in mode.radial_coeffs.iter().enumerate() {
        poly += c * p[k];
        dpoly += c * dp[k];
    }
    let (theta, dtheta) = match mode.parity {
        AngularParity::Cos => ((mf * angle).cos(), -mf * (mf * angle).sin()),
        AngularParity::Sin => ((mf * angle).sin(), mf * (mf * angle).cos()),
    };
    let (radial, d_radial, tangential) = if m == 0 {
        (poly, 2.0 * radius * dpoly / b, 0.0)
    } else {
        let rm1 = radius.powi(m as i32 - 1);
        (
            rm1 * radius * poly,
            rm1 * (mf * poly + 2.0 * t * dpoly),
            rm1 * poly * dtheta,
        )
    };
    let value = radial * theta;
    let dr = d_radial * theta;
    let (c, s) = (angle.cos(), angle.sin());
    (value, [dr * c - tangential * s, dr * s + tangential * c])
}

impl ConfigBasis {
    pub fn quad(&self) -> &ConfigQuadrature {
        &self.inner.quad
    }

    pub fn n_basis(&self) -> usize {
        self.inner.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.inner.eigenvalues
    }

    /// `|a v - lambda m v|` per pair, in diagonally scaled coordinates.
    pub fn residuals(&self) -> &[f64] {
        &self.inner.residuals
    }

    pub fn modes(&self) -> &[BasisMode] {
        &self.inner.modes
    }

    /// Values of `phi_i` at the quadrature nodes.
    pub fn values(&self, i: usize) -> &[f64] {
        let n = self.inner.quad.len();
        &self.inner.values[i * n..(i + 1) * n]
    }

    /// `grad_q phi_i` at the quadrature nodes.
    pub fn gradients(&self, i: usize) -> &[[f64; 2]] {
        let n = self.inner.quad.len();
        &self.inner.gradients[i * n..(i + 1) * n]
    }

    /// Kramers stress of `M phi_i`, row-major.
    pub fn stress_tensor(&self, i: usize) -> [f64; 4] {
        self.inner.stress[i]
    }

    /// `phi_i(q)` at an arbitrary point of the ball.
    pub fn eval(&self, i: usize, q: [f64; 2]) -> f64 {
        let (r, a) = polar(q);
        eval_mode(&self.inner.modes[i], self.inner.quad.b(), r, a).0
    }

    /// `grad_q phi_i(q)` at an arbitrary point of the ball.
    pub fn eval_gradient(&self, i: usize, q: [f64; 2]) -> [f64; 2] {
        let (r, a) = polar(q);
        eval_mode(&self.inner.modes[i], self.inner.quad.b(), r, a).1
    }

    /// `sum_i coeffs[i] phi_i(q)`.
    pub fn eval_sum(&self, coeffs: &[f64], q: [f64; 2]) -> f64 {
        let (r, a) = polar(q);
        let b = self.inner.quad.b();
        self.inner
            .modes
            .iter()
            .zip(coeffs)
            .map(|(mode, c)| c * eval_mode(mode, b, r, a).0)
            .sum()
    }

    /// `int M phi_i phi_j dq` on the node rule.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let quad = &self.inner.quad;
        let nb = self.n_basis();
        DMatrix::from_fn(nb, nb, |i, j| {
            let (vi, vj) = (self.values(i), self.values(j));
            (0..quad.len())
                .map(|n| quad.weights()[n] * quad.maxwellian()[n] * vi[n] * vj[n])
                .sum()
        })
    }

    /// `int M grad phi_i . grad phi_j dq` on the node rule.
    pub fn stiffness_matrix(&self) -> DMatrix<f64> {
        let quad = &self.inner.quad;
        let nb = self.n_basis();
        DMatrix::from_fn(nb, nb, |i, j| {
            let (gi, gj) = (self.gradients(i), self.gradients(j));
            (0..quad.len())
                .map(|n| {
                    quad.weights()[n]
                        * quad.maxwellian()[n]
                        * (gi[n][0] * gj[n][0] + gi[n][1] * gj[n][1])
                })
                .sum()
        })
    }

    /// `int M phi_i dq` for every basis function.
    pub fn moments(&self) -> Vec<f64> {
        let quad = &self.inner.quad;
        (0..self.n_basis())
            .map(|i| {
                self.values(i)
                    .iter()
                    .zip(quad.weights())
                    .zip(quad.maxwellian())
                    .map(|((v, w), m)| v * w * m)
                    .sum()
            })
            .collect()
    }
}

fn polar(q: [f64; 2]) -> (f64, f64) {
    ((q[0] * q[0] + q[1] * q[1]).sqrt(), q[1].atan2(q[0]))
}

/// Coefficients of `phi = psi / M` at one spatial point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfDistribution {
    coeffs: Vec<f64>,
}

impl ConfDistribution {
    pub fn new(basis: &ConfigBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.n_basis() {
            return Err(FeneError::SizeMismatch {
                expected: basis.n_basis(),
                got: coeffs.len(),
            });
        }
        Ok(ConfDistribution { coeffs })
    }

    /// `psi = M`.
    pub fn equilibrium(basis: &ConfigBasis) -> Self {
        let mut coeffs = vec![0.0; basis.n_basis()];
        coeffs[0] = 1.0;
        ConfDistribution { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scaled(&self, c: f64) -> Self {
        ConfDistribution {
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// Values of `phi` at the quadrature nodes.
    pub fn node_values(&self, basis: &ConfigBasis) -> Vec<f64> {
        let mut out = vec![0.0; basis.quad().len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(basis.values(i)) {
                *o += c * v;
            }
        }
        out
    }

    /// `grad_q phi` at the quadrature nodes.
    pub fn node_gradients(&self, basis: &ConfigBasis) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; basis.quad().len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            for (o, g) in out.iter_mut().zip(basis.gradients(i)) {
                o[0] += c * g[0];
                o[1] += c * g[1];
            }
        }
        out
    }
}

/// `(int M phi^2 dq)^(1/2)` from basis coefficients.
pub fn l2m_norm(phi: &ConfDistribution) -> f64 {
    phi.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `(int M phi^2 dq)^(1/2)` from node values of `phi`.
pub fn l2m_norm_nodes(quad: &ConfigQuadrature, phi: &[f64]) -> Result<f64> {
    let sq: Vec<f64> = phi
        .iter()
        .zip(quad.maxwellian())
        .map(|(v, m)| m * v * v)
        .collect();
    Ok(quad.integrate(&sq)?.sqrt())
}

/// `(int M |grad phi|^2 dq)^(1/2)` from basis coefficients, using the
/// diagonal stiffness `a(phi_i, phi_j) = lambda_i delta_ij`.
pub fn h1m_seminorm(phi: &ConfDistribution, basis: &ConfigBasis) -> f64 {
    phi.coeffs
        .iter()
        .zip(basis.eigenvalues())
        .map(|(c, l)| l.max(0.0) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// `(int M |grad phi|^2 dq)^(1/2)` from node values of `grad phi`.
pub fn h1m_seminorm_nodes(quad: &ConfigQuadrature, grad_phi: &[[f64; 2]]) -> Result<f64> {
    let sq: Vec<f64> = grad_phi
        .iter()
        .zip(quad.maxwellian())
        .map(|(g, m)| m * (g[0] * g[0] + g[1] * g[1]))
        .collect();
    Ok(quad.integrate(&sq)?.sqrt())
}

/// `L^2_M`-orthogonal projection of node values of `phi` onto the basis span.
pub fn project_pi_qn(phi: &[f64], basis: &ConfigBasis) -> Result<ConfDistribution> {
    let quad = basis.quad();
    if phi.len() != quad.len() {
        return Err(FeneError::SizeMismatch {
            expected: quad.len(),
            got: phi.len(),
        });
    }
    let weighted: Vec<f64> = phi
        .iter()
        .zip(quad.weights())
        .zip(quad.maxwellian())
        .map(|((v, w), m)| v * w * m)
        .collect();
    let coeffs = (0..basis.n_basis())
        .map(|i| {
            basis
                .values(i)
                .iter()
                .zip(&weighted)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    Ok(ConfDistribution { coeffs })
}

/// `int psi F(q) (x) q dq` for `psi = M phi`, from node values of `phi`.
pub fn kramers_stress(phi: &[f64], quad: &ConfigQuadrature) -> Result<[[f64; 2]; 2]> {
    if phi.len() != quad.len() {
        return Err(FeneError::SizeMismatch {
            expected: quad.len(),
            got: phi.len(),
        });
    }
    let b = quad.b();
    let mut t = [[0.0; 2]; 2];
    for (n, node) in quad.nodes().iter().enumerate() {
        let w = quad.weights()[n] * quad.maxwellian()[n] * phi[n] * b
            / (b - node.radius * node.radius);
        for (a, row) in t.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry += w * node.q[a] * node.q[c];
            }
        }
    }
    Ok(t)
}

/// Kramers stress from basis coefficients, `sum_i c_i T(M phi_i)`.
pub fn kramers_stress_coeffs(phi: &ConfDistribution, basis: &ConfigBasis) -> [[f64; 2]; 2] {
    let mut t = [0.0; 4];
    for (i, c) in phi.coeffs.iter().enumerate() {
        let s = basis.stress_tensor(i);
        for k in 0..4 {
            t[k] += c * s[k];
        }
    }
    [[t[0], t[1]], [t[2], t[3]]]
}

/// The three quantities of the weighted Hardy-type inequality
/// `lhs <= delta * |phi|_{H^1_M}^2 + c_delta * |phi|_{L^2_M}^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaA1Terms {
    /// `(int |psi| / (1 - |q| / sqrt(b)) dq)^2`.
    pub lhs: f64,
    /// `delta * int M |grad phi|^2 dq`.
    pub h1_term: f64,
    /// `int M phi^2 dq`.
    pub l2_term: f64,
}

impl LemmaA1Terms {
    /// Smallest `c_delta` for which this sample satisfies the inequality.
    pub fn required_constant(&self) -> f64 {
        (self.lhs - self.h1_term) / self.l2_term
    }
}

/// Evaluate [`LemmaA1Terms`] for `psi = M phi` with the radius-normalized
/// boundary distance `1 - |q| / sqrt(b)`.
pub fn lemma_a1_check(
    phi: &ConfDistribution,
    basis: &ConfigBasis,
    delta: f64,
) -> Result<LemmaA1Terms> {
    if !(delta > 0.0) {
        return Err(FeneError::InvalidParameter(format!(
            "delta = {delta} must be positive"
        )));
    }
    let quad = basis.quad();
    let root_b = quad.b().sqrt();
    let values = phi.node_values(basis);
    let integrand: Vec<f64> = values
        .iter()
        .zip(quad.maxwellian())
        .zip(quad.nodes())
        .map(|((v, m), node)| m * v.abs() / (1.0 - node.radius / root_b))
        .collect();
    let integral = quad.integrate(&integrand)?;
    let h1 = h1m_seminorm(phi, basis);
    let l2 = l2m_norm(phi);
    Ok(LemmaA1Terms {
        lhs: integral * integral,
        h1_term: delta * h1 * h1,
        l2_term: l2 * l2,
    })
}
