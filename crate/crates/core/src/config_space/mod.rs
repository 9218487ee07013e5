//! Configuration space: the ball `B(0, sqrt(b))` of spring vectors.
//!
//! Quadrature, Maxwellian-weighted norms, the eigenbasis of the relaxation
//! operator `L psi = -div_q(M grad_q(psi / M))`, the boundary cut-off, and the
//! Kramers stress integral.

mod basis;
mod jacobi;
mod quadrature;

pub use basis::{
    assemble_operator, eigen_basis, h1m_seminorm, h1m_seminorm_nodes, kramers_stress,
    kramers_stress_coeffs, l2m_norm, l2m_norm_nodes, lemma_a1_check, project_pi_qn,
    AngularParity, AssembledOperator, BasisMode, ConfDistribution, ConfigBasis, LemmaA1Terms,
    OperatorBlock,
};
pub use jacobi::{gauss_jacobi_unit, jacobi_values, jacobi_values_and_derivatives};
pub use quadrature::{build_quadrature, chi_cutoff, ConfigNode, ConfigQuadrature};
pub(crate) use quadrature::{chi_of_radius, cubic_step_down};

