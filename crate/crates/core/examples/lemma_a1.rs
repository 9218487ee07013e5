//! Boundary trace inequality on the configuration ball: the smallest constant
//! for each `delta` over a random ensemble of basis expansions.

use fene::config_space::{build_quadrature, eigen_basis};
use fene::diagnostics::lemma_a1_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = eigen_basis(&build_quadrature(4.0, 32, 32)?, 40)?;
    let rep = lemma_a1_experiment(&basis, 200, &[1.0, 0.1, 0.01], 5)?;
    for (d, c) in rep.deltas.iter().zip(&rep.constants) {
        println!("delta {d:6}  required C_delta {c:.6}");
    }
    println!("finite {}  monotone {}", rep.is_finite(), rep.is_monotone());
    Ok(())
}
