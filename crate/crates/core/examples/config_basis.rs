use fene::config_space::{build_quadrature, eigen_basis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quad = build_quadrature(4.0, 32, 32)?;
    let basis = eigen_basis(&quad, 60)?;
    for (i, (lam, mode)) in basis.eigenvalues().iter().zip(basis.modes()).enumerate() {
        println!(
            "{i:3}  lambda = {lam:12.6}  m = {}  {:?}  k = {}  residual = {:.1e}",
            mode.angular, mode.parity, mode.radial_index, basis.residuals()[i]
        );
    }
    Ok(())
}
