//! Relaxation of a polymer perturbation towards the Maxwellian at rest.
//! Each basis mode decays with its own eigenvalue.

use fene::config_space::{build_quadrature, eigen_basis};
use fene::fokker_planck::{fp_energy, fp_step, nonnegativity_report, FpOperator, FpStepConfig, ModeTerm, PolymerField};
use fene::model::ModelParams;
use fene::spectral::{FieldPath, SpectralField, TorusGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::default();
    let basis = eigen_basis(&build_quadrature(p.b, 32, 32)?, 40)?;
    let grid = TorusGrid::new(16)?;
    let op = FpOperator::new(&basis, &p, None)?;
    let cfg = FpStepConfig::new(1e-2, 0.0, None);
    let u = SpectralField::zeros(&grid, 2);
    let mut psi = PolymerField::perturbed_equilibrium(
        &grid,
        &basis,
        &[ModeTerm { basis_index: 1, amplitude: 0.05, wave: [1, 0], sine: false }],
    )?;
    let rate = op.relaxation_rates()[1];
    let a0 = psi.coeffs().component(1).sobolev_norm(0);
    println!("mode 1 rate {rate:.6}");
    println!("{:>6} {:>14} {:>14} {:>12} {:>12}", "t", "mode 1 ratio", "exp(-rate t)", "|psi|^2", "min psi");
    for k in 1..=100 {
        psi = fp_step(&psi, FieldPath::constant(&u), &op, &cfg)?;
        if k % 20 == 0 {
            let ratio = psi.coeffs().component(1).sobolev_norm(0) / a0;
            println!(
                "{:6.2} {ratio:14.8} {:14.8} {:12.6} {:12.4e}",
                psi.time,
                (-rate * psi.time).exp(),
                fp_energy(&psi, 0).l2m,
                nonnegativity_report(&psi).min_psi
            );
        }
    }
    println!("polymer mass {:.12}", psi.polymer_mass());
    Ok(())
}
