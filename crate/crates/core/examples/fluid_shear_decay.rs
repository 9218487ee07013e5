//! Viscous decay of a shear wave with no polymer stress. The kinetic energy
//! of `u = A (sin y, 0)` decays like `exp(-2 mu_S t / rho)`.

use fene::fluid::{fluid_energy, step, FluidState, FluidStepConfig};
use fene::model::{density_to_r, ForcingSpec, ModelParams};
use fene::spectral::{FieldPath, SpectralField, TorusGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::default();
    let grid = TorusGrid::new(32)?;
    let amp = 1e-2;
    let r = SpectralField::constant(&grid, &[density_to_r(1.0, &p)?]);
    let u = SpectralField::forward(&grid, 2, &[grid.sample(|x| amp * x[1].sin()), vec![0.0; grid.len()]].concat())?;
    let mut state = FluidState::new(r, u, 0.0)?;
    let cfg = FluidStepConfig::new(1e-3, grid.n());
    let stress = SpectralField::zeros(&grid, 4);
    let forcing = ForcingSpec::zero();

    let e0 = fluid_energy(&state, 0);
    println!("{:>8} {:>14} {:>14}", "t", "|u|^2 ratio", "exp(-2 mu t)");
    for k in 1..=500 {
        state = step(&state, FieldPath::constant(&stress), &forcing, &p, &cfg)?;
        if k % 100 == 0 {
            let ratio = state.u.sobolev_norm_sq(0) / (amp * amp * 2.0 * std::f64::consts::PI.powi(2));
            println!("{:8.3} {ratio:14.8} {:14.8}", state.time, (-2.0 * p.mu_s * state.time).exp());
        }
    }
    println!("energy |(r,u)|^2: {e0:.6} -> {:.6}", fluid_energy(&state, 0));
    println!("mass: {:.12}", state.mass(&p));
    Ok(())
}
