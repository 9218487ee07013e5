//! Linear response of each subsystem to a perturbation of its input:
//! stress to fluid state and velocity to polymer state.

use fene::diagnostics::{initial_state, stress_difference, velocity_difference, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let basis = cfg.build_basis()?;
    let solver = cfg.build_solver(&basis)?;
    let init = initial_state(&cfg, &basis)?;
    let deltas = [1e-4, 1e-3, 1e-2];
    for rep in [
        stress_difference(&solver, &init, 0.05, &deltas, 1)?,
        velocity_difference(&solver, &init, 0.05, &deltas, 1)?,
    ] {
        println!("{}", rep.kind);
        for (d, dist) in rep.deltas.iter().zip(&rep.distances) {
            println!("  delta {d:.0e}  distance {dist:.6e}  ratio {:.6e}", dist / d);
        }
        println!("  log-log slope {:.8}", rep.slope);
    }
    Ok(())
}
