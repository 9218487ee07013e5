//! Fixed-point iteration of the decoupled fluid and polymer solves, compared
//! with the monolithic coupled trajectory.

use fene::coupling::{xs_distance, FixedPointConfig};
use fene::diagnostics::{initial_state, RunConfig, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::default();
    cfg.scenario.kind = Scenario::ContractionStudy;
    let basis = cfg.build_basis()?;
    let solver = cfg.build_solver(&basis)?;
    let init = initial_state(&cfg, &basis)?;
    for horizon in [0.1, 0.05, 0.025] {
        let fp = FixedPointConfig { horizon_t: horizon, ..FixedPointConfig::default() };
        let rep = solver.fixed_point_iteration(&init, &fp)?;
        let n = (horizon / cfg.time.dt).round() as usize;
        let mono: Vec<_> = solver.monolithic_trajectory(&init, n)?.into_iter().map(|c| c.psi).collect();
        println!("T = {horizon}");
        for (k, d) in rep.distances.iter().enumerate() {
            println!("  iteration {:2}  distance {d:.3e}", k + 1);
        }
        for r in &rep.ratios {
            match r.value() {
                Some(x) => println!("  ratio {x:.3e}"),
                None => println!("  ratio converged"),
            }
        }
        println!("  distance to monolithic {:.3e}", xs_distance(rep.iterates.last().unwrap(), &mono, fp.s_prime)?);
    }
    Ok(())
}
