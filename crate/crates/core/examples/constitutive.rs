//! Pointwise constitutive laws: pressure, the density variable `r`, the
//! FENE spring and the Maxwellian.

use fene::model::{density_to_r, maxwellian, potential_u, pressure, r_to_density, spring_force, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::default();
    println!("{:>8} {:>12} {:>12} {:>12}", "rho", "p(rho)", "r", "rho(r)");
    for rho in [0.5, 1.0, 2.0, 4.0] {
        let r = density_to_r(rho, &p)?;
        println!("{rho:8.3} {:12.6} {r:12.6} {:12.6}", pressure(rho, &p)?, r_to_density(r, &p)?);
    }
    println!();
    println!("{:>8} {:>12} {:>12} {:>12}", "|q|", "U", "|F(q)|", "M(q)");
    for frac in [0.0, 0.25, 0.5, 0.75, 0.95, 0.99] {
        let q = [frac * p.b.sqrt(), 0.0];
        let f = spring_force(q, &p)?;
        println!(
            "{:8.4} {:12.6} {:12.6} {:12.6e}",
            q[0],
            potential_u(0.5 * q[0] * q[0], &p)?,
            f[0].hypot(f[1]),
            maxwellian(q, &p)?
        );
    }
    match spring_force([p.b.sqrt(), 0.0], &p) {
        Err(e) => println!("\nat the boundary: {e}"),
        Ok(f) => println!("\nunexpected force {f:?}"),
    }
    Ok(())
}
