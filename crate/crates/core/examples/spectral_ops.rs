//! Spectral calculus on the torus: derivatives, dealiased products and
//! Sobolev norms of a trigonometric test field.

use fene::spectral::{sup_norm_w2inf, SpectralField, TorusGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = TorusGrid::new(32)?;
    let f = SpectralField::forward(&grid, 1, &grid.sample(|x| x[0].sin() * (2.0 * x[1]).cos()))?;

    let lap = f.laplacian();
    let expected = SpectralField::forward(&grid, 1, &grid.sample(|x| -5.0 * x[0].sin() * (2.0 * x[1]).cos()))?;
    println!("laplacian error        {:.2e}", lap.max_abs_diff(&expected)?);

    let div_grad = f.gradient()?.divergence()?;
    println!("div grad - laplacian   {:.2e}", div_grad.max_abs_diff(&lap)?);

    let sq = f.dealiased_product(&f)?;
    let exact = SpectralField::forward(&grid, 1, &grid.sample(|x| (x[0].sin() * (2.0 * x[1]).cos()).powi(2)))?;
    println!("product error          {:.2e}", sq.max_abs_diff(&exact)?);
    println!("mean of f^2            {:.6} (exact 0.25)", sq.mean(0));

    for s in 0..4 {
        println!("|f|_H^{s}               {:.6}", f.sobolev_norm(s));
    }
    let u = SpectralField::stack(&[&f, &f.scaled(0.5)])?;
    println!("|u|_W^(2,inf)          {:.6}", sup_norm_w2inf(&u));
    Ok(())
}
