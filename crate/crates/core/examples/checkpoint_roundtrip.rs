//! Save a coupled state mid-run, reload it and continue; the resumed state
//! matches the uninterrupted one bit for bit.

use fene::diagnostics::{checkpoint_load, checkpoint_save, RunConfig, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::default();
    cfg.grid.n = 16;
    cfg.config_space.n_basis = 12;
    let basis = cfg.build_basis()?;
    let dir = std::env::temp_dir().join("fene-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("mid.fkp");

    let mut a = Simulation::new(&cfg, &basis)?;
    for _ in 0..10 {
        a.advance()?;
    }
    checkpoint_save(&a.checkpoint(), &path)?;
    println!("saved step {} ({} bytes)", a.step(), std::fs::metadata(&path)?.len());
    for _ in 0..10 {
        a.advance()?;
    }

    let ck = checkpoint_load(&path, &basis)?;
    let mut b = Simulation::from_checkpoint(&cfg, &basis, ck)?;
    for _ in 0..10 {
        b.advance()?;
    }
    println!("uninterrupted step {}, resumed step {}", a.step(), b.step());
    println!("states identical: {}", a.state() == b.state());
    Ok(())
}
