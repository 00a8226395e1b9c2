//! Error plateau for single-frequency inputs below the sampling threshold
//! and convergence once the frequency is resolved.

use noperr::experiments::{run_nyquist_stress, ExperimentKind, SweepConfig};

fn main() -> noperr::Result<()> {
    let mut cfg = SweepConfig::new(ExperimentKind::Nyquist);
    cfg.samples = 4;
    cfg.nyquist.n_ref = 2048;
    cfg.nyquist.wavenumbers = vec![4, 32];
    cfg.nyquist.resolutions = vec![16, 32, 64, 128, 256, 512];
    let r = run_nyquist_stress(&cfg)?;
    for c in &r.curves {
        print!("k = {:>2} (threshold L = {}), plateau {}:", c.k, c.nyquist_l, c.plateau);
        for p in &c.points {
            print!("  L={} {:.2e}", p.l, p.mean_rel_err);
        }
        println!();
    }
    Ok(())
}
