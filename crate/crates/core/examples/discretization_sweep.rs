//! Discretization error against resolution for three input smoothness
//! levels, with the calibrated bound constant.

use noperr::experiments::{run_discretization_sweep, ExperimentKind, SweepConfig};
use noperr::kernels::ConvMode;

fn main() -> noperr::Result<()> {
    let mut cfg = SweepConfig::new(ExperimentKind::Discretization);
    cfg.samples = 5;
    cfg.conv_mode = ConvMode::AnalyticSpectrumCutoff(16);
    cfg.discretization.n_full = 2048;
    cfg.discretization.factors = vec![4, 8, 16, 32, 64];
    let r = run_discretization_sweep(&cfg)?;
    println!("regime {:?}", r.regime);
    for c in &r.curves {
        let slope = c.fit.as_ref().map_or(f64::NAN, |f| f.slope);
        print!("s = {} ({}), slope {slope:+.3}:", c.s, c.activation);
        for p in &c.points {
            print!("  N={} {:.2e}", p.n, p.mean_rel_err);
        }
        println!();
    }
    println!("calibrated C_d,s = {:.3e}", noperr::experiments::calibrate_cds_curves(&r.curves)?);
    Ok(())
}
