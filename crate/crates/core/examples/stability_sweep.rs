//! Perturbation response of a one-layer stack: linear in the amplitude and
//! below the discrete Lipschitz constant.

use noperr::experiments::{run_stability_sweep, ExperimentKind, Range, SweepConfig};

fn main() -> noperr::Result<()> {
    let mut cfg = SweepConfig::new(ExperimentKind::Stability);
    cfg.samples = 5;
    cfg.stability.n = 1024;
    cfg.stability.directions = 5;
    cfg.stability.pairs = 50;
    cfg.stability.depths = vec![1];
    cfg.stability.epsilons = Range { start: 0.0, stop: 0.1, step: 0.02 };
    let c = run_stability_sweep(&cfg)?;
    for p in &c.points {
        println!("eps = {:.2}: mean {:.4e} +- {:.1e}", p.epsilon, p.mean_err, p.std_err);
    }
    println!("fit slope {:.4}, r2 {:.6}", c.fit.slope, c.fit.r2);
    println!("max response ratio {:.4}, empirical Lipschitz {:?}, C_N,T {:.4}", c.max_response_ratio, c.empirical_lipschitz, c.c_nt);
    Ok(())
}
