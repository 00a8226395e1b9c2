//! Perturbation slope and Lipschitz constant as the stack deepens.

use noperr::experiments::{run_depth_sweep, ExperimentKind, Range, SweepConfig};

fn main() -> noperr::Result<()> {
    let mut cfg = SweepConfig::new(ExperimentKind::Depth);
    cfg.samples = 3;
    cfg.stability.n = 512;
    cfg.stability.directions = 3;
    cfg.stability.pairs = 0;
    cfg.stability.depths = vec![1, 2, 4, 8];
    cfg.stability.epsilons = Range { start: 0.0, stop: 0.1, step: 0.025 };
    let sweep = run_depth_sweep(&cfg)?;
    for c in &sweep.curves {
        println!("T = {}: slope {:.4}, max ratio {:.4}, C_N,T {:.4e}", c.depth, c.fit.slope, c.max_response_ratio, c.c_nt);
    }
    Ok(())
}
