//! Total error under noisy coarse inputs against the sum of the stability
//! and discretization bounds. At delta = 0 a held-out input may exceed a
//! constant calibrated on few samples.

use noperr::experiments::{run_iss_check, ExperimentKind, SweepConfig};
use noperr::kernels::ConvMode;

fn main() -> noperr::Result<()> {
    let mut cfg = SweepConfig::new(ExperimentKind::Iss);
    cfg.samples = 4;
    cfg.conv_mode = ConvMode::AnalyticSpectrumCutoff(16);
    cfg.discretization.n_full = 2048;
    cfg.iss.n = 128;
    cfg.iss.calibration_samples = 5;
    cfg.iss.deltas = vec![0.0, 1e-3, 1e-2, 1e-1];
    let r = run_iss_check(&cfg)?;
    println!("C_d,s = {:.3e} ({}), C_N,T = {:.3}", r.cds, r.cds_source, r.c_nt);
    for rec in &r.records {
        println!("sample {} delta {:.0e}: error {:.3e}, bound {:.3e}, dominated {}", rec.sample, rec.delta, rec.total_err, rec.bound, rec.dominated);
    }
    println!("all dominated: {}", r.all_dominated);
    Ok(())
}
