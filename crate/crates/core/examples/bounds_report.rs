//! Discretization bound for the shipped weight file across resolutions, in
//! the cutoff and polynomial-decay regimes.

use std::path::Path;

use noperr::bounds::discretization_report;
use noperr::experiments::{decay_regime, grf_input, ExperimentKind, SweepConfig};
use noperr::kernels::ConvMode;
use noperr::operator::OperatorModel;

fn main() -> noperr::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/model.json");
    let model = OperatorModel::load(&path)?;
    let cfg = SweepConfig::new(ExperimentKind::Discretization);
    for mode in [ConvMode::AnalyticSpectrumCutoff(8), ConvMode::SampledKernelDft] {
        let regime = decay_regime(&model, mode);
        println!("{mode:?} -> {regime:?}");
        for n in [32, 128, 512] {
            let p = model.prepare(n, mode)?;
            let (_, states) = p.layers(&p.lift(&grf_input(&cfg, n, 2.0, 0)?)?, true)?;
            let r = discretization_report(&model, &states, 2.0, regime, n, 1.0)?;
            println!("  N = {n:>3}: A = {:.3}, B = {:.3e}, beta = {:.2}, bound = {:.3e}", r.a, r.b, r.beta, r.bound_value);
        }
    }
    Ok(())
}
