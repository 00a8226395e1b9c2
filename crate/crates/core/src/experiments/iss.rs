use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discretization::BoundPlan;
use super::{build_model, calibrate_cds_curves, decay_regime, grf_input, run_discretization_sweep, unit_direction};
use super::{SweepConfig, TAG_NOISE};
use crate::bounds::{discrete_stack_lipschitz, iss_total_bound};
use crate::error::{Error, Result};
use crate::grid::l2_norm;
use crate::random_fields::derive_seed;

const TAG_CALIBRATION: u64 = 106;

/// Persisted `C_{d,s}` calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cds: f64,
    pub seed: u64,
    /// Number of `(measured, bound)` points used.
    pub points: usize,
}

impl Calibration {
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// One input at one noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssRecord {
    pub sample: usize,
    pub delta: f64,
    /// `‖Ψ_N(v + δξ) - Ψ_ref(v)|_{T_N}‖`.
    pub total_err: f64,
    /// `C_{N,T} δ + C_{d,s} · discretization bound`.
    pub bound: f64,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssReport {
    pub seed: u64,
    pub n: usize,
    pub n_full: usize,
    pub cds: f64,
    /// `"config"`, `"file"` or `"calibrated"`.
    pub cds_source: String,
    pub c_nt: f64,
    pub records: Vec<IssRecord>,
    pub all_dominated: bool,
}

/// Calibrates `C_{d,s}` at grid `n` on inputs disjoint from the run's own.
pub fn calibrate_for_iss(cfg: &SweepConfig) -> Result<Calibration> {
    let mut cal = cfg.clone();
    cal.seed = derive_seed(cfg.seed, TAG_CALIBRATION, 0);
    cal.samples = cfg.iss.calibration_samples.max(1);
    cal.discretization.factors = vec![cfg.discretization.n_full / cfg.iss.n];
    cal.discretization.smoothness = vec![cfg.iss.smoothness];
    cal.discretization.activations = Vec::new();
    let r = run_discretization_sweep(&cal)?;
    let points = r.curves.iter().map(|c| c.samples.len()).sum();
    Ok(Calibration { cds: calibrate_cds_curves(&r.curves)?, seed: cal.seed, points })
}

/// Total error of the perturbed coarse stack against the clean reference,
/// checked against `C_{N,T} δ + C_{d,s} N^β B (A^T - 1)/(A - 1)`.
pub fn run_iss_check(cfg: &SweepConfig) -> Result<IssReport> {
    cfg.validate()?;
    let (n, n_full) = (cfg.iss.n, cfg.discretization.n_full);
    if n == 0 || n > n_full || n_full % n != 0 || !n.is_power_of_two() {
        return Err(Error::Config(format!("iss.n={n} must be a power of two dividing n_full={n_full}")));
    }
    let (cds, cds_source) = match (cfg.iss.cds, &cfg.iss.cds_file) {
        (Some(c), _) => (c, "config"),
        (None, Some(path)) => (Calibration::load(path)?.cds, "file"),
        (None, None) => (calibrate_for_iss(cfg)?.cds, "calibrated"),
    };
    let model = build_model(cfg, None)?;
    let regime = decay_regime(&model, cfg.conv_mode);
    let plan = BoundPlan::new(&model, cfg.iss.smoothness, regime);
    let c_nt = discrete_stack_lipschitz(&model, n, cfg.conv_mode)?.constant;
    let reference = model.prepare(n_full, cfg.conv_mode)?;
    let coarse = model.prepare(n, cfg.conv_mode)?;
    let stride = n_full / n;
    let per_sample = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let v0 = reference.lift(&grf_input(cfg, n_full, cfg.iss.smoothness, i as u64)?)?;
            let (vt, states) = reference.layers(&v0, true)?;
            let target = vt.subsample(stride)?;
            let disc = cds * plan.unit_bound(plan.b(&states), n);
            let v0c = v0.subsample(stride)?;
            let xi = unit_direction(v0c.dim, n, v0c.channels, derive_seed(cfg.seed, TAG_NOISE, i as u64))?;
            cfg.iss
                .deltas
                .iter()
                .map(|&delta| {
                    let (out, _) = coarse.layers(&v0c.add_scaled(&xi, delta)?, false)?;
                    let total_err = l2_norm(&out.sub(&target)?);
                    let bound = iss_total_bound(c_nt, delta, disc);
                    Ok(IssRecord { sample: i, delta, total_err, bound, dominated: total_err <= bound })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<IssRecord> = per_sample.into_iter().flatten().collect();
    let all_dominated = records.iter().all(|r| r.dominated);
    Ok(IssReport { seed: cfg.seed, n, n_full, cds, cds_source: cds_source.into(), c_nt, records, all_dominated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;
    use crate::kernels::{ConvMode, SsnoForm};
    use crate::operator::KernelSpec;

    fn small() -> SweepConfig {
        let mut c = SweepConfig::new(ExperimentKind::Iss);
        c.arch.width = 4;
        c.arch.depth = 2;
        c.arch.kernel = KernelSpec::Ssno { modes: 4, form: SsnoForm::Sum };
        c.conv_mode = ConvMode::AnalyticSpectrumCutoff(4);
        c.samples = 3;
        c.discretization.n_full = 256;
        c.iss.n = 32;
        c.discretization.factors = vec![8];
        c.iss.calibration_samples = 4;
        c
    }

    #[test]
    fn bound_grows_with_noise_and_zero_noise_matches_sweep() {
        let cfg = small();
        let r = run_iss_check(&cfg).unwrap();
        assert_eq!(r.cds_source, "calibrated");
        for s in 0..3 {
            let b: Vec<f64> = r.records.iter().filter(|x| x.sample == s).map(|x| x.bound).collect();
            assert!(b.windows(2).all(|w| w[1] > w[0]));
        }
        let mut sweep = cfg.clone();
        sweep.discretization.factors = vec![8];
        sweep.discretization.smoothness = vec![2.0];
        let d = run_discretization_sweep(&sweep).unwrap();
        for (rec, s) in r.records.iter().filter(|x| x.delta == 0.0).zip(&d.curves[0].samples) {
            assert!((rec.total_err - s.grid_err).abs() <= 1e-12 * s.grid_err.max(1e-300));
        }
    }
}
