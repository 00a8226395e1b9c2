use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_model, SweepConfig, TAG_INPUT};
use crate::error::{Error, Result};
use crate::kernels::{kernel_grid_l2, spectral_decay_fit, DecayFit, GridNormReport, Kernel};
use crate::random_fields::{derive_seed, measured_decay_exponent, sample_grf, GrfSpec, SpectrumConvention};
use crate::stats::{mean, std_dev};

/// Recovered spectral decay for one smoothness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfCheckRow {
    pub s: f64,
    /// Exponent of `E|û(ξ)|²` implied by the convention.
    pub alpha_target: f64,
    pub mean_alpha: f64,
    pub std_alpha: f64,
    /// Per-sample estimates in seed order.
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfCheck {
    pub seed: u64,
    pub n: usize,
    pub window: (f64, f64),
    pub convention: SpectrumConvention,
    pub rows: Vec<GrfCheckRow>,
}

/// Exponent of the expected squared coefficients under a convention.
pub fn target_exponent(dim: usize, s: f64, convention: SpectrumConvention) -> f64 {
    let alpha = s + dim as f64 / 2.0;
    match convention {
        SpectrumConvention::Literal => alpha,
        SpectrumConvention::SobolevMatched => 2.0 * alpha,
    }
}

/// Samples unnormalized GRFs at `N_full` for each smoothness and fits the
/// decay of the shell spectrum over `[16, N_full/4]`.
pub fn run_grf_check(cfg: &SweepConfig) -> Result<GrfCheck> {
    cfg.validate()?;
    let n = cfg.discretization.n_full;
    let window = (16.0, (n / 4) as f64);
    if window.1 < window.0 + 4.0 {
        return Err(Error::Config(format!("n_full={n} is too small for a decay fit")));
    }
    let rows = cfg
        .discretization
        .smoothness
        .iter()
        .map(|&s| {
            let alphas = (0..cfg.samples)
                .into_par_iter()
                .map(|i| {
                    let spec = GrfSpec {
                        dim: cfg.arch.dim,
                        n,
                        smoothness: s,
                        eps: cfg.grf.eps,
                        seed: derive_seed(cfg.seed, TAG_INPUT, i as u64),
                        channels: 1,
                        convention: cfg.grf.convention,
                        normalize: false,
                    };
                    Ok(measured_decay_exponent(&sample_grf(&spec)?, window.0, window.1)?.alpha)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(GrfCheckRow {
                s,
                alpha_target: target_exponent(cfg.arch.dim, s, cfg.grf.convention),
                mean_alpha: mean(&alphas),
                std_alpha: std_dev(&alphas),
                alphas,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrfCheck { seed: cfg.seed, n, window, convention: cfg.grf.convention, rows })
}

/// Norm bounds and spectral regime of one layer kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheckRow {
    pub layer: usize,
    pub family: String,
    pub sup_bound: f64,
    pub l1_bound: f64,
    pub decay: DecayFit,
    /// Grid `ℓ²` norm against its closed-form bound.
    pub grid_norms: Vec<GridNormReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub rows: Vec<KernelCheckRow>,
}

/// Decay fit over `ξ ∈ [64, 2048]` and grid norms at the sweep's coarse
/// resolutions for every kernel of the configured model.
pub fn run_kernel_check(cfg: &SweepConfig) -> Result<KernelCheck> {
    cfg.validate()?;
    let model = build_model(cfg, None)?;
    let n_full = cfg.discretization.n_full;
    let mut ns: Vec<usize> = cfg.discretization.factors.iter().map(|f| n_full / f).collect();
    ns.sort_unstable();
    ns.dedup();
    let rows = model
        .layers
        .iter()
        .enumerate()
        .map(|(t, l)| {
            let family = match l.kernel {
                Kernel::Ssno(_) => "ssno",
                Kernel::Fno(_) => "fno",
            };
            Ok(KernelCheckRow {
                layer: t,
                family: family.into(),
                sup_bound: l.kernel.sup_bound(),
                l1_bound: l.kernel.l1_bound(),
                decay: spectral_decay_fit(&l.kernel, 64, 2048)?,
                grid_norms: ns.iter().map(|&n| kernel_grid_l2(&l.kernel, n)).collect::<Result<Vec<_>>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelCheck { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn literal_fields_recover_their_exponent() {
        let mut cfg = SweepConfig::new(ExperimentKind::GrfCheck);
        cfg.grf.convention = SpectrumConvention::Literal;
        cfg.discretization.n_full = 1024;
        cfg.discretization.factors = vec![1];
        cfg.discretization.smoothness = vec![2.0];
        cfg.samples = 10;
        let r = run_grf_check(&cfg).unwrap();
        assert!((r.rows[0].mean_alpha - 2.5).abs() < 0.3, "{:?}", r.rows[0]);
    }

    #[test]
    fn kernel_bounds_dominate_grid_norms() {
        let mut cfg = SweepConfig::new(ExperimentKind::KernelCheck);
        cfg.arch.width = 3;
        cfg.arch.depth = 1;
        cfg.discretization.factors = vec![64, 128];
        let r = run_kernel_check(&cfg).unwrap();
        for g in &r.rows[0].grid_norms {
            assert!(g.l2 <= g.bound, "{g:?}");
        }
    }
}
