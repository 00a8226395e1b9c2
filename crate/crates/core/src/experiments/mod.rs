//! Seeded experiment drivers producing record streams.
//!
//! Every random draw is keyed by `(seed, tag, index)`, samples run in parallel
//! and are merged in index order, so results do not depend on thread count.

mod checks;
mod config;
mod discretization;
mod iss;
mod nyquist;
mod output;
mod stability;

pub use checks::*;
pub use config::*;
pub use discretization::*;
pub use iss::*;
pub use nyquist::*;
pub use output::*;
pub use stability::*;

use rand_distr::{Distribution, StandardNormal};

use crate::bounds::DecayRegime;
use crate::error::Result;
use crate::grid::{l2_norm, GridField};
use crate::kernels::{ConvMode, Kernel};
use crate::operator::{model_random_init, Activation, OperatorModel};
use crate::random_fields::{derive_seed, keyed_rng, sample_grf, GrfSpec};

pub(crate) const TAG_INPUT: u64 = 101;
pub(crate) const TAG_DIRECTION: u64 = 102;
pub(crate) const TAG_PAIR: u64 = 103;
pub(crate) const TAG_PHASE: u64 = 104;
pub(crate) const TAG_NOISE: u64 = 105;

/// Loads the configured weight file or draws a random model; a given
/// activation replaces the one of every layer.
pub fn build_model(cfg: &SweepConfig, activation: Option<Activation>) -> Result<OperatorModel> {
    let mut model = match &cfg.weights {
        Some(path) => OperatorModel::load(path)?,
        None => model_random_init(&cfg.arch, cfg.model_seed)?,
    };
    if let Some(act) = activation {
        model.arch.activation = act;
        model.layers.iter_mut().for_each(|l| l.activation = act);
    }
    Ok(model)
}

/// Spectral regime the applied kernels fall in: a hard cutoff when the
/// convolution truncates or the kernels are Fourier series, polynomial decay
/// of order one otherwise.
pub fn decay_regime(model: &OperatorModel, mode: ConvMode) -> DecayRegime {
    if let ConvMode::AnalyticSpectrumCutoff(kc) = mode {
        return DecayRegime::Cutoff { k_cutoff: kc };
    }
    let fno_top = model
        .layers
        .iter()
        .map(|l| match &l.kernel {
            Kernel::Fno(k) => Some(k.modes),
            Kernel::Ssno(_) => None,
        })
        .collect::<Option<Vec<usize>>>();
    match fno_top {
        Some(m) if !m.is_empty() => DecayRegime::Cutoff { k_cutoff: m.into_iter().max().unwrap_or(0) + 1 },
        _ => DecayRegime::Polynomial { alpha: 1.0 },
    }
}

/// GRF input number `index` of a run.
pub fn grf_input(cfg: &SweepConfig, n: usize, s: f64, index: u64) -> Result<GridField> {
    let spec = GrfSpec {
        dim: cfg.arch.dim,
        n,
        smoothness: s,
        eps: cfg.grf.eps,
        seed: derive_seed(cfg.seed, TAG_INPUT, index),
        channels: cfg.arch.in_channels,
        convention: cfg.grf.convention,
        normalize: cfg.grf.normalize,
    };
    sample_grf(&spec)
}

/// Gaussian white-noise field with unit grid `ℓ²` norm.
pub fn unit_direction(dim: usize, n: usize, channels: usize, seed: u64) -> Result<GridField> {
    let mut f = GridField::zeros(dim, n, channels)?;
    let mut rng = keyed_rng(seed, 0);
    f.values.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
    let norm = l2_norm(&f);
    Ok(f.scaled(1.0 / norm))
}

/// Slopes of a log-log curve over its first and last decade of `x`.
pub fn decade_slopes(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let (lo, hi) = (x.iter().copied().fold(f64::INFINITY, f64::min), x.iter().copied().fold(0.0, f64::max));
    let pick = |keep: &dyn Fn(f64) -> bool| -> (Vec<f64>, Vec<f64>) {
        x.iter().zip(y).filter(|(a, _)| keep(**a)).map(|(a, b)| (*a, *b)).unzip()
    };
    let (fx, fy) = pick(&|a| a <= 10.0 * lo * (1.0 + 1e-12));
    let (lx, ly) = pick(&|a| a >= hi / 10.0 * (1.0 - 1e-12));
    Ok((crate::stats::loglog_fit(&fx, &fy)?.slope, crate::stats::loglog_fit(&lx, &ly)?.slope))
}
