use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_model, decade_slopes, SweepConfig, TAG_PHASE};
use crate::error::{Error, Result};
use crate::grid::{l2_norm, refine, GridField};
use crate::random_fields::{derive_seed, keyed_rng};
use crate::stats::{loglog_fit, mean, std_dev, LinearFit};

/// First-decade slope above which a curve counts as a plateau.
pub const PLATEAU_SLOPE: f64 = -0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NyquistPoint {
    pub l: usize,
    pub mean_rel_err: f64,
    pub std_rel_err: f64,
    pub n_samples: usize,
}

/// Relative error against coarse resolution `L` for inputs of wavenumber `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NyquistCurve {
    pub k: usize,
    /// Rough resolution threshold `L = 2k`.
    pub nyquist_l: usize,
    pub points: Vec<NyquistPoint>,
    /// Log-log fit over `L > 2k`, when at least three such points exist.
    pub resolved_fit: Option<LinearFit>,
    pub first_decade_slope: f64,
    pub plateau: bool,
}

impl NyquistCurve {
    /// Log-log fit over the points with `L ≥ l_min`.
    pub fn fit_from(&self, l_min: usize) -> Result<LinearFit> {
        let (x, y): (Vec<f64>, Vec<f64>) =
            self.points.iter().filter(|p| p.l >= l_min).map(|p| (p.l as f64, p.mean_rel_err)).unzip();
        loglog_fit(&x, &y)
    }

    pub fn error_at(&self, l: usize) -> Option<f64> {
        self.points.iter().find(|p| p.l == l).map(|p| p.mean_rel_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NyquistResult {
    pub seed: u64,
    pub n_ref: usize,
    pub curves: Vec<NyquistCurve>,
}

/// `sin(2πk x_0 + φ)` on every channel.
pub fn sinusoid(dim: usize, n: usize, channels: usize, k: usize, phase: f64) -> Result<GridField> {
    GridField::from_fn(dim, n, channels, |x, _| (2.0 * PI * k as f64 * x[0] + phase).sin())
}

/// Plateau classifier: first-decade log-log slope above [`PLATEAU_SLOPE`].
pub fn classify_plateau(points: &[NyquistPoint]) -> Result<(f64, bool)> {
    let x: Vec<f64> = points.iter().map(|p| p.l as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.mean_rel_err).collect();
    let (first, _) = decade_slopes(&x, &y)?;
    Ok((first, first > PLATEAU_SLOPE))
}

/// Random-phase sinusoids of increasing wavenumber through the fixed stack,
/// coarse evaluations compared with the reference at `n_ref`.
pub fn run_nyquist_stress(cfg: &SweepConfig) -> Result<NyquistResult> {
    cfg.validate()?;
    let opts = &cfg.nyquist;
    let model = build_model(cfg, None)?;
    let (dim, ch) = (model.dim(), model.arch.in_channels);
    if let Some(&k) = opts.wavenumbers.iter().find(|&&k| 2 * k >= opts.n_ref) {
        return Err(Error::Config(format!("wavenumber {k} is not resolved on the reference grid {}", opts.n_ref)));
    }
    let mut ls = opts.resolutions.clone();
    ls.sort_unstable();
    ls.dedup();
    let reference = model.prepare(opts.n_ref, cfg.conv_mode)?;
    let coarse = ls.iter().map(|&l| model.prepare(l, cfg.conv_mode)).collect::<Result<Vec<_>>>()?;
    let mut curves = Vec::with_capacity(opts.wavenumbers.len());
    for &k in &opts.wavenumbers {
        let per_sample = (0..cfg.samples)
            .into_par_iter()
            .map(|i| {
                let phase = keyed_rng(derive_seed(cfg.seed, TAG_PHASE, k as u64), i as u64).gen_range(0.0..2.0 * PI);
                let v0 = reference.lift(&sinusoid(dim, opts.n_ref, ch, k, phase)?)?;
                let (vt, _) = reference.layers(&v0, false)?;
                let norm = l2_norm(&vt);
                coarse
                    .iter()
                    .map(|p| {
                        let (vc, _) = p.layers(&v0.subsample(opts.n_ref / p.n)?, false)?;
                        Ok(l2_norm(&refine(&vc, opts.n_ref, cfg.interpolation)?.sub(&vt)?) / norm)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let points: Vec<NyquistPoint> = ls
            .iter()
            .enumerate()
            .map(|(j, &l)| {
                let e: Vec<f64> = per_sample.iter().map(|s| s[j]).collect();
                NyquistPoint { l, mean_rel_err: mean(&e), std_rel_err: std_dev(&e), n_samples: e.len() }
            })
            .collect();
        let (first_decade_slope, plateau) = classify_plateau(&points)?;
        let mut curve = NyquistCurve { k, nyquist_l: 2 * k, points, resolved_fit: None, first_decade_slope, plateau };
        if curve.points.iter().filter(|p| p.l > 2 * k).count() >= 3 {
            curve.resolved_fit = curve.fit_from(2 * k + 1).ok();
        }
        curves.push(curve);
    }
    Ok(NyquistResult { seed: cfg.seed, n_ref: opts.n_ref, curves })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(errs: &[f64]) -> Vec<NyquistPoint> {
        errs.iter()
            .enumerate()
            .map(|(j, &e)| NyquistPoint { l: 16 << j, mean_rel_err: e, std_rel_err: 0.0, n_samples: 1 })
            .collect()
    }

    #[test]
    fn classifier_separates_flat_and_decaying_curves() {
        let flat = pts(&[0.9, 0.85, 0.9, 0.88, 0.5, 0.1, 0.01]);
        assert!(classify_plateau(&flat).unwrap().1);
        let decay: Vec<f64> = (0..7).map(|j| 2f64.powi(-2 * j)).collect();
        let (slope, plateau) = classify_plateau(&pts(&decay)).unwrap();
        assert!(!plateau);
        assert!((slope + 2.0).abs() < 1e-12);
    }
}
