//! Gaussian random fields with power-law spectra on the torus.
//!
//! Coefficients are drawn from a counter-based generator keyed by the seed,
//! the frequency and the channel, so a sample is independent of thread count
//! and of the order in which frequencies are visited. The mean mode is zero
//! and `û(-ξ) = conj(û(ξ))`, so samples are real.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_grid, dft_forward, dft_inverse_real_part, normalized_l2_norm, Frequency, GridField, SpectralField};
use crate::stats::{loglog_fit, LinearFit};

/// How the spectral exponent `α = s + d/2` enters the coefficient variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumConvention {
    /// `E|û(ξ)|² ∝ (‖ξ‖² + ε)^{-α/2}`: the squared coefficients decay like `‖ξ‖^{-α}`.
    #[default]
    Literal,
    /// `E|û(ξ)|² ∝ (‖ξ‖² + ε)^{-α}`: samples lie in `H^t` for every `t < s`.
    SobolevMatched,
}

/// Parameters of a Gaussian random field sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub dim: usize,
    pub n: usize,
    /// Target smoothness `s > 0`.
    pub smoothness: f64,
    /// Regularization `ε > 0` inside the spectral weight.
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub channels: usize,
    #[serde(default)]
    pub convention: SpectrumConvention,
    /// Rescale the sample to unit normalized `L²` norm.
    #[serde(default)]
    pub normalize: bool,
}

fn default_eps() -> f64 {
    1e-2
}

fn one() -> usize {
    1
}

impl GrfSpec {
    pub fn new(dim: usize, n: usize, smoothness: f64, seed: u64) -> Self {
        GrfSpec {
            dim,
            n,
            smoothness,
            eps: default_eps(),
            seed,
            channels: 1,
            convention: SpectrumConvention::Literal,
            normalize: false,
        }
    }

    /// Exponent `α = s + d/2`.
    pub fn alpha(&self) -> f64 {
        self.smoothness + self.dim as f64 / 2.0
    }

    /// Expected `|û(ξ)|²` before any normalization.
    pub fn variance(&self, xi: Frequency) -> f64 {
        if xi.0 == [0, 0] {
            return 0.0;
        }
        let base = xi.norm_sq() + self.eps;
        match self.convention {
            SpectrumConvention::Literal => base.powf(-self.alpha() / 2.0),
            SpectrumConvention::SobolevMatched => base.powf(-self.alpha()),
        }
    }

    fn validate(&self) -> Result<()> {
        check_grid(self.dim, self.n)?;
        if !(self.smoothness > 0.0 && self.smoothness.is_finite()) {
            return Err(Error::Domain(format!("smoothness must be positive, got {}", self.smoothness)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!("eps must be positive, got {}", self.eps)));
        }
        if self.channels == 0 {
            return Err(Error::Domain("channels must be positive".into()));
        }
        Ok(())
    }
}

/// splitmix64 finalizer; mixes a seed with a tag and index into a new seed.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator positioned at stream `key` of `seed`; draws depend only on both.
pub fn keyed_rng(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Draws one real sample of the field described by `spec`.
pub fn sample_grf(spec: &GrfSpec) -> Result<GridField> {
    spec.validate()?;
    let (dim, n, h) = (spec.dim, spec.n, spec.channels);
    let mut u = SpectralField::zeros(dim, n, h)?;
    for k in 0..u.modes() {
        let xi = Frequency::from_flat(k, dim, n);
        let km = xi.neg().to_flat(dim, n);
        if km < k {
            continue;
        }
        let var = spec.variance(xi);
        if var == 0.0 {
            continue;
        }
        for c in 0..h {
            let mut rng = keyed_rng(spec.seed, (k * h + c) as u64);
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let z = if km == k {
                // Self-conjugate frequency: the coefficient must be real.
                Complex64::new(a * var.sqrt(), 0.0)
            } else {
                Complex64::new(a, b) * (var / 2.0).sqrt()
            };
            u.coeffs[k * h + c] = z;
            u.coeffs[km * h + c] = z.conj();
        }
    }
    let mut f = dft_inverse_real_part(&u);
    if spec.normalize {
        let nrm = normalized_l2_norm(&f);
        if nrm > 0.0 {
            f = f.scaled(1.0 / nrm);
        }
    }
    Ok(f)
}

/// Fitted spectral decay exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    /// `α̂`, minus the slope of `log E|f̂|²` against `log(1 + ‖ξ‖)`.
    pub alpha: f64,
    pub r2: f64,
    pub shells: usize,
}

/// Channel- and shell-averaged `|f̂|²` for integer radii in `[lo, hi]`.
pub fn shell_spectrum(f: &GridField, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let u = dft_forward(f);
    let rmax = hi.floor().max(0.0) as usize;
    let mut acc = vec![(0.0, 0usize); rmax + 1];
    let h = f.channels;
    for k in 0..u.modes() {
        let xi = Frequency::from_flat(k, f.dim, f.n);
        let r = xi.norm().round();
        if r < lo || r > hi {
            continue;
        }
        let e: f64 = u.coeffs[k * h..(k + 1) * h].iter().map(|z| z.norm_sqr()).sum::<f64>() / h as f64;
        let slot = &mut acc[r as usize];
        slot.0 += e;
        slot.1 += 1;
    }
    acc.into_iter()
        .enumerate()
        .filter(|(_, (_, cnt))| *cnt > 0)
        .map(|(r, (e, cnt))| (r as f64, e / cnt as f64))
        .collect()
}

/// Least-squares decay exponent over the frequency window `[lo, hi]`.
pub fn measured_decay_exponent(f: &GridField, lo: f64, hi: f64) -> Result<DecayEstimate> {
    let shells: Vec<(f64, f64)> = shell_spectrum(f, lo, hi).into_iter().filter(|(_, e)| *e > 0.0).collect();
    decay_from_shells(&shells)
}

/// Decay exponent from `(radius, mean |f̂|²)` pairs.
pub fn decay_from_shells(shells: &[(f64, f64)]) -> Result<DecayEstimate> {
    if shells.len() < 4 {
        return Err(Error::Domain(format!("decay fit needs at least 4 non-empty shells, got {}", shells.len())));
    }
    let x: Vec<f64> = shells.iter().map(|(r, _)| 1.0 + r).collect();
    let y: Vec<f64> = shells.iter().map(|(_, e)| *e).collect();
    let LinearFit { slope, r2, .. } = loglog_fit(&x, &y)?;
    Ok(DecayEstimate { alpha: -slope, r2, shells: shells.len() })
}

/// Fraction of spectral energy at frequencies with `‖ξ‖_∞ > cut`.
pub fn high_frequency_fraction(f: &GridField, cut: i64) -> f64 {
    let u = dft_forward(f);
    let h = f.channels;
    let (mut hi, mut tot) = (0.0, 0.0);
    for k in 0..u.modes() {
        let e: f64 = u.coeffs[k * h..(k + 1) * h].iter().map(|z| z.norm_sqr()).sum();
        tot += e;
        if Frequency::from_flat(k, f.dim, f.n).max_abs() > cut {
            hi += e;
        }
    }
    if tot == 0.0 {
        0.0
    } else {
        hi / tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Frequency;
    use proptest::prelude::*;

    #[test]
    fn same_seed_same_sample() {
        let s = GrfSpec::new(1, 256, 2.0, 7);
        assert_eq!(sample_grf(&s).unwrap(), sample_grf(&s).unwrap());
        let t = GrfSpec { seed: 8, ..s.clone() };
        assert_ne!(sample_grf(&s).unwrap(), sample_grf(&t).unwrap());
    }

    #[test]
    fn mean_mode_is_removed() {
        let f = sample_grf(&GrfSpec::new(2, 32, 1.5, 3)).unwrap();
        let u = dft_forward(&f);
        assert!(u.get(Frequency([0, 0]), 0).norm() < 1e-12);
        assert!(u.hermitian_residue() < 1e-12);
    }

    #[test]
    fn normalized_sample_has_unit_norm() {
        let mut s = GrfSpec::new(1, 128, 1.0, 11);
        s.normalize = true;
        let f = sample_grf(&s).unwrap();
        assert!((normalized_l2_norm(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn white_spectrum_has_zero_exponent() {
        let shells: Vec<(f64, f64)> = (8..64).map(|r| (r as f64, 2.0)).collect();
        assert!(decay_from_shells(&shells).unwrap().alpha.abs() < 1e-12);
    }

    #[test]
    fn synthetic_cubic_decay_is_recovered() {
        let shells: Vec<(f64, f64)> = (8..512).map(|r| (r as f64, (1.0 + r as f64).powf(-3.0))).collect();
        assert!((decay_from_shells(&shells).unwrap().alpha - 3.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_shells_is_an_error() {
        let f = sample_grf(&GrfSpec::new(1, 64, 1.0, 1)).unwrap();
        assert!(measured_decay_exponent(&f, 10.0, 12.0).is_err());
    }

    #[test]
    fn rougher_fields_carry_more_high_frequency_energy() {
        let mut rough = GrfSpec::new(1, 1024, 1.0, 5);
        rough.convention = SpectrumConvention::SobolevMatched;
        let smooth = GrfSpec { smoothness: 2.0, ..rough.clone() };
        let a = high_frequency_fraction(&sample_grf(&rough).unwrap(), 256);
        let b = high_frequency_fraction(&sample_grf(&smooth).unwrap(), 256);
        assert!(b < a);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn samples_are_real_and_finite(seed in 0u64..1000, s in 0.5f64..4.0, two_d in any::<bool>()) {
            let dim = if two_d { 2 } else { 1 };
            let f = sample_grf(&GrfSpec::new(dim, 16, s, seed)).unwrap();
            prop_assert!(f.values.iter().all(|v| v.is_finite()));
            prop_assert!(dft_forward(&f).hermitian_residue() < 1e-10);
        }
    }
}
