//! Truncated Fourier-series kernels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Frequency, C0};
use crate::linalg::op_norm_complex;
use crate::random_fields::keyed_rng;

/// One Fourier mode `P^{(k)}` of a kernel, stored as real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnoMode {
    pub freq: [i64; 2],
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl FnoMode {
    pub fn matrix(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(a, b)| Complex64::new(*a, *b)).collect()
    }
}

/// `K(z) = Σ_{k ∈ {-K..K}^d} P^{(k)} e^{2πik·z}`; modes not listed are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnoKernel {
    pub dim: usize,
    pub modes: usize,
    pub d_out: usize,
    pub d_in: usize,
    pub weights: Vec<FnoMode>,
}

impl FnoKernel {
    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::Domain(format!("kernel dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.d_out == 0 || self.d_in == 0 {
            return Err(Error::Domain("kernel needs positive channel counts".into()));
        }
        let sz = self.d_out * self.d_in;
        let kk = self.modes as i64;
        for m in &self.weights {
            if m.re.len() != sz || m.im.len() != sz {
                return Err(Error::Shape(format!("mode {:?} needs {sz} entries", m.freq)));
            }
            if m.freq.iter().take(self.dim).any(|f| f.abs() > kk) || (self.dim == 1 && m.freq[1] != 0) {
                return Err(Error::Domain(format!("mode {:?} outside the truncation K={}", m.freq, self.modes)));
            }
            if m.re.iter().chain(&m.im).any(|v| !v.is_finite()) {
                return Err(Error::Domain("kernel weights must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: [f64; 2]) -> Vec<Complex64> {
        let mut out = vec![C0; self.d_out * self.d_in];
        for m in &self.weights {
            let ph = 2.0 * PI * (m.freq[0] as f64 * z[0] + m.freq[1] as f64 * z[1]);
            let e = Complex64::from_polar(1.0, ph);
            for (o, (a, b)) in out.iter_mut().zip(m.re.iter().zip(&m.im)) {
                *o += e * Complex64::new(*a, *b);
            }
        }
        out
    }

    /// `P^{(ξ)}` when `ξ` is a stored mode, zero otherwise.
    pub fn fourier_coeff(&self, xi: Frequency) -> Vec<Complex64> {
        let mut out = vec![C0; self.d_out * self.d_in];
        for m in self.weights.iter().filter(|m| m.freq == xi.0) {
            out.iter_mut().zip(m.matrix()).for_each(|(o, v)| *o += v);
        }
        out
    }

    /// `sup_k ‖P^{(k)}‖_op`.
    pub fn max_mode_norm(&self) -> f64 {
        self.weights.iter().map(|m| op_norm_complex(&m.matrix(), self.d_out, self.d_in)).fold(0.0, f64::max)
    }

    /// `Σ_k ‖P^{(k)}‖_op`, a bound on both `sup_z ‖K(z)‖_op` and its integral.
    pub fn mode_norm_sum(&self) -> f64 {
        self.weights.iter().map(|m| op_norm_complex(&m.matrix(), self.d_out, self.d_in)).sum()
    }

    /// Largest `‖P^{(k)} - conj(P^{(-k)})‖` entry; zero for a real kernel.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in &self.weights {
            let neg = Frequency(m.freq).neg();
            let other = self.fourier_coeff(neg);
            for (a, b) in m.matrix().iter().zip(&other) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Complex Gaussian modes with `E|P_{rs}|² = 1/(d_in (2K+1)^d)`, paired so
    /// that `P^{(-k)} = conj(P^{(k)})` and the kernel is real.
    pub fn random(dim: usize, modes: usize, d_out: usize, d_in: usize, seed: u64) -> Result<Self> {
        Self::random_with(dim, modes, d_out, d_in, seed, false)
    }

    /// As [`FnoKernel::random`] with real mode matrices (even kernels).
    pub fn random_real(dim: usize, modes: usize, d_out: usize, d_in: usize, seed: u64) -> Result<Self> {
        Self::random_with(dim, modes, d_out, d_in, seed, true)
    }

    fn random_with(dim: usize, modes: usize, d_out: usize, d_in: usize, seed: u64, real: bool) -> Result<Self> {
        if !(dim == 1 || dim == 2) || d_out == 0 || d_in == 0 {
            return Err(Error::Domain("invalid kernel shape".into()));
        }
        let kk = modes as i64;
        let var = 1.0 / (d_in as f64 * ((2 * modes + 1) as f64).powi(dim as i32));
        let sz = d_out * d_in;
        let mut rng = keyed_rng(seed, 0xF0);
        let half = Normal::new(0.0, (var / 2.0).sqrt()).expect("valid normal");
        let full = Normal::new(0.0, var.sqrt()).expect("valid normal");
        let freqs: Vec<[i64; 2]> = if dim == 1 {
            (-kk..=kk).map(|a| [a, 0]).collect()
        } else {
            (-kk..=kk).flat_map(|a| (-kk..=kk).map(move |b| [a, b])).collect()
        };
        let mut weights: Vec<FnoMode> = Vec::with_capacity(freqs.len());
        for f in &freqs {
            let neg = [-f[0], -f[1]];
            // Canonical member of each ±k pair is drawn; its partner is the conjugate.
            if neg < *f {
                let src = weights.iter().find(|m| m.freq == neg).expect("partner drawn first");
                weights.push(FnoMode { freq: *f, re: src.re.clone(), im: src.im.iter().map(|v| -v).collect() });
                continue;
            }
            let self_conj = neg == *f;
            let (re, im): (Vec<f64>, Vec<f64>) = if self_conj || real {
                ((0..sz).map(|_| full.sample(&mut rng)).collect(), vec![0.0; sz])
            } else {
                ((0..sz).map(|_| half.sample(&mut rng)).collect(), (0..sz).map(|_| half.sample(&mut rng)).collect())
            };
            weights.push(FnoMode { freq: *f, re, im });
        }
        let k = FnoKernel { dim, modes, d_out, d_in, weights };
        k.validate()?;
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_kernel_is_real() {
        let k = FnoKernel::random(2, 2, 2, 3, 1).unwrap();
        assert!(k.hermitian_defect() < 1e-15);
        let v = k.eval([0.3, 0.7]);
        assert!(v.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn coefficient_lookup_respects_truncation() {
        let k = FnoKernel::random(1, 3, 1, 1, 5).unwrap();
        assert!(k.fourier_coeff(Frequency([3, 0]))[0].norm() > 0.0);
        assert_eq!(k.fourier_coeff(Frequency([4, 0]))[0], C0);
    }

    #[test]
    fn pointwise_norm_below_mode_sum() {
        let k = FnoKernel::random(1, 4, 3, 3, 2).unwrap();
        let s = k.mode_norm_sum();
        for j in 0..64 {
            let z = j as f64 / 64.0;
            assert!(op_norm_complex(&k.eval([z, 0.0]), 3, 3) <= s * (1.0 + 1e-9));
        }
    }
}
