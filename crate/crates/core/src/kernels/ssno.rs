//! Directional damped-oscillatory kernels built from rank-one factors.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Frequency, C0};
use crate::linalg::vec_norm;
use crate::random_fields::keyed_rng;

/// How the per-axis components are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SsnoForm {
    /// `K(z) = Σ_i K^{(i)}(z_i)`.
    #[default]
    Sum,
    /// `K(z) = ∘_i K^{(i)}(z_i)`, entrywise product.
    Product,
}

/// Kernel with `K` modes per axis. For mode `k` and axis `i` the component is
/// `c e^{-ρ|z_i|} e^{iω z_i} A_±` with `A_± = C_± B_±ᵀ`, the forward factor on
/// `z_i ∈ [0, 1/2)` and the backward factor on `z_i ∈ [-1/2, 0)`. Arguments
/// are wrapped into `[-1/2, 1/2)` first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsnoKernel {
    pub dim: usize,
    pub modes: usize,
    pub d_out: usize,
    pub d_in: usize,
    #[serde(default)]
    pub form: SsnoForm,
    /// `c_{k,i}` at `k * dim + i`.
    pub amplitude: Vec<f64>,
    /// `ρ_{k,i} > 0` at `k * dim + i`.
    pub damping: Vec<f64>,
    /// `ω_{k,i}` at `k * dim + i`.
    pub frequency: Vec<f64>,
    /// `C_+^{(k)}`, one vector of length `d_out` per mode.
    pub c_plus: Vec<Vec<f64>>,
    /// `B_+^{(k)}`, one vector of length `d_in` per mode.
    pub b_plus: Vec<Vec<f64>>,
    pub c_minus: Vec<Vec<f64>>,
    pub b_minus: Vec<Vec<f64>>,
}

/// Wraps a coordinate into `[-1/2, 1/2)`.
#[inline]
pub fn wrap_centered(z: f64) -> f64 {
    z - (z + 0.5).floor()
}

/// `∫_0^{1/2} e^{-a t} dt = (1 - e^{-a/2}) / a`, continuous at `a = 0`.
#[inline]
pub fn half_period_integral(a: Complex64) -> Complex64 {
    if a.norm() < 1e-6 {
        // 1/2 - a/8 + a²/48
        Complex64::new(0.5, 0.0) - a / 8.0 + a * a / 48.0
    } else {
        (Complex64::new(1.0, 0.0) - (-a / 2.0).exp()) / a
    }
}

impl SsnoKernel {
    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::Domain(format!("kernel dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.modes == 0 || self.d_out == 0 || self.d_in == 0 {
            return Err(Error::Domain("kernel needs positive mode and channel counts".into()));
        }
        let km = self.modes * self.dim;
        for (name, v) in [("amplitude", &self.amplitude), ("damping", &self.damping), ("frequency", &self.frequency)] {
            if v.len() != km {
                return Err(Error::Shape(format!("{name} needs {km} entries, got {}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("{name} has non-finite entries")));
            }
        }
        if self.damping.iter().any(|&r| r <= 0.0) {
            return Err(Error::Domain("damping must be positive".into()));
        }
        for (name, v, len) in [
            ("c_plus", &self.c_plus, self.d_out),
            ("c_minus", &self.c_minus, self.d_out),
            ("b_plus", &self.b_plus, self.d_in),
            ("b_minus", &self.b_minus, self.d_in),
        ] {
            if v.len() != self.modes || v.iter().any(|x| x.len() != len) {
                return Err(Error::Shape(format!("{name} needs {} vectors of length {len}", self.modes)));
            }
        }
        Ok(())
    }

    #[inline]
    fn idx(&self, k: usize, i: usize) -> usize {
        k * self.dim + i
    }

    /// `A_+^{(k)}` or `A_-^{(k)}` as a row-major matrix.
    pub fn factor(&self, k: usize, forward: bool) -> Vec<f64> {
        let (c, b) = if forward { (&self.c_plus[k], &self.b_plus[k]) } else { (&self.c_minus[k], &self.b_minus[k]) };
        c.iter().flat_map(|ci| b.iter().map(move |bj| ci * bj)).collect()
    }

    /// Per-axis component `K^{(i)}(z_i)`.
    fn axis_component(&self, i: usize, zi: f64) -> Vec<Complex64> {
        let z = wrap_centered(zi);
        let forward = z >= 0.0;
        let mut out = vec![C0; self.d_out * self.d_in];
        for k in 0..self.modes {
            let j = self.idx(k, i);
            let w = Complex64::from_polar(self.amplitude[j] * (-self.damping[j] * z.abs()).exp(), self.frequency[j] * z);
            let (c, b) = if forward { (&self.c_plus[k], &self.b_plus[k]) } else { (&self.c_minus[k], &self.b_minus[k]) };
            for (r, cr) in c.iter().enumerate() {
                let wc = w * *cr;
                for (s, bs) in b.iter().enumerate() {
                    out[r * self.d_in + s] += wc * *bs;
                }
            }
        }
        out
    }

    /// `K(z)` as a row-major complex `d_out x d_in` matrix.
    pub fn eval(&self, z: [f64; 2]) -> Vec<Complex64> {
        let mut out = self.axis_component(0, z[0]);
        for i in 1..self.dim {
            let next = self.axis_component(i, z[i]);
            match self.form {
                SsnoForm::Sum => out.iter_mut().zip(&next).for_each(|(a, b)| *a += b),
                SsnoForm::Product => out.iter_mut().zip(&next).for_each(|(a, b)| *a *= b),
            }
        }
        out
    }

    /// Scalar transforms `(c F_+, c F_-)` of mode `k` on axis `i` at integer frequency `f`.
    pub fn axis_transform(&self, k: usize, i: usize, f: i64) -> (Complex64, Complex64) {
        let j = self.idx(k, i);
        let (rho, omega, c) = (self.damping[j], self.frequency[j], self.amplitude[j]);
        let detune = omega - 2.0 * PI * f as f64;
        let fp = half_period_integral(Complex64::new(rho, -detune));
        let fm = half_period_integral(Complex64::new(rho, detune));
        (fp * c, fm * c)
    }

    /// Fourier coefficient of the per-axis component at integer frequency `f`.
    fn axis_coeff(&self, i: usize, f: i64) -> Vec<Complex64> {
        let mut out = vec![C0; self.d_out * self.d_in];
        for k in 0..self.modes {
            let (fp, fm) = self.axis_transform(k, i, f);
            for (w, forward) in [(fp, true), (fm, false)] {
                let (c, b) = if forward { (&self.c_plus[k], &self.b_plus[k]) } else { (&self.c_minus[k], &self.b_minus[k]) };
                for (r, cr) in c.iter().enumerate() {
                    let wc = w * *cr;
                    for (s, bs) in b.iter().enumerate() {
                        out[r * self.d_in + s] += wc * *bs;
                    }
                }
            }
        }
        out
    }

    /// Continuous Fourier coefficient `∫_{T^d} K(z) e^{-2πiξ·z} dz`.
    ///
    /// In the sum form a component depending on `z_i` alone only reaches
    /// frequencies with `ξ_j = 0` for `j ≠ i`.
    pub fn fourier_coeff(&self, xi: Frequency) -> Vec<Complex64> {
        match self.form {
            SsnoForm::Sum => {
                let mut out = vec![C0; self.d_out * self.d_in];
                for i in 0..self.dim {
                    if (0..self.dim).any(|j| j != i && xi.0[j] != 0) {
                        continue;
                    }
                    let a = self.axis_coeff(i, xi.0[i]);
                    out.iter_mut().zip(&a).for_each(|(o, v)| *o += v);
                }
                out
            }
            SsnoForm::Product => {
                let mut out = self.axis_coeff(0, xi.0[0]);
                for i in 1..self.dim {
                    let a = self.axis_coeff(i, xi.0[i]);
                    out.iter_mut().zip(&a).for_each(|(o, v)| *o *= v);
                }
                out
            }
        }
    }

    /// `sup_{k,i} |c_{k,i}| (‖C_+‖‖B_+‖ + ‖C_-‖‖B_-‖)`.
    pub fn factor_constant(&self) -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..self.modes {
            let pair = vec_norm(&self.c_plus[k]) * vec_norm(&self.b_plus[k])
                + vec_norm(&self.c_minus[k]) * vec_norm(&self.b_minus[k]);
            for i in 0..self.dim {
                best = best.max(self.amplitude[self.idx(k, i)].abs() * pair);
            }
        }
        best
    }

    /// Upper bound on `sup_z ‖K(z)‖_op`: `K d C` in the sum form and
    /// `(K C)^{d/2}`-type growth `K^{d/2} C^{d/2}` in the product form.
    pub fn sup_bound(&self) -> f64 {
        let (k, d, c) = (self.modes as f64, self.dim as f64, self.factor_constant());
        match self.form {
            SsnoForm::Sum => k * d * c,
            SsnoForm::Product => k.powf(d / 2.0) * c.powf(d / 2.0),
        }
    }

    /// Upper bound on `∫_{T^d} ‖K(z)‖_op dz`.
    ///
    /// Per axis and mode each branch contributes `|c| (1 - e^{-ρ})/ρ ‖C‖‖B‖`,
    /// which dominates the integral of `|c| e^{-ρ|z|} ‖C‖‖B‖` over its half period.
    /// Axes add in the sum form and multiply in the product form.
    pub fn l1_bound(&self) -> f64 {
        let per_axis: Vec<f64> = (0..self.dim)
            .map(|i| {
                (0..self.modes)
                    .map(|k| {
                        let j = self.idx(k, i);
                        let rho = self.damping[j];
                        let w = if rho < 1e-12 { 1.0 } else { (1.0 - (-rho).exp()) / rho };
                        self.amplitude[j].abs()
                            * w
                            * (vec_norm(&self.c_plus[k]) * vec_norm(&self.b_plus[k])
                                + vec_norm(&self.c_minus[k]) * vec_norm(&self.b_minus[k]))
                    })
                    .sum()
            })
            .collect();
        match self.form {
            SsnoForm::Sum => per_axis.iter().sum(),
            SsnoForm::Product => per_axis.iter().product(),
        }
    }

    /// Random parameters: `ρ ~ LogUniform[0.1, 10]`, `ω ~ U[-2πK, 2πK]`,
    /// `c ~ N(0, 1/K)`, factor entries `N(0, 1/len)`.
    pub fn random(dim: usize, modes: usize, d_out: usize, d_in: usize, form: SsnoForm, seed: u64) -> Result<Self> {
        if modes == 0 || d_out == 0 || d_in == 0 {
            return Err(Error::Domain("kernel needs positive mode and channel counts".into()));
        }
        let mut rng = keyed_rng(seed, 0x5550);
        let km = modes * dim;
        let wmax = 2.0 * PI * modes as f64;
        let (lo, hi) = (0.1f64.ln(), 10f64.ln());
        let damping: Vec<f64> = (0..km).map(|_| rng.gen_range(lo..hi).exp()).collect();
        let frequency: Vec<f64> = (0..km).map(|_| rng.gen_range(-wmax..wmax)).collect();
        let amp = Normal::new(0.0, (1.0 / modes as f64).sqrt()).expect("valid normal");
        let amplitude: Vec<f64> = (0..km).map(|_| amp.sample(&mut rng)).collect();
        let draw = |len: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
            let nd = Normal::new(0.0, 1.0 / (len as f64).sqrt()).expect("valid normal");
            (0..modes).map(|_| (0..len).map(|_| nd.sample(rng)).collect()).collect()
        };
        let c_plus = draw(d_out, &mut rng);
        let b_plus = draw(d_in, &mut rng);
        let c_minus = draw(d_out, &mut rng);
        let b_minus = draw(d_in, &mut rng);
        let k = SsnoKernel { dim, modes, d_out, d_in, form, amplitude, damping, frequency, c_plus, b_plus, c_minus, b_minus };
        k.validate()?;
        Ok(k)
    }
}
