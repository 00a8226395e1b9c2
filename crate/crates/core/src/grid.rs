//! Periodic grids on the torus, the normalized DFT, discrete convolution and
//! grid norms.
//!
//! Layout: values are stored point-major then channel, `index = point * channels + c`,
//! with `point = i0 * n + i1` in two dimensions. Spectral coefficients use the
//! same layout with the point index replaced by the DFT storage index of the
//! frequency. The forward transform carries the `1/N^d` factor, so the inverse
//! is a plain sum and `u(x) = Σ_ξ û(ξ) e^{2πiξ·x}`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the relative imaginary residue of an inverse transform that
/// is expected to be real.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Checks that `(dim, n)` describes a supported grid.
pub fn check_grid(dim: usize, n: usize) -> Result<()> {
    if !(dim == 1 || dim == 2) {
        return Err(Error::Domain(format!("grid dimension must be 1 or 2, got {dim}")));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Domain(format!("grid size must be an even power of two, got {n}")));
    }
    Ok(())
}

/// Centered representative of a DFT storage index, in `[-n/2, n/2)`.
#[inline]
pub fn centered(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// DFT storage index of an integer frequency, i.e. `k mod n`.
#[inline]
pub fn storage(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Integer frequency vector on a grid of dimension 1 or 2 (unused axis is 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frequency(pub [i64; 2]);

impl Frequency {
    /// Centered frequency for a flat storage index.
    pub fn from_flat(flat: usize, dim: usize, n: usize) -> Self {
        if dim == 1 {
            Frequency([centered(flat, n), 0])
        } else {
            Frequency([centered(flat / n, n), centered(flat % n, n)])
        }
    }

    pub fn to_flat(self, dim: usize, n: usize) -> usize {
        if dim == 1 {
            storage(self.0[0], n)
        } else {
            storage(self.0[0], n) * n + storage(self.0[1], n)
        }
    }

    pub fn norm_sq(self) -> f64 {
        (self.0[0] * self.0[0] + self.0[1] * self.0[1]) as f64
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(self) -> i64 {
        self.0[0].abs().max(self.0[1].abs())
    }

    pub fn neg(self) -> Self {
        Frequency([-self.0[0], -self.0[1]])
    }
}

/// Real multichannel samples on `T^d_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub dim: usize,
    pub n: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(dim: usize, n: usize, channels: usize) -> Result<Self> {
        check_grid(dim, n)?;
        Ok(GridField { dim, n, channels, values: vec![0.0; n.pow(dim as u32) * channels] })
    }

    pub fn new(dim: usize, n: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        let f = GridField { dim, n, channels, values };
        f.validate()?;
        Ok(f)
    }

    /// Samples `f(x, c)` at every grid point `x ∈ (1/N){0..N-1}^d`.
    pub fn from_fn(dim: usize, n: usize, channels: usize, f: impl Fn(&[f64], usize) -> f64) -> Result<Self> {
        let mut out = GridField::zeros(dim, n, channels)?;
        for p in 0..out.points() {
            let x = out.coords(p);
            for c in 0..channels {
                out.values[p * channels + c] = f(&x[..dim], c);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.dim, self.n)?;
        if self.channels == 0 {
            return Err(Error::Shape("field needs at least one channel".into()));
        }
        let want = self.points() * self.channels;
        if self.values.len() != want {
            return Err(Error::Shape(format!(
                "field on N={} d={} with {} channels needs {} values, got {}",
                self.n,
                self.dim,
                self.channels,
                want,
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field has non-finite values".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Grid coordinates of a point index (second entry is 0 in 1D).
    pub fn coords(&self, p: usize) -> [f64; 2] {
        let h = 1.0 / self.n as f64;
        if self.dim == 1 {
            [p as f64 * h, 0.0]
        } else {
            [(p / self.n) as f64 * h, (p % self.n) as f64 * h]
        }
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.channels).copied().collect()
    }

    pub fn same_grid(&self, other: &GridField) -> Result<()> {
        if self.dim != other.dim || self.n != other.n || self.channels != other.channels {
            return Err(Error::Shape(format!(
                "grids differ: (d={}, N={}, H={}) vs (d={}, N={}, H={})",
                self.dim, self.n, self.channels, other.dim, other.n, other.channels
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.same_grid(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()))
    }

    pub fn add_scaled(&self, other: &GridField, t: f64) -> Result<GridField> {
        self.same_grid(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + t * b).collect()))
    }

    pub fn scaled(&self, t: f64) -> GridField {
        self.with_values(self.values.iter().map(|v| v * t).collect())
    }

    /// Same grid and channel count with new values (length unchecked).
    pub fn with_values(&self, values: Vec<f64>) -> GridField {
        GridField { dim: self.dim, n: self.n, channels: self.channels, values }
    }

    /// Values at the points of the coarse grid `T^d_{N/stride}`.
    pub fn subsample(&self, stride: usize) -> Result<GridField> {
        if stride == 0 || self.n % stride != 0 || !(self.n / stride).is_power_of_two() || self.n / stride < 2 {
            return Err(Error::Domain(format!("stride {stride} does not divide N={} into a valid grid", self.n)));
        }
        let m = self.n / stride;
        let h = self.channels;
        let mut out = GridField::zeros(self.dim, m, h)?;
        for q in 0..out.points() {
            let p = if self.dim == 1 { q * stride } else { (q / m) * stride * self.n + (q % m) * stride };
            out.values[q * h..(q + 1) * h].copy_from_slice(&self.values[p * h..(p + 1) * h]);
        }
        Ok(out)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: GridField = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridField::from_json_str(&s)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Complex DFT coefficients of a multichannel field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub dim: usize,
    pub n: usize,
    pub channels: usize,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(dim: usize, n: usize, channels: usize) -> Result<Self> {
        check_grid(dim, n)?;
        Ok(SpectralField { dim, n, channels, coeffs: vec![C0; n.pow(dim as u32) * channels] })
    }

    #[inline]
    pub fn modes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn get(&self, xi: Frequency, c: usize) -> Complex64 {
        self.coeffs[xi.to_flat(self.dim, self.n) * self.channels + c]
    }

    pub fn set(&mut self, xi: Frequency, c: usize, z: Complex64) {
        let k = xi.to_flat(self.dim, self.n);
        self.coeffs[k * self.channels + c] = z;
    }

    /// Largest `|û(ξ) - conj(û(-ξ))|` relative to the largest coefficient.
    pub fn hermitian_residue(&self) -> f64 {
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for k in 0..self.modes() {
            let xi = Frequency::from_flat(k, self.dim, self.n);
            let km = xi.neg().to_flat(self.dim, self.n);
            for c in 0..self.channels {
                let a = self.coeffs[k * self.channels + c];
                let b = self.coeffs[km * self.channels + c].conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst / scale
    }
}

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        if let Some(f) = p.1.get(&(n, inverse)) {
            return f.clone();
        }
        let f = if inverse { p.0.plan_fft_inverse(n) } else { p.0.plan_fft_forward(n) };
        p.1.insert((n, inverse), f.clone());
        f
    })
}

/// Unnormalized in-place transform of one channel stored contiguously
/// (`e^{-2πi}` kernel forward, `e^{+2πi}` inverse).
pub fn fft_inplace(buf: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let f = plan(n, inverse);
    if dim == 1 {
        f.process(buf);
        return;
    }
    // Rows (axis 1, contiguous).
    f.process(buf);
    // Columns (axis 0).
    let mut col = vec![C0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        f.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}

/// Storage index of `-ξ` for the frequency stored at `p`.
#[inline]
fn neg_index(p: usize, dim: usize, n: usize) -> usize {
    if dim == 1 {
        (n - p) % n
    } else {
        let (i, j) = (p / n, p % n);
        ((n - i) % n) * n + (n - j) % n
    }
}

/// Forward DFT with the `1/N^d` normalization. Channels are transformed in
/// pairs packed as `a + ib` and separated by conjugate symmetry.
pub fn dft_forward(f: &GridField) -> SpectralField {
    let m = f.points();
    let h = f.channels;
    let scale = 1.0 / m as f64;
    let mut out = SpectralField { dim: f.dim, n: f.n, channels: h, coeffs: vec![C0; m * h] };
    let mut buf = vec![C0; m];
    for c in (0..h).step_by(2) {
        let pair = c + 1 < h;
        for p in 0..m {
            let im = if pair { f.values[p * h + c + 1] } else { 0.0 };
            buf[p] = Complex64::new(f.values[p * h + c], im);
        }
        fft_inplace(&mut buf, f.dim, f.n, false);
        for p in 0..m {
            if pair {
                let (z, zn) = (buf[p], buf[neg_index(p, f.dim, f.n)].conj());
                out.coeffs[p * h + c] = (z + zn) * (0.5 * scale);
                out.coeffs[p * h + c + 1] = Complex64::new((z - zn).im, -(z - zn).re) * (0.5 * scale);
            } else {
                out.coeffs[p * h + c] = buf[p] * scale;
            }
        }
    }
    out
}

/// Inverse DFT returning complex samples (channel-interleaved).
pub fn dft_inverse_complex(u: &SpectralField) -> Vec<Complex64> {
    let m = u.modes();
    let h = u.channels;
    let mut out = vec![C0; m * h];
    let mut buf = vec![C0; m];
    for c in 0..h {
        for p in 0..m {
            buf[p] = u.coeffs[p * h + c];
        }
        fft_inplace(&mut buf, u.dim, u.n, true);
        for p in 0..m {
            out[p * h + c] = buf[p];
        }
    }
    out
}

fn imaginary_residue(z: &[Complex64]) -> f64 {
    let scale = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    z.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / scale
}

/// Inverse DFT of Hermitian coefficients. Errors when the imaginary residue
/// of the result exceeds [`HERMITIAN_TOL`] relative to its magnitude.
pub fn dft_inverse(u: &SpectralField) -> Result<GridField> {
    let z = dft_inverse_complex(u);
    let residue = imaginary_residue(&z);
    if residue > HERMITIAN_TOL {
        return Err(Error::Symmetry { residue, tolerance: HERMITIAN_TOL });
    }
    Ok(GridField { dim: u.dim, n: u.n, channels: u.channels, values: z.iter().map(|v| v.re).collect() })
}

/// Inverse DFT followed by projection onto the real part.
///
/// `Re(IDFT u) = IDFT((u(ξ) + conj u(-ξ))/2)`, so two channels share one
/// transform as the real and imaginary parts of a Hermitian-projected pair.
pub fn dft_inverse_real_part(u: &SpectralField) -> GridField {
    let m = u.modes();
    let h = u.channels;
    let mut values = vec![0.0; m * h];
    let mut buf = vec![C0; m];
    let herm = |p: usize, c: usize| (u.coeffs[p * h + c] + u.coeffs[neg_index(p, u.dim, u.n) * h + c].conj()) * 0.5;
    for c in (0..h).step_by(2) {
        let pair = c + 1 < h;
        for p in 0..m {
            let a = herm(p, c);
            buf[p] = if pair {
                let b = herm(p, c + 1);
                Complex64::new(a.re - b.im, a.im + b.re)
            } else {
                a
            };
        }
        fft_inplace(&mut buf, u.dim, u.n, true);
        for p in 0..m {
            values[p * h + c] = buf[p].re;
            if pair {
                values[p * h + c + 1] = buf[p].im;
            }
        }
    }
    GridField { dim: u.dim, n: u.n, channels: h, values }
}

/// Per-frequency complex `d_out x d_in` matrices `K̂_N(ξ)`; frequencies not
/// listed are zero. Entries are sorted by flat storage index.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpectrum {
    pub dim: usize,
    pub n: usize,
    pub d_out: usize,
    pub d_in: usize,
    pub entries: Vec<(usize, Vec<Complex64>)>,
    /// Set when `K̂(-ξ) = conj(K̂(ξ))` holds by construction.
    pub hermitian: bool,
}

impl KernelSpectrum {
    pub fn new(dim: usize, n: usize, d_out: usize, d_in: usize) -> Result<Self> {
        check_grid(dim, n)?;
        Ok(KernelSpectrum { dim, n, d_out, d_in, entries: Vec::new(), hermitian: false })
    }

    /// `scale * I` at every frequency, i.e. the kernel `N^d δ_0 I`.
    pub fn identity(dim: usize, n: usize, channels: usize, scale: f64) -> Result<Self> {
        let mut s = KernelSpectrum::new(dim, n, channels, channels)?;
        let m = n.pow(dim as u32);
        for k in 0..m {
            let mut mat = vec![C0; channels * channels];
            for i in 0..channels {
                mat[i * channels + i] = Complex64::new(scale, 0.0);
            }
            s.entries.push((k, mat));
        }
        Ok(s)
    }

    /// Replaces the table by `(K̂(ξ) + conj(K̂(-ξ)))/2`, the spectrum of the
    /// real part of the kernel.
    pub fn hermitian_part(&self) -> KernelSpectrum {
        let map: HashMap<usize, &Vec<Complex64>> = self.entries.iter().map(|(k, m)| (*k, m)).collect();
        let mut keys: Vec<usize> = map.keys().copied().collect();
        for (k, _) in &self.entries {
            let km = Frequency::from_flat(*k, self.dim, self.n).neg().to_flat(self.dim, self.n);
            if !map.contains_key(&km) {
                keys.push(km);
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let sz = self.d_out * self.d_in;
        let entries = keys
            .into_iter()
            .map(|k| {
                let km = Frequency::from_flat(k, self.dim, self.n).neg().to_flat(self.dim, self.n);
                let mut m = vec![C0; sz];
                if let Some(a) = map.get(&k) {
                    for (o, v) in m.iter_mut().zip(a.iter()) {
                        *o += v * 0.5;
                    }
                }
                if let Some(b) = map.get(&km) {
                    for (o, v) in m.iter_mut().zip(b.iter()) {
                        *o += v.conj() * 0.5;
                    }
                }
                (k, m)
            })
            .collect();
        KernelSpectrum { entries, hermitian: true, ..self.clone_meta() }
    }

    fn clone_meta(&self) -> KernelSpectrum {
        KernelSpectrum { dim: self.dim, n: self.n, d_out: self.d_out, d_in: self.d_in, entries: Vec::new(), hermitian: false }
    }

    /// Spatial samples `K(x) = Σ_ξ K̂(ξ) e^{2πiξ·x}` of the kernel with this
    /// spectrum, as row-major matrices per grid point.
    pub fn spatial_samples(&self) -> Vec<Vec<Complex64>> {
        let m = self.n.pow(self.dim as u32);
        let sz = self.d_out * self.d_in;
        let mut out = vec![vec![C0; sz]; m];
        let mut buf = vec![C0; m];
        for e in 0..sz {
            buf.iter_mut().for_each(|b| *b = C0);
            for (k, mat) in &self.entries {
                buf[*k] = mat[e];
            }
            fft_inplace(&mut buf, self.dim, self.n, true);
            for p in 0..m {
                out[p][e] = buf[p];
            }
        }
        out
    }
}

/// Builds the table `K̂_N(ξ) = (1/N^d) Σ_x K(x) e^{-2πiξ·x}` from spatial
/// samples (one row-major matrix per grid point).
pub fn spectrum_of_samples(
    samples: &[Vec<Complex64>],
    dim: usize,
    n: usize,
    d_out: usize,
    d_in: usize,
) -> Result<KernelSpectrum> {
    check_grid(dim, n)?;
    let m = n.pow(dim as u32);
    if samples.len() != m || samples.iter().any(|s| s.len() != d_out * d_in) {
        return Err(Error::Shape("kernel samples do not match the grid".into()));
    }
    let sz = d_out * d_in;
    let mut table = vec![vec![C0; sz]; m];
    let mut buf = vec![C0; m];
    let scale = 1.0 / m as f64;
    for e in 0..sz {
        for p in 0..m {
            buf[p] = samples[p][e];
        }
        fft_inplace(&mut buf, dim, n, false);
        for k in 0..m {
            table[k][e] = buf[k] * scale;
        }
    }
    Ok(KernelSpectrum { dim, n, d_out, d_in, entries: table.into_iter().enumerate().collect(), hermitian: false })
}

/// How the inverse transform of a convolution result is turned into a real field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealOutput {
    /// Require a Hermitian result; error on imaginary residue.
    Strict,
    /// Keep the real part.
    RealPart,
}

/// Discrete periodic convolution `w(x) = (1/N^d) Σ_y K(x-y) v(y)` computed as
/// `ŵ(ξ) = K̂_N(ξ) v̂_N(ξ)`.
pub fn discrete_convolve(k: &KernelSpectrum, v: &GridField, mode: RealOutput) -> Result<GridField> {
    if k.dim != v.dim || k.n != v.n {
        return Err(Error::Shape(format!(
            "kernel spectrum on (d={}, N={}) applied to field on (d={}, N={})",
            k.dim, k.n, v.dim, v.n
        )));
    }
    if k.d_in != v.channels {
        return Err(Error::Shape(format!("kernel expects {} input channels, field has {}", k.d_in, v.channels)));
    }
    let vh = dft_forward(v);
    let mut w = SpectralField::zeros(v.dim, v.n, k.d_out)?;
    PackedSpectrum::new(k).apply(&vh.coeffs, &mut w.coeffs);
    match mode {
        RealOutput::Strict => dft_inverse(&w),
        RealOutput::RealPart => Ok(dft_inverse_real_part(&w)),
    }
}

/// Kernel table in contiguous split real/imaginary storage for repeated
/// application. Hermitian tables keep one frequency of each `±ξ` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedSpectrum {
    pub dim: usize,
    pub n: usize,
    pub d_out: usize,
    pub d_in: usize,
    /// `(index of ξ, index of -ξ)`; the second is written only for Hermitian tables.
    modes: Vec<(usize, usize)>,
    /// Column-major per frequency: entry `(r, c)` at `c * d_out + r`.
    re: Vec<f64>,
    im: Vec<f64>,
    hermitian: bool,
}

impl PackedSpectrum {
    pub fn new(k: &KernelSpectrum) -> Self {
        let sz = k.d_out * k.d_in;
        let mut modes = Vec::new();
        let (mut re, mut im) = (Vec::new(), Vec::new());
        for (flat, mat) in &k.entries {
            let neg = if k.hermitian { neg_index(*flat, k.dim, k.n) } else { *flat };
            if neg < *flat {
                continue;
            }
            modes.push((*flat, neg));
            for c in 0..k.d_in {
                re.extend((0..k.d_out).map(|r| mat[r * k.d_in + c].re));
                im.extend((0..k.d_out).map(|r| mat[r * k.d_in + c].im));
            }
        }
        debug_assert_eq!(re.len(), modes.len() * sz);
        PackedSpectrum { dim: k.dim, n: k.n, d_out: k.d_out, d_in: k.d_in, modes, re, im, hermitian: k.hermitian }
    }

    /// `out[ξ] = K̂(ξ) vh[ξ]` for every listed frequency (others untouched),
    /// where `vh` is the spectrum of a real field. The product of a Hermitian
    /// table with such a spectrum is Hermitian, so the mirrored half is filled
    /// by conjugation.
    pub(crate) fn apply(&self, vh: &[Complex64], out: &mut [Complex64]) {
        self.apply_batch(&[vh], &mut [out]);
    }

    /// [`PackedSpectrum::apply`] over several spectra, reading the table once.
    /// Each output sums over input channels in index order, independent of
    /// the batch size.
    pub(crate) fn apply_batch(&self, vhs: &[&[Complex64]], outs: &mut [&mut [Complex64]]) {
        let (o, i) = (self.d_out, self.d_in);
        let sz = o * i;
        let (mut yr, mut yi) = (vec![0.0; o], vec![0.0; o]);
        for (m, &(flat, neg)) in self.modes.iter().enumerate() {
            let (ar, ai) = (&self.re[m * sz..(m + 1) * sz], &self.im[m * sz..(m + 1) * sz]);
            for (vh, out) in vhs.iter().zip(outs.iter_mut()) {
                yr.iter_mut().for_each(|v| *v = 0.0);
                yi.iter_mut().for_each(|v| *v = 0.0);
                for (c, x) in vh[flat * i..(flat + 1) * i].iter().enumerate() {
                    let (cr, ci) = (&ar[c * o..(c + 1) * o], &ai[c * o..(c + 1) * o]);
                    for ((pr, pi), (a, b)) in yr.iter_mut().zip(yi.iter_mut()).zip(cr.iter().zip(ci)) {
                        *pr += a * x.re - b * x.im;
                        *pi += a * x.im + b * x.re;
                    }
                }
                for r in 0..o {
                    out[flat * o + r] = Complex64::new(yr[r], yi[r]);
                    if self.hermitian && neg != flat {
                        out[neg * o + r] = Complex64::new(yr[r], -yi[r]);
                    }
                }
            }
        }
    }
}

/// Direct `O(N^{2d})` evaluation of `(1/N^d) Σ_y K(x-y) v(y)` from real
/// kernel samples. Reference implementation for small grids.
pub fn direct_convolve(samples: &[Vec<f64>], d_out: usize, v: &GridField) -> Result<GridField> {
    let m = v.points();
    let h = v.channels;
    if samples.len() != m || samples.iter().any(|s| s.len() != d_out * h) {
        return Err(Error::Shape("kernel samples do not match the field".into()));
    }
    let n = v.n;
    let mut out = GridField::zeros(v.dim, n, d_out)?;
    for x in 0..m {
        for y in 0..m {
            let z = if v.dim == 1 {
                (x + n - y) % n
            } else {
                let (x0, x1, y0, y1) = (x / n, x % n, y / n, y % n);
                ((x0 + n - y0) % n) * n + (x1 + n - y1) % n
            };
            let kz = &samples[z];
            for r in 0..d_out {
                let mut acc = 0.0;
                for c in 0..h {
                    acc += kz[r * h + c] * v.values[y * h + c];
                }
                out.values[x * d_out + r] += acc;
            }
        }
    }
    let s = 1.0 / m as f64;
    out.values.iter_mut().for_each(|w| *w *= s);
    Ok(out)
}

/// Unnormalized grid norm `(Σ_x Σ_c |f(x,c)|²)^{1/2}`.
pub fn l2_norm(f: &GridField) -> f64 {
    f.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Grid norm scaled by `N^{-d/2}`, a Riemann approximation of the `L²(T^d)` norm.
pub fn normalized_l2_norm(f: &GridField) -> f64 {
    l2_norm(f) / (f.points() as f64).sqrt()
}

/// `(Σ_ξ (1 + ‖ξ‖²)^s Σ_c |f̂(ξ,c)|²)^{1/2}` over centered frequencies.
pub fn sobolev_norm(f: &GridField, s: f64) -> f64 {
    sobolev_norm_spectral(&dft_forward(f), s)
}

pub fn sobolev_norm_spectral(u: &SpectralField, s: f64) -> f64 {
    let h = u.channels;
    let mut acc = 0.0;
    for k in 0..u.modes() {
        let w = (1.0 + Frequency::from_flat(k, u.dim, u.n).norm_sq()).powf(s);
        let e: f64 = u.coeffs[k * h..(k + 1) * h].iter().map(|z| z.norm_sqr()).sum();
        acc += w * e;
    }
    acc.sqrt()
}

/// Trigonometric resampling to an `m`-point grid by zero-padding or
/// truncating the spectrum. The Nyquist coefficient is split evenly between
/// `±N/2` when refining and the two are summed when coarsening, so refining
/// then coarsening back is the identity.
pub fn resample(f: &GridField, m: usize) -> Result<GridField> {
    check_grid(f.dim, m)?;
    if m == f.n {
        return Ok(f.clone());
    }
    let u = dft_forward(f);
    let h = f.channels;
    let mut w = SpectralField::zeros(f.dim, m, h)?;
    let n = f.n;
    if m > n {
        let half = (n / 2) as i64;
        for k in 0..u.modes() {
            let xi = Frequency::from_flat(k, f.dim, n);
            // Axes sitting at the Nyquist index map to both ±N/2.
            let mut targets: Vec<([i64; 2], f64)> = vec![(xi.0, 1.0)];
            for a in 0..f.dim {
                if xi.0[a] == -half {
                    let mut next = Vec::with_capacity(targets.len() * 2);
                    for (t, wgt) in targets {
                        let mut p = t;
                        p[a] = half;
                        next.push((t, wgt * 0.5));
                        next.push((p, wgt * 0.5));
                    }
                    targets = next;
                }
            }
            for (t, wgt) in targets {
                let km = Frequency(t).to_flat(f.dim, m);
                for c in 0..h {
                    w.coeffs[km * h + c] += u.coeffs[k * h + c] * wgt;
                }
            }
        }
    } else {
        let half = (m / 2) as i64;
        for k in 0..u.modes() {
            let xi = Frequency::from_flat(k, f.dim, n);
            if xi.0.iter().take(f.dim).all(|&v| v >= -half && v <= half) {
                let km = Frequency(xi.0).to_flat(f.dim, m);
                for c in 0..h {
                    w.coeffs[km * h + c] += u.coeffs[k * h + c];
                }
            }
        }
    }
    Ok(dft_inverse_real_part(&w))
}

/// Coarse-to-fine interpolation used to compare states across grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Spectral zero-padding, see [`resample`].
    #[default]
    Trigonometric,
    /// Periodic piecewise-linear (bilinear in 2D).
    Linear,
    /// Nearest coarse point, ties rounding up.
    Nearest,
}

/// Interpolates `f` onto an `m`-point grid with `m` a multiple of `f.n`.
/// Every method reproduces the values at the coarse points.
pub fn refine(f: &GridField, m: usize, method: Interpolation) -> Result<GridField> {
    check_grid(f.dim, m)?;
    if method == Interpolation::Trigonometric {
        return resample(f, m);
    }
    if m < f.n || m % f.n != 0 {
        return Err(Error::Domain(format!("cannot refine N={} onto {m} points", f.n)));
    }
    let (n, r, h) = (f.n, m / f.n, f.channels);
    // Per fine index: coarse neighbours and weights along one axis.
    let stencil: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|j| {
            let (i0, w) = (j / r, (j % r) as f64 / r as f64);
            match method {
                Interpolation::Linear if w > 0.0 => vec![(i0, 1.0 - w), ((i0 + 1) % n, w)],
                Interpolation::Nearest if w >= 0.5 => vec![((i0 + 1) % n, 1.0)],
                _ => vec![(i0, 1.0)],
            }
        })
        .collect();
    let mut out = GridField::zeros(f.dim, m, h)?;
    let unit = [(0usize, 1.0)];
    for p in 0..out.points() {
        let (j0, j1) = if f.dim == 1 { (p, 0) } else { (p / m, p % m) };
        let second: &[(usize, f64)] = if f.dim == 1 { &unit } else { &stencil[j1] };
        for &(a, wa) in &stencil[j0] {
            for &(b, wb) in second {
                let q = if f.dim == 1 { a } else { a * n + b };
                for c in 0..h {
                    out.values[p * h + c] += wa * wb * f.values[q * h + c];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_keeps_coarse_values_and_orders_errors() {
        let coarse = |n| GridField::from_fn(2, n, 2, |x, c| (2.0 * PI * (x[0] + 2.0 * x[1])).sin() + c as f64).unwrap();
        let f = coarse(16);
        for method in [Interpolation::Trigonometric, Interpolation::Linear, Interpolation::Nearest] {
            let g = refine(&f, 64, method).unwrap();
            assert!(l2_norm(&g.subsample(4).unwrap().sub(&f).unwrap()) < 1e-12);
        }
        let fine = coarse(256);
        let err = |n: usize, m| l2_norm(&refine(&coarse(n), 256, m).unwrap().sub(&fine).unwrap());
        assert!(err(16, Interpolation::Trigonometric) < 1e-10);
        let lin = err(16, Interpolation::Linear) / err(32, Interpolation::Linear);
        let near = err(16, Interpolation::Nearest) / err(32, Interpolation::Nearest);
        assert!((lin - 4.0).abs() < 0.3, "linear ratio {lin}");
        assert!((near - 2.0).abs() < 0.3, "nearest ratio {near}");
    }
    use std::f64::consts::PI;

    fn naive_dft(f: &GridField) -> Vec<Complex64> {
        let m = f.points();
        let h = f.channels;
        let mut out = vec![C0; m * h];
        for k in 0..m {
            let xi = Frequency::from_flat(k, f.dim, f.n);
            for p in 0..m {
                let x = f.coords(p);
                let ph = -2.0 * PI * (xi.0[0] as f64 * x[0] + xi.0[1] as f64 * x[1]);
                let e = Complex64::new(ph.cos(), ph.sin());
                for c in 0..h {
                    out[k * h + c] += e * f.values[p * h + c];
                }
            }
        }
        out.iter().map(|z| z / m as f64).collect()
    }

    #[test]
    fn constant_field_has_only_mean_coefficient() {
        let f = GridField::new(1, 8, 1, vec![1.0; 8]).unwrap();
        let u = dft_forward(&f);
        assert!((u.coeffs[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(u.coeffs[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn cosine_splits_between_plus_and_minus_k() {
        let f = GridField::from_fn(1, 16, 1, |x, _| (2.0 * PI * 3.0 * x[0]).cos()).unwrap();
        let u = dft_forward(&f);
        assert!((u.get(Frequency([3, 0]), 0).re - 0.5).abs() < 1e-14);
        assert!((u.get(Frequency([-3, 0]), 0).re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fft_matches_naive_sum_in_two_dimensions() {
        let f = GridField::from_fn(2, 8, 2, |x, c| (3.0 * x[0] + c as f64).sin() * (x[1] * 5.0).exp()).unwrap();
        let fast = dft_forward(&f);
        let slow = naive_dft(&f);
        for (a, b) in fast.coeffs.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_restores_field() {
        let f = GridField::from_fn(2, 16, 3, |x, c| (x[0] * 7.0 + c as f64).cos() + x[1] * x[1]).unwrap();
        let g = dft_inverse(&dft_forward(&f)).unwrap();
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_spectrum_is_rejected() {
        let mut u = SpectralField::zeros(1, 8, 1).unwrap();
        u.set(Frequency([1, 0]), 0, Complex64::new(1.0, 0.0));
        assert!(matches!(dft_inverse(&u), Err(Error::Symmetry { .. })));
        assert!(u.hermitian_residue() > 0.5);
    }

    #[test]
    fn sobolev_norm_of_cosine_uses_integer_frequency() {
        let f = GridField::from_fn(1, 64, 1, |x, _| (2.0 * PI * x[0]).cos()).unwrap();
        assert!((sobolev_norm(&f, 0.0) - 0.5f64.sqrt()).abs() < 1e-12);
        // Two coefficients of 1/2 at ξ = ±1, each weighted by (1 + 1)^1.
        assert!((sobolev_norm(&f, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convolution_with_identity_spectrum_is_identity() {
        let v = GridField::from_fn(1, 32, 2, |x, c| (x[0] * 9.0).sin() + c as f64).unwrap();
        let k = KernelSpectrum::identity(1, 32, 2, 1.0).unwrap();
        let w = discrete_convolve(&k, &v, RealOutput::Strict).unwrap();
        for (a, b) in v.values.iter().zip(&w.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_convolution_matches_direct_sum() {
        let n = 16;
        let (d_out, d_in) = (2, 3);
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|p| (0..d_out * d_in).map(|e| ((p * 7 + e * 3) % 11) as f64 / 11.0 - 0.4).collect())
            .collect();
        let cs: Vec<Vec<Complex64>> =
            samples.iter().map(|s| s.iter().map(|&v| Complex64::new(v, 0.0)).collect()).collect();
        let k = spectrum_of_samples(&cs, 1, n, d_out, d_in).unwrap();
        let v = GridField::from_fn(1, n, d_in, |x, c| (x[0] * 11.0 + c as f64).sin()).unwrap();
        let fast = discrete_convolve(&k, &v, RealOutput::Strict).unwrap();
        let slow = direct_convolve(&samples, d_out, &v).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_round_trip_keeps_nyquist() {
        let f = GridField::from_fn(1, 8, 1, |x, _| (2.0 * PI * 4.0 * x[0]).cos() + x[0]).unwrap();
        let up = resample(&f, 32).unwrap();
        let back = resample(&up, 8).unwrap();
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-12);
        }
        // Refined samples at the original points are unchanged.
        let again = up.subsample(4).unwrap();
        for (a, b) in f.values.iter().zip(&again.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_grid_sizes_are_rejected() {
        assert!(GridField::zeros(1, 12, 1).is_err());
        assert!(GridField::zeros(3, 8, 1).is_err());
        assert!(GridField::new(1, 8, 2, vec![0.0; 15]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = GridField::from_fn(2, 4, 2, |x, c| x[0] - x[1] * c as f64).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(GridField::from_json_str(&s).unwrap(), f);
        assert!(GridField::from_json_str(r#"{"dim":1,"n":4,"channels":1,"values":[1,2]}"#).is_err());
    }
}
