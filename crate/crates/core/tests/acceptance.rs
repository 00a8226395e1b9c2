//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the report is always printed.
//! Criteria run sequentially so that wall-clock budgets are measured without
//! other work competing for the CPU. A criterion listed in `KNOWN_GAPS` is
//! reported but does not fail the suite.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use noperr::experiments::*;
use noperr::grid::{
    direct_convolve, discrete_convolve, dft_forward, l2_norm, spectrum_of_samples, Frequency, GridField, RealOutput,
};
use noperr::kernels::{spectral_decay_fit, DecayFit, FnoKernel, Kernel, SsnoForm, SsnoKernel};
use noperr::random_fields::keyed_rng;
use noperr::Result;

/// Criteria that are run and reported but may fail.
const KNOWN_GAPS: &[u8] = &[5, 9];

struct Outcome {
    id: u8,
    pass: bool,
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn load(name: &str) -> SweepConfig {
    SweepConfig::load(&fixture(name)).expect("fixture config parses")
}

/// Runs `check`, which returns its verdict and a detail line, and prints the
/// outcome with its runtime against `budget_s`.
fn criterion(id: u8, title: &str, budget_s: f64, check: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let t = Instant::now();
    let res = check();
    let secs = t.elapsed().as_secs_f64();
    let in_budget = secs < budget_s;
    let (pass, detail) = match res {
        Ok((ok, d)) => (ok && in_budget, d),
        Err(e) => (false, format!("error: {e}")),
    };
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict}  {title}: {detail} [{secs:.1}s of {budget_s:.0}s]");
    Outcome { id, pass }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn c1_spectral_exactness() -> Result<(bool, String)> {
    let mut rng = keyed_rng(0xACC1, 0);
    let (mut worst_parseval, mut worst_conv): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let dim = rng.gen_range(1..=2);
        let n = 1usize << rng.gen_range(1..=5);
        let (h, o) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let m = n.pow(dim as u32);
        let v = GridField::new(dim, n, h, (0..m * h).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let vh = dft_forward(&v);
        let energy: f64 = v.values.iter().map(|x| x * x).sum();
        let spectral: f64 = vh.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() * m as f64;
        worst_parseval = worst_parseval.max(rel_diff(energy, spectral));

        let samples: Vec<Vec<f64>> = (0..m).map(|_| (0..o * h).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let complex: Vec<Vec<Complex64>> =
            samples.iter().map(|s| s.iter().map(|x| Complex64::new(*x, 0.0)).collect()).collect();
        let table = spectrum_of_samples(&complex, dim, n, o, h)?;
        let fast = discrete_convolve(&table, &v, RealOutput::Strict)?;
        let slow = direct_convolve(&samples, o, &v)?;
        worst_conv = worst_conv.max(l2_norm(&fast.sub(&slow)?) / l2_norm(&slow).max(1e-300));
    }
    Ok((
        worst_parseval <= 1e-10 && worst_conv <= 1e-10,
        format!("max rel Parseval defect {worst_parseval:.1e}, max rel FFT vs direct {worst_conv:.1e}"),
    ))
}

/// Midpoint rule with `panels` cells on `[-1/2, 1/2)`; the kernel's jump at
/// the origin falls on a cell boundary.
fn quadrature_coeffs(k: &SsnoKernel, freqs: &[i64], panels: usize) -> Vec<Vec<Complex64>> {
    let len = k.d_out * k.d_in;
    let mut acc = vec![vec![Complex64::new(0.0, 0.0); len]; freqs.len()];
    let h = 1.0 / panels as f64;
    for j in 0..panels {
        let z = -0.5 + (j as f64 + 0.5) * h;
        let kz = k.eval([z, 0.0]);
        for (a, &f) in acc.iter_mut().zip(freqs) {
            let w = Complex64::from_polar(h, -2.0 * PI * f as f64 * z);
            a.iter_mut().zip(&kz).for_each(|(s, v)| *s += v * w);
        }
    }
    acc
}

fn c2_ssno_coefficients() -> Result<(bool, String)> {
    let freqs = [0, 1, -1, 7, -7, 63, -63];
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = keyed_rng(0xACC2, seed);
        let (modes, o, i) = (rng.gen_range(1..=4), rng.gen_range(1..=3), rng.gen_range(1..=3));
        let k = SsnoKernel::random(1, modes, o, i, SsnoForm::Sum, seed)?;
        let quad = quadrature_coeffs(&k, &freqs, 1 << 16);
        for (f, q) in freqs.iter().zip(&quad) {
            let exact = k.fourier_coeff(Frequency([*f, 0]));
            for (a, b) in exact.iter().zip(q) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok((worst <= 1e-3, format!("max abs deviation from 2^16-panel quadrature {worst:.2e} over 50 draws")))
}

fn c3_kernel_regimes() -> Result<(bool, String)> {
    let mut alphas = Vec::new();
    for seed in 0..10u64 {
        let k = Kernel::Ssno(SsnoKernel::random(1, 16, 4, 4, SsnoForm::Sum, seed)?);
        match spectral_decay_fit(&k, 64, 2048)? {
            DecayFit::PowerLaw { alpha, .. } => alphas.push(alpha),
            DecayFit::Cutoff { .. } => alphas.push(f64::NAN),
        }
    }
    let ssno_ok = alphas.iter().all(|a| (0.8..=1.2).contains(a));
    let modes = 16i64;
    let fno1 = FnoKernel::random(1, modes as usize, 4, 4, 1)?;
    let fno2 = FnoKernel::random(2, modes as usize, 2, 2, 2)?;
    let mut beyond_nonzero = 0usize;
    let mut inside_nonzero = 0usize;
    for f in -2048..=2048i64 {
        let c = fno1.fourier_coeff(Frequency([f, 0]));
        let nz = c.iter().any(|z| *z != Complex64::new(0.0, 0.0));
        if f.abs() > modes {
            beyond_nonzero += nz as usize;
        } else {
            inside_nonzero += nz as usize;
        }
    }
    for a in -64..=64i64 {
        for b in -64..=64i64 {
            if a.abs().max(b.abs()) > modes {
                let c = fno2.fourier_coeff(Frequency([a, b]));
                beyond_nonzero += c.iter().any(|z| *z != Complex64::new(0.0, 0.0)) as usize;
            }
        }
    }
    let reported = spectral_decay_fit(&Kernel::Fno(fno1), 0, 2048)?;
    let fno_ok = beyond_nonzero == 0 && inside_nonzero > 0 && reported == DecayFit::Cutoff { index: modes };
    let (lo, hi) = alphas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), a| (l.min(*a), h.max(*a)));
    Ok((
        ssno_ok && fno_ok,
        format!(
            "SS-NO alpha in [{lo:.3}, {hi:.3}] over 10 kernels; FNO nonzero coefficients beyond K={modes}: {beyond_nonzero}"
        ),
    ))
}

fn slope(c: &ErrorCurve) -> f64 {
    c.fit.map_or(f64::NAN, |f| f.slope)
}

fn c4_discretization_decay() -> Result<(bool, String)> {
    let r = run_discretization_sweep(&load("sweep1d.json"))?;
    let by_s = |s: f64| r.curves.iter().find(|c| c.s == s).expect("smoothness swept");
    let (c1, c2, c4) = (by_s(1.0), by_s(2.0), by_s(4.0));
    let decreasing = r.curves.iter().all(|c| c.points.windows(2).all(|w| w[1].mean_rel_err < w[0].mean_rel_err));
    let (s1, s2, s4) = (slope(c1), slope(c2), slope(c4));
    let ordered = s4 <= s2 + 0.2 && s2 <= s1 + 0.2;
    Ok((
        decreasing && s2 <= -1.0 && ordered,
        format!("strictly decreasing {decreasing}; slopes s=1 {s1:.3}, s=2 {s2:.3}, s=4 {s4:.3}"),
    ))
}

fn c5_relu_saturation() -> Result<(bool, String)> {
    let r = run_discretization_sweep(&load("relu_sweep1d.json"))?;
    let c = &r.curves[0];
    let (first, last) = decade_slopes(&c.resolutions(), &c.mean_rel_errs())?;
    let flattening = last - first;
    Ok((
        flattening >= 0.3,
        format!("s=4 first-decade slope {first:.3}, last-decade slope {last:.3}, flattening {flattening:.3} (need >= 0.3)"),
    ))
}

fn c6_bound_dominance() -> Result<(bool, String)> {
    let mut cal = load("sweep1d.json");
    cal.discretization.smoothness = vec![2.0];
    cal.seed = 0;
    cal.samples = 20;
    let calibration = run_discretization_sweep(&cal)?;
    let cds = calibrate_cds_curves(&calibration.curves)?;
    let mut test = cal.clone();
    test.seed = 1;
    test.samples = 10;
    let held_out = run_discretization_sweep(&test)?;
    let curve = &held_out.curves[0];
    let worst = curve.samples.iter().map(|s| s.grid_err / (cds * s.bound_unit)).fold(0.0, f64::max);
    let beta = curve.bound.as_ref().map_or(f64::NAN, |b| b.beta);
    let grid_slope = curve.grid_fit.map_or(f64::NAN, |f| f.slope);
    let rate_ok = grid_slope.abs() >= beta.abs() - 0.4;
    Ok((
        worst <= 1.0 && rate_ok,
        format!(
            "C_ds={cds:.3e} from seed set 0; held-out max error/bound {worst:.3} over {} points; grid slope {grid_slope:.3} vs beta {beta:.3}",
            curve.samples.len()
        ),
    ))
}

fn c7_stability() -> Result<(bool, String)> {
    let c = run_stability_sweep(&load("stability1d.json"))?;
    let lip = c.empirical_lipschitz.unwrap_or(f64::INFINITY);
    Ok((
        c.fit.r2 >= 0.99 && c.fit.slope <= c.c_nt && lip <= c.c_nt,
        format!("r2 {:.6}, slope {:.4}, empirical Lipschitz {lip:.4}, C_NT {:.4}", c.fit.r2, c.fit.slope, c.c_nt),
    ))
}

fn c8_depth_sweep() -> Result<(bool, String)> {
    let r = run_depth_sweep(&load("depth1d.json"))?;
    let mut ok = r.curves.len() == 4;
    let mut parts = Vec::new();
    for c in &r.curves {
        let lip = c.empirical_lipschitz.unwrap_or(f64::INFINITY);
        ok &= lip <= c.c_nt && c.max_response_ratio <= c.c_nt && c.max_err_at_largest_eps.is_finite();
        parts.push(format!("T={} L {lip:.3e} / C {:.3e}", c.depth, c.c_nt));
    }
    Ok((ok, parts.join("; ")))
}

fn c9_nyquist() -> Result<(bool, String)> {
    let r = run_nyquist_stress(&load("nyquist1d.json"))?;
    let curve = |k: usize| r.curves.iter().find(|c| c.k == k).expect("wavenumber swept");
    let high = curve(64);
    let ratio = high.error_at(16).unwrap_or(f64::NAN) / high.error_at(256).unwrap_or(f64::NAN);
    let fit = curve(4).fit_from(64)?;
    Ok((
        ratio >= 10.0 && fit.slope < 0.0 && fit.r2 > 0.9,
        format!("k=64 error ratio L=16/L=256 {ratio:.2}; k=4 slope {:.3} r2 {:.4} for L >= 64", fit.slope, fit.r2),
    ))
}

fn c10_iss() -> Result<(bool, String)> {
    let r = run_iss_check(&load("iss1d.json"))?;
    let checked: Vec<&IssRecord> = r.records.iter().filter(|x| x.delta > 0.0).collect();
    let seeds = checked.iter().map(|x| x.sample).collect::<std::collections::BTreeSet<_>>().len();
    let worst = checked.iter().map(|x| x.total_err / x.bound).fold(0.0, f64::max);
    Ok((
        seeds == 10 && checked.iter().all(|x| x.dominated),
        format!("{} records over {seeds} seeds, max error/bound {worst:.3}, C_ds {:.3e}, C_NT {:.3}", checked.len(), r.cds, r.c_nt),
    ))
}

fn c11_grf() -> Result<(bool, String)> {
    let r = run_grf_check(&load("grf_check1d.json"))?;
    let ok = r.rows.len() == 3 && r.rows.iter().all(|x| x.alphas.len() == 50 && (x.mean_alpha - x.alpha_target).abs() <= 0.3);
    let parts: Vec<String> =
        r.rows.iter().map(|x| format!("s={} alpha {:.3} (target {})", x.s, x.mean_alpha, x.alpha_target)).collect();
    Ok((ok, parts.join("; ")))
}

fn c12_determinism() -> Result<(bool, String)> {
    let mut same = true;
    let mut names = Vec::new();
    for (name, csv) in [("sweep1d.json", "discretization.csv"), ("kernel_check1d.json", "kernel_check.csv")] {
        let cfg = load(name);
        let (a, b) = (tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir"));
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
        one.install(|| run_experiment(&cfg, a.path(), false))?;
        run_experiment(&cfg, b.path(), false)?;
        let read = |d: &Path| std::fs::read(d.join(csv)).expect("csv written");
        same &= read(a.path()) == read(b.path());
        names.push(name);
    }
    Ok((same, format!("byte-identical CSVs across repeated runs of {}", names.join(", "))))
}

fn main() {
    let outcomes = vec![
        criterion(1, "spectral machinery exactness", 10.0, c1_spectral_exactness),
        criterion(2, "analytic SS-NO coefficients", 30.0, c2_ssno_coefficients),
        criterion(3, "kernel spectral regimes", 10.0, c3_kernel_regimes),
        criterion(4, "discretization decay", 300.0, c4_discretization_decay),
        criterion(5, "ReLU saturation", 300.0, c5_relu_saturation),
        criterion(6, "bound dominance", 300.0, c6_bound_dominance),
        criterion(7, "stability linearity and dominance", 120.0, c7_stability),
        criterion(8, "depth sweep", 300.0, c8_depth_sweep),
        criterion(9, "Nyquist stress", 120.0, c9_nyquist),
        criterion(10, "ISS composite", 180.0, c10_iss),
        criterion(11, "GRF construction", 60.0, c11_grf),
        criterion(12, "determinism", 60.0, c12_determinism),
    ];
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    let unexpected: Vec<u8> = outcomes.iter().filter(|o| !o.pass && !KNOWN_GAPS.contains(&o.id)).map(|o| o.id).collect();
    if !unexpected.is_empty() {
        eprintln!("failing criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
