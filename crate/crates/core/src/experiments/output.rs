use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::*;
use crate::error::{Error, Result};
use crate::plot::{render_panels, Figure, Series};

pub const DISCRETIZATION_HEADER: &str = "experiment,seed,s,activation,N,mean_rel_err,std_rel_err,n_samples";
pub const STABILITY_HEADER: &str = "experiment,seed,T,epsilon,mean_err,std_err";
pub const NYQUIST_HEADER: &str = "k,L,mean_rel_err,std_rel_err";
pub const ISS_HEADER: &str = "seed,sample,delta,total_err,bound,dominated";
pub const GRF_HEADER: &str = "seed,s,alpha_target,mean_alpha,std_alpha,n_samples";
pub const KERNEL_HEADER: &str = "layer,family,N,l2,bound";

/// Files written by a run and any bound violations found in its records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    pub violations: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a, R: Serialize> {
    experiment: &'static str,
    config: &'a SweepConfig,
    result: &'a R,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibrated_cds: Option<f64>,
}

pub fn discretization_csv(r: &DiscretizationResult) -> String {
    let mut s = format!("{DISCRETIZATION_HEADER}\n");
    for c in &r.curves {
        for p in &c.points {
            let _ = writeln!(
                s,
                "discretization,{},{},{},{},{},{},{}",
                r.seed, c.s, c.activation, p.n, p.mean_rel_err, p.std_rel_err, p.n_samples
            );
        }
    }
    s
}

pub fn stability_csv(experiment: &str, seed: u64, curves: &[PerturbationCurve]) -> String {
    let mut s = format!("{STABILITY_HEADER}\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(s, "{experiment},{seed},{},{},{},{}", c.depth, p.epsilon, p.mean_err, p.std_err);
        }
    }
    s
}

pub fn nyquist_csv(r: &NyquistResult) -> String {
    let mut s = format!("{NYQUIST_HEADER}\n");
    for c in &r.curves {
        for p in &c.points {
            let _ = writeln!(s, "{},{},{},{}", c.k, p.l, p.mean_rel_err, p.std_rel_err);
        }
    }
    s
}

pub fn iss_csv(r: &IssReport) -> String {
    let mut s = format!("{ISS_HEADER}\n");
    for x in &r.records {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.seed, x.sample, x.delta, x.total_err, x.bound, x.dominated);
    }
    s
}

fn grf_csv(r: &GrfCheck) -> String {
    let mut s = format!("{GRF_HEADER}\n");
    for x in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.seed,
            x.s,
            x.alpha_target,
            x.mean_alpha,
            x.std_alpha,
            x.alphas.len()
        );
    }
    s
}

fn kernel_csv(r: &KernelCheck) -> String {
    let mut s = format!("{KERNEL_HEADER}\n");
    for x in &r.rows {
        for g in &x.grid_norms {
            let _ = writeln!(s, "{},{},{},{},{}", x.layer, x.family, g.n, g.l2, g.bound);
        }
    }
    s
}

pub fn discretization_figure(r: &DiscretizationResult, cds: f64) -> String {
    let mut fig = Figure::new("Relative error vs resolution", "N", "RelErr").loglog();
    for c in &r.curves {
        let pts = c.points.iter().filter(|p| p.mean_rel_err > 0.0).map(|p| (p.n as f64, p.mean_rel_err)).collect();
        fig = fig.with(Series::new(format!("{} s={}", c.activation, c.s), pts));
    }
    let mut grid = Figure::new("Grid error and calibrated bound", "N", "‖E‖").loglog();
    for c in &r.curves {
        let label = format!("{} s={}", c.activation, c.s);
        grid = grid
            .with(Series::new(label.clone(), c.points.iter().map(|p| (p.n as f64, p.mean_grid_err)).collect()))
            .with(Series::dashed(
                format!("bound {label}"),
                c.points.iter().map(|p| (p.n as f64, cds * p.mean_bound_unit)).collect(),
            ));
    }
    render_panels(&[fig, grid], 2)
}

pub fn perturbation_figure(curves: &[PerturbationCurve]) -> String {
    let figs: Vec<Figure> = curves
        .iter()
        .map(|c| {
            let top = c.points.last().map(|p| p.epsilon).unwrap_or(0.0);
            Figure::new(format!("T={}", c.depth), "epsilon", "f(epsilon)")
                .with(Series::new("mean f", c.points.iter().map(|p| (p.epsilon, p.mean_err)).collect()))
                .with(Series::dashed("C_NT eps", vec![(0.0, 0.0), (top, c.c_nt * top)]))
        })
        .collect();
    render_panels(&figs, 2)
}

pub fn nyquist_figure(r: &NyquistResult) -> String {
    let figs: Vec<Figure> = r
        .curves
        .iter()
        .map(|c| {
            let mut f = Figure::new(format!("k={}", c.k), "L", "RelErr")
                .loglog()
                .with(Series::new("mean", c.points.iter().map(|p| (p.l as f64, p.mean_rel_err)).collect()));
            f.vlines.push((c.nyquist_l as f64, "L=2k".into()));
            f
        })
        .collect();
    render_panels(&figs, 3)
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn summary<R: Serialize>(cfg: &SweepConfig, result: &R, cds: Option<f64>) -> Result<String> {
    let s = Summary { experiment: cfg.experiment.name(), config: cfg, result, calibrated_cds: cds };
    Ok(serde_json::to_string_pretty(&s)? + "\n")
}

fn curve_violations(c: &PerturbationCurve, out: &mut Vec<String>) {
    let t = c.depth;
    if c.fit.slope > c.c_nt {
        out.push(format!("T={t}: fitted slope {} exceeds C_NT {}", c.fit.slope, c.c_nt));
    }
    if c.max_response_ratio > c.c_nt {
        out.push(format!("T={t}: response ratio {} exceeds C_NT {}", c.max_response_ratio, c.c_nt));
    }
    if let Some(l) = c.empirical_lipschitz.filter(|l| *l > c.c_nt) {
        out.push(format!("T={t}: empirical Lipschitz {l} exceeds C_NT {}", c.c_nt));
    }
}

/// Runs the configured experiment and writes its CSV, JSON summary and,
/// when `plot` is set, SVG figure into `dir`.
pub fn run_experiment(cfg: &SweepConfig, dir: &Path, plot: bool) -> Result<RunArtifacts> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut a = RunArtifacts::default();
    let files = &mut a.files;
    match cfg.experiment {
        ExperimentKind::Discretization => {
            let r = run_discretization_sweep(cfg)?;
            let cal = Calibration {
                cds: calibrate_cds_curves(&r.curves)?,
                seed: cfg.seed,
                points: r.curves.iter().map(|c| c.samples.len()).sum(),
            };
            write_file(dir, "discretization.csv", &discretization_csv(&r), files)?;
            write_file(dir, "calibration.json", &(serde_json::to_string_pretty(&cal)? + "\n"), files)?;
            write_file(dir, "summary.json", &summary(cfg, &r, Some(cal.cds))?, files)?;
            if plot {
                write_file(dir, "discretization.svg", &discretization_figure(&r, cal.cds), files)?;
            }
        }
        ExperimentKind::Stability => {
            let r = run_stability_sweep(cfg)?;
            curve_violations(&r, &mut a.violations);
            let curves = std::slice::from_ref(&r);
            write_file(dir, "stability.csv", &stability_csv("stability", cfg.seed, curves), files)?;
            write_file(dir, "summary.json", &summary(cfg, &r, None)?, files)?;
            if plot {
                write_file(dir, "stability.svg", &perturbation_figure(curves), files)?;
            }
        }
        ExperimentKind::Depth => {
            let r = run_depth_sweep(cfg)?;
            r.curves.iter().for_each(|c| curve_violations(c, &mut a.violations));
            write_file(dir, "depth.csv", &stability_csv("depth", cfg.seed, &r.curves), files)?;
            write_file(dir, "summary.json", &summary(cfg, &r, None)?, files)?;
            if plot {
                write_file(dir, "depth.svg", &perturbation_figure(&r.curves), files)?;
            }
        }
        ExperimentKind::Nyquist => {
            let r = run_nyquist_stress(cfg)?;
            write_file(dir, "nyquist.csv", &nyquist_csv(&r), files)?;
            write_file(dir, "summary.json", &summary(cfg, &r, None)?, files)?;
            if plot {
                write_file(dir, "nyquist.svg", &nyquist_figure(&r), files)?;
            }
        }
        ExperimentKind::Iss => {
            let r = run_iss_check(cfg)?;
            for x in r.records.iter().filter(|x| !x.dominated) {
                a.violations.push(format!(
                    "sample {} delta {}: total error {} exceeds bound {}",
                    x.sample, x.delta, x.total_err, x.bound
                ));
            }
            write_file(dir, "iss.csv", &iss_csv(&r), files)?;
            write_file(dir, "summary.json", &summary(cfg, &r, Some(r.cds))?, files)?;
        }
        ExperimentKind::GrfCheck => {
            let r = run_grf_check(cfg)?;
            write_file(dir, "grf_check.csv", &grf_csv(&r), files)?;
            write_file(dir, "summary.json", &summary(cfg, &r, None)?, files)?;
        }
        ExperimentKind::KernelCheck => {
            let r = run_kernel_check(cfg)?;
            for x in &r.rows {
                for g in x.grid_norms.iter().filter(|g| g.l2 > g.bound) {
                    a.violations.push(format!("layer {} N={}: grid norm {} exceeds bound {}", x.layer, g.n, g.l2, g.bound));
                }
            }
            write_file(dir, "kernel_check.csv", &kernel_csv(&r), files)?;
            write_file(dir, "summary.json", &summary(cfg, &r, None)?, files)?;
        }
    }
    Ok(a)
}
