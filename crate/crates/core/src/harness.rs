//! Experiment runners behind the command-line tool.
//!
//! Every run writes its artifacts and a `manifest.json` (config echo plus
//! SHA-256 of each artifact) into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bdg::{
    curve_to_csv, locate_threshold, stability_curve, stability_scan_modes, ScanSettings,
    StabilityReport,
};
use crate::collocation::{
    multi_bump_guess, profile_guess, solve_stationary, thomas_fermi_guess, zero_guess, BvpState,
    RadialProfile,
};
use crate::config::{ExperimentConfig, Kind};
use crate::continuation::{fold_report, trace_branch, ContinuationSettings};
use crate::diagnostics::{chemical_potential_integral, mass_balance, vortex_census, VortexCensus};
use crate::error::{Error, Result};
use crate::mesh::RadialMesh;
use crate::splitstep::{evolve_with, series_to_csv, EvolveOptions, Field2D, StepPlan};

/// Exit codes of the command-line tool.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn exit_code(result: &Result<RunReport>) -> i32 {
    match result {
        Ok(_) => EXIT_OK,
        Err(e) if e.is_usage() => EXIT_USAGE,
        Err(_) => EXIT_NUMERICAL,
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    /// Human-readable summary lines, also written to `run.log`.
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

struct Output {
    dir: PathBuf,
    report: RunReport,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            report: RunReport::default(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.report.artifacts.push(path.clone());
        Ok(path)
    }

    fn line(&mut self, s: impl Into<String>) {
        self.report.lines.push(s.into());
    }

    fn warn(&mut self, s: impl Into<String>) {
        self.report.warnings.push(s.into());
    }

    fn finish(mut self, config: &ExperimentConfig) -> Result<RunReport> {
        let mut log = String::new();
        for w in &self.report.warnings {
            let _ = writeln!(log, "warning: {w}");
        }
        for l in &self.report.lines {
            let _ = writeln!(log, "{l}");
        }
        self.write("run.log", &log)?;
        let mut artifacts = Vec::new();
        for path in &self.report.artifacts {
            let bytes = fs::read(path)?;
            let rel = path.strip_prefix(&self.dir).unwrap_or(path);
            artifacts.push(json!({
                "path": rel.to_string_lossy(),
                "sha256": hex(&Sha256::digest(&bytes)),
                "bytes": bytes.len(),
            }));
        }
        let p = &config.params;
        let manifest = json!({
            "tool": "cgpe",
            "version": env!("CARGO_PKG_VERSION"),
            "kind": config.kind.name(),
            "preset": config.preset.name(),
            "seed": config.seed,
            "params": {
                "alpha": p.alpha, "sigma": p.sigma, "R": p.pump_radius, "kappa": p.kappa, "b": p.b,
                "trap": config.file.trap.clone().unwrap_or_else(|| "harmonic".into()),
            },
            "config": config.file,
            "artifacts": artifacts,
        });
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(self.report)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Dispatch on the config's kind.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    match config.kind {
        Kind::Stationary => run_stationary(config),
        Kind::Stability => run_stability(config),
        Kind::Curve => run_curve(config),
        Kind::Continue => run_continue(config),
        Kind::Evolve => run_evolve(config),
        Kind::Census => run_census(config),
    }
}

fn initial_guess(
    config: &ExperimentConfig,
    spec: Option<&str>,
    out: &mut Output,
) -> Result<BvpState> {
    let params = &config.params;
    let mesh = RadialMesh::uniform(params.b, config.intervals())?;
    if params.alpha == 0.0 {
        out.warn("alpha = 0: the only stationary state is the trivial one");
        return Ok(zero_guess(params, mesh));
    }
    match spec.unwrap_or("thomas-fermi") {
        "thomas-fermi" => thomas_fermi_guess(params, mesh),
        "zero" => Ok(zero_guess(params, mesh)),
        other => {
            if let Some(n) = other.strip_prefix("multi-bump:") {
                let n = n
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad bump count in '{other}'")))?;
                multi_bump_guess(params, mesh, n)
            } else if let Some(p) = other.strip_prefix("file:") {
                let stored = RadialProfile::read_csv(&config.path(Path::new(p)))?;
                profile_guess(params, mesh, &stored)
            } else {
                Err(Error::invalid(format!("unknown guess '{other}'")))
            }
        }
    }
}

fn solve(
    config: &ExperimentConfig,
    winding: u32,
    guess: Option<&str>,
    out: &mut Output,
) -> Result<RadialProfile> {
    let guess = initial_guess(config, guess, out)?;
    solve_stationary(&config.params, &guess, winding)
}

fn describe_profile(profile: &RadialProfile) -> Result<String> {
    let identity = if profile.peak_density() > 0.0 {
        format!("{:.10}", chemical_potential_integral(profile)?)
    } else {
        "n/a".into()
    };
    Ok(format!(
        "mu = {:.10}, residual = {:.3e}, mass balance = {:.3e}, mu (integral identity) = {identity}, peak density = {:.6}",
        profile.mu,
        profile.residual_norm,
        mass_balance(profile),
        profile.peak_density()
    ))
}

pub fn run_stationary(config: &ExperimentConfig) -> Result<RunReport> {
    let mut out = Output::new(&config.out)?;
    let s = &config.file.stationary;
    let winding = s.winding.unwrap_or(0);
    let profile = solve(config, winding, s.guess.as_deref(), &mut out)?;
    out.write("profile.csv", &profile.to_csv_string())?;
    out.line(format!(
        "stationary R = {} m = {winding}: {}",
        config.params.pump_radius,
        describe_profile(&profile)?
    ));
    out.finish(config)
}

fn scan_settings(config: &ExperimentConfig, n_grid: Option<usize>) -> ScanSettings {
    ScanSettings {
        n_grid: n_grid.unwrap_or(config.preset.bdg_grid()),
        ..ScanSettings::default()
    }
}

fn report_csv(report: &StabilityReport) -> String {
    let mut s = String::from("m,re_omega,im_omega\n");
    for mode in &report.modes {
        for w in &mode.leading {
            let _ = writeln!(s, "{},{:.12e},{:.12e}", mode.mode, w.re, w.im);
        }
    }
    s
}

pub fn run_stability(config: &ExperimentConfig) -> Result<RunReport> {
    let mut out = Output::new(&config.out)?;
    let s = &config.file.stability;
    let (m_min, m_max) = (s.m_min.unwrap_or(1), s.m_max.unwrap_or(50));
    if m_min > m_max {
        return Err(Error::invalid(format!(
            "empty mode range {m_min}..={m_max}"
        )));
    }
    let profile = match &s.profile {
        Some(p) => RadialProfile::read_csv(&config.path(p))?,
        None => solve(config, s.winding.unwrap_or(0), None, &mut out)?,
    };
    let modes: Vec<u32> = (m_min..=m_max).collect();
    let report = stability_scan_modes(&profile, &modes, scan_settings(config, s.n_grid))?;
    out.write("stability.csv", &report.to_csv_string())?;
    out.write("eigenvalues.csv", &report_csv(&report))?;
    out.line(format!(
        "stability R = {} m = {}: modes {m_min}..={m_max}, max Im omega = {:.6e} (mode {}), verdict {}",
        profile.params.pump_radius,
        profile.winding,
        report.max_im,
        report.dominant_mode().unwrap_or(0),
        report.verdict()
    ));
    out.finish(config)
}

/// Pump radii scanned by default.
fn default_radii() -> Vec<f64> {
    (1..=18).map(|i| 0.5 * i as f64).collect()
}

pub fn run_curve(config: &ExperimentConfig) -> Result<RunReport> {
    let mut out = Output::new(&config.out)?;
    let c = &config.file.curve;
    let radii = c.radii.clone().unwrap_or_else(default_radii);
    if radii.is_empty() {
        return Err(Error::invalid("no pump radii given"));
    }
    let m_max = c.m_max.unwrap_or(50);
    if m_max == 0 {
        return Err(Error::invalid("empty mode range"));
    }
    let settings = scan_settings(config, c.n_grid);
    let width = c.threshold_width.unwrap_or(0.05);
    let curve = stability_curve(&config.params, &radii, m_max, settings)?;
    out.write("curve.csv", &curve_to_csv(&curve))?;
    let mut brackets = Vec::new();
    match c.threshold {
        Some([stable, unstable]) => brackets.push((stable, unstable)),
        None => {
            for w in curve.windows(2) {
                if let (Some(a), Some(b)) = (w[0].max_im, w[1].max_im) {
                    let stable = |v: f64| v < crate::bdg::NEUTRAL_TOLERANCE;
                    if stable(a) != stable(b) {
                        let (s, u) = if stable(a) {
                            (w[0].pump_radius, w[1].pump_radius)
                        } else {
                            (w[1].pump_radius, w[0].pump_radius)
                        };
                        brackets.push((s, u));
                    }
                }
            }
        }
    }
    let mut csv = String::from("stable_R,unstable_R,estimate\n");
    for (s, u) in brackets {
        let (lo, hi) = locate_threshold(&config.params, s, u, width, m_max, settings)?;
        let _ = writeln!(csv, "{lo:.6},{hi:.6},{:.6}", 0.5 * (lo + hi));
        out.line(format!(
            "threshold between R = {lo:.4} (stable) and R = {hi:.4} (unstable)"
        ));
    }
    out.write("thresholds.csv", &csv)?;
    for p in &curve {
        match p.max_im {
            Some(v) => out.line(format!("R = {}: max Im omega = {v:.6e}", p.pump_radius)),
            None => out.line(format!("R = {}: stationary solve failed", p.pump_radius)),
        }
    }
    out.finish(config)
}

fn default_range(parameter: crate::collocation::Parameter) -> (f64, f64) {
    use crate::collocation::Parameter::*;
    match parameter {
        Sigma => (0.1, 1.0),
        PumpRadius => (2.0, 10.0),
        Alpha => (1.0, 10.0),
    }
}

pub fn run_continue(config: &ExperimentConfig) -> Result<RunReport> {
    let mut out = Output::new(&config.out)?;
    let c = &config.file.continuation;
    let parameter = config.continuation_parameter()?;
    let range = c
        .range
        .map(|[a, b]| (a, b))
        .unwrap_or_else(|| default_range(parameter));
    let nu_max = c.nu_max.unwrap_or(config.preset.nu_max());
    let settings = ContinuationSettings {
        nu_max,
        nu_initial: nu_max,
        max_points: c
            .max_points
            .unwrap_or(ContinuationSettings::default().max_points),
        ..ContinuationSettings::default()
    };
    let start = solve(config, c.winding.unwrap_or(0), c.guess.as_deref(), &mut out)?;
    let (sys, branch) = trace_branch(&start, parameter, range, &settings)?;
    out.write("branch.csv", &branch.to_csv_string())?;
    let folds = fold_report(&sys, &branch, &settings)?;
    let mut csv = String::from("lambda,bracket_lo,bracket_hi\n");
    for f in &folds {
        let _ = writeln!(
            csv,
            "{:.12e},{:.12e},{:.12e}",
            f.lambda, f.bracket.0, f.bracket.1
        );
    }
    out.write("folds.csv", &csv)?;
    let worst = branch
        .points
        .iter()
        .map(|p| p.residual_norm)
        .fold(0.0, f64::max);
    out.line(format!(
        "continuation in {} over [{}, {}]: {} points, {} folds, worst residual {worst:.2e}, termination {:?}",
        parameter.name(),
        range.0,
        range.1,
        branch.points.len(),
        folds.len(),
        branch.termination
    ));
    out.finish(config)
}

/// Largest divisor of `steps` not exceeding `target`.
fn cadence(steps: usize, target: usize) -> usize {
    (1..=target.clamp(1, steps))
        .rev()
        .find(|d| steps % d == 0)
        .unwrap_or(1)
}

pub fn initial_field(config: &ExperimentConfig, out_warnings: &mut Vec<String>) -> Result<Field2D> {
    let e = &config.file.evolve;
    let n = e.grid.unwrap_or(config.preset.grid());
    let half = e.half_width.unwrap_or(15.0);
    let spec = e.initial.as_deref().unwrap_or("oscillator");
    let mut field = match spec {
        "oscillator" => Field2D::oscillator_ground_state(n, half)?,
        "stationary" => {
            let mut scratch = Output {
                dir: config.out.clone(),
                report: RunReport::default(),
            };
            let profile = solve(config, e.winding.unwrap_or(0), None, &mut scratch)?;
            out_warnings.extend(scratch.report.warnings);
            if profile.radius() < half * std::f64::consts::SQRT_2 {
                out_warnings
                    .push("field corners lie beyond the radial domain and start at zero".into());
            }
            Field2D::from_profile(&profile, n, n, [-half, half, -half, half])?
        }
        other => match other.strip_prefix("file:") {
            Some(p) => Field2D::load(&config.path(Path::new(p)))?,
            None => {
                return Err(Error::invalid(format!(
                    "unknown initial condition '{other}'"
                )))
            }
        },
    };
    let noise = e.noise.unwrap_or(1e-10);
    if noise > 0.0 {
        field.add_noise(noise, config.seed);
    }
    Ok(field)
}

pub fn run_evolve(config: &ExperimentConfig) -> Result<RunReport> {
    let mut out = Output::new(&config.out)?;
    let e = &config.file.evolve;
    let mut warnings = Vec::new();
    let field = initial_field(config, &mut warnings)?;
    for w in warnings {
        out.warn(w);
    }
    let tau = e.tau.unwrap_or(config.preset.tau());
    let t_final = e.t_final.unwrap_or(150.0);
    let steps = (t_final / tau).round().max(1.0) as usize;
    let every = e
        .snapshot_every
        .unwrap_or_else(|| cadence(steps, (1.0 / tau).round() as usize));
    let options = EvolveOptions::for_duration(tau, t_final, every)?;
    let plan = StepPlan::new(&config.params, &field, tau)?;
    let snap_dir = config.out.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut index = 0usize;
    let mut written = Vec::new();
    let summary = evolve_with(&field, &plan, options, |f| {
        let path = snap_dir.join(format!("snap_{index:06}.bin"));
        f.save(&path)?;
        written.push(path);
        index += 1;
        Ok(())
    })?;
    out.report.artifacts.extend(written);
    out.write("series.csv", &series_to_csv(&summary.series))?;
    let fin = &summary.final_field;
    let census = vortex_census(
        fin,
        relative_floor(config) * fin.max_density().max(f64::MIN_POSITIVE),
    )?;
    out.write("final_census.csv", &census.to_csv_string())?;
    let last = summary.series.last().copied();
    out.line(format!(
        "evolve {}x{} tau = {tau} to t = {:.4}: {} steps, {} snapshots, final mass = {:.10e}, worst growth ratio = {:.15}, bound violations = {}, final vortices = {} (total winding {})",
        fin.nx,
        fin.ny,
        fin.time,
        options.steps,
        index,
        last.map(|r| r.mass).unwrap_or(f64::NAN),
        summary.worst_growth_ratio,
        summary.bound_violations,
        census.len(),
        census.total_winding()
    ));
    let report = out.finish(config)?;
    if summary.bound_violations > 0 {
        return Err(Error::NormBound {
            violations: summary.bound_violations,
        });
    }
    Ok(report)
}

fn relative_floor(config: &ExperimentConfig) -> f64 {
    config.file.census.relative_floor.unwrap_or(1e-3)
}

/// Largest distance of a plaquette phase sum from the nearest multiple of 2π.
pub fn quantization_error(census: &VortexCensus) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    census
        .vortices
        .iter()
        .map(|v| (v.phase_sum - two_pi * v.winding as f64).abs())
        .fold(0.0, f64::max)
}

pub fn run_census(config: &ExperimentConfig) -> Result<RunReport> {
    let mut out = Output::new(&config.out)?;
    let source = match &config.file.census.snapshots {
        Some(p) => config.path(p),
        // Where an evolve run with default settings puts them.
        None => PathBuf::from("cgpe-out")
            .join(Kind::Evolve.name())
            .join("snapshots"),
    };
    let files: Vec<PathBuf> = if source.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(&source)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bin"))
            .collect();
        v.sort();
        v
    } else if source.is_file() {
        vec![source.clone()]
    } else {
        return Err(Error::invalid(format!(
            "no snapshots at {}",
            source.display()
        )));
    };
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "no snapshots at {}",
            source.display()
        )));
    }
    let floor = relative_floor(config);
    let mut summary = String::from(
        "file,t,count,total_winding,positive,negative,max_abs_winding,quantization_error\n",
    );
    for path in &files {
        let field = Field2D::load(path)?;
        let census = vortex_census(&field, floor * field.max_density().max(f64::MIN_POSITIVE))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.write(&format!("census/{stem}.csv"), &census.to_csv_string())?;
        let positive = census.vortices.iter().filter(|v| v.winding > 0).count();
        let max_abs = census
            .vortices
            .iter()
            .map(|v| v.winding.abs())
            .max()
            .unwrap_or(0);
        let _ = writeln!(
            summary,
            "{stem},{:.6},{},{},{positive},{},{max_abs},{:.3e}",
            field.time,
            census.len(),
            census.total_winding(),
            census.len() - positive,
            quantization_error(&census)
        );
    }
    out.write("census_summary.csv", &summary)?;
    out.line(format!(
        "census over {} snapshots from {}",
        files.len(),
        source.display()
    ));
    out.finish(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cadence_divides() {
        assert_eq!(cadence(30000, 200), 200);
        assert_eq!(cadence(7, 200), 7);
        assert_eq!(cadence(1, 200), 1);
        assert_eq!(cadence(210, 100), 70);
    }
}
