//! Command-line front end. Every command writes its data files plus a
//! [`RunManifest`] next to them; `replay` re-runs a manifest.
//!
//! Exit codes: 0 on success, 1 when a check fails or a computation breaks
//! down, 2 for usage errors.

mod args;
mod manifest;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, ReportKind, SweepResult};
use crate::charfun::{CharFn, Variant};
use crate::error::{MarginError, ModelError, RootError, SimError};
use crate::margin::{self, BoundaryMatrix};
use crate::model::SystemParams;
use crate::roots::{find_roots, RootOptions, SearchWindow, SpectralAbscissa};
use crate::sim::{self, ClosedLoopConfig, Controller, DecayFit, InitialCondition, SystemKind};

pub use args::*;
pub use manifest::{strip_out_flag, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Margin(#[from] MarginError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Model(_) => 2,
            Self::Sim(SimError::Config(_) | SimError::Cfl(_)) => 2,
            Self::Margin(MarginError::Dimension(_) | MarginError::NotSquare { .. }) => 2,
            Self::Root(RootError::InvalidWindow(_)) => 2,
            _ => 1,
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    CheckFailed,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, argv.get(1..).unwrap_or_default()) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::CheckFailed) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, argv: &[String]) -> Result<Outcome, CliError> {
    if let Command::Replay(r) = &cli.command {
        return replay(cli, r);
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var(OUT_DIR_ENV).ok())
        .unwrap_or_else(|| ".".into());
    let out_dir = PathBuf::from(out_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let mut ctx = Context {
        out_dir: out_dir.clone(),
        name: cli.name.clone(),
        opts: RootOptions {
            threads: cli.threads,
            ..RootOptions::default()
        },
        manifest: RunManifest::new("", strip_out_flag(argv), &out_dir, cli.threads),
    };
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let outcome = match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(&mut ctx, a)?,
        Command::Sweep(a) => cmd_sweep(&mut ctx, a)?,
        Command::Margin(a) => cmd_margin(&mut ctx, a)?,
        Command::Simulate(a) => cmd_simulate(&mut ctx, a)?,
        Command::Replay(_) => unreachable!(),
    };
    let path = ctx.path(&format!("{}.manifest.json", ctx.stem()));
    ctx.manifest.write(&path)?;
    println!("manifest: {}", path.display());
    Ok(outcome)
}

fn replay(cli: &Cli, r: &ReplayArgs) -> Result<Outcome, CliError> {
    let m = RunManifest::read(Path::new(&r.manifest))?;
    let out = cli.out.clone().unwrap_or_else(|| m.out_dir.clone());
    let mut argv = vec!["transport-spectra".to_string(), "--out".to_string(), out];
    argv.extend(m.argv.iter().cloned());
    let again = Cli::try_parse_from(&argv)
        .map_err(|e| CliError::Usage(format!("manifest arguments do not parse: {e}")))?;
    if matches!(again.command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    execute(&again, &argv[1..])
}

struct Context {
    out_dir: PathBuf,
    name: Option<String>,
    opts: RootOptions,
    manifest: RunManifest,
}

impl Context {
    fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.manifest.command.clone())
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    fn begin(&mut self, default_stem: String, parameters: &impl Serialize) {
        self.manifest.command = default_stem;
        self.manifest.parameters = serde_json::to_value(parameters).expect("plain data");
    }

    fn create(&mut self, suffix: &str) -> Result<BufWriter<File>, CliError> {
        let file = format!("{}{suffix}", self.stem());
        let path = self.path(&file);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        self.manifest.outputs.push(file);
        println!("wrote {}", path.display());
        Ok(BufWriter::new(f))
    }

    fn write_json(&mut self, suffix: &str, value: &impl Serialize) -> Result<(), CliError> {
        let file = format!("{}{suffix}", self.stem());
        let path = self.path(&file);
        let text = serde_json::to_string_pretty(value).expect("plain data");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        self.manifest.outputs.push(file);
        println!("wrote {}", path.display());
        Ok(())
    }

    fn tolerances(&mut self, value: serde_json::Value) {
        self.manifest.tolerances = value;
    }
}

/// Comma list `a,b,c` or inclusive range `start:stop:step`.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| CliError::Usage(format!("invalid value list `{text}`: {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("ranges are start:stop:step"));
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(bad("need start ≤ stop and a positive step"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        if count > 100_000 {
            return Err(bad("too many points"));
        }
        (0..=count)
            .map(|i| {
                let v = a + i as f64 * step;
                // keep decimal grids clean: -0.05 + 5·0.01 is zero, not 1e-18
                let r = (v / step).round() * step;
                if (v - r).abs() < 1e-9 * step {
                    format!("{r:.12}").parse::<f64>().unwrap_or(r)
                } else {
                    v
                }
            })
            .collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("empty or non-finite"));
    }
    Ok(values)
}

fn plant_params(p: &PlantArgs) -> Result<SystemParams, CliError> {
    let velocity = match p.tau {
        Some(tau) if tau > 0.0 && tau.is_finite() => 1.0 / tau,
        Some(tau) => return Err(CliError::Usage(format!("--tau must be positive, got {tau}"))),
        None => p.velocity,
    };
    Ok(SystemParams::with_velocity(velocity)?
        .eta(p.eta)?
        .eps(p.eps)?
        .gains(p.k1, p.k2)?
        .kp(p.kp)?)
}

/// Default search rectangle for each characteristic function.
pub fn default_window(variant: Variant) -> SearchWindow {
    let rect = |a, b, c, d| SearchWindow::new(a, b, c, d).expect("valid preset");
    match variant {
        Variant::OpenLoopInviscid | Variant::PropInviscid | Variant::DynInviscid => {
            rect(-2.0, 2.0, -50.0, 50.0)
        }
        Variant::OpenLoopViscous | Variant::DeadbeatViscous => SearchWindow::deadbeat(),
        Variant::DeadbeatViscousPerturbed | Variant::DeadbeatInviscidPerturbed => {
            SearchWindow::perturbed()
        }
        Variant::SimplerSystem => SearchWindow::simpler(),
        Variant::ZForm => rect(-6.0, 6.0, -6.0, 6.0),
    }
}

fn search_window(s: &SearchArgs, fallback: SearchWindow) -> Result<SearchWindow, CliError> {
    let w = match &s.window {
        Some(text) => SearchWindow::parse(text).map_err(|e| CliError::Usage(e.to_string()))?,
        None => fallback,
    };
    if s.depth == 0 {
        return Err(CliError::Usage("--depth must be positive".into()));
    }
    Ok(w.with_depth(s.depth))
}

fn sigma_text(a: &SpectralAbscissa) -> String {
    match a {
        SpectralAbscissa::Finite { sigma, .. } if sigma.abs() < 1e-10 => format!("{sigma:.3e}"),
        SpectralAbscissa::Finite { sigma, .. } => format!("{sigma:.10}"),
        SpectralAbscissa::NegInfinity => "-inf".into(),
    }
}

fn cmd_spectrum(ctx: &mut Context, a: &SpectrumArgs) -> Result<Outcome, CliError> {
    ctx.begin(format!("spectrum-{}", a.variant.name()), a);
    let params = plant_params(&a.plant)?;
    let f = CharFn::new(a.variant, params)?;
    let window = search_window(&a.search, default_window(a.variant))?;
    let opts = ctx.opts.with_tol(a.search.tol);
    ctx.tolerances(serde_json::to_value(opts).expect("plain data"));
    let spec = find_roots(&f, &window, &opts)?;
    ctx.manifest.windows = vec![spec.requested, spec.window];
    spec.write_csv(ctx.create(".csv")?)?;
    let mut json = spec.to_json();
    json["variant"] = serde_json::json!(a.variant);
    json["params"] = serde_json::to_value(params).expect("plain data");
    ctx.write_json(".json", &json)?;
    println!(
        "{}: {} zeros, sigma_hat = {}, unresolved = {}",
        a.variant,
        spec.counted_total,
        sigma_text(&spec.abscissa()),
        spec.unresolved()
    );
    Ok(Outcome::Ok)
}

fn cmd_sweep(ctx: &mut Context, a: &SweepArgs) -> Result<Outcome, CliError> {
    let label = format!("{:?}", a.check).to_lowercase();
    ctx.begin(format!("sweep-{label}"), a);
    let opts = ctx.opts.with_tol(a.search.tol);
    ctx.tolerances(serde_json::json!({
        "root_options": opts,
        "delta": a.delta,
        "below": a.below,
        "eps_bound": a.eps_bound,
    }));
    let result: SweepResult = match a.check {
        CheckKind::Theorem1 => {
            let w = search_window(&a.search, SearchWindow::deadbeat())?;
            ctx.manifest.windows = vec![w];
            analysis::theorem1_check(&parse_values(&a.etas)?, a.delta, &w, &opts)?
        }
        CheckKind::Conjecture1 => {
            let w = search_window(&a.search, SearchWindow::deadbeat())?;
            ctx.manifest.windows = vec![w];
            analysis::conjecture1_band(&parse_values(&a.etas)?, a.below, a.delta, &w, &opts)?
        }
        CheckKind::Theorem2 => {
            let w = search_window(&a.search, SearchWindow::perturbed())?;
            ctx.manifest.windows = vec![w];
            analysis::theorem2_sweep(a.eta, &parse_values(&a.eps)?, a.delta, &w, &opts)?
        }
        CheckKind::Conjecture3 => {
            let w = search_window(&a.search, SearchWindow::simpler())?;
            ctx.manifest.windows = vec![w];
            analysis::conjecture3_probe(&parse_values(&a.etas)?, a.eps_bound, &w, &opts)?
        }
    };
    result.write_csv(ctx.create(".csv")?)?;
    ctx.write_json(".json", &result)?;
    let mut broken = false;
    for r in &result.reports {
        let tag = if r.satisfied { "ok" } else { "FAILED" };
        println!(
            "eta = {:<6} eps = {:<6} sigma_hat = {:<16} {tag}",
            r.params.eta,
            r.params.eps,
            sigma_text(&r.sigma_hat)
        );
        if let Some(err) = &r.error {
            eprintln!("root finder failed at eta = {}, eps = {}: {err}", r.params.eta, r.params.eps);
            broken = true;
        }
    }
    let all = result.all_satisfied();
    let kind = result.reports.first().map(|r| r.kind);
    if !all && kind == Some(ReportKind::Probe) {
        eprintln!("probe {label}: some points fall outside the conjectured range (logged, not fatal)");
    }
    Ok(if broken || (!all && kind == Some(ReportKind::Check)) {
        Outcome::CheckFailed
    } else {
        Outcome::Ok
    })
}

fn cmd_margin(ctx: &mut Context, a: &MarginArgs) -> Result<Outcome, CliError> {
    ctx.begin("margin".into(), a);
    let result = match (&a.matrix, a.k1, a.k2) {
        (Some(text), _, _) => margin::margin(&BoundaryMatrix::parse(text)?)?,
        (None, k1, k2) => margin::margin_for_gains(k1.unwrap_or(0.0), k2.unwrap_or(1.0))?,
    };
    ctx.tolerances(serde_json::json!({ "consistency": result.tolerance }));
    ctx.write_json(".json", &result)?;
    println!(
        "rho2 = {:.10}, rho_bar = {:.10}{}{}",
        result.rho2,
        result.rho_bar,
        result
            .closed_form
            .map(|c| format!(", closed form = {c:.10}"))
            .unwrap_or_default(),
        if result.degenerate { " (degenerate scaling)" } else { "" }
    );
    if !result.consistent {
        eprintln!("rho2 and rho_bar disagree beyond {}", result.tolerance);
        return Ok(Outcome::CheckFailed);
    }
    Ok(Outcome::Ok)
}

#[derive(Debug, Serialize)]
struct SpectralComparison {
    variant: Variant,
    window: SearchWindow,
    sigma_hat: SpectralAbscissa,
    /// `|rate − σ̂| / |σ̂|` when both are finite.
    relative_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    config: ClosedLoopConfig,
    dt: f64,
    cfl: f64,
    samples: usize,
    aborted_at: Option<f64>,
    /// Output is exactly zero from this time on.
    zero_from: Option<f64>,
    max_abs_output: f64,
    t_skip: f64,
    fit: Option<DecayFit>,
    fit_error: Option<String>,
    spectral: Option<SpectralComparison>,
}

fn sim_config(a: &SimulateArgs) -> Result<ClosedLoopConfig, CliError> {
    let params = plant_params(&a.plant)?;
    let system = match a.system {
        SystemArg::InviscidPair => SystemKind::InviscidPair,
        SystemArg::ViscousPair => SystemKind::ViscousPair,
        SystemArg::SimplerPair => SystemKind::SimplerPair,
    };
    let default = if system == SystemKind::SimplerPair {
        ControllerArg::None
    } else {
        ControllerArg::Deadbeat
    };
    let controller = match a.controller.unwrap_or(default) {
        ControllerArg::None => Controller::None,
        ControllerArg::Proportional => Controller::Proportional { kp: params.kp },
        ControllerArg::Dynamic => Controller::from_params(&params),
        ControllerArg::Deadbeat => Controller::DeadBeat,
    };
    let initial = match a.initial {
        InitialArg::Bump => InitialCondition::default(),
        InitialArg::Smooth => InitialCondition::Smooth {
            seed: a.seed,
            modes: a.modes,
        },
        InitialArg::Constant => InitialCondition::Constant { value: a.value },
    };
    let cfg = ClosedLoopConfig::new(system, params)
        .with_controller(controller)
        .with_initial(initial)
        .with_cells(a.n)
        .with_cfl(a.cfl)
        .with_t_end(a.t_end)
        .with_snapshots(a.snapshot_every);
    cfg.validate()?;
    Ok(cfg)
}

/// Characteristic function whose abscissa the simulation should reproduce.
fn matching_spectrum(cfg: &ClosedLoopConfig) -> Option<(Variant, SearchWindow)> {
    let p = &cfg.params;
    match (cfg.system, cfg.controller) {
        (SystemKind::ViscousPair, Controller::DeadBeat) if p.eps == 0.0 => {
            Some((Variant::DeadbeatViscous, SearchWindow::deadbeat()))
        }
        (SystemKind::ViscousPair, Controller::DeadBeat) => {
            Some((Variant::DeadbeatViscousPerturbed, SearchWindow::perturbed()))
        }
        (SystemKind::InviscidPair, Controller::DeadBeat) if p.velocity == 1.0 => {
            Some((Variant::DeadbeatInviscidPerturbed, SearchWindow::perturbed()))
        }
        (SystemKind::SimplerPair, _) if p.eta > 0.0 && p.velocity == 1.0 => {
            Some((Variant::SimplerSystem, SearchWindow::simpler()))
        }
        _ => None,
    }
}

fn cmd_simulate(ctx: &mut Context, a: &SimulateArgs) -> Result<Outcome, CliError> {
    ctx.begin(
        format!("simulate-{}", serde_json::to_value(a.system).expect("enum").as_str().unwrap_or("run")),
        a,
    );
    let cfg = sim_config(a)?;
    let grid = cfg.validate()?;
    ctx.tolerances(serde_json::json!({ "t_skip": a.t_skip }));
    let traj = sim::run(&cfg)?;
    let (fit, fit_error) = match sim::estimate_decay_rate(&traj, a.t_skip) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let zero_from = match traj.output.iter().rposition(|&y| y != 0.0) {
        None if !traj.is_empty() => Some(0.0),
        Some(i) if i + 1 < traj.len() => Some(traj.times[i + 1]),
        _ => None,
    };
    let spectral = match matching_spectrum(&cfg) {
        Some((variant, window)) if !a.no_spectral => {
            let f = CharFn::new(variant, cfg.params)?;
            let spec = find_roots(&f, &window, &ctx.opts)?;
            ctx.manifest.windows.push(spec.window);
            let sigma_hat = spec.abscissa();
            let relative_error = match (fit, sigma_hat) {
                (Some(f), SpectralAbscissa::Finite { sigma, .. }) if sigma != 0.0 => {
                    Some((f.rate - sigma).abs() / sigma.abs())
                }
                _ => None,
            };
            Some(SpectralComparison {
                variant,
                window: spec.window,
                sigma_hat,
                relative_error,
            })
        }
        _ => None,
    };
    traj.write_csv(ctx.create(".csv")?)?;
    if !traj.snapshots.is_empty() {
        traj.write_snapshots_csv(ctx.create("-snapshots.csv")?)?;
    }
    let report = SimulationReport {
        config: cfg,
        dt: grid.dt,
        cfl: grid.cfl,
        samples: traj.len(),
        aborted_at: traj.aborted_at,
        zero_from,
        max_abs_output: traj.max_abs_after(0.0),
        t_skip: a.t_skip,
        fit,
        fit_error,
        spectral,
    };
    ctx.write_json(".json", &report)?;
    if let Some(t) = traj.aborted_at {
        eprintln!("state overflowed at t = {t}; trajectory truncated");
    }
    match (&report.fit, &report.fit_error) {
        (Some(f), _) => println!("decay rate = {:.6} (r2 = {:.4}, {} peaks)", f.rate, f.r2, f.points),
        (None, Some(e)) => println!("no decay rate: {e}"),
        _ => {}
    }
    if let Some(t) = zero_from {
        println!("output identically zero from t = {t}");
    }
    if let Some(s) = &report.spectral {
        println!(
            "spectral sigma_hat = {}{}",
            sigma_text(&s.sigma_hat),
            s.relative_error
                .map(|e| format!(", relative difference {:.2}%", 100.0 * e))
                .unwrap_or_default()
        );
    }
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists_and_ranges() {
        assert_eq!(parse_values("0.02,0.05,0.1").unwrap(), vec![0.02, 0.05, 0.1]);
        let r = parse_values("-0.05:0.05:0.01").unwrap();
        assert_eq!(r.len(), 11);
        assert_eq!(r[5], 0.0);
        assert_eq!(r[10], 0.05);
        assert_eq!(r[0], -0.05);
        assert!(parse_values("1:0:0.1").is_err());
        assert!(parse_values("0:1").is_err());
        assert!(parse_values("a,b").is_err());
        assert!(parse_values("").is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["transport-spectra", "bogus"]), 2);
        assert_eq!(run(["transport-spectra", "spectrum"]), 2);
        assert_eq!(run(["transport-spectra", "--help"]), 0);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Sim(SimError::Cfl(2.0)).exit_code(), 2);
        assert_eq!(CliError::Sim(SimError::Blowup { time: 1.0 }).exit_code(), 1);
        assert_eq!(CliError::Root(RootError::NonFinite(num_complex::Complex64::new(0.0, 0.0))).exit_code(), 1);
    }

    #[test]
    fn viscous_windows_by_variant() {
        assert_eq!(default_window(Variant::DeadbeatViscous), SearchWindow::deadbeat());
        assert_eq!(default_window(Variant::SimplerSystem), SearchWindow::simpler());
    }
}
