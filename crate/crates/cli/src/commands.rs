//! The four subcommands. Each writes its artifacts under the output directory
//! and returns the process exit code.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use swr_core::monitor::{
    barrier_check, check_linear_bound, fit_decay_rate, BandBarrier, BoundReport, DecayFit,
    ErrorSeries, WindowConvention,
};
use swr_core::solver::{monolithic_solve, phi_m_solve, Barrier};
use swr_core::swr::{self, StopReason, SwrRun};
use swr_core::theory::{TheoryInputs, TheoryReport};
use swr_core::{io, SpaceTimeField};

use crate::config::{ExperimentConfig, Resolved, ValidationErrors};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration:\n{m}"),
            CliError::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ValidationErrors> for CliError {
    fn from(e: ValidationErrors) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<swr_core::Error> for CliError {
    fn from(e: swr_core::Error) -> Self {
        use swr_core::Error as E;
        match e {
            E::Geometry(_) | E::Param(_) | E::Config(_) | E::Compatibility(_) | E::Domain(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Where and how a command writes.
#[derive(Debug, Clone)]
pub struct Context {
    pub command: String,
    pub out: PathBuf,
    pub workers: usize,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: String,
    sha256: String,
    command: &'a str,
    seed: Option<u64>,
    config: &'a ExperimentConfig,
}

impl Context {
    /// Writes `bytes` to `name` plus a `name.meta.json` sidecar with the
    /// resolved config and the content hash.
    fn emit(&self, name: &str, bytes: &[u8], config: &ExperimentConfig) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes)?;
        let sidecar = Sidecar {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            command: &self.command,
            seed: self.seed,
            config,
        };
        let mut meta = serde_json::to_vec_pretty(&sidecar)?;
        meta.push(b'\n');
        fs::write(self.out.join(format!("{name}.meta.json")), meta)?;
        Ok(path)
    }

    fn emit_json(
        &self,
        name: &str,
        value: &impl Serialize,
        config: &ExperimentConfig,
    ) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.emit(name, &bytes, config)
    }

    fn emit_field(
        &self,
        name: &str,
        field: &SpaceTimeField,
        config: &ExperimentConfig,
    ) -> CliResult<PathBuf> {
        let mut bytes = Vec::new();
        io::write_field(field, &mut bytes)?;
        self.emit(name, &bytes, config)
    }
}

/// Shortest round-trip representation, so CSVs compare bitwise.
fn num(v: f64) -> String {
    format!("{v:e}")
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Theory report together with the barrier used for `M_underbar`.
pub struct TheoryRun {
    pub report: TheoryReport,
    pub barrier: Option<Barrier>,
}

pub fn theory_run(r: &Resolved) -> TheoryRun {
    let t = &r.config.theory;
    let mut notes = Vec::new();
    let barrier = if r.f.sign_positive() {
        match phi_m_solve(&r.spec, &r.f, t.m, &r.decomp, &r.config.algorithm.solver) {
            Ok(b) if b.field.diverged.is_none() => Some(b),
            Ok(b) => {
                let d = b.field.diverged.unwrap();
                notes.push(format!(
                    "barrier phi_M diverged at t = {}; M_underbar unavailable",
                    d.time
                ));
                None
            }
            Err(e) => {
                notes.push(format!("barrier phi_M unavailable: {e}"));
                None
            }
        }
    } else {
        notes.push(format!("barrier phi_M needs f >= 0; {} is not", r.f.name()));
        None
    };
    let inputs = TheoryInputs {
        f: r.f.clone(),
        spec: r.spec.clone(),
        decomp: r.decomp.clone(),
        m_level: t.m,
        t0: t.t0,
        m_underbar: barrier.as_ref().map(|b| b.m_underbar),
        error_bound: t.error_bound,
        margin: t.margin,
        ctrl: r.ctrl.clone(),
        variant: t.m_star_variant,
    };
    let mut report = TheoryReport::compute(&inputs);
    report.notes.extend(notes);
    TheoryRun { report, barrier }
}

pub fn cmd_theory(ctx: &Context, config: &ExperimentConfig) -> CliResult<i32> {
    let r = config.resolve()?;
    let run = theory_run(&r);
    ctx.emit_json("theory.json", &run.report, config)?;
    if run.report.has_errors() {
        for e in &run.report.errors {
            eprintln!("theory: {}: {}", e.quantity, e.message);
        }
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SolveStatus {
    status: &'static str,
    diverged_step: Option<usize>,
    diverged_time: Option<f64>,
    newton_failure: Option<bool>,
    levels: usize,
    sup_norm: f64,
}

fn nearest_level(field: &SpaceTimeField, t: f64) -> usize {
    ((t / field.dt()).round() as usize).min(field.nt())
}

fn nearest_plane(r: &Resolved, z: f64) -> usize {
    (((z - r.spec.axial.0) / r.spec.hz()).round() as usize).min(r.spec.nz - 1)
}

fn slice_csvs(ctx: &Context, r: &Resolved, field: &SpaceTimeField) -> CliResult<()> {
    let out = &r.config.output;
    let grid = field.grid();
    let times = if out.slice_times.is_empty() {
        vec![r.spec.horizon]
    } else {
        out.slice_times.clone()
    };
    let mut header = vec!["t".to_string(), "z".to_string()];
    header.extend((1..grid.ndim()).map(|k| format!("x{k}")));
    header.push("u".into());
    let mut rows = Vec::new();
    let mut x = vec![0.0; grid.ndim()];
    for &t in &times {
        let n = nearest_level(field, t);
        for (i, &u) in field.level(n).iter().enumerate() {
            grid.coords(i, &mut x);
            let mut row = vec![num(field.time(n))];
            row.extend(x.iter().map(|&v| num(v)));
            row.push(num(u));
            rows.push(row);
        }
    }
    ctx.emit("space_slices.csv", &csv_bytes(&header, &rows)?, &r.config)?;

    let zs = if out.slice_z.is_empty() {
        vec![0.5 * (r.spec.axial.0 + r.spec.axial.1)]
    } else {
        out.slice_z.clone()
    };
    let header: Vec<String> = ["z", "t", "u_centre", "u_plane_max"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let plane = grid.plane_len();
    let mut rows = Vec::new();
    for &z in &zs {
        let iz = nearest_plane(r, z);
        for n in 0..field.levels() {
            let slab = &field.level(n)[iz * plane..(iz + 1) * plane];
            let top = slab.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
            rows.push(vec![
                num(r.spec.z_node(iz)),
                num(field.time(n)),
                num(slab[plane / 2]),
                num(top),
            ]);
        }
    }
    ctx.emit("time_slices.csv", &csv_bytes(&header, &rows)?, &r.config)?;
    Ok(())
}

pub fn cmd_solve(ctx: &Context, config: &ExperimentConfig) -> CliResult<i32> {
    let r = config.resolve()?;
    let field = monolithic_solve(&r.spec, &r.f, &r.data, &config.algorithm.solver)?;
    if config.output.fields {
        ctx.emit_field("field.bin", &field, config)?;
    }
    slice_csvs(ctx, &r, &field)?;
    let d = field.diverged;
    let status = SolveStatus {
        status: if d.is_some() { "diverged" } else { "ok" },
        diverged_step: d.map(|d| d.step),
        diverged_time: d.map(|d| d.time),
        newton_failure: d.map(|d| d.newton_failure),
        levels: field.levels(),
        sup_norm: field.sup_norm(),
    };
    ctx.emit_json("status.json", &status, config)?;
    if let Some(d) = d {
        eprintln!("solve: diverged at step {} (t = {})", d.step, d.time);
        if config.algorithm.certified {
            return Ok(EXIT_DIVERGENCE);
        }
    }
    Ok(EXIT_OK)
}

/// Worst barrier slacks of one iterate.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierSweep {
    pub k: usize,
    pub passed: bool,
    pub passed_max: bool,
    pub bands: Vec<BandBarrier>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierSummary {
    pub m_level: f64,
    pub phi_max: f64,
    pub tolerance: f64,
    /// `-M - tol <= u <= φ_M + tol` at every node of every iterate.
    pub passed: bool,
    /// Same with `max φ_M` as the upper bound.
    pub passed_max: bool,
    pub sweeps: Vec<BarrierSweep>,
}

/// Everything one relaxation run produces.
pub struct SwrOutcome {
    pub theory: TheoryReport,
    pub run: SwrRun,
    pub series: ErrorSeries,
    pub windowed: Vec<f64>,
    pub bound: Option<BoundReport>,
    pub bound_other_window: Option<BoundReport>,
    pub fit: Result<DecayFit, String>,
    pub barrier: Option<BarrierSummary>,
    pub warnings: Vec<String>,
}

fn other(w: WindowConvention) -> WindowConvention {
    match w {
        WindowConvention::Lagging => WindowConvention::Literal,
        WindowConvention::Literal => WindowConvention::Lagging,
    }
}

pub fn swr_pipeline(r: &Resolved, workers: usize) -> CliResult<SwrOutcome> {
    let cfg = &r.config;
    let TheoryRun { report, barrier } = theory_run(r);
    let mut warnings = Vec::new();
    if cfg.algorithm.certified {
        match report.t_star {
            Some(ts) if r.spec.horizon < ts => {}
            Some(ts) => warnings.push(format!(
                "certified: horizon T = {} is not below T* = {ts}",
                r.spec.horizon
            )),
            None => warnings.push(format!(
                "certified: T* is unavailable, horizon T = {} is not certified",
                r.spec.horizon
            )),
        }
    }
    let gamma = report.gamma.ok_or_else(|| {
        CliError::Validation("theory: gamma could not be chosen for this configuration".into())
    })?;
    let reference = monolithic_solve(&r.spec, &r.f, &r.data, &cfg.algorithm.solver)?;
    if let Some(d) = reference.diverged {
        warnings.push(format!(
            "reference solve diverged at t = {}; errors past it are not meaningful",
            d.time
        ));
    }
    let phi = barrier.as_ref().map(|b| &b.field);
    let mut series = ErrorSeries::new(gamma);
    let mut sweeps = Vec::new();
    let problem = r.problem();
    let run = swr::run(&problem, &r.run_options(workers), |state| {
        series.record(&state.fields, &reference, &r.decomp, &r.ctrl)?;
        if let Some(phi) = phi {
            let b = barrier_check(&state.fields, &r.decomp, phi, cfg.theory.m)?;
            sweeps.push(BarrierSweep {
                k: state.k,
                passed: b.passed,
                passed_max: b.passed_max,
                bands: b.bands,
            });
        }
        Ok(())
    })?;
    let bands = r.decomp.count();
    let window = cfg.theory.window;
    let windowed = series.windowed(bands, window);
    let bound = report
        .epsilon_bar
        .map(|eps| check_linear_bound(&windowed, eps, bands));
    let bound_other_window = report
        .epsilon_bar
        .map(|eps| check_linear_bound(&series.windowed(bands, other(window)), eps, bands));
    let fit = fit_decay_rate(&windowed, &cfg.monitor.fit).map_err(|e| e.to_string());
    let barrier = phi.map(|phi| BarrierSummary {
        m_level: cfg.theory.m,
        phi_max: phi.max_value(),
        tolerance: swr_core::monitor::BARRIER_TOL,
        passed: sweeps.iter().all(|s| s.passed),
        passed_max: sweeps.iter().all(|s| s.passed_max),
        sweeps: std::mem::take(&mut sweeps),
    });
    if barrier.is_none() {
        warnings.push("barrier check skipped: phi_M unavailable".into());
    }
    Ok(SwrOutcome {
        theory: report,
        run,
        series,
        windowed,
        bound,
        bound_other_window,
        fit,
        barrier,
        warnings,
    })
}

fn metrics_csv(o: &SwrOutcome, bands: usize) -> CliResult<Vec<u8>> {
    let mut header = vec!["k".to_string()];
    header.extend((1..=bands).map(|j| format!("err_band_{j}")));
    header.extend(
        [
            "E",
            "E_bar",
            "bound",
            "margin",
            "bound_per_sweep",
            "margin_per_sweep",
            "update",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let blank = String::new;
    let rows = (0..o.series.len())
        .map(|k| {
            let mut row = vec![k.to_string()];
            row.extend(o.series.band_sup[k].iter().map(|&v| num(v)));
            row.push(num(o.series.weighted[k]));
            row.push(o.windowed.get(k).map(|&v| num(v)).unwrap_or_else(blank));
            match o
                .bound
                .as_ref()
                .and_then(|b| b.per_window.get(k).zip(b.per_sweep.get(k)))
            {
                Some((w, s)) => {
                    row.extend([num(w.bound), num(w.margin), num(s.bound), num(s.margin)])
                }
                None => row.extend(std::iter::repeat_with(blank).take(4)),
            }
            row.push(if k == 0 {
                blank()
            } else {
                num(o.run.updates[k - 1])
            });
            row
        })
        .collect::<Vec<_>>();
    csv_bytes(&header, &rows)
}

#[derive(Serialize)]
struct SwrReport<'a> {
    stop: &'a StopReason,
    sweeps: usize,
    final_update: Option<f64>,
    gamma: f64,
    epsilon_bar: Option<f64>,
    t_star: Option<f64>,
    window: WindowConvention,
    bound: &'a Option<BoundReport>,
    bound_other_window: &'a Option<BoundReport>,
    fit: Option<&'a DecayFit>,
    fit_error: Option<&'a String>,
    barrier: &'a Option<BarrierSummary>,
    warnings: &'a [String],
}

pub fn cmd_swr(ctx: &Context, config: &ExperimentConfig) -> CliResult<i32> {
    let r = config.resolve()?;
    let o = swr_pipeline(&r, ctx.workers)?;
    for w in &o.warnings {
        eprintln!("warning: {w}");
    }
    ctx.emit("metrics.csv", &metrics_csv(&o, r.decomp.count())?, config)?;
    ctx.emit_json("theory.json", &o.theory, config)?;
    let report = SwrReport {
        stop: &o.run.stop,
        sweeps: o.run.state.k,
        final_update: o.run.updates.last().copied(),
        gamma: o.series.gamma,
        epsilon_bar: o.theory.epsilon_bar,
        t_star: o.theory.t_star,
        window: config.theory.window,
        bound: &o.bound,
        bound_other_window: &o.bound_other_window,
        fit: o.fit.as_ref().ok(),
        fit_error: o.fit.as_ref().err(),
        barrier: &o.barrier,
        warnings: &o.warnings,
    };
    ctx.emit_json("report.json", &report, config)?;
    if config.output.fields {
        for (j, field) in o.run.state.fields.iter().enumerate() {
            ctx.emit_field(&format!("fields/band_{}.bin", j + 1), field, config)?;
        }
    }
    if let StopReason::Diverged(d) = o.run.stop {
        eprintln!(
            "swr: band {} diverged at t = {} in sweep {}",
            d.band + 1,
            d.time,
            o.run.state.k
        );
        if config.algorithm.certified {
            return Ok(EXIT_DIVERGENCE);
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_sweep_study(ctx: &Context, config: &ExperimentConfig) -> CliResult<i32> {
    let fractions = &config.study.overlap_fractions;
    if fractions.is_empty() {
        return Err(CliError::Validation(
            "study.overlap_fractions: list is empty".into(),
        ));
    }
    config.resolve()?;
    let header: Vec<String> = [
        "overlap_fraction",
        "S",
        "rate",
        "r_squared",
        "epsilon_bar",
        "sweeps",
        "stop",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    for &fr in fractions {
        let r = config.with_overlap(fr).resolve()?;
        let o = swr_pipeline(&r, ctx.workers)?;
        for w in &o.warnings {
            eprintln!("warning: overlap fraction {fr}: {w}");
        }
        let s = r
            .decomp
            .overlaps()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let (rate, r2) = match &o.fit {
            Ok(f) => (num(f.rate), num(f.r_squared)),
            Err(e) => {
                eprintln!("warning: overlap fraction {fr}: {e}");
                (String::new(), String::new())
            }
        };
        let stop = match o.run.stop {
            StopReason::Converged => "converged",
            StopReason::MaxSweeps => "max-sweeps",
            StopReason::Diverged(_) => {
                if config.algorithm.certified {
                    code = EXIT_DIVERGENCE;
                }
                "diverged"
            }
        };
        rows.push(vec![
            num(fr),
            num(s),
            rate,
            r2,
            o.theory.epsilon_bar.map(num).unwrap_or_default(),
            o.run.state.k.to_string(),
            stop.to_string(),
        ]);
    }
    ctx.emit("study.csv", &csv_bytes(&header, &rows)?, config)?;
    Ok(code)
}
