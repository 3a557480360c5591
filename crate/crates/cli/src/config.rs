//! Experiment configuration: a TOML document with every field defaulted,
//! validated as a whole so that every problem is reported at once.

use serde::{Deserialize, Serialize};
use swr_core::model::{
    BoundaryPreset, DataPreset, Decomposition, DomainSpec, Nonlinearity, ProblemData,
};
use swr_core::monitor::{ControllingFunction, FitWindow, WindowConvention};
use swr_core::solver::{SolverOptions, TimeScheme};
use swr_core::swr::{RunOptions, SwrProblem};
use swr_core::theory::MStarVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub decomposition: DecompositionConfig,
    pub algorithm: AlgorithmConfig,
    pub theory: TheoryConfig,
    pub monitor: MonitorConfig,
    pub output: OutputConfig,
    pub study: StudyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Axial interval `(a, b)`.
    pub axial: (f64, f64),
    /// Sides of the box cross-section `D`; empty in 1D.
    pub cross_section: Vec<(f64, f64)>,
    pub nx_cross: Vec<usize>,
    pub nz: usize,
    pub nt: usize,
    pub horizon: f64,
    pub f: NonlinearityConfig,
    pub initial: DataPreset,
    pub boundary: BoundaryPreset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityKind {
    Zero,
    Square,
    OddPower,
    AbsPower,
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKind,
    /// Growth power; fixed to 2 for `square`.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    pub bands: usize,
    /// Overlap as a fraction of the nominal band length `(b - a) / I`.
    pub overlap_fraction: f64,
    /// Explicit `(a_j, b_j)` list; overrides `bands` and `overlap_fraction`.
    pub explicit: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub max_sweeps: usize,
    pub stop_tol: f64,
    /// Promise boundedness: warn when the horizon exceeds T* and treat
    /// divergence as a failure.
    pub certified: bool,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllingKind {
    Square,
    Quartic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    /// Bound `M` on the data.
    pub m: f64,
    pub t0: f64,
    pub margin: f64,
    /// `C2` bounding the iteration errors.
    pub error_bound: f64,
    pub controlling: ControllingKind,
    pub window: WindowConvention,
    pub m_star_variant: MStarVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct MonitorConfig {
    pub fit: FitWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write binary fields.
    pub fields: bool,
    /// Times of the space slices, rounded to the nearest level; empty means the horizon.
    pub slice_times: Vec<f64>,
    /// Axial positions of the time slices, rounded to the nearest node; empty means the midpoint.
    pub slice_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub overlap_fractions: Vec<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            axial: (0.0, 1.0),
            cross_section: Vec::new(),
            nx_cross: Vec::new(),
            nz: 201,
            nt: 100,
            horizon: 0.1,
            f: NonlinearityConfig::default(),
            initial: DataPreset::SineProduct {
                amplitude: 0.5,
                modes: Vec::new(),
            },
            boundary: BoundaryPreset::Initial,
        }
    }
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            kind: NonlinearityKind::Square,
            p: 2.0,
        }
    }
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            bands: 2,
            overlap_fraction: 0.2,
            explicit: Vec::new(),
        }
    }
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        let run = RunOptions::default();
        Self {
            max_sweeps: run.max_sweeps,
            stop_tol: run.stop_tol,
            certified: false,
            solver: SolverOptions::default(),
        }
    }
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            t0: 1.0,
            margin: 0.1,
            error_bound: 1.0,
            controlling: ControllingKind::Square,
            window: WindowConvention::Lagging,
            m_star_variant: MStarVariant::AsPrinted,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            fields: true,
            slice_times: Vec::new(),
            slice_z: Vec::new(),
        }
    }
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            overlap_fractions: vec![0.05, 0.1, 0.2, 0.4],
        }
    }
}

/// Every problem found in a configuration, each prefixed by its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<String>);

impl std::fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// A validated configuration with its core objects built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub spec: DomainSpec,
    pub decomp: Decomposition,
    pub f: Nonlinearity,
    pub data: ProblemData,
    pub ctrl: ControllingFunction,
}

impl Resolved {
    pub fn problem(&self) -> SwrProblem {
        SwrProblem {
            spec: self.spec.clone(),
            decomp: self.decomp.clone(),
            data: self.data.clone(),
            f: self.f.clone(),
            solver: self.config.algorithm.solver,
        }
    }

    pub fn run_options(&self, workers: usize) -> RunOptions {
        RunOptions {
            max_sweeps: self.config.algorithm.max_sweeps,
            stop_tol: self.config.algorithm.stop_tol,
            workers,
        }
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ValidationErrors> {
    load(text, &[])
}

/// Parses `text` and applies `key.path=value` overrides, with `value` read
/// as a TOML value when possible and as a bare string otherwise.
pub fn load(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ValidationErrors> {
    let mut table: toml::Table = toml::from_str(text)
        .map_err(|e| ValidationErrors(vec![format!("config: {}", e.message().trim())]))?;
    let mut issues = Vec::new();
    for o in overrides {
        if let Err(msg) = apply_override(&mut table, o) {
            issues.push(msg);
        }
    }
    if !issues.is_empty() {
        return Err(ValidationErrors(issues));
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| {
            ValidationErrors(vec![format!("config: {}", e.message().trim())])
        })
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), String> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("--vary {spec}: expected key.path=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(format!("--vary {spec}: empty key in path"));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| format!("--vary {spec}: {k} is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub fn dump_defaults() -> String {
    toml::to_string_pretty(&ExperimentConfig::default()).expect("defaults serialise")
}

impl NonlinearityConfig {
    pub fn build(&self) -> swr_core::Result<Nonlinearity> {
        match self.kind {
            NonlinearityKind::Zero => Ok(Nonlinearity::zero()),
            NonlinearityKind::Square => Ok(Nonlinearity::square()),
            NonlinearityKind::OddPower => Nonlinearity::odd_power(self.p),
            NonlinearityKind::AbsPower => Nonlinearity::abs_power(self.p),
            NonlinearityKind::Sine => Ok(Nonlinearity::sine()),
        }
    }
}

fn positive(issues: &mut Vec<String>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        issues.push(format!("{path}: must be a positive number, got {v}"));
    }
}

impl ExperimentConfig {
    /// Validates every section and builds the core objects.
    pub fn resolve(&self) -> Result<Resolved, ValidationErrors> {
        let mut issues = Vec::new();
        let pr = &self.problem;
        if !(pr.f.p > 1.0 && pr.f.p.is_finite()) {
            issues.push(format!(
                "problem.f.p: growth power must be > 1, got {}",
                pr.f.p
            ));
        } else if pr.f.kind == NonlinearityKind::Square && pr.f.p != 2.0 {
            issues.push(format!("problem.f.p: square has p = 2, got {}", pr.f.p));
        }
        if !(pr.axial.0 < pr.axial.1) {
            issues.push(format!(
                "problem.axial: needs a < b, got ({}, {})",
                pr.axial.0, pr.axial.1
            ));
        }
        if pr.nz < 3 {
            issues.push(format!("problem.nz: must be >= 3, got {}", pr.nz));
        }
        if pr.nt < 1 {
            issues.push("problem.nt: must be >= 1".into());
        }
        positive(&mut issues, "problem.horizon", pr.horizon);
        if pr.cross_section.len() != pr.nx_cross.len() {
            issues.push(format!(
                "problem.nx_cross: {} counts for {} cross-section sides",
                pr.nx_cross.len(),
                pr.cross_section.len()
            ));
        }
        for (k, &(lo, hi)) in pr.cross_section.iter().enumerate() {
            if !(lo < hi) {
                issues.push(format!(
                    "problem.cross_section[{k}]: needs lo < hi, got ({lo}, {hi})"
                ));
            }
        }
        for (k, &n) in pr.nx_cross.iter().enumerate() {
            if n < 3 {
                issues.push(format!("problem.nx_cross[{k}]: must be >= 3, got {n}"));
            }
        }
        match &pr.initial {
            DataPreset::Gaussian { width, .. } => {
                positive(&mut issues, "problem.initial.width", *width)
            }
            DataPreset::SineProduct { modes, .. } if modes.contains(&0) => {
                issues.push("problem.initial.modes: modes must be >= 1".into())
            }
            _ => {}
        }
        if let BoundaryPreset::Decay { rate } = pr.boundary {
            if !rate.is_finite() {
                issues.push(format!("problem.boundary.rate: must be finite, got {rate}"));
            }
        }
        let d = &self.decomposition;
        if d.explicit.is_empty() {
            if d.bands == 0 {
                issues.push("decomposition.bands: must be >= 1".into());
            }
            if d.bands > 1 && !(d.overlap_fraction > 0.0 && d.overlap_fraction < 1.0) {
                issues.push(format!(
                    "decomposition.overlap_fraction: must lie in (0, 1), got {}",
                    d.overlap_fraction
                ));
            }
        }
        let a = &self.algorithm;
        if a.max_sweeps == 0 {
            issues.push("algorithm.max_sweeps: must be >= 1".into());
        }
        if !(a.stop_tol >= 0.0) {
            issues.push(format!(
                "algorithm.stop_tol: must be >= 0, got {}",
                a.stop_tol
            ));
        }
        positive(
            &mut issues,
            "algorithm.solver.newton_tol",
            a.solver.newton_tol,
        );
        positive(
            &mut issues,
            "algorithm.solver.divergence_threshold",
            a.solver.divergence_threshold,
        );
        if a.solver.newton_max_iter == 0 {
            issues.push("algorithm.solver.newton_max_iter: must be >= 1".into());
        }
        let t = &self.theory;
        positive(&mut issues, "theory.m", t.m);
        positive(&mut issues, "theory.t0", t.t0);
        positive(&mut issues, "theory.error_bound", t.error_bound);
        if !(t.margin >= 0.0 && t.margin.is_finite()) {
            issues.push(format!("theory.margin: must be >= 0, got {}", t.margin));
        }
        let fit = &self.monitor.fit;
        if !(fit.floor >= 0.0) {
            issues.push(format!(
                "monitor.fit.floor: must be >= 0, got {}",
                fit.floor
            ));
        }
        if let Some(last) = fit.last {
            if last < fit.burn_in + 4 {
                issues.push(format!(
                    "monitor.fit.last: window {}..={last} holds fewer than 5 points",
                    fit.burn_in
                ));
            }
        }
        for (k, &tv) in self.output.slice_times.iter().enumerate() {
            if !(tv >= 0.0 && tv <= pr.horizon * (1.0 + 1e-12)) {
                issues.push(format!(
                    "output.slice_times[{k}]: {tv} lies outside [0, {}]",
                    pr.horizon
                ));
            }
        }
        for (k, &z) in self.output.slice_z.iter().enumerate() {
            if !(z >= pr.axial.0 && z <= pr.axial.1) {
                issues.push(format!(
                    "output.slice_z[{k}]: {z} lies outside ({}, {})",
                    pr.axial.0, pr.axial.1
                ));
            }
        }
        for (k, &fr) in self.study.overlap_fractions.iter().enumerate() {
            if !(fr > 0.0 && fr < 1.0) {
                issues.push(format!(
                    "study.overlap_fractions[{k}]: must lie in (0, 1), got {fr}"
                ));
            }
        }
        if !issues.is_empty() {
            return Err(ValidationErrors(issues));
        }

        // Structural checks that need the built objects.
        let spec = DomainSpec::new(
            pr.cross_section.clone(),
            pr.axial,
            pr.nx_cross.clone(),
            pr.nz,
            pr.nt,
            pr.horizon,
        )
        .map_err(|e| ValidationErrors(vec![format!("problem: {e}")]))?;
        let decomp = if d.explicit.is_empty() {
            Decomposition::build(&spec, d.bands, d.overlap_fraction)
        } else {
            Decomposition::from_bands(&spec, &d.explicit)
        }
        .map_err(|e| ValidationErrors(vec![format!("decomposition: {e}")]))?;
        let f =
            pr.f.build()
                .map_err(|e| ValidationErrors(vec![format!("problem.f: {e}")]))?;
        let data = ProblemData::from_presets(&spec, &decomp, &pr.initial, &pr.boundary)
            .map_err(|e| ValidationErrors(vec![format!("problem.initial: {e}")]))?;
        let ctrl = match t.controlling {
            ControllingKind::Square => ControllingFunction::square(),
            ControllingKind::Quartic => ControllingFunction::quartic(),
        };
        ctrl.validate(t.error_bound)
            .map_err(|e| ValidationErrors(vec![format!("theory.controlling: {e}")]))?;
        Ok(Resolved {
            config: self.clone(),
            spec,
            decomp,
            f,
            data,
            ctrl,
        })
    }

    /// The same experiment with a different overlap fraction.
    pub fn with_overlap(&self, fraction: f64) -> Self {
        let mut c = self.clone();
        c.decomposition.overlap_fraction = fraction;
        c.decomposition.explicit.clear();
        c
    }

    pub fn is_backward_euler(&self) -> bool {
        self.algorithm.solver.scheme == TimeScheme::BackwardEuler
    }
}
