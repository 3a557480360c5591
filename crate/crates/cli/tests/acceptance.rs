//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion, with
//! indented detail lines, and exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use swr_cli::commands::{swr_pipeline, SwrOutcome};
use swr_cli::config::{self, ExperimentConfig};
use swr_core::model::{BoundaryFn, Decomposition, DomainSpec, Nonlinearity, ProblemData};
use swr_core::solver::{
    duhamel_solve, monolithic_solve, picard_solve, SolverOptions, SpaceTimeField,
};
use swr_core::swr::StopReason;
use swr_core::theory::{self, growth_params, tau, GFunction};

const CANONICAL: &str = include_str!("../configs/canonical.toml");

struct Verdict {
    pass: bool,
    detail: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            pass: true,
            detail: Vec::new(),
        }
    }

    /// Records a check; a false `ok` fails the criterion.
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.pass &= ok;
        self.detail.push(format!(
            "[{}] {}",
            if ok { "ok" } else { "FAILED" },
            what.into()
        ));
    }

    fn note(&mut self, what: impl Into<String>) {
        self.detail.push(format!("note: {}", what.into()));
    }
}

fn canonical() -> ExperimentConfig {
    config::parse(CANONICAL).unwrap()
}

fn pipeline(cfg: &ExperimentConfig) -> SwrOutcome {
    let r = cfg.resolve().unwrap();
    swr_pipeline(&r, 1).unwrap_or_else(|e| panic!("{e}"))
}

fn final_sup_error(o: &SwrOutcome) -> f64 {
    o.series
        .band_sup
        .last()
        .unwrap()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn criterion_1(o: &SwrOutcome, seconds: f64) -> Verdict {
    let mut v = Verdict::new();
    v.check(
        o.run.stop == StopReason::Converged,
        format!("stop {:?} after {} sweeps", o.run.stop, o.run.state.k),
    );
    let update = o.run.updates.last().copied().unwrap_or(f64::NAN);
    v.check(
        update <= 1e-10,
        format!("final interface update {update:.3e} <= 1e-10"),
    );
    let err = final_sup_error(o);
    v.check(
        err <= 1e-8,
        format!("max_j |u_j - u_mono|_inf = {err:.3e} <= 1e-8"),
    );
    v.check(
        seconds <= 30.0,
        format!("single-worker pipeline took {seconds:.2} s <= 30 s"),
    );
    v
}

fn criterion_2(o: &SwrOutcome) -> Verdict {
    let mut v = Verdict::new();
    v.check(o.series.gamma == 8.0, format!("gamma = {}", o.series.gamma));
    match &o.fit {
        Ok(f) => {
            v.check(
                f.rate > 0.0,
                format!("fitted slope {:.4} over n = 2..15 is negative", -f.rate),
            );
            v.check(
                f.r_squared >= 0.99,
                format!("r^2 = {:.4} >= 0.99", f.r_squared),
            );
            let ratios: Vec<String> = f
                .used
                .windows(2)
                .map(|w| format!("{:.2}", o.windowed[w[1]] / o.windowed[w[0]]))
                .collect();
            v.note(format!(
                "successive ratios of E_bar over the fit window: {}",
                ratios.join(" ")
            ));
        }
        Err(e) => v.check(false, format!("fit failed: {e}")),
    }
    match &o.bound {
        Some(b) => {
            let eps = b.epsilon_bar;
            v.check((eps - 0.2).abs() < 1e-12, format!("epsilon_bar = {eps}"));
            let min_margin = b
                .per_window
                .iter()
                .map(|r| r.margin)
                .fold(f64::INFINITY, f64::min);
            v.check(
                b.holds,
                format!(
                    "E_bar_n <= E_bar_0 exp(-n eps) at all {} n, min margin {min_margin:.3}",
                    b.per_window.len()
                ),
            );
            v.note(format!("per-sweep reading holds: {}", b.holds_per_sweep));
        }
        None => v.check(false, "no epsilon_bar"),
    }
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let base = canonical();
    let mut rates = Vec::new();
    for &fr in &base.study.overlap_fractions {
        let o = pipeline(&base.with_overlap(fr));
        let s = o.theory.provenance.overlaps[0];
        let eps = o.theory.epsilon_bar.unwrap();
        let rate = o.fit.as_ref().map(|f| f.rate).unwrap_or(f64::NAN);
        v.note(format!(
            "fraction {fr}: S = {s:.4}, rate {rate:.4}, eps {eps:.4}, {} sweeps",
            o.run.state.k
        ));
        v.check(
            (eps - (o.series.gamma / 2.0).sqrt() * s).abs() <= 1e-14 * eps,
            format!("eps = sqrt(gamma/2) S at S = {s:.4}"),
        );
        rates.push(rate);
    }
    let monotone = rates.windows(2).all(|w| w[1] >= 0.9 * w[0]);
    v.check(
        monotone,
        format!("rates nondecreasing in S within 10%: {rates:.4?}"),
    );
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    for bands in [2usize, 3, 4] {
        let mut cfg = canonical();
        cfg.decomposition.bands = bands;
        cfg.decomposition.overlap_fraction = 0.1 * bands as f64;
        let o = pipeline(&cfg);
        let (s, l) = (&o.theory.provenance.overlaps, &o.theory.provenance.lengths);
        let product = (o.series.gamma / 2.0).sqrt() * s.iter().product::<f64>()
            / l[1..bands - 1].iter().product::<f64>();
        let eps = o.theory.epsilon_bar.unwrap();
        v.check(
            (eps - product).abs() <= 1e-14 * product,
            format!("I = {bands}: eps {eps:.6e} equals the product formula"),
        );
        let rate = o.fit.as_ref().map(|f| f.rate).unwrap_or(f64::NAN);
        v.check(
            rate > 0.0,
            format!("I = {bands}: S = {:.3}, fitted rate {rate:.4} > 0", s[0]),
        );
        let holds = o.bound.as_ref().is_some_and(|b| b.holds);
        v.check(holds, format!("I = {bands}: decay bound holds"));
    }
    v
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    let gp = |p| growth_params(p).unwrap();
    let sets = [
        (2.0, 2.0, 1.0, 1.0, 1.0),
        (3.0, 3.0, 0.5, 0.5, 2.0),
        (1.5, 1.5, 0.1, 2.0, 0.3),
    ];
    let mut worst: f64 = 0.0;
    for (p, c_f, horizon, m1, m2) in sets {
        let g = GFunction::new(horizon, m1, m2, &gp(p), c_f).unwrap();
        for r in [0.01, 0.1, 1.0, 5.0] {
            let back = g.inverse(g.value(r).unwrap()).unwrap();
            worst = worst.max(((back - r) / r).abs());
        }
    }
    v.check(
        worst <= 1e-8,
        format!("G^-1(G(r)) = r, worst relative error {worst:.2e}"),
    );
    let mut shape = true;
    for p in [2.5, 3.0, 5.0] {
        let g = gp(p);
        let base = tau(0.3, 0.2, &g, p).unwrap();
        shape &= tau(0.6, 0.2, &g, p).unwrap() < base && tau(0.3, 0.4, &g, p).unwrap() < base;
        let scaled = tau(3.0, 2.0, &g, p).unwrap();
        shape &= ((scaled / (base * 10f64.powf(-8.0 * p / (3.0 + p)))) - 1.0).abs() <= 1e-13;
    }
    v.check(
        shape,
        "tau decreasing in both arguments, power-law scaling under (R, m) -> 10 (R, m)",
    );
    // 30-digit reference values, see crates/core/tests/oracles
    let cube = Nonlinearity::abs_power(3.0).unwrap();
    let g1 = GFunction::new(1.0, 1.0, 1.0, &gp(2.0), 2.0).unwrap();
    let table = [
        (
            "tau(1, 0; p=3)",
            tau(1.0, 0.0, &gp(3.0), 3.0).unwrap(),
            1.027_093_139_642_385_8e-8,
        ),
        (
            "tau(1, 1; p=4)",
            tau(1.0, 1.0, &gp(4.0), 4.0).unwrap(),
            1.569_496_774_867_487_4e-12,
        ),
        (
            "G(1; p=2)",
            g1.value(1.0).unwrap(),
            0.209_543_828_672_302_48,
        ),
        (
            "sup G (p=2)",
            g1.supremum().unwrap(),
            0.326_083_246_433_398_7,
        ),
        (
            "G^-1(0.2)",
            g1.inverse(0.2).unwrap(),
            0.850_219_450_399_651_4,
        ),
        (
            "T_* (|u|^3)",
            theory::t_star(1.0, &cube, 1.0, 1.0, &gp(3.0)).unwrap(),
            1.643_349_023_427_817e-11,
        ),
    ];
    for (name, got, want) in table {
        v.check(
            ((got - want) / want).abs() <= 1e-12,
            format!("{name} = {got:.15e} matches oracle to 12 digits"),
        );
    }
    v
}

fn heat_run(nz: usize, nt: usize) -> (DomainSpec, SpaceTimeField, Vec<f64>) {
    let spec = DomainSpec::interval(0.0, 1.0, nz, nt, 0.1).unwrap();
    let decomp = Decomposition::build(&spec, 1, 0.0).unwrap();
    let u0: Vec<f64> = (0..nz).map(|i| (PI * spec.z_node(i)).sin()).collect();
    let data = ProblemData::new(&spec, &decomp, u0.clone(), BoundaryFn::constant(0.0)).unwrap();
    let u = monolithic_solve(
        &spec,
        &Nonlinearity::zero(),
        &data,
        &SolverOptions::default(),
    )
    .unwrap();
    (spec, u, u0)
}

fn heat_error(spec: &DomainSpec, u: &SpaceTimeField) -> f64 {
    let decay = (-PI * PI * 0.1).exp();
    (0..spec.nz)
        .map(|i| (u.get(spec.nt, i) - decay * (PI * spec.z_node(i)).sin()).abs())
        .fold(0.0, f64::max)
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let (spec, u, u0) = heat_run(201, 100);
    let coarse = heat_error(&spec, &u);
    v.check(
        coarse <= 5e-4,
        format!("FD error at t = 0.1: {coarse:.3e} <= 5e-4"),
    );
    let (fine_spec, fine_u, _) = heat_run(401, 200);
    let ratio = coarse / heat_error(&fine_spec, &fine_u);
    v.check(
        ratio >= 3.0,
        format!("halving h and dt reduces the error by {ratio:.2} >= 3"),
    );
    let src = SpaceTimeField::zeros(spec.grid(), spec.dt(), spec.nt);
    let spectral = duhamel_solve(&src, &u0, 200).unwrap();
    let gap = spectral
        .values()
        .iter()
        .zip(u.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    v.check(
        gap <= 5e-4,
        format!("Duhamel vs FD over all levels: {gap:.3e} <= 5e-4"),
    );
    v
}

/// Picard iteration on the box `(0,1)^3` with `v = 1/2` up to `horizon`,
/// compared against the finite-difference solve of the same problem.
fn picard_box(f: &Nonlinearity, horizon: f64, v: &mut Verdict) {
    let spec = DomainSpec::new(
        vec![(0.0, 1.0), (0.0, 1.0)],
        (0.0, 1.0),
        vec![9, 9],
        9,
        10,
        horizon,
    )
    .unwrap();
    let grid = spec.grid();
    let vf = SpaceTimeField::from_fn(grid.clone(), spec.dt(), spec.nt, |_, _| 0.5);
    let r = picard_solve(&vf, f, 64, 50, 1e-15).unwrap();
    let worst = r.ratios.iter().copied().fold(0.0, f64::max);
    v.check(
        r.converged && worst <= 0.6,
        format!(
            "Picard converged in {} iterations, max ratio {worst:.2e} <= 0.6",
            r.differences.len()
        ),
    );
    // v is a steady heat solution, so w + v solves the full problem with data 1/2
    let decomp = Decomposition::build(&spec, 1, 0.0).unwrap();
    let data = ProblemData::new(
        &spec,
        &decomp,
        vec![0.5; grid.len()],
        BoundaryFn::constant(0.5),
    )
    .unwrap();
    let mut fd = monolithic_solve(&spec, f, &data, &SolverOptions::default()).unwrap();
    fd.values_mut().iter_mut().for_each(|u| *u -= 0.5);
    let gap = fd
        .values()
        .iter()
        .zip(r.w.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    v.check(
        gap <= 1e-6,
        format!("Picard limit vs finite-difference solve: {gap:.2e} <= 1e-6"),
    );
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let square = Nonlinearity::square();
    let gp2 = growth_params(2.0).unwrap();
    match theory::t_star(0.5, &square, 1.0, 1.0, &gp2) {
        Ok(ts) => picard_box(&square, ts, &mut v),
        Err(e) => v.check(false, format!("T_* for f = u^2 on the unit box: {e}")),
    }
    // same structure where the closed form is defined
    let cube = Nonlinearity::abs_power(3.0).unwrap();
    let ts = theory::t_star(0.5, &cube, 1.0, 1.0, &growth_params(3.0).unwrap()).unwrap();
    let mut extra = Verdict::new();
    picard_box(&cube, ts, &mut extra);
    v.note(format!("f = |u|^3 at its T_* = {ts:.3e}:"));
    for d in extra.detail {
        v.note(format!("  {d}"));
    }
    v
}

fn criterion_8(o: &SwrOutcome) -> Verdict {
    let mut v = Verdict::new();
    let t = o.theory.t_star;
    match t {
        Some(ts) => v.check(0.1 < ts, format!("horizon 0.1 below T* = {ts:.3e}")),
        None => {
            let why = o
                .theory
                .errors
                .iter()
                .find(|e| e.quantity == "tau")
                .map(|e| e.message.clone())
                .unwrap_or_default();
            v.check(false, format!("T* is not computable for f = u^2: {why}"));
        }
    }
    match &o.barrier {
        Some(b) => {
            let lower = b
                .sweeps
                .iter()
                .flat_map(|s| &s.bands)
                .map(|x| x.lower_slack)
                .fold(f64::INFINITY, f64::min);
            let upper = b
                .sweeps
                .iter()
                .flat_map(|s| &s.bands)
                .map(|x| x.upper_slack_max)
                .fold(f64::INFINITY, f64::min);
            v.note(format!(
                "at T = 0.1 every iterate satisfies -M - tol <= u <= max phi_M + tol: {} (min slacks {lower:.3e}, {upper:.3e}; max phi_M = {:.4})",
                b.passed_max, b.phi_max
            ));
        }
        None => v.note("barrier check unavailable"),
    }
    v
}

fn criterion_9() -> Verdict {
    let mut v = Verdict::new();
    let spec = DomainSpec::interval(0.0, 1.0, 201, 150, 0.15).unwrap();
    let decomp = Decomposition::build(&spec, 1, 0.0).unwrap();
    let data =
        ProblemData::new(&spec, &decomp, vec![10.0; 201], BoundaryFn::constant(10.0)).unwrap();
    let u = monolithic_solve(
        &spec,
        &Nonlinearity::square(),
        &data,
        &SolverOptions::default(),
    )
    .unwrap();
    match u.diverged {
        Some(d) => v.check(
            d.time > 0.08 && d.time <= 0.12,
            format!("diverged flag at t = {:.3} in (0.08, 0.12]", d.time),
        ),
        None => v.check(false, "no divergence flagged by t = 0.15"),
    }
    v
}

fn run_binary(cmd: &str, cfg: &Path, out: &Path, workers: usize, vary: &[&str]) -> Vec<u8> {
    let w = workers.to_string();
    let mut args = vec![
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        &w,
    ];
    for o in vary {
        args.extend(["--vary", o]);
    }
    let status = Command::new(env!("CARGO_BIN_EXE_swr"))
        .args(&args)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let name = if cmd == "sweep-study" {
        "study.csv"
    } else {
        "metrics.csv"
    };
    std::fs::read(out.join(name)).unwrap()
}

fn criterion_10() -> Verdict {
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("canonical.toml");
    std::fs::write(&cfg, CANONICAL).unwrap();
    let cases: [(&str, &str, &[&str]); 4] = [
        ("criteria 1-2", "swr", &["output.fields=false"]),
        ("criterion 3", "sweep-study", &[]),
        (
            "criterion 4, I = 3",
            "swr",
            &[
                "output.fields=false",
                "decomposition.bands=3",
                "decomposition.overlap_fraction=0.3",
            ],
        ),
        (
            "criterion 4, I = 4",
            "swr",
            &[
                "output.fields=false",
                "decomposition.bands=4",
                "decomposition.overlap_fraction=0.4",
            ],
        ),
    ];
    for (name, cmd, vary) in cases {
        let runs: Vec<Vec<u8>> = [1, 2, 4]
            .iter()
            .map(|&w| run_binary(cmd, &cfg, &dir.path().join(format!("{cmd}-{w}")), w, vary))
            .collect();
        let same = runs.windows(2).all(|p| p[0] == p[1]);
        v.check(
            same,
            format!(
                "{name}: CSV identical for --workers 1, 2, 4 ({} bytes)",
                runs[0].len()
            ),
        );
    }
    v
}

type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn main() {
    let canonical_cfg = canonical();
    let start = Instant::now();
    let canonical_run = pipeline(&canonical_cfg);
    let seconds = start.elapsed().as_secs_f64();

    let criteria: Vec<(&str, Check<'_>)> = vec![
        (
            "oracle equivalence at the fixed point",
            Box::new(|| criterion_1(&canonical_run, seconds)),
        ),
        (
            "geometric decay and certified bound",
            Box::new(|| criterion_2(&canonical_run)),
        ),
        ("overlap monotonicity", Box::new(criterion_3)),
        ("multi-band law", Box::new(criterion_4)),
        ("theory-constant round trips", Box::new(criterion_5)),
        ("linear-solver oracle", Box::new(criterion_6)),
        ("Picard contraction", Box::new(criterion_7)),
        ("barrier below T*", Box::new(|| criterion_8(&canonical_run))),
        ("blow-up detection", Box::new(criterion_9)),
        ("determinism across worker counts", Box::new(criterion_10)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = check();
        println!(
            "criterion {:2}: {} ({name})",
            i + 1,
            if verdict.pass { "PASS" } else { "FAIL" }
        );
        for d in &verdict.detail {
            println!("    {d}");
        }
        if !verdict.pass {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
