use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{Context, Result};
use asmc::math::{OvershootBound, TheoremBounds};
use asmc::presets;
use asmc::scenario::{LoadedScenario, ScenarioFile};
use asmc::sim::{
    compute_metrics, lyapunov_trace, run_scenario, verify_theorem2, verify_theorem3, RunMetrics,
    Theorem2Report, Theorem3Report, TrajectoryLog,
};
use asmc::Error;
use serde_json::json;

use crate::report;

/// Maps an error to the documented exit code.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::BlowUp { .. } | Error::Controllability { .. }) => 3,
        Some(err) if err.is_validation() => 2,
        _ => 1,
    }
}

/// Resolves a scenario argument: an existing file first, then a preset name.
fn load(arg: &str, dt: Option<f64>, t_end: Option<f64>) -> asmc::Result<LoadedScenario> {
    let path = Path::new(arg);
    if path.exists() {
        ScenarioFile::load_with(path, dt, t_end)
    } else if presets::source(arg).is_some() {
        presets::load_with(arg, dt, t_end)
    } else {
        Err(Error::Config {
            location: arg.to_string(),
            message: "no such scenario file or preset (see `asmc presets list`)".into(),
        })
    }
}

fn warn_all(l: &LoadedScenario) {
    for w in &l.warnings {
        eprintln!("warning: {}: {w}", l.scenario.name);
    }
}

struct Outcome {
    log: TrajectoryLog,
    metrics: RunMetrics,
}

fn simulate(l: &LoadedScenario) -> asmc::Result<Outcome> {
    let log = run_scenario(&l.scenario)?;
    let mut metrics = compute_metrics(&log, l.metrics_phi)?;
    if let Some(p) = l.new_adaptive() {
        metrics.theorem2_satisfied = verify_theorem2(&log, p.k, p.rho, l.mu(), None)?.satisfied();
    }
    Ok(Outcome { log, metrics })
}

fn metadata(l: &LoadedScenario, o: &Outcome) -> serde_json::Value {
    let s = &l.scenario;
    json!({
        "scenario": s.name,
        "plant": s.plant.name(),
        "controller": s.controller.name(),
        "uncertainty": s.uncertainty.kind.name(),
        "true_bound_mu": s.uncertainty.true_bound_mu,
        "integration": {
            "dt": s.integration.dt,
            "substeps": s.integration.substeps,
            "t_end": s.integration.t_end,
            "plant_integrator": "rk4",
            "control": "zero-order hold",
            "adaptive_update": "explicit euler",
        },
        "metrics_phi": l.metrics_phi,
        "rows": o.log.len(),
        "metrics": o.metrics,
        "warnings": l.warnings,
    })
}

fn write_outputs(
    dir: &Path,
    l: &LoadedScenario,
    o: &Outcome,
    precision: usize,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = dir.join(format!("{}.csv", l.scenario.name));
    let file = File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
    o.log.write_csv(BufWriter::new(file), precision)?;
    let meta = dir.join(format!("{}.metrics.json", l.scenario.name));
    fs::write(&meta, serde_json::to_string_pretty(&metadata(l, o))? + "\n")
        .with_context(|| format!("writing {}", meta.display()))?;
    Ok((csv, meta))
}

pub fn run(
    arg: &str,
    out: Option<PathBuf>,
    dt: Option<f64>,
    t_end: Option<f64>,
    precision: usize,
) -> Result<ExitCode> {
    let l = load(arg, dt, t_end)?;
    warn_all(&l);
    let o = simulate(&l)?;
    let dir = out
        .or_else(|| l.file.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let (csv, meta) = write_outputs(&dir, &l, &o, precision)?;
    print!("{}", report::metrics_text(&l, &o.metrics, o.log.len()));
    println!("wrote {} and {}", csv.display(), meta.display());
    Ok(ExitCode::SUCCESS)
}

pub fn compare(args: &[String], out: &Path, precision: usize) -> Result<ExitCode> {
    let loaded = args
        .iter()
        .map(|a| load(a, None, None))
        .collect::<asmc::Result<Vec<_>>>()?;
    let first = &loaded[0].scenario;
    for l in &loaded[1..] {
        let s = &l.scenario;
        if s.plant != first.plant || s.uncertainty != first.uncertainty {
            return Err(Error::Config {
                location: s.name.clone(),
                message: format!(
                    "plant/uncertainty differ from {}; comparisons need a shared plant and disturbance",
                    first.name
                ),
            }
            .into());
        }
    }
    let mut names: Vec<&str> = loaded.iter().map(|l| l.scenario.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config {
            location: "compare".into(),
            message: "scenario names must be distinct, they name the output files".into(),
        }
        .into());
    }
    loaded.iter().for_each(warn_all);

    let outcomes: Vec<asmc::Result<Outcome>> = thread::scope(|scope| {
        let handles: Vec<_> = loaded
            .iter()
            .map(|l| scope.spawn(move || simulate(l)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let outcomes = outcomes
        .into_iter()
        .zip(&loaded)
        .map(|(o, l)| o.with_context(|| format!("scenario {}", l.scenario.name)))
        .collect::<Result<Vec<_>>>()?;

    for (l, o) in loaded.iter().zip(&outcomes) {
        write_outputs(out, l, o, precision)?;
    }
    let rows: Vec<_> = loaded
        .iter()
        .zip(&outcomes)
        .map(|(l, o)| (l, &o.metrics))
        .collect();
    let summary = json!(rows
        .iter()
        .map(|(l, m)| json!({"scenario": l.scenario.name, "controller": l.scenario.controller.name(), "metrics": m}))
        .collect::<Vec<_>>());
    let path = out.join("comparison.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    print!("{}", report::comparison_table(&rows));
    println!("wrote per-run CSVs and {}", path.display());
    Ok(ExitCode::SUCCESS)
}

pub fn verify(arg: &str, b: Option<f64>) -> Result<ExitCode> {
    let l = load(arg, None, None)?;
    let Some(p) = l.new_adaptive() else {
        return Err(Error::Config {
            location: l.scenario.name.clone(),
            message: format!(
                "verify needs the new_adaptive controller, found {}",
                l.scenario.controller.name()
            ),
        }
        .into());
    };
    warn_all(&l);
    let mu = l.mu();
    let log = run_scenario(&l.scenario)?;
    let v0p = log.s[0].abs() + if p.k > 0.0 { log.gain[0] / p.k } else { 0.0 };
    let bounds = TheoremBounds::compute(v0p, p.k, p.rho, mu, p.phi, b)?;

    println!(
        "scenario {} (mu = {mu}, phi = {}, rho = {}, k = {})",
        l.scenario.name, p.phi, p.rho, p.k
    );
    println!("  eta        = {:.9}", bounds.eta);
    match bounds.sigma {
        Some(s) => println!("  sigma      = {s:.9} (sigma/k = {:.9})", s / p.k),
        None => println!("  sigma      = undefined (k = 0)"),
    }
    match bounds.reach {
        Some(r) => println!("  b          = {:.9}\n  T          = {:.9} s", r.b, r.time),
        None => println!("  b, T       = not applicable"),
    }
    match bounds.overshoot {
        OvershootBound::Feasible { m, delta } => {
            println!("  m          = {m:.9}\n  delta      = {delta:.9}")
        }
        OvershootBound::Infeasible => println!("  m, delta   = infeasible"),
    }

    let mut failed = false;
    let mut line = |name: &str, verdict: Option<bool>, detail: String| {
        let tag = match verdict {
            Some(true) => "PASS",
            Some(false) => {
                failed = true;
                "FAIL"
            }
            None => "N/A ",
        };
        println!("{tag} {name}: {detail}");
    };

    let tr = lyapunov_trace(&log, mu, p.rho, p.phi, p.k)?;
    let ok = tr.satisfied_fraction() >= 0.99 && tr.unexplained_violations() == 0;
    line(
        "lyapunov decrease",
        Some(ok),
        format!(
            "{:.4}% of {} rows with |s| >= eta, {} unexplained violations",
            100.0 * tr.satisfied_fraction(),
            tr.checked(),
            tr.unexplained_violations()
        ),
    );

    match verify_theorem2(&log, p.k, p.rho, mu, b)? {
        Theorem2Report::NotApplicable { reason } => line("reach bound", None, reason),
        Theorem2Report::Checked {
            b,
            max_vprime_after,
            satisfied,
            first_violation,
            ..
        } => line(
            "reach bound",
            Some(satisfied),
            format!(
                "max V' after T = {max_vprime_after:.9} vs 1.05 b = {:.9}{}",
                1.05 * b,
                first_violation.map_or(String::new(), |t| format!(", first violation at t = {t}"))
            ),
        ),
    }

    match verify_theorem3(&log, &bounds) {
        Theorem3Report::Infeasible => {
            line("overshoot bound", None, "no admissible stiffness m".into())
        }
        Theorem3Report::NotApplicable { reason } => line("overshoot bound", None, reason),
        Theorem3Report::Checked {
            entry_time,
            delta,
            max_excursion,
            satisfied,
            ..
        } => line(
            "overshoot bound",
            Some(satisfied),
            format!(
                "max |s| after t = {entry_time:.4} s is {max_excursion:.9} vs 1.05 delta = {:.9}",
                1.05 * delta
            ),
        ),
    }

    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

pub fn list_presets() -> Result<ExitCode> {
    for name in presets::names() {
        let src = presets::source(name).expect("listed preset exists");
        let desc = ScenarioFile::from_toml_str(src, name)?
            .description
            .unwrap_or_default();
        println!("{name:<24} {desc}");
    }
    Ok(ExitCode::SUCCESS)
}
