//! Command-line orchestration: argument parsing, worker-pool setup, mode
//! dispatch, output writing, and exit-code mapping.
//!
//! Usage: `maxwell-adi <run|verify|convergence|scaling> --config <path>
//! [--set key.path=value ...]`. Exit codes: 0 success, 1 configuration
//! error, 2 numerical failure, 3 I/O error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::config::{load_config, RunConfig, RunMode};
use crate::maxwell::{assemble_operators, EMState};
use crate::output::{write_coefficients, write_error_csv, write_text, FieldSnapshot};
use crate::verify::{
    convergence_study, div_norms, error_norms, run_with_errors, scaling_study, ErrorReport,
};
use crate::{Error, Result};

/// Environment variable overriding the worker-pool size (positive integer;
/// default is the available parallelism).
pub const THREADS_ENV: &str = "MAXWELL_ADI_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModeArg {
    Run,
    Verify,
    Convergence,
    Scaling,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Run => RunMode::Run,
            ModeArg::Verify => RunMode::Verify,
            ModeArg::Convergence => RunMode::Convergence,
            ModeArg::Scaling => RunMode::Scaling,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "maxwell-adi",
    about = "Linear-cost ADI time stepping for Maxwell's equations on B-spline spaces"
)]
struct Args {
    /// Execution mode.
    #[arg(value_enum)]
    mode: ModeArg,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path config overrides, e.g. --set time.tau=0.05.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Exit code for an error: 1 configuration, 2 numerical, 3 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Format(_) => 1,
        Error::Io { .. } => 3,
        Error::OutsideDomain { .. }
        | Error::DimensionMismatch(_)
        | Error::Singular { .. }
        | Error::Numerical(_)
        | Error::TooLargeForDense(_) => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        1 => "config",
        3 => "io",
        _ => "numerical",
    }
}

fn parse_threads(v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })
}

fn init_thread_pool() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n = parse_threads(&v)?;
        // A failure means a global pool already exists; keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Full command-line entry point; returns the process exit code and prints
/// a one-line machine-parsable reason on failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match init_thread_pool().and_then(|()| dispatch(&args)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", error_kind(&e));
            exit_code(&e)
        }
    }
}

fn dispatch(args: &Args) -> Result<()> {
    let mode: RunMode = args.mode.into();
    let (cfg, resolved) = load_config(&args.config, &args.set)?;
    if let Some(pinned) = cfg.mode {
        if pinned != mode {
            return Err(Error::Config(format!(
                "config pins mode {pinned} but the command line selected {mode}"
            )));
        }
    }
    let out_dir = cfg
        .output
        .directory
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
        path: out_dir.clone(),
        source: e,
    })?;
    // Every run echoes the resolved configuration beside its outputs.
    write_text(&out_dir.join("resolved-config.toml"), &resolved)?;

    match mode {
        RunMode::Verify => mode_verify(&cfg, &out_dir),
        RunMode::Run => mode_run(&cfg, &out_dir),
        RunMode::Convergence => mode_convergence(&cfg, &out_dir),
        RunMode::Scaling => mode_scaling(&cfg, &out_dir),
    }
}

fn format_quad(label: &str, q: [f64; 4]) -> String {
    format!(
        "{label}: l2_E={} l2_H={} hcurl_E={} hcurl_H={}",
        q[0], q[1], q[2], q[3]
    )
}

fn mode_verify(cfg: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let ms = cfg.initial.manufactured_solution()?.ok_or_else(|| {
        Error::Config("verify mode needs a manufactured initial condition".into())
    })?;
    let sc = cfg.scheme_config()?;
    let (_, report) = run_with_errors(&sc, &ms)?;
    if cfg.output.error_csv {
        write_error_csv(&report, &out_dir.join("errors.csv"))?;
    }
    let max = report.max_errors();
    let fin = report.final_errors();
    println!(
        "verify: {} steps, tau={}, final time {}",
        sc.n_steps, sc.tau, sc.final_time
    );
    println!("{}", format_quad("verify max", max));
    println!("{}", format_quad("verify final", fin));
    let l2_bound = cfg.verify.max_l2_error;
    let hcurl_bound = cfg.verify.max_hcurl_error;
    let pass = max[0] < l2_bound && max[1] < l2_bound && max[2] < hcurl_bound && max[3] < hcurl_bound;
    if pass {
        println!("verify: PASS (l2 < {l2_bound}, hcurl < {hcurl_bound})");
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "verify bounds exceeded: max l2 ({}, {}) vs {l2_bound}, max hcurl ({}, {}) vs {hcurl_bound}",
            max[0], max[1], max[2], max[3]
        )))
    }
}

fn mode_run(cfg: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let sc = cfg.scheme_config()?;
    let ops = assemble_operators(&sc)?;
    let ms = cfg.initial.manufactured_solution()?;
    let mut state = match &ms {
        Some(ms) => ops.project_state(|x, y, z| ms.eval([x, y, z], 0.0), 0.0)?,
        None => EMState::zeros(ops.dims()),
    };
    let track_errors = cfg.output.error_csv && ms.is_some();
    let mut report = ErrorReport::default();
    if let (true, Some(ms)) = (track_errors, &ms) {
        report.rows.push(error_norms(&ops, &state, ms, 0));
    }

    let cadence = cfg.output.snapshot_every;
    let snapshot = |state: &EMState, step: usize| -> Result<()> {
        let snap = FieldSnapshot::sample(&sc.spaces, state, cfg.output.snapshot_resolution)?;
        snap.write(&out_dir.join(format!("snapshot-{step:06}.vtk")))
    };
    if cadence > 0 {
        snapshot(&state, 0)?;
    }
    for step in 1..=sc.n_steps {
        ops.step(&mut state)?;
        if !state.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite field coefficients at step {step}"
            )));
        }
        if let (true, Some(ms)) = (track_errors, &ms) {
            report.rows.push(error_norms(&ops, &state, ms, step));
        }
        if cadence > 0 && (step % cadence == 0 || step == sc.n_steps) {
            snapshot(&state, step)?;
        }
    }

    if track_errors {
        write_error_csv(&report, &out_dir.join("errors.csv"))?;
        println!("{}", format_quad("run max", report.max_errors()));
    }
    if cfg.output.dump_coefficients {
        write_coefficients(&state, &out_dir.join("coefficients.csv"))?;
    }
    let (div_e, div_h) = div_norms(&ops, &state);
    println!(
        "run: completed {} steps to t={}; divergence |div E|={div_e} |div H|={div_h}",
        sc.n_steps, sc.final_time
    );
    Ok(())
}

fn mode_convergence(cfg: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let ms = cfg.initial.manufactured_solution()?.ok_or_else(|| {
        Error::Config("convergence mode needs a manufactured initial condition".into())
    })?;
    let sc = cfg.scheme_config()?;
    let table = convergence_study(&sc, &ms, &cfg.convergence.taus)?;
    let mut csv = String::from("tau,n_steps,l2_E,l2_H,hcurl_E,hcurl_H\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.tau,
            row.n_steps,
            row.at_final[0],
            row.at_final[1],
            row.at_final[2],
            row.at_final[3]
        ));
        println!(
            "{}",
            format_quad(&format!("convergence tau={}", row.tau), row.at_final)
        );
    }
    write_csv(out_dir, "convergence.csv", &csv)?;
    if let Some(s) = table.slopes {
        println!(
            "convergence slopes: l2_E={} l2_H={} hcurl_E={} hcurl_H={}",
            s[0], s[1], s[2], s[3]
        );
    }
    Ok(())
}

fn write_csv(out_dir: &std::path::Path, name: &str, text: &str) -> Result<()> {
    write_text(&out_dir.join(name), text)
}

fn mode_scaling(cfg: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let degree = cfg.mesh.degree;
    let continuity = cfg
        .mesh
        .continuity
        .unwrap_or_else(|| degree.saturating_sub(1));
    let s = &cfg.scaling;
    let table = scaling_study(
        &s.sizes,
        degree,
        continuity,
        s.tau,
        s.steps,
        s.reps,
        &|_, spaces| cfg.materials.build(spaces, &cfg.base_dir),
    )?;
    let mut csv = String::from("elements,unknowns,seconds_per_step\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.elements_per_axis, row.unknowns_per_component, row.seconds_per_step
        ));
        println!(
            "scaling: {}^3 elements, {} unknowns/component, {} s/step",
            row.elements_per_axis, row.unknowns_per_component, row.seconds_per_step
        );
    }
    write_csv(out_dir, "scaling.csv", &csv)?;
    if !table.ratios.is_empty() {
        println!(
            "scaling ratios per size increase: {}",
            table
                .ratios
                .iter()
                .map(|r| format!("{r:.2}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(())
}
