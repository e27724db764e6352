//! Command-line front end: file ingestion, dispatch, and report emission.
//!
//! Reports are JSON (optionally with CSV/SVG sidecars next to `--out`) and
//! are byte-identical across runs for a fixed manifest and seed. Exit codes:
//! 0 success, 2 certification failure (some inequality violated), 3 input
//! error, 4 resource exhaustion or non-convergence.

mod svg;

use clap::{Parser, Subcommand, ValueEnum};
use paraselect_core::error::{
    MapError, ParaconvexityError, SelectionError, SemenovError,
};
use paraselect_core::paraconvexity::{
    default_grids, defect, profile, GridBudget, HullSampling,
};
use paraselect_core::selection::{
    demo_glue_failure, demo_glue_repaired, glue, run, verify_trace, GlueReport, SelectionConfig,
    SelectionTrace, VertexFunction,
};
use paraselect_core::semenov::{check_ps, h_iterates, run_functional, ScalarFn};
use paraselect_core::{build_cover_chain, PointCloud, SetValuedMap};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "paraselect",
    version,
    about = "Paraconvexity defect analysis and continuous-selection construction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the paraconvexity defect of a point cloud.
    Analyze {
        #[arg(long)]
        set: PathBuf,
        /// Grid budget level: centers per axis of the sweep.
        #[arg(long, default_value_t = 9)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Radius-resolved defect profile of a point cloud.
    Profile {
        #[arg(long)]
        set: PathBuf,
        /// Comma-separated radii; defaults to the geometric sweep grid.
        #[arg(long)]
        radii: Option<String>,
        #[arg(long, default_value_t = 9)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run the successive-approximation engine and certify the trace.
    Select {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        r0: f64,
        #[arg(long = "tol-stop", default_value_t = 1e-8)]
        tol_stop: f64,
        /// Defect profile h for the functional engine (with --H).
        #[arg(long = "h")]
        h_fn: Option<String>,
        /// Damping function H strictly dominating h (with --h).
        #[arg(long = "H")]
        cap_fn: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Build a cover chain and glue per-level selections.
    Glue {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        r0: f64,
        #[arg(long = "tol-stop", default_value_t = 1e-8)]
        tol_stop: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Iterate the damping recursion H_{n+1}(t) = H(H_n(t) t) H_n(t).
    Hseries {
        #[arg(long = "H")]
        cap_fn: String,
        #[arg(long)]
        t: f64,
        #[arg(long = "n-max", default_value_t = 64)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Check strict domination plus series convergence for (h, H).
    Checkps {
        #[arg(long = "h")]
        h_fn: String,
        #[arg(long = "H")]
        cap_fn: String,
        #[arg(long = "t-grid", default_value = "0.5,1,2")]
        t_grid: String,
        #[arg(long = "n-max", default_value_t = 1000)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the oscillation counterexample for naive gluing, next to
    /// the repaired closure-of-open-cover construction.
    DemoGlueFailure {
        #[arg(long = "n-max", default_value_t = 50)]
        n_max: u32,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Independently replay every inequality of an emitted trace.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    #[cfg(feature = "parallel")]
    init_thread_cap();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(feature = "parallel")]
fn init_thread_cap() {
    if let Ok(raw) = std::env::var("PARASELECT_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Analyze {
            set,
            budget,
            seed,
            out,
            format,
        } => cmd_analyze(&set, budget, seed, out.as_deref(), format),
        Command::Profile {
            set,
            radii,
            budget,
            seed,
            out,
            format,
        } => cmd_profile(&set, radii.as_deref(), budget, seed, out.as_deref(), format),
        Command::Select {
            map,
            g,
            alpha,
            gamma,
            delta,
            r0,
            tol_stop,
            h_fn,
            cap_fn,
            out,
            format,
        } => cmd_select(
            &map,
            &g,
            alpha,
            gamma,
            delta,
            r0,
            tol_stop,
            h_fn.as_deref(),
            cap_fn.as_deref(),
            out.as_deref(),
            format,
        ),
        Command::Glue {
            map,
            g,
            beta,
            alpha,
            gamma,
            delta,
            r0,
            tol_stop,
            out,
            format,
        } => cmd_glue(
            &map,
            &g,
            beta,
            alpha,
            gamma,
            delta,
            r0,
            tol_stop,
            out.as_deref(),
            format,
        ),
        Command::Hseries {
            cap_fn,
            t,
            n_max,
            out,
            format,
        } => cmd_hseries(&cap_fn, t, n_max, out.as_deref(), format),
        Command::Checkps {
            h_fn,
            cap_fn,
            t_grid,
            n_max,
            out,
        } => cmd_checkps(&h_fn, &cap_fn, &t_grid, n_max, out.as_deref()),
        Command::DemoGlueFailure {
            n_max,
            step,
            out,
            format,
        } => cmd_demo(n_max, step, out.as_deref(), format),
        Command::Verify { trace, map, out } => cmd_verify(&trace, &map, out.as_deref()),
    }
}

fn budget_from_level(level: usize, seed: u64) -> GridBudget {
    GridBudget {
        centers_per_axis: level.max(3),
        radii_count: (level + 4).max(6),
        refine_rounds: 2,
        sampling: HullSampling {
            random_samples: 24,
            ascent_steps: 20,
            seed,
        },
    }
}

fn cmd_analyze(
    set: &Path,
    budget: usize,
    seed: u64,
    out: Option<&Path>,
    format: Format,
) -> Result<u8, Failure> {
    let cloud: PointCloud = read_json(set)?;
    let grids = default_grids(&cloud, &budget_from_level(budget, seed));
    let report = defect(&cloud, &grids).map_err(para_failure)?;
    let replayed = report.replay_ratio(&cloud).map_err(para_failure)?;

    #[derive(Serialize)]
    struct AnalyzeResult {
        report: paraselect_core::paraconvexity::ParaconvexityReport,
        replayed_witness_ratio: f64,
    }
    let params = serde_json::json!({
        "set": set.display().to_string(),
        "budget": budget,
        "seed": seed,
    });
    let result = AnalyzeResult {
        report,
        replayed_witness_ratio: replayed,
    };
    let sidecar = match format {
        Format::Json => None,
        Format::Csv => Some((
            "csv",
            format!("alpha_hat,replayed_ratio\n{},{}\n", result.report.alpha_hat, replayed),
        )),
        Format::Svg => None,
    };
    emit("analyze", params, &result, out, sidecar)?;
    Ok(0)
}

fn cmd_profile(
    set: &Path,
    radii: Option<&str>,
    budget: usize,
    seed: u64,
    out: Option<&Path>,
    format: Format,
) -> Result<u8, Failure> {
    let cloud: PointCloud = read_json(set)?;
    let budget = budget_from_level(budget, seed);
    let radii_grid: Vec<f64> = match radii {
        Some(list) => parse_floats(list)?,
        None => default_grids(&cloud, &budget).radii,
    };
    let prof = profile(&cloud, &radii_grid, &budget).map_err(para_failure)?;
    let params = serde_json::json!({
        "set": set.display().to_string(),
        "budget": budget.centers_per_axis,
        "seed": seed,
        "radii": radii_grid,
    });
    let sidecar = match format {
        Format::Json => None,
        Format::Csv => Some(("csv", prof.to_csv())),
        Format::Svg => {
            let pts: Vec<(f64, f64)> = prof
                .radii
                .iter()
                .cloned()
                .zip(prof.h_hat.iter().cloned())
                .collect();
            Some((
                "svg",
                svg::polyline_plot("radius-resolved defect", "r", "h_hat", &pts),
            ))
        }
    };
    emit("profile", params, &prof, out, sidecar)?;
    Ok(0)
}

#[derive(Serialize)]
struct SelectResult {
    trace: SelectionTrace,
    certification: paraselect_core::selection::CertificationReport,
    violation: Option<serde_json::Value>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    map: &Path,
    g_path: &Path,
    alpha: f64,
    gamma: Option<f64>,
    delta: Option<f64>,
    r0: f64,
    tol_stop: f64,
    h_fn: Option<&str>,
    cap_fn: Option<&str>,
    out: Option<&Path>,
    format: Format,
) -> Result<u8, Failure> {
    let phi: SetValuedMap = read_json(map)?;
    let g: VertexFunction = read_json(g_path)?;

    let outcome = match (h_fn, cap_fn) {
        (Some(h_spec), Some(cap_spec)) => {
            let h = ScalarFn::parse_cli(h_spec).map_err(semenov_failure)?;
            let cap = ScalarFn::parse_cli(cap_spec).map_err(semenov_failure)?;
            run_functional(&phi, &g, &h, &cap, r0, tol_stop).map_err(|e| match e {
                SemenovError::Selection(se) => se,
                other => return_failure_as_selection(other),
            })
        }
        (None, None) => {
            let gamma = gamma.unwrap_or((1.0 + alpha) / 2.0);
            let config = SelectionConfig {
                alpha,
                gamma,
                r0,
                delta: delta.unwrap_or(1.0 / (1.0 - gamma) + 0.01),
                tol_stop,
                max_iters: 10_000,
            };
            run(&phi, &g, &config)
        }
        _ => return Err(Failure::input("--h and --H must be given together")),
    };

    let params = serde_json::json!({
        "map": map.display().to_string(),
        "g": g_path.display().to_string(),
        "alpha": alpha,
        "gamma": gamma,
        "delta": delta,
        "r0": r0,
        "tol_stop": tol_stop,
        "h": h_fn,
        "H": cap_fn,
    });

    let (code, result) = match outcome {
        Ok(trace) => {
            let certification = verify_trace(&trace, &phi).map_err(selection_failure)?;
            let code = if certification.certified { 0 } else { 2 };
            (
                code,
                SelectResult {
                    trace,
                    certification,
                    violation: None,
                },
            )
        }
        Err(SelectionError::ParaconvexityViolation {
            iteration,
            vertex,
            residual,
            bound,
            trace: Some(trace),
        }) => {
            let certification = verify_trace(&trace, &phi).map_err(selection_failure)?;
            (
                2,
                SelectResult {
                    trace: *trace,
                    certification,
                    violation: Some(serde_json::json!({
                        "iteration": iteration,
                        "vertex": vertex,
                        "residual": residual,
                        "bound": bound,
                    })),
                },
            )
        }
        Err(SelectionError::MaxIters { max_iters, trace }) => {
            return Err(Failure {
                code: 4,
                message: format!(
                    "no convergence within {max_iters} iterations (final residual {})",
                    trace.map(|t| t.final_residual).unwrap_or(f64::NAN)
                ),
            })
        }
        Err(e) => return Err(selection_failure(e)),
    };

    let sidecar = match format {
        Format::Json => None,
        Format::Csv => Some(("csv", result.trace.to_csv())),
        Format::Svg => {
            let pts: Vec<(f64, f64)> = result
                .trace
                .per_iter
                .iter()
                .map(|s| (s.iteration as f64, s.residual_before))
                .collect();
            Some((
                "svg",
                svg::polyline_plot("selection residuals", "iteration", "max residual", &pts),
            ))
        }
    };
    emit("select", params, &result, out, sidecar)?;
    Ok(code)
}

fn return_failure_as_selection(e: SemenovError) -> SelectionError {
    SelectionError::BadConfig(e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn cmd_glue(
    map: &Path,
    g_path: &Path,
    beta: f64,
    alpha: f64,
    gamma: Option<f64>,
    delta: Option<f64>,
    r0: f64,
    tol_stop: f64,
    out: Option<&Path>,
    format: Format,
) -> Result<u8, Failure> {
    let phi: SetValuedMap = read_json(map)?;
    let g: VertexFunction = read_json(g_path)?;
    let chain = build_cover_chain(&phi, beta).map_err(map_failure)?;
    let gamma = gamma.unwrap_or((1.0 + alpha) / 2.0);
    let config = SelectionConfig {
        alpha,
        gamma,
        r0,
        delta: delta.unwrap_or(1.0 / (1.0 - gamma) + 0.01),
        tol_stop,
        max_iters: 10_000,
    };
    let report = glue(&chain, &phi, &g, &config).map_err(selection_failure)?;

    #[derive(Serialize)]
    struct GlueResult {
        chain: paraselect_core::multimap::CoverChain,
        glue: GlueReport,
    }
    let params = serde_json::json!({
        "map": map.display().to_string(),
        "g": g_path.display().to_string(),
        "beta": beta,
        "alpha": alpha,
        "gamma": gamma,
        "r0": r0,
        "tol_stop": tol_stop,
    });
    let code = if report.certified { 0 } else { 2 };
    let sidecar = match format {
        Format::Json => None,
        Format::Csv => {
            let mut csv = String::from("edge_i,edge_j,length,stretch\n");
            for m in &report.continuity_moduli {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    m.edge.0, m.edge.1, m.length, m.stretch
                ));
            }
            Some(("csv", csv))
        }
        Format::Svg => None,
    };
    emit(
        "glue",
        params,
        &GlueResult {
            chain,
            glue: report,
        },
        out,
        sidecar,
    )?;
    Ok(code)
}

fn cmd_hseries(
    cap_spec: &str,
    t: f64,
    n_max: usize,
    out: Option<&Path>,
    format: Format,
) -> Result<u8, Failure> {
    let cap = ScalarFn::parse_cli(cap_spec).map_err(semenov_failure)?;
    let series = h_iterates(&cap, t, n_max).map_err(semenov_failure)?;
    let params = serde_json::json!({ "H": cap_spec, "t": t, "n_max": n_max });
    let sidecar = match format {
        Format::Json => None,
        Format::Csv => Some(("csv", series.to_csv())),
        Format::Svg => {
            let pts: Vec<(f64, f64)> = series
                .iterates
                .iter()
                .enumerate()
                .map(|(n, h)| (n as f64, *h))
                .collect();
            Some((
                "svg",
                svg::polyline_plot("damping iterates", "n", "H_n(t)", &pts),
            ))
        }
    };
    emit("hseries", params, &series, out, sidecar)?;
    Ok(0)
}

fn cmd_checkps(
    h_spec: &str,
    cap_spec: &str,
    t_grid: &str,
    n_max: usize,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let h = ScalarFn::parse_cli(h_spec).map_err(semenov_failure)?;
    let cap = ScalarFn::parse_cli(cap_spec).map_err(semenov_failure)?;
    let grid = parse_floats(t_grid)?;
    let report = check_ps(&h, &cap, &grid, n_max).map_err(semenov_failure)?;
    let params = serde_json::json!({
        "h": h_spec,
        "H": cap_spec,
        "t_grid": grid,
        "n_max": n_max,
    });
    let code = if report.satisfied { 0 } else { 2 };
    emit("checkps", params, &report, out, None)?;
    Ok(code)
}

/// Summary form of a glue report: witness and moduli in full, pieces by size.
#[derive(Serialize)]
struct GlueSummary {
    certified: bool,
    vertices: usize,
    max_modulus: f64,
    pieces: Vec<PieceSummary>,
    discontinuity_witness: Option<paraselect_core::selection::OscillationWitness>,
}

#[derive(Serialize)]
struct PieceSummary {
    level: u32,
    size: usize,
    internal_modulus: f64,
}

impl From<GlueReport> for GlueSummary {
    fn from(report: GlueReport) -> Self {
        GlueSummary {
            certified: report.certified,
            vertices: report.glued.len(),
            max_modulus: report.max_modulus,
            pieces: report
                .pieces
                .iter()
                .map(|p| PieceSummary {
                    level: p.level,
                    size: p.vertices.len(),
                    internal_modulus: p.internal_modulus,
                })
                .collect(),
            discontinuity_witness: report.discontinuity_witness,
        }
    }
}

fn cmd_demo(n_max: u32, step: f64, out: Option<&Path>, format: Format) -> Result<u8, Failure> {
    let naive = demo_glue_failure(n_max, step).map_err(selection_failure)?;
    let repaired = demo_glue_repaired(n_max, step).map_err(selection_failure)?;

    #[derive(Serialize)]
    struct DemoResult {
        naive: GlueSummary,
        repaired: GlueSummary,
    }
    let params = serde_json::json!({ "n_max": n_max, "step": step });
    let result = DemoResult {
        naive: naive.into(),
        repaired: repaired.into(),
    };
    let code = if result.naive.discontinuity_witness.is_some() {
        2
    } else {
        0
    };
    let sidecar = match (&result.naive.discontinuity_witness, format) {
        (_, Format::Json) => None,
        (Some(w), Format::Csv) => Some(("csv", w.to_csv())),
        (Some(w), Format::Svg) => {
            let pts: Vec<(f64, f64)> = w
                .xs
                .iter()
                .cloned()
                .zip(w.values.iter().cloned())
                .collect();
            Some((
                "svg",
                svg::polyline_plot("glued values near the gap", "x", "f(x)", &pts),
            ))
        }
        (None, _) => None,
    };
    emit("demo-glue-failure", params, &result, out, sidecar)?;
    Ok(code)
}

fn cmd_verify(trace_path: &Path, map: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let phi: SetValuedMap = read_json(map)?;
    let raw: serde_json::Value = read_json(trace_path)?;
    // Accept either a bare trace or a select report carrying result.trace.
    let trace_value = raw
        .pointer("/result/trace")
        .cloned()
        .unwrap_or(raw);
    let trace: SelectionTrace = serde_json::from_value(trace_value)
        .map_err(|e| Failure::input(format!("cannot parse trace: {e}")))?;
    let report = verify_trace(&trace, &phi).map_err(selection_failure)?;
    let params = serde_json::json!({
        "trace": trace_path.display().to_string(),
        "map": map.display().to_string(),
    });
    let code = if report.certified { 0 } else { 2 };
    emit("verify", params, &report, out, None)?;
    Ok(code)
}

fn parse_floats(list: &str) -> Result<Vec<f64>, Failure> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::input(format!("cannot parse number {s:?}")))
        })
        .collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("cannot parse {}: {e}", path.display())))
}

fn emit<T: Serialize>(
    command: &str,
    params: serde_json::Value,
    result: &T,
    out: Option<&Path>,
    sidecar: Option<(&str, String)>,
) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Report<'a, T: Serialize> {
        command: &'a str,
        params: serde_json::Value,
        result: &'a T,
    }
    let report = Report {
        command,
        params,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::input(format!("serialization failed: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
            if let Some((ext, content)) = sidecar {
                let side = path.with_extension(ext);
                std::fs::write(&side, content).map_err(|e| {
                    Failure::input(format!("cannot write {}: {e}", side.display()))
                })?;
            }
        }
        None => {
            if sidecar.is_some() {
                return Err(Failure::input(
                    "--format csv/svg needs --out to place the sidecar file",
                ));
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn para_failure(e: ParaconvexityError) -> Failure {
    let code = match &e {
        ParaconvexityError::BudgetExceeded { .. } => 4,
        _ => 3,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn map_failure(e: MapError) -> Failure {
    Failure {
        code: 3,
        message: e.to_string(),
    }
}

fn semenov_failure(e: SemenovError) -> Failure {
    Failure {
        code: 3,
        message: e.to_string(),
    }
}

fn selection_failure(e: SelectionError) -> Failure {
    let code = match &e {
        SelectionError::ParaconvexityViolation { .. } => 2,
        SelectionError::MaxIters { .. } | SelectionError::Resolution { .. } => 4,
        SelectionError::GlueLevel { source, .. } => {
            let inner = selection_failure_inner(source);
            return Failure {
                code: inner.code,
                message: format!("glue: {}", inner.message),
            };
        }
        _ => 3,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn selection_failure_inner(e: &SelectionError) -> Failure {
    let code = match e {
        SelectionError::ParaconvexityViolation { .. } => 2,
        SelectionError::MaxIters { .. } | SelectionError::Resolution { .. } => 4,
        _ => 3,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}
