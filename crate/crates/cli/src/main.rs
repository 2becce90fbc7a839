//! `rheo`: run channel-flow scenarios, parameter sweeps, relation admission
//! checks and oracle profiles from the command line.
//!
//! Exit codes: 0 success, 1 a tolerance or admissibility check failed,
//! 2 usage, parse or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rheo_core::admissibility::{AdmissibilitySuite, Family};
use rheo_core::harness::bundled::{self, RELATIONS, SCENARIOS};
use rheo_core::harness::{self, RunOptions, Scenario, SweepParam, SweepResult};
use rheo_core::RheoError;

#[derive(Parser, Debug)]
#[command(
    name = "rheo",
    version,
    about = "Implicitly constituted fluid rheology: admission checks and channel flows"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random choice (sampling, initial perturbations).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for snapshots, ledgers, profiles and metrics.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario (file path or bundled name) and check its tolerances.
    Run {
        scenario: String,
        /// Also write the metrics JSON to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rerun a scenario over decreasing values of one parameter.
    Sweep {
        scenario: String,
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        /// Strictly decreasing values, comma- or space-separated.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Fail unless every observed order reaches this value.
        #[arg(long)]
        min_order: Option<f64>,
        /// Fail unless the errors decrease monotonically.
        #[arg(long)]
        require_monotone: bool,
        /// Write the sweep result JSON to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check a relation (file path or bundled name) against the admissibility conditions.
    Admit {
        relation: String,
        /// Samples per radius shell.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Spatial dimension of the sampled tensors (2 or 3).
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Write the admissibility JSON to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the closed-form reference profile of a scenario as CSV.
    Oracle {
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Number of equispaced samples across the channel.
        #[arg(long, default_value_t = 129)]
        samples: usize,
        /// Evaluation time for transient oracles (default: the scenario end time).
        #[arg(long)]
        t: Option<f64>,
    },
    /// List the bundled scenarios and relations.
    List,
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    SweepParam::parse(s).ok_or_else(|| format!("unknown parameter `{s}` (expected eps, delta, h or dt)"))
}

/// A run that completed but failed one of its checks.
#[derive(Debug)]
struct CheckFailure(String);

impl std::fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<CheckFailure>().is_some() {
        return 1;
    }
    match err.downcast_ref::<RheoError>() {
        Some(e) if e.is_usage() => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn load_scenario(arg: &str) -> anyhow::Result<Scenario> {
    let text = bundled::resolve(arg, SCENARIOS, "scenario")?;
    Scenario::parse(&text)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("scenario `{arg}`"))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(RheoError::from)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(RheoError::from)?;
    std::fs::write(path, text + "\n").map_err(RheoError::from)?;
    Ok(())
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn cmd_run(g: &Global, scenario: &str, report: Option<&Path>) -> anyhow::Result<()> {
    let sc = load_scenario(scenario)?;
    let opts = RunOptions {
        seed: g.seed,
        out_dir: g.out_dir.clone(),
    };
    let out = harness::run_scenario(&sc, &opts)?;
    let m = &out.metrics;
    println!("scenario {} ({} steps, t = {})", m.name, m.steps, m.t_final);
    if let Some(e) = m.profile_l2_error {
        println!("  profile L2 error     {e:.3e}");
    }
    println!(
        "  max defect           {:.3e} (bound {:.3e})",
        m.max_defect, m.defect_bound
    );
    println!("  max div ratio        {:.3e}", m.max_div_ratio);
    for (name, ok) in &m.checks {
        println!("  {:<20} {}", name, pass(*ok));
    }
    if let Some(dir) = &g.out_dir {
        println!("  artifacts in {}", dir.join(&m.name).display());
    }
    if let Some(path) = report {
        write_json(m, path)?;
    }
    if !m.passed {
        return Err(CheckFailure(format!("scenario `{}` failed its checks", m.name)).into());
    }
    Ok(())
}

fn print_sweep(r: &SweepResult) {
    println!(
        "sweep {} over {} ({} error)",
        r.scenario,
        r.param.as_str(),
        serde_json::to_value(r.error_measure)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    );
    for (k, run) in r.runs.iter().enumerate() {
        let err = r
            .errors
            .get(k)
            .map(|e| format!("{e:.4e}"))
            .unwrap_or_else(|| "-".into());
        let order = r
            .observed_orders
            .get(k)
            .map(|o| format!("{o:.3}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  {:<12e} error {:<12} order {:<8} checks {}",
            run.value,
            err,
            order,
            pass(run.passed)
        );
    }
    println!(
        "  monotone decrease: {}",
        if r.monotone_decreasing { "yes" } else { "no" }
    );
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    g: &Global,
    scenario: &str,
    param: SweepParam,
    values: &[f64],
    min_order: Option<f64>,
    require_monotone: bool,
    report: Option<&Path>,
) -> anyhow::Result<()> {
    let sc = load_scenario(scenario)?;
    let opts = RunOptions {
        seed: g.seed,
        out_dir: g.out_dir.clone(),
    };
    let r = harness::sweep(&sc, param, values, &opts)?;
    print_sweep(&r);
    let path = report.map(Path::to_path_buf).or_else(|| {
        g.out_dir
            .as_ref()
            .map(|d| d.join(format!("sweep_{}_{}.json", sc.name, param.as_str())))
    });
    if let Some(path) = path {
        write_json(&r, &path)?;
    }
    let mut failures = Vec::new();
    if let Some(p) = min_order {
        match r.min_order() {
            Some(o) if o >= p => {}
            o => failures.push(format!("observed order {o:?} below {p}")),
        }
    }
    if require_monotone && !r.monotone_decreasing {
        failures.push("errors do not decrease monotonically".into());
    }
    if r.runs.iter().any(|run| !run.passed) {
        failures.push("a run failed its checks".into());
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CheckFailure(failures.join("; ")).into())
    }
}

fn short(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn print_admission(s: &AdmissibilitySuite) {
    let family = match s.family {
        Family::Bulk => "bulk",
        Family::Boundary => "wall",
    };
    println!("{family} relation {} ({} form, dim {})", s.kind, s.orientation, s.dim);
    for r in &s.reports {
        let name = match s.family {
            Family::Bulk => r.condition.as_str().to_string(),
            Family::Boundary => r.condition.as_str().to_lowercase(),
        };
        let status = if r.inconclusive { "inconclusive" } else { pass(r.passed) };
        let consts: Vec<String> = r
            .estimated_constants
            .iter()
            .map(|(k, v)| format!("{k}={}", short(*v)))
            .collect();
        println!("  {:<7} {:<12} {}", name, status, consts.join(" "));
        if let (false, Some(w)) = (r.passed, &r.worst_witness) {
            println!("          witness: {} (margin {:.3e})", w.description, w.margin);
        }
    }
    println!("  overall {}", pass(s.all_passed));
}

fn cmd_admit(g: &Global, relation: &str, samples: usize, dim: usize, report: Option<&Path>) -> anyhow::Result<()> {
    let text = bundled::resolve(relation, RELATIONS, "relation")?;
    let suite = harness::admit(&text, g.seed, samples, dim).with_context(|| format!("relation `{relation}`"))?;
    print_admission(&suite);
    let path = report
        .map(Path::to_path_buf)
        .or_else(|| g.out_dir.as_ref().map(|d| d.join(format!("admit_{}.json", suite.kind))));
    if let Some(path) = path {
        write_json(&suite, &path)?;
    }
    if !suite.all_passed {
        return Err(CheckFailure(format!("relation `{relation}` is not admissible")).into());
    }
    Ok(())
}

fn cmd_oracle(scenario: &str, out: &Path, samples: usize, t: Option<f64>) -> anyhow::Result<()> {
    let sc = load_scenario(scenario)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(RheoError::from)?;
    }
    let p = harness::write_oracle(&sc, samples, t, out)?;
    println!("wrote {} samples to {}", p.y.len(), out.display());
    if let Some(w) = p.plug_half_width {
        println!("  plug half-width {w:.6}");
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(RheoError::Config("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Run { scenario, report } => cmd_run(g, scenario, report.as_deref()),
        Command::Sweep {
            scenario,
            param,
            values,
            min_order,
            require_monotone,
            report,
        } => cmd_sweep(
            g,
            scenario,
            *param,
            values,
            *min_order,
            *require_monotone,
            report.as_deref(),
        ),
        Command::Admit {
            relation,
            samples,
            dim,
            report,
        } => cmd_admit(g, relation, *samples, *dim, report.as_deref()),
        Command::Oracle {
            scenario,
            out,
            samples,
            t,
        } => cmd_oracle(scenario, out, *samples, *t),
        Command::List => {
            println!("scenarios:");
            for (n, _) in SCENARIOS {
                println!("  {n}");
            }
            println!("relations:");
            for (n, _) in RELATIONS {
                println!("  {n}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rheo: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
