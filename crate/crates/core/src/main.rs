use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use approval_envy::dynamics::ef_from_two_app_ef;
use approval_envy::envy::{degree_of_envy, level_is_sm_app_ef, BundleValues};
use approval_envy::experiment::{parse_agent_range, run_experiment, ExperimentConfig, ItemSpec};
use approval_envy::gen::{
    gen_hierarchy_instance, gen_swap_worsens_instance, gen_unanimous_seed, generate, Culture, GenConfig,
};
use approval_envy::hap::{solve_hap, HapKind};
use approval_envy::io::{read_allocation, read_instance, write_allocation, write_instance};
use approval_envy::mip::{build_model, check_assignment, export_lp, ExternalOutcome, ExternalSolver, Feasibility};
use approval_envy::model::{normalize, validate_allocation, Allocation, Instance, NormalizedInstance};
use approval_envy::solver::{solve_min_k, SolveKind, SolveOptions, DEFAULT_BUDGET};
use approval_envy::{Error, Result};

#[derive(Parser)]
#[command(name = "approval-envy", version, about = "Find and check allocations that minimize K-approval envy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CultureArg {
    Uniform,
    Correlated,
    Hap,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Optimum exactly h + 1 (2 <= h <= n - 1).
    Hierarchy,
    /// A weakly improving swap raises the level (0 <= h <= n - 3).
    Swap,
    /// Everybody values item 1 above the rest together.
    Unanimous,
}

#[derive(clap::Args)]
struct Limits {
    /// Maximum number of complete allocations to examine.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    timeout_s: Option<f64>,
}

impl Limits {
    fn options(&self) -> Result<SolveOptions> {
        let timeout = match self.timeout_s {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(Error::Argument(format!("timeout must be a positive number of seconds, got {t}")))
            }
            Some(t) => Some(Duration::from_secs_f64(t)),
            None => None,
        };
        Ok(SolveOptions { budget: Some(self.budget), timeout })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Smallest K admitting a (K-app envy)-free allocation, by exhaustive search.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        limits: Limits,
        #[arg(long)]
        json: bool,
    },
    /// Smallest K over one-item-per-agent allocations (needs n = m).
    Hap {
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Envy measures of a given allocation.
    Check {
        instance: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        /// Also report whether the allocation is (K-app envy)-free.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Write the mixed-integer model in LP format; runs the solver named by
    /// APPROVAL_ENVY_MIP_SOLVER when set.
    EmitLp {
        instance: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate an instance from a random culture or a proof family.
    Gen {
        #[arg(long, required_unless_present = "family")]
        culture: Option<CultureArg>,
        #[arg(long, conflicts_with = "culture")]
        family: Option<Family>,
        #[arg(long)]
        n: usize,
        /// Item count; defaults to n.
        #[arg(long)]
        m: Option<usize>,
        /// Family parameter h.
        #[arg(long)]
        h: Option<usize>,
        /// Correlation strength, `inf` for identical rows.
        #[arg(long, default_value_t = 0.0)]
        concentration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Redraw until no envy-free allocation exists.
        #[arg(long)]
        filter_ef: bool,
        #[command(flatten)]
        limits: Limits,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a batch of random instances and write summary CSV.
    Experiment {
        #[arg(long)]
        culture: CultureArg,
        #[arg(long, default_value_t = 0.0)]
        concentration: f64,
        /// Agent counts: `3..6` (inclusive), `3,5` or `4`.
        #[arg(long)]
        n_range: String,
        /// Item counts: `7`, `6,7` or `n+2`. Ignored for the hap culture.
        #[arg(long, default_value = "n")]
        m: String,
        #[arg(long, default_value_t = 60)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep only instances without an envy-free allocation.
        #[arg(long)]
        filter_ef: bool,
        #[command(flatten)]
        limits: Limits,
        #[arg(long)]
        threads: Option<usize>,
        /// Summary CSV, one row per (n, m).
        #[arg(short, long)]
        output: PathBuf,
        /// Per-instance K/n CSV.
        #[arg(long)]
        instances_out: Option<PathBuf>,
    },
    /// Turn a (2-app envy)-free allocation into an envy-free one by swaps.
    #[command(name = "ef-from-2app")]
    EfFrom2app {
        instance: PathBuf,
        #[arg(long)]
        alloc: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn load(path: &Path) -> Result<(Instance, NormalizedInstance)> {
    let inst = read_instance(path)?;
    let norm = normalize(&inst)?;
    Ok((inst, norm))
}

fn load_allocation(inst: &Instance, path: &Path) -> Result<Allocation> {
    let alloc = read_allocation(path)?;
    if let Err(violations) = validate_allocation(inst, &alloc) {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Validation(format!("allocation: {}", list.join("; "))));
    }
    Ok(alloc)
}

fn describe(inst: &Instance, alloc: &Allocation) -> String {
    let names = inst.item_names();
    alloc
        .bundles(inst.agents())
        .iter()
        .zip(inst.agent_names())
        .map(|(bundle, agent)| {
            let items: Vec<&str> = bundle.iter().map(|&j| names[j].as_str()).collect();
            format!("  {agent}: {{{}}}", items.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn solve(instance: &Path, limits: &Limits, as_json: bool) -> Result<()> {
    let (inst, norm) = load(instance)?;
    match solve_min_k(&norm, &limits.options()?) {
        Ok(result) => {
            let secs = result.elapsed.as_secs_f64();
            match (&result.kind, as_json) {
                (SolveKind::MinK { k, witness }, true) => println!(
                    "{}",
                    json!({"result": "min_k", "k": k, "witness": witness.owner(), "explored": result.explored, "elapsed_s": secs})
                ),
                (SolveKind::UnanimousEnvyInstance, true) => println!(
                    "{}",
                    json!({"result": "unanimous_envy_instance", "explored": result.explored, "elapsed_s": secs})
                ),
                (SolveKind::MinK { k, witness }, false) => {
                    println!("min K = {k}");
                    println!("witness: {witness}");
                    println!("{}", describe(&inst, witness));
                }
                (SolveKind::UnanimousEnvyInstance, false) => println!("unanimous envy instance"),
            }
            eprintln!("explored {} allocations in {secs:.3} s", result.explored);
            Ok(())
        }
        Err(stop) => {
            let reason = if stop.timed_out { "timeout" } else { "budget" };
            if as_json {
                let best = stop.best.as_ref().map(|(level, a)| json!({"level": level.k(), "allocation": a.owner()}));
                println!("{}", json!({"result": "budget_exceeded", "reason": reason, "explored": stop.explored, "best": best}));
            }
            if let Some((level, alloc)) = &stop.best {
                eprintln!("best allocation found: {alloc} ({level})");
            }
            eprintln!("search stopped by {reason}");
            Err(Error::BudgetExceeded { explored: stop.explored })
        }
    }
}

fn hap(instance: &Path, as_json: bool) -> Result<()> {
    let (inst, norm) = load(instance)?;
    let result = solve_hap(&norm)?;
    match (&result.kind, as_json) {
        (HapKind::Solved { k, matching }, true) => {
            println!("{}", json!({"result": "min_k", "k": k, "witness": matching.owner(), "matchings_solved": result.matchings_solved}))
        }
        (HapKind::UnanimousEnvyInstance, true) => {
            println!("{}", json!({"result": "unanimous_envy_instance", "matchings_solved": result.matchings_solved}))
        }
        (HapKind::Solved { k, matching }, false) => {
            println!("min K = {k}");
            println!("witness: {matching}");
            println!("{}", describe(&inst, matching));
        }
        (HapKind::UnanimousEnvyInstance, false) => println!("unanimous envy instance"),
    }
    Ok(())
}

fn check(instance: &Path, alloc_path: &Path, k: Option<usize>, as_json: bool) -> Result<()> {
    let (inst, norm) = load(instance)?;
    let alloc = load_allocation(&inst, alloc_path)?;
    let n = inst.agents();
    if let Some(k) = k {
        if k == 0 || k > n {
            return Err(Error::Argument(format!("K = {k} outside [1, {n}]")));
        }
    }
    let values = BundleValues::compute(&norm, &alloc);
    let level = values.level();
    let graph = values.envy_graph();
    let de = degree_of_envy(&norm, &alloc)?;
    let sm = level_is_sm_app_ef(level, n);
    if as_json {
        let edges: Vec<_> = graph.edges.iter().map(|e| json!([e.envier, e.envied, e.weight])).collect();
        println!(
            "{}",
            json!({
                "level": level.k(),
                "envy_free": level.k() == Some(1),
                "degree_of_envy": de.to_string(),
                "sm_app_ef": sm,
                "envy_graph": edges,
                "k_app_envy_free": k.map(|k| level.is_free_at(k)),
            })
        );
        return Ok(());
    }
    println!("level: {level}");
    println!("degree of envy: {de}");
    let names = inst.agent_names();
    for e in &graph.edges {
        println!("  {} envies {} (approved by {})", names[e.envier], names[e.envied], e.weight);
    }
    println!("strict-majority approval envy-free: {}", if sm { "yes" } else { "no" });
    if let Some(k) = k {
        println!("({k}-app envy)-free: {}", if level.is_free_at(k) { "yes" } else { "no" });
    }
    Ok(())
}

fn emit_lp(instance: &Path, output: &Path) -> Result<()> {
    let (_, norm) = load(instance)?;
    let model = build_model(&norm);
    std::fs::write(output, export_lp(&model))?;
    eprintln!("wrote {} constraints to {}", model.constraints().len(), output.display());
    let Some(solver) = ExternalSolver::from_env() else {
        return Ok(());
    };
    let workdir = std::env::temp_dir().join(format!("approval-envy-{}", std::process::id()));
    std::fs::create_dir_all(&workdir)?;
    let outcome = solver.solve(&model, &workdir);
    let _ = std::fs::remove_dir_all(&workdir);
    match outcome? {
        ExternalOutcome::Solved { allocation, k, feasibility } => {
            println!("min K = {k}");
            println!("witness: {allocation}");
            if let Feasibility::Violated(names) = feasibility {
                return Err(Error::Solver(format!("solution violates {}", names.join(", "))));
            }
            // The solution may set x above e; re-derive to confirm the allocation itself.
            if !check_assignment(&model, &allocation, k)?.is_feasible() {
                return Err(Error::Solver("solution allocation is not feasible at its K".into()));
            }
        }
        ExternalOutcome::NoSolution => println!("unanimous envy instance"),
    }
    Ok(())
}

fn culture_of(arg: CultureArg, concentration: f64) -> Culture {
    match arg {
        CultureArg::Uniform => Culture::Uniform,
        CultureArg::Correlated => Culture::Correlated(concentration),
        CultureArg::Hap => Culture::HapUniform,
    }
}

#[allow(clippy::too_many_arguments)]
fn gen(
    culture: Option<CultureArg>,
    family: Option<Family>,
    n: usize,
    m: Option<usize>,
    h: Option<usize>,
    concentration: f64,
    seed: u64,
    filter_ef: bool,
    limits: &Limits,
    output: &Path,
) -> Result<()> {
    let need_h = || h.ok_or_else(|| Error::Argument("--h is required for this family".into()));
    let inst = match (family, culture) {
        (Some(Family::Hierarchy), _) => gen_hierarchy_instance(n, need_h()?)?,
        (Some(Family::Swap), _) => gen_swap_worsens_instance(n, need_h()?)?,
        (Some(Family::Unanimous), _) => gen_unanimous_seed(n, m.unwrap_or(n), seed)?,
        (None, Some(arg)) => {
            let cfg = GenConfig { n, m: m.unwrap_or(n), culture: culture_of(arg, concentration), seed, filter_non_ef: filter_ef };
            let generated = generate(&cfg, &limits.options()?)?;
            if filter_ef {
                eprintln!("kept draw {} of the seeded stream", generated.attempts);
            }
            generated.instance
        }
        (None, None) => unreachable!("clap requires --culture or --family"),
    };
    write_instance(&inst, output)
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    culture: CultureArg,
    concentration: f64,
    n_range: &str,
    m: &str,
    count: usize,
    seed: u64,
    filter_ef: bool,
    limits: &Limits,
    threads: Option<usize>,
    output: &Path,
    instances_out: Option<&Path>,
) -> Result<()> {
    let cfg = ExperimentConfig {
        culture: culture_of(culture, concentration),
        agents: parse_agent_range(n_range)?,
        items: m.parse::<ItemSpec>()?,
        count,
        seed,
        filter_non_ef: filter_ef,
        solve: limits.options()?,
        threads,
    };
    let report = run_experiment(&cfg)?;
    report.write_summary_csv(BufWriter::new(File::create(output)?))?;
    if let Some(path) = instances_out {
        report.write_instances_csv(BufWriter::new(File::create(path)?))?;
    }
    for row in &report.rows {
        eprintln!(
            "n = {}, m = {}: {} of {} solved, mean K/n = {}",
            row.n,
            row.m,
            row.solved,
            row.count,
            row.mean_k_over_n.map_or("NaN".into(), |v| format!("{v:.3}"))
        );
    }
    Ok(())
}

fn ef_from_2app(instance: &Path, alloc_path: &Path, output: Option<&Path>, as_json: bool) -> Result<()> {
    let (inst, norm) = load(instance)?;
    let alloc = load_allocation(&inst, alloc_path)?;
    let trace = ef_from_two_app_ef(&norm, &alloc)?;
    if as_json {
        let steps: Vec<_> = trace
            .steps
            .iter()
            .map(|s| json!({"swap": [s.agent_a, s.agent_b], "de_before": s.de_before.to_string(), "de_after": s.de_after.to_string()}))
            .collect();
        println!("{}", json!({"allocation": trace.allocation.owner(), "steps": steps}));
    } else {
        let names = inst.agent_names();
        for (i, s) in trace.steps.iter().enumerate() {
            println!(
                "step {}: swap {} and {}, degree of envy {} -> {}",
                i + 1,
                names[s.agent_a],
                names[s.agent_b],
                s.de_before,
                s.de_after
            );
        }
        println!("envy-free allocation: {}", trace.allocation);
        println!("{}", describe(&inst, &trace.allocation));
    }
    if let Some(path) = output {
        write_allocation(&trace.allocation, path)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { instance, limits, json } => solve(&instance, &limits, json),
        Command::Hap { instance, json } => hap(&instance, json),
        Command::Check { instance, alloc, k, json } => check(&instance, &alloc, k, json),
        Command::EmitLp { instance, output } => emit_lp(&instance, &output),
        Command::Gen { culture, family, n, m, h, concentration, seed, filter_ef, limits, output } => {
            gen(culture, family, n, m, h, concentration, seed, filter_ef, &limits, &output)
        }
        Command::Experiment {
            culture,
            concentration,
            n_range,
            m,
            count,
            seed,
            filter_ef,
            limits,
            threads,
            output,
            instances_out,
        } => experiment(
            culture,
            concentration,
            &n_range,
            &m,
            count,
            seed,
            filter_ef,
            &limits,
            threads,
            &output,
            instances_out.as_deref(),
        ),
        Command::EfFrom2app { instance, alloc, output, json } => ef_from_2app(&instance, &alloc, output.as_deref(), json),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Capacity { .. } | Error::Validation(_) | Error::Parse { .. } => 2,
        Error::BudgetExceeded { .. } => 3,
        Error::Solver(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
