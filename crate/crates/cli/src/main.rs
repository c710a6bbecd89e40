//! `redistrib` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage or input errors, 2 when a solve
//! ends infeasible or without an incumbent.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use redistrib::bench::{compare_policies, parse_schemes, run_benchmark, BenchmarkConfig, PolicySweepConfig};
use redistrib::domain::SolutionFile;
use redistrib::instgen::{generate_instance, GeneratorParams};
use redistrib::model::{build_transfer_model, check_feasibility, evaluate_objective};
use redistrib::optimizer::{export_model, MilpLimits, ModelFormat};
use redistrib::packing::{pack_all, MovementManifest, DEFAULT_EXACT_THRESHOLD};
use redistrib::pipelines::{run_rtrp, run_tp, PipelineReport};
use redistrib::rounding::RoundingRunConfig;
use redistrib::{Instance, MovementPolicy, SendRule, SolverConfig};

#[derive(Parser, Debug)]
#[command(name = "redistrib", version, about = "Stock redistribution between warehouses and outlets")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Random seed (instance generation, rounding perturbations)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Time limit per MILP solve in seconds; 0 disables the limit
    #[arg(long, global = true, default_value_t = 300.0)]
    time_limit: f64,
    /// Weight on unmet variable demand
    #[arg(long, global = true, default_value_t = 1.0)]
    alpha: f64,
    /// Weight on the number of transferred units
    #[arg(long, global = true, default_value_t = 1e-4)]
    epsilon: f64,
    /// Usable fraction of package capacity in the relaxation, in (0, 1]
    #[arg(long, global = true, default_value_t = 1.0)]
    delta: f64,
    /// Restrict movements to a redistribution policy
    #[arg(long, global = true, value_enum)]
    policy: Option<PolicyArg>,
    /// Outflow limit of outlets
    #[arg(long, global = true, value_enum, default_value_t = SendRuleArg::ExcessOnly)]
    send_rule: SendRuleArg,
    /// Output file (or directory for compare-policies and benchmark)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    #[value(name = "CR", alias = "cr")]
    Cr,
    #[value(name = "DR", alias = "dr")]
    Dr,
    #[value(name = "GR", alias = "gr")]
    Gr,
}

impl From<PolicyArg> for MovementPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Cr => MovementPolicy::Centralized,
            PolicyArg::Dr => MovementPolicy::Decentralized,
            PolicyArg::Gr => MovementPolicy::General,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SendRuleArg {
    ExcessOnly,
    UpToStock,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Tp,
    Rtrp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Mps,
    Lp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic instance from a size preset
    Generate {
        /// desk, small, medium, large or g1..g10
        #[arg(long)]
        preset: String,
        /// Multiplier on package costs of movements touching a warehouse
        #[arg(long, default_value_t = 1.0)]
        warehouse_cost_factor: f64,
    },
    /// Solve an instance with the direct or the relax-round-pack scheme
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::Tp)]
        scheme: SchemeArg,
        /// Also write the run report as JSON
        #[arg(long)]
        report: Option<PathBuf>,
        /// Largest per-movement unit count packed exactly
        #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
        exact_threshold: u64,
    },
    /// Compare CR, DR and GR over warehouse cost scaling factors
    ComparePolicies {
        #[arg(long, default_value = "small")]
        preset: String,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        /// Comma-separated aggressiveness values
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 10.0, 100.0])]
        alphas: Vec<f64>,
        /// Comma-separated warehouse cost scaling factors
        #[arg(long, value_delimiter = ',', default_values_t = redistrib::bench::POLICY_FACTORS.to_vec())]
        factors: Vec<f64>,
        /// Worker threads (0 = one per core)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run solution schemes on a generated test set
    Benchmark {
        #[arg(long, default_value = "small")]
        set: String,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        /// tp and rtrp:<delta> entries, comma-separated
        #[arg(long, default_value = "tp,rtrp:0.85,rtrp:0.9,rtrp:0.95,rtrp:1")]
        schemes: String,
        /// Comma-separated aggressiveness values
        #[arg(long, value_delimiter = ',', default_values_t = redistrib::bench::BENCHMARK_ALPHAS.to_vec())]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Write the transfer model (or its relaxation) as MPS or LP
    Export {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Mps)]
        format: FormatArg,
        /// Export the relaxation with continuous transfers
        #[arg(long)]
        relaxed: bool,
    },
    /// Pack a solution into per-movement package manifests
    Pack {
        solution: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
        exact_threshold: u64,
    },
}

/// Failure that maps to exit status 2.
#[derive(Debug)]
struct NoSolution(String);

impl std::fmt::Display for NoSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NoSolution {}

/// Document written by `solve`.
#[derive(Serialize, Deserialize)]
struct SolveOutput {
    solution: SolutionFile,
    report: PipelineReport,
    manifests: Vec<MovementManifest>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<NoSolution>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn solver_config(c: &Common) -> Result<SolverConfig> {
    let config = SolverConfig {
        alpha: c.alpha,
        epsilon: c.epsilon,
        delta: c.delta,
        send_rule: match c.send_rule {
            SendRuleArg::ExcessOnly => SendRule::ExcessOnly,
            SendRuleArg::UpToStock => SendRule::UpToStock,
        },
        time_limit: time_limit(c)?,
        rng_seed: c.seed,
    };
    config.validate()?;
    Ok(config)
}

fn time_limit(c: &Common) -> Result<Option<Duration>> {
    if !(c.time_limit.is_finite() && c.time_limit >= 0.0) {
        bail!("time limit must be a nonnegative number of seconds");
    }
    Ok((c.time_limit > 0.0).then(|| Duration::from_secs_f64(c.time_limit)))
}

fn limits(c: &Common) -> Result<MilpLimits> {
    Ok(MilpLimits::with_time_limit(time_limit(c)?))
}

fn read_instance(path: &Path, policy: Option<PolicyArg>) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let instance = Instance::from_json(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(match policy {
        Some(p) => instance.with_policy(p.into())?,
        None => instance,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    // Flag domains are checked before any work starts.
    let config = solver_config(c)?;
    match cli.command {
        Command::Generate {
            preset,
            warehouse_cost_factor,
        } => {
            let mut params = GeneratorParams::preset(&preset)?;
            params.rng_seed = c.seed;
            params.ware_pack_cost_factor = warehouse_cost_factor;
            if let Some(p) = c.policy {
                params.movement_policy = p.into();
            }
            let instance = generate_instance(&params)?;
            let mut text = instance.to_json()?;
            text.push('\n');
            emit(&c.out, &text)
        }
        Command::Solve {
            instance,
            scheme,
            report,
            exact_threshold,
        } => {
            let inst = read_instance(&instance, c.policy)?;
            let limits = limits(c)?;
            let outcome = match scheme {
                SchemeArg::Tp => run_tp(&inst, &config, &limits, exact_threshold)?,
                SchemeArg::Rtrp => {
                    let rounding = RoundingRunConfig {
                        rng_seed: c.seed,
                        ..Default::default()
                    };
                    run_rtrp(&inst, &config, &limits, &rounding, exact_threshold)?
                }
            };
            let r = &outcome.report;
            eprintln!("scheme: {}", r.scheme);
            eprintln!("status: {:?}", r.status);
            if let Some(path) = &report {
                fs::write(path, r.to_json()?).with_context(|| format!("cannot write {}", path.display()))?;
            }
            let Some(solution) = &outcome.packed_solution else {
                return Err(NoSolution(format!("no solution: {:?}", r.status)).into());
            };
            let terms = evaluate_objective(&inst, solution, &config);
            eprintln!("packages: {}", solution.total_packages());
            eprintln!("transport cost: {:.6}", terms.transport);
            eprintln!("objective: {:.6}", terms.total);
            if let Some(lb) = r.lower_bound {
                eprintln!("lower bound: {lb:.6}");
            }
            let doc = SolveOutput {
                solution: SolutionFile::new(&inst, solution, terms),
                report: r.clone(),
                manifests: outcome.manifests.clone(),
            };
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            emit(&c.out, &text)
        }
        Command::ComparePolicies {
            preset,
            instances,
            alphas,
            factors,
            jobs,
        } => {
            let mut sweep = PolicySweepConfig::new(GeneratorParams::preset(&preset)?, instances);
            sweep.alphas = alphas;
            sweep.factors = factors;
            sweep.solver = config;
            sweep.limits = limits(c)?;
            sweep.seed = c.seed;
            sweep.jobs = jobs;
            let result = compare_policies(&sweep)?;
            for s in &result.summary {
                let w = s
                    .mean_worsening
                    .map_or_else(|| "n/a".to_string(), |w| format!("{w:.4}"));
                println!(
                    "factor {:>6} {} worsening {w} (compared {}, excluded {}, proven {})",
                    s.factor, s.policy, s.compared, s.excluded, s.proven
                );
            }
            let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for p in result.write_outputs(&dir)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Benchmark {
            set,
            instances,
            schemes,
            alphas,
            jobs,
        } => {
            let mut bench = BenchmarkConfig::new(&set, instances);
            bench.schemes = parse_schemes(&schemes)?;
            if bench.schemes.is_empty() {
                bail!("no schemes given");
            }
            bench.alphas = alphas;
            bench.solver = config;
            bench.limits = limits(c)?;
            bench.seed = c.seed;
            bench.rounding.rng_seed = c.seed;
            bench.jobs = jobs;
            let result = run_benchmark(&bench)?;
            print!("{}", result.phase_table().to_csv());
            let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for p in result.write_outputs(&dir, &format!("benchmark_{set}"))? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Export {
            instance,
            format,
            relaxed,
        } => {
            let inst = read_instance(&instance, c.policy)?;
            let tm = build_transfer_model(&inst, &config, relaxed)?;
            let format = match format {
                FormatArg::Mps => ModelFormat::Mps,
                FormatArg::Lp => ModelFormat::Lp,
            };
            let bytes = export_model(&tm.model, format);
            match &c.out {
                Some(path) => fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display())),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes)?;
                    Ok(())
                }
            }
        }
        Command::Pack {
            solution,
            instance,
            exact_threshold,
        } => {
            let inst = read_instance(&instance, c.policy)?;
            let text = fs::read_to_string(&solution).with_context(|| format!("cannot read {}", solution.display()))?;
            let file: SolutionFile = match serde_json::from_str::<SolveOutput>(&text) {
                Ok(doc) => doc.solution,
                Err(_) => serde_json::from_str(&text).with_context(|| format!("cannot parse {}", solution.display()))?,
            };
            let plan = file.to_solution(&inst)?;
            let report = check_feasibility(&inst, &plan, &config, None);
            if !report.is_feasible() {
                bail!("solution is not feasible for the instance:\n{report}");
            }
            let packed = pack_all(&inst, &plan, exact_threshold)?;
            eprintln!("packages: {}", packed.solution.total_packages());
            eprintln!("transport cost: {:.6}", packed.transport_cost);
            let mut text = packed.manifest_json()?;
            text.push('\n');
            emit(&c.out, &text)
        }
    }
}
