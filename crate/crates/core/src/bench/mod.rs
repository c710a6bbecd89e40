//! Experiment harness: policy sweeps, scheme benchmarks, performance
//! profiles, CSV tables and SVG charts.
//!
//! Every aggregate is computed from the per-run rows, which are also what
//! gets written to the run CSVs.

mod profile;
pub mod svg;

pub use profile::{performance_profile, PerformanceProfile};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{MovementPolicy, SolverConfig};
use crate::error::{Error, Result};
use crate::instgen::{generate_instance, GeneratorParams};
use crate::model::build_transfer_model;
use crate::optimizer::{solve_milp, MilpLimits, MilpStatus};
use crate::packing::DEFAULT_EXACT_THRESHOLD;
use crate::pipelines::{run_rtrp, run_tp, PipelineReport, Scheme};
use crate::rounding::RoundingRunConfig;

use svg::{Chart, Series};

/// Aggressiveness values of the policy comparison.
pub const POLICY_ALPHAS: [f64; 4] = [0.0, 0.1, 10.0, 100.0];
/// Warehouse cost scaling factors of the policy comparison.
pub const POLICY_FACTORS: [f64; 13] = [
    0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.5, 2.0, 5.0, 10.0, 100.0,
];
/// Aggressiveness values used with the scheme benchmarks.
pub const BENCHMARK_ALPHAS: [f64; 4] = [0.0, 10.0, 100.0, 1000.0];

fn run_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(work());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(work))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidConfig(format!("csv output failed: {other:?}")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySweepConfig {
    /// Generator parameters of the base instances; the seed is replaced by
    /// `seed + k` for instance `k`.
    pub base: GeneratorParams,
    pub n_instances: usize,
    pub alphas: Vec<f64>,
    pub factors: Vec<f64>,
    /// Weights other than `alpha` (which is swept).
    pub solver: SolverConfig,
    pub limits: MilpLimits,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl PolicySweepConfig {
    pub fn new(base: GeneratorParams, n_instances: usize) -> Self {
        Self {
            base,
            n_instances,
            alphas: POLICY_ALPHAS.to_vec(),
            factors: POLICY_FACTORS.to_vec(),
            solver: SolverConfig::default(),
            limits: MilpLimits::default(),
            seed: 0,
            jobs: 0,
        }
    }
}

/// One transfer-problem solve of the policy sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyRun {
    pub instance: usize,
    pub seed: u64,
    pub alpha: f64,
    pub factor: f64,
    pub policy: MovementPolicy,
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub transport: Option<f64>,
    pub bound: f64,
    pub nodes: u64,
    pub secs: f64,
}

/// Average relative worsening of one policy at one scaling factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub factor: f64,
    pub policy: MovementPolicy,
    /// Mean of `(objective - best) / max(best, 1)`; `None` when no group
    /// could be compared.
    pub mean_worsening: Option<f64>,
    /// `(instance, alpha)` groups where all three policies had incumbents.
    pub compared: usize,
    /// Groups left out because some policy had no incumbent.
    pub excluded: usize,
    /// Compared groups where every policy was proven optimal.
    pub proven: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySweepResult {
    pub runs: Vec<PolicyRun>,
    pub summary: Vec<PolicySummary>,
}

/// Relative worsening of `value` against `best`, with a unit floor on the
/// denominator so that zero-cost optima stay comparable.
pub fn worsening(value: f64, best: f64) -> f64 {
    (value - best) / best.max(1.0)
}

/// Solves the transfer problem under CR, DR and GR for every base instance,
/// aggressiveness value and warehouse cost factor.
pub fn compare_policies(config: &PolicySweepConfig) -> Result<PolicySweepResult> {
    config.solver.validate()?;
    config.base.validate()?;
    let mut work = Vec::new();
    for k in 0..config.n_instances {
        for &alpha in &config.alphas {
            for &factor in &config.factors {
                if !(factor.is_finite() && factor >= 0.0) {
                    return Err(Error::InvalidConfig(format!("scaling factor must be nonnegative, got {factor}")));
                }
                work.push((k, alpha, factor));
            }
        }
    }
    let bases: Vec<_> = (0..config.n_instances)
        .map(|k| {
            let mut p = config.base.clone();
            p.rng_seed = config.seed + k as u64;
            p.movement_policy = MovementPolicy::General;
            generate_instance(&p)
        })
        .collect::<Result<_>>()?;

    let results: Vec<Result<Vec<PolicyRun>>> = run_pool(config.jobs, || {
        work.par_iter()
            .map(|&(k, alpha, factor)| {
                let mut inst = bases[k].clone();
                inst.scale_warehouse_costs(factor);
                let solver = SolverConfig {
                    alpha,
                    ..config.solver.clone()
                };
                MovementPolicy::ALL
                    .iter()
                    .map(|&policy| {
                        let inst = inst.with_policy(policy)?;
                        let tm = build_transfer_model(&inst, &solver, false)?;
                        let r = solve_milp(&tm.model, &config.limits);
                        let transport = r.values.as_ref().map(|v| tm.extract_solution(v).transport_cost(&inst));
                        Ok(PolicyRun {
                            instance: k,
                            seed: config.seed + k as u64,
                            alpha,
                            factor,
                            policy,
                            status: r.status,
                            objective: r.objective,
                            transport,
                            bound: r.best_bound,
                            nodes: r.nodes,
                            secs: r.elapsed.as_secs_f64(),
                        })
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut runs = Vec::new();
    for r in results {
        runs.extend(r?);
    }
    let summary = summarize_policies(&runs);
    Ok(PolicySweepResult { runs, summary })
}

/// Per factor and policy averages, recomputed from the run rows.
pub fn summarize_policies(runs: &[PolicyRun]) -> Vec<PolicySummary> {
    let mut groups: BTreeMap<(u64, usize, u64), Vec<&PolicyRun>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.factor.to_bits(), r.instance, r.alpha.to_bits()))
            .or_default()
            .push(r);
    }
    let mut factors: Vec<f64> = runs.iter().map(|r| r.factor).collect();
    factors.sort_by(f64::total_cmp);
    factors.dedup();
    let mut out = Vec::new();
    for factor in factors {
        let mut sums = [0.0; 3];
        let mut compared = 0;
        let mut excluded = 0;
        let mut proven = 0;
        for (_, group) in groups.range((factor.to_bits(), 0, 0)..=(factor.to_bits(), usize::MAX, u64::MAX)) {
            let objs: Option<Vec<(MovementPolicy, f64)>> =
                group.iter().map(|r| r.objective.map(|o| (r.policy, o))).collect();
            match objs {
                Some(objs) if objs.len() == 3 => {
                    let best = objs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                    for (policy, o) in objs {
                        let idx = MovementPolicy::ALL.iter().position(|&p| p == policy).unwrap();
                        sums[idx] += worsening(o, best);
                    }
                    compared += 1;
                    if group.iter().all(|r| r.status == MilpStatus::Optimal) {
                        proven += 1;
                    }
                }
                _ => excluded += 1,
            }
        }
        for (idx, &policy) in MovementPolicy::ALL.iter().enumerate() {
            out.push(PolicySummary {
                factor,
                policy,
                mean_worsening: (compared > 0).then(|| sums[idx] / compared as f64),
                compared,
                excluded,
                proven,
            });
        }
    }
    out
}

impl PolicySweepResult {
    pub fn worsening_chart(&self) -> Chart {
        let series = MovementPolicy::ALL
            .iter()
            .map(|&policy| Series {
                name: policy.short_name().into(),
                points: self
                    .summary
                    .iter()
                    .filter(|s| s.policy == policy)
                    .filter_map(|s| s.mean_worsening.map(|w| (s.factor, w)))
                    .collect(),
            })
            .collect();
        Chart {
            title: "Average worsening against the best policy".into(),
            x_label: "warehouse cost scaling factor".into(),
            y_label: "average relative worsening".into(),
            log_x: true,
            steps: false,
            series,
        }
    }

    /// Writes `policies_runs.csv`, `policies_worsening.csv` and
    /// `policies_worsening.svg` into `dir`; returns the paths.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let runs = dir.join("policies_runs.csv");
        write_csv(&runs, &self.runs)?;
        let summary = dir.join("policies_worsening.csv");
        write_csv(&summary, &self.summary)?;
        let chart = dir.join("policies_worsening.svg");
        std::fs::write(&chart, self.worsening_chart().render())?;
        Ok(vec![runs, summary, chart])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Generator preset name (`small`, `medium`, `g3`, ...).
    pub set: String,
    pub n_instances: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Aggressiveness values; each instance is solved once per value.
    pub alphas: Vec<f64>,
    pub solver: SolverConfig,
    pub limits: MilpLimits,
    pub rounding: RoundingRunConfig,
    pub exact_threshold: u64,
    pub jobs: usize,
}

impl BenchmarkConfig {
    pub fn new(set: &str, n_instances: usize) -> Self {
        let mut schemes = vec![Scheme::Tp];
        schemes.extend(crate::pipelines::DEFAULT_DELTAS.iter().map(|&delta| Scheme::Rtrp { delta }));
        Self {
            set: set.into(),
            n_instances,
            seed: 0,
            schemes,
            alphas: BENCHMARK_ALPHAS.to_vec(),
            solver: SolverConfig::default(),
            limits: MilpLimits::default(),
            rounding: RoundingRunConfig::default(),
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            jobs: 0,
        }
    }
}

/// Parses `tp`, `rtrp:0.95`, ... into schemes.
pub fn parse_schemes(text: &str) -> Result<Vec<Scheme>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let lower = s.to_ascii_lowercase();
            if lower == "tp" {
                return Ok(Scheme::Tp);
            }
            let delta = lower
                .strip_prefix("rtrp:")
                .and_then(|d| d.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme '{s}' (expected tp or rtrp:<delta>)")))?;
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::InvalidConfig(format!("delta must lie in (0, 1], got {delta}")));
            }
            Ok(Scheme::Rtrp { delta })
        })
        .collect()
}

/// One pipeline run of a benchmark, flattened for the run CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub set: String,
    pub instance: usize,
    pub seed: u64,
    pub alpha: f64,
    pub time_limit_secs: Option<f64>,
    pub scheme: String,
    pub delta: Option<f64>,
    pub status: MilpStatus,
    pub has_incumbent: bool,
    pub model_objective: Option<f64>,
    pub model_bound: f64,
    pub model_gap: Option<f64>,
    pub nodes: u64,
    pub first_incumbent_secs: Option<f64>,
    pub model_secs: f64,
    pub rounding_secs: f64,
    pub packing_secs: f64,
    pub model_packages: Option<u64>,
    pub rounding_packages: Option<u64>,
    pub packed_packages: Option<u64>,
    pub model_transport: Option<f64>,
    pub rounding_transport: Option<f64>,
    pub packed_transport: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
}

impl BenchmarkRow {
    fn from_report(set: &str, instance: usize, seed: u64, alpha: f64, limits: &MilpLimits, r: &PipelineReport) -> Self {
        let has_incumbent = r.status.has_incumbent();
        let (scheme, delta) = match r.scheme {
            Scheme::Tp => ("TP".to_string(), None),
            Scheme::Rtrp { delta } => ("RTRP".to_string(), Some(delta)),
        };
        // A direct solve has no rounding phase; its plan carries over.
        let rounding_packages = r.packages.rounding.or(if has_incumbent && delta.is_none() {
            Some(r.packages.model)
        } else {
            None
        });
        let rounding_transport = r.rounding_terms.or(if delta.is_none() { r.model_terms } else { None }).map(|t| t.transport);
        Self {
            set: set.into(),
            instance,
            seed,
            alpha,
            time_limit_secs: limits.time_limit.map(|t| t.as_secs_f64()),
            scheme,
            delta,
            status: r.status,
            has_incumbent,
            model_objective: r.model_objective,
            model_bound: r.model_bound,
            model_gap: r.model_gap,
            nodes: r.nodes,
            first_incumbent_secs: r.first_incumbent_secs,
            model_secs: r.times.model_secs,
            rounding_secs: r.times.rounding_secs,
            packing_secs: r.times.packing_secs,
            model_packages: has_incumbent.then_some(r.packages.model),
            rounding_packages,
            packed_packages: r.packages.packing,
            model_transport: r.model_terms.map(|t| t.transport),
            rounding_transport,
            packed_transport: r.packed_terms.map(|t| t.transport),
            lower_bound: r.lower_bound,
            upper_bound: r.upper_bound,
        }
    }

    pub fn scheme_label(&self) -> String {
        match self.delta {
            None => self.scheme.clone(),
            Some(d) => format!("{}({d})", self.scheme),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub rows: Vec<BenchmarkRow>,
}

/// Phase of the package / transport accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Transfer problem or relaxation.
    Model,
    Rounding,
    Packing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Packages,
    Transport,
}

/// One row of the phase table: per scheme, the average over instances of
/// the value divided by the smallest value any scheme reached on that
/// instance in the same phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub phase: Phase,
    pub metric: Metric,
    pub normalized: Vec<Option<f64>>,
    /// `(instance, alpha)` groups used for this row.
    pub groups: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    pub schemes: Vec<String>,
    pub rows: Vec<PhaseRow>,
}

impl PhaseTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,metric,groups");
        for s in &self.schemes {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:?},{:?},{}", r.phase, r.metric, r.groups));
            for v in &r.normalized {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&format!("{v:.6}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Share of runs with an incumbent per set, time limit and scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvedRow {
    pub set: String,
    pub time_limit_secs: Option<f64>,
    pub scheme: String,
    pub runs: usize,
    pub solved_percent: f64,
}

/// Runs every scheme on every generated instance and aggressiveness value.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkResult> {
    config.solver.validate()?;
    let mut params = GeneratorParams::preset(&config.set)?;
    let mut work = Vec::new();
    for k in 0..config.n_instances {
        for &alpha in &config.alphas {
            for &scheme in &config.schemes {
                work.push((k, alpha, scheme));
            }
        }
    }
    params.movement_policy = MovementPolicy::General;
    let instances: Vec<_> = (0..config.n_instances)
        .map(|k| {
            let mut p = params.clone();
            p.rng_seed = config.seed + k as u64;
            generate_instance(&p)
        })
        .collect::<Result<_>>()?;
    let results: Vec<Result<BenchmarkRow>> = run_pool(config.jobs, || {
        work.par_iter()
            .map(|&(k, alpha, scheme)| {
                let inst = &instances[k];
                let mut solver = SolverConfig {
                    alpha,
                    ..config.solver.clone()
                };
                let outcome = match scheme {
                    Scheme::Tp => run_tp(inst, &solver, &config.limits, config.exact_threshold)?,
                    Scheme::Rtrp { delta } => {
                        solver.delta = delta;
                        run_rtrp(inst, &solver, &config.limits, &config.rounding, config.exact_threshold)?
                    }
                };
                Ok(BenchmarkRow::from_report(
                    &config.set,
                    k,
                    config.seed + k as u64,
                    alpha,
                    &config.limits,
                    &outcome.report,
                ))
            })
            .collect()
    })?;
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkResult { rows })
}

impl BenchmarkResult {
    fn scheme_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for r in &self.rows {
            let l = r.scheme_label();
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        labels
    }

    /// `(instance, alpha)` groups in first-seen order with the row of each
    /// scheme.
    fn groups(&self, labels: &[String]) -> Vec<Vec<Option<&BenchmarkRow>>> {
        let mut keys: Vec<(usize, u64)> = Vec::new();
        let mut table: Vec<Vec<Option<&BenchmarkRow>>> = Vec::new();
        for r in &self.rows {
            let key = (r.instance, r.alpha.to_bits());
            let g = match keys.iter().position(|&k| k == key) {
                Some(g) => g,
                None => {
                    keys.push(key);
                    table.push(vec![None; labels.len()]);
                    keys.len() - 1
                }
            };
            let c = labels.iter().position(|l| *l == r.scheme_label()).unwrap();
            table[g][c] = Some(r);
        }
        table
    }

    /// Package counts and transport costs per phase, normalized by the
    /// per-group minimum over schemes.
    pub fn phase_table(&self) -> PhaseTable {
        let labels = self.scheme_labels();
        let groups = self.groups(&labels);
        let mut rows = Vec::new();
        for phase in [Phase::Model, Phase::Rounding, Phase::Packing] {
            for metric in [Metric::Packages, Metric::Transport] {
                let pick = |r: &BenchmarkRow| -> Option<f64> {
                    match (phase, metric) {
                        (Phase::Model, Metric::Packages) => r.model_packages.map(|v| v as f64),
                        (Phase::Rounding, Metric::Packages) => r.rounding_packages.map(|v| v as f64),
                        (Phase::Packing, Metric::Packages) => r.packed_packages.map(|v| v as f64),
                        (Phase::Model, Metric::Transport) => r.model_transport,
                        (Phase::Rounding, Metric::Transport) => r.rounding_transport,
                        (Phase::Packing, Metric::Transport) => r.packed_transport,
                    }
                };
                let mut sums = vec![0.0; labels.len()];
                let mut used = 0;
                for g in &groups {
                    let values: Option<Vec<f64>> = g.iter().map(|r| r.and_then(pick)).collect();
                    let Some(values) = values else { continue };
                    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                    if min <= 0.0 && values.iter().any(|&v| v > 0.0) {
                        continue;
                    }
                    for (s, v) in sums.iter_mut().zip(&values) {
                        *s += if min <= 0.0 { 1.0 } else { v / min };
                    }
                    used += 1;
                }
                rows.push(PhaseRow {
                    phase,
                    metric,
                    normalized: sums
                        .into_iter()
                        .map(|s| (used > 0).then(|| s / used as f64))
                        .collect(),
                    groups: used,
                });
            }
        }
        PhaseTable { schemes: labels, rows }
    }

    pub fn solved_table(&self) -> Vec<SolvedRow> {
        let mut out: Vec<SolvedRow> = Vec::new();
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for r in &self.rows {
            let label = r.scheme_label();
            let pos = out.iter().position(|o| {
                o.set == r.set && o.time_limit_secs == r.time_limit_secs && o.scheme == label
            });
            let pos = match pos {
                Some(p) => p,
                None => {
                    out.push(SolvedRow {
                        set: r.set.clone(),
                        time_limit_secs: r.time_limit_secs,
                        scheme: label,
                        runs: 0,
                        solved_percent: 0.0,
                    });
                    counts.push((0, 0));
                    out.len() - 1
                }
            };
            counts[pos].0 += 1;
            if r.has_incumbent {
                counts[pos].1 += 1;
            }
        }
        for (row, (runs, solved)) in out.iter_mut().zip(counts) {
            row.runs = runs;
            row.solved_percent = 100.0 * solved as f64 / runs as f64;
        }
        out
    }

    /// Profile of the packed objective over schemes.
    pub fn cost_profile(&self) -> Result<Vec<PerformanceProfile>> {
        let labels = self.scheme_labels();
        let groups = self.groups(&labels);
        let values: Vec<Vec<Option<f64>>> = (0..labels.len())
            .map(|c| {
                groups
                    .iter()
                    .map(|g| g[c].and_then(|r| r.upper_bound).map(|v| v.max(1e-9)))
                    .collect()
            })
            .collect();
        performance_profile(&labels, &values)
    }

    pub fn profile_chart(&self) -> Result<Chart> {
        let series = self
            .cost_profile()?
            .into_iter()
            .map(|p| Series {
                points: p.steps(),
                name: p.name,
            })
            .collect();
        Ok(Chart {
            title: "Performance profile of packed cost".into(),
            x_label: "ratio to best".into(),
            y_label: "fraction of instances".into(),
            log_x: false,
            steps: true,
            series,
        })
    }

    /// Writes `<experiment>_runs.csv`, `<experiment>_phases.csv`,
    /// `<experiment>_solved.csv` and `<experiment>_profile.svg`.
    pub fn write_outputs(&self, dir: &Path, experiment: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let runs = dir.join(format!("{experiment}_runs.csv"));
        write_csv(&runs, &self.rows)?;
        let phases = dir.join(format!("{experiment}_phases.csv"));
        std::fs::write(&phases, self.phase_table().to_csv())?;
        let solved = dir.join(format!("{experiment}_solved.csv"));
        write_csv(&solved, &self.solved_table())?;
        let chart = dir.join(format!("{experiment}_profile.svg"));
        std::fs::write(&chart, self.profile_chart()?.render())?;
        Ok(vec![runs, phases, solved, chart])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(instance: usize, policy: MovementPolicy, objective: Option<f64>) -> PolicyRun {
        PolicyRun {
            instance,
            seed: instance as u64,
            alpha: 0.0,
            factor: 1.0,
            policy,
            status: if objective.is_some() {
                MilpStatus::Optimal
            } else {
                MilpStatus::TimeLimitNoIncumbent
            },
            objective,
            transport: objective,
            bound: 0.0,
            nodes: 1,
            secs: 0.0,
        }
    }

    #[test]
    fn summary_excludes_unsolved_groups() {
        use MovementPolicy::*;
        let runs = vec![
            run(0, Centralized, Some(12.0)),
            run(0, Decentralized, Some(10.0)),
            run(0, General, Some(10.0)),
            run(1, Centralized, None),
            run(1, Decentralized, Some(5.0)),
            run(1, General, Some(5.0)),
        ];
        let s = summarize_policies(&runs);
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].policy, Centralized);
        assert!((s[0].mean_worsening.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(s[1].mean_worsening, Some(0.0));
        assert_eq!(s[2].mean_worsening, Some(0.0));
        assert_eq!((s[0].compared, s[0].excluded, s[0].proven), (1, 1, 1));
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(
            parse_schemes("tp, rtrp:0.9").unwrap(),
            vec![Scheme::Tp, Scheme::Rtrp { delta: 0.9 }]
        );
        assert!(parse_schemes("rtrp:1.5").is_err());
        assert!(parse_schemes("foo").is_err());
    }

    #[test]
    fn small_benchmark_tables() {
        let mut config = BenchmarkConfig::new("desk", 2);
        config.alphas = vec![0.0];
        config.schemes = vec![Scheme::Tp, Scheme::Rtrp { delta: 0.9 }, Scheme::Rtrp { delta: 1.0 }];
        let result = run_benchmark(&config).unwrap();
        assert_eq!(result.rows.len(), 6);
        let table = result.phase_table();
        assert_eq!(table.schemes, vec!["TP", "RTRP(0.9)", "RTRP(1)"]);
        for row in &table.rows {
            if row.groups == 0 {
                continue;
            }
            let min = row.normalized.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            assert!(min >= 1.0 - 1e-12);
        }
        let solved = result.solved_table();
        assert_eq!(solved.len(), 3);
        assert!(solved.iter().all(|s| s.runs == 2));
        assert!(table.to_csv().starts_with("phase,metric,groups,TP,"));
        let chart = result.profile_chart().unwrap().render();
        assert_eq!(chart.matches("<polyline").count(), 3);
    }
}
