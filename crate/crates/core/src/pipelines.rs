//! The two solution schemes.
//!
//! `TP` solves the transfer problem directly and packs its plan. `RTRP`
//! solves the relaxation with continuous transfers and capacity fraction
//! `delta`, rounds the plan and packs it. Both report a lower and an upper
//! bound on the packed optimum where one is available.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::domain::{Instance, ObjectiveTerms, Solution, SolverConfig};
use crate::error::Result;
use crate::model::{build_transfer_model, evaluate_objective};
use crate::optimizer::{solve_milp, MilpLimits, MilpStatus};
use crate::packing::{pack_all, MovementManifest};
use crate::rounding::{round_all, RoundingRunConfig};

/// Capacity fractions tried by default.
pub const DEFAULT_DELTAS: [f64; 4] = [0.85, 0.9, 0.95, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    Tp,
    Rtrp { delta: f64 },
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Tp => f.write_str("TP"),
            Scheme::Rtrp { delta } => write!(f, "RTRP({delta})"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub model_secs: f64,
    pub rounding_secs: f64,
    pub packing_secs: f64,
}

impl PhaseTimes {
    pub fn total_secs(&self) -> f64 {
        self.model_secs + self.rounding_secs + self.packing_secs
    }
}

/// Package totals after each phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePackages {
    pub model: u64,
    pub rounding: Option<u64>,
    pub packing: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingStats {
    pub runs: usize,
    pub best_run: usize,
    /// Packages the best run added on top of the relaxed plan.
    pub packages_added: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub scheme: Scheme,
    pub status: MilpStatus,
    /// Objective of the MILP incumbent (T or RT).
    pub model_objective: Option<f64>,
    pub model_bound: f64,
    pub model_gap: Option<f64>,
    pub nodes: u64,
    pub first_incumbent_secs: Option<f64>,
    pub times: PhaseTimes,
    pub packages: PhasePackages,
    pub rounding: Option<RoundingStats>,
    pub model_terms: Option<ObjectiveTerms>,
    pub rounding_terms: Option<ObjectiveTerms>,
    pub packed_terms: Option<ObjectiveTerms>,
    /// Valid lower bound on the transfer optimum, when the scheme gives one.
    pub lower_bound: Option<f64>,
    /// Objective of the packed plan.
    pub upper_bound: Option<f64>,
    pub all_packings_exact: Option<bool>,
}

impl PipelineReport {
    pub fn packed_cost(&self) -> Option<f64> {
        self.upper_bound
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat record for the aggregate CSV.
    pub fn csv_record(&self) -> PipelineCsvRow {
        PipelineCsvRow {
            scheme: match self.scheme {
                Scheme::Tp => "TP".into(),
                Scheme::Rtrp { .. } => "RTRP".into(),
            },
            delta: match self.scheme {
                Scheme::Tp => None,
                Scheme::Rtrp { delta } => Some(delta),
            },
            status: format!("{:?}", self.status),
            model_objective: self.model_objective,
            model_bound: self.model_bound,
            model_gap: self.model_gap,
            nodes: self.nodes,
            first_incumbent_secs: self.first_incumbent_secs,
            model_secs: self.times.model_secs,
            rounding_secs: self.times.rounding_secs,
            packing_secs: self.times.packing_secs,
            model_packages: self.packages.model,
            rounding_packages: self.packages.rounding,
            packed_packages: self.packages.packing,
            rounding_runs: self.rounding.as_ref().map(|r| r.runs),
            model_transport: self.model_terms.map(|t| t.transport),
            packed_transport: self.packed_terms.map(|t| t.transport),
            packed_shortfall: self.packed_terms.map(|t| t.shortfall),
            lower_bound: self.lower_bound,
            upper_bound: self.upper_bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineCsvRow {
    pub scheme: String,
    pub delta: Option<f64>,
    pub status: String,
    pub model_objective: Option<f64>,
    pub model_bound: f64,
    pub model_gap: Option<f64>,
    pub nodes: u64,
    pub first_incumbent_secs: Option<f64>,
    pub model_secs: f64,
    pub rounding_secs: f64,
    pub packing_secs: f64,
    pub model_packages: u64,
    pub rounding_packages: Option<u64>,
    pub packed_packages: Option<u64>,
    pub rounding_runs: Option<usize>,
    pub model_transport: Option<f64>,
    pub packed_transport: Option<f64>,
    pub packed_shortfall: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
}

/// Report plus the plans behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutcome {
    pub report: PipelineReport,
    /// Plan returned by the MILP phase.
    pub model_solution: Option<Solution>,
    pub rounded_solution: Option<Solution>,
    /// Final plan with `Y` taken from the packing.
    pub packed_solution: Option<Solution>,
    pub manifests: Vec<MovementManifest>,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn empty_report(scheme: Scheme) -> PipelineReport {
    PipelineReport {
        scheme,
        status: MilpStatus::Infeasible,
        model_objective: None,
        model_bound: f64::NEG_INFINITY,
        model_gap: None,
        nodes: 0,
        first_incumbent_secs: None,
        times: PhaseTimes::default(),
        packages: PhasePackages::default(),
        rounding: None,
        model_terms: None,
        rounding_terms: None,
        packed_terms: None,
        lower_bound: None,
        upper_bound: None,
        all_packings_exact: None,
    }
}

/// Solves the transfer problem and packs the incumbent.
pub fn run_tp(
    instance: &Instance,
    config: &SolverConfig,
    limits: &MilpLimits,
    exact_threshold: u64,
) -> Result<PipelineOutcome> {
    let mut report = empty_report(Scheme::Tp);
    let started = Instant::now();
    let tm = build_transfer_model(instance, config, false)?;
    let milp = solve_milp(&tm.model, limits);
    report.times.model_secs = secs(started.elapsed());
    report.status = milp.status;
    report.model_objective = milp.objective;
    report.model_bound = milp.best_bound;
    report.model_gap = milp.gap();
    report.nodes = milp.nodes;
    report.first_incumbent_secs = milp.first_incumbent_time.map(secs);
    if milp.status.has_incumbent() || milp.status == MilpStatus::Infeasible {
        report.lower_bound = Some(milp.best_bound);
    }
    let Some(values) = milp.values else {
        return Ok(PipelineOutcome {
            report,
            model_solution: None,
            rounded_solution: None,
            packed_solution: None,
            manifests: Vec::new(),
        });
    };
    let solution = tm.extract_solution(&values);
    report.packages.model = solution.total_packages();
    report.model_terms = Some(evaluate_objective(instance, &solution, config));

    let started = Instant::now();
    let packed = pack_all(instance, &solution, exact_threshold)?;
    report.times.packing_secs = secs(started.elapsed());
    finish_packed(instance, config, &mut report, &packed.solution, packed.all_exact);
    Ok(PipelineOutcome {
        report,
        model_solution: Some(solution),
        rounded_solution: None,
        packed_solution: Some(packed.solution),
        manifests: packed.manifests,
    })
}

fn finish_packed(
    instance: &Instance,
    config: &SolverConfig,
    report: &mut PipelineReport,
    packed: &Solution,
    all_exact: bool,
) {
    let terms = evaluate_objective(instance, packed, config);
    report.packages.packing = Some(packed.total_packages());
    report.packed_terms = Some(terms);
    report.upper_bound = Some(terms.total);
    report.all_packings_exact = Some(all_exact);
}

/// Solves the relaxation with capacity fraction `config.delta`, rounds its
/// plan and packs the result. The relaxation's bound is reported as a lower
/// bound only for `delta = 1`.
pub fn run_rtrp(
    instance: &Instance,
    config: &SolverConfig,
    limits: &MilpLimits,
    run_config: &RoundingRunConfig,
    exact_threshold: u64,
) -> Result<PipelineOutcome> {
    let mut report = empty_report(Scheme::Rtrp { delta: config.delta });
    let started = Instant::now();
    let tm = build_transfer_model(instance, config, true)?;
    let milp = solve_milp(&tm.model, limits);
    report.times.model_secs = secs(started.elapsed());
    report.status = milp.status;
    report.model_objective = milp.objective;
    report.model_bound = milp.best_bound;
    report.model_gap = milp.gap();
    report.nodes = milp.nodes;
    report.first_incumbent_secs = milp.first_incumbent_time.map(secs);
    if config.delta == 1.0 && (milp.status.has_incumbent() || milp.status == MilpStatus::Infeasible) {
        report.lower_bound = Some(milp.best_bound);
    }
    let Some(values) = milp.values else {
        return Ok(PipelineOutcome {
            report,
            model_solution: None,
            rounded_solution: None,
            packed_solution: None,
            manifests: Vec::new(),
        });
    };
    let relaxed = tm.extract_solution(&values);
    report.packages.model = relaxed.total_packages();
    report.model_terms = Some(evaluate_objective(instance, &relaxed, config));

    let started = Instant::now();
    let rounded = round_all(instance, &relaxed, config, run_config)?;
    report.times.rounding_secs = secs(started.elapsed());
    report.packages.rounding = Some(rounded.solution.total_packages());
    report.rounding_terms = Some(rounded.terms);
    report.rounding = Some(RoundingStats {
        runs: rounded.runs,
        best_run: rounded.best_run,
        packages_added: rounded.packages_added[rounded.best_run],
    });

    let started = Instant::now();
    let packed = pack_all(instance, &rounded.solution, exact_threshold)?;
    report.times.packing_secs = secs(started.elapsed());
    finish_packed(instance, config, &mut report, &packed.solution, packed.all_exact);
    Ok(PipelineOutcome {
        report,
        model_solution: Some(relaxed),
        rounded_solution: Some(rounded.solution),
        packed_solution: Some(packed.solution),
        manifests: packed.manifests,
    })
}
