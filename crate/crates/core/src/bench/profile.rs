use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Performance profile of one configuration: the sorted ratios of its value
/// to the best value on each instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceProfile {
    pub name: String,
    /// Ratios `value / best` per instance, ascending.
    pub ratios: Vec<f64>,
}

impl PerformanceProfile {
    /// Fraction of instances with ratio at most `tau`.
    pub fn rho(&self, tau: f64) -> f64 {
        if self.ratios.is_empty() {
            return 0.0;
        }
        let count = self.ratios.partition_point(|&r| r <= tau);
        count as f64 / self.ratios.len() as f64
    }

    /// Breakpoints `(tau, rho(tau))` of the step function, one per distinct
    /// ratio.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &r in &self.ratios {
            if out.last().is_some_and(|&(t, _)| t == r) {
                continue;
            }
            out.push((r, self.rho(r)));
        }
        out
    }
}

/// Profiles for `names[c]` from `values[c][k]` (configuration `c`,
/// instance `k`). Instances where some configuration has no value are left
/// out for every configuration.
pub fn performance_profile(names: &[String], values: &[Vec<Option<f64>>]) -> Result<Vec<PerformanceProfile>> {
    if names.len() != values.len() {
        return Err(Error::InvalidConfig(format!(
            "{} names for {} value rows",
            names.len(),
            values.len()
        )));
    }
    let n_instances = values.first().map_or(0, Vec::len);
    if values.iter().any(|row| row.len() != n_instances) {
        return Err(Error::InvalidConfig("value rows have different lengths".into()));
    }
    for v in values.iter().flatten().flatten() {
        if !(*v > 0.0) {
            return Err(Error::NonPositiveValue(*v));
        }
    }
    let mut ratios = vec![Vec::new(); names.len()];
    for k in 0..n_instances {
        let column: Option<Vec<f64>> = values.iter().map(|row| row[k]).collect();
        let Some(column) = column else { continue };
        let best = column.iter().copied().fold(f64::INFINITY, f64::min);
        for (c, v) in column.into_iter().enumerate() {
            ratios[c].push(if v == best { 1.0 } else { v / best });
        }
    }
    Ok(names
        .iter()
        .zip(ratios)
        .map(|(name, mut ratios)| {
            ratios.sort_by(f64::total_cmp);
            PerformanceProfile {
                name: name.clone(),
                ratios,
            }
        })
        .collect())
}
