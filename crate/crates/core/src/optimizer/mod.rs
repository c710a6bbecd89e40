//! LP and MILP solving for [`MilpModel`](crate::model::MilpModel)s.
//!
//! Continuous relaxations go to the `microlp` simplex kernel (bounded
//! variables, sparse LU, dual simplex re-optimization after row additions).
//! Integrality is handled here by a branch-and-bound that re-optimizes node
//! LPs from their parent's simplex state.

mod lp;
mod milp;
mod mps;

pub use lp::{solve_lp, solve_lp_with_limit, BasisSummary, LpResult, LpStatus};
pub use milp::{solve_milp, MilpLimits, MilpResult, MilpStatus, TracePoint};
pub use mps::{export_lp, export_mps, read_mps};

use serde::{Deserialize, Serialize};

use crate::model::MilpModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFormat {
    Mps,
    Lp,
}

impl std::str::FromStr for ModelFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(ModelFormat::Mps),
            "lp" => Ok(ModelFormat::Lp),
            other => Err(crate::Error::InvalidConfig(format!(
                "unknown model format '{other}' (expected mps or lp)"
            ))),
        }
    }
}

/// Model file bytes in the requested format.
pub fn export_model(model: &MilpModel, format: ModelFormat) -> Vec<u8> {
    match format {
        ModelFormat::Mps => export_mps(model).into_bytes(),
        ModelFormat::Lp => export_lp(model).into_bytes(),
    }
}
