//! Scenario runs, parameter sweeps and relation admission: the operations
//! behind the command-line tool, usable as a library.

pub mod audit;
pub mod bundled;
pub mod scenario;
pub mod sweep;

use crate::admissibility::{check_boundary, check_bulk, AdmissibilitySuite};
use crate::error::Result;
use crate::relation::kv::{parse_relation, AnyRelation};
use crate::sampling::Sampler;

pub use scenario::{run_scenario, write_oracle, Metrics, RunOptions, RunOutcome, Scenario, Tolerances};
pub use sweep::{sweep, SweepParam, SweepResult, SweepRun};

/// Parse a relation file and run every admissibility check on it.
pub fn admit(text: &str, seed: u64, samples: usize, dim: usize) -> Result<AdmissibilitySuite> {
    let relation = parse_relation(text)?;
    let sampler = Sampler::standard(seed, samples).with_dim(dim)?;
    Ok(match relation {
        AnyRelation::Bulk(r) => check_bulk(&r, &sampler),
        AnyRelation::Boundary(r) => check_boundary(&r, &sampler),
    })
}
