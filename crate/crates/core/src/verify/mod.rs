//! Seeded ensembles, the property battery, and an exact rational oracle.

pub mod battery;
pub mod ensemble;
pub mod exact;

use rayon::prelude::*;
use serde::Serialize;

pub use battery::{pair_digest, run_battery, Check, CheckStatus, PropertyReport};
pub use ensemble::{gen_pair, random_specs, EnsembleSpec};
pub use exact::{exact_oracle_small, exact_orbit, exact_tau};

use crate::error::Result;
use crate::psd::TolerancePolicy;

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleEntry {
    pub index: usize,
    pub spec: EnsembleSpec,
    pub report: PropertyReport,
}

/// Generates and checks every spec, in parallel, returning entries in input
/// order.
pub fn run_ensemble(specs: &[EnsembleSpec], pol: &TolerancePolicy) -> Result<Vec<EnsembleEntry>> {
    specs
        .par_iter()
        .enumerate()
        .map(|(index, spec)| {
            let (g, x) = gen_pair(spec)?;
            Ok(EnsembleEntry {
                index,
                spec: *spec,
                report: run_battery(&g, &x, pol)?,
            })
        })
        .collect()
}
