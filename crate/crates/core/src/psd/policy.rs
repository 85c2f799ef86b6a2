use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical knobs shared by every operation.
///
/// `conv_abs` and `loewner_slack` are relative: call sites multiply them by
/// `1 + scale`, where `scale` is the spectral norm of the operands involved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Relative eigenvalue cutoff for ranks, ranges and pseudoinverses.
    /// `None` selects `dim * 2^-46` for whatever dimension is at hand.
    pub rank_rel: Option<f64>,
    /// Half-width of the eigenvalue-1 cluster and of the principal-cosine
    /// band used for subspace membership.
    pub eig1_cluster: f64,
    pub conv_abs: f64,
    pub loewner_slack: f64,
    pub max_iter: usize,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_rel: None,
            eig1_cluster: 1e-8,
            conv_abs: 1e-12,
            loewner_slack: 1e-9,
            max_iter: 10_000,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rank_rel {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidPolicy(format!("rank_rel must be positive, got {r}")));
            }
        }
        if !(self.eig1_cluster > 0.0 && self.eig1_cluster < 0.5) {
            return Err(Error::InvalidPolicy(format!(
                "eig1_cluster must lie in (0, 0.5), got {}",
                self.eig1_cluster
            )));
        }
        if !(self.conv_abs > 0.0 && self.conv_abs.is_finite()) {
            return Err(Error::InvalidPolicy(format!("conv_abs must be positive, got {}", self.conv_abs)));
        }
        if !(self.loewner_slack > 0.0 && self.loewner_slack.is_finite()) {
            return Err(Error::InvalidPolicy(format!(
                "loewner_slack must be positive, got {}",
                self.loewner_slack
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidPolicy("max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Effective relative rank cutoff for `dim`-dimensional matrices.
    pub fn rank_rel(&self, dim: usize) -> f64 {
        self.rank_rel
            .unwrap_or_else(|| dim.max(1) as f64 * 2f64.powi(-46))
    }

    /// Largest sine of a principal angle still counted as "same direction".
    ///
    /// A cosine above `1 - eig1_cluster` is the membership rule; the matching
    /// sine is `sqrt(1 - (1 - c)^2)`.
    pub fn membership_sine(&self) -> f64 {
        let c = 1.0 - self.eig1_cluster;
        (1.0 - c * c).max(0.0).sqrt()
    }

    pub fn conv_threshold(&self, scale: f64) -> f64 {
        self.conv_abs * (1.0 + scale)
    }

    pub fn slack(&self, scale: f64) -> f64 {
        self.loewner_slack * (1.0 + scale)
    }
}
