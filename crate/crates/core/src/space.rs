//! Label-space cardinalities and training hyperparameters.

use alloc::format;

use crate::error::{Error, Result};

/// Cardinalities of the label sets and the feature dimensions. Every
/// module sizes its tables from this one struct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelSpace {
    /// Number of action classes (one label per segment).
    pub n_actions: usize,
    /// Number of latent sub-states per segment; 1 disables the latent layer.
    pub n_latent: usize,
    /// Number of sequence-level activity classes.
    pub n_activities: usize,
    /// Dimension of each per-segment feature vector.
    pub dim_segment: usize,
    /// Dimension of the global feature vector.
    pub dim_global: usize,
}

impl LabelSpace {
    pub fn new(
        n_actions: usize,
        n_latent: usize,
        n_activities: usize,
        dim_segment: usize,
        dim_global: usize,
    ) -> Result<Self> {
        let space = Self {
            n_actions,
            n_latent,
            n_activities,
            dim_segment,
            dim_global,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_actions", self.n_actions),
            ("n_latent", self.n_latent),
            ("n_activities", self.n_activities),
            ("dim_segment", self.dim_segment),
            ("dim_global", self.dim_global),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Number of collapsed `(action, latent)` product states.
    #[inline]
    pub fn n_joint(&self) -> usize {
        self.n_actions * self.n_latent
    }

    /// Linear index of the product state `(y, z)`.
    #[inline]
    pub fn joint_index(&self, y: usize, z: usize) -> usize {
        y * self.n_latent + z
    }

    /// Total length of the flattened parameter vector:
    /// `Ny*Nz*D + Ny*Nz + (Ny*Nz)^2 + Ny^2*NA + NA*D0`.
    pub fn total_dim(&self) -> usize {
        let s = self.n_joint();
        s * self.dim_segment
            + s
            + s * s
            + self.n_actions * self.n_actions * self.n_activities
            + self.n_activities * self.dim_global
    }

    /// Start of the action-latent bias block in the flattened vector.
    #[inline]
    pub fn w2_offset(&self) -> usize {
        self.n_joint() * self.dim_segment
    }

    /// Start of the joint-state transition block.
    #[inline]
    pub fn w3_offset(&self) -> usize {
        self.w2_offset() + self.n_joint()
    }

    /// Start of the action-pair/activity compatibility block.
    #[inline]
    pub fn w4_offset(&self) -> usize {
        let s = self.n_joint();
        self.w3_offset() + s * s
    }

    /// Start of the global-feature block.
    #[inline]
    pub fn w5_offset(&self) -> usize {
        self.w4_offset() + self.n_actions * self.n_actions * self.n_activities
    }

    /// Same space with a different latent cardinality. The latent count is
    /// a model choice, so training overrides it from [`Hyperparams`].
    pub fn with_n_latent(&self, n_latent: usize) -> Self {
        Self { n_latent, ..*self }
    }
}

/// Strategy for assigning initial latent states before the first
/// concave-convex iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitStrategy {
    /// Uniform i.i.d. draws from the latent state set.
    Random,
    /// K-means over all pooled segment feature vectors; cluster ids become
    /// the initial latent states.
    #[default]
    KmeansFeatures,
    /// K-means over 1-of-N encodings of side-channel categorical labels.
    KmeansCategorical,
}

/// Training hyperparameters with the documented defaults.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hyperparams {
    /// Regularization constant C of the margin objective.
    pub c_reg: f64,
    /// Weight of the activity term in the labeling loss, in [0, 1].
    /// 0 recovers the action-only training objective.
    pub lambda_loss: f64,
    /// Latent cardinality the model is trained with.
    pub n_latent: usize,
    /// Cutting-plane convergence tolerance.
    pub epsilon_cp: f64,
    /// Cap on concave-convex iterations.
    pub max_cccp_iters: usize,
    /// Cap on cutting-plane iterations per convex solve.
    pub max_cp_iters: usize,
    /// Latent initialization strategy.
    pub init_strategy: InitStrategy,
    /// Seed for every randomized step (latent init, k-means restarts).
    pub rng_seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            c_reg: 1.0,
            lambda_loss: 1.0,
            n_latent: 2,
            epsilon_cp: 0.01,
            max_cccp_iters: 20,
            max_cp_iters: 500,
            init_strategy: InitStrategy::KmeansFeatures,
            rng_seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_reg.is_finite() && self.c_reg > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "c_reg must be finite and > 0, got {}",
                self.c_reg
            )));
        }
        if !(self.lambda_loss.is_finite() && (0.0..=1.0).contains(&self.lambda_loss)) {
            return Err(Error::InvalidConfig(format!(
                "lambda_loss must be in [0, 1], got {}",
                self.lambda_loss
            )));
        }
        if !(self.epsilon_cp.is_finite() && self.epsilon_cp > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_cp must be finite and > 0, got {}",
                self.epsilon_cp
            )));
        }
        if self.n_latent == 0 {
            return Err(Error::InvalidConfig("n_latent must be >= 1".into()));
        }
        if self.max_cccp_iters == 0 || self.max_cp_iters == 0 {
            return Err(Error::InvalidConfig("iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dim_small_space() {
        // Ny=2, Nz=1, NA=1, D=1, D0=1: 2 + 2 + 4 + 4 + 1.
        let space = LabelSpace::new(2, 1, 1, 1, 1).unwrap();
        assert_eq!(space.total_dim(), 13);
    }

    #[test]
    fn zero_cardinality_rejected() {
        assert!(LabelSpace::new(0, 1, 1, 1, 1).is_err());
        assert!(LabelSpace::new(2, 1, 1, 0, 1).is_err());
    }

    #[test]
    fn hyperparams_validation() {
        let mut hp = Hyperparams::default();
        assert!(hp.validate().is_ok());
        hp.c_reg = 0.0;
        assert!(hp.validate().is_err());
        hp.c_reg = 1.0;
        hp.lambda_loss = 1.5;
        assert!(hp.validate().is_err());
        hp.lambda_loss = 0.0;
        hp.epsilon_cp = 0.0;
        assert!(hp.validate().is_err());
    }

    #[test]
    fn block_offsets_partition_total_dim() {
        let space = LabelSpace::new(3, 2, 4, 5, 7).unwrap();
        let s = space.n_joint();
        assert_eq!(space.w2_offset(), s * 5);
        assert_eq!(space.w3_offset() - space.w2_offset(), s);
        assert_eq!(space.w4_offset() - space.w3_offset(), s * s);
        assert_eq!(space.w5_offset() - space.w4_offset(), 3 * 3 * 4);
        assert_eq!(space.total_dim() - space.w5_offset(), 4 * 7);
    }
}
