//! Multi-user scenario: array, per-user statistics and powers, noise, and
//! the modelling options that have more than one defensible reading.

use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corrmodel::{CovarianceSet, UserStatModel, WaveConfig};
use crate::layout::FrameLayout;
use crate::{Error, Result};

/// One user's statistics and power maxima. User 0 of a [`Scenario`] is the
/// tagged user; the others interfere.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct UserConfig {
    pub stats: UserStatModel,
    /// Total pilot power `Pp_max` over the layout.
    pub pilot_power: f64,
    /// Total data power `Pd_max` over the layout.
    pub data_power: f64,
    /// Per-user pilot noise variance overriding [`Scenario::pilot_noise`].
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub pilot_noise: Option<f64>,
}

impl UserConfig {
    pub fn new(stats: UserStatModel, pilot_power: f64, data_power: f64) -> Self {
        UserConfig { stats, pilot_power, data_power, pilot_noise: None }
    }
}

/// Data-phase noise, given directly or through the tagged user's SNR.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DataNoise {
    Variance(f64),
    SnrDb(f64),
}

/// Which data power the SNR definition refers to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SnrReference {
    /// Configured `Pd_max` spread over the data slots of the layout.
    #[default]
    PerSlot,
    /// Configured `Pd_max` itself.
    Budget,
}

/// Placement of the per-user weights inside the fixed-point system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FixedPointVariant {
    /// `alpha_k^2 P_d,k` scales every `R_z_k`, both in the fixed point and the SE.
    #[default]
    Weighted,
    /// Weights omitted inside the fixed point, kept in the SE expression.
    Literal,
}

/// Which pilots feed the estimate of a slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WindowRule {
    /// Frames `m-1, m, m+1`, clipped to the layout and extended on the
    /// available side up to three pilots.
    #[default]
    NearestThree,
    /// Only the pilot of the slot's own frame.
    OwnFrame,
}

/// Second estimate stacked with the current one at the receiver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AnchorRule {
    /// Pilot slot of the current frame.
    #[default]
    FramePilot,
    /// The slot right before the current one.
    PreviousSlot,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelOptions {
    pub snr_reference: SnrReference,
    pub fixed_point: FixedPointVariant,
    pub window: WindowRule,
    pub anchor: AnchorRule,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Scenario {
    pub wave: WaveConfig,
    pub users: Vec<UserConfig>,
    /// Default pilot noise variance `sigma_p^2`.
    pub pilot_noise: f64,
    pub data_noise: DataNoise,
    /// Power budget `P_tot` of the tagged user; defaults to its `Pp_max + Pd_max`.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub total_power: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub options: ModelOptions,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.wave.validate()?;
        if self.users.is_empty() {
            return Err(Error::scenario("at least one user is required"));
        }
        let nonneg = |v: f64, what: &str| -> Result<()> {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::scenario(format!("{what} must be finite and non-negative, got {v}")));
            }
            Ok(())
        };
        nonneg(self.pilot_noise, "pilot_noise")?;
        for (k, u) in self.users.iter().enumerate() {
            nonneg(u.pilot_power, &format!("users[{k}].pilot_power"))?;
            nonneg(u.data_power, &format!("users[{k}].data_power"))?;
            if let Some(s) = u.pilot_noise {
                nonneg(s, &format!("users[{k}].pilot_noise"))?;
            }
            u.stats.aoa.validate()?;
            u.stats.aod.validate()?;
        }
        match self.data_noise {
            DataNoise::Variance(v) => nonneg(v, "data_noise.variance")?,
            DataNoise::SnrDb(s) if !s.is_finite() => return Err(Error::scenario("data_noise.snr_db must be finite")),
            DataNoise::SnrDb(_) => {}
        }
        let tagged = &self.users[0];
        let total = self.total_power();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::scenario(format!("total power must be positive, got {total}")));
        }
        if tagged.pilot_power + tagged.data_power > total + 1e-12 {
            return Err(Error::scenario("tagged user's pilot + data power exceeds total_power"));
        }
        Ok(())
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn tagged(&self) -> &UserConfig {
        &self.users[0]
    }

    pub fn total_power(&self) -> f64 {
        self.total_power.unwrap_or(self.users[0].pilot_power + self.users[0].data_power)
    }

    pub fn pilot_noise_of(&self, k: usize) -> f64 {
        self.users[k].pilot_noise.unwrap_or(self.pilot_noise)
    }

    /// `sigma_d^2` for `layout`. With an SNR, the reference power is the
    /// configured `Pd_max` of the tagged user (never the optimization
    /// variable), spread per slot or not according to the options.
    pub fn data_noise_variance(&self, layout: &FrameLayout) -> Result<f64> {
        match self.data_noise {
            DataNoise::Variance(v) => Ok(v),
            DataNoise::SnrDb(snr) => {
                let u = self.tagged();
                let reference = match self.options.snr_reference {
                    SnrReference::PerSlot => {
                        let n = layout.data_slot_count();
                        if n == 0 {
                            return Err(Error::layout(format!("layout {layout} has no data slots")));
                        }
                        u.data_power / n as f64
                    }
                    SnrReference::Budget => u.data_power,
                };
                Ok(reference * libm::pow(10.0, -(snr + u.stats.path_loss_db) / 10.0))
            }
        }
    }

    /// Covariance sets of every user over `1..=horizon`.
    pub fn statistics(&self, horizon: usize) -> Result<Vec<CovarianceSet>> {
        self.users.iter().map(|u| CovarianceSet::for_user(&u.stats, &self.wave, horizon)).collect()
    }
}
