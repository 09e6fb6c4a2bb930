//! Monte Carlo evaluation of the instantaneous SE of a link model.
//!
//! One trial draws every user's channel trajectory, the pilot observations
//! of every pilot slot and the data observation of every data slot, then
//! runs estimation, conditioning and MMSE combining exactly as the receiver
//! would. Trials are pure functions of `(seed, trial)`, so any split of the
//! trial range across threads gives identical results.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::channelsim::{observe_data, observe_pilot, substream, ChannelTrajectory, Constellation, Purpose, SamplerKind, TrajectorySampler};
use crate::corrmodel::CovarianceSet;
use crate::deteq::interference_floor;
use crate::estimator::{lmmse_point, EstimationKernel};
use crate::layout::SlotKind;
use crate::model::LinkModel;
use crate::receiver::{instantaneous_se, instantaneous_sinr, mmse_combiner, PriorStack, SinrContext};
use crate::{CMat, CVec, Error, Result, C64};

/// Outcome of one data slot of one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotSample {
    /// Instantaneous SE (nats).
    pub se: f64,
    /// `|g y - x_1|^2` of the MMSE combiner on the drawn data symbol.
    pub symbol_error: f64,
    /// `1 / (1 + gamma)`, the conditional MSE the combiner should achieve.
    pub predicted_error: f64,
}

/// Samples of one trial, one entry per data slot of the link model.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub slots: Vec<SlotSample>,
}

/// Reusable sampling state for one link model.
#[derive(Clone, Debug)]
pub struct MonteCarlo<'a> {
    link: &'a LinkModel,
    stats: &'a [CovarianceSet],
    samplers: Vec<TrajectorySampler>,
    /// `S + sigma_d^2 I` per data slot.
    floors: Vec<CMat>,
    pub constellation: Constellation,
}

impl<'a> MonteCarlo<'a> {
    pub fn new(link: &'a LinkModel, stats: &'a [CovarianceSet], sampler: SamplerKind) -> Result<Self> {
        if stats.len() != link.users.len() {
            return Err(Error::misuse(format!("{} covariance sets for {} users", stats.len(), link.users.len())));
        }
        let horizon = link.layout.horizon();
        let samplers = stats.iter().map(|c| TrajectorySampler::new(c, horizon, sampler)).collect::<Result<Vec<_>>>()?;
        let weights: Vec<f64> = link.users.iter().map(|u| u.weight).collect();
        let floors = link
            .data_slots
            .iter()
            .map(|slot| {
                let q: Vec<&CMat> = slot.users.iter().map(|u| &u.moments.residual).collect();
                let s = interference_floor(&weights, &q)?;
                let n = s.nrows();
                Ok(s + CMat::identity(n, n) * C64::new(link.noise, 0.0))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MonteCarlo { link, stats, samplers, floors, constellation: Constellation::default() })
    }

    /// Run trial `trial` of the experiment seeded with `seed`.
    pub fn trial(&self, seed: u64, trial: u64) -> Result<TrialOutcome> {
        let link = self.link;
        let layout = &link.layout;
        let horizon = layout.horizon();
        let trajectories: Vec<ChannelTrajectory> = self
            .samplers
            .iter()
            .enumerate()
            .map(|(k, s)| s.sample(&mut substream(seed, trial, k, 0, Purpose::Trajectory), seed))
            .collect();
        // pilot observations, indexed [user][slot - 1]
        let mut pilots: Vec<Vec<Option<CVec>>> = vec![vec![None; horizon]; trajectories.len()];
        for (k, traj) in trajectories.iter().enumerate() {
            for p in layout.pilot_slots() {
                let mut rng = substream(seed, trial, k, p, Purpose::PilotNoise);
                pilots[k][p - 1] = Some(observe_pilot(traj, layout, p, &link.users[k].pilot, &mut rng)?);
            }
        }
        let refs: Vec<&ChannelTrajectory> = trajectories.iter().collect();
        let links: Vec<(f64, f64)> = link.users.iter().map(|u| (u.pilot.amplitude, u.budget.data_per_slot)).collect();
        let mut slots = Vec::with_capacity(link.data_slots.len());
        for (slot, floor) in link.data_slots.iter().zip(&self.floors) {
            let mut z = Vec::with_capacity(slot.users.len());
            for (k, u) in slot.users.iter().enumerate() {
                let current = self.estimate(&u.kernel, k, &pilots[k])?;
                let anchored = self.estimate(&u.anchor_kernel, k, &pilots[k])?;
                let prior = PriorStack { slot: slot.slot, anchor: slot.anchor, current, anchored };
                z.push(u.moments.conditional_mean(&prior)?);
            }
            let terms: Vec<(f64, &CVec)> = link.users.iter().zip(&z).map(|(u, z)| (u.weight, z)).collect();
            let ctx = SinrContext::with_floor(floor, &terms)?;
            let gamma = instantaneous_sinr(&ctx)?;
            let g = mmse_combiner(&ctx)?;
            let obs = observe_data(
                &refs,
                layout,
                slot.slot,
                &links,
                link.noise,
                self.constellation,
                &mut substream(seed, trial, 0, slot.slot, Purpose::Symbols),
                &mut substream(seed, trial, 0, slot.slot, Purpose::DataNoise),
            )?;
            let symbol_error = ((g * &obs.y)[(0, 0)] - obs.symbols[0]).norm_sqr();
            slots.push(SlotSample { se: instantaneous_se(gamma)?, symbol_error, predicted_error: 1.0 / (1.0 + gamma) });
        }
        Ok(TrialOutcome { trial, slots })
    }

    fn estimate(&self, kernel: &EstimationKernel, k: usize, pilots: &[Option<CVec>]) -> Result<CVec> {
        let obs = kernel
            .window
            .slots
            .iter()
            .map(|&p| pilots[p - 1].clone().ok_or_else(|| Error::misuse(format!("slot {p} has no pilot observation"))))
            .collect::<Result<Vec<_>>>()?;
        lmmse_point(kernel, &self.stats[k], &obs)
    }

    /// Trials `0..trials` in order.
    pub fn run(&self, seed: u64, trials: u64) -> Result<Vec<TrialOutcome>> {
        (0..trials).map(|t| self.trial(seed, t)).collect()
    }
}

/// Sample mean and standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count();
        if n == 0 {
            return Moments::default();
        }
        let mean = values.clone().sum::<f64>() / n as f64;
        let var = if n > 1 { values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Moments { mean, std: libm::sqrt(var) }
    }
}

/// Per-slot statistics of a set of trials.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotStatistics {
    pub slot: usize,
    pub kind: SlotKind,
    /// Instantaneous SE; zero at pilot slots.
    pub se: Moments,
    pub symbol_error: Moments,
    pub predicted_error: Moments,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub slots: Vec<SlotStatistics>,
    /// Mean over trials of the horizon-averaged SE.
    pub ase: Moments,
}

/// Aggregate trial outcomes of `link` (order of `outcomes` is irrelevant up to
/// floating-point summation order; callers pass them sorted by trial).
pub fn summarize(link: &LinkModel, outcomes: &[TrialOutcome]) -> Result<MonteCarloSummary> {
    let layout = &link.layout;
    let horizon = layout.horizon();
    if outcomes.iter().any(|o| o.slots.len() != link.data_slots.len()) {
        return Err(Error::misuse("trial outcome does not match the link model"));
    }
    let mut slots = Vec::with_capacity(horizon);
    let mut d = 0;
    for t in 1..=horizon {
        let kind = layout.slot_kind(t).expect("slot inside layout");
        if kind == SlotKind::Pilot {
            slots.push(SlotStatistics {
                slot: t,
                kind,
                se: Moments::default(),
                symbol_error: Moments::default(),
                predicted_error: Moments::default(),
            });
            continue;
        }
        let col = outcomes.iter().map(move |o| o.slots[d]);
        slots.push(SlotStatistics {
            slot: t,
            kind,
            se: Moments::of(col.clone().map(|s| s.se)),
            symbol_error: Moments::of(col.clone().map(|s| s.symbol_error)),
            predicted_error: Moments::of(col.map(|s| s.predicted_error)),
        });
        d += 1;
    }
    let ase = Moments::of(outcomes.iter().map(|o| o.slots.iter().map(|s| s.se).sum::<f64>() / horizon as f64));
    Ok(MonteCarloSummary { trials: outcomes.len(), slots, ase })
}
