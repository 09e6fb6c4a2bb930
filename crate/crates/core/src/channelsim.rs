//! Seeded channel trajectories and pilot/data observations.
//!
//! Every random draw comes from a ChaCha8 stream keyed by `(seed, trial)` and
//! selected by `(user, slot, purpose)`, so results do not depend on how
//! trials are scheduled across threads.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

use crate::corrmodel::{ar_noise_cov, ar_transition, CovarianceSet, UserStatModel, WaveConfig};
use crate::estimator::{pilot_matrix, PilotConfig};
use crate::layout::{FrameLayout, SlotKind};
use crate::linalg::sqrt_psd;
use crate::{CMat, CVec, Error, Result, C64};

/// What a random stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Trajectory = 1,
    PilotNoise = 2,
    DataNoise = 3,
    Symbols = 4,
    Scatterers = 5,
}

/// `SplitMix64` finalizer, used to spread seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, trial, user, slot, purpose)`.
pub fn substream(seed: u64, trial: u64, user: usize, slot: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(trial)));
    let stream = ((user as u64 & 0xFFFF) << 48) | ((slot as u64 & 0xFF_FFFF_FFFF) << 8) | purpose as u64;
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric complex normal with variance `var`.
pub fn complex_normal<R: RngCore + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = libm::sqrt(var) * FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

fn normal_vec<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng, 1.0))
}

/// Channel of one user over slots `1..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTrajectory {
    pub seed: u64,
    pub h: Vec<CVec>,
}

impl ChannelTrajectory {
    pub fn horizon(&self) -> usize {
        self.h.len()
    }

    pub fn at(&self, t: usize) -> Result<&CVec> {
        self.h
            .get(t.wrapping_sub(1))
            .ok_or_else(|| Error::misuse(format!("slot {t} outside trajectory of {} slots", self.h.len())))
    }
}

/// How trajectories are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SamplerKind {
    /// `h~(t+1) = A(t) h~(t) + xi(t+1)`; exact at lag one.
    Recursion,
    /// Square root of the joint covariance over the horizon; exact at every lag.
    #[default]
    Joint,
}

#[derive(Clone, Debug)]
enum Factor {
    Recursion { first: CMat, transitions: Vec<CMat>, innovations: Vec<CMat> },
    /// `h~ = L_R W L_T^T` with `W` iid.
    Separable { temporal: CMat, spatial: CMat },
    Full(CMat),
}

/// Precomputed factors for repeated trajectory draws.
#[derive(Clone, Debug)]
pub struct TrajectorySampler {
    horizon: usize,
    antennas: usize,
    means: Vec<CVec>,
    factor: Factor,
}

impl TrajectorySampler {
    pub fn new(cov: &CovarianceSet, horizon: usize, kind: SamplerKind) -> Result<Self> {
        if horizon == 0 || horizon > cov.horizon() {
            return Err(Error::misuse(format!("horizon {horizon} outside 1..={}", cov.horizon())));
        }
        let cov = cov.truncated(horizon)?;
        let n = cov.antennas();
        let means = (1..=horizon).map(|t| cov.mean(t).cloned()).collect::<Result<Vec<_>>>()?;
        let factor = match kind {
            SamplerKind::Recursion => {
                let first = sqrt_psd(&cov.auto(1)?, "C_h(1)")?;
                let mut transitions = Vec::with_capacity(horizon - 1);
                let mut innovations = Vec::with_capacity(horizon - 1);
                for t in 1..horizon {
                    transitions.push(ar_transition(t, &cov)?);
                    innovations.push(sqrt_psd(&ar_noise_cov(t, &cov)?, "AR innovation covariance")?);
                }
                Factor::Recursion { first, transitions, innovations }
            }
            SamplerKind::Joint => match cov.separable_parts() {
                Some((t, r)) => Factor::Separable {
                    temporal: sqrt_psd(&t, "temporal kernel")?,
                    spatial: sqrt_psd(r, "spatial correlation")?,
                },
                None => {
                    let slots: Vec<usize> = (1..=horizon).collect();
                    Factor::Full(sqrt_psd(&cov.stacked(&slots)?, "joint channel covariance")?)
                }
            },
        };
        Ok(TrajectorySampler { horizon, antennas: n, means, factor })
    }

    /// One trajectory from `rng`.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R, seed: u64) -> ChannelTrajectory {
        let n = self.antennas;
        let h = self.horizon;
        let centered: Vec<CVec> = match &self.factor {
            Factor::Recursion { first, transitions, innovations } => {
                let mut out = Vec::with_capacity(h);
                out.push(first * normal_vec(rng, n));
                for t in 1..h {
                    let next = &transitions[t - 1] * &out[t - 1] + &innovations[t - 1] * normal_vec(rng, n);
                    out.push(next);
                }
                out
            }
            Factor::Separable { temporal, spatial } => {
                let w = CMat::from_fn(n, h, |_, _| complex_normal(rng, 1.0));
                // sqrt_psd factors are Hermitian: L_T^T = conj(L_T)
                let m = spatial * w * temporal.transpose();
                (0..h).map(|t| m.column(t).into_owned()).collect()
            }
            Factor::Full(l) => {
                let v = l * normal_vec(rng, n * h);
                (0..h).map(|t| v.rows(t * n, n).into_owned()).collect()
            }
        };
        let h = centered.into_iter().zip(&self.means).map(|(c, m)| c + m).collect();
        ChannelTrajectory { seed, h }
    }
}

/// AR-recursion trajectory over `1..=horizon` from `seed`.
pub fn sample_trajectory(cov: &CovarianceSet, horizon: usize, seed: u64) -> Result<ChannelTrajectory> {
    let sampler = TrajectorySampler::new(cov, horizon, SamplerKind::Recursion)?;
    let mut rng = substream(seed, 0, 0, 0, Purpose::Trajectory);
    Ok(sampler.sample(&mut rng, seed))
}

/// Scatterer geometry of the sum-of-paths oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct ScattererField {
    pub departure: Vec<f64>,
    pub arrival: Vec<f64>,
    pub phase: Vec<f64>,
}

impl ScattererField {
    pub fn draw<R: RngCore + ?Sized>(user: &UserStatModel, count: usize, rng: &mut R) -> Self {
        let mut departure = Vec::with_capacity(count);
        let mut arrival = Vec::with_capacity(count);
        let mut phase = Vec::with_capacity(count);
        for _ in 0..count {
            departure.push(user.aod.sample(rng));
            arrival.push(user.aoa.sample(rng));
            let u: f64 = StandardUniform.sample(rng);
            phase.push(PI * (2.0 * u - 1.0));
        }
        ScattererField { departure, arrival, phase }
    }

    /// `h'(t) = (s N_r)^{-1/2} sum_i exp(j(phi(t) cos(gamma(t) - theta_D,i) + beta_i)) a(theta_A,i)`.
    pub fn trajectory(&self, user: &UserStatModel, wave: &WaveConfig, horizon: usize, seed: u64) -> Result<ChannelTrajectory> {
        let s = self.phase.len();
        if s == 0 {
            return Err(Error::invalid_arg("scatterer oracle needs at least one scatterer"));
        }
        let n = wave.antenna_count;
        let norm = 1.0 / libm::sqrt((s * n) as f64);
        let responses: Vec<CVec> = self.arrival.iter().map(|&th| wave.array_response(th)).collect();
        let mut h = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            let phi = wave.doppler_phase_scale() * t as f64 * user.doppler.eval(t)?;
            let gamma = user.heading.eval(t)?;
            let mut v = CVec::zeros(n);
            for i in 0..s {
                let coef = C64::from_polar(norm, phi * libm::cos(gamma - self.departure[i]) + self.phase[i]);
                v += &responses[i] * coef;
            }
            h.push(v);
        }
        Ok(ChannelTrajectory { seed, h })
    }
}

/// Normalized centered channel from `count` random scatterers; its
/// covariance is `rho_temporal * R_spatial / N_r`.
pub fn scatterer_oracle(
    user: &UserStatModel,
    wave: &WaveConfig,
    count: usize,
    horizon: usize,
    seed: u64,
) -> Result<ChannelTrajectory> {
    let mut rng = substream(seed, 0, 0, 0, Purpose::Scatterers);
    ScattererField::draw(user, count, &mut rng).trajectory(user, wave, horizon, seed)
}

/// `y_p = alpha sqrt(P_p) (I ⊗ s) h(i) + n_p`.
pub fn observe_pilot<R: RngCore + ?Sized>(
    trajectory: &ChannelTrajectory,
    layout: &FrameLayout,
    slot: usize,
    pilot: &PilotConfig,
    rng: &mut R,
) -> Result<CVec> {
    if layout.slot_kind(slot) != Some(SlotKind::Pilot) {
        return Err(Error::misuse(format!("slot {slot} is not a pilot slot of {layout}")));
    }
    let h = trajectory.at(slot)?;
    let s = pilot_matrix(h.len(), pilot.length);
    let mut y = s * h * C64::new(pilot.gain(), 0.0);
    if pilot.noise > 0.0 {
        for v in y.iter_mut() {
            *v += complex_normal(rng, pilot.noise);
        }
    }
    Ok(y)
}

/// Data symbol alphabet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Constellation {
    #[default]
    Qpsk,
    Gaussian,
}

impl Constellation {
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> C64 {
        match self {
            Constellation::Qpsk => {
                let b = rng.next_u32();
                let re = if b & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                let im = if b & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                C64::new(re, im)
            }
            Constellation::Gaussian => complex_normal(rng, 1.0),
        }
    }
}

/// Received data vector and the transmitted symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct DataObservation {
    pub y: CVec,
    pub symbols: Vec<C64>,
}

/// Symbols drawn from `symbol_rng`, noise from `noise_rng`; `links[k] =
/// (alpha_k, P_d,k)`.
pub fn observe_data<R: RngCore + ?Sized, S: RngCore + ?Sized>(
    trajectories: &[&ChannelTrajectory],
    layout: &FrameLayout,
    slot: usize,
    links: &[(f64, f64)],
    noise: f64,
    constellation: Constellation,
    symbol_rng: &mut S,
    noise_rng: &mut R,
) -> Result<DataObservation> {
    let symbols: Vec<C64> = trajectories.iter().map(|_| constellation.draw(symbol_rng)).collect();
    observe_data_with(trajectories, layout, slot, links, noise, &symbols, noise_rng)
}

/// As [`observe_data`] with given symbols.
pub fn observe_data_with<R: RngCore + ?Sized>(
    trajectories: &[&ChannelTrajectory],
    layout: &FrameLayout,
    slot: usize,
    links: &[(f64, f64)],
    noise: f64,
    symbols: &[C64],
    noise_rng: &mut R,
) -> Result<DataObservation> {
    if layout.slot_kind(slot) != Some(SlotKind::Data) {
        return Err(Error::misuse(format!("slot {slot} is not a data slot of {layout}")));
    }
    if trajectories.is_empty() || trajectories.len() != links.len() || symbols.len() != links.len() {
        return Err(Error::misuse("one trajectory, link and symbol per user is required"));
    }
    let n = trajectories[0].at(slot)?.len();
    let mut y = CVec::zeros(n);
    for ((traj, &(alpha, pd)), x) in trajectories.iter().zip(links).zip(symbols) {
        y += traj.at(slot)? * (*x * (alpha * libm::sqrt(pd)));
    }
    if noise > 0.0 {
        for v in y.iter_mut() {
            *v += complex_normal(noise_rng, noise);
        }
    }
    Ok(DataObservation { y, symbols: symbols.to_vec() })
}
