//! First- and second-order channel statistics.
//!
//! The centered channel of a user is modelled as a separable process: a
//! scalar temporal correlation (driven by Doppler and the departure-angle
//! distribution) times a per-slot standard deviation times a fixed spatial
//! correlation across the receive array (driven by the arrival-angle
//! distribution). Both correlations reduce to the same expectation,
//! `E[exp(j R cos(theta - psi))]`, which has a Bessel closed form for von
//! Mises angles.

mod covariance;

pub use covariance::{ar_noise_cov, ar_transition, decay_check, CovarianceSet, DecayReport};

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_core::RngCore;
use rand_distr::{Distribution, StandardUniform};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::schedule::ParamSchedule;
use crate::special::complex_bessel_j0;
use crate::{CMat, CVec, Error, Result, C64};

/// Speed of light used to derive the wavelength from the carrier.
pub const SPEED_OF_LIGHT: f64 = 3e8;

/// Concentrations above this overflow the Bessel ratio.
pub const MAX_CONCENTRATION: f64 = 600.0;

/// How the Doppler frequency enters the temporal phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DopplerNormalization {
    /// Phase `2 pi f_d t / f_c`.
    #[default]
    Carrier,
    /// Phase `2 pi f_d t` (slot duration 1).
    Raw,
}

/// Receive array and carrier.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct WaveConfig {
    pub carrier_frequency: f64,
    /// Element spacing in wavelengths.
    pub antenna_spacing: f64,
    /// Array orientation `eta` in radians.
    pub array_orientation: f64,
    pub antenna_count: usize,
    pub pilot_length: usize,
    pub doppler_normalization: DopplerNormalization,
}

impl Default for WaveConfig {
    fn default() -> Self {
        WaveConfig {
            carrier_frequency: 1000.0,
            antenna_spacing: 0.5,
            array_orientation: 0.0,
            antenna_count: 1,
            pilot_length: 1,
            doppler_normalization: DopplerNormalization::Carrier,
        }
    }
}

impl WaveConfig {
    pub fn new(antenna_count: usize) -> Self {
        WaveConfig { antenna_count, ..Default::default() }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn validate(&self) -> Result<()> {
        if self.antenna_count == 0 {
            return Err(Error::scenario("antenna_count must be >= 1"));
        }
        if self.pilot_length == 0 {
            return Err(Error::scenario("pilot_length must be >= 1"));
        }
        if !(self.antenna_spacing > 0.0 && self.antenna_spacing.is_finite()) {
            return Err(Error::scenario("antenna_spacing must be positive"));
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::scenario("carrier_frequency must be positive"));
        }
        if !self.array_orientation.is_finite() {
            return Err(Error::scenario("array_orientation must be finite"));
        }
        Ok(())
    }

    /// Factor turning `t * f_d(t)` into a phase.
    pub fn doppler_phase_scale(&self) -> f64 {
        match self.doppler_normalization {
            DopplerNormalization::Carrier => 2.0 * PI / self.carrier_frequency,
            DopplerNormalization::Raw => 2.0 * PI,
        }
    }

    /// Phase increment per element for a plane wave from angle `theta`.
    fn element_phase(&self, theta: f64) -> f64 {
        2.0 * PI * self.antenna_spacing * libm::cos(self.array_orientation - theta)
    }

    /// Unit-modulus ULA response `a(theta)`.
    pub fn array_response(&self, theta: f64) -> CVec {
        let step = self.element_phase(theta);
        CVec::from_iterator(
            self.antenna_count,
            (0..self.antenna_count).map(|n| C64::from_polar(1.0, step * n as f64)),
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AngularKind {
    #[default]
    Uniform,
    VonMises,
}

/// Distribution of an arrival or departure angle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AngularDistribution {
    pub kind: AngularKind,
    pub concentration: f64,
    pub central_angle: f64,
}

impl AngularDistribution {
    pub const fn uniform() -> Self {
        AngularDistribution { kind: AngularKind::Uniform, concentration: 0.0, central_angle: 0.0 }
    }

    pub const fn von_mises(concentration: f64, central_angle: f64) -> Self {
        AngularDistribution { kind: AngularKind::VonMises, concentration, central_angle }
    }

    /// `kappa`, zero for the uniform kind.
    pub fn effective_concentration(&self) -> f64 {
        match self.kind {
            AngularKind::Uniform => 0.0,
            AngularKind::VonMises => self.concentration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.concentration;
        if !(k >= 0.0 && k <= MAX_CONCENTRATION) {
            return Err(Error::scenario(format!(
                "angular concentration must lie in [0, {MAX_CONCENTRATION}], got {k}"
            )));
        }
        if !self.central_angle.is_finite() {
            return Err(Error::scenario("central angle must be finite"));
        }
        Ok(())
    }

    /// `E[exp(j r cos(theta - psi))]` for `theta` drawn from this distribution.
    pub fn characteristic(&self, r: f64, psi: f64) -> Result<C64> {
        if !(r.is_finite() && psi.is_finite()) {
            return Err(Error::invalid_arg("non-finite correlation argument"));
        }
        if r == 0.0 {
            return Ok(C64::new(1.0, 0.0));
        }
        let kappa = self.effective_concentration();
        if kappa == 0.0 {
            return complex_bessel_j0(C64::new(r, 0.0));
        }
        self.validate()?;
        // I0(w) = J0(j w) with w^2 = kappa^2 - r^2 + 2 j kappa r cos(theta_c - psi);
        // I0 is even so the branch of the root is irrelevant.
        let w2 = C64::new(kappa * kappa - r * r, 2.0 * kappa * r * libm::cos(self.central_angle - psi));
        let w = w2.sqrt();
        let num = complex_bessel_j0(C64::new(0.0, 1.0) * w)?;
        let den = complex_bessel_j0(C64::new(0.0, kappa))?;
        Ok(num / den)
    }

    /// Probability density on `(-pi, pi]`.
    pub fn density(&self, theta: f64) -> Result<f64> {
        let kappa = self.effective_concentration();
        if kappa == 0.0 {
            return Ok(1.0 / (2.0 * PI));
        }
        self.validate()?;
        // exp(kappa (cos - 1)) / (2 pi I0(kappa) e^{-kappa}) keeps both factors bounded.
        let i0 = crate::special::bessel_i0(kappa)?;
        Ok(libm::exp(kappa * (libm::cos(theta - self.central_angle) - 1.0))
            / (2.0 * PI * i0 * libm::exp(-kappa)))
    }

    /// Draw an angle (Best-Fisher rejection sampler for von Mises).
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = |rng: &mut R| -> f64 { StandardUniform.sample(rng) };
        let kappa = self.effective_concentration();
        if kappa < 1e-8 {
            return PI * (2.0 * u(rng) - 1.0);
        }
        let tau = 1.0 + libm::sqrt(1.0 + 4.0 * kappa * kappa);
        let rho = (tau - libm::sqrt(2.0 * tau)) / (2.0 * kappa);
        let r = (1.0 + rho * rho) / (2.0 * rho);
        loop {
            let z = libm::cos(PI * u(rng));
            let f = (1.0 + r * z) / (r + z);
            let c = kappa * (r - f);
            let u2: f64 = u(rng);
            if c * (2.0 - c) - u2 > 0.0 || libm::log(c / u2) + 1.0 - c >= 0.0 {
                let sign = if u(rng) < 0.5 { -1.0 } else { 1.0 };
                return wrap_angle(self.central_angle + sign * libm::acos(f.clamp(-1.0, 1.0)));
            }
        }
    }
}

/// Wrap to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut x = libm::fmod(theta + PI, 2.0 * PI);
    if x <= 0.0 {
        x += 2.0 * PI;
    }
    x - PI
}

/// How the spatial correlation across the array is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SpatialModel {
    /// `R_spatial = I`.
    #[default]
    Identity,
    /// Toeplitz matrix of arrival-angle correlations.
    Angular,
}

/// Statistical description of one user's channel.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct UserStatModel {
    pub doppler: ParamSchedule,
    pub rician_factor: ParamSchedule,
    pub nlos_variance: ParamSchedule,
    /// Path loss in dB; amplitude is `10^(-PL/20)`.
    pub path_loss_db: f64,
    pub aoa: AngularDistribution,
    pub aod: AngularDistribution,
    /// Direction of motion relative to the departure angles.
    pub heading: ParamSchedule,
    pub los_phase: f64,
    pub los_aoa: f64,
    pub los_doppler: ParamSchedule,
    pub spatial: SpatialModel,
}

impl Default for UserStatModel {
    fn default() -> Self {
        UserStatModel {
            doppler: ParamSchedule::constant(0.0),
            rician_factor: ParamSchedule::constant(0.0),
            nlos_variance: ParamSchedule::constant(1.0),
            path_loss_db: 0.0,
            aoa: AngularDistribution::uniform(),
            aod: AngularDistribution::uniform(),
            heading: ParamSchedule::constant(0.0),
            los_phase: 0.0,
            los_aoa: 0.0,
            los_doppler: ParamSchedule::constant(0.0),
            spatial: SpatialModel::Identity,
        }
    }
}

impl UserStatModel {
    /// Large-scale amplitude `alpha`.
    pub fn amplitude(&self) -> f64 {
        libm::pow(10.0, -self.path_loss_db / 20.0)
    }

    /// Check every schedule on slots `1..=horizon`.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if !(self.path_loss_db >= 0.0 && self.path_loss_db.is_finite()) {
            return Err(Error::scenario(format!(
                "path loss must be a finite non-negative dB value, got {}",
                self.path_loss_db
            )));
        }
        if !(self.los_phase.is_finite() && self.los_aoa.is_finite()) {
            return Err(Error::scenario("LoS phase and angle must be finite"));
        }
        self.aoa.validate()?;
        self.aod.validate()?;
        for t in 1..=horizon {
            self.doppler.eval(t)?;
            self.heading.eval(t)?;
            self.los_doppler.eval(t)?;
            self.rician_factor.eval_nonneg(t, "rician_factor")?;
            self.nlos_variance.eval_nonneg(t, "nlos_variance")?;
        }
        Ok(())
    }

    /// Departure-side phase vector `phi(t) exp(j gamma(t))`.
    fn doppler_phasor(&self, t: usize, wave: &WaveConfig) -> Result<C64> {
        let phi = wave.doppler_phase_scale() * t as f64 * self.doppler.eval(t)?;
        Ok(C64::from_polar(phi, self.heading.eval(t)?))
    }
}

/// `rho_temporal(t1, t2)`.
pub fn temporal_correlation(t1: usize, t2: usize, user: &UserStatModel, wave: &WaveConfig) -> Result<C64> {
    if t1 == 0 || t2 == 0 {
        return Err(Error::invalid_arg("slots are 1-based"));
    }
    if t1 == t2 {
        return Ok(C64::new(1.0, 0.0));
    }
    let z = user.doppler_phasor(t1, wave)? - user.doppler_phasor(t2, wave)?;
    user.aod.characteristic(z.norm(), z.arg())
}

/// `rho_spatial(k - l)`.
pub fn spatial_correlation(k: usize, l: usize, user: &UserStatModel, wave: &WaveConfig) -> Result<C64> {
    let n = wave.antenna_count;
    if k >= n || l >= n {
        return Err(Error::invalid_arg(format!("antenna index out of range ({k}, {l}) for N_r = {n}")));
    }
    if k == l {
        return Ok(C64::new(1.0, 0.0));
    }
    let mu = k as f64 - l as f64;
    user.aoa.characteristic(2.0 * PI * wave.antenna_spacing * mu, wave.array_orientation)
}

/// `R_spatial` for the configured spatial model.
pub fn spatial_matrix(user: &UserStatModel, wave: &WaveConfig) -> Result<CMat> {
    let n = wave.antenna_count;
    match user.spatial {
        SpatialModel::Identity => Ok(CMat::identity(n, n)),
        SpatialModel::Angular => {
            // Toeplitz: one correlation per lag.
            let lags: Vec<C64> = (0..n).map(|mu| spatial_correlation(mu, 0, user, wave)).collect::<Result<_>>()?;
            Ok(CMat::from_fn(n, n, |k, l| if k >= l { lags[k - l] } else { lags[l - k].conj() }))
        }
    }
}

/// `C_h(t1, t2)` built element-wise.
pub fn cross_covariance(t1: usize, t2: usize, user: &UserStatModel, wave: &WaveConfig) -> Result<CMat> {
    let rho = temporal_correlation(t1, t2, user, wave)?;
    let s1 = libm::sqrt(user.nlos_variance.eval_nonneg(t1, "nlos_variance")?);
    let s2 = libm::sqrt(user.nlos_variance.eval_nonneg(t2, "nlos_variance")?);
    Ok(spatial_matrix(user, wave)? * (rho * s1 * s2))
}

/// Rician LoS mean `h_bar(t)`.
pub fn los_mean(t: usize, user: &UserStatModel, wave: &WaveConfig) -> Result<CVec> {
    let kf = user.rician_factor.eval_nonneg(t, "rician_factor")?;
    let var = user.nlos_variance.eval_nonneg(t, "nlos_variance")?;
    let n = wave.antenna_count;
    if kf == 0.0 || var == 0.0 {
        return Ok(CVec::zeros(n));
    }
    let phase = wave.doppler_phase_scale() * t as f64 * user.los_doppler.eval(t)? + user.los_phase;
    Ok(wave.array_response(user.los_aoa) * C64::from_polar(libm::sqrt(kf * var), phase))
}
