use alloc::format;
use alloc::vec::Vec;

use super::{los_mean, spatial_matrix, temporal_correlation, UserStatModel, WaveConfig};
use crate::linalg::{self, hermitize, repair_psd};
use crate::{CMat, CVec, Error, Result, C64};

/// Radius at or above which a one-step propagator is considered non-decaying.
const DECAY_THRESHOLD: f64 = 1.0 - 1e-9;

#[derive(Clone, Debug)]
enum Structure {
    /// `C(t1, t2) = T[t1, t2] * R` with `T` the scaled temporal kernel.
    Separable { kernel: Vec<C64>, spatial: CMat },
    /// Arbitrary blocks, full `H x H` grid in row-major order.
    Blocks(Vec<CMat>),
}

/// Means and covariances of one user's channel over slots `1..=horizon`.
#[derive(Clone, Debug)]
pub struct CovarianceSet {
    horizon: usize,
    antennas: usize,
    means: Vec<CVec>,
    structure: Structure,
}

impl CovarianceSet {
    /// Separable statistics of `user` over `1..=horizon`.
    pub fn for_user(user: &UserStatModel, wave: &WaveConfig, horizon: usize) -> Result<Self> {
        wave.validate()?;
        user.validate(horizon)?;
        let std: Vec<f64> = (1..=horizon)
            .map(|t| user.nlos_variance.eval_nonneg(t, "nlos_variance").map(libm::sqrt))
            .collect::<Result<_>>()?;
        let temporal = |t1: usize, t2: usize| temporal_correlation(t1, t2, user, wave);
        let means = (1..=horizon).map(|t| los_mean(t, user, wave)).collect::<Result<Vec<_>>>()?;
        let spatial = spatial_matrix(user, wave)?;
        Self::separable(horizon, temporal, &std, spatial, means)
    }

    /// `C(t1, t2) = rho(t1, t2) s(t1) s(t2) R`.
    pub fn separable(
        horizon: usize,
        mut rho: impl FnMut(usize, usize) -> Result<C64>,
        std: &[f64],
        spatial: CMat,
        means: Vec<CVec>,
    ) -> Result<Self> {
        let n = spatial.nrows();
        check_shape(horizon, n, std.len(), &means)?;
        if spatial.ncols() != n {
            return Err(linalg::dims_error("spatial correlation", (n, n), spatial.shape()));
        }
        if std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::scenario("standard deviations must be finite and non-negative"));
        }
        let spatial = repair_psd(&spatial, "spatial correlation")?;
        let mut kernel = alloc::vec![C64::new(0.0, 0.0); horizon * horizon];
        for t1 in 1..=horizon {
            kernel[(t1 - 1) * horizon + t1 - 1] = C64::new(std[t1 - 1] * std[t1 - 1], 0.0);
            for t2 in t1 + 1..=horizon {
                let r = rho(t1, t2)?;
                if !(r.re.is_finite() && r.im.is_finite()) {
                    return Err(Error::scenario(format!("temporal correlation not finite at ({t1}, {t2})")));
                }
                let v = r * std[t1 - 1] * std[t2 - 1];
                kernel[(t1 - 1) * horizon + t2 - 1] = v;
                kernel[(t2 - 1) * horizon + t1 - 1] = v.conj();
            }
        }
        Ok(CovarianceSet { horizon, antennas: n, means, structure: Structure::Separable { kernel, spatial } })
    }

    /// General set from a block function `cross(t1, t2) = C(t1, t2)`, queried
    /// for `t1 <= t2` only; the lower blocks are conjugate transposes.
    pub fn from_blocks(
        horizon: usize,
        antennas: usize,
        means: Vec<CVec>,
        mut cross: impl FnMut(usize, usize) -> Result<CMat>,
    ) -> Result<Self> {
        check_shape(horizon, antennas, horizon, &means)?;
        let mut blocks = alloc::vec![CMat::zeros(antennas, antennas); horizon * horizon];
        for t1 in 1..=horizon {
            for t2 in t1..=horizon {
                let b = cross(t1, t2)?;
                if b.shape() != (antennas, antennas) {
                    return Err(linalg::dims_error("covariance block", (antennas, antennas), b.shape()));
                }
                if t1 == t2 {
                    blocks[(t1 - 1) * horizon + t1 - 1] = repair_psd(&b, "auto-covariance")?;
                } else {
                    blocks[(t2 - 1) * horizon + t1 - 1] = b.adjoint();
                    blocks[(t1 - 1) * horizon + t2 - 1] = b;
                }
            }
        }
        Ok(CovarianceSet { horizon, antennas, means, structure: Structure::Blocks(blocks) })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    fn check_slot(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::misuse(format!("slot {t} outside horizon 1..={}", self.horizon)));
        }
        Ok(())
    }

    /// `h_bar(t)`.
    pub fn mean(&self, t: usize) -> Result<&CVec> {
        self.check_slot(t)?;
        Ok(&self.means[t - 1])
    }

    /// `C_h(t)`.
    pub fn auto(&self, t: usize) -> Result<CMat> {
        self.cross(t, t)
    }

    /// `C_h(t1, t2) = E[h~(t1) h~(t2)^H]`.
    pub fn cross(&self, t1: usize, t2: usize) -> Result<CMat> {
        self.check_slot(t1)?;
        self.check_slot(t2)?;
        let idx = (t1 - 1) * self.horizon + t2 - 1;
        Ok(match &self.structure {
            Structure::Separable { kernel, spatial } => spatial * kernel[idx],
            Structure::Blocks(blocks) => blocks[idx].clone(),
        })
    }

    /// Scalar temporal factor when the set is separable.
    pub fn scalar_cross(&self, t1: usize, t2: usize) -> Option<C64> {
        match &self.structure {
            Structure::Separable { kernel, .. } if t1 >= 1 && t2 >= 1 && t1 <= self.horizon && t2 <= self.horizon => {
                Some(kernel[(t1 - 1) * self.horizon + t2 - 1])
            }
            _ => None,
        }
    }

    /// `(T, R)` with `C(t1, t2) = T[t1, t2] R` when the set is separable.
    pub fn separable_parts(&self) -> Option<(CMat, &CMat)> {
        match &self.structure {
            Structure::Separable { kernel, spatial } => {
                let h = self.horizon;
                Some((CMat::from_fn(h, h, |a, b| kernel[a * h + b]), spatial))
            }
            Structure::Blocks(_) => None,
        }
    }

    /// Joint covariance of `[h~(s_1); ...; h~(s_p)]`.
    pub fn stacked(&self, slots: &[usize]) -> Result<CMat> {
        let n = self.antennas;
        let mut out = CMat::zeros(n * slots.len(), n * slots.len());
        for (a, &s1) in slots.iter().enumerate() {
            for (b, &s2) in slots.iter().enumerate() {
                out.view_mut((a * n, b * n), (n, n)).copy_from(&self.cross(s1, s2)?);
            }
        }
        Ok(hermitize(&out))
    }

    /// Restriction to slots `1..=horizon`.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon > self.horizon {
            return Err(Error::misuse(format!("cannot truncate horizon {} to {horizon}", self.horizon)));
        }
        let h0 = self.horizon;
        let pick = |v: &[_]| -> Vec<_> { (0..horizon * horizon).map(|i| v[(i / horizon) * h0 + i % horizon]).collect() };
        let structure = match &self.structure {
            Structure::Separable { kernel, spatial } => {
                Structure::Separable { kernel: pick(kernel), spatial: spatial.clone() }
            }
            Structure::Blocks(blocks) => Structure::Blocks(
                (0..horizon * horizon).map(|i| blocks[(i / horizon) * h0 + i % horizon].clone()).collect(),
            ),
        };
        Ok(CovarianceSet { horizon, antennas: self.antennas, means: self.means[..horizon].to_vec(), structure })
    }
}

fn check_shape(horizon: usize, antennas: usize, std_len: usize, means: &[CVec]) -> Result<()> {
    if horizon == 0 || antennas == 0 {
        return Err(Error::invalid_arg("covariance set needs horizon >= 1 and antennas >= 1"));
    }
    if std_len != horizon || means.len() != horizon {
        return Err(Error::invalid_arg(format!(
            "expected {horizon} per-slot entries, got {std_len} deviations and {} means",
            means.len()
        )));
    }
    if let Some(m) = means.iter().find(|m| m.len() != antennas) {
        return Err(linalg::dims_error("mean vector", (antennas, 1), m.shape()));
    }
    Ok(())
}

/// `A(t) = C_h(t+1, t) C_h(t)^{-1}`.
pub fn ar_transition(t: usize, cov: &CovarianceSet) -> Result<CMat> {
    let c_t = cov.auto(t)?;
    let c_next_t = cov.cross(t + 1, t)?;
    if c_next_t.iter().all(|v| *v == C64::new(0.0, 0.0)) {
        return Ok(CMat::zeros(cov.antennas, cov.antennas));
    }
    let inv = linalg::inverse_pd(&c_t, "C_h(t) in AR transition")?;
    Ok(c_next_t * inv)
}

/// `Theta(t+1) = C_h(t+1) - C_h(t+1, t) C_h(t)^{-1} C_h(t, t+1)`, repaired to PSD.
pub fn ar_noise_cov(t: usize, cov: &CovarianceSet) -> Result<CMat> {
    let a = ar_transition(t, cov)?;
    let theta = cov.auto(t + 1)? - &a * cov.cross(t, t + 1)?;
    repair_psd(&hermitize(&theta), "AR innovation covariance")
}

/// Outcome of [`decay_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    /// Spectral radius of the normalized one-step propagator, per `t = 1..horizon-1`.
    pub radii: Vec<f64>,
    pub max_radius: f64,
    /// Slots `t` whose radius is not below one.
    pub violations: Vec<usize>,
}

impl DecayReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Spectral radius of `C_h^{-1/2}(t+1) C_h(t+1, t) C_h^{-1/2}(t)` for every `t`.
pub fn decay_check(cov: &CovarianceSet, horizon: usize) -> Result<DecayReport> {
    if horizon < 2 || horizon > cov.horizon() {
        return Err(Error::invalid_arg(format!(
            "decay check needs 2 <= horizon <= {}, got {horizon}",
            cov.horizon()
        )));
    }
    let mut radii = Vec::with_capacity(horizon - 1);
    let mut violations = Vec::new();
    let mut inv_sqrt_prev = linalg::inv_sqrt_pd(&cov.auto(1)?, "C_h(1)")?;
    for t in 1..horizon {
        let inv_sqrt_next = linalg::inv_sqrt_pd(&cov.auto(t + 1)?, "C_h(t+1)")?;
        let p = &inv_sqrt_next * cov.cross(t + 1, t)? * &inv_sqrt_prev;
        let r = linalg::spectral_radius(&p);
        if r >= DECAY_THRESHOLD {
            violations.push(t);
        }
        radii.push(r);
        inv_sqrt_prev = inv_sqrt_next;
    }
    let max_radius = radii.iter().copied().fold(0.0, f64::max);
    Ok(DecayReport { radii, max_radius, violations })
}
