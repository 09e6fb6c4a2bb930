//! Slot-indexed parameter schedules (`0.1 t`, `10 / t`, `10 (12 - t)`, ...).

use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A scalar parameter as a function of the 1-based slot index `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "form", rename_all = "snake_case", deny_unknown_fields))]
pub enum ParamSchedule {
    /// `a`
    Constant { a: f64 },
    /// `a * t`
    Linear { a: f64 },
    /// `a * (b - t)`
    Affine { a: f64, b: f64 },
    /// `a / t`
    Reciprocal { a: f64 },
    /// `a / (b - t)`
    ReciprocalAffine { a: f64, b: f64 },
}

impl ParamSchedule {
    pub const fn constant(a: f64) -> Self {
        ParamSchedule::Constant { a }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ParamSchedule::Constant { .. })
    }

    pub fn eval(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::invalid_arg("schedules are defined for slots t >= 1"));
        }
        let tf = t as f64;
        let v = match *self {
            ParamSchedule::Constant { a } => a,
            ParamSchedule::Linear { a } => a * tf,
            ParamSchedule::Affine { a, b } => a * (b - tf),
            ParamSchedule::Reciprocal { a } => a / tf,
            ParamSchedule::ReciprocalAffine { a, b } => {
                if b - tf == 0.0 {
                    return Err(Error::invalid_arg(format!(
                        "schedule {a}/({b} - t) has a pole at t = {t}"
                    )));
                }
                a / (b - tf)
            }
        };
        if !v.is_finite() {
            return Err(Error::invalid_arg(format!("schedule {self:?} is not finite at t = {t}")));
        }
        Ok(v)
    }

    /// Evaluate and require `value >= 0`.
    pub fn eval_nonneg(&self, t: usize, name: &str) -> Result<f64> {
        let v = self.eval(t)?;
        if v < 0.0 {
            return Err(Error::scenario(format!("{name} is negative ({v}) at slot {t}")));
        }
        Ok(v)
    }

    /// Multiply the schedule by a constant factor.
    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            ParamSchedule::Constant { a } => ParamSchedule::Constant { a: a * k },
            ParamSchedule::Linear { a } => ParamSchedule::Linear { a: a * k },
            ParamSchedule::Affine { a, b } => ParamSchedule::Affine { a: a * k, b },
            ParamSchedule::Reciprocal { a } => ParamSchedule::Reciprocal { a: a * k },
            ParamSchedule::ReciprocalAffine { a, b } => ParamSchedule::ReciprocalAffine { a: a * k, b },
        }
    }
}

impl Default for ParamSchedule {
    fn default() -> Self {
        ParamSchedule::Constant { a: 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(ParamSchedule::Linear { a: 0.1 }.eval(3).unwrap(), 0.1 * 3.0);
        assert_eq!(ParamSchedule::Affine { a: 10.0, b: 12.0 }.eval(2).unwrap(), 100.0);
        assert_eq!(ParamSchedule::Reciprocal { a: 10.0 }.eval(4).unwrap(), 2.5);
        assert_eq!(ParamSchedule::constant(7.0).eval(99).unwrap(), 7.0);
        assert_eq!(ParamSchedule::ReciprocalAffine { a: 0.1, b: 12.0 }.eval(2).unwrap(), 0.01);
    }

    #[test]
    fn slot_zero_and_poles_rejected() {
        assert!(ParamSchedule::Reciprocal { a: 1.0 }.eval(0).is_err());
        assert!(ParamSchedule::constant(1.0).eval(0).is_err());
        assert!(ParamSchedule::ReciprocalAffine { a: 1.0, b: 12.0 }.eval(12).is_err());
    }

    #[test]
    fn negative_values_flagged() {
        let s = ParamSchedule::Affine { a: 1.0, b: 5.0 };
        assert!(s.eval_nonneg(4, "k").is_ok());
        assert!(matches!(s.eval_nonneg(6, "k"), Err(Error::InvalidScenario(_))));
    }
}
