//! Multi-frame pilot/data structure and per-slot power splitting.
//!
//! A layout `q = [q_1, ..., q_M]` covers slots `1..=sum(q)`. Frame `m` spans
//! slots `delta_{m-1} ..= delta_m - 1` with `delta_m = q_1 + ... + q_m + 1`;
//! its first slot carries the pilot and the rest carry data.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest admissible frame: one pilot plus one data slot.
pub const MIN_FRAME: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SlotKind {
    Pilot,
    Data,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameLayout {
    sizes: Vec<usize>,
    /// `delta_0 ..= delta_M`
    boundaries: Vec<usize>,
}

impl FrameLayout {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::layout("a layout needs at least one frame"));
        }
        if let Some((m, q)) = sizes.iter().enumerate().find(|(_, q)| **q < MIN_FRAME) {
            return Err(Error::layout(format!(
                "frame {} has size {q}; every frame needs a pilot and at least one data slot",
                m + 1
            )));
        }
        let mut boundaries = Vec::with_capacity(sizes.len() + 1);
        boundaries.push(1);
        for q in sizes {
            let last = *boundaries.last().expect("non-empty");
            boundaries.push(last + q);
        }
        Ok(FrameLayout { sizes: sizes.to_vec(), boundaries })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn frame_count(&self) -> usize {
        self.sizes.len()
    }

    /// `delta_m` for `m = 0..=M`.
    pub fn boundary(&self, m: usize) -> usize {
        self.boundaries[m]
    }

    /// Number of slots, `delta_M - 1`.
    pub fn horizon(&self) -> usize {
        self.boundaries[self.sizes.len()] - 1
    }

    pub fn data_slot_count(&self) -> usize {
        self.horizon() - self.frame_count()
    }

    /// Pilot slot of frame `m` (1-based), `delta_{m-1}`.
    pub fn pilot_slot(&self, m: usize) -> usize {
        self.boundaries[m - 1]
    }

    pub fn pilot_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundaries[..self.sizes.len()].iter().copied()
    }

    pub fn data_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.horizon()).filter(move |&t| self.slot_kind(t) == Some(SlotKind::Data))
    }

    /// Owning frame (1-based) of slot `t`, `None` outside the horizon.
    pub fn frame_of(&self, t: usize) -> Option<usize> {
        if t == 0 || t > self.horizon() {
            return None;
        }
        // boundaries are sorted; find the last delta_{m-1} <= t
        Some(self.boundaries.partition_point(|&d| d <= t))
    }

    pub fn slot_kind(&self, t: usize) -> Option<SlotKind> {
        let m = self.frame_of(t)?;
        Some(if self.pilot_slot(m) == t { SlotKind::Pilot } else { SlotKind::Data })
    }
}

impl fmt::Display for FrameLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, q) in self.sizes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        f.write_str("]")
    }
}

/// Convenience wrapper over [`FrameLayout::new`].
pub fn build_layout(q: &[usize]) -> Result<FrameLayout> {
    FrameLayout::new(q)
}

/// Pilot/data power split of one user for one layout.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PowerBudget {
    pub pilot_max: f64,
    pub data_max: f64,
    pub total: f64,
    /// Power of each pilot slot, `Pp_max / M`.
    pub pilot_per_slot: f64,
    /// Power of each data slot, `Pd_max / (delta_M - 1 - M)`.
    pub data_per_slot: f64,
}

impl PowerBudget {
    /// No power left for data.
    pub fn is_degenerate(&self) -> bool {
        self.data_per_slot == 0.0
    }
}

/// Split the pilot and data budgets over the slots of `layout`; the total
/// budget defaults to `Pp_max + Pd_max`.
pub fn split_powers(layout: &FrameLayout, pilot_max: f64, data_max: f64, total: Option<f64>) -> Result<PowerBudget> {
    if !(pilot_max >= 0.0 && data_max >= 0.0 && pilot_max.is_finite() && data_max.is_finite()) {
        return Err(Error::invalid_arg(format!(
            "power maxima must be finite and non-negative, got ({pilot_max}, {data_max})"
        )));
    }
    let total = total.unwrap_or(pilot_max + data_max);
    if pilot_max + data_max > total + 1e-12 {
        return Err(Error::invalid_arg(format!(
            "pilot + data power {} exceeds the budget {total}",
            pilot_max + data_max
        )));
    }
    let data_slots = layout.data_slot_count();
    if data_slots == 0 {
        return Err(Error::layout(format!("layout {layout} has no data slots")));
    }
    Ok(PowerBudget {
        pilot_max,
        data_max,
        total,
        pilot_per_slot: pilot_max / layout.frame_count() as f64,
        data_per_slot: data_max / data_slots as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn single_frame() {
        let l = build_layout(&[12]).unwrap();
        assert_eq!(l.pilot_slots().collect::<Vec<_>>(), vec![1]);
        assert_eq!(l.data_slots().collect::<Vec<_>>(), (2..=12).collect::<Vec<_>>());
        assert_eq!(l.horizon(), 12);
    }

    #[test]
    fn four_frames() {
        let l = build_layout(&[3, 3, 3, 2]).unwrap();
        assert_eq!(l.pilot_slots().collect::<Vec<_>>(), vec![1, 4, 7, 10]);
        assert_eq!(l.data_slot_count(), 7);
        assert_eq!(l.horizon(), 11);
        assert_eq!(l.frame_of(9), Some(3));
        assert_eq!(l.frame_of(10), Some(4));
        assert_eq!(l.frame_of(12), None);
        assert_eq!(l.to_string(), "[3,3,3,2]");
    }

    #[test]
    fn minimal_and_invalid() {
        let l = build_layout(&[2]).unwrap();
        assert_eq!(l.slot_kind(1), Some(SlotKind::Pilot));
        assert_eq!(l.slot_kind(2), Some(SlotKind::Data));
        assert!(matches!(build_layout(&[]), Err(Error::InvalidLayout(_))));
        assert!(matches!(build_layout(&[3, 1]), Err(Error::InvalidLayout(_))));
    }

    #[test]
    fn power_splits() {
        let b = split_powers(&build_layout(&[12]).unwrap(), 1.0, 1.0, None).unwrap();
        assert_eq!((b.pilot_per_slot, b.data_per_slot), (1.0, 1.0 / 11.0));
        let b = split_powers(&build_layout(&[3, 3, 3, 2]).unwrap(), 0.1, 0.1, None).unwrap();
        assert!((b.pilot_per_slot - 0.025).abs() < 1e-15 && (b.data_per_slot - 0.1 / 7.0).abs() < 1e-15);
        let b = split_powers(&build_layout(&[6, 6]).unwrap(), 2.0, 0.0, None).unwrap();
        assert!(b.is_degenerate());
        assert!(split_powers(&build_layout(&[6]).unwrap(), 1.0, 1.0, Some(1.5)).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_powers(q in proptest::collection::vec(2usize..9, 1..6), pp in 0.0f64..5.0, pd in 0.0f64..5.0) {
            let l = build_layout(&q).unwrap();
            prop_assert_eq!(l.horizon(), q.iter().sum::<usize>());
            prop_assert_eq!(l.pilot_slots().count(), q.len());
            let pilots = l.pilot_slots().count();
            let data = l.data_slots().count();
            prop_assert_eq!(pilots + data, l.horizon());
            for t in 1..=l.horizon() {
                let m = l.frame_of(t).unwrap();
                prop_assert!(l.boundary(m - 1) <= t && t < l.boundary(m));
            }
            let b = split_powers(&l, pp, pd, None).unwrap();
            prop_assert!((b.pilot_per_slot * q.len() as f64 - pp).abs() <= 1e-12);
            prop_assert!((b.data_per_slot * data as f64 - pd).abs() <= 1e-12);
        }
    }
}
