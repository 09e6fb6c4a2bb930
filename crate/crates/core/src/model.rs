//! Per-slot link statistics of a layout: powers, estimation kernels and
//! conditional moments of every user at every data slot.
//!
//! Everything here is deterministic; both the deterministic equivalent and
//! the Monte Carlo chain start from a [`LinkModel`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::corrmodel::{ar_transition, CovarianceSet};
use crate::estimator::{build_kernel, estimate_covariance, EstimationKernel, PilotConfig};
use crate::layout::{split_powers, FrameLayout, PowerBudget};
use crate::receiver::{conditional_moments_with, ConditionalMoments};
use crate::scenario::{AnchorRule, Scenario};
use crate::{CMat, Error, Result};

/// Transmission parameters of one user for one layout.
#[derive(Clone, Debug)]
pub struct UserLink {
    pub budget: PowerBudget,
    pub pilot: PilotConfig,
    /// `alpha^2 P_d`.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct SlotUserModel {
    pub kernel: EstimationKernel,
    pub anchor_kernel: EstimationKernel,
    pub moments: ConditionalMoments,
}

#[derive(Clone, Debug)]
pub struct DataSlotModel {
    pub slot: usize,
    pub anchor: usize,
    pub users: Vec<SlotUserModel>,
}

#[derive(Clone, Debug)]
pub struct LinkModel {
    pub layout: FrameLayout,
    /// `sigma_d^2`.
    pub noise: f64,
    pub users: Vec<UserLink>,
    pub data_slots: Vec<DataSlotModel>,
}

/// Anchor slot of data slot `i`.
pub fn anchor_slot(layout: &FrameLayout, i: usize, rule: AnchorRule) -> Result<usize> {
    let m = layout
        .frame_of(i)
        .ok_or_else(|| Error::misuse(format!("slot {i} outside layout {layout}")))?;
    let pilot = layout.pilot_slot(m);
    if pilot == i {
        return Err(Error::misuse(format!("slot {i} is a pilot slot")));
    }
    Ok(match rule {
        AnchorRule::FramePilot => pilot,
        AnchorRule::PreviousSlot => i - 1,
    })
}

/// Power-independent parts of a link model: the anchor-to-slot transitions
/// of every user and the full per-slot models of the interferers.
#[derive(Clone, Debug)]
pub struct LinkCache {
    layout: FrameLayout,
    /// `[data slot][user]`: `A(i_p -> i)`.
    transitions: Vec<Vec<CMat>>,
    /// `[data slot][interferer]`.
    interferers: Vec<Vec<SlotUserModel>>,
}

impl LinkCache {
    pub fn new(scenario: &Scenario, stats: &[CovarianceSet], layout: &FrameLayout) -> Result<Self> {
        check_stats(scenario, stats)?;
        let links = user_links(scenario, layout, None)?;
        let slots = slot_anchors(scenario, layout)?;
        let mut transitions = vec![Vec::with_capacity(stats.len()); slots.len()];
        for cov in stats {
            // one-step transitions, computed once per slot and chained
            let mut steps: Vec<Option<CMat>> = vec![None; layout.horizon() + 1];
            for (s, &(i, anchor)) in slots.iter().enumerate() {
                let mut a: Option<CMat> = None;
                for t in anchor..i {
                    if steps[t].is_none() {
                        steps[t] = Some(ar_transition(t, cov)?);
                    }
                    let step = steps[t].as_ref().expect("filled above");
                    a = Some(match a {
                        None => step.clone(),
                        Some(prev) => step * prev,
                    });
                }
                transitions[s].push(a.ok_or_else(|| Error::misuse(format!("anchor {anchor} must precede slot {i}")))?);
            }
        }
        let mut interferers = Vec::with_capacity(slots.len());
        for (s, &(i, anchor)) in slots.iter().enumerate() {
            let mut per_user = Vec::with_capacity(stats.len().saturating_sub(1));
            for k in 1..stats.len() {
                let mut anchors = AnchorKernels::default();
                per_user.push(slot_user_model(
                    scenario,
                    layout,
                    &stats[k],
                    &links[k],
                    i,
                    anchor,
                    &transitions[s][k],
                    &mut anchors,
                )?);
            }
            interferers.push(per_user);
        }
        Ok(LinkCache { layout: layout.clone(), transitions, interferers })
    }
}

/// Build the link model of `layout` with the tagged user's maxima replaced
/// by `tagged = [Pp_max, Pd_max]`.
pub fn build_link_model(
    scenario: &Scenario,
    stats: &[CovarianceSet],
    layout: &FrameLayout,
    tagged: [f64; 2],
) -> Result<LinkModel> {
    let cache = LinkCache::new(scenario, stats, layout)?;
    build_link_model_cached(scenario, stats, &cache, tagged)
}

/// [`build_link_model`] reusing the power-independent parts in `cache`.
///
/// `scenario` may differ from the one the cache was built with only in the
/// tagged user's powers and the total power budget.
pub fn build_link_model_cached(
    scenario: &Scenario,
    stats: &[CovarianceSet],
    cache: &LinkCache,
    tagged: [f64; 2],
) -> Result<LinkModel> {
    check_stats(scenario, stats)?;
    let layout = &cache.layout;
    let noise = scenario.data_noise_variance(layout)?;
    let users = user_links(scenario, layout, Some(tagged))?;
    let slots = slot_anchors(scenario, layout)?;
    let mut anchors = AnchorKernels::default();
    let mut data_slots = Vec::with_capacity(slots.len());
    for (s, &(i, anchor)) in slots.iter().enumerate() {
        let mut per_user = Vec::with_capacity(stats.len());
        per_user.push(slot_user_model(
            scenario,
            layout,
            &stats[0],
            &users[0],
            i,
            anchor,
            &cache.transitions[s][0],
            &mut anchors,
        )?);
        per_user.extend(cache.interferers[s].iter().cloned());
        data_slots.push(DataSlotModel { slot: i, anchor, users: per_user });
    }
    Ok(LinkModel { layout: layout.clone(), noise, users, data_slots })
}

fn check_stats(scenario: &Scenario, stats: &[CovarianceSet]) -> Result<()> {
    if stats.len() != scenario.users.len() || stats.is_empty() {
        return Err(Error::misuse(format!(
            "{} covariance sets for {} users",
            stats.len(),
            scenario.users.len()
        )));
    }
    Ok(())
}

/// Per-user transmission parameters; `tagged` overrides the tagged user's maxima.
fn user_links(scenario: &Scenario, layout: &FrameLayout, tagged: Option<[f64; 2]>) -> Result<Vec<UserLink>> {
    let mut users = Vec::with_capacity(scenario.users.len());
    for (k, u) in scenario.users.iter().enumerate() {
        let (pp, pd) = match tagged {
            Some(t) if k == 0 => (t[0], t[1]),
            _ => (u.pilot_power, u.data_power),
        };
        let total = if k == 0 { Some(scenario.total_power()) } else { None };
        let budget = split_powers(layout, pp, pd, total)?;
        let alpha = u.stats.amplitude();
        let pilot = PilotConfig {
            amplitude: alpha,
            power: budget.pilot_per_slot,
            noise: scenario.pilot_noise_of(k),
            length: scenario.wave.pilot_length,
        };
        users.push(UserLink { budget, pilot, weight: alpha * alpha * budget.data_per_slot });
    }
    Ok(users)
}

/// `(slot, anchor)` for every data slot.
fn slot_anchors(scenario: &Scenario, layout: &FrameLayout) -> Result<Vec<(usize, usize)>> {
    layout
        .data_slots()
        .map(|i| Ok((i, anchor_slot(layout, i, scenario.options.anchor)?)))
        .collect()
}

/// Anchor kernels and their estimate covariances, shared by the data slots
/// of one user that use the same anchor.
#[derive(Default)]
struct AnchorKernels(Vec<(usize, EstimationKernel, CMat)>);

#[allow(clippy::too_many_arguments)]
fn slot_user_model(
    scenario: &Scenario,
    layout: &FrameLayout,
    cov: &CovarianceSet,
    link: &UserLink,
    i: usize,
    anchor: usize,
    transition: &CMat,
    anchors: &mut AnchorKernels,
) -> Result<SlotUserModel> {
    let rule = scenario.options.window;
    let m = layout.frame_of(i).expect("data slot inside layout");
    let kernel = build_kernel(layout, m, i, cov, link.pilot, rule)?;
    let pos = match anchors.0.iter().position(|(a, _, _)| *a == anchor) {
        Some(p) => p,
        None => {
            let frame = layout.frame_of(anchor).expect("anchor inside layout");
            let k = build_kernel(layout, frame, anchor, cov, link.pilot, rule)?;
            let c = estimate_covariance(&k);
            anchors.0.push((anchor, k, c));
            anchors.0.len() - 1
        }
    };
    let (_, anchor_kernel, c_anchor) = &anchors.0[pos];
    let moments = conditional_moments_with(transition, cov, i, anchor, &estimate_covariance(&kernel), c_anchor)?;
    Ok(SlotUserModel { kernel, anchor_kernel: anchor_kernel.clone(), moments })
}
