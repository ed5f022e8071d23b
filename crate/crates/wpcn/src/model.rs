//! Domain model shared by every solver and oracle: per-user channels, problem
//! instances, time allocations, and evaluation of the physical quantities
//! (harvested energy, transmit power, rate, throughput, demand slack).
//!
//! Conventions:
//! - Rates and demands are in nats (natural log). The CLI offers a bits
//!   toggle on output only.
//! - A block is the normalized unit `T = 1` for throughput problems; time
//!   minimization uses absolute time with the same types.
//! - Slot 0 is the initial charging slot; user `i` transmits in slot `i` and
//!   harvests during slots `0..i`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Finite and strictly positive; rejects NaN.
pub(crate) fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Finite and nonnegative; rejects NaN.
pub(crate) fn nonnegative_finite(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

// ---------------------------------------------------------------------------
// Channel and instance types
// ---------------------------------------------------------------------------

/// Physical parameters of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserChannel {
    /// Downlink (energy) channel power gain, > 0.
    pub downlink_gain: f64,
    /// Uplink (data) channel power gain, > 0.
    pub uplink_gain: f64,
    /// Energy harvesting efficiency, in (0, 1].
    pub efficiency: f64,
    /// Minimum data demand in nats, >= 0. Time-minimization solvers require
    /// strictly positive demands; a zero-demand user should be dropped from
    /// the instance instead.
    pub demand: f64,
}

impl UserChannel {
    pub fn new(downlink_gain: f64, uplink_gain: f64, efficiency: f64, demand: f64) -> Result<Self> {
        let ch = UserChannel {
            downlink_gain,
            uplink_gain,
            efficiency,
            demand,
        };
        ch.validate()?;
        Ok(ch)
    }

    fn validate(&self) -> Result<()> {
        if !positive_finite(self.downlink_gain) {
            return Err(Error::invalid_instance(format!(
                "downlink gain must be positive and finite, got {}",
                self.downlink_gain
            )));
        }
        if !positive_finite(self.uplink_gain) {
            return Err(Error::invalid_instance(format!(
                "uplink gain must be positive and finite, got {}",
                self.uplink_gain
            )));
        }
        if !(positive_finite(self.efficiency) && self.efficiency <= 1.0) {
            return Err(Error::invalid_instance(format!(
                "efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        if !nonnegative_finite(self.demand) {
            return Err(Error::invalid_instance(format!(
                "demand must be nonnegative and finite, got {}",
                self.demand
            )));
        }
        Ok(())
    }
}

/// Scheduling order applied to the user list before solving. The list order
/// is the TDMA transmission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulingPolicy {
    /// Keep the instance order as provided.
    AsGiven,
    /// Lowest effective SNR transmits first.
    IncreasingSnr,
    /// Highest effective SNR transmits first.
    DecreasingSnr,
}

impl fmt::Display for SchedulingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchedulingPolicy::AsGiven => "as-given",
            SchedulingPolicy::IncreasingSnr => "increasing-snr",
            SchedulingPolicy::DecreasingSnr => "decreasing-snr",
        };
        f.write_str(s)
    }
}

impl FromStr for SchedulingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-given" => Ok(SchedulingPolicy::AsGiven),
            "increasing-snr" => Ok(SchedulingPolicy::IncreasingSnr),
            "decreasing-snr" => Ok(SchedulingPolicy::DecreasingSnr),
            other => Err(Error::config(format!(
                "unknown scheduling policy '{other}'"
            ))),
        }
    }
}

/// A solver input: ordered users plus access-point power and noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    users: Vec<UserChannel>,
    hap_power: f64,
    noise_power: f64,
}

impl Instance {
    /// Builds a validated instance. `hap_power` and `noise_power` are linear
    /// watts; the CLI converts from dB before calling in.
    pub fn new(users: Vec<UserChannel>, hap_power: f64, noise_power: f64) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::invalid_instance("at least one user is required"));
        }
        if !positive_finite(hap_power) {
            return Err(Error::invalid_instance(format!(
                "HAP power must be positive and finite, got {hap_power}"
            )));
        }
        if !positive_finite(noise_power) {
            return Err(Error::invalid_instance(format!(
                "noise power must be positive and finite, got {noise_power}"
            )));
        }
        for user in &users {
            user.validate()?;
        }
        let inst = Instance {
            users,
            hap_power,
            noise_power,
        };
        for (i, snr) in inst.effective_snr().into_iter().enumerate() {
            if !positive_finite(snr) {
                return Err(Error::invalid_instance(format!(
                    "effective SNR of user {} is {snr}, must be positive and finite",
                    i + 1
                )));
            }
        }
        Ok(inst)
    }

    /// Unit-gain users whose effective SNRs equal `gammas` exactly
    /// (g = γ, h = η = P_H = σ² = 1), each with unit demand.
    pub fn from_gammas(gammas: &[f64]) -> Result<Self> {
        Self::from_gammas_demands(gammas, &vec![1.0; gammas.len()])
    }

    /// Like [`Instance::from_gammas`] with explicit per-user demands.
    pub fn from_gammas_demands(gammas: &[f64], demands: &[f64]) -> Result<Self> {
        if gammas.len() != demands.len() {
            return Err(Error::invalid_instance(format!(
                "{} gammas but {} demands",
                gammas.len(),
                demands.len()
            )));
        }
        let users = gammas
            .iter()
            .zip(demands)
            .map(|(&g, &d)| UserChannel::new(g, 1.0, 1.0, d))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(users, 1.0, 1.0)
    }

    pub fn users(&self) -> &[UserChannel] {
        &self.users
    }

    /// Number of transmitting users K.
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn hap_power(&self) -> f64 {
        self.hap_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// Same channels under a different transmit power.
    pub fn with_hap_power(&self, hap_power: f64) -> Result<Self> {
        Instance::new(self.users.clone(), hap_power, self.noise_power)
    }

    /// Effective SNR `γ_i = h_i·η_i·g_i·P_H / σ²` per user, in list order.
    pub fn effective_snr(&self) -> Vec<f64> {
        self.users
            .iter()
            .map(|u| {
                u.uplink_gain * u.efficiency * u.downlink_gain * self.hap_power / self.noise_power
            })
            .collect()
    }

    /// Demands in list order.
    pub fn demands(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.demand).collect()
    }

    /// Returns an instance whose users are permuted by effective SNR under
    /// the given policy. Sorting is stable, so ties keep the original order.
    pub fn ordered_by(&self, policy: SchedulingPolicy) -> Instance {
        let snr = self.effective_snr();
        let mut idx: Vec<usize> = (0..self.users.len()).collect();
        match policy {
            SchedulingPolicy::AsGiven => {}
            SchedulingPolicy::IncreasingSnr => {
                idx.sort_by(|&a, &b| snr[a].partial_cmp(&snr[b]).expect("finite SNRs"));
            }
            SchedulingPolicy::DecreasingSnr => {
                idx.sort_by(|&a, &b| snr[b].partial_cmp(&snr[a]).expect("finite SNRs"));
            }
        }
        Instance {
            users: idx.into_iter().map(|i| self.users[i]).collect(),
            hap_power: self.hap_power,
            noise_power: self.noise_power,
        }
    }
}

// ---------------------------------------------------------------------------
// Allocations and evaluation
// ---------------------------------------------------------------------------

/// A vector `[τ₀, τ₁, ..., τ_K]` of nonnegative slot durations. Slot 0 is
/// the initial charging slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAllocation {
    tau: Vec<f64>,
}

impl TimeAllocation {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::invalid_instance("allocation cannot be empty"));
        }
        for (i, &t) in tau.iter().enumerate() {
            if !nonnegative_finite(t) {
                return Err(Error::invalid_instance(format!(
                    "slot {i} duration {t} must be nonnegative and finite"
                )));
            }
        }
        Ok(TimeAllocation { tau })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Number of transmitting users (length minus the charging slot).
    pub fn num_users(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.tau.iter().sum()
    }

    /// Rescales every slot; optimal allocations scale linearly with the
    /// block length.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        TimeAllocation::new(self.tau.iter().map(|t| t * factor).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.tau
    }
}

/// Physical quantities of an (instance, allocation) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Energy harvested by each user before its slot, joules.
    pub per_user_energy: Vec<f64>,
    /// Average transmit power of each user (0 when its slot is empty).
    pub per_user_power: Vec<f64>,
    /// Throughput `τ_i·R_i` of each user in nats.
    pub per_user_throughput: Vec<f64>,
    /// Sum of the per-user throughputs, nats.
    pub total_throughput: f64,
    /// `τ_i·R_i - D_i` per user; negative entries are demand violations.
    pub constraint_slack: Vec<f64>,
}

/// Throughput `τ·ln(1 + γ·S/τ)` of one user, extended by continuity with 0
/// at `τ = 0`. Stable for extreme ratios `γS/τ`.
pub fn slot_throughput(gamma: f64, harvest_time: f64, tau: f64) -> f64 {
    if tau <= 0.0 || harvest_time <= 0.0 {
        return 0.0;
    }
    let ratio = gamma * harvest_time / tau;
    if ratio.is_finite() && ratio < 1e15 {
        tau * ratio.ln_1p()
    } else {
        // ln(1 + γS/τ) = ln(τ + γS) - ln(τ) avoids overflow for tiny τ.
        tau * ((tau + gamma * harvest_time).ln() - tau.ln())
    }
}

/// Evaluates harvested energy, average transmit powers, per-user
/// throughputs (nats) and demand slacks for an allocation.
pub fn evaluate(inst: &Instance, alloc: &TimeAllocation) -> Result<Evaluation> {
    let k = inst.num_users();
    if alloc.tau().len() != k + 1 {
        return Err(Error::LengthMismatch {
            expected: k + 1,
            got: alloc.tau().len(),
        });
    }
    let tau = alloc.tau();
    let snr = inst.effective_snr();

    let mut per_user_energy = Vec::with_capacity(k);
    let mut per_user_power = Vec::with_capacity(k);
    let mut per_user_throughput = Vec::with_capacity(k);
    let mut constraint_slack = Vec::with_capacity(k);

    let mut harvest_time = 0.0; // Σ_{j<i} τ_j
    for (i, user) in inst.users().iter().enumerate() {
        harvest_time += tau[i];
        let slot = tau[i + 1];
        let energy = user.efficiency * user.downlink_gain * inst.hap_power() * harvest_time;
        per_user_energy.push(energy);
        per_user_power.push(if slot > 0.0 { energy / slot } else { 0.0 });
        let thr = slot_throughput(snr[i], harvest_time, slot);
        per_user_throughput.push(thr);
        constraint_slack.push(thr - user.demand);
    }

    let total_throughput = per_user_throughput.iter().sum();
    Ok(Evaluation {
        per_user_energy,
        per_user_power,
        per_user_throughput,
        total_throughput,
        constraint_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn single_user(gamma: f64) -> Instance {
        Instance::from_gammas(&[gamma]).unwrap()
    }

    #[test]
    fn effective_snr_products() {
        let inst = Instance::new(
            vec![UserChannel::new(1.0, 1.0, 1.0, 0.0).unwrap()],
            10.0,
            1.0,
        )
        .unwrap();
        assert_eq!(inst.effective_snr(), vec![10.0]);

        let inst = Instance::new(
            vec![UserChannel::new(1.0, 2.0, 0.5, 0.0).unwrap()],
            4.0,
            2.0,
        )
        .unwrap();
        assert_eq!(inst.effective_snr(), vec![2.0]);

        let inst = Instance::new(
            vec![UserChannel::new(1.0, 1.0, 1.0, 0.0).unwrap()],
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(inst.effective_snr(), vec![1.0]);
    }

    #[test]
    fn evaluate_anchors() {
        let inst = single_user(1.0);
        let eval = evaluate(&inst, &TimeAllocation::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert!((eval.total_throughput - 0.5 * 2f64.ln()).abs() < 1e-15);

        // γ=1 objective reduces to -τ₁ ln τ₁, maximized at τ₁ = 1/e.
        let eval = evaluate(
            &inst,
            &TimeAllocation::new(vec![1.0 - 1.0 / E, 1.0 / E]).unwrap(),
        )
        .unwrap();
        assert!((eval.total_throughput - 1.0 / E).abs() < 1e-14);

        let eval = evaluate(&inst, &TimeAllocation::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(eval.total_throughput, 0.0);
        assert_eq!(eval.per_user_power[0], 0.0);
        assert!(eval.total_throughput.is_finite());
    }

    #[test]
    fn evaluate_rejects_length_mismatch() {
        let inst = single_user(1.0);
        let alloc = TimeAllocation::new(vec![0.3, 0.3, 0.4]).unwrap();
        assert!(matches!(
            evaluate(&inst, &alloc),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn zero_slot_is_exactly_zero_and_finite() {
        let inst = Instance::from_gammas(&[3.0, 7.0]).unwrap();
        let alloc = TimeAllocation::new(vec![0.6, 0.0, 0.4]).unwrap();
        let eval = evaluate(&inst, &alloc).unwrap();
        assert_eq!(eval.per_user_throughput[0], 0.0);
        assert!(eval.per_user_throughput[1] > 0.0);
        assert!(eval.total_throughput.is_finite());
    }

    #[test]
    fn throughput_invariant_under_gain_rebalancing() {
        // Only the product h·g enters γ, so (g, h) -> (g/c, h·c) is neutral.
        let rng = |i: u64| crate::sim::stream_uniform(42, i);
        for trial in 0..50u64 {
            let c = 0.1 + 5.0 * rng(trial);
            let g = 0.2 + rng(100 + trial);
            let h = 0.3 + rng(200 + trial);
            let base =
                Instance::new(vec![UserChannel::new(g, h, 0.8, 0.0).unwrap()], 3.0, 0.7).unwrap();
            let rebalanced = Instance::new(
                vec![UserChannel::new(g / c, h * c, 0.8, 0.0).unwrap()],
                3.0,
                0.7,
            )
            .unwrap();
            let alloc = TimeAllocation::new(vec![0.4, 0.6]).unwrap();
            let a = evaluate(&base, &alloc).unwrap().total_throughput;
            let b = evaluate(&rebalanced, &alloc).unwrap().total_throughput;
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn throughput_nondecreasing_in_charging_slot() {
        // Every user benefits from a longer charging slot, not just the sum.
        let inst = Instance::from_gammas(&[2.0, 0.5, 4.0]).unwrap();
        let mut prev = vec![-1.0; 3];
        for step in 0..50 {
            let tau0 = step as f64 * 0.02;
            let alloc = TimeAllocation::new(vec![tau0, 0.2, 0.3, 0.1]).unwrap();
            let eval = evaluate(&inst, &alloc).unwrap();
            for (user, (&now, &before)) in eval.per_user_throughput.iter().zip(&prev).enumerate() {
                assert!(now >= before - 1e-12, "user {} at tau0 {tau0}", user + 1);
            }
            prev = eval.per_user_throughput;
        }
    }

    #[test]
    fn ordering_policies() {
        let inst = Instance::from_gammas(&[3.0, 1.0, 2.0]).unwrap();
        let inc = inst.ordered_by(SchedulingPolicy::IncreasingSnr);
        assert_eq!(inc.effective_snr(), vec![1.0, 2.0, 3.0]);
        let dec = inst.ordered_by(SchedulingPolicy::DecreasingSnr);
        assert_eq!(dec.effective_snr(), vec![3.0, 2.0, 1.0]);
        let single = single_user(5.0);
        assert_eq!(
            single.ordered_by(SchedulingPolicy::IncreasingSnr),
            single.ordered_by(SchedulingPolicy::DecreasingSnr)
        );
        assert_eq!(inst.ordered_by(SchedulingPolicy::AsGiven), inst);
    }

    #[test]
    fn ordering_ties_are_stable() {
        let users = vec![
            UserChannel::new(2.0, 1.0, 1.0, 0.5).unwrap(),
            UserChannel::new(1.0, 2.0, 1.0, 0.7).unwrap(),
        ];
        let inst = Instance::new(users.clone(), 1.0, 1.0).unwrap();
        let ordered = inst.ordered_by(SchedulingPolicy::IncreasingSnr);
        assert_eq!(ordered.users()[0].demand, 0.5);
        assert_eq!(ordered.users()[1].demand, 0.7);
    }

    #[test]
    fn invalid_instances_are_rejected() {
        assert!(UserChannel::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(UserChannel::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(UserChannel::new(1.0, 1.0, 1.5, 0.0).is_err());
        assert!(UserChannel::new(1.0, 1.0, 1.0, -0.1).is_err());
        assert!(Instance::new(vec![], 1.0, 1.0).is_err());
        assert!(Instance::from_gammas(&[1.0])
            .unwrap()
            .with_hap_power(0.0)
            .is_err());
        assert!(TimeAllocation::new(vec![0.5, -0.1]).is_err());
    }
}
