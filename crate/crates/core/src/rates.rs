//! Closed-form rates (bits per real dimension, base-2 logs) and the planner
//! that maps SNRs onto integer nesting factors.

use serde::{Deserialize, Serialize};

use crate::channel::Model;
use crate::error::{Error, Result};

fn check_snr(s1: f64, s2: f64) -> Result<()> {
    for (name, s) in [("S1", s1), ("S2", s2)] {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Input(format!("{name} must be a non-negative finite SNR, got {s}")));
        }
    }
    Ok(())
}

fn half_log2(x: f64) -> f64 {
    0.5 * x.log2()
}

/// Two-hop lattice DF rate `[½·log2((S1·S2 + S1 + S2 + 1)/(S1 + S2 + 2))]⁺`.
pub fn achievable_rate(s1: f64, s2: f64) -> Result<f64> {
    check_snr(s1, s2)?;
    Ok(half_log2((s1 * s2 + s1 + s2 + 1.0) / (s1 + s2 + 2.0)).max(0.0))
}

/// The same rate written as `[½·log2(1 / (1/(1+S1) + 1/(1+S2)))]⁺`.
pub fn achievable_rate_harmonic(s1: f64, s2: f64) -> Result<f64> {
    check_snr(s1, s2)?;
    Ok(half_log2(1.0 / (1.0 / (1.0 + s1) + 1.0 / (1.0 + s2))).max(0.0))
}

/// Interference-free two-hop capacity `½·log2(1 + min(S1, S2))`.
pub fn clean_capacity(s1: f64, s2: f64) -> Result<f64> {
    check_snr(s1, s2)?;
    Ok(half_log2(1.0 + s1.min(s2)))
}

pub fn gap(s1: f64, s2: f64) -> Result<f64> {
    Ok(clean_capacity(s1, s2)? - achievable_rate(s1, s2)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub s1: f64,
    pub s2: f64,
    pub r_thm: f64,
    pub r_clean: f64,
    pub gap: f64,
    /// Smallest admissible σ²(Λq) for Model 1 (index forwarding over hop 2).
    pub model1_sigma2q_floor: f64,
    /// Smallest admissible σ²(Λq) for Model 2 (relay decoding over hop 1).
    pub model2_sigma2q_floor: f64,
    /// Model 2 relay rate limit `½·log2(1 + S1)`.
    pub model2_relay_bound: f64,
}

pub fn rate_report(s1: f64, s2: f64) -> Result<RateReport> {
    Ok(RateReport {
        s1,
        s2,
        r_thm: achievable_rate(s1, s2)?,
        r_clean: clean_capacity(s1, s2)?,
        gap: gap(s1, s2)?,
        model1_sigma2q_floor: 1.0 / (1.0 + s2),
        model2_sigma2q_floor: 1.0 / (1.0 + s1),
        model2_relay_bound: half_log2(1.0 + s1),
    })
}

/// One evaluated constraint: `value < bound` must hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub value: f64,
    pub bound: f64,
}

impl Constraint {
    pub fn slack(&self) -> f64 {
        self.bound - self.value
    }

    pub fn satisfied(&self) -> bool {
        self.value < self.bound
    }
}

/// Every constraint the scheme imposes on `(k1, k2)` at unit power, with
/// rate constraints backed off by `margin` bits/dim.
pub fn constraints(model: Model, s1: f64, s2: f64, margin: f64, k1: u32, k2: u32) -> Result<Vec<Constraint>> {
    check_snr(s1, s2)?;
    let r = (k1 as f64).log2();
    let kq = k1 as f64 * k2 as f64;
    let rq = kq.log2();
    let sigma2q = 1.0 / (kq * kq);
    Ok(match model {
        Model::One => vec![
            Constraint {
                name: "relay_list_rate".into(),
                value: r,
                bound: half_log2(1.0 / (1.0 / (1.0 + s1) + sigma2q)) - margin,
            },
            // σ²(Λq) > 1/(1+S2), written as value < bound
            Constraint { name: "quant_moment_floor".into(), value: 1.0 / (1.0 + s2), bound: sigma2q },
            Constraint { name: "index_forwarding_rate".into(), value: rq, bound: half_log2(1.0 + s2) - margin },
        ],
        Model::Two => vec![
            Constraint { name: "relay_message_rate".into(), value: r, bound: half_log2(1.0 + s1) - margin },
            Constraint { name: "relay_quant_rate".into(), value: rq, bound: half_log2(1.0 + s1) - margin },
            Constraint { name: "quant_moment_floor".into(), value: 1.0 / (1.0 + s1), bound: sigma2q },
            Constraint {
                name: "destination_rate".into(),
                value: r,
                bound: half_log2(1.0 / (1.0 / (1.0 + s2) + sigma2q)) - margin,
            },
        ],
    })
}

pub fn is_feasible(model: Model, s1: f64, s2: f64, margin: f64, k1: u32, k2: u32) -> Result<bool> {
    Ok(constraints(model, s1, s2, margin, k1, k2)?.iter().all(Constraint::satisfied))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedConfig {
    pub model: Model,
    pub n: usize,
    pub k1: u32,
    pub k2: u32,
    pub rate: f64,
    pub quant_rate: f64,
    pub sigma2q: f64,
    pub margin: f64,
    pub constraints: Vec<Constraint>,
}

/// Largest `k1` (then smallest `k2`) meeting every constraint with the given
/// back-off, or `None` when even `k1 = 2` is infeasible.
pub fn plan_parameters(model: Model, s1: f64, s2: f64, margin: f64, n: usize) -> Result<Option<PlannedConfig>> {
    check_snr(s1, s2)?;
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::Input(format!("margin must be non-negative, got {margin}")));
    }
    if n == 0 {
        return Err(Error::Input("dimension must be positive".into()));
    }
    // Rq < ½log2(1+S) − margin bounds k1·k2 for the link that carries Λq
    let s_quant = match model {
        Model::One => s2,
        Model::Two => s1,
    };
    // message rate is below ½log2(1+S1) (Model 1) or ½log2(1+S2) (Model 2)
    let s_msg = match model {
        Model::One => s1,
        Model::Two => s2,
    };
    let kq_max = ((1.0 + s_quant).sqrt() * (-margin).exp2()).floor().min(u32::MAX as f64) as u64;
    let k1_max = ((1.0 + s_msg).sqrt() * (-margin).exp2()).floor().min(kq_max as f64) as u64;

    for k1 in (2..=k1_max).rev() {
        for k2 in 1..=(kq_max / k1) {
            let (k1, k2) = (k1 as u32, k2 as u32);
            let cs = constraints(model, s1, s2, margin, k1, k2)?;
            if cs.iter().all(Constraint::satisfied) {
                let kq = k1 as f64 * k2 as f64;
                return Ok(Some(PlannedConfig {
                    model,
                    n,
                    k1,
                    k2,
                    rate: (k1 as f64).log2(),
                    quant_rate: kq.log2(),
                    sigma2q: 1.0 / (kq * kq),
                    margin,
                    constraints: cs,
                }));
            }
        }
    }
    Ok(None)
}
