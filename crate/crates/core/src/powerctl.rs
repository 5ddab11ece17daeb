//! Uplink transmit-power rules.
//!
//! Every user transmits `P_t = min(P_r, P_max)` with the open-loop
//! requirement `P_r = L * NI * gamma0`. Macro users keep `P_max` at the
//! device limit. Femto users tighten it so their interference at the
//! macro BS `k*` with the smallest estimated loss stays below a threshold:
//!
//! - open loop: `I_th = alpha * N0WF / J_k*`, `P_max = I_th * L_min`;
//! - closed loop: the threshold follows the NI level broadcast by `k*`
//!   relative to its femto-silent baseline `NI_k*(0)`:
//!   `I_th(n) = beta * NI(0)` while `NI(n) >= NI(0)`, otherwise
//!   `I_th(0) + beta * (NI(0) - NI(n))`.
//!
//! Both caps are clipped at the device limit. All arithmetic is linear.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::units::PowerLinear;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcParams {
    /// Interference-to-noise ratio allowed at a macro BS.
    pub alpha: f64,
    /// `N0 W F` in mW.
    pub noise_floor: PowerLinear,
    /// Device limit `P̄max` in mW.
    pub pmax_hard: PowerLinear,
}

impl PcParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        PcParams {
            alpha: cfg.alpha,
            noise_floor: PowerLinear(cfg.noise_mw()),
            pmax_hard: PowerLinear(cfg.pmax_mw()),
        }
    }
}

impl Default for PcParams {
    fn default() -> Self {
        PcParams::from_config(&ScenarioConfig::default())
    }
}

/// `P_r = L * NI * gamma0`.
pub fn required_power(loss: PowerLinear, ni: PowerLinear, gamma0: f64) -> PowerLinear {
    PowerLinear(loss.0 * ni.0 * gamma0)
}

/// `min(P_r, P_max)`.
pub fn cap_power(required: PowerLinear, pmax: PowerLinear) -> PowerLinear {
    required.min(pmax)
}

/// Loss estimates towards the macro BSs of a neighbor list.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEstimate {
    /// Macro BS index of each list entry.
    pub bs: Vec<usize>,
    pub eirp: Vec<PowerLinear>,
    pub received: Vec<PowerLinear>,
    /// `E_k / R_k`.
    pub losses: Vec<PowerLinear>,
    /// Position in the list of the minimum loss (lowest position on ties).
    pub k_star: usize,
    pub l_min: PowerLinear,
}

impl NeighborEstimate {
    /// Macro BS index of `k*`.
    pub fn k_star_bs(&self) -> usize {
        self.bs[self.k_star]
    }
}

/// `L_k = E_k / R_k` for every entry, then `k* = argmin L_k`.
pub fn estimate_neighbors(
    bs: &[usize],
    eirp: &[PowerLinear],
    received: &[PowerLinear],
) -> Result<NeighborEstimate> {
    if eirp.is_empty() || eirp.len() != received.len() || bs.len() != eirp.len() {
        return Err(Error::NeighborList);
    }
    let losses: Vec<PowerLinear> = eirp
        .iter()
        .zip(received)
        .map(|(e, r)| PowerLinear(e.0 / r.0))
        .collect();
    let mut k_star = 0;
    for (k, l) in losses.iter().enumerate().skip(1) {
        if l.0 < losses[k_star].0 {
            k_star = k;
        }
    }
    Ok(NeighborEstimate {
        bs: bs.to_vec(),
        eirp: eirp.to_vec(),
        received: received.to_vec(),
        l_min: losses[k_star],
        losses,
        k_star,
    })
}

fn at_least_one(j: u32) -> u32 {
    if j == 0 {
        log::trace!("J = 0 reported for a user's own k*; using J = 1");
        1
    } else {
        j
    }
}

/// `I_th = alpha * N0WF / J`; `J = 0` is treated as 1.
pub fn open_loop_threshold(params: &PcParams, j: u32) -> PowerLinear {
    PowerLinear(params.alpha * params.noise_floor.0 / at_least_one(j) as f64)
}

/// `min(I_th * L_min, P̄max)`.
pub fn open_loop_pmax(
    i_th: PowerLinear,
    l_min: PowerLinear,
    pmax_hard: PowerLinear,
) -> PowerLinear {
    PowerLinear(i_th.0 * l_min.0).min(pmax_hard)
}

/// Adaptive threshold at step `n`.
pub fn closed_loop_threshold(
    ni0: PowerLinear,
    ni_n: PowerLinear,
    ith0: PowerLinear,
    beta: f64,
    n: u64,
) -> PowerLinear {
    if n == 0 || ni_n.0 >= ni0.0 {
        PowerLinear(beta * ni0.0)
    } else {
        PowerLinear(ith0.0 + beta * (ni0.0 - ni_n.0))
    }
}

/// `min(I_th(n) * L_min, P̄max)`.
pub fn closed_loop_pmax(
    ith_n: PowerLinear,
    l_min: PowerLinear,
    pmax_hard: PowerLinear,
) -> PowerLinear {
    PowerLinear(ith_n.0 * l_min.0).min(pmax_hard)
}

/// `beta = alpha * N0WF / (J * NI(0))`, making `beta * NI(0)` equal to the
/// open-loop threshold.
pub fn calibrate_beta(params: &PcParams, j: u32, ni0: PowerLinear) -> f64 {
    params.alpha * params.noise_floor.0 / (at_least_one(j) as f64 * ni0.0)
}

/// `P_t / L_min`.
pub fn estimated_crosstier_interference(p_t: PowerLinear, l_min: PowerLinear) -> PowerLinear {
    PowerLinear(p_t.0 / l_min.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmaxMode {
    FixedCap,
    OpenLoop,
    ClosedLoop,
}

/// NI levels and `J` counts broadcast by the macro BSs.
#[derive(Debug, Clone, PartialEq)]
pub struct NiReport {
    pub step: u64,
    /// Per macro BS.
    pub ni: Vec<PowerLinear>,
    /// Per macro BS: femto users that reported it as their `k*`.
    pub j: Vec<u32>,
}

/// Maximum-power controller of one femto user.
#[derive(Debug, Clone, PartialEq)]
pub struct FemtoPowerState {
    pub mode: PmaxMode,
    pub neighbor: NeighborEstimate,
    pub j_kstar: u32,
    /// `NI_k(0)` of each neighbor-list entry.
    pub ni0: Vec<PowerLinear>,
    pub ith0: PowerLinear,
    /// Current threshold `I_th(n)` (equal to `ith0` in open loop).
    pub ith: PowerLinear,
    pub beta: f64,
    pub current_pmax: PowerLinear,
    pub step: u64,
}

impl FemtoPowerState {
    /// State at step 0: the user is not yet active and assumes `J = 1`.
    pub fn new(
        mode: PmaxMode,
        neighbor: NeighborEstimate,
        ni0: Vec<PowerLinear>,
        params: &PcParams,
    ) -> Self {
        assert_eq!(ni0.len(), neighbor.bs.len(), "one NI(0) per neighbor");
        let mut s = FemtoPowerState {
            mode,
            neighbor,
            j_kstar: 1,
            ni0,
            ith0: PowerLinear::ZERO,
            ith: PowerLinear::ZERO,
            beta: 0.0,
            current_pmax: params.pmax_hard,
            step: 0,
        };
        s.recompute(params, 1, None);
        s
    }

    pub fn ni0_kstar(&self) -> PowerLinear {
        self.ni0[self.neighbor.k_star]
    }

    /// One power-control update from the latest broadcast of `k*`:
    /// its `J` count and NI level. Returns the new `P_max`.
    pub fn update(&mut self, params: &PcParams, j: u32, ni_n: PowerLinear) -> PowerLinear {
        self.step += 1;
        self.recompute(params, j, Some(ni_n));
        self.current_pmax
    }

    /// Convenience wrapper reading `k*`'s entries from a broadcast.
    pub fn update_from_report(&mut self, params: &PcParams, report: &NiReport) -> PowerLinear {
        let k = self.neighbor.k_star_bs();
        self.update(params, report.j[k], report.ni[k])
    }

    fn recompute(&mut self, params: &PcParams, j: u32, ni_n: Option<PowerLinear>) {
        let j = at_least_one(j);
        self.j_kstar = j;
        let l_min = self.neighbor.l_min;
        match self.mode {
            PmaxMode::FixedCap => {
                self.ith0 = open_loop_threshold(params, j);
                self.ith = self.ith0;
                self.current_pmax = params.pmax_hard;
            }
            PmaxMode::OpenLoop => {
                self.ith0 = open_loop_threshold(params, j);
                self.ith = self.ith0;
                self.current_pmax = open_loop_pmax(self.ith0, l_min, params.pmax_hard);
            }
            PmaxMode::ClosedLoop => {
                let ni0 = self.ni0_kstar();
                self.beta = calibrate_beta(params, j, ni0);
                self.ith0 = PowerLinear(self.beta * ni0.0);
                self.ith = closed_loop_threshold(
                    ni0,
                    ni_n.unwrap_or(ni0),
                    self.ith0,
                    self.beta,
                    self.step,
                );
                self.current_pmax = closed_loop_pmax(self.ith, l_min, params.pmax_hard);
            }
        }
    }
}
