//! Propagation: static losses of the three link classes with correlated
//! shadowing and wall losses, plus per-link fast fading.

mod fading;
mod pathloss;
mod shadowing;

pub use fading::{doppler_hz, FadingProcess, JakesBank, LinkPhases, Phasors, OSCILLATORS};
pub use pathloss::{
    path_loss_indoor, path_loss_outdoor, path_loss_outdoor_to_indoor, LinkClass, StaticLoss,
    MIN_DISTANCE_M,
};
pub use shadowing::{sample_shadowing, sample_wall_losses, ShadowingModel, WallLossModel};

use crate::config::{ScenarioConfig, WallMode};
use crate::deployment::{BsKind, Topology, UserKind};
use crate::rng::{derive, stream, tag};
use crate::units::Decibel;

/// Static-loss generator of one drop.
///
/// A user's links are drawn from streams keyed by the user, in BS-index
/// order, so any row can be regenerated on demand and macro-BS entries do
/// not depend on the femtocell deployment. Walls are drawn once per
/// (user, building) pair; a femto user's own building comes first.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub seed: u64,
    pub carrier_mhz: f64,
    pub outdoor: ShadowingModel,
    pub indoor: ShadowingModel,
    pub walls: WallLossModel,
}

impl ChannelModel {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Self {
        let walls = match cfg.wall_mode {
            WallMode::Fixed => WallLossModel::Fixed {
                external_db: cfg.external_wall_db,
                internal_db: cfg.internal_wall_db,
            },
            WallMode::Sampled => WallLossModel::Sampled {
                external_mean_db: cfg.external_wall_mean_db,
                external_sd_db: cfg.external_wall_sd_db,
                internal_step_db: cfg.internal_wall_step_db,
                internal_probability: cfg.internal_wall_probability,
            },
        };
        ChannelModel {
            seed,
            carrier_mhz: cfg.carrier_mhz,
            outdoor: ShadowingModel {
                sigma_db: cfg.shadow_sigma_outdoor_db,
                rho: cfg.shadow_rho_outdoor,
            },
            indoor: ShadowingModel {
                sigma_db: cfg.shadow_sigma_indoor_db,
                rho: cfg.shadow_rho_indoor,
            },
            walls,
        }
    }

    /// Static losses from `user` to every BS of the topology.
    pub fn user_links(&self, topo: &Topology, user: usize) -> Vec<StaticLoss> {
        self.user_links_upto(topo, user, topo.n_bs())
    }

    /// Static losses from `user` to BSs `0..n_bs`; a prefix of [`Self::user_links`].
    pub fn user_links_upto(&self, topo: &Topology, user: usize, n_bs: usize) -> Vec<StaticLoss> {
        let key = topo.user_key(user);
        let pos = topo.user_position(user);
        let shadows = sample_shadowing(
            n_bs,
            &self.outdoor,
            &mut stream(self.seed, &[tag::SHADOW_OUTDOOR, key]),
        );
        let mut wall_rng = stream(self.seed, &[tag::WALLS, key]);
        let (own_building, own_walls, indoor_shadow) = match topo.user_kind(user) {
            UserKind::Macro => (None, (Decibel(0.0), Decibel(0.0)), Decibel(0.0)),
            UserKind::Femto { building } => {
                let walls = sample_wall_losses(&self.walls, &mut wall_rng);
                let s = sample_shadowing(
                    1,
                    &self.indoor,
                    &mut stream(self.seed, &[tag::SHADOW_INDOOR, key]),
                )[0];
                (Some(building), walls, s)
            }
        };
        let (own_le, own_li) = own_walls;

        (0..n_bs)
            .map(|bs| {
                let d = pos.distance(topo.bs_position(bs));
                let f = self.carrier_mhz;
                let s = shadows[bs];
                match (topo.bs_kind(bs), own_building) {
                    (BsKind::Macro, None) => {
                        StaticLoss::new(LinkClass::Outdoor, d, f, s, Decibel(0.0), Decibel(0.0))
                    }
                    (BsKind::Macro, Some(_)) => {
                        StaticLoss::new(LinkClass::OutdoorToIndoor, d, f, s, own_le, own_li)
                    }
                    (BsKind::Femto { building }, own) => {
                        let (le, li) = sample_wall_losses(&self.walls, &mut wall_rng);
                        match own {
                            None => StaticLoss::new(LinkClass::OutdoorToIndoor, d, f, s, le, li),
                            Some(h) if h == building => StaticLoss::new(
                                LinkClass::Indoor,
                                d,
                                f,
                                indoor_shadow,
                                Decibel(0.0),
                                own_li,
                            ),
                            Some(_) => StaticLoss::new(
                                LinkClass::OutdoorToIndoor,
                                d,
                                f,
                                s,
                                own_le + le,
                                li,
                            ),
                        }
                    }
                }
            })
            .collect()
    }

    /// Seed of the uplink fading process from `user` to `bs`.
    pub fn uplink_fading_seed(&self, topo: &Topology, user: usize, bs: usize) -> u64 {
        derive(
            self.seed,
            &[tag::FADING_UP, topo.user_key(user), topo.bs_key(bs)],
        )
    }

    /// Seed of the downlink fading process from `bs` to `user`.
    pub fn downlink_fading_seed(&self, topo: &Topology, user: usize, bs: usize) -> u64 {
        derive(
            self.seed,
            &[tag::FADING_DOWN, topo.user_key(user), topo.bs_key(bs)],
        )
    }
}
