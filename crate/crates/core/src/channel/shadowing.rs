//! Correlated log-normal shadowing and random wall losses.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};

use crate::units::Decibel;

/// Log-normal shadowing with inter-link correlation `rho` between the links
/// of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingModel {
    pub sigma_db: f64,
    pub rho: f64,
}

impl ShadowingModel {
    pub const OUTDOOR: ShadowingModel = ShadowingModel {
        sigma_db: 8.0,
        rho: 0.5,
    };
    pub const INDOOR: ShadowingModel = ShadowingModel {
        sigma_db: 10.0,
        rho: 0.7,
    };
}

/// Shadowing of `n_links` links of one user:
/// `S_k = sigma (sqrt(rho) a + sqrt(1 - rho) b_k)` with a common `a` and
/// independent `b_k`, all standard normal. Draw order is `a` then `b_0..`,
/// so a shorter request yields a prefix of a longer one.
pub fn sample_shadowing(
    n_links: usize,
    model: &ShadowingModel,
    rng: &mut impl Rng,
) -> Vec<Decibel> {
    let common: f64 = StandardNormal.sample(rng);
    let wc = model.rho.sqrt();
    let wi = (1.0 - model.rho).sqrt();
    (0..n_links)
        .map(|_| {
            let own: f64 = StandardNormal.sample(rng);
            Decibel(model.sigma_db * (wc * common + wi * own))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallLossModel {
    /// `Le ~ N(external_mean, external_sd)`, `Li = internal_step * Bernoulli(p)`.
    Sampled {
        external_mean_db: f64,
        external_sd_db: f64,
        internal_step_db: f64,
        internal_probability: f64,
    },
    Fixed {
        external_db: f64,
        internal_db: f64,
    },
}

impl Default for WallLossModel {
    fn default() -> Self {
        WallLossModel::Sampled {
            external_mean_db: 7.0,
            external_sd_db: 6.0,
            internal_step_db: 4.0,
            internal_probability: 0.5,
        }
    }
}

/// Returns `(Le, Li)`. Negative `Le` from the Gaussian tail is kept.
pub fn sample_wall_losses(model: &WallLossModel, rng: &mut impl Rng) -> (Decibel, Decibel) {
    match *model {
        WallLossModel::Fixed {
            external_db,
            internal_db,
        } => (Decibel(external_db), Decibel(internal_db)),
        WallLossModel::Sampled {
            external_mean_db,
            external_sd_db,
            internal_step_db,
            internal_probability,
        } => {
            let le = Normal::new(external_mean_db, external_sd_db)
                .expect("validated sd")
                .sample(rng);
            let hit = Bernoulli::new(internal_probability)
                .expect("validated probability")
                .sample(rng);
            (
                Decibel(le),
                Decibel(if hit { internal_step_db } else { 0.0 }),
            )
        }
    }
}
