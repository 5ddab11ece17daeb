//! Static propagation loss of the three link classes.
//!
//! Losses are dimensionless linear ratios (>= 1 in practice); `d` is the
//! 2-D distance in metres and `f` the carrier in MHz.

use crate::units::{db2lin, lin2db, Decibel, PowerLinear};

/// Distances below this are clamped to keep the power laws finite.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkClass {
    /// Macro user to macro BS.
    Outdoor,
    /// Macro user to femto BS, femto user to macro BS, femto user to a
    /// femto BS in another building.
    OutdoorToIndoor,
    /// Femto user to the femto BS of its own building.
    Indoor,
}

fn clamp_distance(d: f64) -> f64 {
    if d < MIN_DISTANCE_M {
        log::debug!("link distance {d} m clamped to {MIN_DISTANCE_M} m");
        MIN_DISTANCE_M
    } else {
        d
    }
}

/// `10^4.9 (d/1000)^4 f^3 10^(S/10)`
pub fn path_loss_outdoor(d: f64, f_mhz: f64, shadow: Decibel) -> PowerLinear {
    let d = clamp_distance(d);
    PowerLinear(10f64.powf(4.9) * (d / 1000.0).powi(4) * f_mhz.powi(3) * db2lin(shadow.0))
}

/// Outdoor loss times `10^((Li+Le)/10)`.
pub fn path_loss_outdoor_to_indoor(
    d: f64,
    f_mhz: f64,
    shadow: Decibel,
    internal: Decibel,
    external: Decibel,
) -> PowerLinear {
    let outdoor = path_loss_outdoor(d, f_mhz, shadow);
    PowerLinear(outdoor.0 * db2lin(internal.0 + external.0))
}

/// `10^3 d^3.7 10^(S/10) 10^(Li/10)`
pub fn path_loss_indoor(d: f64, shadow: Decibel, internal: Decibel) -> PowerLinear {
    let d = clamp_distance(d);
    PowerLinear(1e3 * d.powf(3.7) * db2lin(shadow.0) * db2lin(internal.0))
}

/// Static loss of one (user, BS) link together with its components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticLoss {
    pub link_class: LinkClass,
    pub distance_m: f64,
    pub frequency_mhz: f64,
    pub shadow: Decibel,
    /// Sum of the external-wall losses crossed (zero for outdoor/indoor links).
    pub external_wall: Decibel,
    pub internal_wall: Decibel,
    pub total: PowerLinear,
}

impl StaticLoss {
    pub fn new(
        link_class: LinkClass,
        distance_m: f64,
        frequency_mhz: f64,
        shadow: Decibel,
        external_wall: Decibel,
        internal_wall: Decibel,
    ) -> Self {
        let (external_wall, internal_wall) = match link_class {
            LinkClass::Outdoor => (Decibel(0.0), Decibel(0.0)),
            LinkClass::Indoor => (Decibel(0.0), internal_wall),
            LinkClass::OutdoorToIndoor => (external_wall, internal_wall),
        };
        let mut loss = StaticLoss {
            link_class,
            distance_m,
            frequency_mhz,
            shadow,
            external_wall,
            internal_wall,
            total: PowerLinear(0.0),
        };
        loss.total = loss.recompute();
        loss
    }

    /// Evaluates the closed form of this link's class from the stored components.
    pub fn recompute(&self) -> PowerLinear {
        match self.link_class {
            LinkClass::Outdoor => {
                path_loss_outdoor(self.distance_m, self.frequency_mhz, self.shadow)
            }
            LinkClass::OutdoorToIndoor => path_loss_outdoor_to_indoor(
                self.distance_m,
                self.frequency_mhz,
                self.shadow,
                self.internal_wall,
                self.external_wall,
            ),
            LinkClass::Indoor => path_loss_indoor(self.distance_m, self.shadow, self.internal_wall),
        }
    }

    pub fn total_db(&self) -> f64 {
        lin2db(self.total.0)
    }
}
