//! Scenario configuration.
//!
//! A scenario is a flat set of typed keys. Every key has a default taken
//! from the DO Rev. A evaluation setup, so an empty file describes a
//! valid closed-loop, single-femtocell scenario. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::db2lin;

/// Slot duration: 1/600 s (DO Rev. A, 1.667 ms).
pub const SLOT_S: f64 = 1.0 / 600.0;
/// Slots per physical-layer packet and per power-control update (150 Hz).
pub const SLOTS_PER_FRAME: usize = 4;
pub const FRAME_S: f64 = SLOT_S * SLOTS_PER_FRAME as f64;

/// Maximum-transmit-power policy of femtocell users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Reference run: femtocells are deployed but never transmit.
    NoFemto,
    /// `P_max` fixed at the device limit (23 dBm).
    FixedCap,
    OpenLoop,
    ClosedLoop,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::NoFemto,
        Scheme::FixedCap,
        Scheme::OpenLoop,
        Scheme::ClosedLoop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::NoFemto => "no_femto",
            Scheme::FixedCap => "fixed_cap",
            Scheme::OpenLoop => "open_loop",
            Scheme::ClosedLoop => "closed_loop",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|sc| sc.name() == s)
    }

    pub fn femtos_active(self) -> bool {
        self != Scheme::NoFemto
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FemtoLayout {
    /// One building in the centre cell, `femto_distance_m` from its BS.
    Single,
    /// `femtos_per_macrocell * 19` buildings over the whole layout.
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallMode {
    /// `Le ~ N(mean, sd)`, `Li = step * Bernoulli(p)`.
    Sampled,
    /// `Le = external_wall_db`, `Li = internal_wall_db` on every link.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scheme: Scheme,
    pub drops: usize,
    pub warmup_frames: usize,
    /// Trailing part of the warm-up over which `NI_k(0)` and `R_k` are averaged.
    pub warmup_average_frames: usize,
    pub data_frames: usize,
    pub seed: u64,

    pub cell_radius_m: f64,
    pub macro_users_per_cell: usize,
    pub femto_users_per_building: usize,
    pub building_size_m: f64,
    pub femto_layout: FemtoLayout,
    pub femto_distance_m: f64,
    /// Fixed azimuth of the single building; drawn uniformly when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub femto_azimuth_deg: Option<f64>,
    pub femtos_per_macrocell: usize,
    pub placement_retries: usize,

    pub wall_mode: WallMode,
    pub external_wall_db: f64,
    pub internal_wall_db: f64,
    pub external_wall_mean_db: f64,
    pub external_wall_sd_db: f64,
    pub internal_wall_step_db: f64,
    pub internal_wall_probability: f64,

    pub shadow_sigma_outdoor_db: f64,
    pub shadow_rho_outdoor: f64,
    pub shadow_sigma_indoor_db: f64,
    pub shadow_rho_indoor: f64,

    pub bandwidth_hz: f64,
    pub carrier_mhz: f64,
    pub noise_dbm: f64,
    pub alpha: f64,
    pub pmax_dbm: f64,
    pub macro_eirp_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub speed_kmh: f64,

    /// Size `K` of each femto user's macro neighbor list.
    pub neighbor_list_size: usize,
    /// Age in frames of the NI and J values a user acts on. With 0, `J`
    /// counts come from the current frame's reports and NI from the most
    /// recent completed measurement.
    pub feedback_delay_frames: usize,
    pub pf_time_constant_frames: f64,
    /// Interference links whose mean contribution is more than this many
    /// dB below the noise floor use unit fading gain instead of a sample.
    /// `-inf` in a config file (`None` here) samples every link.
    #[serde(with = "floor_db")]
    pub weak_link_floor_db: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_table: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scheme: Scheme::ClosedLoop,
            drops: 20,
            warmup_frames: 200,
            warmup_average_frames: 100,
            data_frames: 2000,
            seed: 1,

            cell_radius_m: 800.0 / 3f64.sqrt(),
            macro_users_per_cell: 10,
            femto_users_per_building: 4,
            building_size_m: 50.0,
            femto_layout: FemtoLayout::Single,
            femto_distance_m: 200.0,
            femto_azimuth_deg: None,
            femtos_per_macrocell: 10,
            placement_retries: 10_000,

            wall_mode: WallMode::Sampled,
            external_wall_db: 10.0,
            internal_wall_db: 0.0,
            external_wall_mean_db: 7.0,
            external_wall_sd_db: 6.0,
            internal_wall_step_db: 4.0,
            internal_wall_probability: 0.5,

            shadow_sigma_outdoor_db: 8.0,
            shadow_rho_outdoor: 0.5,
            shadow_sigma_indoor_db: 10.0,
            shadow_rho_indoor: 0.7,

            bandwidth_hz: 1.25e6,
            carrier_mhz: 2500.0,
            noise_dbm: -109.0,
            alpha: 3.0,
            pmax_dbm: 23.0,
            macro_eirp_dbm: 43.0,
            antenna_gain_dbi: 0.0,
            speed_kmh: 3.0,

            neighbor_list_size: 3,
            feedback_delay_frames: 1,
            pf_time_constant_frames: 100.0,
            weak_link_floor_db: Some(-30.0),

            rate_table: None,
            trace: None,
        }
    }
}

mod floor_db {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(v.unwrap_or(f64::NEG_INFINITY))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let v = f64::deserialize(d)?;
        Ok((v != f64::NEG_INFINITY).then_some(v))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be finite and > 0 (got {v})"),
        ))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, "must be finite"))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must lie in [0, 1] (got {v})"),
        ))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.drops == 0 {
            return Err(Error::config("drops", "must be >= 1"));
        }
        if self.data_frames == 0 {
            return Err(Error::config("data_frames", "must be >= 1"));
        }
        if self.warmup_average_frames == 0 || self.warmup_average_frames > self.warmup_frames {
            return Err(Error::config(
                "warmup_average_frames",
                "must be >= 1 and <= warmup_frames",
            ));
        }
        positive("cell_radius_m", self.cell_radius_m)?;
        positive("building_size_m", self.building_size_m)?;
        let inradius = self.cell_radius_m * 3f64.sqrt() / 2.0;
        if self.building_size_m >= inradius {
            return Err(Error::config(
                "building_size_m",
                "building does not fit inside a cell",
            ));
        }
        if self.macro_users_per_cell == 0 {
            return Err(Error::config("macro_users_per_cell", "must be >= 1"));
        }
        if self.femto_users_per_building == 0 {
            return Err(Error::config("femto_users_per_building", "must be >= 1"));
        }
        finite("femto_distance_m", self.femto_distance_m)?;
        if self.femto_layout == FemtoLayout::Single {
            let half = self.building_size_m / 2.0;
            if self.femto_distance_m < 0.0
                || self.femto_distance_m + half * std::f64::consts::SQRT_2 > self.cell_radius_m
            {
                return Err(Error::config(
                    "femto_distance_m",
                    "building at this distance cannot lie inside the centre cell",
                ));
            }
        }
        if let Some(az) = self.femto_azimuth_deg {
            finite("femto_azimuth_deg", az)?;
        }
        if self.placement_retries == 0 {
            return Err(Error::config("placement_retries", "must be >= 1"));
        }
        finite("external_wall_db", self.external_wall_db)?;
        finite("internal_wall_db", self.internal_wall_db)?;
        finite("external_wall_mean_db", self.external_wall_mean_db)?;
        if !(self.external_wall_sd_db >= 0.0 && self.external_wall_sd_db.is_finite()) {
            return Err(Error::config("external_wall_sd_db", "must be >= 0"));
        }
        finite("internal_wall_step_db", self.internal_wall_step_db)?;
        unit_interval("internal_wall_probability", self.internal_wall_probability)?;
        positive("shadow_sigma_outdoor_db", self.shadow_sigma_outdoor_db)?;
        positive("shadow_sigma_indoor_db", self.shadow_sigma_indoor_db)?;
        unit_interval("shadow_rho_outdoor", self.shadow_rho_outdoor)?;
        unit_interval("shadow_rho_indoor", self.shadow_rho_indoor)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("carrier_mhz", self.carrier_mhz)?;
        finite("noise_dbm", self.noise_dbm)?;
        positive("alpha", self.alpha)?;
        finite("pmax_dbm", self.pmax_dbm)?;
        finite("macro_eirp_dbm", self.macro_eirp_dbm)?;
        finite("antenna_gain_dbi", self.antenna_gain_dbi)?;
        if !(self.speed_kmh >= 0.0 && self.speed_kmh.is_finite()) {
            return Err(Error::config("speed_kmh", "must be >= 0"));
        }
        if self.neighbor_list_size == 0 || self.neighbor_list_size > 19 {
            return Err(Error::config("neighbor_list_size", "must lie in 1..=19"));
        }
        if self.pf_time_constant_frames.is_nan() || self.pf_time_constant_frames < 1.0 {
            return Err(Error::config("pf_time_constant_frames", "must be >= 1"));
        }
        if let Some(f) = self.weak_link_floor_db {
            finite("weak_link_floor_db", f)?;
        }
        Ok(())
    }

    pub fn noise_mw(&self) -> f64 {
        db2lin(self.noise_dbm)
    }

    pub fn pmax_mw(&self) -> f64 {
        db2lin(self.pmax_dbm)
    }

    pub fn macro_eirp_mw(&self) -> f64 {
        db2lin(self.macro_eirp_dbm)
    }

    /// Combined transmit and receive antenna gain (linear).
    pub fn antenna_gain(&self) -> f64 {
        db2lin(2.0 * self.antenna_gain_dbi)
    }

    pub fn femto_count(&self) -> usize {
        match self.femto_layout {
            FemtoLayout::Single => 1,
            FemtoLayout::Multi => 19 * self.femtos_per_macrocell,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always serialisable")
    }
}
