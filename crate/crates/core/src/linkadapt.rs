//! DO Rev. A uplink rate formats and proportional-fair scheduling.

use std::path::Path;

use serde::Deserialize;

use crate::config::FRAME_S;
use crate::error::{Error, Result};
use crate::units::{db2lin, lin2db, Decibel};

/// One uplink transmission format: payload sent over one 4-slot frame.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct RateFormat {
    pub payload_bits: u32,
    pub rate_kbps: f64,
    /// Required Eb/Nt for 1% FER.
    pub ebnt_db: f64,
}

impl RateFormat {
    /// `Eb/Nt - 10 log10(W / R)`.
    pub fn required_sinr(&self, bandwidth_hz: f64) -> Decibel {
        required_sinr(self, bandwidth_hz)
    }
}

pub fn required_sinr(format: &RateFormat, bandwidth_hz: f64) -> Decibel {
    Decibel(format.ebnt_db - lin2db(bandwidth_hz / (format.rate_kbps * 1e3)))
}

/// Uplink data rate formats (payload bits, kbps, Eb/Nt dB).
pub const DO_REV_A_FORMATS: [RateFormat; 8] = [
    RateFormat {
        payload_bits: 128,
        rate_kbps: 19.2,
        ebnt_db: 5.6,
    },
    RateFormat {
        payload_bits: 256,
        rate_kbps: 38.4,
        ebnt_db: 5.7,
    },
    RateFormat {
        payload_bits: 512,
        rate_kbps: 76.8,
        ebnt_db: 5.8,
    },
    RateFormat {
        payload_bits: 1024,
        rate_kbps: 153.6,
        ebnt_db: 7.0,
    },
    RateFormat {
        payload_bits: 2048,
        rate_kbps: 307.2,
        ebnt_db: 5.4,
    },
    RateFormat {
        payload_bits: 4096,
        rate_kbps: 614.4,
        ebnt_db: 6.3,
    },
    RateFormat {
        payload_bits: 8192,
        rate_kbps: 1228.8,
        ebnt_db: 5.5,
    },
    RateFormat {
        payload_bits: 12288,
        rate_kbps: 1843.2,
        ebnt_db: 11.4,
    },
];

/// Rate formats in increasing rate order with their SINR thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    formats: Vec<RateFormat>,
    required_sinr_lin: Vec<f64>,
    bandwidth_hz: f64,
}

impl RateTable {
    pub fn new(mut formats: Vec<RateFormat>, bandwidth_hz: f64) -> Result<Self> {
        if formats.is_empty() {
            return Err(Error::config("rate_table", "table has no rows"));
        }
        formats.sort_by(|a, b| a.rate_kbps.total_cmp(&b.rate_kbps));
        let required_sinr_lin: Vec<f64> = formats
            .iter()
            .map(|f| db2lin(required_sinr(f, bandwidth_hz).0))
            .collect();
        if required_sinr_lin.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "rate_table",
                "required SINR must increase with rate",
            ));
        }
        if formats
            .iter()
            .any(|f| f.rate_kbps.is_nan() || f.rate_kbps <= 0.0 || f.payload_bits == 0)
        {
            return Err(Error::config(
                "rate_table",
                "rates and payloads must be positive",
            ));
        }
        Ok(RateTable {
            formats,
            required_sinr_lin,
            bandwidth_hz,
        })
    }

    pub fn do_rev_a(bandwidth_hz: f64) -> Self {
        RateTable::new(DO_REV_A_FORMATS.to_vec(), bandwidth_hz).expect("built-in table is valid")
    }

    /// Reads `payload_bits,rate_kbps,ebnt_db` rows (with header).
    pub fn from_csv(path: &Path, bandwidth_hz: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut rows = Vec::new();
        for rec in reader.deserialize() {
            let row: RateFormat = rec.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        RateTable::new(rows, bandwidth_hz)
    }

    pub fn formats(&self) -> &[RateFormat] {
        &self.formats
    }

    pub fn len(&self) -> usize {
        self.formats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formats.is_empty()
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn format(&self, index: usize) -> &RateFormat {
        &self.formats[index]
    }

    /// Linear SINR threshold of a format.
    pub fn required_sinr_lin(&self, index: usize) -> f64 {
        self.required_sinr_lin[index]
    }

    /// Highest format whose threshold is met by a linear SINR.
    pub fn select_lin(&self, sinr_lin: f64) -> Option<usize> {
        self.required_sinr_lin
            .iter()
            .rposition(|&req| req <= sinr_lin)
    }

    pub fn select_rate(&self, sinr: Decibel) -> Option<&RateFormat> {
        self.select_lin(db2lin(sinr.0)).map(|i| &self.formats[i])
    }

    /// Bits per second delivered by a successful frame of a format.
    pub fn throughput_bps(&self, index: usize) -> f64 {
        self.formats[index].payload_bits as f64 / FRAME_S
    }
}

/// Proportional-fair state of the users of one BS.
#[derive(Debug, Clone, PartialEq)]
pub struct PfState {
    /// Exponentially averaged served throughput (bit/s), per user slot.
    pub average_throughput: Vec<f64>,
    pub time_constant: f64,
}

impl PfState {
    /// Initial average, keeping the metric finite before any service.
    pub const EPSILON_BPS: f64 = 1.0;

    pub fn new(users: usize, time_constant: f64) -> Self {
        PfState {
            average_throughput: vec![Self::EPSILON_BPS; users],
            time_constant,
        }
    }
}

/// Candidate `(slot, instantaneous_rate)` with the largest
/// `rate / average`; the lowest slot wins ties. `None` for no candidates.
pub fn pf_schedule(candidates: &[(usize, f64)], state: &PfState) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(slot, rate) in candidates {
        let metric = rate / state.average_throughput[slot];
        match best {
            Some((b, m)) if metric < m || (metric == m && slot > b) => {}
            _ => best = Some((slot, metric)),
        }
    }
    best.map(|(slot, _)| slot)
}

/// EMA update: the scheduled user averages in `served_bits / frame_s`,
/// everyone else decays towards zero.
pub fn pf_update(state: &mut PfState, scheduled: Option<usize>, served_bits: f64, frame_s: f64) {
    let w = 1.0 / state.time_constant;
    for (slot, avg) in state.average_throughput.iter_mut().enumerate() {
        let inst = if Some(slot) == scheduled {
            served_bits / frame_s
        } else {
            0.0
        };
        *avg = (1.0 - w) * *avg + w * inst;
    }
}
