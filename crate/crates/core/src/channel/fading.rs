//! Flat Rayleigh fading from a modified Jakes sum of sinusoids.
//!
//! Every link shares the same `N` oscillator frequencies
//! `f_d cos(2 pi (n + 1/4) / N)`, which are all distinct, and differs only
//! in its random per-oscillator phases:
//!
//! `h(t) = N^{-1/2} sum_n exp(j (w_n t + phi_n))`
//!
//! so the time-averaged power of every link is exactly 1 and its
//! autocorrelation is `N^{-1} sum_n cos(w_n tau)`, a Riemann sum of
//! `J0(2 pi f_d tau)`. Phases are derived from a 64-bit link seed, which
//! lets the engine evaluate any of millions of links without storing
//! per-link state: the per-time factors `exp(j w_n t)` are computed once per
//! frame in [`JakesBank::phasors_at`] and each link costs `N` complex
//! multiply-adds.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use crate::rng::splitmix64;
use crate::units::PowerLinear;

pub const OSCILLATORS: usize = 16;
const PHASE_BITS: u32 = 10;
const PHASE_STEPS: usize = 1 << PHASE_BITS;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Maximum Doppler shift `v / lambda` in Hz.
pub fn doppler_hz(speed_kmh: f64, carrier_mhz: f64) -> f64 {
    let v = speed_kmh / 3.6;
    let lambda = SPEED_OF_LIGHT / (carrier_mhz * 1e6);
    v / lambda
}

fn phase_table() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..PHASE_STEPS)
            .map(|k| {
                let p = TAU * k as f64 / PHASE_STEPS as f64;
                (p.cos(), p.sin())
            })
            .collect()
    })
}

/// Unit phasors `exp(j phi_n)` of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPhases {
    re: [f64; OSCILLATORS],
    im: [f64; OSCILLATORS],
}

impl LinkPhases {
    pub fn from_seed(seed: u64) -> Self {
        let table = phase_table();
        let mut re = [0.0; OSCILLATORS];
        let mut im = [0.0; OSCILLATORS];
        let mask = (PHASE_STEPS - 1) as u64;
        let mut state = seed;
        let mut bits = 0u64;
        let mut left = 0u32;
        for n in 0..OSCILLATORS {
            if left < PHASE_BITS {
                state = splitmix64(state);
                bits = state;
                left = 64;
            }
            let (c, s) = table[(bits & mask) as usize];
            bits >>= PHASE_BITS;
            left -= PHASE_BITS;
            re[n] = c;
            im[n] = s;
        }
        LinkPhases { re, im }
    }
}

/// Shared oscillator frequencies for one Doppler shift.
#[derive(Debug, Clone, PartialEq)]
pub struct JakesBank {
    doppler_hz: f64,
    omega: [f64; OSCILLATORS],
}

/// `exp(j w_n t)` for every oscillator at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasors {
    re: [f64; OSCILLATORS],
    im: [f64; OSCILLATORS],
}

impl JakesBank {
    pub fn new(doppler_hz: f64) -> Self {
        let mut omega = [0.0; OSCILLATORS];
        for (n, w) in omega.iter_mut().enumerate() {
            let arrival = TAU * (n as f64 + 0.25) / OSCILLATORS as f64;
            *w = TAU * doppler_hz * arrival.cos();
        }
        JakesBank { doppler_hz, omega }
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn phasors_at(&self, t: f64) -> Phasors {
        let mut re = [0.0; OSCILLATORS];
        let mut im = [0.0; OSCILLATORS];
        for n in 0..OSCILLATORS {
            let (s, c) = (self.omega[n] * t).sin_cos();
            re[n] = c;
            im[n] = s;
        }
        Phasors { re, im }
    }
}

impl Phasors {
    /// Complex envelope of a link.
    #[inline]
    pub fn envelope(&self, link: &LinkPhases) -> (f64, f64) {
        let mut x = 0.0;
        let mut y = 0.0;
        for n in 0..OSCILLATORS {
            x += link.re[n] * self.re[n] - link.im[n] * self.im[n];
            y += link.re[n] * self.im[n] + link.im[n] * self.re[n];
        }
        let scale = 1.0 / (OSCILLATORS as f64).sqrt();
        (x * scale, y * scale)
    }

    /// Power gain `|h|^2` of a link whose phases are already known.
    #[inline]
    pub fn link_gain(&self, link: &LinkPhases) -> f64 {
        let (x, y) = self.envelope(link);
        x * x + y * y
    }

    /// Power gain `|h|^2` (mean 1) of the link with the given seed.
    #[inline]
    pub fn gain(&self, link_seed: u64) -> f64 {
        let (x, y) = self.envelope(&LinkPhases::from_seed(link_seed));
        x * x + y * y
    }
}

/// Stateful fading of a single link.
#[derive(Debug, Clone)]
pub struct FadingProcess {
    bank: JakesBank,
    phases: LinkPhases,
    time_s: f64,
}

impl FadingProcess {
    pub fn new(doppler_hz: f64, link_seed: u64) -> Self {
        FadingProcess {
            bank: JakesBank::new(doppler_hz),
            phases: LinkPhases::from_seed(link_seed),
            time_s: 0.0,
        }
    }

    pub fn doppler_hz(&self) -> f64 {
        self.bank.doppler_hz
    }

    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    pub fn envelope(&self) -> (f64, f64) {
        self.bank.phasors_at(self.time_s).envelope(&self.phases)
    }

    pub fn gain(&self) -> PowerLinear {
        let (x, y) = self.envelope();
        PowerLinear(x * x + y * y)
    }

    /// Moves the process forward by `dt` seconds and returns the new gain.
    pub fn advance(&mut self, dt: f64) -> PowerLinear {
        self.time_s += dt;
        self.gain()
    }
}
