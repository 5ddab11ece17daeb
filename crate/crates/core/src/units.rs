//! Decibel and linear power/loss scalars.
//!
//! Powers are referenced to 1 mW, so a [`Decibel`] holding a power is in dBm
//! and the matching [`PowerLinear`] is in milliwatts. Losses, gains and
//! ratios use the same two types without a reference unit. All arithmetic
//! on powers (interference sums, threshold updates) is done on
//! [`PowerLinear`]; [`Decibel`] is for configuration, logging and output.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use crate::error::{Error, Result};

/// A value in dB (ratio) or dBm (absolute power).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Decibel(pub f64);

/// A value in mW (absolute power) or a dimensionless linear ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct PowerLinear(pub f64);

impl Decibel {
    pub const fn new(db: f64) -> Self {
        Decibel(db)
    }

    pub fn db(self) -> f64 {
        self.0
    }

    pub fn to_linear(self) -> PowerLinear {
        db_to_linear(self)
    }
}

impl PowerLinear {
    pub const ZERO: PowerLinear = PowerLinear(0.0);
    pub const ONE: PowerLinear = PowerLinear(1.0);

    pub const fn new(value: f64) -> Self {
        PowerLinear(value)
    }

    pub fn from_dbm(dbm: f64) -> Self {
        db_to_linear(Decibel(dbm))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_db(self) -> Result<Decibel> {
        linear_to_db(self)
    }

    pub fn min(self, other: PowerLinear) -> PowerLinear {
        PowerLinear(self.0.min(other.0))
    }

    pub fn max(self, other: PowerLinear) -> PowerLinear {
        PowerLinear(self.0.max(other.0))
    }
}

/// `10^(x/10)`.
pub fn db_to_linear(x: Decibel) -> PowerLinear {
    PowerLinear(10f64.powf(x.0 / 10.0))
}

/// `10 log10(x)`; fails for `x <= 0` (and NaN).
pub fn linear_to_db(x: PowerLinear) -> Result<Decibel> {
    if x.0 > 0.0 {
        Ok(Decibel(10.0 * x.0.log10()))
    } else {
        Err(Error::NonPositive(x.0))
    }
}

/// Infallible dB conversion for values already known to be positive.
pub(crate) fn lin2db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub(crate) fn db2lin(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

impl Add for Decibel {
    type Output = Decibel;
    fn add(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 + rhs.0)
    }
}

impl Sub for Decibel {
    type Output = Decibel;
    fn sub(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 - rhs.0)
    }
}

impl Add for PowerLinear {
    type Output = PowerLinear;
    fn add(self, rhs: PowerLinear) -> PowerLinear {
        PowerLinear(self.0 + rhs.0)
    }
}

impl Sub for PowerLinear {
    type Output = PowerLinear;
    fn sub(self, rhs: PowerLinear) -> PowerLinear {
        PowerLinear(self.0 - rhs.0)
    }
}

impl Mul for PowerLinear {
    type Output = PowerLinear;
    fn mul(self, rhs: PowerLinear) -> PowerLinear {
        PowerLinear(self.0 * rhs.0)
    }
}

impl Div for PowerLinear {
    type Output = PowerLinear;
    fn div(self, rhs: PowerLinear) -> PowerLinear {
        PowerLinear(self.0 / rhs.0)
    }
}

impl Mul<f64> for PowerLinear {
    type Output = PowerLinear;
    fn mul(self, rhs: f64) -> PowerLinear {
        PowerLinear(self.0 * rhs)
    }
}

impl fmt::Display for Decibel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} dB", self.0)
    }
}

impl fmt::Display for PowerLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn db_to_linear_examples() {
        assert_eq!(db_to_linear(Decibel(0.0)).value(), 1.0);
        assert!((db_to_linear(Decibel(30.0)).value() - 1000.0).abs() < 1e-9);
        let v = db_to_linear(Decibel(-109.0)).value();
        assert!((v - 1.258_925_411_794_167e-11).abs() / v < 1e-12);
    }

    #[test]
    fn linear_to_db_examples() {
        assert_eq!(linear_to_db(PowerLinear(1.0)).unwrap().db(), 0.0);
        assert!((linear_to_db(PowerLinear(1000.0)).unwrap().db() - 30.0).abs() < 1e-12);
        assert!((linear_to_db(PowerLinear(2.0)).unwrap().db() - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn non_positive_is_domain_error() {
        assert!(matches!(
            linear_to_db(PowerLinear(0.0)),
            Err(Error::NonPositive(_))
        ));
        assert!(linear_to_db(PowerLinear(-1.0)).is_err());
        assert!(linear_to_db(PowerLinear(f64::NAN)).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(x in -250.0f64..60.0) {
            let back = linear_to_db(db_to_linear(Decibel(x))).unwrap().db();
            prop_assert!((back - x).abs() < 1e-10);
        }

        #[test]
        fn strictly_increasing(a in -250.0f64..60.0, d in 1e-6f64..50.0) {
            let b = a + d;
            prop_assert!(db_to_linear(Decibel(a)) < db_to_linear(Decibel(b)));
            let (la, lb) = (db_to_linear(Decibel(a)), db_to_linear(Decibel(b)));
            prop_assert!(linear_to_db(la).unwrap() < linear_to_db(lb).unwrap());
        }
    }
}
