// SPDX-License-Identifier: Apache-2.0

//! Integer nanosecond time.
//!
//! All analysis arithmetic runs on whole nanoseconds so that ceiling terms
//! are exact. Conversions to and from microseconds only happen at document
//! boundaries.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nanos(pub u64);

impl Nanos {
    pub const ZERO: Nanos = Nanos(0);

    pub const fn new(ns: u64) -> Self {
        Nanos(ns)
    }

    pub const fn get(self) -> u64 {
        self.0
    }

    pub const fn from_micros(us: u64) -> Self {
        Nanos(us * 1000)
    }

    /// Rounds a microsecond value to the nearest nanosecond.
    pub fn from_micros_f64(us: f64) -> Self {
        Nanos((us * 1000.0).round() as u64)
    }

    pub fn as_micros_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_sub(self, rhs: Nanos) -> Nanos {
        Nanos(self.0.saturating_sub(rhs.0))
    }

    /// `ceil(self / rhs)` as a count.
    pub fn div_ceil(self, rhs: Nanos) -> u64 {
        assert!(rhs.0 > 0, "division by zero-length interval");
        self.0.div_ceil(rhs.0)
    }
}

impl fmt::Display for Nanos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(1000) {
            write!(f, "{}us", self.0 / 1000)
        } else {
            write!(f, "{:.3}us", self.as_micros_f64())
        }
    }
}

impl Add for Nanos {
    type Output = Nanos;
    fn add(self, rhs: Nanos) -> Nanos {
        Nanos(self.0 + rhs.0)
    }
}

impl AddAssign for Nanos {
    fn add_assign(&mut self, rhs: Nanos) {
        self.0 += rhs.0;
    }
}

impl Sub for Nanos {
    type Output = Nanos;
    fn sub(self, rhs: Nanos) -> Nanos {
        Nanos(
            self.0
                .checked_sub(rhs.0)
                .expect("negative time interval"),
        )
    }
}

impl Mul<u64> for Nanos {
    type Output = Nanos;
    fn mul(self, rhs: u64) -> Nanos {
        Nanos(self.0 * rhs)
    }
}

impl Mul<Nanos> for u64 {
    type Output = Nanos;
    fn mul(self, rhs: Nanos) -> Nanos {
        Nanos(self * rhs.0)
    }
}

impl Sum for Nanos {
    fn sum<I: Iterator<Item = Nanos>>(iter: I) -> Nanos {
        iter.fold(Nanos::ZERO, Add::add)
    }
}
