// SPDX-License-Identifier: Apache-2.0

//! serde adapters for the document's unit conventions.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::time::Nanos;

/// `Nanos` stored as a (possibly fractional) microsecond number.
pub mod micros {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Nanos, s: S) -> Result<S::Ok, S::Error> {
        value.as_micros_f64().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Nanos, D::Error> {
        let us = f64::deserialize(d)?;
        if !us.is_finite() || us < 0.0 {
            return Err(D::Error::custom(format!("invalid time value {us}")));
        }
        Ok(Nanos::from_micros_f64(us))
    }
}

/// Map of `Nanos` stored as microsecond numbers.
pub mod micros_map {
    use super::*;

    pub fn serialize<S: Serializer>(value: &BTreeMap<String, Nanos>, s: S) -> Result<S::Ok, S::Error> {
        let converted: BTreeMap<&str, f64> =
            value.iter().map(|(k, v)| (k.as_str(), v.as_micros_f64())).collect();
        converted.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Nanos>, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, us)| {
                if !us.is_finite() || us < 0.0 {
                    Err(D::Error::custom(format!("invalid WCET {us} for {k}")))
                } else {
                    Ok((k, Nanos::from_micros_f64(us)))
                }
            })
            .collect()
    }
}

/// A string or a list of strings; a single entry is written back as a plain
/// string.
pub mod one_or_many {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(String),
        Many(Vec<String>),
    }

    pub fn serialize<S: Serializer>(value: &[String], s: S) -> Result<S::Ok, S::Error> {
        match value {
            [single] => single.serialize(s),
            many => many.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
        Ok(match Raw::deserialize(d)? {
            Raw::One(s) => vec![s],
            Raw::Many(v) => v,
        })
    }
}
