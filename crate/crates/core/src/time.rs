//! Integral UTC timestamps and half-open time windows.

use std::fmt;
use std::ops::{Add, Sub};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FmdsError;

/// Seconds since the UNIX epoch, UTC. Serialized as ISO-8601 (`2024-06-01T14:00:00Z`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const fn from_secs(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn secs(self) -> i64 {
        self.0
    }

    pub fn to_iso(self) -> String {
        match DateTime::<Utc>::from_timestamp(self.0, 0) {
            Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
            None => format!("@{}", self.0),
        }
    }

    /// Parses RFC 3339 / ISO-8601 text. Offsets are normalized to UTC; the
    /// seconds field may be omitted (`2024-06-01T14:00Z`). Fractional seconds
    /// are rejected.
    pub fn parse_iso(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let parsed = DateTime::parse_from_rfc3339(text)
            .map(|dt| dt.with_timezone(&Utc))
            .or_else(|_| {
                let bare = text.strip_suffix('Z').unwrap_or(text);
                NaiveDateTime::parse_from_str(bare, "%Y-%m-%dT%H:%M")
                    .or_else(|_| NaiveDateTime::parse_from_str(bare, "%Y-%m-%dT%H:%M:%S"))
                    .map(|naive| naive.and_utc())
            })
            .map_err(|_| format!("invalid ISO-8601 timestamp `{text}`"))?;
        if parsed.timestamp_subsec_nanos() != 0 {
            return Err(format!("timestamp `{text}` has fractional seconds"));
        }
        Ok(Timestamp(parsed.timestamp()))
    }

    /// Largest multiple of `step` that is `<= self`.
    pub fn floor_to(self, step: i64) -> Self {
        Timestamp(self.0.div_euclid(step) * step)
    }

    /// Smallest multiple of `step` that is `>= self`.
    pub fn ceil_to(self, step: i64) -> Self {
        let floor = self.floor_to(step);
        if floor == self {
            floor
        } else {
            Timestamp(floor.0 + step)
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

impl Add<i64> for Timestamp {
    type Output = Timestamp;
    fn add(self, secs: i64) -> Timestamp {
        Timestamp(self.0 + secs)
    }
}

impl Sub<i64> for Timestamp {
    type Output = Timestamp;
    fn sub(self, secs: i64) -> Timestamp {
        Timestamp(self.0 - secs)
    }
}

impl Sub for Timestamp {
    type Output = i64;
    fn sub(self, other: Timestamp) -> i64 {
        self.0 - other.0
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_iso())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Timestamp::parse_iso(&text).map_err(serde::de::Error::custom)
    }
}

/// Half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, FmdsError> {
        let window = TimeWindow { start, end };
        window.validate()?;
        Ok(window)
    }

    pub fn validate(&self) -> Result<(), FmdsError> {
        if self.start < self.end {
            Ok(())
        } else {
            Err(FmdsError::InvalidWindow(format!(
                "window start {} is not before end {}",
                self.start, self.end
            )))
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn intersects(&self, other: &TimeWindow) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn duration(&self) -> i64 {
        self.end - self.start
    }
}
