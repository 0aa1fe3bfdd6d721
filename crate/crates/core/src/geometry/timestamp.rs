use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GeometryError;

const NANOS_PER_SEC: u32 = 1_000_000_000;

/// Capture time of a frame, split into whole seconds and nanoseconds.
///
/// Ordering is lexicographic on `(seconds, nanoseconds)`, which is the
/// chronological order because `nanoseconds` is always below one second.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(u32, u32)", into = "(u32, u32)")]
pub struct Timestamp {
    seconds: u32,
    nanoseconds: u32,
}

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp { seconds: 0, nanoseconds: 0 };

    pub fn new(seconds: u32, nanoseconds: u32) -> Result<Self, GeometryError> {
        if nanoseconds >= NANOS_PER_SEC {
            return Err(GeometryError::InvalidTimestamp(format!(
                "nanoseconds {nanoseconds} out of range"
            )));
        }
        Ok(Self { seconds, nanoseconds })
    }

    pub fn from_nanos(total: u64) -> Result<Self, GeometryError> {
        let seconds = total / u64::from(NANOS_PER_SEC);
        let seconds = u32::try_from(seconds).map_err(|_| {
            GeometryError::InvalidTimestamp(format!("{total} ns does not fit in 32-bit seconds"))
        })?;
        Ok(Self {
            seconds,
            nanoseconds: (total % u64::from(NANOS_PER_SEC)) as u32,
        })
    }

    /// Nearest timestamp to a non-negative number of seconds.
    pub fn from_secs_f64(secs: f64) -> Result<Self, GeometryError> {
        if !secs.is_finite() || secs < 0.0 {
            return Err(GeometryError::InvalidTimestamp(format!("{secs} s")));
        }
        let nanos = (secs * 1e9).round();
        if nanos >= u64::MAX as f64 {
            return Err(GeometryError::InvalidTimestamp(format!("{secs} s")));
        }
        Self::from_nanos(nanos as u64)
    }

    pub fn seconds(self) -> u32 {
        self.seconds
    }

    pub fn nanoseconds(self) -> u32 {
        self.nanoseconds
    }

    pub fn as_nanos(self) -> u64 {
        u64::from(self.seconds) * u64::from(NANOS_PER_SEC) + u64::from(self.nanoseconds)
    }

    pub fn as_secs_f64(self) -> f64 {
        f64::from(self.seconds) + f64::from(self.nanoseconds) * 1e-9
    }

    /// Signed difference `self - earlier` in seconds, computed in integer
    /// nanoseconds first so nearby epoch-scale stamps keep full precision.
    pub fn secs_since(self, earlier: Timestamp) -> f64 {
        let diff = self.as_nanos() as i128 - earlier.as_nanos() as i128;
        diff as f64 * 1e-9
    }

    /// Absolute difference in seconds.
    pub fn abs_diff_secs(self, other: Timestamp) -> f64 {
        self.secs_since(other).abs()
    }

    /// Absolute difference in nanoseconds.
    pub fn abs_diff_nanos(self, other: Timestamp) -> u64 {
        self.as_nanos().abs_diff(other.as_nanos())
    }
}

impl TryFrom<(u32, u32)> for Timestamp {
    type Error = GeometryError;

    fn try_from((s, ns): (u32, u32)) -> Result<Self, Self::Error> {
        Timestamp::new(s, ns)
    }
}

impl From<Timestamp> for (u32, u32) {
    fn from(t: Timestamp) -> Self {
        (t.seconds, t.nanoseconds)
    }
}

/// Parses decimal seconds (`1305031102.175304`) exactly, without a round
/// trip through floating point. Digits beyond nanosecond resolution are
/// truncated.
impl FromStr for Timestamp {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeometryError::InvalidTimestamp(format!("unparseable timestamp {s:?}"));
        let s = s.trim();
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let seconds: u32 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let mut nanos: u32 = 0;
        for (i, digit) in frac_part.bytes().take(9).enumerate() {
            nanos += u32::from(digit - b'0') * 10u32.pow(8 - i as u32);
        }
        Ok(Self { seconds, nanoseconds: nanos })
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.seconds, self.nanoseconds)
    }
}
