//! Argument value types shared by several commands.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A closed angular interval written `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Interval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        Ok(Self { lo: parse(lo)?, hi: parse(hi)? })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[f64; 2]>::deserialize(d)?;
        Ok(Self { lo, hi })
    }
}

/// An SNR in dB; `inf` and `-inf` select the noiseless and noise-only limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDb(pub f64);

impl FromStr for SnrDb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
        if v.is_nan() {
            return Err("SNR cannot be NaN".into());
        }
        Ok(Self(v))
    }
}

impl fmt::Display for SnrDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// JSON has no infinities, so the limits are written as strings
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SnrRepr {
    Number(f64),
    Text(String),
}

impl Serialize for SnrDb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            SnrRepr::Number(self.0).serialize(s)
        } else {
            SnrRepr::Text(self.to_string()).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for SnrDb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match SnrRepr::deserialize(d)? {
            SnrRepr::Number(v) => Ok(Self(v)),
            SnrRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_parsing() {
        let i: Interval = "-1:0".parse().unwrap();
        assert_eq!(i, Interval { lo: -1.0, hi: 0.0 });
        assert!("-1,0".parse::<Interval>().is_err());
        assert_eq!(serde_json::to_string(&i).unwrap(), "[-1.0,0.0]");
    }

    #[test]
    fn snr_json_round_trip() {
        for s in ["inf", "-inf", "-7.5", "0"] {
            let v: SnrDb = s.parse().unwrap();
            let text = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<SnrDb>(&text).unwrap(), v);
        }
        assert_eq!(serde_json::to_string(&SnrDb(f64::INFINITY)).unwrap(), "\"inf\"");
        assert!("nan".parse::<SnrDb>().is_err());
    }
}
