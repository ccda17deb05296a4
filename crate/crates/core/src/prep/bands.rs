use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Broadband,
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl BandName {
    /// The five classic rhythm bands, slowest first.
    pub const CLASSIC: [BandName; 5] = [
        BandName::Delta,
        BandName::Theta,
        BandName::Alpha,
        BandName::Beta,
        BandName::Gamma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BandName::Broadband => "broadband",
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
        }
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "broadband" => Ok(BandName::Broadband),
            "delta" => Ok(BandName::Delta),
            "theta" => Ok(BandName::Theta),
            "alpha" => Ok(BandName::Alpha),
            "beta" => Ok(BandName::Beta),
            "gamma" => Ok(BandName::Gamma),
            other => Err(Error::invalid(format!("unknown band {other:?}"))),
        }
    }
}

/// A named pass band in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: BandName,
    pub low: f64,
    pub high: f64,
}

impl BandSpec {
    /// Canonical edges: broadband 0.01–50, delta 0.5–4, theta 4–8,
    /// alpha 8–13, beta 13–30, gamma 30–50 Hz.
    pub fn canonical(name: BandName) -> BandSpec {
        let (low, high) = match name {
            BandName::Broadband => (0.01, 50.0),
            BandName::Delta => (0.5, 4.0),
            BandName::Theta => (4.0, 8.0),
            BandName::Alpha => (8.0, 13.0),
            BandName::Beta => (13.0, 30.0),
            BandName::Gamma => (30.0, 50.0),
        };
        BandSpec { name, low, high }
    }

    /// Checks `0 <= low < high < K/2`.
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.low.is_finite() && self.high.is_finite()) {
            return Err(Error::invalid(format!("{} band edges must be finite", self.name)));
        }
        if self.low < 0.0 || self.low >= self.high || self.high >= nyquist {
            return Err(Error::invalid(format!(
                "{} band {}-{} Hz invalid at {} Hz (need 0 <= low < high < {nyquist})",
                self.name, self.low, self.high, sample_rate
            )));
        }
        Ok(())
    }

    pub fn contains(&self, freq: f64) -> bool {
        freq >= self.low && freq <= self.high
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_table() {
        let edges: Vec<_> = BandName::CLASSIC
            .iter()
            .map(|&b| {
                let s = BandSpec::canonical(b);
                (s.low, s.high)
            })
            .collect();
        assert_eq!(
            edges,
            vec![(0.5, 4.0), (4.0, 8.0), (8.0, 13.0), (13.0, 30.0), (30.0, 50.0)]
        );
        for b in BandName::CLASSIC {
            BandSpec::canonical(b).validate(1000).unwrap();
        }
    }

    #[test]
    fn validation() {
        assert!(BandSpec::canonical(BandName::Gamma).validate(100).is_err());
        let inverted = BandSpec { name: BandName::Alpha, low: 13.0, high: 8.0 };
        assert!(inverted.validate(250).is_err());
        assert_eq!("Alpha".parse::<BandName>().unwrap(), BandName::Alpha);
        assert!("kappa".parse::<BandName>().is_err());
    }
}
