//! Rate regions for covert communication with action-dependent states:
//! evaluation of a fixed distribution, strict verification, and a
//! restart-based numerical search.

mod eval;
mod optimize;
mod params;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::AdsiChannel;
use crate::error::{Error, Result};

pub use eval::{eval_region, verify_construction, Caps, RegionReport, Verification};
pub use optimize::{optimize_region, OptConfig, Optimized, RestartTrace};
pub use params::{FactorKind, RegionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionId {
    #[serde(rename = "THM1_NC")]
    Thm1Nc,
    #[serde(rename = "COR1_NC")]
    Cor1Nc,
    #[serde(rename = "THM2_UPPER_NC")]
    Thm2UpperNc,
    #[serde(rename = "THM3_C")]
    Thm3C,
    #[serde(rename = "COR2_C")]
    Cor2C,
    #[serde(rename = "THM4_UPPER_C")]
    Thm4UpperC,
    #[serde(rename = "COR3_YZ")]
    Cor3Yz,
    #[serde(rename = "NO_COVERT_NC")]
    NoCovertNc,
    #[serde(rename = "NO_COVERT_C")]
    NoCovertC,
}

impl RegionId {
    pub const ALL: [RegionId; 9] = [
        RegionId::Thm1Nc,
        RegionId::Cor1Nc,
        RegionId::Thm2UpperNc,
        RegionId::Thm3C,
        RegionId::Cor2C,
        RegionId::Thm4UpperC,
        RegionId::Cor3Yz,
        RegionId::NoCovertNc,
        RegionId::NoCovertC,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionId::Thm1Nc => "THM1_NC",
            RegionId::Cor1Nc => "COR1_NC",
            RegionId::Thm2UpperNc => "THM2_UPPER_NC",
            RegionId::Thm3C => "THM3_C",
            RegionId::Cor2C => "COR2_C",
            RegionId::Thm4UpperC => "THM4_UPPER_C",
            RegionId::Cor3Yz => "COR3_YZ",
            RegionId::NoCovertNc => "NO_COVERT_NC",
            RegionId::NoCovertC => "NO_COVERT_C",
        }
    }

    /// Regions that carry a second auxiliary `V`.
    pub fn has_v(self) -> bool {
        matches!(
            self,
            RegionId::Thm1Nc | RegionId::Thm2UpperNc | RegionId::Thm3C | RegionId::Thm4UpperC
        )
    }

    /// Upper bounds; their optimizer value is a search value, not a bound.
    pub fn is_upper(self) -> bool {
        matches!(self, RegionId::Thm2UpperNc | RegionId::Thm4UpperC)
    }

    /// False only for the comparison regions without `P_Z = Q_0`.
    pub fn is_covert(self) -> bool {
        !matches!(self, RegionId::NoCovertNc | RegionId::NoCovertC)
    }

    /// Regions with the marginal-matching condition on the state.
    pub fn has_marginal_condition(self) -> bool {
        matches!(self, RegionId::Thm1Nc | RegionId::Thm3C)
    }

    /// Default `(|U|, |V|)` cardinality caps for a channel.
    pub fn caps(self, ch: &AdsiChannel) -> (usize, usize) {
        let (na, ns, nx, ny, _) = ch.sizes();
        let asx = na * ns * nx;
        match self {
            RegionId::Thm1Nc | RegionId::Thm2UpperNc => (asx + 4, (asx + 4) * (asx + 4)),
            RegionId::Thm3C => (asx + 3, (asx + 3) * (asx + 4)),
            RegionId::Cor1Nc | RegionId::NoCovertNc => (asx + 2, 1),
            RegionId::Cor2C | RegionId::NoCovertC => (asx + 1, 1),
            RegionId::Thm4UpperC => (ny, ny),
            RegionId::Cor3Yz => (ny, 1),
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionId::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown region `{s}`")))
    }
}

/// Numerical tolerances for feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bits of `D(P_Z || Q_0)`.
    pub cov: f64,
    /// Total variation of the state marginal mismatch.
    pub marg: f64,
    /// Bits below zero an inequality may sit.
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cov: 1e-4,
            marg: 1e-4,
            slack: 1e-6,
        }
    }
}
