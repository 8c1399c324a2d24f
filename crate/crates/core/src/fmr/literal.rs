//! Atoms of the failure-mode calculus.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbd::{ChannelId, DataKind, NetId};

/// Deviation of a net's actual value from its intended value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Reads too high (REAL).
    H,
    /// Reads too low (REAL).
    L,
    /// Reads True, should be False.
    T,
    /// Reads False, should be True.
    F,
}

impl Mode {
    pub fn kind(self) -> DataKind {
        match self {
            Mode::H | Mode::L => DataKind::Real,
            Mode::T | Mode::F => DataKind::Bool,
        }
    }

    pub fn opposite(self) -> Mode {
        match self {
            Mode::H => Mode::L,
            Mode::L => Mode::H,
            Mode::T => Mode::F,
            Mode::F => Mode::T,
        }
    }

    /// The actual Boolean value a t/f deviation produces.
    pub fn actual_bool(self) -> Option<bool> {
        match self {
            Mode::T => Some(true),
            Mode::F => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::H => "h",
            Mode::L => "l",
            Mode::T => "t",
            Mode::F => "f",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid {what} `{text}`")]
pub struct LiteralParseError {
    pub what: &'static str,
    pub text: String,
}

impl FromStr for Mode {
    type Err = LiteralParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h" => Ok(Mode::H),
            "l" => Ok(Mode::L),
            "t" => Ok(Mode::T),
            "f" => Ok(Mode::F),
            _ => Err(LiteralParseError {
                what: "mode",
                text: s.to_string(),
            }),
        }
    }
}

/// The actual value of a BOOL net, whether or not it deviates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "aT")]
    AT,
    #[serde(rename = "aF")]
    AF,
}

impl Polarity {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Polarity::AT
        } else {
            Polarity::AF
        }
    }

    pub fn value(self) -> bool {
        self == Polarity::AT
    }

    pub fn negate(self) -> Self {
        Polarity::from_bool(!self.value())
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::AT => "aT",
            Polarity::AF => "aF",
        })
    }
}

/// State of one input channel. HI and LO are undetected deviations, so both
/// imply HEALTHY (no detected fault).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChannelState {
    Healthy,
    Faulty,
    Hi,
    Lo,
}

impl ChannelState {
    pub const ALL: [ChannelState; 4] = [
        ChannelState::Healthy,
        ChannelState::Faulty,
        ChannelState::Hi,
        ChannelState::Lo,
    ];

    /// `self ⟹ other` on the same channel.
    pub fn implies(self, other: ChannelState) -> bool {
        self == other
            || (other == ChannelState::Healthy
                && matches!(self, ChannelState::Hi | ChannelState::Lo))
    }

    pub fn contradicts(self, other: ChannelState) -> bool {
        self != other && !self.implies(other) && !other.implies(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelState::Healthy => "HEALTHY",
            ChannelState::Faulty => "FAULTY",
            ChannelState::Hi => "HI",
            ChannelState::Lo => "LO",
        }
    }
}

impl fmt::Display for ChannelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelState {
    type Err = LiteralParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChannelState::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| LiteralParseError {
                what: "channel state",
                text: s.to_string(),
            })
    }
}

/// `CHANNEL:STATE`, e.g. `IW512:HI`. Also the basic-event id of the state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ChannelLiteral {
    pub channel: ChannelId,
    pub state: ChannelState,
}

impl ChannelLiteral {
    pub fn new(channel: impl Into<ChannelId>, state: ChannelState) -> Self {
        ChannelLiteral {
            channel: channel.into(),
            state,
        }
    }

    pub fn implies(&self, other: &ChannelLiteral) -> bool {
        self.channel == other.channel && self.state.implies(other.state)
    }

    pub fn contradicts(&self, other: &ChannelLiteral) -> bool {
        self.channel == other.channel && self.state.contradicts(other.state)
    }
}

impl fmt::Display for ChannelLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.channel, self.state)
    }
}

impl FromStr for ChannelLiteral {
    type Err = LiteralParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (channel, state) = s.rsplit_once(':').ok_or_else(|| LiteralParseError {
            what: "channel literal",
            text: s.to_string(),
        })?;
        if channel.is_empty() {
            return Err(LiteralParseError {
                what: "channel literal",
                text: s.to_string(),
            });
        }
        Ok(ChannelLiteral::new(channel, state.parse()?))
    }
}

impl TryFrom<String> for ChannelLiteral {
    type Error = LiteralParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ChannelLiteral> for String {
    fn from(l: ChannelLiteral) -> String {
        l.to_string()
    }
}

/// A rule-level literal: a deviation or condition on a net, or a channel state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Deviation { net: NetId, mode: Mode },
    Condition { net: NetId, polarity: Polarity },
    Channel(ChannelLiteral),
}

impl Literal {
    pub fn dev(net: impl Into<NetId>, mode: Mode) -> Self {
        Literal::Deviation {
            net: net.into(),
            mode,
        }
    }

    pub fn cond(net: impl Into<NetId>, polarity: Polarity) -> Self {
        Literal::Condition {
            net: net.into(),
            polarity,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Deviation { net, mode } => write!(f, "{net}.{mode}"),
            Literal::Condition { net, polarity } => write!(f, "{net}.{polarity}"),
            Literal::Channel(c) => write!(f, "{c}"),
        }
    }
}

/// Atoms of a propagated formula. Besides channel states, propagation leaves
/// markers that record which internal nets an explanation relies on; they are
/// consumed by minimization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    State(ChannelLiteral),
    /// The explanation needs `net` to deviate in `mode`.
    Trace { net: NetId, mode: Mode },
    /// The explanation needs `net` to keep its intended value. `assumed`
    /// marks requirements taken on trust rather than derived.
    Nominal { net: NetId, assumed: bool },
    /// A condition that no rule could resolve, replaced by TRUE.
    Unresolved { net: NetId, polarity: Polarity },
    /// `net` deviates only by the fixed gap to a switched-in value, which
    /// may be too small to matter downstream.
    Bounded { net: NetId },
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::State(c) => write!(f, "{c}"),
            Term::Trace { net, mode } => write!(f, "{net}.{mode}"),
            Term::Nominal { net, assumed } => {
                write!(f, "{net}.nominal{}", if *assumed { "?" } else { "" })
            }
            Term::Unresolved { net, polarity } => write!(f, "{net}.{polarity}?"),
            Term::Bounded { net } => write!(f, "{net}.bounded?"),
        }
    }
}
