//! Basic-event, cut-set and top-event quantification.
//!
//! All times are in hours. Top events can be approximated with the
//! Esary-Proschan form (the default), the rare-event sum, or computed exactly
//! by Shannon expansion for small event counts.

pub(crate) mod database;
mod exact;

pub use database::{FailureDatabase, DatabaseError};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmr::ShortList;

/// One FIT in failures per hour.
pub const FIT: f64 = 1e-9;
pub const HOURS_PER_YEAR: f64 = 8760.0;
/// Two years, the case-study mission time and proof-test interval.
pub const DEFAULT_RISK_TIME: f64 = 2.0 * HOURS_PER_YEAR;
/// Distinct-event limit of the exact method.
pub const EXACT_EVENT_LIMIT: usize = 25;

/// Below this `λτ` the dormant formula switches to its Taylor series.
const DORMANT_SERIES_BELOW: f64 = 1e-3;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuantError {
    #[error("no failure data for event `{0}`")]
    MissingData(String),
    #[error("event `{event}`: {message}")]
    InvalidModel { event: String, message: String },
    #[error("exact method supports at most {limit} distinct events, got {count}; use ep or re")]
    TooManyEvents { count: usize, limit: usize },
    #[error("{0}")]
    OutOfRange(String),
}

/// How a basic event becomes unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "UPPERCASE")]
pub enum FailureModel {
    /// Time-independent probability.
    Fixed { p: f64 },
    /// Detected failures repaired at rate `1/mttr`.
    Rate { lambda: f64, mttr: f64 },
    /// Undetected failures revealed by proof tests every `tau` hours.
    Dormant { lambda: f64, tau: f64 },
}

impl FailureModel {
    pub fn name(&self) -> &'static str {
        match self {
            FailureModel::Fixed { .. } => "FIXED",
            FailureModel::Rate { .. } => "RATE",
            FailureModel::Dormant { .. } => "DORMANT",
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            FailureModel::Fixed { .. } => 0.0,
            FailureModel::Rate { lambda, .. } | FailureModel::Dormant { lambda, .. } => lambda,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match *self {
            FailureModel::Fixed { p } => {
                finite("p", p)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("p must lie in [0, 1], got {p}"));
                }
            }
            FailureModel::Rate { lambda, mttr } => {
                finite("lambda", lambda)?;
                finite("mttr", mttr)?;
                if lambda < 0.0 {
                    return Err(format!("lambda must be non-negative, got {lambda}"));
                }
                if mttr <= 0.0 {
                    return Err(format!("mttr must be positive, got {mttr}"));
                }
            }
            FailureModel::Dormant { lambda, tau } => {
                finite("lambda", lambda)?;
                finite("tau", tau)?;
                if lambda < 0.0 {
                    return Err(format!("lambda must be non-negative, got {lambda}"));
                }
                if tau <= 0.0 {
                    return Err(format!("tau must be positive, got {tau}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Esary-Proschan.
    #[default]
    Ep,
    /// Rare-event sum.
    Re,
    /// Shannon expansion over the distinct events.
    Exact,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ep, Method::Re, Method::Exact];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ep => "ep",
            Method::Re => "re",
            Method::Exact => "exact",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ep" => Ok(Method::Ep),
            "re" => Ok(Method::Re),
            "exact" => Ok(Method::Exact),
            other => Err(format!("unknown method `{other}` (expected ep, re or exact)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantConfig {
    /// Risk assessment time in hours, used by the RATE model.
    pub risk_time: f64,
    pub method: Method,
}

impl Default for QuantConfig {
    fn default() -> Self {
        QuantConfig {
            risk_time: DEFAULT_RISK_TIME,
            method: Method::Ep,
        }
    }
}

/// Unavailability and frequency (per hour).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Measures {
    pub q: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopMeasures {
    pub method: Method,
    pub q: f64,
    pub w: f64,
    /// Per cut set, in input order.
    pub cut_sets: Vec<Measures>,
    /// Events shared by every cut set, factored out by Esary-Proschan.
    pub common_events: Vec<String>,
}

pub fn unavailability(m: &FailureModel, cfg: &QuantConfig) -> f64 {
    match *m {
        FailureModel::Fixed { p } => p,
        FailureModel::Rate { lambda, mttr } => {
            if lambda == 0.0 {
                return 0.0;
            }
            let s = lambda + 1.0 / mttr;
            lambda * -(-s * cfg.risk_time).exp_m1() / s
        }
        FailureModel::Dormant { lambda, tau } => dormant_q(lambda * tau),
    }
}

/// `1 − (1 − e^{−x})/x`, stable as `x → 0`.
fn dormant_q(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < DORMANT_SERIES_BELOW {
        // x/2! − x²/3! + x³/4! − …
        let mut term = x / 2.0;
        let mut sum = term;
        for n in 2..=6 {
            term *= -x / (n as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        1.0 - -(-x).exp_m1() / x
    }
}

pub fn event_frequency(m: &FailureModel, q: f64) -> f64 {
    match m {
        FailureModel::Fixed { .. } => 0.0,
        _ => m.lambda() * (1.0 - q),
    }
}

pub fn event_measures(m: &FailureModel, cfg: &QuantConfig) -> Measures {
    let q = unavailability(m, cfg);
    Measures {
        q,
        w: event_frequency(m, q),
    }
}

/// `Q = ∏ qᵢ`, `W = Σ wᵢ ∏_{j≠i} qⱼ`.
pub fn product_measures(events: &[Measures]) -> Measures {
    let q = events.iter().map(|e| e.q).product();
    let w = (0..events.len())
        .map(|i| {
            events[i].w
                * events
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, e)| e.q)
                    .product::<f64>()
        })
        .sum();
    Measures { q, w }
}

pub fn mcs_measures<S: AsRef<str>>(
    cut_set: &[S],
    db: &FailureDatabase,
    cfg: &QuantConfig,
) -> Result<Measures, QuantError> {
    let events = cut_set
        .iter()
        .map(|id| db.measures(id.as_ref(), cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(product_measures(&events))
}

/// `1 − ∏(1 − xᵢ)` without cancellation; exact for a single term.
fn union_probability(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |acc, x| acc + x - acc * x)
}

pub fn top_measures<S: AsRef<str>>(
    cut_sets: &[Vec<S>],
    db: &FailureDatabase,
    cfg: &QuantConfig,
) -> Result<TopMeasures, QuantError> {
    let ids: Vec<Vec<&str>> = cut_sets
        .iter()
        .map(|c| {
            let set: BTreeSet<&str> = c.iter().map(|s| s.as_ref()).collect();
            set.into_iter().collect()
        })
        .collect();
    let per_set = ids
        .iter()
        .map(|c| mcs_measures(c, db, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let common: Vec<String> = match ids.split_first() {
        Some((first, rest)) => first
            .iter()
            .filter(|e| rest.iter().all(|c| c.contains(e)))
            .map(|e| e.to_string())
            .collect(),
        None => Vec::new(),
    };

    let (q, w) = match cfg.method {
        Method::Ep => {
            let common_q: f64 = common
                .iter()
                .map(|e| db.measures(e, cfg).map(|m| m.q))
                .product::<Result<f64, _>>()?;
            let reduced = ids
                .iter()
                .map(|c| {
                    c.iter()
                        .filter(|e| !common.iter().any(|x| x == *e))
                        .map(|e| db.measures(e, cfg).map(|m| m.q))
                        .product::<Result<f64, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let q = if ids.is_empty() {
                0.0
            } else {
                common_q * union_probability(reduced)
            };
            let w = (0..per_set.len())
                .map(|i| {
                    per_set[i].w
                        * per_set
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != i)
                            .map(|(_, m)| 1.0 - m.q)
                            .product::<f64>()
                })
                .sum();
            (q, w)
        }
        Method::Re => (
            per_set.iter().map(|m| m.q).sum::<f64>().min(1.0),
            per_set.iter().map(|m| m.w).sum(),
        ),
        Method::Exact => exact::exact_measures(&ids, db, cfg)?,
    };
    Ok(TopMeasures {
        method: cfg.method,
        q,
        w,
        cut_sets: per_set,
        common_events: common,
    })
}

/// Quantifies a short list using its channel literals as event ids.
pub fn quantify_shortlist(
    sl: &ShortList,
    db: &FailureDatabase,
    cfg: &QuantConfig,
) -> Result<TopMeasures, QuantError> {
    top_measures(&sl.event_sets(), db, cfg)
}

/// `PFD_SIF = PFD_s + PFD_ls + PFD_fe`, capped at 1.
pub fn sif_pfd(parts: &[f64]) -> Result<f64, QuantError> {
    if let Some(bad) = parts.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(QuantError::OutOfRange(format!(
            "PFD contribution {bad} is not a probability"
        )));
    }
    Ok(parts.iter().sum::<f64>().min(1.0))
}
