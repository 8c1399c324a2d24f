//! Forward fault injection: an independent check of short lists by running
//! the program on injected channel states and comparing with the run on
//! intended readings.

pub mod fuzz;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbd::{ChannelId, CompiledProgram, EvalError, Program, Value};
use crate::fmr::{ChannelState, CutSet, Mode, ShortList};

/// Magnitude multipliers applied to `max(|intended|, 1)`.
pub const DEFAULT_MULTIPLIERS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_CHANNEL_CAP: usize = 8;
/// Violations kept in a report; the count covers all of them.
const MAX_LISTED: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{channels} channels exceed the enumeration cap of {cap}")]
    CapExceeded { channels: usize, cap: usize },
    #[error("no intended readings for {0}: declare a demand profile or pass one")]
    NoIntended(String),
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown net `{0}`")]
    UnknownNet(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid oracle configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Exact channel states with a deviation magnitude for each HI/LO channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub states: BTreeMap<ChannelId, ChannelState>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub magnitudes: BTreeMap<ChannelId, f64>,
}

impl Scenario {
    pub fn new(
        states: BTreeMap<ChannelId, ChannelState>,
        magnitudes: BTreeMap<ChannelId, f64>,
    ) -> Result<Self, OracleError> {
        for (ch, st) in &states {
            let deviated = matches!(st, ChannelState::Hi | ChannelState::Lo);
            match magnitudes.get(ch) {
                Some(d) if !deviated => {
                    return Err(OracleError::Scenario(format!("{ch} is {st} but has magnitude {d}")))
                }
                Some(d) if !(*d > 0.0 && d.is_finite()) => {
                    return Err(OracleError::Scenario(format!("{ch} magnitude {d} is not positive")))
                }
                None if deviated => {
                    return Err(OracleError::Scenario(format!("{ch} is {st} but has no magnitude")))
                }
                _ => {}
            }
        }
        if let Some(ch) = magnitudes.keys().find(|c| !states.contains_key(*c)) {
            return Err(OracleError::Scenario(format!("magnitude for unlisted channel {ch}")));
        }
        Ok(Scenario { states, magnitudes })
    }

    /// Every listed channel HEALTHY.
    pub fn healthy<'a>(channels: impl IntoIterator<Item = &'a str>) -> Self {
        Scenario {
            states: channels
                .into_iter()
                .map(|c| (c.to_string(), ChannelState::Healthy))
                .collect(),
            magnitudes: BTreeMap::new(),
        }
    }

    /// True when the states satisfy every literal of `cs`; HI and LO
    /// satisfy a HEALTHY literal.
    pub fn satisfies(&self, cs: &CutSet) -> bool {
        cs.literals().iter().all(|l| {
            self.states
                .get(&l.channel)
                .is_some_and(|s| *s == l.state || s.implies(l.state))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Intended value of every channel (flags clear).
    pub intended: BTreeMap<ChannelId, f64>,
    pub multipliers: Vec<f64>,
    pub channel_cap: usize,
}

impl OracleConfig {
    pub fn new(intended: BTreeMap<ChannelId, f64>) -> Self {
        OracleConfig {
            intended,
            multipliers: DEFAULT_MULTIPLIERS.to_vec(),
            channel_cap: DEFAULT_CHANNEL_CAP,
        }
    }

    /// Intended readings from `profile`, or from the program's demand
    /// profile for the target.
    pub fn for_target(p: &Program, target: &str, mode: Mode, profile: Option<&str>) -> Result<Self, OracleError> {
        let pr = match profile {
            Some(name) => p
                .profile(name)
                .ok_or_else(|| OracleError::UnknownProfile(name.to_string()))?,
            None => p
                .demand_profile(target, mode)
                .ok_or_else(|| OracleError::NoIntended(format!("{target}.{mode}")))?,
        };
        Ok(OracleConfig::new(pr.readings.clone()))
    }

    pub fn with_multipliers(mut self, m: impl Into<Vec<f64>>) -> Self {
        self.multipliers = m.into();
        self
    }

    fn check(&self) -> Result<(), OracleError> {
        if self.multipliers.is_empty() || self.multipliers.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(OracleError::Config("magnitude samples must be non-empty and positive".into()));
        }
        Ok(())
    }

    /// Sampled magnitudes for a channel.
    pub fn magnitudes(&self, channel: &str) -> Vec<f64> {
        let scale = self.intended.get(channel).map_or(1.0, |v| v.abs().max(1.0));
        self.multipliers.iter().map(|m| m * scale).collect()
    }
}

/// Deviation of `actual` from `intended`, if any.
pub fn observe(intended: Value, actual: Value) -> Option<Mode> {
    match (intended, actual) {
        (Value::Real(i), Value::Real(a)) if a > i => Some(Mode::H),
        (Value::Real(i), Value::Real(a)) if a < i => Some(Mode::L),
        (Value::Bool(false), Value::Bool(true)) => Some(Mode::T),
        (Value::Bool(true), Value::Bool(false)) => Some(Mode::F),
        _ => None,
    }
}

/// A compiled program with its intended run, ready for injection.
struct Harness {
    compiled: CompiledProgram,
    channels: Vec<ChannelId>,
    intended_inputs: Vec<(f64, bool)>,
    intended: Vec<Value>,
}

impl Harness {
    fn new(p: &Program, cfg: &OracleConfig) -> Result<Self, OracleError> {
        cfg.check()?;
        let compiled = CompiledProgram::compile(p)?;
        let channels: Vec<ChannelId> = compiled.channel_ids().map(str::to_string).collect();
        let intended_inputs = channels
            .iter()
            .map(|c| {
                cfg.intended
                    .get(c)
                    .map(|v| (*v, false))
                    .ok_or_else(|| EvalError::MissingReading(c.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let intended = compiled.run(&intended_inputs);
        Ok(Harness {
            compiled,
            channels,
            intended_inputs,
            intended,
        })
    }

    fn inputs(&self, states: &[ChannelState], deltas: &[f64]) -> Vec<(f64, bool)> {
        self.intended_inputs
            .iter()
            .zip(states.iter().zip(deltas))
            .map(|(&(v, _), (s, d))| match s {
                ChannelState::Healthy => (v, false),
                ChannelState::Faulty => (v, true),
                ChannelState::Hi => (v + d, false),
                ChannelState::Lo => (v - d, false),
            })
            .collect()
    }

    fn observe_net(&self, net: usize, states: &[ChannelState], deltas: &[f64], buf: &mut Vec<Value>) -> Option<Mode> {
        self.compiled.run_into(&self.inputs(states, deltas), buf);
        observe(self.intended[net], buf[net])
    }

    fn scenario(&self, states: &[ChannelState], deltas: &[f64]) -> Scenario {
        let mut s = Scenario {
            states: BTreeMap::new(),
            magnitudes: BTreeMap::new(),
        };
        for ((c, st), d) in self.channels.iter().zip(states).zip(deltas) {
            s.states.insert(c.clone(), *st);
            if matches!(st, ChannelState::Hi | ChannelState::Lo) {
                s.magnitudes.insert(c.clone(), *d);
            }
        }
        s
    }

    fn positional(&self, s: &Scenario) -> Result<(Vec<ChannelState>, Vec<f64>), OracleError> {
        let states = self
            .channels
            .iter()
            .map(|c| {
                s.states
                    .get(c)
                    .copied()
                    .ok_or_else(|| OracleError::Scenario(format!("no state for channel {c}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let deltas = self
            .channels
            .iter()
            .map(|c| s.magnitudes.get(c).copied().unwrap_or(0.0))
            .collect();
        Ok((states, deltas))
    }

    fn target(&self, p: &Program, target: &str) -> Result<usize, OracleError> {
        p.resolve_target(target)
            .and_then(|n| self.compiled.net_index(n))
            .ok_or_else(|| OracleError::UnknownNet(target.to_string()))
    }

    fn check_cap(&self, cfg: &OracleConfig) -> Result<(), OracleError> {
        if self.channels.len() > cfg.channel_cap {
            return Err(OracleError::CapExceeded {
                channels: self.channels.len(),
                cap: cfg.channel_cap,
            });
        }
        Ok(())
    }

    /// Every magnitude combination for the deviated channels of `states`.
    fn for_each_delta(&self, cfg: &OracleConfig, states: &[ChannelState], mut f: impl FnMut(&[f64]) -> bool) {
        let samples: Vec<Vec<f64>> = self
            .channels
            .iter()
            .zip(states)
            .map(|(c, s)| match s {
                ChannelState::Hi | ChannelState::Lo => cfg.magnitudes(c),
                _ => vec![0.0],
            })
            .collect();
        let mut idx = vec![0usize; samples.len()];
        let mut deltas: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        loop {
            if !f(&deltas) {
                return;
            }
            let mut i = 0;
            loop {
                if i == idx.len() {
                    return;
                }
                idx[i] += 1;
                if idx[i] < samples[i].len() {
                    deltas[i] = samples[i][idx[i]];
                    break;
                }
                idx[i] = 0;
                deltas[i] = samples[i][0];
                i += 1;
            }
        }
    }
}

/// Deviation observed on every program output under `s`.
pub fn run_scenario(
    p: &Program,
    s: &Scenario,
    cfg: &OracleConfig,
) -> Result<BTreeMap<String, Option<Mode>>, OracleError> {
    let h = Harness::new(p, cfg)?;
    let (states, deltas) = h.positional(s)?;
    let mut buf = Vec::new();
    h.compiled.run_into(&h.inputs(&states, &deltas), &mut buf);
    p.outputs
        .iter()
        .map(|(name, net)| {
            let i = h
                .compiled
                .net_index(net)
                .ok_or_else(|| OracleError::UnknownNet(net.clone()))?;
            Ok((name.clone(), observe(h.intended[i], buf[i])))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Completeness,
    Soundness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub scenario: Scenario,
    /// Deviation seen on the target; `None` when nothing was observed.
    pub observed: Option<Mode>,
    pub expected: String,
    /// Index of the cut set concerned, for soundness checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_set: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub check: CheckKind,
    pub target: String,
    pub mode: Mode,
    pub runs: u64,
    pub violation_count: usize,
    /// Up to the first 50 violations.
    pub violations: Vec<Violation>,
    /// Unwitnessed cut sets that carry an analysis warning.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exempt: Vec<usize>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Every state index in `0..4^n` decoded to channel states.
fn decode(mut code: usize, n: usize) -> Vec<ChannelState> {
    (0..n)
        .map(|_| {
            let s = ChannelState::ALL[code % 4];
            code /= 4;
            s
        })
        .collect()
}

/// Enumerates all exact-state assignments and magnitude samples; every run
/// that shows `mode` on `target` must satisfy some cut set.
pub fn check_completeness(
    p: &Program,
    target: &str,
    mode: Mode,
    sl: &ShortList,
    cfg: &OracleConfig,
) -> Result<OracleReport, OracleError> {
    let h = Harness::new(p, cfg)?;
    h.check_cap(cfg)?;
    let net = h.target(p, target)?;
    let n = h.channels.len();
    let total = 4usize.pow(n as u32);

    let (runs, violations) = (0..total)
        .into_par_iter()
        .map(|code| {
            let states = decode(code, n);
            let scenario = h.scenario(&states, &vec![0.0; n]);
            let covered = sl.cut_sets.iter().any(|cs| scenario.satisfies(cs));
            let mut runs = 0u64;
            let mut found = Vec::new();
            let mut buf = Vec::new();
            h.for_each_delta(cfg, &states, |deltas| {
                runs += 1;
                if !covered && h.observe_net(net, &states, deltas, &mut buf) == Some(mode) {
                    found.push(Violation {
                        scenario: h.scenario(&states, deltas),
                        observed: Some(mode),
                        expected: "a satisfied cut set".into(),
                        cut_set: None,
                    });
                }
                true
            });
            (runs, found)
        })
        .reduce(
            || (0, Vec::new()),
            |mut a, b| {
                a.0 += b.0;
                a.1.extend(b.1);
                a
            },
        );
    Ok(report(CheckKind::Completeness, target, mode, runs, violations, Vec::new()))
}

/// For each cut set, sets its channels to the literal states (all others
/// HEALTHY) and looks for a magnitude sample showing `mode` on `target`.
/// Unwitnessed cut sets carrying a warning are listed as exempt.
pub fn check_soundness(
    p: &Program,
    target: &str,
    mode: Mode,
    sl: &ShortList,
    cfg: &OracleConfig,
) -> Result<OracleReport, OracleError> {
    let h = Harness::new(p, cfg)?;
    h.check_cap(cfg)?;
    let net = h.target(p, target)?;

    let results: Vec<(u64, Option<Violation>)> = sl
        .cut_sets
        .par_iter()
        .enumerate()
        .map(|(i, cs)| {
            let mut states = vec![ChannelState::Healthy; h.channels.len()];
            for l in cs.literals() {
                if let Some(k) = h.channels.iter().position(|c| *c == l.channel) {
                    states[k] = l.state;
                }
            }
            let mut runs = 0u64;
            let mut witnessed = false;
            let mut buf = Vec::new();
            h.for_each_delta(cfg, &states, |deltas| {
                runs += 1;
                witnessed = h.observe_net(net, &states, deltas, &mut buf) == Some(mode);
                !witnessed
            });
            let v = (!witnessed).then(|| Violation {
                scenario: h.scenario(&states, &vec![0.0; states.len()]),
                observed: None,
                expected: format!("{target}.{mode} for some magnitude"),
                cut_set: Some(i),
            });
            (runs, v)
        })
        .collect();

    let runs = results.iter().map(|r| r.0).sum();
    let mut violations = Vec::new();
    let mut exempt = Vec::new();
    for (_, v) in results {
        let Some(v) = v else { continue };
        let i = v.cut_set.expect("soundness violations name a cut set");
        if sl.is_flagged(i) {
            exempt.push(i);
        } else {
            violations.push(v);
        }
    }
    Ok(report(CheckKind::Soundness, target, mode, runs, violations, exempt))
}

fn report(
    check: CheckKind,
    target: &str,
    mode: Mode,
    runs: u64,
    mut violations: Vec<Violation>,
    exempt: Vec<usize>,
) -> OracleReport {
    let violation_count = violations.len();
    violations.truncate(MAX_LISTED);
    OracleReport {
        check,
        target: target.to_string(),
        mode,
        runs,
        violation_count,
        violations,
        exempt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbd::parse_program;
    use crate::fmr::{CutSet, Target};

    fn wire() -> Program {
        parse_program(
            r#"{"channels": [{"id": "A", "value": "a", "flag": "fa"}],
                "blocks": [], "outputs": {"OUT": "a"}}"#,
        )
        .unwrap()
    }

    fn cfg() -> OracleConfig {
        OracleConfig::new([("A".to_string(), 5.0)].into())
    }

    #[test]
    fn healthy_run_shows_nothing() {
        let out = run_scenario(&wire(), &Scenario::healthy(["A"]), &cfg()).unwrap();
        assert_eq!(out["OUT"], None);
    }

    #[test]
    fn wire_against_hi() {
        let sl = ShortList::new(
            Target {
                net: "a".into(),
                mode: Mode::H,
            },
            vec![CutSet::new(["A:HI".parse().unwrap()])],
        );
        let c = check_completeness(&wire(), "OUT", Mode::H, &sl, &cfg()).unwrap();
        assert!(c.passed(), "{}", c.to_json());
        assert_eq!(c.runs, 1 + 1 + 4 + 4);
        assert!(check_soundness(&wire(), "OUT", Mode::H, &sl, &cfg()).unwrap().passed());

        let empty = ShortList::new(sl.target.clone(), vec![]);
        assert_eq!(check_completeness(&wire(), "OUT", Mode::H, &empty, &cfg()).unwrap().violation_count, 4);
    }

    #[test]
    fn scenario_validation() {
        let st = |s: ChannelState| BTreeMap::from([("A".to_string(), s)]);
        let d = |x: f64| BTreeMap::from([("A".to_string(), x)]);
        assert!(Scenario::new(st(ChannelState::Hi), d(1.0)).is_ok());
        assert!(Scenario::new(st(ChannelState::Hi), BTreeMap::new()).is_err());
        assert!(Scenario::new(st(ChannelState::Healthy), d(1.0)).is_err());
        assert!(Scenario::new(st(ChannelState::Lo), d(-1.0)).is_err());
    }

    #[test]
    fn empty_sample_set_is_rejected() {
        let bad = cfg().with_multipliers(vec![]);
        assert!(matches!(
            run_scenario(&wire(), &Scenario::healthy(["A"]), &bad),
            Err(OracleError::Config(_))
        ));
    }
}
