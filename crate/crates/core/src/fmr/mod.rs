//! Failure mode reasoning: from a nominated output deviation back to the
//! combinations of channel states that can cause it.
//!
//! ```text
//! propagate ──► to_dnf ──► minimize ──► ShortList
//! ```

mod literal;
mod minimize;
mod propagate;
mod rules;

pub use literal::{ChannelLiteral, ChannelState, Literal, LiteralParseError, Mode, Polarity, Term};
pub use minimize::minimize;
pub use propagate::propagate;
pub use rules::{backward_rule, RuleError};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbd::{CompiledProgram, DataKind, Diagnostic, EvalError, NetId, Program};
use crate::logic::{expand_dnf, DnfTooLarge, Formula, DEFAULT_DNF_CAP};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("program is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown net `{0}`")]
    UnknownNet(String),
    #[error("mode {mode} does not apply to {kind} net `{net}`")]
    ModeMismatch {
        net: String,
        mode: Mode,
        kind: DataKind,
    },
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    TooLarge(#[from] DnfTooLarge),
    #[error("{0}")]
    Rule(String),
}

/// A minimal conjunction of channel states, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutSet(Vec<ChannelLiteral>);

impl CutSet {
    /// Sorts and deduplicates.
    pub fn new(literals: impl IntoIterator<Item = ChannelLiteral>) -> Self {
        let set: BTreeSet<ChannelLiteral> = literals.into_iter().collect();
        CutSet(set.into_iter().collect())
    }

    pub fn literals(&self) -> &[ChannelLiteral] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every literal of `other` is implied by some literal of `self`.
    pub fn implies(&self, other: &CutSet) -> bool {
        other.0.iter().all(|y| self.0.iter().any(|x| x.implies(y)))
    }

    /// Event ids of the literals, for quantification.
    pub fn event_ids(&self) -> Vec<String> {
        self.0.iter().map(|l| l.to_string()).collect()
    }
}

impl PartialOrd for CutSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CutSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for CutSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("TRUE");
        }
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(" ∧ "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningKind {
    /// A condition no rule could resolve was replaced by TRUE.
    Unresolvable,
    /// A net was assumed to keep its intended value.
    Assumption,
    /// A deviation comes from switching to a fixed value and has a fixed
    /// size, so a downstream threshold may not be crossed.
    Bounded,
}

/// Cut sets that rest on an over-approximation. Such cut sets are
/// conservative: they may be spurious but never hide a real cause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub kind: WarningKind,
    pub condition: String,
    /// Indices into [`ShortList::cut_sets`].
    pub cut_sets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub net: NetId,
    pub mode: Mode,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.net, self.mode)
    }
}

/// The minimized result of one analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortList {
    pub target: Target,
    /// Name of the demand profile the analysis ran under, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub cut_sets: Vec<CutSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl ShortList {
    pub fn new(target: Target, cut_sets: Vec<CutSet>) -> Self {
        ShortList {
            target,
            profile: None,
            cut_sets,
            warnings: Vec::new(),
        }
    }

    /// True when cut set `i` carries any warning.
    pub fn is_flagged(&self, i: usize) -> bool {
        self.warnings.iter().any(|w| w.cut_sets.contains(&i))
    }

    pub fn event_sets(&self) -> Vec<Vec<String>> {
        self.cut_sets.iter().map(CutSet::event_ids).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("short lists always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per cut set with `CHANNEL:STATE` cells padded to a common
    /// width, in the layout of a printed short-list table.
    pub fn to_table_csv(&self) -> String {
        let cols = self.cut_sets.iter().map(CutSet::len).max().unwrap_or(0);
        let width = self
            .cut_sets
            .iter()
            .flat_map(|c| c.literals().iter().map(|l| l.to_string().len()))
            .max()
            .unwrap_or(0);
        let row_width = self.cut_sets.len().to_string().len().max(2);
        let mut out = format!("{:<row_width$}", "no");
        for i in 1..=cols {
            out.push_str(&format!(",{:<width$}", format!("literal_{i}")));
        }
        out.push('\n');
        for (i, cs) in self.cut_sets.iter().enumerate() {
            out.push_str(&format!("{:<row_width$}", i + 1));
            for j in 0..cols {
                let cell = cs.literals().get(j).map(|l| l.to_string()).unwrap_or_default();
                out.push_str(&format!(",{cell:<width$}"));
            }
            out.push('\n');
        }
        out
    }

    /// Reads the cut sets back from [`ShortList::to_table_csv`] output.
    pub fn cut_sets_from_table_csv(text: &str) -> Result<Vec<CutSet>, LiteralParseError> {
        text.lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .skip(1)
                    .map(str::trim)
                    .filter(|c| !c.is_empty())
                    .map(str::parse)
                    .collect::<Result<Vec<ChannelLiteral>, _>>()
                    .map(CutSet::new)
            })
            .collect()
    }
}

/// Which intended readings an analysis runs under.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum ProfileChoice {
    /// The program's profile declaring a demand on the target, or none.
    #[default]
    Demand,
    Named(String),
    /// Apply the rule table with no intended values.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub profile: ProfileChoice,
    pub dnf_cap: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            profile: ProfileChoice::Demand,
            dnf_cap: DEFAULT_DNF_CAP,
        }
    }
}

/// Full DNF of a propagated formula.
pub fn to_dnf(f: &Formula<Term>, cap: usize) -> Result<Vec<BTreeSet<Term>>, DnfTooLarge> {
    expand_dnf(f, cap)
}

/// Short list for `target` (output name or net id) deviating in `mode`.
pub fn analyze(p: &Program, target: &str, mode: Mode) -> Result<ShortList, AnalysisError> {
    analyze_with(p, target, mode, &AnalysisOptions::default())
}

pub fn analyze_with(
    p: &Program,
    target: &str,
    mode: Mode,
    opts: &AnalysisOptions,
) -> Result<ShortList, AnalysisError> {
    let compiled = CompiledProgram::compile(p).map_err(|e| match e {
        EvalError::Invalid(d) => AnalysisError::Invalid(d),
        other => AnalysisError::Eval(other),
    })?;
    let net = p
        .resolve_target(target)
        .ok_or_else(|| AnalysisError::UnknownNet(target.to_string()))?
        .to_string();
    let profile = match &opts.profile {
        ProfileChoice::Demand => p.demand_profile(&net, mode),
        ProfileChoice::Named(name) => Some(
            p.profile(name)
                .ok_or_else(|| AnalysisError::UnknownProfile(name.clone()))?,
        ),
        ProfileChoice::None => None,
    };
    let context = profile
        .map(|pr| compiled.evaluate(&pr.intended_reading()))
        .transpose()?;

    let formula = propagate(p, &net, mode, context.as_ref())?;
    let conjuncts = to_dnf(&formula, opts.dnf_cap)?;
    let (cut_sets, warnings) = minimize::minimize_terms(conjuncts);
    Ok(ShortList {
        target: Target { net, mode },
        profile: profile.map(|pr| pr.name.clone()),
        cut_sets,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbd::parse_program;

    fn wire() -> Program {
        parse_program(
            r#"{"channels": [{"id": "A", "value": "a", "flag": "fa"}],
                "blocks": [], "outputs": {"OUT": "a"}}"#,
        )
        .unwrap()
    }

    #[test]
    fn straight_wire_gives_hi() {
        let sl = analyze(&wire(), "OUT", Mode::H).unwrap();
        assert_eq!(sl.cut_sets, vec![CutSet::new(["A:HI".parse().unwrap()])]);
        assert!(sl.warnings.is_empty());
    }

    #[test]
    fn unknown_target() {
        assert_eq!(
            analyze(&wire(), "NO_SUCH_NET", Mode::H),
            Err(AnalysisError::UnknownNet("NO_SUCH_NET".into()))
        );
    }

    #[test]
    fn table_csv_round_trip() {
        let sl = ShortList::new(
            Target {
                net: "y".into(),
                mode: Mode::T,
            },
            vec![
                CutSet::new(["A:FAULTY".parse().unwrap()]),
                CutSet::new(["A:HI".parse().unwrap(), "B:HEALTHY".parse().unwrap()]),
            ],
        );
        let csv = sl.to_table_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].len(), lines[2].len());
        assert_eq!(ShortList::cut_sets_from_table_csv(&csv).unwrap(), sl.cut_sets);
        assert_eq!(ShortList::from_json(&sl.to_json()).unwrap(), sl);
    }
}
