//! Reduction of DNF conjuncts to a minimal, canonically ordered short list.

use std::collections::{BTreeMap, BTreeSet};

use super::{ChannelLiteral, CutSet, Term, Warning, WarningKind};

/// Minimizes plain channel-state conjuncts: drops contradictions, absorbs
/// implied literals, removes subsumed conjuncts and sorts canonically.
pub fn minimize(candidates: impl IntoIterator<Item = BTreeSet<ChannelLiteral>>) -> Vec<CutSet> {
    let flagged = candidates
        .into_iter()
        .filter_map(normalize)
        .map(|lits| (lits, BTreeSet::new()));
    let (cut_sets, _) = reduce(flagged);
    cut_sets
}

type Flag = (WarningKind, String);

/// Minimizes conjuncts of propagated terms. Conjuncts whose traversal
/// markers conflict are infeasible and dropped; assumption markers become
/// warnings on the surviving cut sets.
pub(crate) fn minimize_terms(conjuncts: Vec<BTreeSet<Term>>) -> (Vec<CutSet>, Vec<Warning>) {
    let flagged = conjuncts.into_iter().filter_map(|terms| {
        let mut lits = BTreeSet::new();
        let mut flags = BTreeSet::new();
        let mut traced: BTreeMap<&str, super::Mode> = BTreeMap::new();
        let mut held: BTreeSet<&str> = BTreeSet::new();
        for t in &terms {
            match t {
                Term::State(l) => {
                    lits.insert(l.clone());
                }
                Term::Trace { net, mode } => {
                    if traced.insert(net, *mode).is_some_and(|m| m != *mode) {
                        return None;
                    }
                }
                Term::Nominal { net, assumed } => {
                    if *assumed {
                        flags.insert((WarningKind::Assumption, format!("{net} keeps its intended value")));
                    } else {
                        held.insert(net);
                    }
                }
                Term::Unresolved { net, polarity } => {
                    flags.insert((WarningKind::Unresolvable, format!("{net}.{polarity}")));
                }
                Term::Bounded { net } => {
                    flags.insert((WarningKind::Bounded, format!("{net} deviates by a fixed gap")));
                }
            }
        }
        if held.iter().any(|n| traced.contains_key(n)) {
            return None;
        }
        normalize(lits).map(|l| (l, flags))
    });
    reduce(flagged)
}

/// Drops contradictory conjuncts and absorbs implied literals, leaving at
/// most one literal per channel.
fn normalize(lits: BTreeSet<ChannelLiteral>) -> Option<Vec<ChannelLiteral>> {
    let mut per_channel: BTreeMap<&str, &ChannelLiteral> = BTreeMap::new();
    for l in &lits {
        match per_channel.get(l.channel.as_str()) {
            None => {
                per_channel.insert(&l.channel, l);
            }
            Some(prev) if prev.contradicts(l) => return None,
            Some(prev) => {
                if l.implies(prev) {
                    per_channel.insert(&l.channel, l);
                }
            }
        }
    }
    Some(per_channel.into_values().cloned().collect())
}

fn reduce(
    flagged: impl Iterator<Item = (Vec<ChannelLiteral>, BTreeSet<Flag>)>,
) -> (Vec<CutSet>, Vec<Warning>) {
    // Duplicates keep the smallest set of flags.
    let mut best: BTreeMap<CutSet, BTreeSet<Flag>> = BTreeMap::new();
    for (lits, flags) in flagged {
        let cs = CutSet::new(lits);
        match best.get(&cs) {
            Some(prev) if (prev.len(), prev) <= (flags.len(), &flags) => {}
            _ => {
                best.insert(cs, flags);
            }
        }
    }
    let all: Vec<(CutSet, BTreeSet<Flag>)> = best.into_iter().collect();
    let kept: Vec<&(CutSet, BTreeSet<Flag>)> = all
        .iter()
        .filter(|(x, _)| !all.iter().any(|(y, _)| y != x && x.implies(y)))
        .collect();

    let mut warnings: BTreeMap<Flag, Vec<usize>> = BTreeMap::new();
    let mut cut_sets = Vec::with_capacity(kept.len());
    for (i, (cs, flags)) in kept.into_iter().enumerate() {
        for f in flags {
            warnings.entry(f.clone()).or_default().push(i);
        }
        cut_sets.push(cs.clone());
    }
    let warnings = warnings
        .into_iter()
        .map(|((kind, condition), cut_sets)| Warning {
            kind,
            condition,
            cut_sets,
        })
        .collect();
    (cut_sets, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmr::ChannelState;

    fn lits(v: &[&str]) -> BTreeSet<ChannelLiteral> {
        v.iter().map(|s| s.parse().unwrap()).collect()
    }

    fn render(cs: &[CutSet]) -> Vec<String> {
        cs.iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn hi_absorbs_healthy() {
        assert_eq!(render(&minimize([lits(&["A:HI", "A:HEALTHY"])])), vec!["A:HI"]);
    }

    #[test]
    fn hi_and_lo_is_contradictory() {
        assert!(minimize([lits(&["A:HI", "A:LO"])]).is_empty());
        assert!(minimize([lits(&["A:FAULTY", "A:HEALTHY"])]).is_empty());
    }

    #[test]
    fn subsumption_under_implication() {
        let out = minimize([
            lits(&["A:HI", "P:HI", "B:HEALTHY"]),
            lits(&["A:HEALTHY", "B:HEALTHY", "P:HI"]),
        ]);
        assert_eq!(render(&out), vec!["A:HEALTHY ∧ B:HEALTHY ∧ P:HI"]);
    }

    #[test]
    fn canonical_order_is_size_then_lexicographic() {
        let out = minimize([
            lits(&["B:LO", "C:LO"]),
            lits(&["A:FAULTY"]),
            lits(&["A:HI", "C:LO"]),
        ]);
        assert_eq!(render(&out), vec!["A:FAULTY", "A:HI ∧ C:LO", "B:LO ∧ C:LO"]);
        assert!(out[1].literals().iter().all(|l| l.state != ChannelState::Healthy));
    }

    #[test]
    fn conflicting_traces_are_infeasible() {
        let hi = Term::State("A:HI".parse().unwrap());
        let up = Term::Trace {
            net: "x".into(),
            mode: crate::fmr::Mode::H,
        };
        let down = Term::Trace {
            net: "x".into(),
            mode: crate::fmr::Mode::L,
        };
        let held = Term::Nominal {
            net: "x".into(),
            assumed: false,
        };
        let (cs, _) = minimize_terms(vec![
            BTreeSet::from([hi.clone(), up.clone(), down]),
            BTreeSet::from([hi.clone(), up, held]),
        ]);
        assert!(cs.is_empty());
    }

    #[test]
    fn duplicate_keeps_fewest_assumptions() {
        let hi = Term::State("A:HI".parse().unwrap());
        let guess = Term::Nominal {
            net: "y".into(),
            assumed: true,
        };
        let (cs, w) = minimize_terms(vec![BTreeSet::from([hi.clone(), guess.clone()])]);
        assert_eq!(cs.len(), 1);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].cut_sets, vec![0]);
        let (_, w) = minimize_terms(vec![BTreeSet::from([hi.clone(), guess]), BTreeSet::from([hi])]);
        assert!(w.is_empty());
    }
}
