//! Per-block backward rules. Each rule states which input literals are
//! necessary for a literal on the block output.
//!
//! Only one rule (the AVG example) is given in published form; the rest of
//! the table is reconstructed from the block semantics and the case-study
//! short lists.

use thiserror::Error;

use super::{Literal, Mode, Polarity};
use crate::fbd::{Block, DataKind, Monotonicity, Semantics, Value};
use crate::logic::{combinations, Formula};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("no rule resolves condition {net}.{polarity}")]
    Unresolvable { net: String, polarity: Polarity },
    #[error("literal {literal} is not on the output of block {block}")]
    NotOnOutput { block: String, literal: String },
    #[error("mode {mode} does not apply to the output of {block_type} block {block}")]
    KindMismatch {
        block: String,
        block_type: &'static str,
        mode: Mode,
    },
}

/// Looks up the rule-table entry for `target` on the output of `b`.
pub fn backward_rule(b: &Block, target: &Literal) -> Result<Formula<Literal>, RuleError> {
    match target {
        Literal::Deviation { net, mode } if *net == b.output => deviation_rule(b, *mode),
        Literal::Condition { net, polarity } if *net == b.output => condition_rule(b, *polarity),
        other => Err(RuleError::NotOnOutput {
            block: b.id.clone(),
            literal: other.to_string(),
        }),
    }
}

fn deviation_rule(b: &Block, mode: Mode) -> Result<Formula<Literal>, RuleError> {
    let s = b.semantics();
    let ins = &b.inputs;
    let dev = |i: usize, m: Mode| Formula::lit(Literal::dev(ins[i].clone(), m));
    let cond = |i: usize, p: Polarity| Formula::lit(Literal::cond(ins[i].clone(), p));
    let mismatch = || RuleError::KindMismatch {
        block: b.id.clone(),
        block_type: s.type_name(),
        mode,
    };

    if let Semantics::Const(_) = s {
        return Ok(Formula::False);
    }
    if let Semantics::Sel = s {
        return Ok(Formula::or([
            Formula::and([cond(0, Polarity::AT), dev(1, mode)]),
            Formula::and([cond(0, Polarity::AF), dev(2, mode)]),
        ]));
    }
    if s.is_monotone_arithmetic() {
        if mode.kind() != DataKind::Real {
            return Err(mismatch());
        }
        let parts = b
            .block_type
            .inputs
            .iter()
            .enumerate()
            .filter_map(|(i, port)| match port.monotonicity {
                Monotonicity::Inc => Some(dev(i, mode)),
                Monotonicity::Dec => Some(dev(i, mode.opposite())),
                Monotonicity::None => None,
            });
        return Ok(Formula::or(parts.collect::<Vec<_>>()));
    }
    if mode.kind() != DataKind::Bool {
        return Err(mismatch());
    }
    let n = ins.len();
    Ok(match (s, mode) {
        (Semantics::Lt { .. }, Mode::T) => dev(0, Mode::L),
        (Semantics::Lt { .. }, Mode::F) => dev(0, Mode::H),
        (Semantics::Gt { .. }, Mode::T) => dev(0, Mode::H),
        (Semantics::Gt { .. }, Mode::F) => dev(0, Mode::L),
        (Semantics::Not, m) => dev(0, m.opposite()),
        (Semantics::And, Mode::F) | (Semantics::Or, Mode::T) => {
            Formula::or((0..n).map(|i| dev(i, mode)).collect::<Vec<_>>())
        }
        (Semantics::And, Mode::T) | (Semantics::Or, Mode::F) => {
            // One input deviates while every other input actually holds the
            // non-controlling value.
            let hold = Polarity::from_bool(mode == Mode::T);
            Formula::or(
                (0..n)
                    .map(|i| {
                        Formula::and(
                            std::iter::once(dev(i, mode))
                                .chain((0..n).filter(|&j| j != i).map(|j| cond(j, hold))),
                        )
                    })
                    .collect::<Vec<_>>(),
            )
        }
        (Semantics::Koon { k }, m) => {
            let (size, p) = if m == Mode::T {
                (*k, Polarity::AT)
            } else {
                (n + 1 - k, Polarity::AF)
            };
            Formula::or(
                combinations(n, size)
                    .into_iter()
                    .map(|set| {
                        let holds = set.iter().map(|&i| cond(i, p)).collect::<Vec<_>>();
                        let devs = set.iter().map(|&i| dev(i, m)).collect::<Vec<_>>();
                        Formula::and(holds.into_iter().chain([Formula::or(devs)]))
                    })
                    .collect::<Vec<_>>(),
            )
        }
        _ => return Err(mismatch()),
    })
}

fn condition_rule(b: &Block, polarity: Polarity) -> Result<Formula<Literal>, RuleError> {
    let ins = &b.inputs;
    let cond = |i: usize, p: Polarity| Formula::lit(Literal::cond(ins[i].clone(), p));
    let all = |p: Polarity| Formula::and((0..ins.len()).map(|i| cond(i, p)).collect::<Vec<_>>());
    let any = |p: Polarity| Formula::or((0..ins.len()).map(|i| cond(i, p)).collect::<Vec<_>>());
    Ok(match (b.semantics(), polarity) {
        (Semantics::And, Polarity::AT) | (Semantics::Or, Polarity::AF) => all(polarity),
        (Semantics::And, Polarity::AF) | (Semantics::Or, Polarity::AT) => any(polarity),
        (Semantics::Not, p) => cond(0, p.negate()),
        (Semantics::Const(Value::Bool(v)), p) => {
            if *v == p.value() {
                Formula::True
            } else {
                Formula::False
            }
        }
        _ => {
            return Err(RuleError::Unresolvable {
                net: b.output.clone(),
                polarity,
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::expand_dnf;
    use std::collections::BTreeSet;

    fn block(s: Semantics, n: usize) -> Block {
        Block::new("b", s, (1..=n).map(|i| format!("x{i}")).collect(), "y")
    }

    fn dnf(f: &Formula<Literal>) -> BTreeSet<BTreeSet<String>> {
        expand_dnf(f, 1000)
            .unwrap()
            .into_iter()
            .map(|c| c.into_iter().map(|l| l.to_string()).collect())
            .collect()
    }

    fn sets(v: &[&[&str]]) -> BTreeSet<BTreeSet<String>> {
        v.iter().map(|c| c.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn avg_high_needs_some_high_input() {
        let f = backward_rule(&block(Semantics::Avg, 2), &Literal::dev("y", Mode::H)).unwrap();
        assert_eq!(dnf(&f), sets(&[&["x1.h"], &["x2.h"]]));
    }

    #[test]
    fn sub_swaps_direction_on_subtrahend() {
        let f = backward_rule(&block(Semantics::Sub, 2), &Literal::dev("y", Mode::H)).unwrap();
        assert_eq!(dnf(&f), sets(&[&["x1.h"], &["x2.l"]]));
    }

    #[test]
    fn constant_cannot_deviate() {
        let c = Block::new("c", Semantics::Const(Value::Real(5.0)), vec![], "y");
        assert_eq!(backward_rule(&c, &Literal::dev("y", Mode::H)).unwrap(), Formula::False);
    }

    #[test]
    fn or_false_needs_other_inputs_actually_false() {
        let f = backward_rule(&block(Semantics::Or, 2), &Literal::dev("y", Mode::F)).unwrap();
        assert_eq!(dnf(&f), sets(&[&["x1.f", "x2.aF"], &["x2.f", "x1.aF"]]));
    }

    #[test]
    fn two_out_of_three_false() {
        let f = backward_rule(&block(Semantics::Koon { k: 2 }, 3), &Literal::dev("y", Mode::F)).unwrap();
        let d = dnf(&f);
        assert_eq!(d.len(), 6);
        assert!(d.contains(&sets(&[&["x1.aF", "x2.aF", "x1.f"]]).pop_first().unwrap()));
    }

    #[test]
    fn comparator_and_not() {
        let lt = block(Semantics::Lt { threshold: 1.0 }, 1);
        assert_eq!(dnf(&backward_rule(&lt, &Literal::dev("y", Mode::T)).unwrap()), sets(&[&["x1.l"]]));
        let gt = block(Semantics::Gt { threshold: 1.0 }, 1);
        assert_eq!(dnf(&backward_rule(&gt, &Literal::dev("y", Mode::T)).unwrap()), sets(&[&["x1.h"]]));
        let not = block(Semantics::Not, 1);
        assert_eq!(dnf(&backward_rule(&not, &Literal::dev("y", Mode::F)).unwrap()), sets(&[&["x1.t"]]));
        assert_eq!(
            dnf(&backward_rule(&not, &Literal::cond("y", Polarity::AT)).unwrap()),
            sets(&[&["x1.aF"]])
        );
    }

    #[test]
    fn sel_case_split() {
        let f = backward_rule(&block(Semantics::Sel, 3), &Literal::dev("y", Mode::L)).unwrap();
        assert_eq!(dnf(&f), sets(&[&["x1.aT", "x2.l"], &["x1.aF", "x3.l"]]));
    }

    #[test]
    fn conditions() {
        let and = block(Semantics::And, 2);
        assert_eq!(
            dnf(&backward_rule(&and, &Literal::cond("y", Polarity::AT)).unwrap()),
            sets(&[&["x1.aT", "x2.aT"]])
        );
        assert_eq!(
            dnf(&backward_rule(&and, &Literal::cond("y", Polarity::AF)).unwrap()),
            sets(&[&["x1.aF"], &["x2.aF"]])
        );
        let t = Block::new("c", Semantics::Const(Value::Bool(true)), vec![], "y");
        assert_eq!(backward_rule(&t, &Literal::cond("y", Polarity::AT)).unwrap(), Formula::True);
        assert_eq!(backward_rule(&t, &Literal::cond("y", Polarity::AF)).unwrap(), Formula::False);
        let lt = block(Semantics::Lt { threshold: 0.0 }, 1);
        assert!(matches!(
            backward_rule(&lt, &Literal::cond("y", Polarity::AT)),
            Err(RuleError::Unresolvable { .. })
        ));
    }

    #[test]
    fn wrong_net_is_rejected() {
        let lt = block(Semantics::Lt { threshold: 0.0 }, 1);
        assert!(matches!(
            backward_rule(&lt, &Literal::dev("x1", Mode::L)),
            Err(RuleError::NotOnOutput { .. })
        ));
        assert!(matches!(
            backward_rule(&lt, &Literal::dev("y", Mode::H)),
            Err(RuleError::KindMismatch { .. })
        ));
    }
}
