//! Backward traversal from an output literal to channel states.
//!
//! Without a demand context the rule table is applied as is. With one, every
//! net has a known intended value, which makes conditions decidable: a
//! condition that contradicts the intended value is a deviation, and one that
//! agrees with it is resolved structurally or taken as an assumption.

use std::collections::HashMap;

use super::rules::{backward_rule, RuleError};
use super::{AnalysisError, ChannelLiteral, ChannelState, Literal, Mode, Polarity, Term};
use crate::fbd::{Block, DataKind, Driver, NetId, Program, Semantics, Valuation, Value};
use crate::logic::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Request {
    Dev(Mode),
    Cond(Polarity),
}

struct Propagator<'a> {
    program: &'a Program,
    context: Option<&'a Valuation>,
    memo: HashMap<(NetId, Request), Formula<Term>>,
}

/// Derives the formula over channel states (plus traversal markers) that is
/// necessary for `net` to deviate in `mode`. `context` holds the intended
/// value of every net under the demand being analysed.
pub fn propagate(
    p: &Program,
    net: &str,
    mode: Mode,
    context: Option<&Valuation>,
) -> Result<Formula<Term>, AnalysisError> {
    let kinds = p.net_kinds();
    match kinds.get(net) {
        None => return Err(AnalysisError::UnknownNet(net.to_string())),
        Some(&k) if k != mode.kind() => {
            return Err(AnalysisError::ModeMismatch {
                net: net.to_string(),
                mode,
                kind: k,
            })
        }
        _ => {}
    }
    let mut prop = Propagator {
        program: p,
        context,
        memo: HashMap::new(),
    };
    prop.resolve(net, Request::Dev(mode))
}

impl Propagator<'_> {
    fn resolve(&mut self, net: &str, req: Request) -> Result<Formula<Term>, AnalysisError> {
        let key = (net.to_string(), req);
        if let Some(f) = self.memo.get(&key) {
            return Ok(f.clone());
        }
        let f = self.compute(net, req)?;
        self.memo.insert(key, f.clone());
        Ok(f)
    }

    fn compute(&mut self, net: &str, req: Request) -> Result<Formula<Term>, AnalysisError> {
        let p = self.program;
        let state = |ch: usize, s: ChannelState| {
            Formula::lit(Term::State(ChannelLiteral::new(p.channels[ch].id.clone(), s)))
        };
        let driver = p
            .driver(net)
            .ok_or_else(|| AnalysisError::UnknownNet(net.to_string()))?;
        let b = match driver {
            Driver::ChannelValue(c) => {
                return Ok(match req {
                    Request::Dev(Mode::H) => state(c, ChannelState::Hi),
                    Request::Dev(Mode::L) => state(c, ChannelState::Lo),
                    _ => Formula::False,
                })
            }
            Driver::ChannelFlag(c) => {
                return Ok(match req {
                    Request::Dev(Mode::T) | Request::Cond(Polarity::AT) => {
                        state(c, ChannelState::Faulty)
                    }
                    Request::Cond(Polarity::AF) => state(c, ChannelState::Healthy),
                    _ => Formula::False,
                })
            }
            Driver::Block(i) => &p.blocks[i],
        };

        match req {
            Request::Dev(mode) => {
                if let Some(v) = self.intended_bool(net) {
                    if mode.actual_bool() == Some(v) {
                        return Ok(Formula::False);
                    }
                }
                let body = match (self.context.is_some(), b.semantics()) {
                    (true, Semantics::Sel) => self.sel_in_context(b, mode)?,
                    (true, Semantics::Min | Semantics::Max) => self.extremum_in_context(b, mode)?,
                    _ => {
                        let rule = backward_rule(b, &Literal::dev(net, mode)).map_err(rule_error)?;
                        self.substitute(&rule)?
                    }
                };
                Ok(Formula::and([
                    Formula::lit(Term::Trace {
                        net: net.to_string(),
                        mode,
                    }),
                    body,
                ]))
            }
            Request::Cond(polarity) => match self.intended_bool(net) {
                Some(v) if v != polarity.value() => {
                    let mode = if v { Mode::F } else { Mode::T };
                    self.resolve(net, Request::Dev(mode))
                }
                Some(_) => match backward_rule(b, &Literal::cond(net, polarity)) {
                    Ok(rule) => Ok(Formula::and([
                        self.nominal(net, false),
                        self.substitute(&rule)?,
                    ])),
                    Err(RuleError::Unresolvable { .. }) => Ok(self.nominal(net, true)),
                    Err(e) => Err(rule_error(e)),
                },
                None => match backward_rule(b, &Literal::cond(net, polarity)) {
                    Ok(rule) => self.substitute(&rule),
                    Err(RuleError::Unresolvable { .. }) => Ok(Formula::lit(Term::Unresolved {
                        net: net.to_string(),
                        polarity,
                    })),
                    Err(e) => Err(rule_error(e)),
                },
            },
        }
    }

    fn substitute(&mut self, rule: &Formula<Literal>) -> Result<Formula<Term>, AnalysisError> {
        rule.try_map(&mut |l: &Literal| match l {
            Literal::Deviation { net, mode } => self.resolve(net, Request::Dev(*mode)),
            Literal::Condition { net, polarity } => self.resolve(net, Request::Cond(*polarity)),
            Literal::Channel(c) => Ok(Formula::lit(Term::State(c.clone()))),
        })
    }

    fn nominal(&self, net: &str, assumed: bool) -> Formula<Term> {
        Formula::lit(Term::Nominal {
            net: net.to_string(),
            assumed,
        })
    }

    fn intended(&self, net: &str) -> Option<Value> {
        self.context.and_then(|c| c.get(net).copied())
    }

    fn intended_bool(&self, net: &str) -> Option<bool> {
        self.intended(net).and_then(|v| v.as_bool())
    }

    fn intended_real(&self, net: &str) -> f64 {
        self.intended(net).and_then(|v| v.as_real()).unwrap_or(f64::NAN)
    }

    /// SEL with a known selector: either the selector keeps its value and the
    /// selected branch deviates, or the selector flips and the other branch's
    /// actual value lies on the deviating side of the intended output.
    fn sel_in_context(&mut self, b: &Block, mode: Mode) -> Result<Formula<Term>, AnalysisError> {
        let (c, a, bb) = (&b.inputs[0], &b.inputs[1], &b.inputs[2]);
        let s0 = self.intended_bool(c).unwrap_or(false);
        let (selected, other) = if s0 { (a, bb) } else { (bb, a) };

        let stay = self.resolve(c, Request::Cond(Polarity::from_bool(s0)))?;
        let selected_dev = self.resolve(selected, Request::Dev(mode))?;
        let term1 = Formula::and([stay, selected_dev]);

        let flip = self.resolve(c, Request::Dev(if s0 { Mode::F } else { Mode::T }))?;
        if flip.is_false() {
            return Ok(term1);
        }
        let exposed = match mode.kind() {
            DataKind::Bool => {
                let want = Polarity::from_bool(mode == Mode::T);
                self.resolve(other, Request::Cond(want))?
            }
            DataKind::Real => {
                let (o, s) = (self.intended_real(other), self.intended_real(selected));
                let beyond = if mode == Mode::H { o > s } else { o < s };
                if beyond {
                    let gap = Formula::and([
                        Formula::lit(Term::Bounded {
                            net: b.output.clone(),
                        }),
                        self.stays_put(other, mode.opposite())?,
                    ]);
                    Formula::or([gap, self.resolve(other, Request::Dev(mode))?])
                } else {
                    self.resolve(other, Request::Dev(mode))?
                }
            }
        };
        Ok(Formula::or([term1, Formula::and([flip, exposed])]))
    }

    /// MIN rising (MAX falling) needs every input at the extremum to move and
    /// the others not to overtake it.
    fn extremum_in_context(&mut self, b: &Block, mode: Mode) -> Result<Formula<Term>, AnalysisError> {
        let binding = matches!((b.semantics(), mode), (Semantics::Min, Mode::H) | (Semantics::Max, Mode::L));
        if !binding {
            let rule = backward_rule(b, &Literal::dev(b.output.clone(), mode)).map_err(rule_error)?;
            return self.substitute(&rule);
        }
        let ext = self.intended_real(&b.output);
        let mut parts = Vec::with_capacity(b.inputs.len());
        for net in &b.inputs {
            if self.intended_real(net) == ext {
                parts.push(self.resolve(net, Request::Dev(mode))?);
            } else {
                parts.push(self.stays_put(net, mode.opposite())?);
            }
        }
        Ok(Formula::and(parts))
    }

    /// TRUE when `net` cannot deviate in `mode`; otherwise an assumption that
    /// it does not deviate far enough to matter.
    fn stays_put(&mut self, net: &str, mode: Mode) -> Result<Formula<Term>, AnalysisError> {
        if self.resolve(net, Request::Dev(mode))?.is_false() {
            Ok(Formula::True)
        } else {
            Ok(self.nominal(net, true))
        }
    }
}

fn rule_error(e: RuleError) -> AnalysisError {
    AnalysisError::Rule(e.to_string())
}
