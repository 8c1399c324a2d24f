//! Top-down substitution of component logic into a Boolean formula over
//! basic events, then DNF and subsumption.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::model::{event_id, PortDeviation, PortRef, SystemModel, TopEvent};
use super::SystemError;
use crate::logic::{combinations, expand_dnf, minimize_sets, Formula, DEFAULT_DNF_CAP};
use crate::quant::{top_measures, FailureDatabase, QuantConfig, TopMeasures};

/// Minimal cut sets of one top event, each a sorted list of basic-event ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemCutSets {
    pub top: String,
    pub cut_sets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemAnalysis {
    pub cut_sets: SystemCutSets,
    pub measures: TopMeasures,
}

struct Synth<'a> {
    m: &'a SystemModel,
    memo: HashMap<(String, PortDeviation), Formula<String>>,
    stack: Vec<(String, PortDeviation)>,
}

impl Synth<'_> {
    fn out_port(&mut self, instance: &str, dev: &PortDeviation) -> Result<Formula<String>, SystemError> {
        let key = (instance.to_string(), dev.clone());
        if let Some(f) = self.memo.get(&key) {
            return Ok(f.clone());
        }
        if self.stack.contains(&key) {
            return Err(SystemError::Cycle(format!("{instance}.{dev}")));
        }
        self.stack.push(key.clone());

        let f = if let Some(sl) = self.m.bindings.get(&key) {
            Formula::or(
                sl.event_sets()
                    .into_iter()
                    .map(|c| Formula::and(c.into_iter().map(Formula::lit))),
            )
        } else {
            let ty = self.m.type_of(instance)?;
            match ty.logic.get(dev) {
                Some(expr) => self.expr(instance, expr)?,
                None => Formula::False,
            }
        };

        self.stack.pop();
        self.memo.insert(key, f.clone());
        Ok(f)
    }

    fn expr(&mut self, instance: &str, e: &Expr) -> Result<Formula<String>, SystemError> {
        Ok(match e {
            Expr::Event(name) => Formula::lit(event_id(instance, name)),
            Expr::Port { port, class } => {
                let to = PortRef {
                    instance: instance.to_string(),
                    port: port.clone(),
                };
                let from = self
                    .m
                    .connections
                    .get(&to)
                    .ok_or_else(|| SystemError::Dangling(to.to_string()))?
                    .clone();
                self.out_port(
                    &from.instance,
                    &PortDeviation {
                        port: from.port,
                        class: class.clone(),
                    },
                )?
            }
            Expr::And(xs) => Formula::and(self.all(instance, xs)?),
            Expr::Or(xs) => Formula::or(self.all(instance, xs)?),
            Expr::Koon { k, args } => {
                let parts = self.all(instance, args)?;
                Formula::or(
                    combinations(parts.len(), *k)
                        .into_iter()
                        .map(|pick| Formula::and(pick.into_iter().map(|i| parts[i].clone()))),
                )
            }
        })
    }

    fn all(&mut self, instance: &str, xs: &[Expr]) -> Result<Vec<Formula<String>>, SystemError> {
        xs.iter().map(|x| self.expr(instance, x)).collect()
    }
}

/// Boolean formula of `top` over basic-event ids.
pub fn top_formula(m: &SystemModel, top: &TopEvent) -> Result<Formula<String>, SystemError> {
    let mut s = Synth {
        m,
        memo: HashMap::new(),
        stack: Vec::new(),
    };
    if !m.type_of(&top.instance)?.outputs.contains(&top.deviation.port) {
        return Err(SystemError::UnknownPort(format!("{}.{}", top.instance, top.deviation.port)));
    }
    s.out_port(&top.instance, &top.deviation)
}

/// Minimal cut sets of `top`, ordered by size then lexicographically.
pub fn synthesize(m: &SystemModel, top: &TopEvent) -> Result<SystemCutSets, SystemError> {
    let f = top_formula(m, top)?;
    let dnf = expand_dnf(&f, DEFAULT_DNF_CAP)?;
    let sets: Vec<BTreeSet<String>> = minimize_sets(dnf);
    Ok(SystemCutSets {
        top: top.to_string(),
        cut_sets: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

/// Synthesizes `top` and quantifies it. Component events take their data
/// from the model; `db` supplies imported literals and may override.
pub fn analyze_system(
    m: &SystemModel,
    top: &TopEvent,
    db: &FailureDatabase,
    cfg: &QuantConfig,
) -> Result<SystemAnalysis, SystemError> {
    let cut_sets = synthesize(m, top)?;
    let mut all = m.event_database();
    all.extend(db);
    let measures = top_measures(&cut_sets.cut_sets, &all, cfg)?;
    Ok(SystemAnalysis { cut_sets, measures })
}
