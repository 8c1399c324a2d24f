//! Forward evaluation of programs.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{
    validate_program, ChannelId, DataKind, Diagnostic, Driver, NetId, Program, Semantics, Value,
};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("program is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("block graph has a cycle through {}", .0.join(", "))]
    Cycle(Vec<String>),
    #[error("no reading supplied for channel `{0}`")]
    MissingReading(ChannelId),
    #[error("reading supplied for unknown channel `{0}`")]
    UnknownChannel(ChannelId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    pub value: f64,
    /// True when the channel reports a detected fault.
    pub flag: bool,
}

/// One reading per channel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelReading {
    pub readings: BTreeMap<ChannelId, Reading>,
}

impl ChannelReading {
    /// Readings with every fault flag clear.
    pub fn healthy(values: BTreeMap<ChannelId, f64>) -> Self {
        ChannelReading {
            readings: values
                .into_iter()
                .map(|(id, value)| (id, Reading { value, flag: false }))
                .collect(),
        }
    }

    pub fn set(&mut self, channel: impl Into<ChannelId>, value: f64, flag: bool) {
        self.readings.insert(channel.into(), Reading { value, flag });
    }
}

pub type Valuation = BTreeMap<NetId, Value>;

/// Orders blocks so that each appears after the blocks driving its inputs.
/// Ties are broken by document order, so the result is stable.
pub fn topological_order(p: &Program) -> Result<Vec<String>, EvalError> {
    block_order(p)
        .map(|order| order.into_iter().map(|i| p.blocks[i].id.clone()).collect())
        .map_err(|stuck| EvalError::Cycle(stuck.into_iter().map(|i| p.blocks[i].id.clone()).collect()))
}

/// Kahn's algorithm over block indices. On failure returns the blocks that
/// could not be ordered.
pub(crate) fn block_order(p: &Program) -> Result<Vec<usize>, Vec<usize>> {
    let n = p.blocks.len();
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut succs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, b) in p.blocks.iter().enumerate() {
        for net in &b.inputs {
            if let Some(Driver::Block(j)) = p.driver(net) {
                preds[i].insert(j);
                succs[j].insert(i);
            }
        }
    }
    let mut indegree: Vec<usize> = preds.iter().map(BTreeSet::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &s in &succs[i] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.insert(s);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

#[derive(Debug, Clone)]
struct Op {
    semantics: Semantics,
    inputs: Vec<usize>,
    output: usize,
}

/// A validated program lowered to index-addressed operations, for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    nets: Vec<NetId>,
    net_index: BTreeMap<NetId, usize>,
    kinds: Vec<DataKind>,
    channels: Vec<(ChannelId, usize, usize)>,
    ops: Vec<Op>,
}

impl CompiledProgram {
    pub fn compile(p: &Program) -> Result<Self, EvalError> {
        let diagnostics = validate_program(p);
        if !diagnostics.is_empty() {
            return Err(EvalError::Invalid(diagnostics));
        }
        let kinds_by_net = p.net_kinds();
        let nets: Vec<NetId> = p.drivers().keys().cloned().collect();
        let net_index: BTreeMap<NetId, usize> =
            nets.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let kinds = nets.iter().map(|n| kinds_by_net[n]).collect();
        let channels = p
            .channels
            .iter()
            .map(|c| (c.id.clone(), net_index[&c.value_net], net_index[&c.flag_net]))
            .collect();
        let order = block_order(p).map_err(|stuck| {
            EvalError::Cycle(stuck.into_iter().map(|i| p.blocks[i].id.clone()).collect())
        })?;
        let ops = order
            .into_iter()
            .map(|i| {
                let b = &p.blocks[i];
                Op {
                    semantics: b.semantics().clone(),
                    inputs: b.inputs.iter().map(|n| net_index[n]).collect(),
                    output: net_index[&b.output],
                }
            })
            .collect();
        Ok(CompiledProgram {
            nets,
            net_index,
            kinds,
            channels,
            ops,
        })
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn net_index(&self, net: &str) -> Option<usize> {
        self.net_index.get(net).copied()
    }

    pub fn net_name(&self, index: usize) -> &str {
        &self.nets[index]
    }

    pub fn kind(&self, index: usize) -> DataKind {
        self.kinds[index]
    }

    /// Channel ids in the order expected by [`CompiledProgram::run`].
    pub fn channel_ids(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(id, _, _)| id.as_str())
    }

    /// Evaluates with one `(value, flag)` pair per channel, in
    /// [`CompiledProgram::channel_ids`] order, writing every net into `out`.
    pub fn run_into(&self, inputs: &[(f64, bool)], out: &mut Vec<Value>) {
        out.clear();
        out.resize(self.nets.len(), Value::Bool(false));
        for ((_, v, f), &(value, flag)) in self.channels.iter().zip(inputs) {
            out[*v] = Value::Real(value);
            out[*f] = Value::Bool(flag);
        }
        for op in &self.ops {
            let real = |i: usize| out[op.inputs[i]].as_real().unwrap_or(f64::NAN);
            let boolean = |i: usize| out[op.inputs[i]].as_bool().unwrap_or(false);
            let reals = || op.inputs.iter().map(|&i| out[i].as_real().unwrap_or(f64::NAN));
            let bools = || op.inputs.iter().map(|&i| out[i].as_bool().unwrap_or(false));
            let v = match &op.semantics {
                Semantics::Const(v) => *v,
                Semantics::Add => Value::Real(reals().sum()),
                Semantics::Sub => Value::Real(real(0) - reals().skip(1).sum::<f64>()),
                Semantics::MulConst { k } => Value::Real(k * real(0)),
                Semantics::Avg => Value::Real(reals().sum::<f64>() / op.inputs.len() as f64),
                Semantics::Min => Value::Real(reals().fold(f64::INFINITY, f64::min)),
                Semantics::Max => Value::Real(reals().fold(f64::NEG_INFINITY, f64::max)),
                Semantics::Correct { k, p0 } => Value::Real(real(0) + k * (real(1) - p0)),
                Semantics::Lt { threshold } => Value::Bool(real(0) < *threshold),
                Semantics::Gt { threshold } => Value::Bool(real(0) > *threshold),
                Semantics::Not => Value::Bool(!boolean(0)),
                Semantics::And => Value::Bool(bools().all(|b| b)),
                Semantics::Or => Value::Bool(bools().any(|b| b)),
                Semantics::Koon { k } => Value::Bool(bools().filter(|&b| b).count() >= *k),
                Semantics::Sel => {
                    if boolean(0) {
                        out[op.inputs[1]]
                    } else {
                        out[op.inputs[2]]
                    }
                }
            };
            out[op.output] = v;
        }
    }

    pub fn run(&self, inputs: &[(f64, bool)]) -> Vec<Value> {
        let mut out = Vec::new();
        self.run_into(inputs, &mut out);
        out
    }

    /// Orders a [`ChannelReading`] into the positional input form.
    pub fn inputs_for(&self, r: &ChannelReading) -> Result<Vec<(f64, bool)>, EvalError> {
        if let Some(extra) = r
            .readings
            .keys()
            .find(|id| !self.channels.iter().any(|(c, _, _)| c == *id))
        {
            return Err(EvalError::UnknownChannel(extra.clone()));
        }
        self.channels
            .iter()
            .map(|(id, _, _)| {
                r.readings
                    .get(id)
                    .map(|rd| (rd.value, rd.flag))
                    .ok_or_else(|| EvalError::MissingReading(id.clone()))
            })
            .collect()
    }

    pub fn evaluate(&self, r: &ChannelReading) -> Result<Valuation, EvalError> {
        let values = self.run(&self.inputs_for(r)?);
        Ok(self.nets.iter().cloned().zip(values).collect())
    }
}

/// Assigns every net a value, block by block in topological order.
pub fn evaluate(p: &Program, r: &ChannelReading) -> Result<Valuation, EvalError> {
    CompiledProgram::compile(p)?.evaluate(r)
}
