//! Function-block-diagram programs: the dataflow graph that FMR reasons over.
//!
//! A [`Program`] is a set of block instances wired together by named nets.
//! Every net has exactly one driver: a block output or one of the two nets
//! (value and fault flag) that each input [`Channel`] presents.

mod document;
mod eval;
mod validate;

pub use document::{parse_program, serialize_program, ParseError};
pub use eval::{
    evaluate, topological_order, ChannelReading, CompiledProgram, EvalError, Reading, Valuation,
};
pub use validate::{validate_program, Diagnostic, DiagnosticKind};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fmr::Mode;

pub type NetId = String;
pub type ChannelId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DataKind {
    Real,
    Bool,
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataKind::Real => "REAL",
            DataKind::Bool => "BOOL",
        })
    }
}

/// Direction in which a REAL input drives a block output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Monotonicity {
    Inc,
    Dec,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Real(f64),
}

impl Value {
    pub fn kind(&self) -> DataKind {
        match self {
            Value::Real(_) => DataKind::Real,
            Value::Bool(_) => DataKind::Bool,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Value::Real(x) => Some(x),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            Value::Real(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// The fixed block catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum Semantics {
    Const(Value),
    Add,
    Sub,
    MulConst { k: f64 },
    Avg,
    Min,
    Max,
    /// Pressure-corrected level: `level + k * (pressure - p0)`, `k > 0`.
    Correct { k: f64, p0: f64 },
    Lt { threshold: f64 },
    Gt { threshold: f64 },
    Not,
    And,
    Or,
    Koon { k: usize },
    /// `(selector, a, b)`: `a` when the selector is True, `b` otherwise.
    Sel,
}

impl Semantics {
    pub fn type_name(&self) -> &'static str {
        match self {
            Semantics::Const(_) => "CONST",
            Semantics::Add => "ADD",
            Semantics::Sub => "SUB",
            Semantics::MulConst { .. } => "MUL_CONST",
            Semantics::Avg => "AVG",
            Semantics::Min => "MIN",
            Semantics::Max => "MAX",
            Semantics::Correct { .. } => "CORRECT",
            Semantics::Lt { .. } => "LT",
            Semantics::Gt { .. } => "GT",
            Semantics::Not => "NOT",
            Semantics::And => "AND",
            Semantics::Or => "OR",
            Semantics::Koon { .. } => "KOON",
            Semantics::Sel => "SEL",
        }
    }

    /// True for the REAL-valued arithmetic blocks whose backward rule is
    /// derived purely from per-input monotonicity.
    pub fn is_monotone_arithmetic(&self) -> bool {
        matches!(
            self,
            Semantics::Add
                | Semantics::Sub
                | Semantics::MulConst { .. }
                | Semantics::Avg
                | Semantics::Min
                | Semantics::Max
                | Semantics::Correct { .. }
        )
    }
}

/// One port of a block type. `kind` is `None` for the polymorphic branches of
/// SEL, whose kind follows the connected nets.
#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub kind: Option<DataKind>,
    pub monotonicity: Monotonicity,
}

impl Port {
    fn real(name: impl Into<String>, monotonicity: Monotonicity) -> Self {
        Port {
            name: name.into(),
            kind: Some(DataKind::Real),
            monotonicity,
        }
    }

    fn boolean(name: impl Into<String>) -> Self {
        Port {
            name: name.into(),
            kind: Some(DataKind::Bool),
            monotonicity: Monotonicity::None,
        }
    }

    fn any(name: impl Into<String>) -> Self {
        Port {
            name: name.into(),
            kind: None,
            monotonicity: Monotonicity::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockType {
    pub name: String,
    pub inputs: Vec<Port>,
    pub output: Port,
    pub semantics: Semantics,
}

impl BlockType {
    /// Instantiates the catalog entry for `semantics` with `arity` inputs.
    /// Arity is not checked here; [`validate_program`] reports violations.
    pub fn new(semantics: Semantics, arity: usize) -> Self {
        use Monotonicity::*;
        let numbered = |f: &dyn Fn(String) -> Port| -> Vec<Port> {
            (1..=arity).map(|i| f(format!("in{i}"))).collect()
        };
        let (inputs, output) = match &semantics {
            Semantics::Const(v) => (
                Vec::new(),
                Port {
                    name: "out".into(),
                    kind: Some(v.kind()),
                    monotonicity: None,
                },
            ),
            Semantics::Add | Semantics::Avg | Semantics::Min | Semantics::Max => (
                numbered(&|n| Port::real(n, Inc)),
                Port::real("out", None),
            ),
            Semantics::MulConst { .. } => (
                numbered(&|n| Port::real(n, Inc)),
                Port::real("out", None),
            ),
            Semantics::Sub => {
                let inputs = (1..=arity)
                    .map(|i| Port::real(format!("in{i}"), if i == 1 { Inc } else { Dec }))
                    .collect();
                (inputs, Port::real("out", None))
            }
            Semantics::Correct { .. } => {
                let mut inputs = vec![Port::real("level", Inc), Port::real("pressure", Inc)];
                inputs.truncate(arity);
                for i in 3..=arity {
                    inputs.push(Port::real(format!("in{i}"), None));
                }
                (inputs, Port::real("out", None))
            }
            Semantics::Lt { .. } | Semantics::Gt { .. } => (
                numbered(&|n| Port::real(n, None)),
                Port::boolean("out"),
            ),
            Semantics::Not | Semantics::And | Semantics::Or | Semantics::Koon { .. } => {
                (numbered(&Port::boolean), Port::boolean("out"))
            }
            Semantics::Sel => {
                let mut inputs = vec![Port::boolean("sel"), Port::any("a"), Port::any("b")];
                inputs.truncate(arity);
                for i in 4..=arity {
                    inputs.push(Port::any(format!("in{i}")));
                }
                (inputs, Port::any("out"))
            }
        };
        BlockType {
            name: semantics.type_name().to_string(),
            inputs,
            output,
            semantics,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: String,
    pub block_type: BlockType,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

impl Block {
    pub fn new(
        id: impl Into<String>,
        semantics: Semantics,
        inputs: Vec<NetId>,
        output: impl Into<NetId>,
    ) -> Self {
        let block_type = BlockType::new(semantics, inputs.len());
        Block {
            id: id.into(),
            block_type,
            inputs,
            output: output.into(),
        }
    }

    pub fn semantics(&self) -> &Semantics {
        &self.block_type.semantics
    }
}

/// An input channel: a transmitter reading plus its detected-fault flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub id: ChannelId,
    pub value_net: NetId,
    pub flag_net: NetId,
}

/// A demand context: the intended channel readings under which an output
/// deviation is analysed (e.g. levels below the trip threshold when asking
/// whether a trip can be missed).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub demands: Vec<Demand>,
    pub readings: BTreeMap<ChannelId, f64>,
}

impl Profile {
    /// Intended readings: profile values with every fault flag clear.
    pub fn intended_reading(&self) -> ChannelReading {
        ChannelReading::healthy(self.readings.clone())
    }

    pub fn applies_to(&self, target: &str, mode: Mode) -> bool {
        self.demands
            .iter()
            .any(|d| d.target == target && d.mode == mode)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demand {
    pub target: String,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    ChannelValue(usize),
    ChannelFlag(usize),
    Block(usize),
}

/// An SIS program under analysis. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub name: Option<String>,
    pub channels: Vec<Channel>,
    pub blocks: Vec<Block>,
    pub outputs: BTreeMap<String, NetId>,
    pub profiles: Vec<Profile>,
    drivers: BTreeMap<NetId, Driver>,
}

impl Program {
    /// Builds a program, rejecting any net driven more than once.
    pub fn new(
        name: Option<String>,
        channels: Vec<Channel>,
        blocks: Vec<Block>,
        outputs: BTreeMap<String, NetId>,
        profiles: Vec<Profile>,
    ) -> Result<Self, ParseError> {
        let mut drivers: BTreeMap<NetId, Driver> = BTreeMap::new();
        let mut names: BTreeMap<NetId, String> = BTreeMap::new();
        let mut describe = |net: &NetId, driver: Driver, who: String| -> Result<(), ParseError> {
            if drivers.insert(net.clone(), driver).is_some() {
                return Err(ParseError::DuplicateDriver {
                    net: net.clone(),
                    first: names.remove(net).unwrap_or_default(),
                    second: who,
                });
            }
            names.insert(net.clone(), who);
            Ok(())
        };
        for (i, ch) in channels.iter().enumerate() {
            describe(&ch.value_net, Driver::ChannelValue(i), format!("channel {} value", ch.id))?;
            describe(&ch.flag_net, Driver::ChannelFlag(i), format!("channel {} flag", ch.id))?;
        }
        for (i, b) in blocks.iter().enumerate() {
            describe(&b.output, Driver::Block(i), format!("block {}", b.id))?;
        }
        Ok(Program {
            name,
            channels,
            blocks,
            outputs,
            profiles,
            drivers,
        })
    }

    pub fn driver(&self, net: &str) -> Option<Driver> {
        self.drivers.get(net).copied()
    }

    pub fn drivers(&self) -> &BTreeMap<NetId, Driver> {
        &self.drivers
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == id)
    }

    pub fn block(&self, id: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// Resolves an analysis target: an output name first, then a raw net id.
    pub fn resolve_target(&self, target: &str) -> Option<&str> {
        if let Some(net) = self.outputs.get(target) {
            return Some(net.as_str());
        }
        self.drivers.get_key_value(target).map(|(k, _)| k.as_str())
    }

    /// The profile that declares a demand on `target` in `mode`. `target`
    /// may be an output name or its net.
    pub fn demand_profile(&self, target: &str, mode: Mode) -> Option<&Profile> {
        let net = self.resolve_target(target)?;
        self.profiles.iter().find(|p| {
            p.demands.iter().any(|d| {
                d.mode == mode && self.resolve_target(&d.target).is_some_and(|n| n == net)
            })
        })
    }

    pub fn profile(&self, name: &str) -> Option<&Profile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    /// Data kind of every net whose kind can be inferred, following SEL
    /// branches through the graph.
    pub fn net_kinds(&self) -> BTreeMap<NetId, DataKind> {
        let mut kinds = BTreeMap::new();
        for ch in &self.channels {
            kinds.insert(ch.value_net.clone(), DataKind::Real);
            kinds.insert(ch.flag_net.clone(), DataKind::Bool);
        }
        // Fixed-kind outputs first, then SEL outputs until nothing changes.
        for b in &self.blocks {
            if let Some(k) = b.block_type.output.kind {
                kinds.insert(b.output.clone(), k);
            }
        }
        loop {
            let mut changed = false;
            for b in &self.blocks {
                if b.block_type.output.kind.is_none() && !kinds.contains_key(&b.output) {
                    let branch = b.inputs.get(1).and_then(|n| kinds.get(n)).copied();
                    if let Some(k) = branch {
                        kinds.insert(b.output.clone(), k);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        kinds
    }
}
