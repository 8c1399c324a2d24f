//! JSON program documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use super::{Block, Channel, Demand, Program, Profile, Semantics, Value};
use crate::fmr::Mode;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("block `{block}`: unknown block type `{block_type}`")]
    UnknownBlockType { block: String, block_type: String },
    #[error("block `{block}`: {message}")]
    InvalidParams { block: String, message: String },
    #[error("net `{net}` is driven by both {first} and {second}")]
    DuplicateDriver {
        net: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    channels: Vec<ChannelDoc>,
    blocks: Vec<BlockDoc>,
    outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    profiles: Vec<ProfileDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    id: String,
    value: String,
    flag: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    id: String,
    #[serde(rename = "type")]
    block_type: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    params: Map<String, Json>,
    #[serde(rename = "in", default)]
    inputs: Vec<String>,
    out: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    name: String,
    #[serde(default)]
    demands: Vec<DemandDoc>,
    readings: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandDoc {
    target: String,
    mode: Mode,
}

/// Parses a program document.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let doc: ProgramDoc = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let channels = doc
        .channels
        .into_iter()
        .map(|c| Channel {
            id: c.id,
            value_net: c.value,
            flag_net: c.flag,
        })
        .collect();
    let blocks = doc
        .blocks
        .into_iter()
        .map(|b| {
            let semantics = semantics_from_doc(&b.id, &b.block_type, &b.params)?;
            Ok(Block::new(b.id, semantics, b.inputs, b.out))
        })
        .collect::<Result<Vec<_>, ParseError>>()?;
    let profiles = doc
        .profiles
        .into_iter()
        .map(|p| Profile {
            name: p.name,
            demands: p
                .demands
                .into_iter()
                .map(|d| Demand {
                    target: d.target,
                    mode: d.mode,
                })
                .collect(),
            readings: p.readings,
        })
        .collect();
    Program::new(doc.name, channels, blocks, doc.outputs, profiles)
}

/// Renders a program back to its document form (pretty-printed JSON).
pub fn serialize_program(p: &Program) -> String {
    let doc = ProgramDoc {
        name: p.name.clone(),
        channels: p
            .channels
            .iter()
            .map(|c| ChannelDoc {
                id: c.id.clone(),
                value: c.value_net.clone(),
                flag: c.flag_net.clone(),
            })
            .collect(),
        blocks: p
            .blocks
            .iter()
            .map(|b| BlockDoc {
                id: b.id.clone(),
                block_type: b.semantics().type_name().to_string(),
                params: params_to_doc(b.semantics()),
                inputs: b.inputs.clone(),
                out: b.output.clone(),
            })
            .collect(),
        outputs: p.outputs.clone(),
        profiles: p
            .profiles
            .iter()
            .map(|pr| ProfileDoc {
                name: pr.name.clone(),
                demands: pr
                    .demands
                    .iter()
                    .map(|d| DemandDoc {
                        target: d.target.clone(),
                        mode: d.mode,
                    })
                    .collect(),
                readings: pr.readings.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("program documents always serialize")
}

fn semantics_from_doc(
    block: &str,
    block_type: &str,
    params: &Map<String, Json>,
) -> Result<Semantics, ParseError> {
    let invalid = |message: String| ParseError::InvalidParams {
        block: block.to_string(),
        message,
    };
    let expected: &[&str] = match block_type {
        "CONST" => &["value"],
        "MUL_CONST" => &["k"],
        "CORRECT" => &["k", "p0"],
        "LT" | "GT" => &["threshold"],
        "KOON" => &["k"],
        "ADD" | "SUB" | "AVG" | "MIN" | "MAX" | "NOT" | "AND" | "OR" | "SEL" => &[],
        other => {
            return Err(ParseError::UnknownBlockType {
                block: block.to_string(),
                block_type: other.to_string(),
            })
        }
    };
    if let Some(extra) = params.keys().find(|k| !expected.contains(&k.as_str())) {
        return Err(invalid(format!(
            "unexpected parameter `{extra}` for {block_type}"
        )));
    }
    let number = |name: &str| -> Result<f64, ParseError> {
        match params.get(name) {
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(format!("parameter `{name}` must be a finite number"))),
            None => Err(invalid(format!("missing parameter `{name}`"))),
        }
    };

    Ok(match block_type {
        "CONST" => match params.get("value") {
            Some(Json::Bool(b)) => Semantics::Const(Value::Bool(*b)),
            Some(_) => Semantics::Const(Value::Real(number("value")?)),
            None => return Err(invalid("missing parameter `value`".into())),
        },
        "MUL_CONST" => Semantics::MulConst { k: number("k")? },
        "CORRECT" => Semantics::Correct {
            k: number("k")?,
            p0: number("p0")?,
        },
        "LT" => Semantics::Lt {
            threshold: number("threshold")?,
        },
        "GT" => Semantics::Gt {
            threshold: number("threshold")?,
        },
        "KOON" => {
            let k = params
                .get("k")
                .and_then(Json::as_u64)
                .ok_or_else(|| invalid("parameter `k` must be a non-negative integer".into()))?;
            Semantics::Koon { k: k as usize }
        }
        "ADD" => Semantics::Add,
        "SUB" => Semantics::Sub,
        "AVG" => Semantics::Avg,
        "MIN" => Semantics::Min,
        "MAX" => Semantics::Max,
        "NOT" => Semantics::Not,
        "AND" => Semantics::And,
        "OR" => Semantics::Or,
        "SEL" => Semantics::Sel,
        _ => unreachable!("block type checked above"),
    })
}

fn params_to_doc(s: &Semantics) -> Map<String, Json> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Json| {
        m.insert(k.to_string(), v);
    };
    match s {
        Semantics::Const(Value::Bool(b)) => put("value", Json::Bool(*b)),
        Semantics::Const(Value::Real(x)) => put("value", Json::from(*x)),
        Semantics::MulConst { k } => put("k", Json::from(*k)),
        Semantics::Correct { k, p0 } => {
            put("k", Json::from(*k));
            put("p0", Json::from(*p0));
        }
        Semantics::Lt { threshold } | Semantics::Gt { threshold } => {
            put("threshold", Json::from(*threshold))
        }
        Semantics::Koon { k } => put("k", Json::from(*k as u64)),
        _ => {}
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_has_one_block() {
        let p = parse_program(
            r#"{"channels": [],
                "blocks": [{"id": "c", "type": "CONST", "params": {"value": 5.0}, "out": "n"}],
                "outputs": {"OUT": "n"}}"#,
        )
        .unwrap();
        assert_eq!(p.blocks.len(), 1);
        assert_eq!(p.blocks[0].semantics(), &Semantics::Const(Value::Real(5.0)));
        assert_eq!(p.resolve_target("OUT"), Some("n"));
    }

    #[test]
    fn duplicate_driver_is_rejected() {
        let err = parse_program(
            r#"{"channels": [{"id": "A", "value": "v", "flag": "f"}],
                "blocks": [{"id": "c", "type": "CONST", "params": {"value": 1.0}, "out": "v"}],
                "outputs": {}}"#,
        )
        .unwrap_err();
        match err {
            ParseError::DuplicateDriver { net, first, second } => {
                assert_eq!(net, "v");
                assert!(first.contains("channel A"));
                assert!(second.contains("block c"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_block_type_is_rejected() {
        let err = parse_program(
            r#"{"channels": [], "blocks": [{"id": "t", "type": "TON", "out": "n"}], "outputs": {}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::UnknownBlockType { .. }));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_program("{\n  \"channels\": [,\n}").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_threshold_is_rejected() {
        let err = parse_program(
            r#"{"channels": [], "blocks": [{"id": "t", "type": "LT", "in": ["x"], "out": "n"}], "outputs": {}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::InvalidParams { .. }));
    }
}
