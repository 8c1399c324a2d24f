//! Component fault models for the parts of a safety function outside the
//! program: typed components with local failure logic, wired into a DAG,
//! with imported short lists standing in for the input subsystem.

mod expr;
mod model;
mod synth;

pub use expr::{Expr, ExprError};
pub use model::{
    event_id, ComponentType, ConnectionDoc, EventDoc, ImportDoc, ImportSource, Instance, InstanceDoc,
    PortDeviation, PortRef, SystemDoc, SystemModel, TopEvent, TypeDoc,
};
pub use synth::{analyze_system, synthesize, top_formula, SystemAnalysis, SystemCutSets};

use thiserror::Error;

use crate::logic::DnfTooLarge;
use crate::quant::QuantError;

#[derive(Debug, Error, PartialEq)]
pub enum SystemError {
    #[error("system model: {0}")]
    Syntax(String),
    #[error("system model: {0}")]
    Invalid(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("unknown out-port `{0}`")]
    UnknownPort(String),
    #[error("in-port {0} is not connected")]
    Dangling(String),
    #[error("connection cycle through {0}")]
    Cycle(String),
    #[error("{0} is already bound to a short list")]
    DuplicateBinding(String),
    #[error("import for {binding}: {message}")]
    Import { binding: String, message: String },
    #[error(transparent)]
    TooLarge(#[from] DnfTooLarge),
    #[error(transparent)]
    Quant(#[from] QuantError),
}
