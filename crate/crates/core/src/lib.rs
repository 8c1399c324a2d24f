//! Failure mode reasoning over function-block safety programs.
//!
//! The crate derives, from a safety program and a nominated output deviation,
//! the combinations of input-channel states that can cause it; quantifies
//! them; and composes them with component-level failure logic for the rest
//! of the safety function.

pub mod corpus;
pub mod fbd;
pub mod fmr;
pub mod interchange;
pub mod logic;
pub mod oracle;
pub mod quant;
pub mod report;
pub mod system;
