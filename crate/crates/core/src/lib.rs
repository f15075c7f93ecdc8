#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod convention;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod protocols;
pub mod qstate;

pub use convention::Convention;
pub use error::{Error, Result};
