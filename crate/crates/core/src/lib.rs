//! Tydi-lang compiler core.

pub mod design;
pub mod diag;
pub mod eval;
pub mod scope;
pub mod syntax;
pub mod types;
pub mod value;
pub mod elaborate;
pub mod stdlib;
pub mod drc;
pub mod ir;
pub mod loc;
pub mod pipeline;
pub mod sugar;
pub mod vhdl;

pub use design::{Connection, ElaboratedDesign, ElaboratedImpl, ElaboratedPort, ElaboratedStreamlet, Endpoint, Instance, Owner};
pub use diag::{Code, Diagnostic, FileId, SourceMap, SourceSpan};
pub use drc::DrcMode;
pub use pipeline::{compile, load_inputs, Backend, BuildConfig, Compilation};
pub use types::{bit_width, LogicalType, StreamType};
pub use value::{ClockDomain, Value};
