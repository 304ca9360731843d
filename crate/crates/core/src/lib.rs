//! Core pipeline for the claflite modeling language.
//!
//! The pipeline runs in stages: the indentation-sensitive surface parser
//! produces a [`surface::SourceModel`]; defaults and the rewrite passes turn
//! surface sugar (transition arrows, property patterns, modifiers) into the
//! small constraint core; elaboration resolves names and builds a
//! [`core_model::CoreModel`]; the solver enumerates structurally valid
//! snapshots and lasso traces under a bounded scope and checks constraints
//! and assertions over them.

pub mod core_model;
pub mod desugar;
pub mod error;
pub mod instance;
pub mod pipeline;
pub mod solver;
pub mod surface;
pub mod temporal;

pub use core_model::{ClaferId, ConstraintAst, CoreModel, ExprAst, TopConstraint};
pub use error::{ElabError, Error, ParseError};
pub use instance::{InstanceId, Snapshot};
pub use solver::{AssertMode, AssertVerdict, LoopChoice, Scope};
pub use surface::{Interval, QuantKind, RefKind, SourceModel};
pub use temporal::LassoTrace;
