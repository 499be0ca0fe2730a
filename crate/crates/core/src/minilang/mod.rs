//! MiniLang: a small class-based language with Java-like null semantics.

mod ast;
mod interp;
mod lexer;
mod parser;
mod pretty;
mod resolve;
mod value;

use serde::Serialize;
use thiserror::Error;

pub use ast::*;
pub use interp::{
    run, AssertionResult, Declining, DerefEvent, EntryPoint, ExecOutcome, ExecutionBudget, Interceptor, Limit,
    OutcomeKind, Response, RunError,
};
pub use lexer::{tokenize, Tok, Token};
pub use parser::parse;
pub use pretty::{expr_to_string, pretty_print};
pub use resolve::{
    resolve, ClassId, ClassInfo, ExprInfo, MethodInfo, MethodRef, Resolution, Slot, StmtInfo, TypedProgram,
};
pub use value::{ObjRef, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{loc}: {message}")]
pub struct ParseError {
    pub loc: Loc,
    pub message: String,
}

impl ParseError {
    pub fn new(loc: Loc, message: impl Into<String>) -> Self {
        ParseError { loc, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveErrorKind {
    #[error("undefined variable `{0}`")]
    UndefinedVariable(String),
    #[error("undefined class `{0}`")]
    UndefinedClass(String),
    #[error("class `{class}` has no method `{method}`")]
    UndefinedMethod { class: String, method: String },
    #[error("class `{class}` has no field `{field}`")]
    UndefinedField { class: String, field: String },
    #[error("`{method}` expects {expected} argument(s), found {found}")]
    ArityMismatch { method: String, expected: usize, found: usize },
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: String, found: String },
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("class `{0}` is opaque and cannot be instantiated")]
    NotConstructible(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{loc}: {kind}")]
pub struct ResolveError {
    pub loc: Loc,
    pub kind: ResolveErrorKind,
}

impl ResolveError {
    pub fn new(loc: Loc, kind: ResolveErrorKind) -> Self {
        ResolveError { loc, kind }
    }
}

/// Either front-end failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("resolve error at {0}")]
    Resolve(#[from] ResolveError),
}

/// Parse and resolve in one step.
pub fn compile(source: &str) -> Result<TypedProgram, FrontendError> {
    Ok(resolve(parse(source)?)?)
}
