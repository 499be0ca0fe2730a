//! The six-strategy failure-oblivious model for null dereferences.
//!
//! At every dereference of a null receiver the interpreter builds a
//! [`DecisionContext`]. [`compute_possible_decisions`] lists every applicable
//! [`Decision`] in canonical order, and [`apply_decision`] turns the chosen one
//! into an [`Effect`] the interpreter carries out:
//!
//! | kind        | effect                                                   |
//! |-------------|----------------------------------------------------------|
//! | `R-REUSE`   | the null expression evaluates to an in-scope variable    |
//! | `R-NEW`     | the null expression evaluates to a fresh object          |
//! | `SKIP-LINE` | the enclosing statement is abandoned                     |
//! | `RET-NULL`  | the enclosing method returns null (or nothing, if void)  |
//! | `RET-NEW`   | the enclosing method returns a fresh object              |
//! | `RET-REUSE` | the enclosing method returns an in-scope variable        |
//!
//! Injection is expression-local: no variable is ever written.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::minilang::{ExprId, Loc, StmtId, Type, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DerefKind {
    FieldRead,
    FieldWrite,
    CallReceiver,
}

impl DerefKind {
    fn tag(self) -> &'static str {
        match self {
            DerefKind::FieldRead => "field-read",
            DerefKind::FieldWrite => "field-write",
            DerefKind::CallReceiver => "call-receiver",
        }
    }
}

/// Syntactic role of the statement enclosing a failure point. Declarations
/// with an initializer count as `Assign`; `if`/`while` conditions and `assert`
/// count as `Condition`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StatementKind {
    ExprStmt,
    Assign,
    Return,
    Condition,
}

/// Stable identity of a static dereference site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FailurePointId(pub u64);

impl fmt::Display for FailurePointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for FailurePointId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FailurePointId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        u64::from_str_radix(&text, 16).map(FailurePointId).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSig {
    pub class: String,
    pub name: String,
    pub ret: Type,
}

impl fmt::Display for MethodSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailurePoint {
    pub id: FailurePointId,
    pub location: Loc,
    pub deref_kind: DerefKind,
    pub enclosing_method: MethodSig,
    pub statement_kind: StatementKind,
}

impl FailurePoint {
    pub fn new(
        method: MethodSig,
        stmt: StmtId,
        expr: ExprId,
        deref_kind: DerefKind,
        statement_kind: StatementKind,
        location: Loc,
    ) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(
            format!("{}.{}|{}|{}|{}", method.class, method.name, stmt.0, expr.0, deref_kind.tag()).as_bytes(),
        );
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        FailurePoint {
            id: FailurePointId(u64::from_be_bytes(bytes)),
            location,
            deref_kind,
            enclosing_method: method,
            statement_kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyKind {
    ReplaceReuse,
    ReplaceNew,
    SkipLine,
    ReturnNull,
    ReturnNew,
    ReturnReuse,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::ReplaceReuse,
        StrategyKind::ReplaceNew,
        StrategyKind::SkipLine,
        StrategyKind::ReturnNull,
        StrategyKind::ReturnNew,
        StrategyKind::ReturnReuse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::ReplaceReuse => "R-REUSE",
            StrategyKind::ReplaceNew => "R-NEW",
            StrategyKind::SkipLine => "SKIP-LINE",
            StrategyKind::ReturnNull => "RET-NULL",
            StrategyKind::ReturnNew => "RET-NEW",
            StrategyKind::ReturnReuse => "RET-REUSE",
        }
    }

    /// Reuse and creation strategies carry an operand.
    pub fn takes_operand(self) -> bool {
        !matches!(self, StrategyKind::SkipLine | StrategyKind::ReturnNull)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown strategy kind `{0}`")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

impl Serialize for StrategyKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StrategyKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeVar {
    pub name: String,
    pub ty: Type,
    pub value: Value,
}

/// Everything the model may look at when a null is about to be dereferenced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionContext {
    pub failure_point: FailurePoint,
    /// Static class of the null receiver.
    pub expected_type: String,
    /// Frame variables in canonical order (parameters, then locals).
    pub in_scope: Vec<ScopeVar>,
    pub method_return_type: Type,
    pub expected_constructible: bool,
    pub return_constructible: bool,
}

/// One strategy instantiated at one failure point. Equality and ordering use
/// `(failure point id, kind, operand)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decision {
    pub failure_point: FailurePoint,
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operand: Option<String>,
}

impl Decision {
    fn key(&self) -> (FailurePointId, StrategyKind, Option<&str>) {
        (self.failure_point.id, self.kind, self.operand.as_deref())
    }

    /// Edge label form, e.g. `R-NEW(Session)` or `SKIP-LINE`.
    pub fn label(&self) -> String {
        match &self.operand {
            Some(op) => format!("{}({op})", self.kind),
            None => self.kind.to_string(),
        }
    }
}

impl PartialEq for Decision {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Decision {}

impl Hash for Decision {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for Decision {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decision {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.label(), self.failure_point.location)
    }
}

/// Lists every applicable decision in canonical order: `R-REUSE` candidates
/// (scope order), `R-NEW`, `SKIP-LINE`, `RET-NULL`, `RET-NEW`, then `RET-REUSE`
/// candidates (scope order).
pub fn compute_possible_decisions(ctx: &DecisionContext) -> Vec<Decision> {
    let fp = &ctx.failure_point;
    let mut out: Vec<Decision> = Vec::new();
    let mut push = |kind: StrategyKind, operand: Option<String>| {
        let d = Decision { failure_point: fp.clone(), kind, operand };
        if !out.contains(&d) {
            out.push(d);
        }
    };

    let expected = Type::Class(ctx.expected_type.clone());
    for var in &ctx.in_scope {
        if var.ty == expected && !var.value.is_null() {
            push(StrategyKind::ReplaceReuse, Some(var.name.clone()));
        }
    }
    if ctx.expected_constructible {
        push(StrategyKind::ReplaceNew, Some(ctx.expected_type.clone()));
    }
    if !matches!(fp.statement_kind, StatementKind::Condition | StatementKind::Return) {
        push(StrategyKind::SkipLine, None);
    }
    push(StrategyKind::ReturnNull, None);
    if let (Type::Class(ret), true) = (&ctx.method_return_type, ctx.return_constructible) {
        push(StrategyKind::ReturnNew, Some(ret.clone()));
    }
    if ctx.method_return_type != Type::Void {
        for var in &ctx.in_scope {
            if var.ty == ctx.method_return_type && !var.value.is_null() {
                push(StrategyKind::ReturnReuse, Some(var.name.clone()));
            }
        }
    }
    out
}

/// A value to hand back in place of the null receiver or as a return value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Injection {
    Existing(Value),
    /// Construct a fresh instance of the named class.
    Fresh(String),
}

/// What the interpreter must do to carry out a decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// Evaluate the null receiver expression to this value, once.
    Inject(Injection),
    /// Abandon the enclosing statement and continue with the next one.
    SkipStatement,
    /// Return from the enclosing method. `None` returns null, the type's
    /// default value for primitive return types, or nothing for `void`.
    Return(Option<Injection>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("decision {0} is not applicable at this interception")]
    NotApplicable(String),
}

/// Translates a decision into its execution effect. Rejects decisions that
/// [`compute_possible_decisions`] would not have produced for `ctx`.
pub fn apply_decision(decision: &Decision, ctx: &DecisionContext) -> Result<Effect, ModelError> {
    if !compute_possible_decisions(ctx).contains(decision) {
        return Err(ModelError::NotApplicable(decision.to_string()));
    }
    let scope_value = |name: &str| {
        ctx.in_scope
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.value.clone())
            .ok_or_else(|| ModelError::NotApplicable(decision.to_string()))
    };
    let operand = || decision.operand.clone().ok_or_else(|| ModelError::NotApplicable(decision.to_string()));
    Ok(match decision.kind {
        StrategyKind::ReplaceReuse => Effect::Inject(Injection::Existing(scope_value(&operand()?)?)),
        StrategyKind::ReplaceNew => Effect::Inject(Injection::Fresh(operand()?)),
        StrategyKind::SkipLine => Effect::SkipStatement,
        StrategyKind::ReturnNull => Effect::Return(None),
        StrategyKind::ReturnNew => Effect::Return(Some(Injection::Fresh(operand()?))),
        StrategyKind::ReturnReuse => Effect::Return(Some(Injection::Existing(scope_value(&operand()?)?))),
    })
}

/// A failure-oblivious model: the six strategies, optionally with some kinds
/// switched off.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObliviousModel {
    disabled: BTreeSet<StrategyKind>,
}

impl ObliviousModel {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn without(kinds: impl IntoIterator<Item = StrategyKind>) -> Self {
        ObliviousModel { disabled: kinds.into_iter().collect() }
    }

    pub fn disabled(&self) -> impl Iterator<Item = StrategyKind> + '_ {
        self.disabled.iter().copied()
    }

    pub fn enabled(&self, kind: StrategyKind) -> bool {
        !self.disabled.contains(&kind)
    }

    pub fn decisions(&self, ctx: &DecisionContext) -> Vec<Decision> {
        compute_possible_decisions(ctx).into_iter().filter(|d| self.enabled(d.kind)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::ObjRef;
    use std::sync::Arc;

    fn point(kind: StatementKind) -> FailurePoint {
        FailurePoint::new(
            MethodSig { class: "Server".into(), name: "m".into(), ret: Type::Void },
            StmtId(3),
            ExprId(7),
            DerefKind::CallReceiver,
            kind,
            Loc::new(3, 12),
        )
    }

    fn obj(id: usize, class: &str) -> Value {
        Value::Obj(ObjRef { id, class: Arc::from(class) })
    }

    fn var(name: &str, class: &str, value: Value) -> ScopeVar {
        ScopeVar { name: name.into(), ty: Type::Class(class.into()), value }
    }

    fn labels(ds: &[Decision]) -> Vec<String> {
        ds.iter().map(Decision::label).collect()
    }

    #[test]
    fn motivating_first_failure_point() {
        let ctx = DecisionContext {
            failure_point: point(StatementKind::Return),
            expected_type: "Session".into(),
            in_scope: vec![var("session", "Session", Value::Null)],
            method_return_type: Type::Class("Date".into()),
            expected_constructible: true,
            return_constructible: true,
        };
        assert_eq!(
            labels(&compute_possible_decisions(&ctx)),
            vec!["R-NEW(Session)", "RET-NULL", "RET-NEW(Date)"]
        );
    }

    #[test]
    fn only_return_null_when_nothing_else_applies() {
        let ctx = DecisionContext {
            failure_point: point(StatementKind::Condition),
            expected_type: "Hole".into(),
            in_scope: vec![],
            method_return_type: Type::Void,
            expected_constructible: false,
            return_constructible: false,
        };
        assert_eq!(labels(&compute_possible_decisions(&ctx)), vec!["RET-NULL"]);
    }

    #[test]
    fn reuse_candidates_follow_scope_order() {
        for constructible in [false, true] {
            let ctx = DecisionContext {
                failure_point: point(StatementKind::ExprStmt),
                expected_type: "Log".into(),
                in_scope: vec![var("a", "Log", obj(1, "Log")), var("b", "Log", obj(2, "Log"))],
                method_return_type: Type::Void,
                expected_constructible: constructible,
                return_constructible: false,
            };
            let mut want = vec!["R-REUSE(a)", "R-REUSE(b)"];
            if constructible {
                want.push("R-NEW(Log)");
            }
            want.extend(["SKIP-LINE", "RET-NULL"]);
            assert_eq!(labels(&compute_possible_decisions(&ctx)), want);
        }
    }

    #[test]
    fn return_reuse_includes_primitives_and_skips_nulls() {
        let ctx = DecisionContext {
            failure_point: point(StatementKind::Assign),
            expected_type: "Log".into(),
            in_scope: vec![
                ScopeVar { name: "n".into(), ty: Type::Int, value: Value::Int(4) },
                var("other", "Log", Value::Null),
            ],
            method_return_type: Type::Int,
            expected_constructible: false,
            return_constructible: false,
        };
        assert_eq!(labels(&compute_possible_decisions(&ctx)), vec!["SKIP-LINE", "RET-NULL", "RET-REUSE(n)"]);
    }

    #[test]
    fn aliased_objects_are_distinct_candidates_by_name() {
        let shared = obj(5, "Log");
        let ctx = DecisionContext {
            failure_point: point(StatementKind::ExprStmt),
            expected_type: "Log".into(),
            in_scope: vec![var("a", "Log", shared.clone()), var("b", "Log", shared)],
            method_return_type: Type::Void,
            expected_constructible: false,
            return_constructible: false,
        };
        let ds = compute_possible_decisions(&ctx);
        assert_eq!(labels(&ds), vec!["R-REUSE(a)", "R-REUSE(b)", "SKIP-LINE", "RET-NULL"]);
    }

    #[test]
    fn apply_maps_kinds_to_effects() {
        let ctx = DecisionContext {
            failure_point: point(StatementKind::ExprStmt),
            expected_type: "Log".into(),
            in_scope: vec![var("a", "Log", obj(1, "Log"))],
            method_return_type: Type::Class("Log".into()),
            expected_constructible: true,
            return_constructible: true,
        };
        let ds = compute_possible_decisions(&ctx);
        let effects: Vec<Effect> = ds.iter().map(|d| apply_decision(d, &ctx).unwrap()).collect();
        assert_eq!(
            effects,
            vec![
                Effect::Inject(Injection::Existing(obj(1, "Log"))),
                Effect::Inject(Injection::Fresh("Log".into())),
                Effect::SkipStatement,
                Effect::Return(None),
                Effect::Return(Some(Injection::Fresh("Log".into()))),
                Effect::Return(Some(Injection::Existing(obj(1, "Log")))),
            ]
        );
    }

    #[test]
    fn apply_rejects_foreign_decisions() {
        let ctx = DecisionContext {
            failure_point: point(StatementKind::Return),
            expected_type: "Log".into(),
            in_scope: vec![],
            method_return_type: Type::Void,
            expected_constructible: false,
            return_constructible: false,
        };
        let skip = Decision { failure_point: ctx.failure_point.clone(), kind: StrategyKind::SkipLine, operand: None };
        assert!(apply_decision(&skip, &ctx).is_err());
    }

    #[test]
    fn failure_point_id_is_structural() {
        let a = point(StatementKind::Return);
        let mut b = point(StatementKind::Return);
        b.location = Loc::new(99, 1);
        let b = FailurePoint::new(b.enclosing_method, StmtId(3), ExprId(7), b.deref_kind, b.statement_kind, b.location);
        assert_eq!(a.id, b.id);
        let c = FailurePoint::new(a.enclosing_method.clone(), StmtId(3), ExprId(8), a.deref_kind, a.statement_kind, a.location);
        assert_ne!(a.id, c.id);
    }

    #[test]
    fn strategy_strings_round_trip() {
        for kind in StrategyKind::ALL {
            assert_eq!(kind.as_str().parse::<StrategyKind>().unwrap(), kind);
        }
        assert!("RET-MAYBE".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn restricted_model_filters_kinds() {
        let ctx = DecisionContext {
            failure_point: point(StatementKind::ExprStmt),
            expected_type: "Date".into(),
            in_scope: vec![],
            method_return_type: Type::Void,
            expected_constructible: true,
            return_constructible: false,
        };
        let model = ObliviousModel::without([StrategyKind::SkipLine]);
        assert_eq!(labels(&model.decisions(&ctx)), vec!["R-NEW(Date)", "RET-NULL"]);
        assert_eq!(labels(&ObliviousModel::full().decisions(&ctx)), vec!["R-NEW(Date)", "SKIP-LINE", "RET-NULL"]);
    }
}
