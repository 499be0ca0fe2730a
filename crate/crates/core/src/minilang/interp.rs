//! Deterministic tree-walking interpreter with a null-dereference hook.
//!
//! Before a field read, field write or method call whose receiver evaluated to
//! null, the interpreter builds a [`DecisionContext`] and asks the
//! [`Interceptor`] what to do. Declining lets the null dereference propagate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::resolve::{ClassId, MethodRef, Resolution, TypedProgram};
use super::value::{ObjRef, Value};
use crate::model::{
    apply_decision, Decision, DecisionContext, DerefKind, Effect, FailurePoint, Injection, MethodSig,
    ModelError, ScopeVar, StatementKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionBudget {
    pub max_steps: u64,
    pub max_call_depth: usize,
}

impl Default for ExecutionBudget {
    fn default() -> Self {
        ExecutionBudget { max_steps: 100_000, max_call_depth: 256 }
    }
}

/// The failure-triggering input: a method invoked on a fresh instance of its
/// class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryPoint {
    pub class: String,
    pub method: String,
    pub args: Vec<Value>,
}

impl EntryPoint {
    pub fn new(class: impl Into<String>, method: impl Into<String>) -> Self {
        EntryPoint { class: class.into(), method: method.into(), args: Vec::new() }
    }

    /// The `test()` method of the only class declaring one.
    pub fn find_test(program: &TypedProgram) -> Option<EntryPoint> {
        match program.classes_with_method("test").as_slice() {
            [class] => Some(EntryPoint::new(*class, "test")),
            _ => None,
        }
    }
}

impl std::fmt::Display for EntryPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.class, self.method)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    /// Let the null dereference propagate.
    Decline,
    Apply(Decision),
    /// Stop the run immediately; reported as a sequence-length budget trip.
    Truncate,
}

pub trait Interceptor {
    fn intercept(&mut self, ctx: &DecisionContext) -> Response;
}

impl<F: FnMut(&DecisionContext) -> Response> Interceptor for F {
    fn intercept(&mut self, ctx: &DecisionContext) -> Response {
        self(ctx)
    }
}

/// Interceptor that never intervenes: plain execution semantics.
#[derive(Debug, Default, Clone, Copy)]
pub struct Declining;

impl Interceptor for Declining {
    fn intercept(&mut self, _ctx: &DecisionContext) -> Response {
        Response::Decline
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Limit {
    Steps,
    CallDepth,
    SequenceLength,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionResult {
    pub location: Loc,
    pub passed: bool,
}

/// One interception: a null receiver reached a dereference site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerefEvent {
    pub failure_point: FailurePoint,
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeKind {
    /// The entry method returned, or stopped at a failed assertion (which is
    /// then the last entry of `assertions`).
    Completed { bindings: Vec<(String, Value)>, assertions: Vec<AssertionResult> },
    NullDereferenceEscaped { location: Loc },
    UncaughtException { name: String, location: Loc },
    BudgetExhausted { limit: Limit },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub kind: OutcomeKind,
    pub deref_log: Vec<DerefEvent>,
    pub steps_used: u64,
}

impl ExecOutcome {
    pub fn decisions(&self) -> impl Iterator<Item = &Decision> {
        self.deref_log.iter().filter_map(|e| e.decision.as_ref())
    }

    pub fn all_assertions_passed(&self) -> bool {
        match &self.kind {
            OutcomeKind::Completed { assertions, .. } => assertions.iter().all(|a| a.passed),
            _ => false,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("entry method `{0}` not found")]
    EntryNotFound(String),
    #[error("entry class `{0}` cannot be instantiated")]
    EntryNotConstructible(String),
    #[error("entry method `{entry}` expects {expected} argument(s), got {found}")]
    EntryArity { entry: String, expected: usize, found: usize },
    #[error("argument {index} of entry method `{entry}` has the wrong type")]
    EntryArgType { entry: String, index: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn run(
    program: &TypedProgram,
    entry: &EntryPoint,
    interceptor: &mut dyn Interceptor,
    budget: ExecutionBudget,
) -> Result<ExecOutcome, RunError> {
    let mref = program
        .find_method(&entry.class, &entry.method)
        .ok_or_else(|| RunError::EntryNotFound(entry.to_string()))?;
    let class = program.class(mref.class);
    if !class.constructible() {
        return Err(RunError::EntryNotConstructible(entry.class.clone()));
    }
    let info = program.method(mref);
    if info.params.len() != entry.args.len() {
        return Err(RunError::EntryArity {
            entry: entry.to_string(),
            expected: info.params.len(),
            found: entry.args.len(),
        });
    }
    for (index, (arg, ty)) in entry.args.iter().zip(&info.params).enumerate() {
        if !value_has_type(arg, ty) {
            return Err(RunError::EntryArgType { entry: entry.to_string(), index });
        }
    }

    let mut machine = Machine {
        program,
        interceptor,
        budget,
        steps: 0,
        depth: 1,
        heap: Vec::new(),
        journal: Vec::new(),
        open_statements: 0,
        log: Vec::new(),
        assertions: Vec::new(),
        class_names: program.classes().iter().map(|c| Arc::from(c.name.as_str())).collect(),
    };

    let this = machine.alloc(mref.class);
    let mut frame = machine.frame(mref, this, entry.args.clone());
    let body = &program.method_decl(mref).body;
    let result = machine.exec_block(body, &mut frame);

    let kind = match result {
        Ok(()) | Err(Signal::Return(_)) | Err(Signal::Fault(Fault::AssertFailed)) => {
            let slots = &program.method(mref).slots;
            let bindings = program
                .end_slots(mref)
                .iter()
                .map(|&s| (slots[s].name.clone(), frame.slots[s].clone()))
                .collect();
            OutcomeKind::Completed { bindings, assertions: std::mem::take(&mut machine.assertions) }
        }
        Err(Signal::Skip) => unreachable!("skip never escapes its statement"),
        Err(Signal::Fault(Fault::NullDeref(location))) => OutcomeKind::NullDereferenceEscaped { location },
        Err(Signal::Fault(Fault::Exception(name, location))) => {
            OutcomeKind::UncaughtException { name: name.to_string(), location }
        }
        Err(Signal::Fault(Fault::Budget(limit))) => OutcomeKind::BudgetExhausted { limit },
        Err(Signal::Fault(Fault::Error(e))) => return Err(e),
    };
    Ok(ExecOutcome { kind, deref_log: machine.log, steps_used: machine.steps })
}

fn value_has_type(value: &Value, ty: &Type) -> bool {
    match (value, ty) {
        (Value::Int(_), Type::Int) | (Value::Bool(_), Type::Bool) | (Value::Str(_), Type::Str) => true,
        (Value::Null, Type::Class(_)) => true,
        (Value::Obj(o), Type::Class(c)) => &*o.class == c.as_str(),
        _ => false,
    }
}

enum Fault {
    NullDeref(Loc),
    Exception(&'static str, Loc),
    AssertFailed,
    Budget(Limit),
    Error(RunError),
}

enum Signal {
    Return(Value),
    Skip,
    Fault(Fault),
}

impl From<Fault> for Signal {
    fn from(f: Fault) -> Self {
        Signal::Fault(f)
    }
}

type Exec<T> = Result<T, Signal>;

struct Object {
    fields: Vec<Value>,
}

struct Frame {
    method: MethodRef,
    this: ObjRef,
    slots: Vec<Value>,
    current: Option<(StmtId, StatementKind)>,
}

struct Machine<'p, 'i> {
    program: &'p TypedProgram,
    interceptor: &'i mut dyn Interceptor,
    budget: ExecutionBudget,
    steps: u64,
    depth: usize,
    heap: Vec<Object>,
    /// Field writes `(object, field, previous value)` made while at least one
    /// simple statement is executing; undone when that statement is skipped.
    journal: Vec<(usize, usize, Value)>,
    open_statements: usize,
    log: Vec<DerefEvent>,
    assertions: Vec<AssertionResult>,
    class_names: Vec<Arc<str>>,
}

impl Machine<'_, '_> {
    fn tick(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.budget.max_steps {
            Err(Fault::Budget(Limit::Steps).into())
        } else {
            Ok(())
        }
    }

    fn alloc(&mut self, class: ClassId) -> ObjRef {
        let fields = self.program.class(class).fields.iter().map(|(_, ty)| Value::default_for(ty)).collect();
        let id = self.heap.len();
        self.heap.push(Object { fields });
        ObjRef { id, class: self.class_names[class.0].clone() }
    }

    fn frame(&self, method: MethodRef, this: ObjRef, args: Vec<Value>) -> Frame {
        let info = self.program.method(method);
        let mut slots = args;
        slots.extend(info.slots[info.params.len()..].iter().map(|s| Value::default_for(&s.ty)));
        Frame { method, this, slots, current: None }
    }

    fn write_field(&mut self, obj: usize, field: usize, value: Value) {
        let old = std::mem::replace(&mut self.heap[obj].fields[field], value);
        if self.open_statements > 0 {
            self.journal.push((obj, field, old));
        }
    }

    fn rollback(&mut self, journal_mark: usize, heap_mark: usize) {
        while self.journal.len() > journal_mark {
            let (obj, field, old) = self.journal.pop().expect("non-empty journal");
            if obj < self.heap.len() {
                self.heap[obj].fields[field] = old;
            }
        }
        self.heap.truncate(heap_mark);
    }

    fn exec_block(&mut self, body: &[Stmt], frame: &mut Frame) -> Exec<()> {
        for stmt in body {
            self.exec_stmt(stmt, frame)?;
        }
        Ok(())
    }

    fn exec_stmt(&mut self, stmt: &Stmt, frame: &mut Frame) -> Exec<()> {
        self.tick()?;
        match &stmt.kind {
            StmtKind::If { cond, then_body, else_body } => {
                frame.current = Some((stmt.id, StatementKind::Condition));
                if self.eval_bool(cond, frame)? {
                    self.exec_block(then_body, frame)
                } else if let Some(else_body) = else_body {
                    self.exec_block(else_body, frame)
                } else {
                    Ok(())
                }
            }
            StmtKind::While { cond, body } => loop {
                self.tick()?;
                frame.current = Some((stmt.id, StatementKind::Condition));
                if !self.eval_bool(cond, frame)? {
                    return Ok(());
                }
                self.exec_block(body, frame)?;
            },
            _ => self.exec_simple(stmt, frame),
        }
    }

    fn exec_simple(&mut self, stmt: &Stmt, frame: &mut Frame) -> Exec<()> {
        let kind = match &stmt.kind {
            StmtKind::VarDecl { .. } | StmtKind::Assign { .. } => StatementKind::Assign,
            StmtKind::Expr(_) => StatementKind::ExprStmt,
            StmtKind::Return(_) => StatementKind::Return,
            _ => StatementKind::Condition,
        };
        let marks = (self.journal.len(), self.heap.len());
        self.open_statements += 1;
        frame.current = Some((stmt.id, kind));
        let result = self.exec_simple_inner(stmt, frame);
        self.open_statements -= 1;
        let result = match result {
            Err(Signal::Skip) => {
                self.rollback(marks.0, marks.1);
                if let Some(slot) = self.program.stmt(stmt.id).declares {
                    let ty = &self.program.method(frame.method).slots[slot].ty;
                    frame.slots[slot] = Value::default_for(ty);
                }
                Ok(())
            }
            other => other,
        };
        if self.open_statements == 0 {
            self.journal.clear();
        }
        result
    }

    fn exec_simple_inner(&mut self, stmt: &Stmt, frame: &mut Frame) -> Exec<()> {
        match &stmt.kind {
            StmtKind::VarDecl { ty, init, .. } => {
                let value = match init {
                    Some(e) => self.eval(e, frame)?,
                    None => Value::default_for(ty),
                };
                let slot = self.program.stmt(stmt.id).declares.expect("declaration has a slot");
                frame.slots[slot] = value;
                Ok(())
            }
            StmtKind::Assign { target, value } => match &target.kind {
                ExprKind::Var(_) => {
                    let v = self.eval(value, frame)?;
                    let Resolution::Slot(slot) = self.program.expr(target.id).resolution else {
                        unreachable!("variable target resolves to a slot")
                    };
                    frame.slots[slot] = v;
                    Ok(())
                }
                ExprKind::Field { receiver, .. } => {
                    let recv = self.eval(receiver, frame)?;
                    let v = self.eval(value, frame)?;
                    let obj = self.dereference(recv, receiver, target, DerefKind::FieldWrite, frame)?;
                    let Resolution::Field(field) = self.program.expr(target.id).resolution else {
                        unreachable!("field target resolves to a field")
                    };
                    self.write_field(obj.id, field, v);
                    Ok(())
                }
                _ => unreachable!("parser only admits variable and field targets"),
            },
            StmtKind::Expr(e) => self.eval(e, frame).map(drop),
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e, frame)?,
                    None => Value::Null,
                };
                Err(Signal::Return(v))
            }
            StmtKind::Assert(cond) => {
                let passed = self.eval_bool(cond, frame)?;
                self.assertions.push(AssertionResult { location: stmt.loc, passed });
                if passed {
                    Ok(())
                } else {
                    Err(Fault::AssertFailed.into())
                }
            }
            StmtKind::If { .. } | StmtKind::While { .. } => unreachable!("compound statement"),
        }
    }

    fn eval_bool(&mut self, expr: &Expr, frame: &mut Frame) -> Exec<bool> {
        match self.eval(expr, frame)? {
            Value::Bool(b) => Ok(b),
            _ => unreachable!("condition is statically bool"),
        }
    }

    fn eval_int(&mut self, expr: &Expr, frame: &mut Frame) -> Exec<i64> {
        match self.eval(expr, frame)? {
            Value::Int(n) => Ok(n),
            _ => unreachable!("operand is statically int"),
        }
    }

    fn eval(&mut self, expr: &Expr, frame: &mut Frame) -> Exec<Value> {
        self.tick()?;
        match &expr.kind {
            ExprKind::Lit(Literal::Null) => Ok(Value::Null),
            ExprKind::Lit(Literal::Int(n)) => Ok(Value::Int(*n)),
            ExprKind::Lit(Literal::Bool(b)) => Ok(Value::Bool(*b)),
            ExprKind::Lit(Literal::Str(s)) => Ok(Value::str(s)),
            ExprKind::Var(_) => match self.program.expr(expr.id).resolution {
                Resolution::Slot(slot) => Ok(frame.slots[slot].clone()),
                _ => unreachable!("variable resolves to a slot"),
            },
            ExprKind::This => Ok(Value::Obj(frame.this.clone())),
            ExprKind::Field { receiver, .. } => {
                let recv = self.eval(receiver, frame)?;
                let obj = self.dereference(recv, receiver, expr, DerefKind::FieldRead, frame)?;
                let Resolution::Field(field) = self.program.expr(expr.id).resolution else {
                    unreachable!("field access resolves to a field")
                };
                Ok(self.heap[obj.id].fields[field].clone())
            }
            ExprKind::Call { receiver, args, .. } => {
                let Resolution::Method(mref) = self.program.expr(expr.id).resolution else {
                    unreachable!("call resolves to a method")
                };
                let recv = match receiver {
                    Some(r) => Some(self.eval(r, frame)?),
                    None => None,
                };
                let mut values = Vec::with_capacity(args.len());
                for arg in args {
                    values.push(self.eval(arg, frame)?);
                }
                let this = match (recv, receiver) {
                    (Some(v), Some(r)) => self.dereference(v, r, expr, DerefKind::CallReceiver, frame)?,
                    _ => frame.this.clone(),
                };
                self.invoke(mref, this, values)
            }
            ExprKind::New(_) => {
                let Resolution::Class(class) = self.program.expr(expr.id).resolution else {
                    unreachable!("new resolves to a class")
                };
                Ok(Value::Obj(self.alloc(class)))
            }
            ExprKind::Unary { op: UnOp::Not, operand } => Ok(Value::Bool(!self.eval_bool(operand, frame)?)),
            ExprKind::Unary { op: UnOp::Neg, operand } => {
                let n = self.eval_int(operand, frame)?;
                n.checked_neg().map(Value::Int).ok_or_else(|| arith(expr.loc))
            }
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                Ok(Value::Bool(self.eval_bool(lhs, frame)? && self.eval_bool(rhs, frame)?))
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                Ok(Value::Bool(self.eval_bool(lhs, frame)? || self.eval_bool(rhs, frame)?))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs, frame)?;
                let r = self.eval(rhs, frame)?;
                binary(*op, l, r, expr.loc)
            }
        }
    }

    fn invoke(&mut self, mref: MethodRef, this: ObjRef, args: Vec<Value>) -> Exec<Value> {
        if self.depth >= self.budget.max_call_depth {
            return Err(Fault::Budget(Limit::CallDepth).into());
        }
        self.depth += 1;
        let mut frame = self.frame(mref, this, args);
        // Each MiniLang call costs several native frames; grow the stack on demand.
        let result = stacker::maybe_grow(128 * 1024, 2 * 1024 * 1024, || {
            self.exec_block(&self.program.method_decl(mref).body, &mut frame)
        });
        self.depth -= 1;
        match result {
            Ok(()) => Ok(Value::default_for(&self.program.method(mref).ret)),
            Err(Signal::Return(v)) => Ok(v),
            Err(Signal::Skip) => unreachable!("skip never escapes its statement"),
            Err(fault) => Err(fault),
        }
    }

    /// Returns the receiver object, consulting the interceptor when it is null.
    fn dereference(
        &mut self,
        value: Value,
        receiver: &Expr,
        site: &Expr,
        deref_kind: DerefKind,
        frame: &mut Frame,
    ) -> Exec<ObjRef> {
        match value {
            Value::Obj(obj) => Ok(obj),
            Value::Null => self.intercept(receiver, site, deref_kind, frame),
            _ => unreachable!("receiver is statically a class type"),
        }
    }

    fn intercept(&mut self, receiver: &Expr, site: &Expr, deref_kind: DerefKind, frame: &mut Frame) -> Exec<ObjRef> {
        let (stmt, statement_kind) = frame.current.expect("dereference happens inside a statement");
        let method = self.program.method(frame.method);
        let sig = MethodSig {
            class: self.program.class(method.class).name.clone(),
            name: method.name.clone(),
            ret: method.ret.clone(),
        };
        let failure_point = FailurePoint::new(sig, stmt, site.id, deref_kind, statement_kind, site.loc);
        let expected_type = self
            .program
            .expr(receiver.id)
            .ty
            .class_name()
            .expect("receiver is statically a class type")
            .to_string();
        let in_scope = self
            .program
            .stmt(stmt)
            .scope
            .iter()
            .map(|&s| ScopeVar {
                name: method.slots[s].name.clone(),
                ty: method.slots[s].ty.clone(),
                value: frame.slots[s].clone(),
            })
            .collect();
        let ctx = DecisionContext {
            failure_point,
            expected_constructible: self.program.is_constructible(&Type::Class(expected_type.clone())),
            expected_type,
            in_scope,
            return_constructible: self.program.is_constructible(&method.ret),
            method_return_type: method.ret.clone(),
        };

        let response = self.interceptor.intercept(&ctx);
        let decision = match &response {
            Response::Apply(d) => Some(d.clone()),
            _ => None,
        };
        self.log.push(DerefEvent { failure_point: ctx.failure_point.clone(), decision });

        match response {
            Response::Decline => Err(Fault::NullDeref(site.loc).into()),
            Response::Truncate => Err(Fault::Budget(Limit::SequenceLength).into()),
            Response::Apply(d) => match apply_decision(&d, &ctx) {
                Err(e) => Err(Fault::Error(e.into()).into()),
                Ok(Effect::Inject(inj)) => match self.realize(inj) {
                    Value::Obj(obj) => Ok(obj),
                    _ => unreachable!("injected receivers are objects"),
                },
                Ok(Effect::SkipStatement) => Err(Signal::Skip),
                Ok(Effect::Return(None)) => Err(Signal::Return(Value::default_for(&ctx.method_return_type))),
                Ok(Effect::Return(Some(inj))) => Err(Signal::Return(self.realize(inj))),
            },
        }
    }

    fn realize(&mut self, injection: Injection) -> Value {
        match injection {
            Injection::Existing(v) => v,
            Injection::Fresh(class) => {
                let id = self.program.class_id(&class).expect("model only names declared classes");
                Value::Obj(self.alloc(id))
            }
        }
    }
}

fn arith(loc: Loc) -> Signal {
    Fault::Exception("ArithmeticException", loc).into()
}

fn binary(op: BinOp, l: Value, r: Value, loc: Loc) -> Exec<Value> {
    use Value::*;
    let v = match (op, l, r) {
        (BinOp::Eq, a, b) => Bool(a == b),
        (BinOp::Ne, a, b) => Bool(a != b),
        (BinOp::Add, Int(a), Int(b)) => Int(a.checked_add(b).ok_or_else(|| arith(loc))?),
        (BinOp::Add, a, b) => Value::str(&format!("{a}{b}")),
        (BinOp::Sub, Int(a), Int(b)) => Int(a.checked_sub(b).ok_or_else(|| arith(loc))?),
        (BinOp::Mul, Int(a), Int(b)) => Int(a.checked_mul(b).ok_or_else(|| arith(loc))?),
        (BinOp::Div, Int(a), Int(b)) => Int(a.checked_div(b).ok_or_else(|| arith(loc))?),
        (BinOp::Rem, Int(a), Int(b)) => Int(a.checked_rem(b).ok_or_else(|| arith(loc))?),
        (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
        (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
        _ => unreachable!("operands are statically typed"),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::compile;
    use crate::model::{compute_possible_decisions, StrategyKind};

    fn exec(src: &str, interceptor: &mut dyn Interceptor) -> ExecOutcome {
        let program = compile(src).unwrap();
        let entry = EntryPoint::find_test(&program).unwrap();
        run(&program, &entry, interceptor, ExecutionBudget::default()).unwrap()
    }

    /// Applies the first decision of the given kind at every interception.
    fn always(kind: StrategyKind) -> impl FnMut(&DecisionContext) -> Response {
        move |ctx| {
            let d = compute_possible_decisions(ctx).into_iter().find(|d| d.kind == kind).expect("kind applicable");
            Response::Apply(d)
        }
    }

    fn binding(outcome: &ExecOutcome, name: &str) -> Value {
        match &outcome.kind {
            OutcomeKind::Completed { bindings, .. } => {
                bindings.iter().find(|(n, _)| n == name).map(|(_, v)| v.clone()).unwrap()
            }
            other => panic!("not completed: {other:?}"),
        }
    }

    #[test]
    fn plain_execution_computes_values() {
        let src = "class Main { int sq(int x) { return x * x; }
            void test() { int s = 0; int i = 0; while (i < 4) { s = s + sq(i); i = i + 1; } String t = \"n=\" + s; } }";
        let out = exec(src, &mut Declining);
        assert_eq!(binding(&out, "s"), Value::Int(14));
        assert_eq!(binding(&out, "t"), Value::str("n=14"));
        assert!(out.deref_log.is_empty());
    }

    #[test]
    fn declined_null_dereference_escapes() {
        let src = "class P { int v; } class Main { P p; void test() { int x = this.p.v; } }";
        let out = exec(src, &mut Declining);
        assert_eq!(out.kind, OutcomeKind::NullDereferenceEscaped { location: Loc::new(1, 66) });
        assert_eq!(out.deref_log.len(), 1);
        assert_eq!(out.deref_log[0].failure_point.deref_kind, DerefKind::FieldRead);
    }

    #[test]
    fn arithmetic_faults_are_exceptions() {
        let out = exec("class Main { void test() { int z = 0; int x = 1 / z; } }", &mut Declining);
        assert!(matches!(out.kind, OutcomeKind::UncaughtException { ref name, .. } if name == "ArithmeticException"));
    }

    #[test]
    fn failed_assertion_stops_the_run() {
        let src = "class Main { void test() { int x = 1; assert x == 2; x = 5; } }";
        let out = exec(src, &mut Declining);
        assert_eq!(binding(&out, "x"), Value::Int(1));
        assert!(!out.all_assertions_passed());
    }

    #[test]
    fn arguments_evaluate_before_the_null_check() {
        let src = "class P { void f(int x) {} } class Main { P p; int n;
            int bump() { this.n = this.n + 1; return this.n; }
            void test() { this.p.f(bump()); int seen = this.n; } }";
        let out = exec(src, &mut always(StrategyKind::ReplaceNew));
        assert_eq!(binding(&out, "seen"), Value::Int(1));
        assert_eq!(out.deref_log[0].failure_point.deref_kind, DerefKind::CallReceiver);
    }

    #[test]
    fn skip_undoes_partial_effects_of_the_statement() {
        let src = "class P { int v; } class Main { P p; int n;
            int bump() { this.n = this.n + 1; return 7; }
            void test() { int x = 3; int y = bump() + this.p.v; int seen = this.n; } }";
        let out = exec(src, &mut always(StrategyKind::SkipLine));
        assert_eq!(binding(&out, "y"), Value::Int(0));
        assert_eq!(binding(&out, "seen"), Value::Int(0));
        assert_eq!(binding(&out, "x"), Value::Int(3));
    }

    #[test]
    fn return_null_in_primitive_method_yields_default() {
        let src = "class P { int v; } class Main { P p;
            int get() { return this.p.v + 1; }
            void test() { int r = get(); } }";
        let out = exec(src, &mut always(StrategyKind::ReturnNull));
        assert_eq!(binding(&out, "r"), Value::Int(0));
    }

    #[test]
    fn injection_never_writes_the_variable() {
        let src = "class P { int v; } class Main { void test() { P p; int a = p.v; bool still = p == null; } }";
        let out = exec(src, &mut always(StrategyKind::ReplaceNew));
        assert_eq!(binding(&out, "still"), Value::Bool(true));
        assert_eq!(out.decisions().count(), 1);
    }

    #[test]
    fn truncation_reports_sequence_budget() {
        let src = "class P { int v; } class Main { P p; void test() { int x = this.p.v; } }";
        let out = exec(src, &mut |_: &DecisionContext| Response::Truncate);
        assert_eq!(out.kind, OutcomeKind::BudgetExhausted { limit: Limit::SequenceLength });
    }

    #[test]
    fn step_budget_stops_infinite_loops() {
        let out = exec("class Main { void test() { while (true) {} } }", &mut Declining);
        assert_eq!(out.kind, OutcomeKind::BudgetExhausted { limit: Limit::Steps });
        assert!(out.steps_used <= ExecutionBudget::default().max_steps + 1);
    }

    #[test]
    fn deep_recursion_hits_depth_budget_without_overflowing() {
        let src = "class Main { int down(int n) { if (n == 0) { return 0; } return down(n - 1) + 1; }
            void test() { int r = down(DEPTH); } }";
        let ok = exec(&src.replace("DEPTH", "254"), &mut Declining);
        assert_eq!(binding(&ok, "r"), Value::Int(254));
        let deep = exec(&src.replace("DEPTH", "10000"), &mut Declining);
        assert_eq!(deep.kind, OutcomeKind::BudgetExhausted { limit: Limit::CallDepth });
    }

    #[test]
    fn entry_errors() {
        let program = compile("opaque class O { void test() {} } class M { void run(int x) {} }").unwrap();
        let budget = ExecutionBudget::default();
        assert!(matches!(
            run(&program, &EntryPoint::new("O", "test"), &mut Declining, budget),
            Err(RunError::EntryNotConstructible(_))
        ));
        assert!(matches!(
            run(&program, &EntryPoint::new("M", "run"), &mut Declining, budget),
            Err(RunError::EntryArity { expected: 1, found: 0, .. })
        ));
        assert!(matches!(
            run(&program, &EntryPoint::new("M", "nope"), &mut Declining, budget),
            Err(RunError::EntryNotFound(_))
        ));
    }
}
