//! Name resolution and static typing. Produces a [`TypedProgram`] whose side
//! tables let the interpreter run without any name lookups.

use std::collections::BTreeMap;

use super::ast::*;
use super::{ResolveError, ResolveErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub class: ClassId,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub name: String,
    pub opaque: bool,
    pub fields: Vec<(String, Type)>,
    field_index: BTreeMap<String, usize>,
    method_index: BTreeMap<String, usize>,
}

impl ClassInfo {
    pub fn field(&self, name: &str) -> Option<usize> {
        self.field_index.get(name).copied()
    }

    pub fn method(&self, name: &str) -> Option<usize> {
        self.method_index.get(name).copied()
    }

    /// Whether a zero-argument constructor is available.
    pub fn constructible(&self) -> bool {
        !self.opaque
    }
}

/// A variable slot within a method frame: parameters first, then locals in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone)]
pub struct MethodInfo {
    pub class: ClassId,
    pub name: String,
    pub params: Vec<Type>,
    pub ret: Type,
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    None,
    Slot(usize),
    Field(usize),
    Method(MethodRef),
    Class(ClassId),
}

#[derive(Debug, Clone)]
pub struct ExprInfo {
    pub ty: Type,
    pub resolution: Resolution,
}

#[derive(Debug, Clone)]
pub struct StmtInfo {
    pub method: MethodRef,
    /// Slots visible when the statement starts, in canonical order.
    pub scope: Vec<usize>,
    /// Slot introduced by a `VarDecl`.
    pub declares: Option<usize>,
}

/// A resolved program. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    ast: Ast,
    classes: Vec<ClassInfo>,
    class_index: BTreeMap<String, ClassId>,
    methods: Vec<Vec<MethodInfo>>,
    exprs: Vec<Option<ExprInfo>>,
    stmts: Vec<Option<StmtInfo>>,
    /// Final scope of each method body, for inspection.
    end_scopes: BTreeMap<MethodRef, Vec<usize>>,
}

impl TypedProgram {
    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.class_index.get(name).copied()
    }

    pub fn class(&self, id: ClassId) -> &ClassInfo {
        &self.classes[id.0]
    }

    pub fn class_by_name(&self, name: &str) -> Option<&ClassInfo> {
        self.class_id(name).map(|id| self.class(id))
    }

    /// Whether `ty` names a class with a zero-argument constructor.
    pub fn is_constructible(&self, ty: &Type) -> bool {
        ty.class_name()
            .and_then(|name| self.class_by_name(name))
            .is_some_and(ClassInfo::constructible)
    }

    pub fn method(&self, m: MethodRef) -> &MethodInfo {
        &self.methods[m.class.0][m.index]
    }

    pub fn method_decl(&self, m: MethodRef) -> &MethodDecl {
        &self.ast.classes[m.class.0].methods[m.index]
    }

    pub fn find_method(&self, class: &str, method: &str) -> Option<MethodRef> {
        let class = self.class_id(class)?;
        let index = self.classes[class.0].method(method)?;
        Some(MethodRef { class, index })
    }

    /// Classes declaring a method with the given name, in declaration order.
    pub fn classes_with_method(&self, method: &str) -> Vec<&str> {
        self.classes
            .iter()
            .filter(|c| c.method(method).is_some())
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn expr(&self, id: ExprId) -> &ExprInfo {
        self.exprs[id.0 as usize].as_ref().expect("expression was resolved")
    }

    pub fn stmt(&self, id: StmtId) -> &StmtInfo {
        self.stmts[id.0 as usize].as_ref().expect("statement was resolved")
    }

    /// Variables in scope at the start of `stmt`, as `(name, type)`.
    pub fn in_scope(&self, stmt: StmtId) -> Vec<(&str, &Type)> {
        let info = self.stmt(stmt);
        let method = self.method(info.method);
        info.scope.iter().map(|&s| (method.slots[s].name.as_str(), &method.slots[s].ty)).collect()
    }

    /// Slot indices in scope after the last top-level statement of `m`.
    pub fn end_slots(&self, m: MethodRef) -> &[usize] {
        &self.end_scopes[&m]
    }

    /// Variables in scope after the last top-level statement of `m`.
    pub fn in_scope_at_end(&self, m: MethodRef) -> Vec<(&str, &Type)> {
        let method = self.method(m);
        self.end_scopes[&m]
            .iter()
            .map(|&s| (method.slots[s].name.as_str(), &method.slots[s].ty))
            .collect()
    }
}

pub fn resolve(ast: Ast) -> Result<TypedProgram, ResolveError> {
    let mut classes = Vec::new();
    let mut class_index = BTreeMap::new();
    for (i, class) in ast.classes.iter().enumerate() {
        if class_index.insert(class.name.clone(), ClassId(i)).is_some() {
            return Err(ResolveError::new(class.loc, ResolveErrorKind::Duplicate(class.name.clone())));
        }
        classes.push(ClassInfo {
            name: class.name.clone(),
            opaque: class.opaque,
            fields: Vec::new(),
            field_index: BTreeMap::new(),
            method_index: BTreeMap::new(),
        });
    }

    let type_exists = |ty: &Type| match ty {
        Type::Class(name) => class_index.contains_key(name),
        _ => true,
    };

    let mut methods: Vec<Vec<MethodInfo>> = Vec::new();
    for (ci, class) in ast.classes.iter().enumerate() {
        let info = &mut classes[ci];
        for field in &class.fields {
            if !type_exists(&field.ty) {
                return Err(undefined_class(field.loc, &field.ty));
            }
            if info.field_index.insert(field.name.clone(), info.fields.len()).is_some() {
                return Err(ResolveError::new(field.loc, ResolveErrorKind::Duplicate(field.name.clone())));
            }
            info.fields.push((field.name.clone(), field.ty.clone()));
        }
        let mut sigs = Vec::new();
        for (mi, method) in class.methods.iter().enumerate() {
            if info.method_index.insert(method.name.clone(), mi).is_some() {
                return Err(ResolveError::new(method.loc, ResolveErrorKind::Duplicate(method.name.clone())));
            }
            if !type_exists(&method.ret) {
                return Err(undefined_class(method.loc, &method.ret));
            }
            let mut slots: Vec<Slot> = Vec::new();
            for p in &method.params {
                if !type_exists(&p.ty) {
                    return Err(undefined_class(p.loc, &p.ty));
                }
                if slots.iter().any(|s| s.name == p.name) {
                    return Err(ResolveError::new(p.loc, ResolveErrorKind::Duplicate(p.name.clone())));
                }
                slots.push(Slot { name: p.name.clone(), ty: p.ty.clone() });
            }
            sigs.push(MethodInfo {
                class: ClassId(ci),
                name: method.name.clone(),
                params: method.params.iter().map(|p| p.ty.clone()).collect(),
                ret: method.ret.clone(),
                slots,
            });
        }
        methods.push(sigs);
    }

    let mut program = TypedProgram {
        ast,
        classes,
        class_index,
        methods,
        exprs: Vec::new(),
        stmts: Vec::new(),
        end_scopes: BTreeMap::new(),
    };

    let ast = std::mem::take(&mut program.ast);
    for (ci, class) in ast.classes.iter().enumerate() {
        for (mi, method) in class.methods.iter().enumerate() {
            let mref = MethodRef { class: ClassId(ci), index: mi };
            let mut checker = Checker {
                program: &mut program,
                method: mref,
                scope: (0..method.params.len()).collect(),
            };
            for stmt in &method.body {
                checker.stmt(stmt)?;
            }
            let end = checker.scope.clone();
            program.end_scopes.insert(mref, end);
        }
    }
    program.ast = ast;
    Ok(program)
}

fn undefined_class(loc: Loc, ty: &Type) -> ResolveError {
    ResolveError::new(loc, ResolveErrorKind::UndefinedClass(ty.to_string()))
}

struct Checker<'p> {
    program: &'p mut TypedProgram,
    method: MethodRef,
    scope: Vec<usize>,
}

impl Checker<'_> {
    fn info(&self) -> &MethodInfo {
        self.program.method(self.method)
    }

    fn record_stmt(&mut self, stmt: &Stmt, declares: Option<usize>) {
        let idx = stmt.id.0 as usize;
        if self.program.stmts.len() <= idx {
            self.program.stmts.resize(idx + 1, None);
        }
        self.program.stmts[idx] =
            Some(StmtInfo { method: self.method, scope: self.scope.clone(), declares });
    }

    fn record_expr(&mut self, expr: &Expr, ty: Type, resolution: Resolution) -> Type {
        let idx = expr.id.0 as usize;
        if self.program.exprs.len() <= idx {
            self.program.exprs.resize(idx + 1, None);
        }
        self.program.exprs[idx] = Some(ExprInfo { ty: ty.clone(), resolution });
        ty
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        let slots = &self.info().slots;
        self.scope.iter().copied().find(|&s| slots[s].name == name)
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), ResolveError> {
        let saved = self.scope.len();
        for stmt in body {
            self.stmt(stmt)?;
        }
        self.scope.truncate(saved);
        Ok(())
    }

    fn expect_type(&self, loc: Loc, expected: &Type, found: &Type) -> Result<(), ResolveError> {
        if expected.accepts(found) {
            Ok(())
        } else {
            Err(ResolveError::new(
                loc,
                ResolveErrorKind::TypeMismatch { expected: expected.to_string(), found: found.to_string() },
            ))
        }
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), ResolveError> {
        match &stmt.kind {
            StmtKind::VarDecl { name, ty, init } => {
                let exists = match ty {
                    Type::Class(c) => self.program.class_index.contains_key(c),
                    _ => true,
                };
                if !exists {
                    return Err(undefined_class(stmt.loc, ty));
                }
                if self.lookup(name).is_some() {
                    return Err(ResolveError::new(stmt.loc, ResolveErrorKind::Duplicate(name.clone())));
                }
                if let Some(e) = init {
                    let found = self.expr(e)?;
                    self.expect_type(e.loc, ty, &found)?;
                }
                let slot = {
                    let m = self.method;
                    let slots = &mut self.program.methods[m.class.0][m.index].slots;
                    slots.push(Slot { name: name.clone(), ty: ty.clone() });
                    slots.len() - 1
                };
                self.record_stmt(stmt, Some(slot));
                self.scope.push(slot);
                return Ok(());
            }
            StmtKind::Assign { target, value } => {
                let target_ty = self.expr(target)?;
                let value_ty = self.expr(value)?;
                self.expect_type(value.loc, &target_ty, &value_ty)?;
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::Return(value) => {
                let ret = self.info().ret.clone();
                match value {
                    None if ret != Type::Void => {
                        return Err(ResolveError::new(
                            stmt.loc,
                            ResolveErrorKind::TypeMismatch { expected: ret.to_string(), found: "void".into() },
                        ))
                    }
                    None => {}
                    Some(e) => {
                        let found = self.expr(e)?;
                        if ret == Type::Void {
                            return Err(ResolveError::new(
                                e.loc,
                                ResolveErrorKind::TypeMismatch { expected: "void".into(), found: found.to_string() },
                            ));
                        }
                        self.expect_type(e.loc, &ret, &found)?;
                    }
                }
            }
            StmtKind::If { cond, then_body, else_body } => {
                self.record_stmt(stmt, None);
                let found = self.expr(cond)?;
                self.expect_type(cond.loc, &Type::Bool, &found)?;
                self.block(then_body)?;
                if let Some(b) = else_body {
                    self.block(b)?;
                }
                return Ok(());
            }
            StmtKind::While { cond, body } => {
                self.record_stmt(stmt, None);
                let found = self.expr(cond)?;
                self.expect_type(cond.loc, &Type::Bool, &found)?;
                self.block(body)?;
                return Ok(());
            }
            StmtKind::Assert(cond) => {
                let found = self.expr(cond)?;
                self.expect_type(cond.loc, &Type::Bool, &found)?;
            }
        }
        self.record_stmt(stmt, None);
        Ok(())
    }

    fn class_of(&self, loc: Loc, ty: &Type) -> Result<ClassId, ResolveError> {
        match ty {
            Type::Class(name) => self
                .program
                .class_id(name)
                .ok_or_else(|| ResolveError::new(loc, ResolveErrorKind::UndefinedClass(name.clone()))),
            other => Err(ResolveError::new(
                loc,
                ResolveErrorKind::TypeMismatch { expected: "class type".into(), found: other.to_string() },
            )),
        }
    }

    fn expr(&mut self, expr: &Expr) -> Result<Type, ResolveError> {
        match &expr.kind {
            ExprKind::Lit(lit) => {
                let ty = match lit {
                    Literal::Null => Type::Null,
                    Literal::Int(_) => Type::Int,
                    Literal::Bool(_) => Type::Bool,
                    Literal::Str(_) => Type::Str,
                };
                Ok(self.record_expr(expr, ty, Resolution::None))
            }
            ExprKind::Var(name) => {
                let slot = self
                    .lookup(name)
                    .ok_or_else(|| ResolveError::new(expr.loc, ResolveErrorKind::UndefinedVariable(name.clone())))?;
                let ty = self.info().slots[slot].ty.clone();
                Ok(self.record_expr(expr, ty, Resolution::Slot(slot)))
            }
            ExprKind::This => {
                let name = self.program.classes[self.method.class.0].name.clone();
                Ok(self.record_expr(expr, Type::Class(name), Resolution::None))
            }
            ExprKind::Field { receiver, name } => {
                let recv_ty = self.expr(receiver)?;
                let class = self.class_of(receiver.loc, &recv_ty)?;
                let info = &self.program.classes[class.0];
                let idx = info.field(name).ok_or_else(|| {
                    ResolveError::new(
                        expr.loc,
                        ResolveErrorKind::UndefinedField { class: info.name.clone(), field: name.clone() },
                    )
                })?;
                let ty = info.fields[idx].1.clone();
                Ok(self.record_expr(expr, ty, Resolution::Field(idx)))
            }
            ExprKind::Call { receiver, method, args } => {
                let class = match receiver {
                    Some(r) => {
                        let recv_ty = self.expr(r)?;
                        self.class_of(r.loc, &recv_ty)?
                    }
                    None => self.method.class,
                };
                let info = &self.program.classes[class.0];
                let index = info.method(method).ok_or_else(|| {
                    ResolveError::new(
                        expr.loc,
                        ResolveErrorKind::UndefinedMethod { class: info.name.clone(), method: method.clone() },
                    )
                })?;
                let mref = MethodRef { class, index };
                let params = self.program.method(mref).params.clone();
                let ret = self.program.method(mref).ret.clone();
                if params.len() != args.len() {
                    return Err(ResolveError::new(
                        expr.loc,
                        ResolveErrorKind::ArityMismatch {
                            method: method.clone(),
                            expected: params.len(),
                            found: args.len(),
                        },
                    ));
                }
                for (arg, param) in args.iter().zip(&params) {
                    let found = self.expr(arg)?;
                    self.expect_type(arg.loc, param, &found)?;
                }
                Ok(self.record_expr(expr, ret, Resolution::Method(mref)))
            }
            ExprKind::New(name) => {
                let class = self
                    .program
                    .class_id(name)
                    .ok_or_else(|| ResolveError::new(expr.loc, ResolveErrorKind::UndefinedClass(name.clone())))?;
                if self.program.classes[class.0].opaque {
                    return Err(ResolveError::new(expr.loc, ResolveErrorKind::NotConstructible(name.clone())));
                }
                Ok(self.record_expr(expr, Type::Class(name.clone()), Resolution::Class(class)))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs)?;
                let r = self.expr(rhs)?;
                let ty = self.binary_type(expr.loc, *op, &l, &r)?;
                Ok(self.record_expr(expr, ty, Resolution::None))
            }
            ExprKind::Unary { op, operand } => {
                let t = self.expr(operand)?;
                let want = match op {
                    UnOp::Not => Type::Bool,
                    UnOp::Neg => Type::Int,
                };
                self.expect_type(operand.loc, &want, &t)?;
                Ok(self.record_expr(expr, want, Resolution::None))
            }
        }
    }

    fn binary_type(&self, loc: Loc, op: BinOp, l: &Type, r: &Type) -> Result<Type, ResolveError> {
        let mismatch = || {
            ResolveError::new(
                loc,
                ResolveErrorKind::TypeMismatch {
                    expected: format!("operands valid for `{}`", op.symbol()),
                    found: format!("{l} and {r}"),
                },
            )
        };
        let scalar = |t: &Type| matches!(t, Type::Int | Type::Bool | Type::Str);
        match op {
            BinOp::Add if (*l == Type::Str || *r == Type::Str) && scalar(l) && scalar(r) => Ok(Type::Str),
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                if *l == Type::Int && *r == Type::Int {
                    Ok(Type::Int)
                } else {
                    Err(mismatch())
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                if *l == Type::Int && *r == Type::Int {
                    Ok(Type::Bool)
                } else {
                    Err(mismatch())
                }
            }
            BinOp::Eq | BinOp::Ne => {
                let comparable = l == r
                    || (l.is_class() && *r == Type::Null)
                    || (*l == Type::Null && r.is_class());
                if comparable {
                    Ok(Type::Bool)
                } else {
                    Err(mismatch())
                }
            }
            BinOp::And | BinOp::Or => {
                if *l == Type::Bool && *r == Type::Bool {
                    Ok(Type::Bool)
                } else {
                    Err(mismatch())
                }
            }
        }
    }
}
