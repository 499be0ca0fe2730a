use std::fmt;

use serde::{Deserialize, Serialize};

/// A source position. Columns and lines are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Program-wide ordinal of an expression node, assigned in parse order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExprId(pub u32);

/// Program-wide ordinal of a statement node, assigned in parse order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StmtId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Type {
    Int,
    Bool,
    Str,
    Class(String),
    Void,
    /// Type of the `null` literal; assignable to every class type.
    Null,
}

impl Type {
    pub fn is_class(&self) -> bool {
        matches!(self, Type::Class(_))
    }

    pub fn class_name(&self) -> Option<&str> {
        match self {
            Type::Class(name) => Some(name),
            _ => None,
        }
    }

    /// Whether a value of type `other` may be stored where `self` is expected.
    pub fn accepts(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Class(_), Type::Null) => true,
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("String"),
            Type::Class(name) => f.write_str(name),
            Type::Void => f.write_str("void"),
            Type::Null => f.write_str("null"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ast {
    pub classes: Vec<ClassDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    /// Opaque classes have no zero-argument constructor.
    pub opaque: bool,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Vec<Stmt>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub loc: Loc,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl { name: String, ty: Type, init: Option<Expr> },
    /// `target` is a `Var` or `Field` expression.
    Assign { target: Expr, value: Expr },
    Expr(Expr),
    Return(Option<Expr>),
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Option<Vec<Stmt>> },
    While { cond: Expr, body: Vec<Stmt> },
    Assert(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub id: ExprId,
    pub loc: Loc,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Null,
    Int(i64),
    Bool(bool),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Lit(Literal),
    Var(String),
    This,
    Field { receiver: Box<Expr>, name: String },
    /// `receiver` is `None` for an unqualified call on `this`.
    Call { receiver: Option<Box<Expr>>, method: String, args: Vec<Expr> },
    New(String),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
}

impl Ast {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Copy of the tree with every source location zeroed, keeping ordinals.
    /// Two programs are structurally equal iff their stripped forms are equal.
    pub fn without_locations(&self) -> Ast {
        let mut ast = self.clone();
        for class in &mut ast.classes {
            class.loc = Loc::default();
            for field in &mut class.fields {
                field.loc = Loc::default();
            }
            for method in &mut class.methods {
                method.loc = Loc::default();
                for p in &mut method.params {
                    p.loc = Loc::default();
                }
                strip_block(&mut method.body);
            }
        }
        ast
    }
}

fn strip_block(body: &mut [Stmt]) {
    for stmt in body {
        stmt.loc = Loc::default();
        match &mut stmt.kind {
            StmtKind::VarDecl { init, .. } => {
                if let Some(e) = init {
                    strip_expr(e);
                }
            }
            StmtKind::Assign { target, value } => {
                strip_expr(target);
                strip_expr(value);
            }
            StmtKind::Expr(e) | StmtKind::Assert(e) => strip_expr(e),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    strip_expr(e);
                }
            }
            StmtKind::If { cond, then_body, else_body } => {
                strip_expr(cond);
                strip_block(then_body);
                if let Some(b) = else_body {
                    strip_block(b);
                }
            }
            StmtKind::While { cond, body } => {
                strip_expr(cond);
                strip_block(body);
            }
        }
    }
}

fn strip_expr(expr: &mut Expr) {
    expr.loc = Loc::default();
    match &mut expr.kind {
        ExprKind::Field { receiver, .. } => strip_expr(receiver),
        ExprKind::Call { receiver, args, .. } => {
            if let Some(r) = receiver {
                strip_expr(r);
            }
            args.iter_mut().for_each(strip_expr);
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            strip_expr(lhs);
            strip_expr(rhs);
        }
        ExprKind::Unary { operand, .. } => strip_expr(operand),
        ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::This | ExprKind::New(_) => {}
    }
}

impl Ast {
    /// Reassigns statement and expression ordinals in pre-order. The parser
    /// calls this, so ordinals depend only on tree shape.
    pub fn renumber(&mut self) {
        let mut counter = Counter::default();
        for class in &mut self.classes {
            for method in &mut class.methods {
                counter.block(&mut method.body);
            }
        }
    }
}

#[derive(Default)]
struct Counter {
    stmt: u32,
    expr: u32,
}

impl Counter {
    fn block(&mut self, body: &mut [Stmt]) {
        for stmt in body {
            stmt.id = StmtId(self.stmt);
            self.stmt += 1;
            match &mut stmt.kind {
                StmtKind::VarDecl { init, .. } => {
                    if let Some(e) = init {
                        self.expr(e);
                    }
                }
                StmtKind::Assign { target, value } => {
                    self.expr(target);
                    self.expr(value);
                }
                StmtKind::Expr(e) | StmtKind::Assert(e) => self.expr(e),
                StmtKind::Return(e) => {
                    if let Some(e) = e {
                        self.expr(e);
                    }
                }
                StmtKind::If { cond, then_body, else_body } => {
                    self.expr(cond);
                    self.block(then_body);
                    if let Some(b) = else_body {
                        self.block(b);
                    }
                }
                StmtKind::While { cond, body } => {
                    self.expr(cond);
                    self.block(body);
                }
            }
        }
    }

    fn expr(&mut self, expr: &mut Expr) {
        expr.id = ExprId(self.expr);
        self.expr += 1;
        match &mut expr.kind {
            ExprKind::Field { receiver, .. } => self.expr(receiver),
            ExprKind::Call { receiver, args, .. } => {
                if let Some(r) = receiver {
                    self.expr(r);
                }
                for a in args {
                    self.expr(a);
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            ExprKind::Unary { operand, .. } => self.expr(operand),
            ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::This | ExprKind::New(_) => {}
        }
    }
}
