//! Recursive-descent parser. The grammar is LL(2): a statement starting with
//! a type keyword, or with two identifiers in a row, is a declaration.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse(source: &str) -> Result<Ast, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut ast = parser.program()?;
    ast.renumber();
    Ok(ast)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(ParseError::new(
            self.loc(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> PResult<Loc> {
        if *self.peek() == tok {
            Ok(self.bump().loc)
        } else {
            self.unexpected(wanted)
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn program(&mut self) -> PResult<Ast> {
        let mut classes = Vec::new();
        while *self.peek() != Tok::Eof {
            classes.push(self.class_decl()?);
        }
        Ok(Ast { classes })
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let loc = self.loc();
        let opaque = self.eat(&Tok::Opaque);
        self.expect(Tok::Class, "`class`")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let member_loc = self.loc();
            let ty = self.ret_type()?;
            let member = self.ident()?;
            if *self.peek() == Tok::LParen {
                methods.push(self.method_rest(member, ty, member_loc)?);
            } else {
                if ty == Type::Void {
                    return Err(ParseError::new(member_loc, "field cannot have type void"));
                }
                self.expect(Tok::Semi, "`;` or `(`")?;
                fields.push(FieldDecl { name: member, ty, loc: member_loc });
            }
        }
        Ok(ClassDecl { name, opaque, fields, methods, loc })
    }

    fn value_type(&mut self) -> PResult<Type> {
        let ty = match self.peek().clone() {
            Tok::IntTy => Type::Int,
            Tok::BoolTy => Type::Bool,
            Tok::StringTy => Type::Str,
            Tok::Ident(name) => Type::Class(name),
            _ => return self.unexpected("type"),
        };
        self.bump();
        Ok(ty)
    }

    fn ret_type(&mut self) -> PResult<Type> {
        if self.eat(&Tok::Void) {
            Ok(Type::Void)
        } else {
            self.value_type()
        }
    }

    fn method_rest(&mut self, name: String, ret: Type, loc: Loc) -> PResult<MethodDecl> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let ploc = self.loc();
                let ty = self.value_type()?;
                let pname = self.ident()?;
                params.push(Param { name: pname, ty, loc: ploc });
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        let body = self.block()?;
        Ok(MethodDecl { name, params, ret, body, loc })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut body = Vec::new();
        while !self.eat(&Tok::RBrace) {
            body.push(self.stmt()?);
        }
        Ok(body)
    }

    fn is_decl_start(&self) -> bool {
        match self.peek() {
            Tok::IntTy | Tok::BoolTy | Tok::StringTy => true,
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Ident(_)),
            _ => false,
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = match self.peek() {
            Tok::If => self.if_rest()?,
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.bump();
                let value = if *self.peek() == Tok::Semi { None } else { Some(self.expr()?) };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            Tok::Assert => {
                self.bump();
                let cond = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Assert(cond)
            }
            _ if self.is_decl_start() => {
                let ty = self.value_type()?;
                let name = self.ident()?;
                let init = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::VarDecl { name, ty, init }
            }
            _ => {
                let expr = self.expr()?;
                if self.eat(&Tok::Assign) {
                    if !matches!(expr.kind, ExprKind::Var(_) | ExprKind::Field { .. }) {
                        return Err(ParseError::new(expr.loc, "invalid assignment target"));
                    }
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Assign { target: expr, value }
                } else {
                    self.expect(Tok::Semi, "`;` or `=`")?;
                    StmtKind::Expr(expr)
                }
            }
        };
        Ok(Stmt { id: StmtId(0), loc, kind })
    }

    fn if_rest(&mut self) -> PResult<StmtKind> {
        self.expect(Tok::If, "`if`")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        let then_body = self.block()?;
        let else_body = if self.eat(&Tok::Else) {
            if *self.peek() == Tok::If {
                let loc = self.loc();
                let kind = self.if_rest()?;
                Some(vec![Stmt { id: StmtId(0), loc, kind }])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(StmtKind::If { cond, then_body, else_body })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[(Tok, BinOp)]] = &[
            &[(Tok::OrOr, BinOp::Or)],
            &[(Tok::AndAnd, BinOp::And)],
            &[(Tok::EqEq, BinOp::Eq), (Tok::NotEq, BinOp::Ne)],
            &[(Tok::Lt, BinOp::Lt), (Tok::Le, BinOp::Le), (Tok::Gt, BinOp::Gt), (Tok::Ge, BinOp::Ge)],
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
            &[(Tok::Star, BinOp::Mul), (Tok::Slash, BinOp::Div), (Tok::Percent, BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = LEVELS[level].iter().find(|(t, _)| t == self.peek()).map(|(_, op)| *op);
            let Some(op) = op else { break };
            let loc = self.bump().loc;
            let rhs = self.binary(level + 1)?;
            lhs = mk(loc, ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let op = match self.peek() {
            Tok::Bang => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.postfix(),
        };
        self.bump();
        let operand = self.unary()?;
        Ok(mk(loc, ExprKind::Unary { op, operand: Box::new(operand) }))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.primary()?;
        while *self.peek() == Tok::Dot {
            let loc = self.bump().loc;
            let name = self.ident()?;
            expr = if *self.peek() == Tok::LParen {
                let args = self.args()?;
                mk(loc, ExprKind::Call { receiver: Some(Box::new(expr)), method: name, args })
            } else {
                mk(loc, ExprKind::Field { receiver: Box::new(expr), name })
            };
        }
        Ok(expr)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(&Tok::RParen) {
                return Ok(args);
            }
            self.expect(Tok::Comma, "`,` or `)`")?;
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                ExprKind::Lit(Literal::Int(n))
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Lit(Literal::Str(s))
            }
            Tok::True => {
                self.bump();
                ExprKind::Lit(Literal::Bool(true))
            }
            Tok::False => {
                self.bump();
                ExprKind::Lit(Literal::Bool(false))
            }
            Tok::Null => {
                self.bump();
                ExprKind::Lit(Literal::Null)
            }
            Tok::This => {
                self.bump();
                ExprKind::This
            }
            Tok::New => {
                self.bump();
                let class = self.ident()?;
                self.expect(Tok::LParen, "`(`")?;
                self.expect(Tok::RParen, "`)` (constructors take no arguments)")?;
                ExprKind::New(class)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let args = self.args()?;
                    ExprKind::Call { receiver: None, method: name, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(inner);
            }
            _ => return self.unexpected("expression"),
        };
        Ok(mk(loc, kind))
    }
}

fn mk(loc: Loc, kind: ExprKind) -> Expr {
    Expr { id: ExprId(0), loc, kind }
}
