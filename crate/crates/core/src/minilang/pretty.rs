//! Canonical source rendering. Binary and unary operations are fully
//! parenthesized so that re-parsing yields the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_print(ast: &Ast) -> String {
    let mut out = String::new();
    for (i, class) in ast.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if class.opaque {
            out.push_str("opaque ");
        }
        let _ = writeln!(out, "class {} {{", class.name);
        for field in &class.fields {
            let _ = writeln!(out, "    {} {};", field.ty, field.name);
        }
        for method in &class.methods {
            let params: Vec<String> =
                method.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
            let _ = writeln!(out, "    {} {}({}) {{", method.ret, method.name, params.join(", "));
            block(&mut out, &method.body, 2);
            out.push_str("    }\n");
        }
        out.push_str("}\n");
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn block(out: &mut String, body: &[Stmt], depth: usize) {
    for stmt in body {
        indent(out, depth);
        stmt_text(out, stmt, depth);
        out.push('\n');
    }
}

fn stmt_text(out: &mut String, stmt: &Stmt, depth: usize) {
    match &stmt.kind {
        StmtKind::VarDecl { name, ty, init } => {
            let _ = write!(out, "{ty} {name}");
            if let Some(e) = init {
                let _ = write!(out, " = {}", expr_to_string(e));
            }
            out.push(';');
        }
        StmtKind::Assign { target, value } => {
            let _ = write!(out, "{} = {};", expr_to_string(target), expr_to_string(value));
        }
        StmtKind::Expr(e) => {
            let _ = write!(out, "{};", expr_to_string(e));
        }
        StmtKind::Return(None) => out.push_str("return;"),
        StmtKind::Return(Some(e)) => {
            let _ = write!(out, "return {};", expr_to_string(e));
        }
        StmtKind::Assert(e) => {
            let _ = write!(out, "assert {};", expr_to_string(e));
        }
        StmtKind::If { cond, then_body, else_body } => {
            let _ = writeln!(out, "if ({}) {{", expr_to_string(cond));
            block(out, then_body, depth + 1);
            indent(out, depth);
            out.push('}');
            if let Some(else_body) = else_body {
                out.push_str(" else {\n");
                block(out, else_body, depth + 1);
                indent(out, depth);
                out.push('}');
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", expr_to_string(cond));
            block(out, body, depth + 1);
            indent(out, depth);
            out.push('}');
        }
    }
}

pub fn expr_to_string(expr: &Expr) -> String {
    match &expr.kind {
        ExprKind::Lit(Literal::Null) => "null".to_string(),
        ExprKind::Lit(Literal::Int(n)) => n.to_string(),
        ExprKind::Lit(Literal::Bool(b)) => b.to_string(),
        ExprKind::Lit(Literal::Str(s)) => {
            let mut text = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => text.push_str("\\\""),
                    '\\' => text.push_str("\\\\"),
                    '\n' => text.push_str("\\n"),
                    '\t' => text.push_str("\\t"),
                    c => text.push(c),
                }
            }
            text.push('"');
            text
        }
        ExprKind::Var(name) => name.clone(),
        ExprKind::This => "this".to_string(),
        ExprKind::Field { receiver, name } => format!("{}.{name}", expr_to_string(receiver)),
        ExprKind::Call { receiver, method, args } => {
            let args: Vec<String> = args.iter().map(expr_to_string).collect();
            match receiver {
                Some(r) => format!("{}.{method}({})", expr_to_string(r), args.join(", ")),
                None => format!("{method}({})", args.join(", ")),
            }
        }
        ExprKind::New(class) => format!("new {class}()"),
        ExprKind::Binary { op, lhs, rhs } => {
            format!("({} {} {})", expr_to_string(lhs), op.symbol(), expr_to_string(rhs))
        }
        ExprKind::Unary { op, operand } => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            format!("({sym}{})", expr_to_string(operand))
        }
    }
}
