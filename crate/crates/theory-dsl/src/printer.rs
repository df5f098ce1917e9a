//! Pretty-printer for theories, expressions and formulas.
//!
//! The printed form is minimal: parentheses appear only where precedence
//! demands them, default preconditions (`true`) and likelihoods (`1`) are
//! omitted, and real constants print in shortest round-trip form. Parsing
//! the printed text yields a structurally identical spec.

use std::fmt::Write as _;

use expr_core::{BinOp, Expr, Formula, UnOp, Value};

use crate::ast::{ActionDecl, ActionKind, Domain, ParamDecl, TheorySpec};

pub fn print_theory(spec: &TheorySpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "theory {}", spec.name);
    out.push('\n');
    for f in &spec.fluents {
        let _ = writeln!(out, "fluent {} : {}", f.name, domain_text(&f.domain));
    }
    out.push('\n');
    let _ = writeln!(out, "init p = {}", print_expr(&spec.init_p));
    for a in &spec.actions {
        out.push('\n');
        print_action(&mut out, spec, a);
    }
    out
}

fn domain_text(d: &Domain) -> String {
    match d {
        Domain::Real => "real".to_string(),
        Domain::Finite(vals) => {
            let items: Vec<&str> = vals.iter().map(|v| &**v).collect();
            format!("{{ {} }}", items.join(", "))
        }
    }
}

fn param_list(params: &[ParamDecl]) -> String {
    params
        .iter()
        .map(|p| format!("{}: {}", p.name, domain_text(&p.domain)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn print_action(out: &mut String, spec: &TheorySpec, a: &ActionDecl) {
    let _ = write!(out, "action {}(", a.name);
    out.push_str(&param_list(&a.nominal));
    if !a.actual.is_empty() {
        out.push_str(" ~ ");
        out.push_str(&param_list(&a.actual));
    }
    out.push(')');
    if a.kind == ActionKind::Sensing {
        out.push_str(" sensing");
    }
    out.push_str(" {\n");
    if a.precondition != Formula::True {
        let _ = writeln!(out, "  poss = {}", print_formula(&a.precondition));
    }
    if a.likelihood != Expr::num(1.0) {
        let _ = writeln!(out, "  likelihood = {}", print_expr(&a.likelihood));
    }
    for (slot, e) in &a.ssa {
        let _ = writeln!(out, "  {}' = {}", spec.fluents[*slot].name, print_expr(e));
    }
    out.push_str("}\n");
}

// ---- expressions --------------------------------------------------------

/// Binding strength of an expression node: higher binds tighter.
fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => 2,
        Expr::Unary(UnOp::Neg, _) => 3,
        // Atoms and call-shaped nodes never need parentheses.
        _ => 4,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_child(out: &mut String, e: &Expr, min_level: u8) {
    if expr_level(e) < min_level {
        out.push('(');
        write_expr(out, e, 0);
        out.push(')');
    } else {
        write_expr(out, e, min_level);
    }
}

fn write_expr(out: &mut String, e: &Expr, _min_level: u8) {
    match e {
        Expr::Const(Value::Real(x)) => {
            let _ = write!(out, "{x:?}");
        }
        Expr::Const(Value::Sym(s)) => out.push_str(s),
        Expr::Fluent { name, history, .. } => {
            out.push_str(name);
            if let Some(k) = history {
                let _ = write!(out, "@{k}");
            }
        }
        Expr::Param { name } => out.push_str(name),
        Expr::Unary(UnOp::Neg, a) => {
            out.push('-');
            write_child(out, a, 3);
        }
        Expr::Unary(UnOp::Abs, a) => {
            out.push_str("abs(");
            write_expr(out, a, 0);
            out.push(')');
        }
        Expr::Binary(op @ (BinOp::Min | BinOp::Max), a, b) => {
            out.push_str(if *op == BinOp::Min { "min(" } else { "max(" });
            write_expr(out, a, 0);
            out.push_str(", ");
            write_expr(out, b, 0);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            let (text, level) = match op {
                BinOp::Add => ("+", 1),
                BinOp::Sub => ("-", 1),
                BinOp::Mul => ("*", 2),
                BinOp::Div => ("/", 2),
                BinOp::Min | BinOp::Max => unreachable!("handled above"),
            };
            write_child(out, a, level);
            let _ = write!(out, " {text} ");
            // Left-associative: the right child needs parens at equal level.
            write_child(out, b, level + 1);
        }
        Expr::Gauss { arg, mean, variance } => {
            out.push_str("gauss(");
            write_expr(out, arg, 0);
            out.push_str("; ");
            write_expr(out, mean, 0);
            out.push_str(", ");
            write_expr(out, variance, 0);
            out.push(')');
        }
        Expr::Cases { branches, default } => {
            out.push_str("cases { ");
            for (g, v) in branches {
                write_expr(out, v, 0);
                out.push_str(" if ");
                out.push_str(&print_formula(g));
                out.push_str(" ; ");
            }
            write_expr(out, default, 0);
            out.push_str(" }");
        }
    }
}

// ---- formulas -----------------------------------------------------------

fn formula_level(f: &Formula) -> u8 {
    match f {
        Formula::Implies(_, _) => 1,
        Formula::Or(_, _) => 2,
        Formula::And(_, _) => 3,
        Formula::Not(_) => 4,
        Formula::True | Formula::False | Formula::Compare(_, _, _) => 5,
    }
}

pub fn print_formula(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(&mut s, f);
    s
}

fn write_formula_child(out: &mut String, f: &Formula, min_level: u8) {
    if formula_level(f) < min_level {
        out.push('(');
        write_formula(out, f);
        out.push(')');
    } else {
        write_formula(out, f);
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Compare(op, a, b) => {
            write_expr(out, a, 0);
            let _ = write!(out, " {op} ");
            write_expr(out, b, 0);
        }
        Formula::Not(g) => {
            out.push_str("not ");
            write_formula_child(out, g, 4);
        }
        Formula::And(a, b) => {
            write_formula_child(out, a, 3);
            out.push_str(" and ");
            write_formula_child(out, b, 4);
        }
        Formula::Or(a, b) => {
            write_formula_child(out, a, 2);
            out.push_str(" or ");
            write_formula_child(out, b, 3);
        }
        Formula::Implies(a, b) => {
            // Right-associative, like the parser.
            write_formula_child(out, a, 2);
            out.push_str(" -> ");
            write_formula_child(out, b, 1);
        }
    }
}
