use std::fmt::{self, Write};

use super::expr::{occurs_free, Expr, Side, Sort};

// Binding strength of the slot an expression is printed into.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Top,
    Arrow,
    Product,
    App,
    Atom,
}

/// `{:#}` writes every `Pi` and `Sigma` with its binder instead of the
/// `->` and `*` shorthand.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_expr(&mut out, self, Prec::Top, f.alternate());
        f.write_str(&out)
    }
}

fn own_prec(e: &Expr, explicit: bool) -> Prec {
    match e {
        Expr::Lam { .. } | Expr::If { .. } | Expr::Pair { .. } => Prec::Top,
        Expr::Pi { var, body, .. } => {
            if explicit || occurs_free(var, body) {
                Prec::Top
            } else {
                Prec::Arrow
            }
        }
        Expr::Sigma { var, body, .. } => {
            if explicit || occurs_free(var, body) {
                Prec::Top
            } else {
                Prec::Product
            }
        }
        Expr::App(..) | Expr::Proj(..) => Prec::App,
        Expr::Const(_)
        | Expr::Sort(_)
        | Expr::Var(_)
        | Expr::Random { .. }
        | Expr::Dispatch { .. } => Prec::Atom,
    }
}

fn write_expr(out: &mut String, e: &Expr, slot: Prec, explicit: bool) {
    // `*` directly after an operand would read as the product operator.
    if matches!(e, Expr::Sort(Sort::Star)) && slot == Prec::Atom {
        out.push_str("(*)");
        return;
    }
    if own_prec(e, explicit) < slot {
        out.push('(');
        write_bare(out, e, explicit);
        out.push(')');
    } else {
        write_bare(out, e, explicit);
    }
}

fn write_bare(out: &mut String, e: &Expr, explicit: bool) {
    match e {
        Expr::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Expr::Sort(s) => {
            let _ = write!(out, "{s}");
        }
        Expr::Var(v) => out.push_str(v),
        Expr::Pair { left, right, tag } => {
            out.push_str("pair(");
            write_expr(out, left, Prec::Top, explicit);
            out.push_str(", ");
            write_expr(out, right, Prec::Top, explicit);
            out.push_str(") : ");
            write_expr(out, tag, Prec::Top, explicit);
        }
        Expr::App(fun, arg) => {
            write_expr(out, fun, Prec::App, explicit);
            out.push(' ');
            write_expr(out, arg, Prec::Atom, explicit);
        }
        Expr::Lam { var, domain, body } => {
            let _ = write!(out, "\\{var}:");
            write_expr(out, domain, Prec::Arrow, explicit);
            out.push_str(". ");
            write_expr(out, body, Prec::Top, explicit);
        }
        Expr::Pi { var, domain, body } | Expr::Sigma { var, domain, body } => {
            let dependent = explicit || occurs_free(var, body);
            let is_pi = matches!(e, Expr::Pi { .. });
            if dependent {
                let _ = write!(out, "{} {var}:", if is_pi { "Pi" } else { "Sigma" });
                write_expr(out, domain, Prec::Arrow, explicit);
                out.push_str(". ");
                write_expr(out, body, Prec::Top, explicit);
            } else if is_pi {
                write_expr(out, domain, Prec::Product, explicit);
                out.push_str(" -> ");
                write_expr(out, body, Prec::Arrow, explicit);
            } else {
                write_expr(out, domain, Prec::App, explicit);
                out.push_str(" * ");
                write_expr(out, body, Prec::Product, explicit);
            }
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            write_expr(out, cond, Prec::Top, explicit);
            out.push_str(" then ");
            write_expr(out, then_branch, Prec::Top, explicit);
            out.push_str(" else ");
            write_expr(out, else_branch, Prec::Top, explicit);
        }
        Expr::Proj(side, target) => {
            out.push_str(match side {
                Side::First => "fst ",
                Side::Second => "snd ",
            });
            write_expr(out, target, Prec::Atom, explicit);
        }
        Expr::Random { rho, target } => {
            let _ = write!(out, "random[{}](", rho.get());
            write_expr(out, target, Prec::Top, explicit);
            out.push(')');
        }
        Expr::Dispatch { var, cases, arg } => {
            let _ = write!(out, "case {var} {{");
            for c in cases.iter() {
                out.push(' ');
                write_expr(out, &c.ty, Prec::Top, explicit);
                out.push_str(" => ");
                write_expr(out, &c.body, Prec::Top, explicit);
                out.push(';');
            }
            out.push_str(" }(");
            write_expr(out, arg, Prec::Top, explicit);
            out.push(')');
        }
    }
}
