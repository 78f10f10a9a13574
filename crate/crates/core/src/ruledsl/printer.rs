use std::fmt::Write;

use super::ast::{Expr, RuleAst};

const NEG_PRECEDENCE: u8 = 3;

/// Canonical text of a rule: one declaration or statement per line, minimal
/// parentheses, shortest round-tripping number literals.
pub fn print(ast: &RuleAst) -> String {
    let mut out = String::new();
    for p in &ast.params {
        let _ = writeln!(out, "{} = {};", p.name, number(p.value));
    }
    for s in &ast.statements {
        let _ = writeln!(out, "{} = {};", s.target, expr(&s.expr, 0));
    }
    out
}

fn number(v: f64) -> String {
    format!("{v:?}")
}

fn expr(e: &Expr, min_prec: u8) -> String {
    match e {
        Expr::Num(v) => number(*v),
        Expr::Var(name) => name.clone(),
        Expr::Neg(inner) => format!("-{}", expr(inner, NEG_PRECEDENCE)),
        Expr::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            // right operands of equal precedence keep their grouping
            let s = format!("{} {} {}", expr(lhs, p), op.symbol(), expr(rhs, p + 1));
            if p < min_prec {
                format!("({s})")
            } else {
                s
            }
        }
        Expr::Call(f, args) => {
            let args: Vec<String> = args.iter().map(|a| expr(a, 0)).collect();
            format!("{}({})", f.name(), args.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn canonical_de_text() {
        let ast = parse("F=0.5; CR=0.9; v = r1 + F*(r2 - r3); offspring = bincross(x, clamp(v), CR);").unwrap();
        assert_eq!(
            print(&ast),
            "F = 0.5;\nCR = 0.9;\nv = r1 + F * (r2 - r3);\noffspring = bincross(x, clamp(v), CR);\n"
        );
    }

    #[test]
    fn grouping_is_preserved() {
        for src in [
            "offspring = x - (best - x);",
            "offspring = x / (r1 * r2);",
            "offspring = -(x + r1) * 2;",
            "offspring = --x;",
            "offspring = x * -r1;",
            "offspring = x + 1e-7 * r1 - 1e22;",
        ] {
            let ast = parse(src).unwrap();
            let text = print(&ast);
            assert_eq!(parse(&text).unwrap(), ast, "{src} -> {text}");
        }
    }
}
