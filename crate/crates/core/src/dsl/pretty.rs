//! Pretty printer. Output re-parses to an identical tree; binary operations
//! are always parenthesised, as in the listings ADATE prints.

use super::ast::{Expr, NeuronProgram, Pattern, PARAMS};

const WIDTH: usize = 72;

/// Formats a real the SML way: `~` for negation, `E` for the exponent.
pub fn sml_real(v: f64) -> String {
    let s = format!("{v:?}");
    s.replace('-', "~").replace('e', "E")
}

pub fn pretty_print(p: &NeuronProgram) -> String {
    let mut out = String::from("fun f\n      (\n");
    for (i, param) in PARAMS.iter().enumerate() {
        out.push_str("        ");
        out.push_str(param.name());
        if i + 1 < PARAMS.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("        ) =\n");
    write_expr(&mut out, &p.body, 2);
    out.push('\n');
    out
}

/// Single-line rendering of an expression.
pub fn flat(e: &Expr) -> String {
    match e {
        Expr::Const(v) => sml_real(*v),
        Expr::Param(p) => p.name().to_string(),
        Expr::Var(v) => v.clone(),
        Expr::Bias => "bias".into(),
        Expr::Bin(op, a, b) => format!("( {} {} {} )", operand(a), op.symbol(), operand(b)),
        Expr::Act(f, a) => format!("{}( {} )", f.name(), flat(a)),
        Expr::Lc(i, a) => format!("lc{i}( {} )", flat(a)),
        Expr::Apply(g, a) => format!("{g}( {} )", flat(a)),
        Expr::Cons(h, t) => format!("cons( {}, {} )", flat(h), flat(t)),
        Expr::Tuple(es) => {
            let parts: Vec<String> = es.iter().map(flat).collect();
            format!("( {} )", parts.join(", "))
        }
        Expr::Case(s, pat, b) => format!("case {} of {} => {}", flat(s), pattern(pat), flat(b)),
        Expr::Let { name, param, body, rest } => {
            format!("let fun {name} {param} = {} in {} end", flat(body), flat(rest))
        }
    }
}

fn operand(e: &Expr) -> String {
    match e {
        Expr::Case(..) => format!("( {} )", flat(e)),
        _ => flat(e),
    }
}

fn pattern(p: &Pattern) -> String {
    match p {
        Pattern::Var(v) => v.clone(),
        Pattern::Tuple(vs) => format!("( {} )", vs.join(", ")),
    }
}

fn pad(out: &mut String, indent: usize) {
    out.extend(std::iter::repeat_n(' ', indent));
}

/// Writes `e` starting at the current column (already indented to `indent`).
fn write_expr(out: &mut String, e: &Expr, indent: usize) {
    let f = flat(e);
    if indent + f.len() <= WIDTH {
        if out.ends_with('\n') {
            pad(out, indent);
        }
        out.push_str(&f);
        return;
    }
    if out.ends_with('\n') {
        pad(out, indent);
    }
    match e {
        Expr::Bin(op, a, b) => {
            out.push_str("(\n");
            write_operand(out, a, indent + 2);
            out.push(' ');
            out.push_str(op.symbol());
            out.push('\n');
            write_operand(out, b, indent + 2);
            out.push('\n');
            pad(out, indent + 2);
            out.push(')');
        }
        Expr::Act(func, a) => call(out, func.name(), a, indent),
        Expr::Lc(i, a) => call(out, &format!("lc{i}"), a, indent),
        Expr::Apply(g, a) => call(out, g, a, indent),
        Expr::Cons(h, t) => {
            out.push_str("cons(\n");
            write_expr(out, h, indent + 2);
            out.push_str(",\n");
            write_expr(out, t, indent + 2);
            out.push('\n');
            pad(out, indent + 2);
            out.push(')');
        }
        Expr::Tuple(es) => {
            out.push_str("(\n");
            for (i, x) in es.iter().enumerate() {
                write_expr(out, x, indent + 2);
                if i + 1 < es.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, indent + 2);
            out.push(')');
        }
        Expr::Case(s, pat, b) => {
            out.push_str("case\n");
            write_expr(out, s, indent + 2);
            out.push_str(" of\n");
            pad(out, indent + 2);
            out.push_str(&pattern(pat));
            out.push_str(" =>\n");
            write_expr(out, b, indent + 4);
        }
        Expr::Let { name, param, body, rest } => {
            out.push_str("let\n");
            pad(out, indent + 2);
            out.push_str(&format!("fun {name} {param} =\n"));
            write_expr(out, body, indent + 4);
            out.push('\n');
            pad(out, indent);
            out.push_str("in\n");
            write_expr(out, rest, indent + 2);
            out.push('\n');
            pad(out, indent);
            out.push_str("end");
        }
        Expr::Const(_) | Expr::Param(_) | Expr::Var(_) | Expr::Bias => out.push_str(&f),
    }
}

fn write_operand(out: &mut String, e: &Expr, indent: usize) {
    if matches!(e, Expr::Case(..)) {
        pad(out, indent);
        out.push_str("(\n");
        write_expr(out, e, indent + 2);
        out.push('\n');
        pad(out, indent);
        out.push(')');
    } else {
        write_expr(out, e, indent);
    }
}

fn call(out: &mut String, name: &str, arg: &Expr, indent: usize) {
    out.push_str(name);
    out.push_str("(\n");
    write_expr(out, arg, indent + 2);
    out.push('\n');
    pad(out, indent + 2);
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::{parse, parse_expr};

    #[test]
    fn negation_uses_tilde() {
        assert_eq!(sml_real(-0.5), "~0.5");
        assert_eq!(flat(&Expr::Const(-0.5)), "~0.5");
        assert_eq!(sml_real(-1.5e-12), "~1.5E~12");
    }

    #[test]
    fn reals_round_trip() {
        for v in [0.0, 1.0, -0.014531347527330391, 1e300, -2.5e-310, 0.1029527350644156] {
            assert_eq!(parse_expr(&sml_real(v)).unwrap(), Expr::Const(v));
        }
    }

    #[test]
    fn case_operand_is_parenthesised() {
        let e = parse_expr("( case SelfPeep0 of V => V ) - SelfPeep1").unwrap();
        assert_eq!(parse_expr(&flat(&e)).unwrap(), e);
    }

    #[test]
    fn long_program_breaks_lines_and_round_trips() {
        let src = "( 0.0, 0.0, 0.0, 0.0, tanh( lc0( cons( SelfPeep0, cons( SelfPeep1, cons( SelfPeep2, cons( SelfPeep3, InputsLC ) ) ) ) ) ) )";
        let p = parse(src).unwrap();
        let text = pretty_print(&p);
        assert!(text.lines().count() > 12);
        assert_eq!(parse(&text).unwrap(), p);
    }
}
