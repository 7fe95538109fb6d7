use nlst_geo::text::{format_geometry, format_mpoint, format_period};

use super::{index_id, Expr, Func, PhysicalOp, PhysicalPlan};

/// Canonical single-line text of a plan.
pub fn render_plan(p: &PhysicalPlan) -> String {
    let mut out = String::from("query");
    op(&p.root, &mut out);
    out.push(';');
    out
}

fn op(o: &PhysicalOp, out: &mut String) {
    match o {
        PhysicalOp::Feed { relation } => {
            out.push(' ');
            out.push_str(relation);
            out.push_str(" feed");
        }
        PhysicalOp::WindowIntersects { relation, attr, rect } => {
            out.push_str(&format!(
                " {} {relation} windowintersects[[{} {} {} {}]]",
                index_id(relation, attr),
                rect.xmin,
                rect.ymin,
                rect.xmax,
                rect.ymax
            ));
        }
        PhysicalOp::Filter { input, pred } => {
            op(input, out);
            out.push_str(" filter [(");
            out.push_str(&render_expr(pred));
            out.push_str(")]");
        }
        PhysicalOp::Knearest { input, attr, object, k } => {
            op(input, out);
            out.push_str(&format!(" knearest[{attr}, {}, {k}]", object_text(object)));
        }
        PhysicalOp::SpatialJoin { left, right, left_attr, right_attr, pred } => {
            op(left, out);
            op(right, out);
            out.push_str(&format!(" spatialjoin[{left_attr}, {right_attr}, {pred}]"));
        }
        PhysicalOp::Similarity { input, attr, object, n } => {
            op(input, out);
            out.push_str(&format!(" similarity[{attr}, {}, {n}]", object_text(object)));
        }
        PhysicalOp::Project { input, attrs } => {
            op(input, out);
            out.push_str(&format!(" project[{}]", attrs.join(", ")));
        }
        PhysicalOp::Consume { input } => {
            op(input, out);
            out.push_str(" consume");
        }
        PhysicalOp::Count { input } => {
            op(input, out);
            out.push_str(" count");
        }
        PhysicalOp::Aggregate { input, func, attr } => {
            op(input, out);
            out.push_str(&format!(" aggregate[{}, {attr}]", func.name()));
        }
    }
}

pub(super) fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Object names print bare when they are identifiers, quoted otherwise.
fn object_text(o: &str) -> String {
    if is_ident(o) {
        o.to_string()
    } else {
        quote(o)
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(_) => 3,
        Expr::Cmp(..) | Expr::Call(Func::Intersects, _) => 4,
        _ => 5,
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(e, 1, &mut out);
    out
}

fn expr(e: &Expr, min: u8, out: &mut String) {
    if prec(e) < min {
        out.push('(');
        expr(e, 1, out);
        out.push(')');
        return;
    }
    match e {
        Expr::Attr(a) => {
            out.push('.');
            out.push_str(a);
        }
        Expr::Num(v) => out.push_str(&v.to_string()),
        Expr::Str(s) => out.push_str(&quote(s)),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Geom(g) => out.push_str(&format_geometry(g)),
        Expr::Mpoint(m) => out.push_str(&format_mpoint(m)),
        Expr::Period(p) => out.push_str(&format_period(p)),
        Expr::Call(Func::Intersects, args) => {
            expr(&args[0], 5, out);
            out.push_str(" intersects ");
            expr(&args[1], 5, out);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(a, 1, out);
            }
            out.push(')');
        }
        Expr::Cmp(op, a, b) => {
            expr(a, 5, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            expr(b, 5, out);
        }
        Expr::And(a, b) => {
            expr(a, 2, out);
            out.push_str(" and ");
            expr(b, 3, out);
        }
        Expr::Or(a, b) => {
            expr(a, 1, out);
            out.push_str(" or ");
            expr(b, 2, out);
        }
        Expr::Not(a) => {
            out.push_str("not ");
            expr(a, 3, out);
        }
    }
}
