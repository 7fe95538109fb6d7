use std::sync::Arc;

use nlst_geo::text::{Scanner, TextValue};
use nlst_geo::{GeoError, Rect};
use thiserror::Error;

use super::{AggFn, CmpOp, Expr, Func, JoinPred, PhysicalOp, PhysicalPlan};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("plan syntax error at byte {pos} (token '{token}'): {msg}")]
pub struct PlanSyntaxError {
    pub pos: usize,
    pub token: String,
    pub msg: String,
}

const OPS: [&str; 8] = ["filter", "knearest", "spatialjoin", "similarity", "project", "consume", "count", "aggregate"];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    /// Text of the token at the cursor, for error messages.
    fn token_here(&mut self) -> String {
        self.skip_ws();
        let rest = self.rest();
        if rest.is_empty() {
            return "<end>".into();
        }
        let n = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .filter(|&n| n > 0)
            .unwrap_or_else(|| rest.chars().next().map_or(0, char::len_utf8));
        rest[..n].to_string()
    }

    fn error_at(&self, pos: usize, token: &str, msg: impl Into<String>) -> PlanSyntaxError {
        PlanSyntaxError { pos, token: token.to_string(), msg: msg.into() }
    }

    fn error(&mut self, msg: impl Into<String>) -> PlanSyntaxError {
        let tok = self.token_here();
        self.error_at(self.pos, &tok, msg)
    }

    fn ident(&mut self) -> Result<&'a str, PlanSyntaxError> {
        self.skip_ws();
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Err(self.error("expected an identifier")),
        }
        let n = chars
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += n;
        Ok(&rest[..n])
    }

    /// Identifier lookahead without consuming.
    fn peek_ident(&mut self) -> Option<&'a str> {
        let save = self.pos;
        let r = self.ident().ok();
        self.pos = save;
        r
    }

    fn keyword(&mut self, kw: &str) -> Result<(), PlanSyntaxError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.ident() {
            Ok(w) if w == kw => Ok(()),
            Ok(w) => Err(self.error_at(start, w, format!("expected '{kw}'"))),
            Err(_) => {
                self.pos = start;
                Err(self.error(format!("expected '{kw}'")))
            }
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), PlanSyntaxError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{s}'")))
        }
    }

    fn geo<T>(&mut self, f: impl FnOnce(&mut Scanner<'a>) -> Result<T, GeoError>) -> Result<T, PlanSyntaxError> {
        self.skip_ws();
        let mut sc = Scanner::at(self.src, self.pos);
        match f(&mut sc) {
            Ok(v) => {
                self.pos = sc.pos();
                Ok(v)
            }
            Err(GeoError::Parse { pos, msg }) => {
                self.pos = pos;
                Err(self.error(msg))
            }
            Err(e) => Err(self.error(e.to_string())),
        }
    }

    fn number(&mut self) -> Result<f64, PlanSyntaxError> {
        self.geo(|s| s.number())
    }

    fn usize(&mut self) -> Result<usize, PlanSyntaxError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let v = self.geo(|s| s.integer())?;
        usize::try_from(v).map_err(|_| self.error_at(start, &v.to_string(), "expected a non-negative integer"))
    }

    fn string(&mut self) -> Result<String, PlanSyntaxError> {
        self.expect("\"")?;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e)) => out.push(e),
                    None => break,
                },
                c => out.push(c),
            }
        }
        self.pos = self.src.len();
        Err(self.error("unterminated string"))
    }

    fn object(&mut self) -> Result<String, PlanSyntaxError> {
        if self.peek() == Some('"') {
            self.string()
        } else {
            Ok(self.ident()?.to_string())
        }
    }
}

/// Parses the canonical plan text.
pub fn parse_plan(text: &str) -> Result<PhysicalPlan, PlanSyntaxError> {
    let mut c = Cursor { src: text, pos: 0 };
    c.keyword("query")?;
    let mut stack: Vec<PhysicalOp> = Vec::new();
    loop {
        let start = {
            c.skip_ws();
            c.pos
        };
        let word = c.ident()?;
        let pop = |stack: &mut Vec<PhysicalOp>, n: usize| -> Result<Vec<PhysicalOp>, PlanSyntaxError> {
            if stack.len() < n {
                return Err(PlanSyntaxError {
                    pos: start,
                    token: word.to_string(),
                    msg: format!("'{word}' needs {n} input stream(s)"),
                });
            }
            Ok(stack.split_off(stack.len() - n))
        };
        if !OPS.contains(&word) {
            let second_pos = {
                c.skip_ws();
                c.pos
            };
            let second = c.ident()?;
            if second == "feed" {
                stack.push(PhysicalOp::Feed { relation: word.to_string() });
                continue;
            }
            let attr = word
                .strip_suffix("_rtree")
                .and_then(|s| s.strip_prefix(second))
                .and_then(|s| s.strip_prefix('_'))
                .filter(|a| !a.is_empty());
            let Some(attr) = attr else {
                return Err(c.error_at(second_pos, second, "expected 'feed'"));
            };
            c.keyword("windowintersects")?;
            c.expect("[")?;
            c.expect("[")?;
            let rect_pos = c.pos;
            let (x0, y0, x1, y1) = (c.number()?, c.number()?, c.number()?, c.number()?);
            let rect = Rect::new(x0, y0, x1, y1).map_err(|e| c.error_at(rect_pos, "[", e.to_string()))?;
            c.expect("]")?;
            c.expect("]")?;
            stack.push(PhysicalOp::WindowIntersects { relation: second.to_string(), attr: attr.to_string(), rect });
            continue;
        }
        let op = match word {
            "filter" => {
                let input = pop(&mut stack, 1)?.remove(0);
                c.expect("[")?;
                let pred = or_expr(&mut c)?;
                c.expect("]")?;
                PhysicalOp::Filter { input: Box::new(input), pred }
            }
            "knearest" | "similarity" => {
                let input = Box::new(pop(&mut stack, 1)?.remove(0));
                c.expect("[")?;
                let attr = c.ident()?.to_string();
                c.expect(",")?;
                let object = c.object()?;
                c.expect(",")?;
                let n = c.usize()?;
                c.expect("]")?;
                if word == "knearest" {
                    PhysicalOp::Knearest { input, attr, object, k: n }
                } else {
                    PhysicalOp::Similarity { input, attr, object, n }
                }
            }
            "spatialjoin" => {
                let mut ins = pop(&mut stack, 2)?;
                let right = Box::new(ins.pop().expect("two inputs"));
                let left = Box::new(ins.pop().expect("two inputs"));
                c.expect("[")?;
                let left_attr = c.ident()?.to_string();
                c.expect(",")?;
                let right_attr = c.ident()?.to_string();
                c.expect(",")?;
                let pred = if c.eat("dist<=") {
                    JoinPred::DistWithin(c.number()?)
                } else {
                    let p = c.pos;
                    match c.ident()? {
                        "intersects" => JoinPred::Intersects,
                        "contains" => JoinPred::Contains,
                        w => return Err(c.error_at(p, w, "expected intersects, contains or dist<=N")),
                    }
                };
                c.expect("]")?;
                PhysicalOp::SpatialJoin { left, right, left_attr, right_attr, pred }
            }
            "project" => {
                let input = Box::new(pop(&mut stack, 1)?.remove(0));
                c.expect("[")?;
                let mut attrs = vec![c.ident()?.to_string()];
                while c.eat(",") {
                    attrs.push(c.ident()?.to_string());
                }
                c.expect("]")?;
                PhysicalOp::Project { input, attrs }
            }
            "consume" | "count" | "aggregate" => {
                let input = Box::new(pop(&mut stack, 1)?.remove(0));
                let op = match word {
                    "consume" => PhysicalOp::Consume { input },
                    "count" => PhysicalOp::Count { input },
                    _ => {
                        c.expect("[")?;
                        let p = c.pos;
                        let f = c.ident()?;
                        let func = AggFn::parse(f).ok_or_else(|| c.error_at(p, f, "expected avg, max, min or sum"))?;
                        c.expect(",")?;
                        let attr = c.ident()?.to_string();
                        c.expect("]")?;
                        PhysicalOp::Aggregate { input, func, attr }
                    }
                };
                if !stack.is_empty() {
                    return Err(c.error_at(start, word, "unconsumed input streams remain"));
                }
                c.expect(";")?;
                c.skip_ws();
                if c.pos < text.len() {
                    return Err(c.error("trailing text after ';'"));
                }
                return PhysicalPlan::new(op).map_err(|e| c.error_at(start, word, e.0));
            }
            _ => unreachable!("OPS covers every operator"),
        };
        stack.push(op);
    }
}

fn or_expr(c: &mut Cursor<'_>) -> Result<Expr, PlanSyntaxError> {
    let mut e = and_expr(c)?;
    while c.peek_ident() == Some("or") {
        c.ident()?;
        e = Expr::Or(Box::new(e), Box::new(and_expr(c)?));
    }
    Ok(e)
}

fn and_expr(c: &mut Cursor<'_>) -> Result<Expr, PlanSyntaxError> {
    let mut e = not_expr(c)?;
    while c.peek_ident() == Some("and") {
        c.ident()?;
        e = Expr::And(Box::new(e), Box::new(not_expr(c)?));
    }
    Ok(e)
}

fn not_expr(c: &mut Cursor<'_>) -> Result<Expr, PlanSyntaxError> {
    if c.peek_ident() == Some("not") {
        c.ident()?;
        return Ok(Expr::Not(Box::new(not_expr(c)?)));
    }
    cmp_expr(c)
}

fn cmp_expr(c: &mut Cursor<'_>) -> Result<Expr, PlanSyntaxError> {
    let a = atom(c)?;
    if c.peek_ident() == Some("intersects") {
        c.ident()?;
        let b = atom(c)?;
        return Ok(Expr::Call(Func::Intersects, vec![a, b]));
    }
    // longest symbols first
    for (sym, op) in [
        ("<=", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
        ("=", CmpOp::Eq),
        ("#", CmpOp::Ne),
    ] {
        if c.eat(sym) {
            let b = atom(c)?;
            return Ok(Expr::Cmp(op, Box::new(a), Box::new(b)));
        }
    }
    Ok(a)
}

fn atom(c: &mut Cursor<'_>) -> Result<Expr, PlanSyntaxError> {
    match c.peek() {
        Some('(') => {
            c.expect("(")?;
            let e = or_expr(c)?;
            c.expect(")")?;
            Ok(e)
        }
        Some('.') => {
            c.expect(".")?;
            Ok(Expr::Attr(c.ident()?.to_string()))
        }
        Some('"') => Ok(Expr::Str(c.string()?)),
        Some('[') => Ok(Expr::Period(c.geo(|s| s.period())?)),
        Some(ch) if ch.is_ascii_digit() || ch == '-' => Ok(Expr::Num(c.number()?)),
        Some(ch) if ch.is_ascii_alphabetic() => {
            let start = c.pos;
            let w = c.ident()?;
            match w {
                "true" => Ok(Expr::Bool(true)),
                "false" => Ok(Expr::Bool(false)),
                "POINT" | "LINESTRING" | "MULTILINESTRING" | "POLYGON" | "MPOINT" => {
                    c.pos = start;
                    match c.geo(|s| s.value())? {
                        TextValue::Geometry(g) => Ok(Expr::Geom(Arc::new(g))),
                        TextValue::MovingPoint(m) => Ok(Expr::Mpoint(Arc::new(m))),
                    }
                }
                _ => {
                    let Some(f) = Func::parse(w) else {
                        return Err(c.error_at(start, w, "unknown function or keyword"));
                    };
                    c.expect("(")?;
                    let mut args = vec![or_expr(c)?];
                    while c.eat(",") {
                        args.push(or_expr(c)?);
                    }
                    c.expect(")")?;
                    if args.len() != f.arity() {
                        return Err(c.error_at(
                            start,
                            w,
                            format!("{w} takes {} argument(s), got {}", f.arity(), args.len()),
                        ));
                    }
                    Ok(Expr::Call(f, args))
                }
            }
        }
        _ => Err(c.error("expected an expression")),
    }
}
