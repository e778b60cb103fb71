//! Prefix s-expression text form of genomes.
//!
//! ```text
//! roiregress-gp v1
//! (let $0 (sin x7))
//! (+ (* x3 0.5) (* $0 $0))
//! ```
//!
//! The last line is the output expression. Function nodes used more than once
//! are bound with `let` so shared subgraphs are written once; leaves are
//! always written inline. Parsing and re-printing reproduces the text exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::genome::{ExpressionGenome, Node, Op};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const GP_HEADER: &str = "roiregress-gp v1";

fn write_atom<T: Real>(out: &mut String, n: &Node<T>) {
    match *n {
        Node::Var(v) => write!(out, "x{v}").unwrap(),
        Node::Const(c) => write!(out, "{:?}", c.as_f64()).unwrap(),
        _ => unreachable!(),
    }
}

/// Body text (without header) of the active graph.
pub fn to_sexpr<T: Real>(g: &ExpressionGenome<T>) -> String {
    let nodes = g.nodes();
    let active = g.active_indices();
    let mut uses = vec![0usize; g.output() + 1];
    for &i in &active {
        for o in nodes[i].operands() {
            uses[o] += 1;
        }
    }
    let mut names: Vec<Option<usize>> = vec![None; g.output() + 1];
    let mut out = String::new();
    let mut next = 0;
    fn expr<T: Real>(i: usize, nodes: &[Node<T>], names: &[Option<usize>], s: &mut String) {
        if let Some(k) = names[i] {
            write!(s, "${k}").unwrap();
            return;
        }
        match nodes[i] {
            Node::Var(_) | Node::Const(_) => write_atom(s, &nodes[i]),
            Node::Unary(op, a) => {
                write!(s, "({} ", Op::Unary(op)).unwrap();
                expr(a, nodes, names, s);
                s.push(')');
            }
            Node::Binary(op, a, b) => {
                write!(s, "({} ", Op::Binary(op)).unwrap();
                expr(a, nodes, names, s);
                s.push(' ');
                expr(b, nodes, names, s);
                s.push(')');
            }
        }
    }
    for &i in &active {
        if i != g.output() && uses[i] > 1 && !nodes[i].is_leaf() {
            let mut body = String::new();
            expr(i, nodes, &names, &mut body);
            writeln!(out, "(let ${next} {body})").unwrap();
            names[i] = Some(next);
            next += 1;
        }
    }
    expr(g.output(), nodes, &names, &mut out);
    out.push('\n');
    out
}

/// Full file text: header line plus body.
pub fn to_text<T: Real>(g: &ExpressionGenome<T>) -> String {
    format!("{GP_HEADER}\n{}", to_sexpr(g))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn tokenize(s: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, toks: &mut Vec<Tok>| {
        if !cur.is_empty() {
            toks.push(Tok::Atom(std::mem::take(cur)));
        }
    };
    for ch in s.chars() {
        match ch {
            '(' => {
                flush(&mut cur, &mut toks);
                toks.push(Tok::Open);
            }
            ')' => {
                flush(&mut cur, &mut toks);
                toks.push(Tok::Close);
            }
            c if c.is_whitespace() => flush(&mut cur, &mut toks),
            c => cur.push(c),
        }
    }
    flush(&mut cur, &mut toks);
    toks
}

struct Parser<'a, T> {
    toks: &'a [Tok],
    pos: usize,
    nodes: Vec<Node<T>>,
    bindings: Vec<(String, usize)>,
}

impl<T: Real> Parser<'_, T> {
    fn next(&mut self) -> Result<&Tok> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| Error::Syntax("unexpected end of expression".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn push(&mut self, n: Node<T>) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn atom(&mut self, a: &str) -> Result<usize> {
        if let Some(name) = a.strip_prefix('$') {
            return self
                .bindings
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|&(_, i)| i)
                .ok_or_else(|| Error::Syntax(format!("unbound name ${name}")));
        }
        if let Some(idx) = a.strip_prefix('x') {
            if let Ok(v) = idx.parse::<usize>() {
                return Ok(self.push(Node::Var(v)));
            }
        }
        match a.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(self.push(Node::Const(T::lit(v)))),
            _ => Err(Error::Syntax(format!("bad atom {a:?}"))),
        }
    }

    fn expr(&mut self) -> Result<usize> {
        match self.next()?.clone() {
            Tok::Atom(a) => self.atom(&a),
            Tok::Close => Err(Error::Syntax("unexpected ')'".into())),
            Tok::Open => {
                let head = match self.next()?.clone() {
                    Tok::Atom(h) => h,
                    _ => return Err(Error::Syntax("expected function name after '('".into())),
                };
                let op: Op = head.parse()?;
                let node = match op {
                    Op::Unary(u) => {
                        let a = self.expr()?;
                        Node::Unary(u, a)
                    }
                    Op::Binary(b) => {
                        let x = self.expr()?;
                        let y = self.expr()?;
                        Node::Binary(b, x, y)
                    }
                };
                match self.next()? {
                    Tok::Close => Ok(self.push(node)),
                    _ => Err(Error::Syntax(format!("too many operands for {head}"))),
                }
            }
        }
    }

    fn let_form(&mut self) -> Result<bool> {
        if self.toks.get(self.pos) != Some(&Tok::Open)
            || self.toks.get(self.pos + 1) != Some(&Tok::Atom("let".into()))
        {
            return Ok(false);
        }
        self.pos += 2;
        let name = match self.next()?.clone() {
            Tok::Atom(n) if n.starts_with('$') && n.len() > 1 => n[1..].to_string(),
            _ => return Err(Error::Syntax("let expects a $name".into())),
        };
        let idx = self.expr()?;
        if self.next()? != &Tok::Close {
            return Err(Error::Syntax("malformed let".into()));
        }
        self.bindings.push((name, idx));
        Ok(true)
    }
}

/// Parses a body (optionally preceded by the header line).
pub fn parse_sexpr<T: Real>(text: &str) -> Result<ExpressionGenome<T>> {
    let body = text
        .trim_start()
        .strip_prefix(GP_HEADER)
        .unwrap_or(text);
    let toks = tokenize(body);
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        nodes: Vec::new(),
        bindings: Vec::new(),
    };
    while p.let_form()? {}
    let out = p.expr()?;
    if p.pos != toks.len() {
        return Err(Error::Syntax("trailing tokens after expression".into()));
    }
    ExpressionGenome::new(p.nodes, out)
}

/// Parses a full file, requiring the versioned header.
pub fn parse_text<T: Real>(text: &str) -> Result<ExpressionGenome<T>> {
    let first = text.lines().next().map(str::trim);
    if first != Some(GP_HEADER) {
        return Err(Error::Format {
            line: 1,
            msg: format!("expected header {GP_HEADER:?}"),
        });
    }
    parse_sexpr(text)
}

pub fn save<T: Real>(g: &ExpressionGenome<T>, path: &Path) -> Result<()> {
    fs::write(path, to_text(g)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Real>(path: &Path) -> Result<ExpressionGenome<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::genome::{BinaryOp, UnaryOp};

    #[test]
    fn parses_documented_example() {
        let g: ExpressionGenome<f64> = parse_sexpr("(+ (mul x3 0.5) (sin x7))").unwrap();
        let mut row = [0.0; 8];
        row[3] = 4.0;
        row[7] = 1.0;
        assert_eq!(g.eval_row(&row), 2.0 + 1f64.sin());
        assert_eq!(to_sexpr(&g), "(+ (* x3 0.5) (sin x7))\n");
    }

    #[test]
    fn shared_nodes_use_let() {
        let g = ExpressionGenome::new(
            vec![
                Node::Var(1),
                Node::Unary(UnaryOp::Cos, 0),
                Node::Binary(BinaryOp::Mul, 1, 1),
                Node::Binary(BinaryOp::Add, 2, 1),
            ],
            3,
        )
        .unwrap();
        let text = to_text(&g);
        assert_eq!(text, "roiregress-gp v1\n(let $0 (cos x1))\n(+ (* $0 $0) $0)\n");
        let back: ExpressionGenome<f64> = parse_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(to_text(&back), text);
    }

    #[test]
    fn negative_constants_and_errors() {
        let g: ExpressionGenome<f64> = parse_sexpr("(- -2.5 x0)").unwrap();
        assert_eq!(g.eval_row(&[1.0]), -3.5);
        assert!(parse_sexpr::<f64>("(foo x0)").is_err());
        assert!(parse_sexpr::<f64>("(+ x0)").is_err());
        assert!(parse_sexpr::<f64>("(sin x0 x1)").is_err());
        assert!(parse_sexpr::<f64>("x0 x1").is_err());
        assert!(parse_sexpr::<f64>("$3").is_err());
        assert!(parse_text::<f64>("(+ x0 x1)").is_err());
    }
}
