//! Acyclic expression graphs and their protected evaluation.

use std::fmt;
use std::str::FromStr;

use crate::dataset::RoiMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Exp,
    Abs,
    Sin,
    Cos,
    Tan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// One of the nine language functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

impl Op {
    pub const ALL: [Op; 9] = [
        Op::Binary(BinaryOp::Add),
        Op::Binary(BinaryOp::Sub),
        Op::Binary(BinaryOp::Mul),
        Op::Binary(BinaryOp::Div),
        Op::Unary(UnaryOp::Exp),
        Op::Unary(UnaryOp::Abs),
        Op::Unary(UnaryOp::Sin),
        Op::Unary(UnaryOp::Cos),
        Op::Unary(UnaryOp::Tan),
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Binary(BinaryOp::Add) => "+",
            Op::Binary(BinaryOp::Sub) => "-",
            Op::Binary(BinaryOp::Mul) => "*",
            Op::Binary(BinaryOp::Div) => "/",
            Op::Unary(UnaryOp::Exp) => "exp",
            Op::Unary(UnaryOp::Abs) => "abs",
            Op::Unary(UnaryOp::Sin) => "sin",
            Op::Unary(UnaryOp::Cos) => "cos",
            Op::Unary(UnaryOp::Tan) => "tan",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "+" | "add" => Op::Binary(BinaryOp::Add),
            "-" | "sub" => Op::Binary(BinaryOp::Sub),
            "*" | "mul" => Op::Binary(BinaryOp::Mul),
            "/" | "div" => Op::Binary(BinaryOp::Div),
            "exp" => Op::Unary(UnaryOp::Exp),
            "abs" => Op::Unary(UnaryOp::Abs),
            "sin" => Op::Unary(UnaryOp::Sin),
            "cos" => Op::Unary(UnaryOp::Cos),
            "tan" => Op::Unary(UnaryOp::Tan),
            other => return Err(Error::Syntax(format!("unknown function {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node<T> {
    Var(usize),
    Const(T),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
}

impl<T> Node<T> {
    /// Operand references (each strictly smaller than the node's own index).
    pub fn operands(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Node::Var(_) | Node::Const(_) => (None, None),
            Node::Unary(_, a) => (Some(a), None),
            Node::Binary(_, a, b) => (Some(a), Some(b)),
        };
        a.into_iter().chain(b)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Var(_) | Node::Const(_))
    }
}

/// Divisors smaller than this in magnitude make division return 1.
pub const DIV_GUARD: f64 = 1e-12;
pub const EXP_CLAMP: f64 = 700.0;
pub const TAN_CLAMP: f64 = 1e12;

#[inline]
fn finite_or_zero<T: Real>(v: T) -> T {
    if v.is_finite() {
        v
    } else {
        T::zero()
    }
}

#[inline]
fn exp_limit<T: Real>() -> T {
    T::lit(EXP_CLAMP).min(T::max_value().ln().floor() - T::one())
}

#[inline]
pub fn apply_unary<T: Real>(op: UnaryOp, a: T) -> T {
    let v = match op {
        UnaryOp::Exp => {
            let lim = exp_limit::<T>();
            a.max(-lim).min(lim).exp()
        }
        UnaryOp::Abs => a.abs(),
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Tan => {
            let lim = T::lit(TAN_CLAMP);
            a.tan().max(-lim).min(lim)
        }
    };
    finite_or_zero(v)
}

#[inline]
pub fn apply_binary<T: Real>(op: BinaryOp, a: T, b: T) -> T {
    let v = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b.abs() < T::lit(DIV_GUARD) {
                T::one()
            } else {
                a / b
            }
        }
    };
    finite_or_zero(v)
}

/// Bounded acyclic program over ROI variables. Operands always reference
/// earlier nodes; `output` designates the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionGenome<T> {
    nodes: Vec<Node<T>>,
    output: usize,
}

impl<T: Real> ExpressionGenome<T> {
    pub fn new(nodes: Vec<Node<T>>, output: usize) -> Result<Self> {
        if output >= nodes.len() {
            return Err(Error::Syntax(format!(
                "output node {output} out of range for {} nodes",
                nodes.len()
            )));
        }
        for (i, n) in nodes.iter().enumerate() {
            if let Some(bad) = n.operands().find(|&o| o >= i) {
                return Err(Error::Syntax(format!("node {i} references later node {bad}")));
            }
            if let Node::Const(c) = n {
                if !c.is_finite() {
                    return Err(Error::Syntax(format!("node {i} holds a non-finite constant")));
                }
            }
        }
        Ok(Self { nodes, output })
    }

    /// Constructor for callers that already guarantee the invariants.
    pub(crate) fn from_parts_unchecked(nodes: Vec<Node<T>>, output: usize) -> Self {
        debug_assert!(Self::new(nodes.clone(), output).is_ok());
        Self { nodes, output }
    }

    pub fn variable(index: usize) -> Self {
        Self {
            nodes: vec![Node::Var(index)],
            output: 0,
        }
    }

    pub fn constant(value: T) -> Self {
        Self {
            nodes: vec![Node::Const(value)],
            output: 0,
        }
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<Node<T>> {
        &mut self.nodes
    }

    /// Mask of nodes reachable from the output.
    pub fn active_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.output + 1];
        mask[self.output] = true;
        for i in (0..=self.output).rev() {
            if mask[i] {
                for o in self.nodes[i].operands() {
                    mask[o] = true;
                }
            }
        }
        mask
    }

    /// Indices of nodes reachable from `root`, ascending.
    pub fn closure(&self, root: usize) -> Vec<usize> {
        let mut mask = vec![false; root + 1];
        mask[root] = true;
        for i in (0..=root).rev() {
            if mask[i] {
                for o in self.nodes[i].operands() {
                    mask[o] = true;
                }
            }
        }
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.closure(self.output)
    }

    /// Copy of the subgraph rooted at `root`, renumbered densely.
    pub fn extract(&self, root: usize) -> Self {
        let keep = self.closure(root);
        let mut remap = vec![usize::MAX; root + 1];
        let mut nodes = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
            nodes.push(remap_node(self.nodes[old], |r| remap[r]));
        }
        Self::from_parts_unchecked(nodes, keep.len() - 1)
    }

    /// Hash of the active subgraph's structure. Genomes that differ only in
    /// inactive nodes or node numbering hash equally.
    pub fn structural_hash(&self) -> u64 {
        use std::hash::{DefaultHasher, Hash, Hasher};
        let mut h = vec![0u64; self.output + 1];
        for i in self.active_indices() {
            let mut st = DefaultHasher::new();
            match self.nodes[i] {
                Node::Var(v) => (0u8, v).hash(&mut st),
                Node::Const(c) => (1u8, c.as_f64().to_bits()).hash(&mut st),
                Node::Unary(op, a) => (2u8, op, h[a]).hash(&mut st),
                Node::Binary(op, a, b) => (3u8, op, h[a], h[b]).hash(&mut st),
            }
            h[i] = st.finish();
        }
        h[self.output]
    }

    /// Drops every node the output does not reach.
    pub fn compacted(&self) -> Self {
        self.extract(self.output)
    }

    /// One past the largest variable index the active graph reads.
    pub fn required_inputs(&self) -> usize {
        self.active_indices()
            .into_iter()
            .filter_map(|i| match self.nodes[i] {
                Node::Var(v) => Some(v + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Variable indices read by the active graph, sorted and unique.
    pub fn variables(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .active_indices()
            .into_iter()
            .filter_map(|i| match self.nodes[i] {
                Node::Var(v) => Some(v),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn check_binding(&self, n_rois: usize) -> Result<()> {
        match self.required_inputs() {
            r if r > n_rois => Err(Error::Binding { index: r - 1, n: n_rois }),
            _ => Ok(()),
        }
    }

    /// Evaluates the graph on one time point. Variables beyond `row` read as 0.
    pub fn eval_row(&self, row: &[T]) -> T {
        let mut vals = vec![T::zero(); self.output + 1];
        for i in 0..=self.output {
            vals[i] = match self.nodes[i] {
                Node::Var(v) => row.get(v).copied().map_or_else(T::zero, finite_or_zero),
                Node::Const(c) => c,
                Node::Unary(op, a) => apply_unary(op, vals[a]),
                Node::Binary(op, a, b) => apply_binary(op, vals[a], vals[b]),
            };
        }
        vals[self.output]
    }

    /// Evaluates every row of a row-major block `data` with `n_cols` columns.
    ///
    /// Works node by node over whole columns; only active nodes are computed.
    pub fn eval_block(&self, data: &[T], n_cols: usize, scratch: &mut Vec<T>) -> Vec<T> {
        let rows = if n_cols == 0 { 0 } else { data.len() / n_cols };
        let mask = self.active_mask();
        let mut slot = vec![usize::MAX; self.output + 1];
        let mut n_active = 0;
        for (i, &m) in mask.iter().enumerate() {
            if m {
                slot[i] = n_active;
                n_active += 1;
            }
        }
        scratch.clear();
        scratch.resize(n_active * rows, T::zero());
        for i in 0..=self.output {
            if !mask[i] {
                continue;
            }
            let s = slot[i];
            let (done, rest) = scratch.split_at_mut(s * rows);
            let out = &mut rest[..rows];
            let col = |k: usize| &done[slot[k] * rows..(slot[k] + 1) * rows];
            match self.nodes[i] {
                Node::Var(v) => {
                    if v < n_cols {
                        for (o, r) in out.iter_mut().zip(data.chunks_exact(n_cols)) {
                            *o = finite_or_zero(r[v]);
                        }
                    } else {
                        out.fill(T::zero());
                    }
                }
                Node::Const(c) => out.fill(c),
                Node::Unary(op, a) => {
                    for (o, &x) in out.iter_mut().zip(col(a)) {
                        *o = apply_unary(op, x);
                    }
                }
                Node::Binary(op, a, b) => {
                    for ((o, &x), &y) in out.iter_mut().zip(col(a)).zip(col(b)) {
                        *o = apply_binary(op, x, y);
                    }
                }
            }
        }
        let s = slot[self.output];
        scratch[s * rows..(s + 1) * rows].to_vec()
    }

    /// Output series over every row of `x`.
    pub fn eval_series(&self, x: &RoiMatrix<T>) -> Result<Vec<T>> {
        self.check_binding(x.n_rois())?;
        Ok(self.eval_block(x.as_slice(), x.n_rois(), &mut Vec::new()))
    }
}

pub(crate) fn remap_node<T: Copy>(n: Node<T>, f: impl Fn(usize) -> usize) -> Node<T> {
    match n {
        Node::Var(_) | Node::Const(_) => n,
        Node::Unary(op, a) => Node::Unary(op, f(a)),
        Node::Binary(op, a, b) => Node::Binary(op, f(a), f(b)),
    }
}

/// Free-function form of [`ExpressionGenome::eval_row`].
pub fn eval_genome<T: Real>(g: &ExpressionGenome<T>, row: &[T]) -> T {
    g.eval_row(row)
}

/// Free-function form of [`ExpressionGenome::eval_series`].
pub fn eval_series<T: Real>(g: &ExpressionGenome<T>, x: &RoiMatrix<T>) -> Result<Vec<T>> {
    g.eval_series(x)
}
