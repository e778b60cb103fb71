//! Random initialization, point mutation and subgraph crossover.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::GpConfig;
use super::genome::{remap_node, ExpressionGenome, Node, Op};
use crate::scalar::Real;

fn random_const<T: Real, R: Rng + ?Sized>(cfg: &GpConfig, rng: &mut R) -> T {
    T::lit(rng.random_range(cfg.const_min..=cfg.const_max))
}

fn random_function<T, R: Rng + ?Sized>(index: usize, rng: &mut R) -> Node<T> {
    let op = Op::ALL[rng.random_range(0..Op::ALL.len())];
    match op {
        Op::Unary(u) => Node::Unary(u, rng.random_range(0..index)),
        Op::Binary(b) => Node::Binary(b, rng.random_range(0..index), rng.random_range(0..index)),
    }
}

/// Random DAG with node count uniform in `[init_min_nodes, init_max_nodes]`;
/// the last node is the output.
pub fn random_genome<T: Real, R: Rng + ?Sized>(cfg: &GpConfig, n_vars: usize, rng: &mut R) -> ExpressionGenome<T> {
    let len = rng.random_range(cfg.init_min_nodes..=cfg.init_max_nodes);
    let mut nodes = Vec::with_capacity(len);
    for i in 0..len {
        let u: f64 = rng.random();
        let node = if i == 0 {
            // no earlier node to reference
            let leaf_total = cfg.p_variable + cfg.p_constant;
            if n_vars > 0 && (leaf_total == 0.0 || u * leaf_total < cfg.p_variable) {
                Node::Var(rng.random_range(0..n_vars))
            } else {
                Node::Const(random_const(cfg, rng))
            }
        } else if u < cfg.p_variable && n_vars > 0 {
            Node::Var(rng.random_range(0..n_vars))
        } else if u < cfg.p_variable + cfg.p_constant {
            Node::Const(random_const(cfg, rng))
        } else {
            random_function(i, rng)
        };
        nodes.push(node);
    }
    ExpressionGenome::from_parts_unchecked(nodes, len - 1)
}

/// Changes exactly one node of `g` in place.
pub fn point_mutation<T: Real, R: Rng + ?Sized>(g: &mut ExpressionGenome<T>, cfg: &GpConfig, n_vars: usize, rng: &mut R) {
    let i = rng.random_range(0..g.len());
    let node = g.nodes()[i];
    let new = match node {
        Node::Var(v) if n_vars > 1 => {
            let mut w = rng.random_range(0..n_vars - 1);
            if w >= v {
                w += 1;
            }
            Node::Var(w)
        }
        Node::Var(_) => Node::Const(random_const(cfg, rng)),
        Node::Const(c) => {
            let sigma = if cfg.const_sigma > 0.0 { cfg.const_sigma } else { 1.0 };
            let normal = Normal::new(0.0, sigma).expect("valid sigma");
            let mut v = c;
            while v == c {
                v = c + T::lit(normal.sample(rng));
            }
            Node::Const(v)
        }
        Node::Unary(..) | Node::Binary(..) => {
            // relinking needs an alternative operand target, i.e. i >= 2
            if i >= 2 && rng.random_bool(0.5) {
                relink(node, i, rng)
            } else {
                change_op(node, i, rng)
            }
        }
    };
    g.nodes_mut()[i] = new;
}

fn relink<T: Copy, R: Rng + ?Sized>(node: Node<T>, i: usize, rng: &mut R) -> Node<T> {
    let other = |old: usize, rng: &mut R| {
        let mut r = rng.random_range(0..i - 1);
        if r >= old {
            r += 1;
        }
        r
    };
    match node {
        Node::Unary(op, a) => Node::Unary(op, other(a, rng)),
        Node::Binary(op, a, b) => {
            if rng.random_bool(0.5) {
                Node::Binary(op, other(a, rng), b)
            } else {
                Node::Binary(op, a, other(b, rng))
            }
        }
        leaf => leaf,
    }
}

fn change_op<T: Copy, R: Rng + ?Sized>(node: Node<T>, i: usize, rng: &mut R) -> Node<T> {
    let current = match node {
        Node::Unary(u, _) => Op::Unary(u),
        Node::Binary(b, _, _) => Op::Binary(b),
        leaf => return leaf,
    };
    let mut k = rng.random_range(0..Op::ALL.len() - 1);
    if Op::ALL[k] == current {
        k = Op::ALL.len() - 1;
    }
    let first = node.operands().next().expect("function node has an operand");
    match (Op::ALL[k], node) {
        (Op::Unary(u), _) => Node::Unary(u, first),
        (Op::Binary(b), Node::Binary(_, x, y)) => Node::Binary(b, x, y),
        (Op::Binary(b), _) => Node::Binary(b, first, rng.random_range(0..i)),
    }
}

/// Runs `mutation_chances` independent rolls, each applying one point mutation
/// with probability `mutation_rate`. Returns whether anything changed.
pub fn mutate<T: Real, R: Rng + ?Sized>(g: &mut ExpressionGenome<T>, cfg: &GpConfig, n_vars: usize, rng: &mut R) -> bool {
    let mut changed = false;
    for _ in 0..cfg.mutation_chances {
        if rng.random_bool(cfg.mutation_rate) {
            point_mutation(g, cfg, n_vars, rng);
            changed = true;
        }
    }
    changed
}

/// Replaces the subgraph rooted at `at` in `host` by the subgraph rooted at
/// `root` in `donor`.
fn graft<T: Real>(host: &ExpressionGenome<T>, at: usize, donor: &ExpressionGenome<T>, root: usize) -> ExpressionGenome<T> {
    let sub = donor.closure(root);
    let shift = sub.len() - 1;
    let mut nodes = Vec::with_capacity(host.len() + shift);
    nodes.extend_from_slice(&host.nodes()[..at]);
    let mut donor_map = vec![usize::MAX; root + 1];
    for (rank, &d) in sub.iter().enumerate() {
        donor_map[d] = at + rank;
        nodes.push(remap_node(donor.nodes()[d], |r| donor_map[r]));
    }
    let host_map = |r: usize| {
        if r < at {
            r
        } else {
            r + shift
        }
    };
    for &n in &host.nodes()[at + 1..] {
        nodes.push(remap_node(n, host_map));
    }
    ExpressionGenome::from_parts_unchecked(nodes, host_map(host.output()))
}

/// Shrinks an over-budget genome: introns are dropped first, then the graph is
/// re-rooted at the active node with the largest subgraph that fits.
pub fn enforce_budget<T: Real>(g: ExpressionGenome<T>, max_nodes: usize) -> ExpressionGenome<T> {
    if g.len() <= max_nodes {
        return g;
    }
    let g = g.compacted();
    if g.len() <= max_nodes {
        return g;
    }
    let mut best: Option<(usize, usize)> = None;
    for i in g.active_indices() {
        let size = g.closure(i).len();
        if size <= max_nodes && best.map_or(true, |(_, s)| size >= s) {
            best = Some((i, size));
        }
    }
    // a leaf always fits since max_nodes >= 1
    let (root, _) = best.expect("some subgraph fits the budget");
    g.extract(root)
}

/// With probability `crossover_rate`, swaps subgraphs between the parents.
///
/// The crossover point in `a` is a random active node; the point in `b` is the
/// active node at the same relative position in `b`'s active list, so a genome
/// crossed with itself exchanges identical subgraphs. Returns `None` when no
/// crossover happened.
pub fn crossover<T: Real, R: Rng + ?Sized>(
    a: &ExpressionGenome<T>,
    b: &ExpressionGenome<T>,
    cfg: &GpConfig,
    rng: &mut R,
) -> Option<(ExpressionGenome<T>, ExpressionGenome<T>)> {
    if !rng.random_bool(cfg.crossover_rate) {
        return None;
    }
    let act_a = a.active_indices();
    let act_b = b.active_indices();
    let pos = rng.random_range(0..act_a.len());
    let j_pos = if act_a.len() == 1 {
        0
    } else {
        ((pos as f64 / (act_a.len() - 1) as f64) * (act_b.len() - 1) as f64).round() as usize
    };
    let (i, j) = (act_a[pos], act_b[j_pos]);
    let c1 = enforce_budget(graft(a, i, b, j), cfg.max_nodes);
    let c2 = enforce_budget(graft(b, j, a, i), cfg.max_nodes);
    Some((c1, c2))
}
