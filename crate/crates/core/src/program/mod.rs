//! Straight-line programs over a dictionary of primitives.
//!
//! A program has `p` inputs stored in slots `1..=p`, computation nodes in slots
//! `p+1..=m`, and returns the last `q` slots. Every computation node reads only
//! strictly earlier slots. A node is either a dictionary [`Op`] or a call to
//! another single-output program, so programs nest to any depth;
//! [`Program::flatten`] expands the nesting.
//!
//! Indices are 1-based throughout the public API.

mod flatten;
pub mod json;
mod op;

use std::sync::Arc;

use crate::cost::CostScheme;
use crate::error::{Error, Result};
use crate::scalar::Rational;

pub use op::Op;

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Op(Op),
    /// Call to a single-output subprogram, referenced by name for serialization.
    Call { name: String, program: Arc<Program> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Predecessor list `pr(i)`, 1-based, in argument order.
    pub args: Vec<usize>,
}

impl Node {
    pub fn op(op: Op, args: Vec<usize>) -> Self {
        Node { kind: NodeKind::Op(op), args }
    }

    pub fn call(name: impl Into<String>, program: Arc<Program>, args: Vec<usize>) -> Self {
        Node { kind: NodeKind::Call { name: name.into(), program }, args }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            NodeKind::Op(op) => op.to_string(),
            NodeKind::Call { name, .. } => format!("call({name})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    p: usize,
    q: usize,
    nodes: Vec<Node>,
}

impl Program {
    /// Validates and builds a program. `nodes[k]` is slot `p + 1 + k`.
    pub fn new(p: usize, q: usize, nodes: Vec<Node>) -> Result<Self> {
        if q == 0 {
            return Err(Error::Shape("a program needs at least one output".into()));
        }
        if nodes.len() < q {
            return Err(Error::Shape(format!(
                "memory size m = {} is smaller than p + q = {}",
                p + nodes.len(),
                p + q
            )));
        }
        for (k, node) in nodes.iter().enumerate() {
            let i = p + 1 + k;
            if node.args.is_empty() {
                return Err(Error::EmptyPredecessor { node: i });
            }
            for &j in &node.args {
                if j == 0 {
                    return Err(Error::BadIndex { node: i, pred: j });
                }
                if j >= i {
                    return Err(Error::Cycle { node: i, pred: j });
                }
            }
            match &node.kind {
                NodeKind::Op(op) => {
                    let ok = op.arity_ok() && op.arity() == node.args.len();
                    if !ok {
                        return Err(Error::Arity {
                            node: i,
                            op: op.name().to_string(),
                            expected: op.arity_rule(),
                            got: node.args.len(),
                        });
                    }
                }
                NodeKind::Call { name, program } => {
                    if program.q != 1 {
                        return Err(Error::Shape(format!(
                            "node {i}: subprogram {name} has {} outputs, calls need one",
                            program.q
                        )));
                    }
                    if program.p != node.args.len() {
                        return Err(Error::Arity {
                            node: i,
                            op: format!("call({name})"),
                            expected: program.p.to_string(),
                            got: node.args.len(),
                        });
                    }
                }
            }
        }
        Ok(Program { p, q, nodes })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Memory size `m = p + #nodes`.
    pub fn m(&self) -> usize {
        self.p + self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Computation node stored in slot `i` (`p < i <= m`).
    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i - self.p - 1]
    }

    /// Output slots `m - q + 1 ..= m`.
    pub fn outputs(&self) -> std::ops::RangeInclusive<usize> {
        self.m() - self.q + 1..=self.m()
    }

    /// Nesting depth: 1 when every node is a dictionary op.
    pub fn level(&self) -> usize {
        1 + self
            .nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Call { program, .. } => program.level(),
                NodeKind::Op(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_flat(&self) -> bool {
        self.level() == 1
    }

    /// Every dictionary op reachable through nested calls, with multiplicity.
    pub fn ops(&self) -> Vec<&Op> {
        let mut out = Vec::new();
        self.collect_ops(&mut out);
        out
    }

    fn collect_ops<'a>(&'a self, out: &mut Vec<&'a Op>) {
        for n in &self.nodes {
            match &n.kind {
                NodeKind::Op(op) => out.push(op),
                NodeKind::Call { program, .. } => program.collect_ops(out),
            }
        }
    }

    /// Additive cost `sum_i cost(g_i)`; a call costs its subprogram.
    pub fn cost(&self, scheme: &CostScheme) -> Result<Rational> {
        let mut total = Rational::default();
        for (k, n) in self.nodes.iter().enumerate() {
            total += match &n.kind {
                NodeKind::Op(op) => scheme
                    .primitive(op)
                    .ok_or_else(|| Error::UnpricedOp { node: self.p + 1 + k, op: op.to_string() })?,
                NodeKind::Call { program, .. } => program.cost(scheme)?,
            };
        }
        Ok(total)
    }

    /// Level-1 program with the same function and the same cost under every scheme.
    pub fn flatten(&self) -> Result<Program> {
        flatten::flatten(self)
    }

    /// Inputs read by at least one computation node or returned as outputs.
    pub fn used_inputs(&self) -> Vec<bool> {
        let mut used = vec![false; self.p];
        for n in &self.nodes {
            for &j in &n.args {
                if j <= self.p {
                    used[j - 1] = true;
                }
            }
        }
        used
    }
}

/// Incremental construction of a program, returning slot indices as nodes are added.
#[derive(Clone, Debug)]
pub struct ProgramBuilder {
    p: usize,
    nodes: Vec<Node>,
}

impl ProgramBuilder {
    pub fn new(p: usize) -> Self {
        ProgramBuilder { p, nodes: Vec::new() }
    }

    /// Slot of input `k` (1-based).
    pub fn input(&self, k: usize) -> usize {
        assert!(k >= 1 && k <= self.p, "input {k} out of range 1..={}", self.p);
        k
    }

    pub fn push(&mut self, op: Op, args: &[usize]) -> usize {
        self.nodes.push(Node::op(op, args.to_vec()));
        self.p + self.nodes.len()
    }

    pub fn call(&mut self, name: &str, program: Arc<Program>, args: &[usize]) -> usize {
        self.nodes.push(Node::call(name, program, args.to_vec()));
        self.p + self.nodes.len()
    }

    pub fn add(&mut self, a: usize, b: usize) -> usize {
        self.push(Op::Add, &[a, b])
    }

    pub fn sub(&mut self, a: usize, b: usize) -> usize {
        self.push(Op::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: usize, b: usize) -> usize {
        self.push(Op::Mul, &[a, b])
    }

    pub fn relu(&mut self, a: usize) -> usize {
        self.push(Op::Relu, &[a])
    }

    pub fn add_const(&mut self, a: usize, c: Rational) -> usize {
        self.push(Op::AddConst(c), &[a])
    }

    pub fn mul_const(&mut self, a: usize, c: Rational) -> usize {
        self.push(Op::MulConst(c), &[a])
    }

    /// Slot the next node will occupy.
    pub fn next_slot(&self) -> usize {
        self.p + self.nodes.len() + 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self, q: usize) -> Result<Program> {
        Program::new(self.p, q, self.nodes)
    }
}
