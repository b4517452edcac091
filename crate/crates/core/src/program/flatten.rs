use std::collections::HashMap;

use super::{Node, NodeKind, Op, Program};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Ref {
    Input(usize),
    Entry(usize),
}

struct Expanded {
    entries: Vec<(Op, Vec<Ref>)>,
}

impl Expanded {
    /// Expands `program` with its input slots bound to `inputs`; returns the
    /// reference of every slot `1..=m`.
    fn expand(&mut self, program: &Program, inputs: &[Ref]) -> Vec<Ref> {
        let mut slots: Vec<Ref> = inputs.to_vec();
        for node in program.nodes() {
            let args: Vec<Ref> = node.args.iter().map(|&j| slots[j - 1]).collect();
            let r = match &node.kind {
                NodeKind::Op(op) => {
                    self.entries.push((op.clone(), args));
                    Ref::Entry(self.entries.len() - 1)
                }
                NodeKind::Call { program: sub, .. } => {
                    let inner = self.expand(sub, &args);
                    inner[sub.m() - 1]
                }
            };
            slots.push(r);
        }
        slots
    }
}

/// Inlines every call. Non-output nodes keep their expanded (authored) order and
/// the outputs are placed last, in output order.
pub(super) fn flatten(program: &Program) -> Result<Program> {
    let p = program.p();
    let mut ex = Expanded { entries: Vec::new() };
    let inputs: Vec<Ref> = (1..=p).map(Ref::Input).collect();
    let slots = ex.expand(program, &inputs);

    let mut output_rank: HashMap<usize, usize> = HashMap::new();
    let mut output_entries = Vec::new();
    for (rank, slot) in program.outputs().enumerate() {
        match slots[slot - 1] {
            Ref::Entry(e) => {
                output_rank.insert(e, rank);
                output_entries.push(e);
            }
            Ref::Input(_) => unreachable!("output slots are computation nodes"),
        }
    }

    let mut new_slot: Vec<Option<usize>> = vec![None; ex.entries.len()];
    let mut nodes: Vec<Node> = Vec::with_capacity(ex.entries.len());
    let resolve = |r: &Ref, new_slot: &[Option<usize>]| -> Option<usize> {
        match *r {
            Ref::Input(k) => Some(k),
            Ref::Entry(e) => new_slot[e],
        }
    };

    for (e, (op, args)) in ex.entries.iter().enumerate() {
        if output_rank.contains_key(&e) {
            continue;
        }
        let mapped: Option<Vec<usize>> = args.iter().map(|r| resolve(r, &new_slot)).collect();
        let mapped = mapped.ok_or_else(|| {
            Error::Shape("an intermediate node reads an output; outputs cannot be placed last".into())
        })?;
        nodes.push(Node::op(op.clone(), mapped));
        new_slot[e] = Some(p + nodes.len());
    }
    for e in output_entries {
        let (op, args) = &ex.entries[e];
        let mapped: Option<Vec<usize>> = args.iter().map(|r| resolve(r, &new_slot)).collect();
        let mapped = mapped.expect("outputs only read earlier nodes");
        nodes.push(Node::op(op.clone(), mapped));
        new_slot[e] = Some(p + nodes.len());
    }
    Program::new(p, program.q(), nodes)
}
