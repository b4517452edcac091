//! Conversions between `{add, sub, relu}` programs and ReLU networks.
//!
//! Program to network: the state vector holds the used inputs followed by one
//! slot per computation node. Node `k` becomes one layer whose matrix is the
//! identity except for the row of slot `k`, which reads the node's arguments;
//! the mask applies ReLU to that row for `relu` nodes. A final row vector reads
//! the output slot. This gives `cost(P)` activation layers.
//!
//! Network to program: every row of every matrix is expanded into additions and
//! subtractions of the previous layer's values, followed by `relu` if masked.

use num_traits::{One, Signed, Zero};

use super::{RationalNetwork, ReluNetwork};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::program::{NodeKind, Op, Program, ProgramBuilder};
use crate::scalar::Rational;

/// Network computing the same function as `program` on all of `R^p`. Unused
/// inputs get zero columns in `M_1`.
pub fn net_from_program(program: &Program) -> Result<RationalNetwork> {
    let (net, kept) = net_from_program_pruned(program)?;
    let p = program.p();
    let m1 = &net.mats()[0];
    let mut wide = Matrix::zeros(m1.rows(), p);
    for r in 0..m1.rows() {
        for (c, &input) in kept.iter().enumerate() {
            wide.set(r, input - 1, m1.get(r, c).clone());
        }
    }
    let mut mats = net.mats().to_vec();
    mats[0] = wide;
    ReluNetwork::new(mats, net.masks().to_vec())
}

/// Network over the used inputs only, with the (1-based, increasing) list of
/// program inputs it reads. Its size is at most `18 cost(P)^3`.
pub fn net_from_program_pruned(program: &Program) -> Result<(RationalNetwork, Vec<usize>)> {
    if program.q() != 1 {
        return Err(Error::MultiOutput(program.q()));
    }
    let flat = program.flatten()?;
    let p = flat.p();
    for (k, node) in flat.nodes().iter().enumerate() {
        match &node.kind {
            NodeKind::Op(op) if op.is_relu_linear() => {}
            other => {
                let op = match other {
                    NodeKind::Op(op) => op.to_string(),
                    NodeKind::Call { name, .. } => format!("call({name})"),
                };
                return Err(Error::UnsupportedOp { node: p + 1 + k, op });
            }
        }
    }
    let kept: Vec<usize> = flat
        .used_inputs()
        .iter()
        .enumerate()
        .filter(|(_, &u)| u)
        .map(|(i, _)| i + 1)
        .collect();
    let u = kept.len();
    let c = flat.nodes().len();
    let width = u + c;
    // State position of program slot `j`.
    let mut pos = vec![usize::MAX; flat.m() + 1];
    for (k, &input) in kept.iter().enumerate() {
        pos[input] = k;
    }
    for k in 0..c {
        pos[p + 1 + k] = u + k;
    }

    let one = Rational::one();
    let mut mats = Vec::with_capacity(c + 1);
    let mut masks = Vec::with_capacity(c);
    for (k, node) in flat.nodes().iter().enumerate() {
        let NodeKind::Op(op) = &node.kind else { unreachable!() };
        let mut a = Matrix::<Rational>::identity(width);
        let row = u + k;
        a.set(row, row, Rational::zero());
        let mut add = |j: usize, v: Rational| {
            let cur = a.get(row, pos[j]).clone();
            a.set(row, pos[j], cur + v);
        };
        match op {
            Op::Add => {
                add(node.args[0], one.clone());
                add(node.args[1], one.clone());
            }
            Op::Sub => {
                add(node.args[0], one.clone());
                add(node.args[1], -one.clone());
            }
            Op::Relu => add(node.args[0], one.clone()),
            _ => unreachable!(),
        }
        let mut mask = vec![false; width];
        mask[row] = matches!(op, Op::Relu);
        mats.push(a);
        masks.push(mask);
    }
    // M_1 = A_1 E, where E embeds the kept inputs into the state.
    let embed = Matrix::from_fn(width, u, |r, col| if r == col { one.clone() } else { Rational::zero() });
    mats[0] = mats[0].matmul(&embed)?;
    let mut read = vec![Rational::zero(); width];
    read[width - 1] = one;
    mats.push(Matrix::row_vector(read));
    Ok((ReluNetwork::new(mats, masks)?, kept))
}

/// Straight-line `{add, sub, relu}` program computing `net` (weights in `{-1, 0, 1}`, scalar output).
pub fn program_from_net(net: &RationalNetwork) -> Result<Program> {
    if let Some((layer, value)) = net.first_non_ternary() {
        return Err(Error::NonTernaryWeight { layer, value });
    }
    if net.output_dim() != 1 {
        return Err(Error::MultiOutput(net.output_dim()));
    }
    let p = net.input_dim();
    if p == 0 {
        return Err(Error::Dimension("network without inputs".into()));
    }
    let mut b = ProgramBuilder::new(p);
    let mut zero: Option<usize> = None;
    // `None` marks a value that is identically zero.
    let mut cur: Vec<Option<usize>> = (1..=p).map(Some).collect();
    let l = net.depth();
    for (i, m) in net.mats().iter().enumerate() {
        let mask = net.masks().get(i);
        let mut next = Vec::with_capacity(m.rows());
        for r in 0..m.rows() {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (c, w) in m.row(r).iter().enumerate() {
                if let (false, Some(s)) = (w.is_zero(), cur[c]) {
                    if w.is_positive() {
                        pos.push(s);
                    } else {
                        neg.push(s);
                    }
                }
            }
            let relu = mask.is_some_and(|mk| mk[r]);
            let value = if pos.is_empty() && neg.is_empty() {
                None
            } else {
                let mut acc = match pos.first() {
                    Some(&s) => s,
                    None => {
                        let z = *zero.get_or_insert_with(|| b.sub(1, 1));
                        b.sub(z, neg.remove(0))
                    }
                };
                for &s in pos.iter().skip(1) {
                    acc = b.add(acc, s);
                }
                for &s in &neg {
                    acc = b.sub(acc, s);
                }
                Some(if relu { b.relu(acc) } else { acc })
            };
            next.push(value);
        }
        cur = next;
        debug_assert!(i + 1 < l || cur.len() == 1);
    }
    let out = cur[0];
    let last = b.next_slot() - 1;
    match out {
        Some(s) if s == last && s > p => {}
        Some(s) => {
            let z = *zero.get_or_insert_with(|| b.sub(1, 1));
            b.sub(s, z);
        }
        None => {
            b.sub(1, 1);
        }
    }
    b.build(1)
}

/// `true` when `18 cost^3` bounds the representation size.
pub fn within_size_bound(size: usize, cost: usize) -> bool {
    (size as u128) <= 18 * (cost as u128).pow(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::scalar::{int, rat};

    fn abs_prog() -> Program {
        // |x| = ReLU(x) + ReLU(0 - x), with 0 = x - x.
        let mut b = ProgramBuilder::new(1);
        let r = b.relu(1);
        let z = b.sub(1, 1);
        let n = b.sub(z, 1);
        let s = b.relu(n);
        b.add(r, s);
        b.build(1).unwrap()
    }

    fn max2() -> RationalNetwork {
        let a = Matrix::from_rows(vec![vec![int(1), int(-1)], vec![int(0), int(1)], vec![int(0), int(-1)]]).unwrap();
        let b = Matrix::from_rows(vec![vec![int(1), int(1), int(-1)]]).unwrap();
        ReluNetwork::new(vec![a, b], vec![vec![true; 3]]).unwrap()
    }

    #[test]
    fn abs_program_to_net() {
        let prog = abs_prog();
        let net = net_from_program(&prog).unwrap();
        assert_eq!(net.depth(), 6);
        for k in -20..=20 {
            let x = rat(k, 7);
            assert_eq!(net.value(std::slice::from_ref(&x)).unwrap(), vec![x.abs()]);
        }
        assert!(within_size_bound(net.size(), 5));
    }

    #[test]
    fn single_relu() {
        let prog = Program::new(1, 1, vec![crate::program::Node::op(Op::Relu, vec![1])]).unwrap();
        let net = net_from_program(&prog).unwrap();
        assert_eq!(net.relu_depth(), 1);
        for k in -3..=3 {
            assert_eq!(net.value(&[int(k)]).unwrap(), vec![int(k.max(0))]);
        }
    }

    #[test]
    fn unused_inputs_are_pruned() {
        let mut b = ProgramBuilder::new(5);
        b.relu(4);
        let prog = b.build(1).unwrap();
        let (pruned, kept) = net_from_program_pruned(&prog).unwrap();
        assert_eq!(kept, vec![4]);
        assert_eq!(pruned.input_dim(), 1);
        let full = net_from_program(&prog).unwrap();
        assert_eq!(full.input_dim(), 5);
        let x = [int(9), int(9), int(9), int(2), int(9)];
        assert_eq!(full.value(&x).unwrap(), vec![int(2)]);
    }

    #[test]
    fn rejects_other_ops() {
        let prog = Program::new(2, 1, vec![crate::program::Node::op(Op::Mul, vec![1, 2])]).unwrap();
        assert!(matches!(net_from_program(&prog), Err(Error::UnsupportedOp { node: 3, .. })));
    }

    #[test]
    fn max2_net_to_program() {
        let prog = program_from_net(&max2()).unwrap();
        assert!(prog.nodes().len() <= 9, "{} ops", prog.nodes().len());
        let e = Engine::<Rational>::default();
        for i in 0..10 {
            for j in 0..10 {
                let x = [rat(i - 5, 3), rat(j - 4, 2)];
                let want = if x[0] > x[1] { x[0].clone() } else { x[1].clone() };
                assert_eq!(e.evaluate(&prog, &x).unwrap(), vec![want]);
            }
        }
    }

    #[test]
    fn identity_net() {
        let net = ReluNetwork::new(vec![Matrix::from_rows(vec![vec![int(1)]]).unwrap()], vec![]).unwrap();
        let prog = program_from_net(&net).unwrap();
        let e = Engine::<Rational>::default();
        assert_eq!(e.evaluate(&prog, &[rat(-3, 4)]).unwrap(), vec![rat(-3, 4)]);
    }

    #[test]
    fn non_ternary_rejected() {
        let net = ReluNetwork::new(vec![Matrix::from_rows(vec![vec![rat(1, 2)]]).unwrap()], vec![]).unwrap();
        assert!(matches!(program_from_net(&net), Err(Error::NonTernaryWeight { layer: 1, .. })));
    }
}
