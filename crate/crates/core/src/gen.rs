//! Seeded random instances for property tests, benchmarks and the CLI.
//!
//! Everything takes an explicit `Rng`, so a fixed seed reproduces the instance.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::hardness::{CnfFormula, Literal};
use crate::linalg::Matrix;
use crate::program::{Op, Program, ProgramBuilder};
use crate::relu_net::{RationalNetwork, ReluNetwork};
use crate::scalar::{int, rat, Rational, Scalar};

/// Rational `n / d` with `|n| <= num` and `1 <= d <= den`.
pub fn rational<R: Rng + ?Sized>(rng: &mut R, num: i64, den: i64) -> Rational {
    rat(rng.gen_range(-num..=num), rng.gen_range(1..=den))
}

/// Earlier slot, biased toward recent ones so that programs get deep.
fn pick<R: Rng + ?Sized>(rng: &mut R, next: usize) -> usize {
    let last = next - 1;
    if rng.gen_bool(0.6) {
        let back = rng.gen_range(0..last.min(4));
        last - back
    } else {
        rng.gen_range(1..=last)
    }
}

/// The unit-cost dictionary: `+, -, ×, +c, ×c, log, exp, inv, ReLU`.
pub fn relu_dictionary<R: Rng + ?Sized>(rng: &mut R) -> Op {
    match rng.gen_range(0..9) {
        0 => Op::Add,
        1 => Op::Sub,
        2 => Op::Mul,
        3 => Op::AddConst(rational(rng, 5, 4)),
        4 => Op::MulConst(rational(rng, 5, 4)),
        5 => Op::Log,
        6 => Op::Exp,
        7 => Op::Inv,
        _ => Op::Relu,
    }
}

/// Random single-output program with `nodes` computation nodes whose ops come
/// from `op`. Only the structure is meaningful: values may leave every domain.
/// With `call_prob > 0`, some nodes call a small random subprogram instead.
pub fn structural_program<R: Rng + ?Sized>(
    rng: &mut R,
    p: usize,
    nodes: usize,
    call_prob: f64,
    op: &mut dyn FnMut(&mut R) -> Op,
) -> Program {
    assert!(p >= 1 && nodes >= 1);
    let mut b = ProgramBuilder::new(p);
    let mut made = 0;
    while made < nodes {
        let next = b.next_slot();
        if nodes - made >= 3 && rng.gen_bool(call_prob) {
            let inner = rng.gen_range(1..=(nodes - made).min(6));
            let sub_p = rng.gen_range(1..=2);
            let sub = structural_program(rng, sub_p, inner, 0.0, op);
            let args: Vec<usize> = (0..sub_p).map(|_| pick(rng, next)).collect();
            b.call("sub", Arc::new(sub), &args);
            made += inner;
            continue;
        }
        let o = op(rng);
        let args: Vec<usize> = (0..o.arity()).map(|_| pick(rng, next)).collect();
        b.push(o, &args);
        made += 1;
    }
    b.build(1).expect("generated programs are well formed")
}

/// Closed interval used to keep generated programs inside their domains.
#[derive(Clone, Copy, Debug)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    fn excludes_zero(self, margin: f64) -> bool {
        self.lo >= margin || self.hi <= -margin
    }
}

fn mul_iv(a: Interval, b: Interval) -> Interval {
    let c = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi];
    Interval { lo: c.iter().cloned().fold(f64::INFINITY, f64::min), hi: c.iter().cloned().fold(f64::NEG_INFINITY, f64::max) }
}

/// Which ops [`safe_program`] may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SafeOps {
    /// `+, -, ×, +c, ×c, ReLU`: piecewise polynomial with rational constants,
    /// evaluable exactly.
    Polynomial,
    /// Adds `log, exp, inv, abs, max, min`.
    Smooth,
}

/// Input box of [`safe_program`].
pub const SAFE_INPUT_BOUND: f64 = 2.0;
const SAFE_VALUE_BOUND: f64 = 50.0;

/// Random program that is defined and moderate on `[-2, 2]^p`: interval bounds
/// are tracked during generation, `log` and `inv` only see arguments bounded
/// away from zero, and every value stays within `±50`.
pub fn safe_program<R: Rng + ?Sized>(rng: &mut R, p: usize, nodes: usize, ops: SafeOps) -> Program {
    assert!(p >= 1 && nodes >= 1);
    let mut b = ProgramBuilder::new(p);
    let mut iv: Vec<Interval> = vec![Interval { lo: 0.0, hi: 0.0 }];
    iv.extend((0..p).map(|_| Interval { lo: -SAFE_INPUT_BOUND, hi: SAFE_INPUT_BOUND }));
    let kinds: &[u8] = match ops {
        SafeOps::Polynomial => &[0, 1, 2, 3, 4, 5],
        SafeOps::Smooth => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
    };
    while b.len() < nodes {
        let next = b.next_slot();
        let a = pick(rng, next);
        let c = pick(rng, next);
        let (ia, ic) = (iv[a], iv[c]);
        let (op, args, out): (Op, Vec<usize>, Interval) = match *kinds.choose(rng).expect("nonempty") {
            0 => (Op::Add, vec![a, c], Interval { lo: ia.lo + ic.lo, hi: ia.hi + ic.hi }),
            1 => (Op::Sub, vec![a, c], Interval { lo: ia.lo - ic.hi, hi: ia.hi - ic.lo }),
            2 => (Op::Mul, vec![a, c], mul_iv(ia, ic)),
            3 => {
                let k = rational(rng, 6, 4);
                let kf = k.as_f64();
                (Op::AddConst(k), vec![a], Interval { lo: ia.lo + kf, hi: ia.hi + kf })
            }
            4 => {
                let k = rational(rng, 3, 4);
                let kf = k.as_f64();
                (Op::MulConst(k), vec![a], mul_iv(ia, Interval { lo: kf, hi: kf }))
            }
            5 => (Op::Relu, vec![a], Interval { lo: ia.lo.max(0.0), hi: ia.hi.max(0.0) }),
            6 if ia.lo >= 0.25 => (Op::Log, vec![a], Interval { lo: ia.lo.ln(), hi: ia.hi.ln() }),
            7 if ia.hi <= 3.0 => (Op::Exp, vec![a], Interval { lo: ia.lo.exp(), hi: ia.hi.exp() }),
            8 if ia.excludes_zero(0.25) => {
                (Op::Inv, vec![a], Interval { lo: 1.0 / ia.hi, hi: 1.0 / ia.lo })
            }
            9 => {
                let lo = if ia.lo >= 0.0 { ia.lo } else if ia.hi <= 0.0 { -ia.hi } else { 0.0 };
                (Op::Abs, vec![a], Interval { lo, hi: ia.mag() })
            }
            10 => {
                let d = pick(rng, next);
                let id = iv[d];
                let lo = ia.lo.max(ic.lo).max(id.lo);
                let hi = ia.hi.max(ic.hi).max(id.hi);
                (Op::Max(3), vec![a, c, d], Interval { lo, hi })
            }
            11 => (Op::Min(2), vec![a, c], Interval { lo: ia.lo.min(ic.lo), hi: ia.hi.min(ic.hi) }),
            // Shift toward positive values so that log and inv become available.
            _ => (Op::AddConst(int(2)), vec![a], Interval { lo: ia.lo + 2.0, hi: ia.hi + 2.0 }),
        };
        if out.mag() <= SAFE_VALUE_BOUND && out.lo.is_finite() && out.hi.is_finite() {
            b.push(op, &args);
            iv.push(out);
        }
    }
    b.build(1).expect("generated programs are well formed")
}

/// Random `{add, sub, relu}` program. `add` never repeats an argument, so the
/// network built from it has weights in `{-1, 0, 1}`.
pub fn relu_linear_program<R: Rng + ?Sized>(rng: &mut R, p: usize, nodes: usize) -> Program {
    assert!(p >= 1 && nodes >= 1);
    let mut b = ProgramBuilder::new(p);
    while b.len() < nodes {
        let next = b.next_slot();
        let a = pick(rng, next);
        let c = pick(rng, next);
        match rng.gen_range(0..3) {
            0 if a != c => b.add(a, c),
            1 => b.sub(a, c),
            2 => b.relu(a),
            _ => continue,
        };
    }
    b.build(1).expect("generated programs are well formed")
}

/// Random network with weights in `{-1, 0, 1}`, scalar output, `widths` hidden
/// layer sizes, and each hidden coordinate a ReLU with probability `relu_prob`.
pub fn ternary_network<R: Rng + ?Sized>(rng: &mut R, p: usize, widths: &[usize], relu_prob: f64) -> RationalNetwork {
    let mut dims = vec![p];
    dims.extend_from_slice(widths);
    dims.push(1);
    let mats = dims
        .windows(2)
        .map(|w| Matrix::from_fn(w[1], w[0], |_, _| int(rng.gen_range(-1..=1))))
        .collect();
    let masks = widths.iter().map(|&w| (0..w).map(|_| rng.gen_bool(relu_prob)).collect()).collect();
    ReluNetwork::new(mats, masks).expect("dimensions agree")
}

/// Random 3-CNF with `n` clauses over `p >= 1` variables (literals may repeat
/// within a clause).
pub fn random_3cnf<R: Rng + ?Sized>(rng: &mut R, p: usize, n: usize) -> CnfFormula {
    let clauses = (0..n)
        .map(|_| (0..3).map(|_| Literal { var: rng.gen_range(1..=p), negated: rng.gen_bool(0.5) }).collect())
        .collect();
    CnfFormula::new(p, clauses).expect("valid by construction")
}

/// Random point of `[-bound, bound]^p` with rational coordinates of denominator `den`.
pub fn rational_point<R: Rng + ?Sized>(rng: &mut R, p: usize, bound: i64, den: i64) -> Vec<Rational> {
    (0..p).map(|_| rat(rng.gen_range(-bound * den..=bound * den), den)).collect()
}
