//! Cost aggregates: bounds, measured counts and dependence on `p`.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nsad_core::cost::{instrumented_run, RunMode};
use nsad_core::gen::{self, SafeOps};
use nsad_core::scalar::{int, rat};
use nsad_core::{audit, CostScheme, EngineF64, Node, Op, Program, ProgramBuilder, Rational};

#[test]
fn mul_chain_ratio() {
    let mut b = ProgramBuilder::new(1);
    let mut last = 1;
    for _ in 0..100 {
        last = b.mul(last, 1);
    }
    let prog = b.build(1).unwrap();
    let r = audit(&prog, &CostScheme::unit()).unwrap();
    // Each node: gd = 1, plus 2 (add + mul) per argument.
    assert_eq!(r.cost_p, int(100));
    assert_eq!(r.cost_backprop, int(500));
    assert_eq!(r.ratio_b, Some(int(5)));
    // Forward with p = 1: gd + 2 mul + 1 add per node.
    assert_eq!(r.cost_forprop, int(400));
}

#[test]
fn small_relu_program_counts() {
    let mut b = ProgramBuilder::new(4);
    let s = b.sub(1, 2);
    let r = b.relu(s);
    b.add(r, 3);
    let prog = b.build(1).unwrap();
    let scheme = CostScheme::unit();
    let rep = audit(&prog, &scheme).unwrap();
    // gd: 3; arguments: 2 + 1 + 2 = 5.
    assert_eq!(rep.cost_backprop, int(3 + 5 * 2));
    // Forward, p = 4: gd + 4 |pr| mul + 4 (|pr| - 1) add.
    assert_eq!(rep.cost_forprop, int(3 + 4 * 5 + 4 * 2));
    let e = EngineF64::default();
    let x = [1.0, -2.0, 0.5, 7.0];
    assert_eq!(instrumented_run(&e, &prog, &x, RunMode::Eval, &scheme).unwrap(), rep.cost_p);
    assert_eq!(instrumented_run(&e, &prog, &x, RunMode::Backprop, &scheme).unwrap(), rep.cost_backprop);
    assert_eq!(instrumented_run(&e, &prog, &x, RunMode::Forprop, &scheme).unwrap(), rep.cost_forprop);
}

#[test]
fn unpriced_and_multi_output_rejected() {
    let prog = Program::new(1, 2, vec![Node::op(Op::Exp, vec![1]), Node::op(Op::Log, vec![1])]).unwrap();
    assert!(audit(&prog, &CostScheme::unit()).is_err());
    let custom = Program::new(1, 1, vec![Node::op(Op::Custom { name: "f".into(), arity: 1 }, vec![1])]).unwrap();
    assert!(!audit(&custom, &CostScheme::unit()).unwrap_err().is_domain());
}

/// Same topology with `p` inputs: one `add` of the first two, then a chain.
fn widened(p: usize) -> Program {
    let mut b = ProgramBuilder::new(p);
    let mut last = b.add(1, 2);
    for j in 3..=p {
        last = b.mul(last, j);
    }
    for _ in 0..5 {
        last = b.relu(last);
    }
    b.build(1).unwrap()
}

#[test]
fn forward_cost_is_affine_in_p() {
    // Same nodes, only p changes: compare a fixed 4-input topology padded with unused inputs.
    let base = widened(4);
    let pad = |p: usize| {
        let nodes = base.nodes().iter().map(|n| {
            let args = n.args.iter().map(|&a| if a > 4 { a + p - 4 } else { a }).collect();
            Node { args, ..n.clone() }
        });
        Program::new(p, 1, nodes.collect()).unwrap()
    };
    let unit = CostScheme::unit();
    let c = |p| audit(&pad(p), &unit).unwrap().cost_forprop;
    let (c4, c8, c16) = (c(4), c(8), c(16));
    // cost = gd + p (sum |pr| mul + sum (|pr| - 1) add): the p-term doubles with p.
    assert_eq!(&c16 - &c8, (&c8 - &c4) * int(2));
    assert_eq!(audit(&pad(8), &unit).unwrap().cost_backprop, audit(&pad(4), &unit).unwrap().cost_backprop);
}

fn arb(ops: SafeOps) -> impl Strategy<Value = Program> {
    (any::<u64>(), 1usize..=5, 1usize..=80)
        .prop_map(move |(s, p, n)| gen::safe_program(&mut ChaCha8Rng::seed_from_u64(s), p, n, ops))
}

fn arb_scheme() -> impl Strategy<Value = CostScheme> {
    // c_nonlin >= 1, c_relu >= 0.
    (0i64..=20, 1i64..=4, 0i64..=20, 1i64..=4)
        .prop_map(|(a, b, c, d)| CostScheme::weighted(int(1) + rat(a, b), rat(c, d)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ratios_bounded_by_omegas(prog in arb(SafeOps::Smooth), scheme in arb_scheme()) {
        let r = audit(&prog, &scheme).unwrap();
        prop_assert!(r.bounds_hold());
        // A free node (c_relu = 0 makes max/min cost nothing) leaves omega undefined.
        if let (Some(rb), Some(ob), Some(rf), Some(of)) = (&r.ratio_b, &r.omega_b, &r.ratio_f, &r.omega_f) {
            prop_assert!(rb <= ob);
            prop_assert!(rf <= of);
        }
    }

    #[test]
    fn unit_relu_dictionary_ratio_at_most_five(seed in any::<u64>(), p in 1usize..=6, n in 1usize..=200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prog = gen::structural_program(&mut rng, p, n, 0.05, &mut gen::relu_dictionary);
        let r = audit(&prog, &CostScheme::unit()).unwrap();
        prop_assert!(r.ratio_b.unwrap() <= int(5));
    }

    #[test]
    fn measured_equals_closed_form(prog in arb(SafeOps::Smooth), scheme in arb_scheme(), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..prog.p()).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let r = audit(&prog, &scheme).unwrap();
        let e = EngineF64::default();
        let m = |mode| instrumented_run(&e, &prog, &x, mode, &scheme).unwrap();
        prop_assert_eq!(m(RunMode::Eval), r.cost_p.clone());
        prop_assert_eq!(m(RunMode::Backprop), r.cost_backprop.clone());
        prop_assert_eq!(m(RunMode::Forprop), r.cost_forprop.clone());
        let sum: Rational = r.per_op_table.iter().map(|row| &row.cost_g * int(row.count as i64)).sum();
        prop_assert_eq!(sum, r.cost_p);
    }
}
