//! Engine properties: flattening, mode agreement, gradients against finite
//! differences, selection policy at kinks.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use nsad_core::gen::{self, SafeOps};
use nsad_core::linalg::Matrix;
use nsad_core::scalar::{int, rat};
use nsad_core::{CostScheme, Engine, EngineF32, EngineF64, ExactEngine, Node, Op, Program, ProgramBuilder, Rational, SelectionPolicy};

/// `P1(a, b, c) = a (b + c)`.
fn p1() -> Program {
    let mut b = ProgramBuilder::new(3);
    let s = b.add(2, 3);
    b.mul(1, s);
    b.build(1).unwrap()
}

/// `Q1(a, b) = a + b`.
fn q1() -> Program {
    let mut b = ProgramBuilder::new(2);
    b.add(1, 2);
    b.build(1).unwrap()
}

/// `P2(a, b, c, d) = (a + b)(c + d)` as `P1(Q1(a, b), c, d)`.
fn p2() -> Program {
    let q = Arc::new(q1());
    let p = Arc::new(p1());
    Program::new(4, 1, vec![Node::call("Q1", q, vec![1, 2]), Node::call("P1", p, vec![5, 3, 4])]).unwrap()
}

#[test]
fn nested_example_cost_and_flattening() {
    let unit = CostScheme::unit();
    assert_eq!(p1().cost(&unit).unwrap(), int(2));
    let prog = p2();
    assert_eq!(prog.level(), 2);
    assert_eq!(prog.cost(&unit).unwrap(), int(3));
    let flat = prog.flatten().unwrap();
    assert!(flat.is_flat());
    assert_eq!(flat.nodes().len(), 3);
    let x = [int(1), int(2), int(3), int(4)];
    assert_eq!(ExactEngine::default().evaluate(&prog, &x).unwrap(), vec![int(21)]);
    assert_eq!(ExactEngine::default().evaluate(&flat, &x).unwrap(), vec![int(21)]);
}

#[test]
fn flattening_a_flat_program_is_identity() {
    let prog = p1();
    assert_eq!(prog.flatten().unwrap(), prog);
}

#[test]
fn relu_and_abs_at_zero_follow_policy() {
    let mut b = ProgramBuilder::new(1);
    b.relu(1);
    let relu = b.build(1).unwrap();
    let abs = Program::new(1, 1, vec![Node::op(Op::Abs, vec![1])]).unwrap();
    let zero = [Rational::default()];
    let (_, g) = ExactEngine::default().backprop(&relu, &zero).unwrap();
    assert_eq!(g, vec![int(0)]);
    let e = ExactEngine::new(SelectionPolicy::new(rat(1, 3), rat(-1, 2)).unwrap());
    assert_eq!(e.backprop(&relu, &zero).unwrap().1, vec![rat(1, 3)]);
    assert_eq!(e.backprop(&abs, &zero).unwrap().1, vec![rat(-1, 2)]);
    assert!(SelectionPolicy::new(int(2), int(0)).is_err());
}

#[test]
fn max_ties_select_lowest_index() {
    let prog = Program::new(3, 1, vec![Node::op(Op::Max(3), vec![1, 2, 3])]).unwrap();
    let (_, g) = ExactEngine::default().backprop(&prog, &[int(1), int(4), int(4)]).unwrap();
    assert_eq!(g, vec![int(0), int(1), int(0)]);
}

#[test]
fn domain_error_reports_node() {
    let prog = Program::new(1, 1, vec![Node::op(Op::Log, vec![1])]).unwrap();
    let err = EngineF64::default().evaluate(&prog, &[-1.0]).unwrap_err();
    assert!(err.is_domain());
    assert_eq!(err.node(), Some(2));
    let err = ExactEngine::default().evaluate(&prog, &[int(2)]).unwrap_err();
    assert!(err.is_domain());
}

#[test]
fn f32_engine_runs() {
    let (v, g) = EngineF32::default().backprop(&p1(), &[2.0, 1.0, 3.0]).unwrap();
    assert_eq!(v, 8.0);
    assert_eq!(g, vec![4.0, 2.0, 2.0]);
}

#[test]
fn directional_derivatives_match_gradient() {
    let e = ExactEngine::default();
    let x = [int(2), rat(-1, 3), int(5)];
    let (_, g) = e.backprop(&p1(), &x).unwrap();
    let dirs = Matrix::from_rows(vec![vec![int(1), int(0)], vec![int(2), int(1)], vec![int(0), int(-1)]]).unwrap();
    let d = e.directional_derivatives(&p1(), &x, &dirs).unwrap();
    let want: Vec<Rational> =
        (0..2).map(|k| (0..3).map(|j| &g[j] * dirs.get(j, k)).fold(int(0), |a, b| a + b)).collect();
    assert_eq!(d, want);
}

fn arb_program(ops: SafeOps) -> impl Strategy<Value = Program> {
    (any::<u64>(), 1usize..=4, 1usize..=40).prop_map(move |(seed, p, n)| {
        gen::safe_program(&mut ChaCha8Rng::seed_from_u64(seed), p, n, ops)
    })
}

fn nest(prog: Program) -> Program {
    let p = prog.p();
    let args: Vec<usize> = (1..=p).collect();
    Program::new(p, 1, vec![Node::call("inner", Arc::new(prog), args), Node::op(Op::MulConst(rat(3, 2)), vec![p + 1])])
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn flattening_preserves_values_and_cost(prog in arb_program(SafeOps::Polynomial), seed in any::<u64>()) {
        let nested = nest(prog);
        let flat = nested.flatten().unwrap();
        let e = ExactEngine::default();
        let x = gen::rational_point(&mut ChaCha8Rng::seed_from_u64(seed), nested.p(), 2, 5);
        prop_assert_eq!(e.evaluate(&nested, &x).unwrap(), e.evaluate(&flat, &x).unwrap());
        for scheme in [CostScheme::unit(), CostScheme::weighted(int(4), rat(1, 3)).unwrap()] {
            prop_assert_eq!(nested.cost(&scheme).unwrap(), flat.cost(&scheme).unwrap());
        }
    }

    #[test]
    fn exact_modes_agree(prog in arb_program(SafeOps::Polynomial), seed in any::<u64>()) {
        let e = ExactEngine::default();
        let x = gen::rational_point(&mut ChaCha8Rng::seed_from_u64(seed), prog.p(), 2, 3);
        prop_assert_eq!(e.backprop(&prog, &x).unwrap(), e.forprop(&prog, &x, None).unwrap());
        // Integer points hit ReLU kinks often; the policy must be applied identically.
        let e = ExactEngine::new(SelectionPolicy::new(rat(1, 2), int(0)).unwrap());
        let xi: Vec<Rational> = x.iter().map(|v| v.round()).collect();
        prop_assert_eq!(e.backprop(&prog, &xi).unwrap(), e.forprop(&prog, &xi, None).unwrap());
    }

    #[test]
    fn f64_matches_exact(prog in arb_program(SafeOps::Polynomial), seed in any::<u64>()) {
        let x = gen::rational_point(&mut ChaCha8Rng::seed_from_u64(seed), prog.p(), 2, 4);
        let exact = ExactEngine::default().backprop(&prog, &x).unwrap();
        let xf: Vec<f64> = to_f64s(&x);
        let approx = EngineF64::default().backprop(&prog, &xf).unwrap();
        prop_assert!((approx.0 - nsad_core::Scalar::as_f64(&exact.0)).abs() <= 1e-9 * approx.0.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_differences_away_from_kinks(prog in arb_program(SafeOps::Smooth), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..prog.p()).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        prop_assume!(kink_margin(&prog, &x) >= 1e-3);
        let e = Engine::<f64>::default();
        let (_, g) = e.backprop(&prog, &x).unwrap();
        let fd = fd_gradient(&|y: &[f64]| e.evaluate(&prog, y).unwrap()[0], &x, 1e-6);
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        prop_assert!(max_abs(&diff) <= 1e-5 * max_abs(&g).max(1.0), "g {:?} fd {:?}", g, fd);
    }
}
