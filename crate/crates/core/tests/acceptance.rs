//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use nsad_core::cost::{instrumented_run, op_table, Preset, RunMode, TableId};
use nsad_core::enumerate::{brute_force_vertices, decide_singleton, EnumVerdict};
use nsad_core::gen::{self, SafeOps};
use nsad_core::hardness::{
    clarke_singleton_at_zero, encode_3sat, max_net, positive_sign_vector, DirectionalInstance,
};
use nsad_core::relu_net::{net_from_program, program_from_net};
use nsad_core::scalar::{int, rat};
use nsad_core::{audit, CostScheme, EngineF64, ExactEngine, Node, Program, Rational, Scalar};

type Outcome = Result<String, String>;

fn check(ok: bool, pass: String, fail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail())
    }
}

/// Criterion 1: backprop costs at most five times the program on the unit dictionary.
fn c1_cheap_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let unit = CostScheme::unit();
    let five = int(5);
    let mut worst = Rational::zero();
    let mut violations = 0;
    let count = 10_000;
    for _ in 0..count {
        let nodes = rng.gen_range(5..=500);
        let p = rng.gen_range(1..=6);
        let prog = gen::structural_program(&mut rng, p, nodes, 0.02, &mut gen::relu_dictionary);
        let r = audit(&prog, &unit).map_err(|e| e.to_string())?;
        let ratio = r.ratio_b.ok_or("unbounded ratio")?;
        if ratio > five {
            violations += 1;
        }
        if ratio > worst {
            worst = ratio;
        }
    }
    check(
        violations == 0,
        format!("{count} programs, max ratio_b = {:.4}", worst.as_f64()),
        || format!("{violations} violations, max ratio_b = {worst}"),
    )
}

fn omega_oracle(table: TableId, label: &str, nl: &Rational, cr: &Rational, n: &Rational) -> (Rational, Rational) {
    // (cost(g), omega) written out by hand for each row.
    let one = Rational::one();
    let two = int(2);
    let g = match (table, label) {
        (_, "(+,×)") | (_, "(+c,×c)") => one.clone(),
        (TableId::Unit, _) => one.clone(),
        (_, "log") | (_, "exp") | (_, "inv") => nl.clone(),
        (_, "×ReLU") | (_, "|·|") => &one + cr,
        (_, "ELU") => &two + cr + nl,
        (_, "3×3-max-pool") => int(153) + int(8) * cr,
        (_, "‖·‖∞") => n + &two * n * cr - &one,
        (_, "‖·‖₁") => n * (&two + cr) - &one,
        other => panic!("unexpected row {other:?}"),
    };
    let (gd, arity) = match (table, label) {
        (_, "(+,×)") => (one.clone(), two.clone()),
        (_, "(+c,×c)") => (one.clone(), one.clone()),
        (TableId::Unit, "log") => (two.clone(), one.clone()),
        (TableId::Unit, "inv") => (int(3), one.clone()),
        (TableId::Unit, _) => (one.clone(), one.clone()),
        (_, "log") => (&two * nl, one.clone()),
        (_, "exp") => (nl.clone(), one.clone()),
        (_, "inv") => (nl + &two, one.clone()),
        (_, "×ReLU") => (g.clone(), two.clone()),
        (_, "3×3-max-pool") => (g.clone(), int(9)),
        (_, "‖·‖∞") | (_, "‖·‖₁") => (g.clone(), n.clone()),
        _ => (g.clone(), one.clone()),
    };
    let omega = (gd + two * arity) / &g;
    (g, omega)
}

/// Criterion 2: the unit table values and the symbolic weighted/extended tables.
fn c2_tables() -> Outcome {
    let unit: Vec<Rational> =
        op_table(&Preset::Unit).iter().map(|r| r.eval(&int(1), &int(1), &int(1)).unwrap().omega).collect();
    let want: Vec<Rational> = [5, 3, 4, 3, 5, 3].iter().map(|&v| int(v)).collect();
    if unit != want {
        return Err(format!("unit omegas {unit:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut points = 0;
    for _ in 0..500 {
        // c_nonlin >= 1, c_relu >= 1, n >= 1 (the range where every stated bound applies).
        let nl = int(1) + rat(rng.gen_range(0..=40), rng.gen_range(1..=4));
        let cr = int(1) + rat(rng.gen_range(0..=40), rng.gen_range(1..=4));
        let n = int(rng.gen_range(1..=64));
        let preset = Preset::Weighted { c_nonlin: nl.clone(), c_relu: cr.clone(), n: 1 };
        for row in op_table(&preset) {
            let v = row.eval(&nl, &cr, &n).ok_or("vanishing cost")?;
            let (g, omega) = omega_oracle(row.table, row.label, &nl, &cr, &n);
            if v.cost_g != g || v.omega != omega {
                return Err(format!("row {} disagrees with the hand formula at ({nl}, {cr}, {n})", row.label));
            }
            if !row.bound_holds_at(&nl, &cr, &n) {
                return Err(format!("row {} exceeds its bound at ({nl}, {cr}, {n})", row.label));
            }
            points += 1;
        }
    }
    Ok(format!("unit table (5,3,4,3,5,3); {points} symbolic row checks within bounds"))
}

fn safe_or_nested(rng: &mut ChaCha8Rng, i: usize) -> Program {
    let p = rng.gen_range(1..=4);
    let nodes = rng.gen_range(5..=60);
    let prog = gen::safe_program(rng, p, nodes, SafeOps::Smooth);
    if i.is_multiple_of(2) {
        return prog;
    }
    // Same function behind a call node, followed by a shift.
    let args: Vec<usize> = (1..=p).collect();
    Program::new(
        p,
        1,
        vec![
            Node::call("inner", Arc::new(prog), args),
            Node::op(nsad_core::Op::AddConst(rat(1, 2)), vec![p + 1]),
        ],
    )
    .unwrap()
}

/// Criterion 3: measured operation counts equal the closed forms.
fn c3_measured_cost() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let schemes = [CostScheme::unit(), CostScheme::weighted(int(3), rat(1, 2)).unwrap()];
    let e = EngineF64::default();
    let count = 1000;
    for i in 0..count {
        let prog = safe_or_nested(&mut rng, i);
        let x: Vec<f64> = (0..prog.p()).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let scheme = &schemes[i % 2];
        let r = audit(&prog, scheme).map_err(|e| e.to_string())?;
        let run = |mode| instrumented_run(&e, &prog, &x, mode, scheme).map_err(|e| e.to_string());
        let (ev, bw, fw) = (run(RunMode::Eval)?, run(RunMode::Backprop)?, run(RunMode::Forprop)?);
        if ev != r.cost_p || bw != r.cost_backprop || fw != r.cost_forprop {
            return Err(format!(
                "program {i}: measured ({ev}, {bw}, {fw}) vs closed form ({}, {}, {})",
                r.cost_p, r.cost_backprop, r.cost_forprop
            ));
        }
    }
    Ok(format!("{count} programs, eval/backward/forward counts equal the closed forms exactly"))
}

/// Criterion 4: gradients against central differences, and mode agreement.
fn c4_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let e = EngineF64::default();
    let (mut tested, mut passed, mut skipped) = (0usize, 0usize, 0usize);
    let mut worst_modes = 0.0f64;
    let mut exact_checked = 0;
    for i in 0..1000 {
        let p = rng.gen_range(1..=4);
        let nodes = rng.gen_range(5..=60);
        let ops = if i % 2 == 0 { SafeOps::Smooth } else { SafeOps::Polynomial };
        let prog = gen::safe_program(&mut rng, p, nodes, ops);
        for _ in 0..10 {
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..=2.0)).collect();
            if kink_margin(&prog, &x) < 1e-3 {
                skipped += 1;
                continue;
            }
            tested += 1;
            let (_, g) = e.backprop(&prog, &x).map_err(|e| e.to_string())?;
            let f = |y: &[f64]| e.evaluate(&prog, y).unwrap()[0];
            let fd = fd_gradient(&f, &x, 1e-6);
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            if max_abs(&diff) <= 1e-6 * max_abs(&g).max(1.0) {
                passed += 1;
            }
            let (_, gf) = e.forprop(&prog, &x, None).map_err(|e| e.to_string())?;
            let gap: Vec<f64> = g.iter().zip(&gf).map(|(a, b)| a - b).collect();
            worst_modes = worst_modes.max(max_abs(&gap) / max_abs(&g).max(1.0));
        }
        if ops == SafeOps::Polynomial {
            // Exact mode: the two sweeps must agree to the last digit.
            let ex = ExactEngine::default();
            let x = gen::rational_point(&mut rng, p, 2, 7);
            let (_, gb) = ex.backprop(&prog, &x).map_err(|e| e.to_string())?;
            let (_, gf) = ex.forprop(&prog, &x, None).map_err(|e| e.to_string())?;
            if gb != gf {
                return Err(format!("program {i}: exact forward and backward gradients differ"));
            }
            exact_checked += 1;
        }
    }
    let rate = passed as f64 / tested as f64;
    check(
        rate >= 0.999 && worst_modes <= 1e-12,
        format!(
            "{passed}/{tested} points within 1e-6 ({:.3}%), {skipped} near kinks skipped; modes agree to {worst_modes:.1e} (f64), exactly on {exact_checked} rational runs",
            100.0 * rate
        ),
        || format!("pass rate {rate:.5}, mode gap {worst_modes:.2e}"),
    )
}

/// Criterion 5: integrating the selected derivative along a path recovers the increment.
fn c5_path_conservativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let e = EngineF64::default();
    let steps = 20_000;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = rng.gen_range(1..=3);
        let nodes = rng.gen_range(10..=40);
        let prog = gen::safe_program(&mut rng, p, nodes, SafeOps::Polynomial);
        let corners: Vec<Vec<f64>> =
            (0..5).map(|_| (0..p).map(|_| rng.gen_range(-2.0..=2.0)).collect()).collect();
        let mut integral = 0.0;
        for seg in corners.windows(2) {
            let d: Vec<f64> = seg[1].iter().zip(&seg[0]).map(|(b, a)| b - a).collect();
            for s in 0..steps {
                let t = (s as f64 + 0.5) / steps as f64;
                let x: Vec<f64> = seg[0].iter().zip(&d).map(|(a, dj)| a + t * dj).collect();
                let (_, g) = e.backprop(&prog, &x).map_err(|e| e.to_string())?;
                integral += g.iter().zip(&d).map(|(gj, dj)| gj * dj).sum::<f64>() / steps as f64;
            }
        }
        let f = |x: &[f64]| e.evaluate(&prog, x).unwrap()[0];
        let inc = f(&corners[4]) - f(&corners[0]);
        worst = worst.max((integral - inc).abs() / inc.abs().max(1.0));
    }
    check(worst <= 1e-3, format!("100 paths, worst relative gap {worst:.2e}"), || format!("worst relative gap {worst:.3e}"))
}

/// Criterion 6: satisfiability, positive sign vectors and the Clarke test agree.
fn c6_sat() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..500 {
        let p = rng.gen_range(1..=10);
        let n = rng.gen_range(1..=12);
        let f = gen::random_3cnf(&mut rng, p, n);
        let net = encode_3sat(&f).map_err(|e| e.to_string())?;
        let int_net = IntNet::new(&net);
        let truth = sat_by_truth_table(&f);
        let mut positive = false;
        for idx in 0..1usize << p {
            let s = signs(idx, p);
            let y = int_net.eval(&s)[0];
            if y != cnf_closed_form(&f, &s) {
                return Err(format!("formula {i}: network and closed form differ"));
            }
            positive |= y > 0;
        }
        let singleton = clarke_singleton_at_zero(&net, 4).map_err(|e| e.to_string())?;
        if truth != positive || positive == singleton {
            return Err(format!("formula {i}: sat {truth}, positive sign vector {positive}, singleton {singleton}"));
        }
        if let Some(w) = positive_sign_vector(&net, 2).map_err(|e| e.to_string())? {
            let a: Vec<bool> = w.iter().map(|&v| v > 0).collect();
            if !f.satisfied_by(&a) {
                return Err(format!("formula {i}: witness does not satisfy"));
            }
        }
        if truth {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    check(sat > 0 && unsat > 0, format!("500 formulas ({sat} sat, {unsat} unsat), 100% agreement"), || {
        "degenerate sample".into()
    })
}

/// Criterion 7: the polynomial-time verdict agrees with vertex enumeration.
fn c7_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut singles, mut pairs) = (0, 0);
    for i in 0..1000 {
        let p = rng.gen_range(1..=4);
        let depth = rng.gen_range(0..=3);
        let widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=4)).collect();
        let net = gen::ternary_network(&mut rng, p, &widths, 0.75);
        let x = vec![Rational::zero(); p];
        let (_, pattern) = net.eval(&x).unwrap();
        if pattern.zero_count() > 12 {
            return Err("generator exceeded the variable budget".into());
        }
        let vertices = brute_force_vertices(&net, &x).map_err(|e| e.to_string())?;
        let verdict = decide_singleton(&net, &x).map_err(|e| e.to_string())?;
        match verdict {
            EnumVerdict::Singleton { element } => {
                if vertices != vec![element] {
                    return Err(format!("net {i}: singleton verdict but {} vertices", vertices.len()));
                }
                singles += 1;
            }
            EnumVerdict::TwoElements { e1, e2, choices, .. } => {
                let zeros = vec![Rational::zero(); pattern.zero_count()];
                let r1 = net.autodiff_element(&x, &zeros).unwrap();
                let r2 = net.autodiff_element(&x, &choices).unwrap();
                if vertices.len() < 2 || e1 == e2 || r1 != e1 || r2 != e2 {
                    return Err(format!("net {i}: bad two-element verdict ({} vertices)", vertices.len()));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("1000 nets ({singles} singleton, {pairs} two-element), 100% agreement"))
}

/// Criterion 8: the max network.
fn c8_max_net() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 1..=4usize {
        let net = max_net(k).map_err(|e| e.to_string())?;
        if net.first_non_ternary().is_some() {
            return Err(format!("k = {k}: weight outside {{-1, 0, 1}}"));
        }
        let widths = net.widths();
        if widths[1..net.depth()].iter().any(|&w| w > 3 << (k - 1)) {
            return Err(format!("k = {k}: widths {widths:?}"));
        }
        for _ in 0..1000 {
            let x = gen::rational_point(&mut rng, 1 << k, 10, 9);
            let want = x.iter().max().unwrap().clone();
            if net.value(&x).unwrap() != vec![want] {
                return Err(format!("k = {k}: wrong maximum"));
            }
        }
    }
    Ok("k = 1..4, 1000 inputs each, exact; widths <= 3*2^(k-1); ternary weights".into())
}

/// Criterion 9: directional-derivative identities and the cost of the value program.
fn c9_directional() -> Outcome {
    let mut parts = Vec::new();
    for (p, seed) in [(2usize, 11u64), (4, 12), (8, 13)] {
        let inst = DirectionalInstance::random(p, seed).map_err(|e| e.to_string())?;
        let r = nsad_core::hardness::directional_check(&inst).map_err(|e| e.to_string())?;
        if !r.all_pass() {
            return Err(format!("p = {p}: {}", r.to_json()));
        }
        let fd = r.directions.iter().map(|d| d.fd_error).fold(0.0, f64::max);
        parts.push(format!("p={p}: cost {} fd {fd:.0e} grad {:.0e}", r.cost_pf, r.grad_max_error));
    }
    Ok(parts.join("; "))
}

/// Criterion 10: conversions preserve the function and respect the size bound.
fn c10_conversions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ex = ExactEngine::default();
    let mut worst = 0.0f64;
    for i in 0..200 {
        let p = rng.gen_range(1..=4);
        let nodes = rng.gen_range(1..=25);
        let prog = gen::relu_linear_program(&mut rng, p, nodes);
        let net = net_from_program(&prog).map_err(|e| e.to_string())?;
        let cost = prog.nodes().len();
        let bound = 18 * cost.pow(3);
        if net.size() > bound {
            return Err(format!("program {i}: size {} > {bound}", net.size()));
        }
        worst = worst.max(net.size() as f64 / bound as f64);
        let back = program_from_net(&net).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x = gen::rational_point(&mut rng, p, 5, 6);
            let y = ex.evaluate(&prog, &x).unwrap();
            if net.value(&x).unwrap() != y || ex.evaluate(&back, &x).unwrap() != y {
                return Err(format!("program {i}: round trip changed the function"));
            }
        }
    }
    for i in 0..200 {
        let p = rng.gen_range(1..=4);
        let depth = rng.gen_range(0..=3);
        let widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=5)).collect();
        let net = gen::ternary_network(&mut rng, p, &widths, 0.6);
        let prog = program_from_net(&net).map_err(|e| e.to_string())?;
        let again = net_from_program(&prog).map_err(|e| e.to_string())?;
        if again.size() > 18 * prog.nodes().len().pow(3) {
            return Err(format!("net {i}: size bound fails after conversion"));
        }
        for _ in 0..100 {
            let x = gen::rational_point(&mut rng, p, 5, 6);
            let y = net.value(&x).unwrap();
            if ex.evaluate(&prog, &x).unwrap() != y || again.value(&x).unwrap() != y {
                return Err(format!("net {i}: round trip changed the function"));
            }
        }
    }
    Ok(format!("200 programs and 200 nets, 100 exact points each; max size/bound = {worst:.3}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 cheap conservative gradient", c1_cheap_gradient),
        ("2 overhead tables", c2_tables),
        ("3 closed-form vs measured cost", c3_measured_cost),
        ("4 gradient correctness", c4_gradients),
        ("5 path conservativity", c5_path_conservativity),
        ("6 SAT equivalence", c6_sat),
        ("7 enumeration vs oracle", c7_enumeration),
        ("8 max network", c8_max_net),
        ("9 directional construction", c9_directional),
        ("10 conversion bounds", c10_conversions),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
