//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nsad_core::hardness::CnfFormula;
use nsad_core::program::NodeKind;
use nsad_core::{EngineF64, Op, Program, RationalNetwork, Scalar};

/// Truth-table satisfiability.
pub fn sat_by_truth_table(f: &CnfFormula) -> bool {
    (0..1usize << f.p()).any(|m| {
        let a: Vec<bool> = (0..f.p()).map(|j| m >> j & 1 == 1).collect();
        f.clauses().iter().all(|c| c.iter().any(|l| a[l.var - 1] != l.negated))
    })
}

/// `min_c ReLU(max(literals of c))` evaluated directly from the formula.
pub fn cnf_closed_form(f: &CnfFormula, x: &[i64]) -> i64 {
    f.clauses()
        .iter()
        .map(|c| c.iter().map(|l| if l.negated { -x[l.var - 1] } else { x[l.var - 1] }).max().unwrap().max(0))
        .min()
        .unwrap()
}

/// Integer network with sparse rows, for fast exact sweeps.
pub struct IntNet {
    layers: Vec<Vec<Vec<(usize, i64)>>>,
    masks: Vec<Vec<bool>>,
}

impl IntNet {
    pub fn new(net: &RationalNetwork) -> Self {
        let layers = net
            .mats()
            .iter()
            .map(|m| {
                (0..m.rows())
                    .map(|r| {
                        m.row(r)
                            .iter()
                            .enumerate()
                            .filter(|(_, v)| !num_traits::Zero::is_zero(*v))
                            .map(|(c, v)| {
                                assert!(v.is_integer());
                                (c, num_traits::ToPrimitive::to_i64(v.numer()).unwrap())
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        IntNet { layers, masks: net.masks().to_vec() }
    }

    pub fn eval(&self, x: &[i64]) -> Vec<i64> {
        let mut h = x.to_vec();
        for (i, rows) in self.layers.iter().enumerate() {
            let mut z: Vec<i64> = rows.iter().map(|r| r.iter().map(|&(c, w)| w * h[c]).sum()).collect();
            if let Some(mask) = self.masks.get(i) {
                for (v, &relu) in z.iter_mut().zip(mask) {
                    if relu {
                        *v = (*v).max(0);
                    }
                }
            }
            h = z;
        }
        h
    }
}

/// `s_{j+1} = 1` when bit `j` of `idx` is set, else `-1`.
pub fn signs(idx: usize, p: usize) -> Vec<i64> {
    (0..p).map(|j| if idx >> j & 1 == 1 { 1 } else { -1 }).collect()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[j] += h;
            b[j] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Smallest distance to a kink over the nonsmooth nodes of a run at `x`:
/// `|arg|` for ReLU and `|·|`, the gap between the two extreme arguments for
/// max and min.
pub fn kink_margin(program: &Program, x: &[f64]) -> f64 {
    let trace = EngineF64::default().evaluate_with_derivatives(program, x).unwrap();
    let flat = &trace.program;
    let mut margin = f64::INFINITY;
    for node in flat.nodes() {
        let NodeKind::Op(op) = &node.kind else { continue };
        let args: Vec<f64> = node.args.iter().map(|&j| *trace.value(j)).collect();
        let m = match op {
            Op::Relu | Op::Abs | Op::LeakyRelu(_) | Op::Elu(_) => args[0].abs(),
            Op::Max(_) | Op::Min(_) => {
                let mut s = args.clone();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = s.len();
                if matches!(op, Op::Max(_)) {
                    s[n - 1] - s[n - 2]
                } else {
                    s[1] - s[0]
                }
            }
            _ => continue,
        };
        margin = margin.min(m);
    }
    margin
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn to_f64s<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}
