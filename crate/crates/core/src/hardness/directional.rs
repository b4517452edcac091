//! Instances for the directional-derivative lower bound.
//!
//! `F(x, B, M) = (1/p) Σ_i |[U Bᵀ M x]_i|` with `U` a symmetric Hadamard matrix.
//! When `sign(U Bᵀ M a_i) = u_i` for every column `a_i` of `A`, the one-sided
//! derivative of `F` at `x = 0` along `a_i` is `b_iᵀ M a_i`, and their sum
//! `G = Tr(M A Bᵀ)` has `∇_M G = B Aᵀ`. Any program producing all `p`
//! directional derivatives therefore yields a matrix product after reverse mode.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::cost::CostScheme;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::program::{Program, ProgramBuilder};
use crate::scalar::{format_rational, int, rat, Rational, Scalar};

/// Sylvester-Hadamard matrix of order `p` (a power of two): symmetric, entries
/// `±1`, `UᵀU = p I`.
pub fn hadamard(p: usize) -> Result<Matrix<Rational>> {
    if p == 0 || !p.is_power_of_two() {
        return Err(Error::Dimension(format!("Hadamard order {p} is not a power of two")));
    }
    Ok(Matrix::from_fn(p, p, |i, j| if (i & j).count_ones() % 2 == 0 { int(1) } else { int(-1) }))
}

/// Straight-line program for `F` on `{+, ×, ReLU, +c, ×c}`. Inputs are `x`
/// (`p` entries), then `B` and `M` row-major. Its unit cost is `6p² + 2p`.
pub fn program_pf(u: &Matrix<Rational>) -> Result<Program> {
    let p = u.rows();
    let mut b = ProgramBuilder::new(p + 2 * p * p);
    let x: Vec<usize> = (1..=p).collect();
    let bij = |i: usize, j: usize| p + i * p + j + 1;
    let mij = |i: usize, j: usize| p + p * p + i * p + j + 1;

    fn sum(b: &mut ProgramBuilder, terms: Vec<usize>) -> usize {
        terms.into_iter().reduce(|acc, t| b.add(acc, t)).expect("nonempty")
    }
    // y1 = M x
    let y1: Vec<usize> = (0..p)
        .map(|i| {
            let t = (0..p).map(|j| b.mul(mij(i, j), x[j])).collect();
            sum(&mut b, t)
        })
        .collect();
    // y2 = Bᵀ y1
    let y2: Vec<usize> = (0..p)
        .map(|i| {
            let t = (0..p).map(|j| b.mul(bij(j, i), y1[j])).collect();
            sum(&mut b, t)
        })
        .collect();
    // y3 = U y2
    let y3: Vec<usize> = (0..p)
        .map(|i| {
            let t = (0..p).map(|j| b.mul_const(y2[j], u.get(i, j).clone())).collect();
            sum(&mut b, t)
        })
        .collect();
    let abs: Vec<usize> = y3
        .iter()
        .map(|&y| {
            let n = b.mul_const(y, int(-1));
            let r = b.relu(y);
            let s = b.relu(n);
            b.add(r, s)
        })
        .collect();
    let total = sum(&mut b, abs);
    b.mul_const(total, rat(1, p as i64));
    b.build(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalInstance {
    pub p: usize,
    pub u: Matrix<Rational>,
    pub b: Matrix<Rational>,
    pub m: Matrix<Rational>,
    /// Directions as columns.
    pub a: Matrix<Rational>,
    pub seed: Option<u64>,
}

impl DirectionalInstance {
    /// Explicit matrices; the sign constraint is not enforced here.
    pub fn from_parts(b: Matrix<Rational>, m: Matrix<Rational>, a: Matrix<Rational>) -> Result<Self> {
        let p = b.rows();
        for (name, x) in [("B", &b), ("M", &m), ("A", &a)] {
            if x.rows() != p || x.cols() != p {
                return Err(Error::Dimension(format!("{name} must be {p}x{p}")));
            }
        }
        Ok(DirectionalInstance { p, u: hadamard(p)?, b, m, a, seed: None })
    }

    /// `B = M = I`, `A = I`.
    pub fn identity(p: usize) -> Result<Self> {
        let i = Matrix::identity(p);
        Self::from_parts(i.clone(), i.clone(), i)
    }

    /// Random rational `B`, `M` with `BᵀM` invertible, and
    /// `a_i = (BᵀM)⁻¹ Uᵀ (u_i ∘ r_i) / p` with random positive `r_i`, so that
    /// `U Bᵀ M a_i = u_i ∘ r_i` has the sign pattern of `u_i`.
    pub fn random(p: usize, seed: u64) -> Result<Self> {
        let u = hadamard(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entry = |rng: &mut ChaCha8Rng| rat(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        loop {
            let b = Matrix::from_fn(p, p, |_, _| entry(&mut rng));
            let m = Matrix::from_fn(p, p, |_, _| entry(&mut rng));
            let Ok(inv) = b.transpose().matmul(&m)?.inverse() else {
                continue;
            };
            let mut s = Matrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    let r = rat(rng.gen_range(1..=8), 4);
                    s.set(j, i, u.get(j, i).clone() * r);
                }
            }
            let a = inv.matmul(&u.transpose())?.matmul(&s)?.scale(&rat(1, p as i64));
            return Ok(DirectionalInstance { p, u, b, m, a, seed: Some(seed) });
        }
    }

    /// `U Bᵀ M A`; column `i` is `U Bᵀ M a_i`.
    fn images(&self) -> Result<Matrix<Rational>> {
        self.u.matmul(&self.b.transpose())?.matmul(&self.m)?.matmul(&self.a)
    }

    /// First direction (1-based) with `sign(U Bᵀ M a_i) ≠ u_i`.
    pub fn constraint_violation(&self) -> Result<Option<usize>> {
        let img = self.images()?;
        Ok((0..self.p).find(|&i| (0..self.p).any(|j| img.get(j, i).sign() != self.u.get(j, i).sign())).map(|i| i + 1))
    }

    /// `b_iᵀ M a_i` for every `i`.
    pub fn closed_form(&self) -> Result<Vec<Rational>> {
        let bma = self.b.transpose().matmul(&self.m)?.matmul(&self.a)?;
        Ok((0..self.p).map(|i| bma.get(i, i).clone()).collect())
    }

    /// Program inputs `(x, B, M)`.
    fn inputs<T: Scalar>(&self, x: &[T], b: &Matrix<T>, m: &Matrix<T>) -> Vec<T> {
        x.iter().cloned().chain(b.entries().cloned()).chain(m.entries().cloned()).collect()
    }

    pub fn to_json(&self) -> Value {
        let mat = |m: &Matrix<Rational>| {
            m.to_rows().iter().map(|r| r.iter().map(|v| Value::String(format_rational(v))).collect()).collect::<Vec<Value>>()
        };
        let mut v = json!({ "p": self.p, "U": mat(&self.u), "B": mat(&self.b), "M": mat(&self.m), "A": mat(&self.a) });
        if let Some(s) = self.seed {
            v["seed"] = json!(s);
        }
        v
    }
}

/// Exact one-sided derivatives of `F` at `x = 0` along each `a_i`. `F` is
/// positively homogeneous in `x` with `F(0) = 0`, so these are `F(a_i, B, M)`.
/// No sign constraint is required.
pub fn directional_values(inst: &DirectionalInstance) -> Result<Vec<Rational>> {
    let prog = program_pf(&inst.u)?;
    let e = Engine::<Rational>::default();
    (0..inst.p)
        .map(|i| Ok(e.evaluate(&prog, &inst.inputs(&inst.a.column(i), &inst.b, &inst.m))?[0].clone()))
        .collect()
}

const FD_STEPS: [f64; 3] = [1e-4, 1e-5, 1e-6];
const FD_TOL: f64 = 1e-8;
const GRAD_STEP: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionReport {
    /// `b_iᵀ M a_i`.
    pub closed_form: Rational,
    /// `F(a_i, B, M)` evaluated exactly by the program.
    pub program_exact: Rational,
    /// Richardson-extrapolated one-sided difference quotient.
    pub fd_estimate: f64,
    /// Largest deviation of the individual quotients from the estimate.
    pub fd_spread: f64,
    pub fd_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalReport {
    pub p: usize,
    pub seed: Option<u64>,
    pub cost_pf: usize,
    pub directions: Vec<DirectionReport>,
    /// `Σ_i F'(0; a_i)` from the exact program values.
    pub sum: Rational,
    /// `Tr(M A Bᵀ)`.
    pub trace: Rational,
    /// Largest entrywise gap between the difference gradient of `G` in `M` and `B Aᵀ`.
    pub grad_max_error: f64,
    pub fd_pass: bool,
    pub trace_pass: bool,
    pub grad_pass: bool,
}

impl DirectionalReport {
    pub fn cost_pass(&self) -> bool {
        self.cost_pf == 6 * self.p * self.p + 2 * self.p
    }

    pub fn all_pass(&self) -> bool {
        self.fd_pass && self.trace_pass && self.grad_pass && self.cost_pass()
    }

    pub fn to_json(&self) -> Value {
        let dirs: Vec<Value> = self
            .directions
            .iter()
            .map(|d| {
                json!({
                    "closed_form": format_rational(&d.closed_form),
                    "program_exact": format_rational(&d.program_exact),
                    "fd_estimate": d.fd_estimate,
                    "fd_spread": d.fd_spread,
                    "fd_error": d.fd_error,
                })
            })
            .collect();
        let mut v = json!({
            "p": self.p,
            "cost_pf": self.cost_pf,
            "cost_expected": 6 * self.p * self.p + 2 * self.p,
            "directions": dirs,
            "sum": format_rational(&self.sum),
            "trace": format_rational(&self.trace),
            "grad_max_error": self.grad_max_error,
            "checks": {
                "directional_fd": self.fd_pass,
                "trace_exact": self.trace_pass,
                "gradient_fd": self.grad_pass,
                "cost": self.cost_pass(),
            },
            "pass": self.all_pass(),
        });
        if let Some(s) = self.seed {
            v["seed"] = json!(s);
        }
        v
    }
}

/// Runs the three checks on an instance satisfying the sign constraint:
/// difference quotients along `a_i` against `b_iᵀ M a_i` (tolerance `1e-8`),
/// the exact sum against `Tr(M A Bᵀ)`, and the central-difference gradient of
/// `G(M) = Σ_i F(a_i, B, M)` against `B Aᵀ` (tolerance `1e-6`).
pub fn directional_check(inst: &DirectionalInstance) -> Result<DirectionalReport> {
    if let Some(i) = inst.constraint_violation()? {
        return Err(Error::ConstraintViolated(i));
    }
    let p = inst.p;
    let prog = program_pf(&inst.u)?;
    let cost_pf = prog
        .cost(&CostScheme::unit())?
        .to_integer()
        .try_into()
        .map_err(|_| Error::Dimension("cost overflow".into()))?;
    let closed = inst.closed_form()?;
    let exact = directional_values(inst)?;

    let fe = Engine::<f64>::default();
    let bf = inst.b.map(|v| v.as_f64());
    let mf = inst.m.map(|v| v.as_f64());
    let af = inst.a.map(|v| v.as_f64());
    let f = |x: &[f64], m: &Matrix<f64>| -> Result<f64> { Ok(fe.evaluate(&prog, &inst.inputs(x, &bf, m))?[0]) };

    let f0 = f(&vec![0.0; p], &mf)?;
    let mut directions = Vec::with_capacity(p);
    for i in 0..p {
        let a = af.column(i);
        let quotients = FD_STEPS
            .iter()
            .map(|&t| {
                let x: Vec<f64> = a.iter().map(|v| t * v).collect();
                Ok((f(&x, &mf)? - f0) / t)
            })
            .collect::<Result<Vec<f64>>>()?;
        // Steps shrink by 10; cancel the first-order term.
        let estimate = (10.0 * quotients[1] - quotients[0]) / 9.0;
        let spread = quotients.iter().map(|q| (q - estimate).abs()).fold(0.0, f64::max);
        let target = closed[i].as_f64();
        directions.push(DirectionReport {
            closed_form: closed[i].clone(),
            program_exact: exact[i].clone(),
            fd_estimate: estimate,
            fd_spread: spread,
            fd_error: (estimate - target).abs(),
        });
    }
    let fd_pass = directions.iter().all(|d| d.fd_error <= FD_TOL * d.closed_form.as_f64().abs().max(1.0));

    let sum = exact.iter().fold(Rational::zero(), |s, v| s + v.clone());
    let trace = inst.m.matmul(&inst.a)?.matmul(&inst.b.transpose())?.trace();
    let trace_pass = sum == trace && exact == closed;

    let g = |m: &Matrix<f64>| -> Result<f64> {
        (0..p).try_fold(0.0, |s, i| Ok(s + f(&af.column(i), m)?))
    };
    let want = inst.b.matmul(&inst.a.transpose())?;
    let mut grad_max_error = 0.0f64;
    let mut grad_pass = true;
    for r in 0..p {
        for c in 0..p {
            let mut plus = mf.clone();
            let mut minus = mf.clone();
            plus.set(r, c, mf.get(r, c) + GRAD_STEP);
            minus.set(r, c, mf.get(r, c) - GRAD_STEP);
            let d = (g(&plus)? - g(&minus)?) / (2.0 * GRAD_STEP);
            let w = want.get(r, c).as_f64();
            let err = (d - w).abs();
            grad_max_error = grad_max_error.max(err);
            grad_pass &= err <= GRAD_TOL * w.abs().max(1.0);
        }
    }
    Ok(DirectionalReport {
        p,
        seed: inst.seed,
        cost_pf,
        directions,
        sum,
        trace,
        grad_max_error,
        fd_pass,
        trace_pass,
        grad_pass,
    })
}
