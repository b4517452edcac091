//! Program evaluation and nonsmooth automatic differentiation.
//!
//! [`Engine::evaluate`] runs a program node by node. [`Engine::evaluate_with_derivatives`]
//! additionally records, for every node, a selection `w_i` from the conservative
//! gradient of its op (chosen by the [`SelectionPolicy`]). The two propagation
//! modes consume that [`Trace`]:
//!
//! * backward: `v = e_m`, then for `t = m, ..., p+1` and `j` in `pr(t)`,
//!   `v[j] += v[t] * w_t[j]`;
//! * forward: tangents of the inputs are seeded, and every node combines the
//!   tangents of its predecessors with weights `w_i`.
//!
//! Both modes are generic over the [`Scalar`] backend; with [`Rational`] the
//! whole computation is exact (transcendental ops then fail with
//! [`Error::InexactOp`]). Differentiation runs on the flattened program.
//!
//! [`Rational`]: crate::scalar::Rational

mod meter;
mod ops;
mod policy;

use std::collections::HashMap;
use std::sync::Arc;

pub use meter::{CountingMeter, Meter, NoMeter};
pub use policy::SelectionPolicy;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::program::{NodeKind, Program};
use crate::scalar::Scalar;

/// Value function of a custom op; `None` signals a domain error.
pub type CustomFn<T> = Arc<dyn Fn(&[T]) -> Option<T> + Send + Sync>;
/// Selection derivative of a custom op, one entry per argument.
pub type CustomDeriv<T> = Arc<dyn Fn(&[T]) -> Option<Vec<T>> + Send + Sync>;

#[derive(Clone)]
struct Custom<T> {
    f: CustomFn<T>,
    d: Option<CustomDeriv<T>>,
}

/// Evaluator with a fixed selection policy and registry of custom ops.
#[derive(Clone)]
pub struct Engine<T: Scalar> {
    policy: SelectionPolicy,
    relu0: T,
    abs0: T,
    customs: HashMap<String, Custom<T>>,
}

impl<T: Scalar> std::fmt::Debug for Engine<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("policy", &self.policy)
            .field("customs", &self.customs.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl<T: Scalar> Default for Engine<T> {
    fn default() -> Self {
        Self::new(SelectionPolicy::default())
    }
}

/// Values and selected local derivatives `gd_i` of one evaluation run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace<T> {
    /// The flattened program the trace belongs to.
    pub program: Program,
    /// `x_1, ..., x_m`.
    pub values: Vec<T>,
    /// `w_{p+1}, ..., w_m`, each of length `|pr(i)|`.
    pub derivs: Vec<Vec<T>>,
}

impl<T: Scalar> Trace<T> {
    /// `x_i`, 1-based.
    pub fn value(&self, i: usize) -> &T {
        &self.values[i - 1]
    }

    /// `w_i` for a computation node `i`.
    pub fn deriv(&self, i: usize) -> &[T] {
        &self.derivs[i - self.program.p() - 1]
    }

    pub fn outputs(&self) -> &[T] {
        &self.values[self.values.len() - self.program.q()..]
    }
}

fn relabel(err: Error, node: usize) -> Error {
    match err {
        Error::Domain { op, arg, .. } => Error::Domain { node, op, arg },
        Error::InexactOp { op, .. } => Error::InexactOp { node, op },
        Error::NoSelection { op, .. } => Error::NoSelection { node, op },
        Error::UnknownCustom { name, .. } => Error::UnknownCustom { node, name },
        other => other,
    }
}

fn single_output(program: &Program) -> Result<()> {
    if program.q() == 1 {
        Ok(())
    } else {
        Err(Error::MultiOutput(program.q()))
    }
}

impl<T: Scalar> Engine<T> {
    pub fn new(policy: SelectionPolicy) -> Self {
        let relu0 = T::from_rational(policy.relu_at_zero());
        let abs0 = T::from_rational(policy.abs_at_zero());
        Engine { policy, relu0, abs0, customs: HashMap::new() }
    }

    pub fn policy(&self) -> &SelectionPolicy {
        &self.policy
    }

    /// Registers `custom(name)`. Without a derivative the op can be evaluated
    /// but not differentiated.
    pub fn register_custom(&mut self, name: &str, f: CustomFn<T>, d: Option<CustomDeriv<T>>) {
        self.customs.insert(name.to_string(), Custom { f, d });
    }

    fn check_input(program: &Program, x: &[T]) -> Result<()> {
        if x.len() != program.p() {
            return Err(Error::Dimension(format!(
                "program has {} inputs, got a vector of length {}",
                program.p(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Outputs `x_{m-q+1}, ..., x_m`.
    pub fn evaluate(&self, program: &Program, x: &[T]) -> Result<Vec<T>> {
        self.evaluate_metered(program, x, &mut NoMeter)
    }

    pub fn evaluate_metered(&self, program: &Program, x: &[T], meter: &mut dyn Meter) -> Result<Vec<T>> {
        Self::check_input(program, x)?;
        let slots = self.run(program, x.to_vec(), meter)?;
        Ok(slots[program.m() - program.q()..].to_vec())
    }

    /// All slot values; nested calls are evaluated recursively.
    fn run(&self, program: &Program, mut slots: Vec<T>, meter: &mut dyn Meter) -> Result<Vec<T>> {
        slots.reserve(program.nodes().len());
        let mut args = Vec::new();
        for (k, node) in program.nodes().iter().enumerate() {
            let i = program.p() + 1 + k;
            args.clear();
            args.extend(node.args.iter().map(|&j| slots[j - 1].clone()));
            let v = match &node.kind {
                NodeKind::Op(op) => {
                    meter.eval(op);
                    self.apply(i, op, &args)?
                }
                NodeKind::Call { program: sub, .. } => {
                    let inner = self.run(sub, args.clone(), meter).map_err(|e| relabel(e, i))?;
                    inner[sub.m() - 1].clone()
                }
            };
            slots.push(v);
        }
        Ok(slots)
    }

    /// Evaluation that also records `gd_i` next to each value, on the flattened program.
    pub fn evaluate_with_derivatives(&self, program: &Program, x: &[T]) -> Result<Trace<T>> {
        self.trace_metered(program, x, &mut NoMeter)
    }

    fn trace_metered(&self, program: &Program, x: &[T], meter: &mut dyn Meter) -> Result<Trace<T>> {
        Self::check_input(program, x)?;
        let flat = if program.is_flat() { program.clone() } else { program.flatten()? };
        let mut values = x.to_vec();
        values.reserve(flat.nodes().len());
        let mut derivs = Vec::with_capacity(flat.nodes().len());
        let mut args = Vec::new();
        for (k, node) in flat.nodes().iter().enumerate() {
            let i = flat.p() + 1 + k;
            let NodeKind::Op(op) = &node.kind else { unreachable!("flattened") };
            args.clear();
            args.extend(node.args.iter().map(|&j| values[j - 1].clone()));
            meter.eval_derived(op);
            let (v, w) = self.apply_derived(i, op, &args)?;
            values.push(v);
            derivs.push(w);
        }
        Ok(Trace { program: flat, values, derivs })
    }

    /// Backward sweep over a trace; returns the gradient with respect to the inputs.
    pub fn backward(&self, trace: &Trace<T>, meter: &mut dyn Meter) -> Result<Vec<T>> {
        let prog = &trace.program;
        single_output(prog)?;
        let (p, m) = (prog.p(), prog.m());
        let mut v = vec![T::zero(); m];
        v[m - 1] = T::one();
        for t in (p + 1..=m).rev() {
            let node = prog.node(t);
            let w = trace.deriv(t);
            let vt = v[t - 1].clone();
            for (k, &j) in node.args.iter().enumerate() {
                v[j - 1] = v[j - 1].clone() + vt.clone() * w[k].clone();
            }
            meter.adds(node.args.len());
            meter.muls(node.args.len());
        }
        v.truncate(p);
        Ok(v)
    }

    /// Forward sweep over a trace. `seed` is `p × k` (row `j` is the tangent of
    /// input `j`; identity when `None`); the result has length `k` and equals
    /// `seedᵀ · grad`.
    pub fn forward(&self, trace: &Trace<T>, seed: Option<&Matrix<T>>, meter: &mut dyn Meter) -> Result<Vec<T>> {
        let prog = &trace.program;
        single_output(prog)?;
        let p = prog.p();
        let k = match seed {
            Some(s) => {
                if s.rows() != p {
                    return Err(Error::Dimension(format!(
                        "seed has {} rows, program has {p} inputs",
                        s.rows()
                    )));
                }
                s.cols()
            }
            None => p,
        };
        let mut tangents: Vec<Vec<T>> = Vec::with_capacity(prog.m());
        for j in 0..p {
            tangents.push(match seed {
                Some(s) => s.row(j).to_vec(),
                None => {
                    let mut e = vec![T::zero(); p];
                    e[j] = T::one();
                    e
                }
            });
        }
        for i in p + 1..=prog.m() {
            let node = prog.node(i);
            let w = trace.deriv(i);
            let mut acc: Vec<T> = tangents[node.args[0] - 1].iter().map(|d| w[0].clone() * d.clone()).collect();
            for (a, &j) in node.args.iter().enumerate().skip(1) {
                for (c, d) in acc.iter_mut().zip(&tangents[j - 1]) {
                    *c = c.clone() + w[a].clone() * d.clone();
                }
            }
            meter.muls(k * node.args.len());
            meter.adds(k * (node.args.len() - 1));
            tangents.push(acc);
        }
        Ok(tangents.pop().expect("at least one node"))
    }

    /// Value and backward-mode gradient.
    pub fn backprop(&self, program: &Program, x: &[T]) -> Result<(T, Vec<T>)> {
        self.backprop_metered(program, x, &mut NoMeter)
    }

    pub fn backprop_metered(&self, program: &Program, x: &[T], meter: &mut dyn Meter) -> Result<(T, Vec<T>)> {
        single_output(program)?;
        let trace = self.trace_metered(program, x, meter)?;
        let grad = self.backward(&trace, meter)?;
        Ok((trace.outputs()[0].clone(), grad))
    }

    /// Value and forward-mode propagation of `seed` (identity when `None`).
    pub fn forprop(&self, program: &Program, x: &[T], seed: Option<&Matrix<T>>) -> Result<(T, Vec<T>)> {
        self.forprop_metered(program, x, seed, &mut NoMeter)
    }

    pub fn forprop_metered(
        &self,
        program: &Program,
        x: &[T],
        seed: Option<&Matrix<T>>,
        meter: &mut dyn Meter,
    ) -> Result<(T, Vec<T>)> {
        single_output(program)?;
        let trace = self.trace_metered(program, x, meter)?;
        let out = self.forward(&trace, seed, meter)?;
        Ok((trace.outputs()[0].clone(), out))
    }

    /// Forward-mode derivatives along the columns of `directions` (`p × k`).
    pub fn directional_derivatives(&self, program: &Program, x: &[T], directions: &Matrix<T>) -> Result<Vec<T>> {
        Ok(self.forprop(program, x, Some(directions))?.1)
    }
}
