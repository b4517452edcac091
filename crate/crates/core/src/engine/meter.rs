use num_traits::Zero;

use crate::cost::CostScheme;
use crate::program::Op;
use crate::scalar::{int, Rational};

/// Observer of the work done by the engine.
pub trait Meter {
    /// One evaluation of `g` for `op`.
    fn eval(&mut self, op: &Op);
    /// One joint evaluation of `g` and a selection derivative for `op`.
    fn eval_derived(&mut self, op: &Op);
    /// Scalar additions performed by a propagation sweep.
    fn adds(&mut self, n: usize);
    /// Scalar multiplications performed by a propagation sweep.
    fn muls(&mut self, n: usize);
}

/// Meter that records nothing.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoMeter;

impl Meter for NoMeter {
    fn eval(&mut self, _: &Op) {}
    fn eval_derived(&mut self, _: &Op) {}
    fn adds(&mut self, _: usize) {}
    fn muls(&mut self, _: usize) {}
}

/// Accumulates scheme-weighted cost of everything executed.
#[derive(Clone, Debug)]
pub struct CountingMeter<'a> {
    scheme: &'a CostScheme,
    ops: Rational,
    adds: usize,
    muls: usize,
}

impl<'a> CountingMeter<'a> {
    pub fn new(scheme: &'a CostScheme) -> Self {
        CountingMeter { scheme, ops: Rational::zero(), adds: 0, muls: 0 }
    }

    /// Sweep additions counted so far.
    pub fn add_count(&self) -> usize {
        self.adds
    }

    /// Sweep multiplications counted so far.
    pub fn mul_count(&self) -> usize {
        self.muls
    }

    /// Weighted total: op costs plus sweep additions and multiplications.
    pub fn total(&self) -> Rational {
        &self.ops
            + int(self.adds as i64) * self.scheme.add()
            + int(self.muls as i64) * self.scheme.mul()
    }
}

impl Meter for CountingMeter<'_> {
    fn eval(&mut self, op: &Op) {
        self.ops += self.scheme.primitive(op).unwrap_or_default();
    }

    fn eval_derived(&mut self, op: &Op) {
        self.ops += self.scheme.derived(op).unwrap_or_default();
    }

    fn adds(&mut self, n: usize) {
        self.adds += n;
    }

    fn muls(&mut self, n: usize) {
        self.muls += n;
    }
}
