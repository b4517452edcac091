//! Evaluation and selection derivatives of the dictionary ops.

use std::cmp::Ordering;

use super::Engine;
use crate::error::{Error, Result};
use crate::program::Op;
use crate::scalar::Scalar;

fn domain<T: Scalar>(node: usize, op: &Op, arg: &T) -> Error {
    Error::Domain { node, op: op.to_string(), arg: arg.to_string() }
}

fn inexact(node: usize, op: &Op) -> Error {
    Error::InexactOp { node, op: op.to_string() }
}

/// Lowest index attaining the extreme value under `better(candidate, best)`.
fn arg_extreme<T: Scalar>(xs: &[T], better: impl Fn(&T, &T) -> bool) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if better(x, &xs[best]) {
            best = i;
        }
    }
    best
}

fn unit_vector<T: Scalar>(k: usize, i: usize, s: T) -> Vec<T> {
    let mut w = vec![T::zero(); k];
    w[i] = s;
    w
}

/// Index of the median under a stable sort: 0-based position `floor(k/2)`.
fn median_index<T: Scalar>(xs: &[T]) -> usize {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
    idx[xs.len() / 2]
}

impl<T: Scalar> Engine<T> {
    fn sign(&self, x: &T) -> T {
        if x.is_zero() {
            self.abs0.clone()
        } else {
            x.sign()
        }
    }

    /// `g(args)`; `node` is used for error reporting.
    pub(super) fn apply(&self, node: usize, op: &Op, a: &[T]) -> Result<T> {
        Ok(match op {
            Op::Add => a[0].clone() + a[1].clone(),
            Op::Sub => a[0].clone() - a[1].clone(),
            Op::Mul => a[0].clone() * a[1].clone(),
            Op::AddConst(c) => a[0].clone() + T::from_rational(c),
            Op::MulConst(c) => T::from_rational(c) * a[0].clone(),
            Op::Inv => {
                if a[0].is_zero() {
                    return Err(domain(node, op, &a[0]));
                }
                T::one() / a[0].clone()
            }
            Op::Exp => a[0].exp().ok_or_else(|| inexact(node, op))?,
            Op::Log => {
                if !a[0].gt_zero() {
                    return Err(domain(node, op, &a[0]));
                }
                a[0].ln().ok_or_else(|| inexact(node, op))?
            }
            Op::Relu => a[0].relu(),
            Op::Abs => a[0].abs(),
            Op::LeakyRelu(s) => {
                if a[0].gt_zero() {
                    a[0].clone()
                } else {
                    T::from_rational(s) * a[0].clone()
                }
            }
            Op::Elu(s) => {
                if !a[0].lt_zero() {
                    a[0].clone()
                } else {
                    let e = a[0].exp().ok_or_else(|| inexact(node, op))?;
                    T::from_rational(s) * (e - T::one())
                }
            }
            Op::Max(_) => a[arg_extreme(a, |x, b| x > b)].clone(),
            Op::Min(_) => a[arg_extreme(a, |x, b| x < b)].clone(),
            Op::Median(_) => a[median_index(a)].clone(),
            Op::Norm1(_) => a.iter().fold(T::zero(), |s, x| s + x.abs()),
            Op::NormInf(_) => a[arg_extreme(a, |x, b| x.abs() > b.abs())].abs(),
            Op::Custom { name, .. } => {
                let c = self
                    .customs
                    .get(name)
                    .ok_or_else(|| Error::UnknownCustom { node, name: name.clone() })?;
                (c.f)(a).ok_or_else(|| domain(node, op, &a[0]))?
            }
        })
    }

    /// `gd(args)`: the value together with the selected derivative `w`.
    pub(super) fn apply_derived(&self, node: usize, op: &Op, a: &[T]) -> Result<(T, Vec<T>)> {
        let one = T::one;
        let zero = T::zero;
        let k = a.len();
        Ok(match op {
            Op::Add => (a[0].clone() + a[1].clone(), vec![one(), one()]),
            Op::Sub => (a[0].clone() - a[1].clone(), vec![one(), -one()]),
            Op::Mul => (a[0].clone() * a[1].clone(), vec![a[1].clone(), a[0].clone()]),
            Op::AddConst(_) => (self.apply(node, op, a)?, vec![one()]),
            Op::MulConst(c) => (self.apply(node, op, a)?, vec![T::from_rational(c)]),
            Op::Inv => {
                let v = self.apply(node, op, a)?;
                let d = -(v.clone() * v.clone());
                (v, vec![d])
            }
            Op::Exp => {
                let v = self.apply(node, op, a)?;
                (v.clone(), vec![v])
            }
            Op::Log => {
                let v = self.apply(node, op, a)?;
                (v, vec![one() / a[0].clone()])
            }
            Op::Relu => {
                let d = if a[0].gt_zero() {
                    one()
                } else if a[0].is_zero() {
                    self.relu0.clone()
                } else {
                    zero()
                };
                (a[0].relu(), vec![d])
            }
            Op::Abs => (a[0].abs(), vec![self.sign(&a[0])]),
            Op::LeakyRelu(s) => {
                let s = T::from_rational(s);
                let d = if a[0].gt_zero() {
                    one()
                } else if a[0].is_zero() {
                    s.clone() + (one() - s.clone()) * self.relu0.clone()
                } else {
                    s.clone()
                };
                (self.apply(node, op, a)?, vec![d])
            }
            Op::Elu(s) => {
                if !a[0].lt_zero() {
                    (a[0].clone(), vec![one()])
                } else {
                    let e = a[0].exp().ok_or_else(|| inexact(node, op))?;
                    let s = T::from_rational(s);
                    (s.clone() * (e.clone() - one()), vec![s * e])
                }
            }
            Op::Max(_) => {
                let i = arg_extreme(a, |x, b| x > b);
                (a[i].clone(), unit_vector(k, i, one()))
            }
            Op::Min(_) => {
                let i = arg_extreme(a, |x, b| x < b);
                (a[i].clone(), unit_vector(k, i, one()))
            }
            Op::Median(_) => {
                let i = median_index(a);
                (a[i].clone(), unit_vector(k, i, one()))
            }
            Op::Norm1(_) => {
                (self.apply(node, op, a)?, a.iter().map(|x| self.sign(x)).collect())
            }
            Op::NormInf(_) => {
                let i = arg_extreme(a, |x, b| x.abs() > b.abs());
                (a[i].abs(), unit_vector(k, i, self.sign(&a[i])))
            }
            Op::Custom { name, .. } => {
                let c = self
                    .customs
                    .get(name)
                    .ok_or_else(|| Error::UnknownCustom { node, name: name.clone() })?;
                let d = c
                    .d
                    .as_ref()
                    .ok_or_else(|| Error::NoSelection { node, op: op.to_string() })?;
                let v = (c.f)(a).ok_or_else(|| domain(node, op, &a[0]))?;
                let w = d(a).ok_or_else(|| domain(node, op, &a[0]))?;
                if w.len() != k {
                    return Err(Error::Dimension(format!(
                        "node {node}: custom derivative returned {} entries for {k} arguments",
                        w.len()
                    )));
                }
                (v, w)
            }
        })
    }
}
