//! Linear ReLU networks with skip connections,
//! `F(x) = M_L Φ_{L-1}(M_{L-1} Φ_{L-2}(... Φ_1(M_1 x)))`,
//! where each `Φ_i` applies ReLU to the flagged coordinates and the identity to
//! the others. No biases: every such network is positively homogeneous.
//!
//! [`ReluNetwork::autodiff_element`] returns `M_1ᵀ D_1 M_2ᵀ D_2 ... D_{L-1} M_Lᵀ`,
//! where `D_i` is diagonal with 1 on identity and positive ReLU coordinates, 0 on
//! negative ones, and a caller-supplied value in `[0, 1]` on ReLU coordinates
//! whose input is exactly zero.

mod convert;
pub mod json;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{format_rational, Rational, Scalar};

pub use convert::{net_from_program, net_from_program_pruned, program_from_net, within_size_bound};

/// Sign class of one coordinate at a given input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// Identity coordinate (skip connection).
    Identity,
    Pos,
    Zero,
    Neg,
}

/// Sign classes of all hidden coordinates, layer by layer (`Φ_1 .. Φ_{L-1}`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivationPattern {
    pub layers: Vec<Vec<Activation>>,
}

impl ActivationPattern {
    /// `(layer, coordinate)` of every ReLU coordinate with zero input, 1-based
    /// layers, in layer-major order. This order indexes `zero_choices`.
    pub fn zero_coords(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for (j, a) in layer.iter().enumerate() {
                if *a == Activation::Zero {
                    out.push((i + 1, j));
                }
            }
        }
        out
    }

    pub fn zero_count(&self) -> usize {
        self.layers.iter().flatten().filter(|a| **a == Activation::Zero).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork<T: Scalar> {
    mats: Vec<Matrix<T>>,
    /// `masks[i][j]` is true when coordinate `j` of `Φ_{i+1}` is a ReLU.
    masks: Vec<Vec<bool>>,
}

/// Network with exact rational weights.
pub type RationalNetwork = ReluNetwork<Rational>;

impl<T: Scalar> ReluNetwork<T> {
    /// Builds `M_1, ..., M_L` with masks `Φ_1, ..., Φ_{L-1}`.
    pub fn new(mats: Vec<Matrix<T>>, masks: Vec<Vec<bool>>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::Dimension("a network needs at least one matrix".into()));
        }
        if masks.len() + 1 != mats.len() {
            return Err(Error::Dimension(format!(
                "{} matrices need {} masks, got {}",
                mats.len(),
                mats.len() - 1,
                masks.len()
            )));
        }
        for i in 1..mats.len() {
            if mats[i].cols() != mats[i - 1].rows() {
                return Err(Error::Dimension(format!(
                    "M_{} has {} columns but M_{} has {} rows",
                    i + 1,
                    mats[i].cols(),
                    i,
                    mats[i - 1].rows()
                )));
            }
            if masks[i - 1].len() != mats[i - 1].rows() {
                return Err(Error::Dimension(format!(
                    "mask {} has length {}, layer width is {}",
                    i,
                    masks[i - 1].len(),
                    mats[i - 1].rows()
                )));
            }
        }
        Ok(ReluNetwork { mats, masks })
    }

    /// Number of matrices `L`.
    pub fn depth(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[Matrix<T>] {
        &self.mats
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    pub fn input_dim(&self) -> usize {
        self.mats[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.mats[self.mats.len() - 1].rows()
    }

    /// `p_0 = p, p_1, ..., p_{L-1}`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.mats[..self.mats.len() - 1].iter().map(Matrix::rows)).collect()
    }

    /// Layers that apply at least one ReLU.
    pub fn relu_depth(&self) -> usize {
        self.masks.iter().filter(|m| m.iter().any(|&r| r)).count()
    }

    /// Free-parameter count `rows(M_L) p_{L-1} + sum_{i<L} (p_i p_{i-1} + p_i)`.
    pub fn size(&self) -> usize {
        let w = self.widths();
        let l = self.mats.len();
        let hidden: usize = (1..l).map(|i| w[i] * w[i - 1] + w[i]).sum();
        hidden + self.output_dim() * w[l - 1]
    }

    /// Output and activation pattern at `x`.
    pub fn eval(&self, x: &[T]) -> Result<(Vec<T>, ActivationPattern)> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "network has {} inputs, got a vector of length {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut h = x.to_vec();
        let mut layers = Vec::with_capacity(self.masks.len());
        for (m, mask) in self.mats.iter().zip(&self.masks) {
            let mut z = m.matvec(&h)?;
            let mut pattern = Vec::with_capacity(z.len());
            for (v, &relu) in z.iter_mut().zip(mask) {
                pattern.push(if !relu {
                    Activation::Identity
                } else if v.gt_zero() {
                    Activation::Pos
                } else if v.lt_zero() {
                    *v = T::zero();
                    Activation::Neg
                } else {
                    *v = T::zero();
                    Activation::Zero
                });
            }
            layers.push(pattern);
            h = z;
        }
        let out = self.mats[self.mats.len() - 1].matvec(&h)?;
        Ok((out, ActivationPattern { layers }))
    }

    /// Output only.
    pub fn value(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.eval(x)?.0)
    }

    /// Element of the autodiff conservative gradient at `x`. `zero_choices` is
    /// indexed by [`ActivationPattern::zero_coords`]. Requires a scalar output.
    pub fn autodiff_element(&self, x: &[T], zero_choices: &[T]) -> Result<Vec<T>> {
        let (_, pattern) = self.eval(x)?;
        self.autodiff_element_for(&pattern, zero_choices)
    }

    /// As [`Self::autodiff_element`] with a precomputed pattern.
    pub fn autodiff_element_for(&self, pattern: &ActivationPattern, zero_choices: &[T]) -> Result<Vec<T>> {
        if self.output_dim() != 1 {
            return Err(Error::Dimension(format!(
                "autodiff element needs a scalar output, network has {}",
                self.output_dim()
            )));
        }
        let expected = pattern.zero_count();
        if zero_choices.len() != expected {
            return Err(Error::IndexMismatch { expected, got: zero_choices.len() });
        }
        for (index, c) in zero_choices.iter().enumerate() {
            if c.lt_zero() || *c > T::one() {
                return Err(Error::ChoiceOutOfRange { index, value: c.to_string() });
            }
        }
        // Offsets of each layer's choices in `zero_choices`.
        let mut offsets = Vec::with_capacity(pattern.layers.len());
        let mut acc = 0;
        for layer in &pattern.layers {
            offsets.push(acc);
            acc += layer.iter().filter(|a| **a == Activation::Zero).count();
        }
        let l = self.mats.len();
        let mut v = self.mats[l - 1].row(0).to_vec();
        for i in (0..l - 1).rev() {
            let mut c = offsets[i];
            for (vj, a) in v.iter_mut().zip(&pattern.layers[i]) {
                match a {
                    Activation::Identity | Activation::Pos => {}
                    Activation::Neg => *vj = T::zero(),
                    Activation::Zero => {
                        *vj = vj.clone() * zero_choices[c].clone();
                        c += 1;
                    }
                }
            }
            v = self.mats[i].tr_matvec(&v)?;
        }
        Ok(v)
    }

    /// Entry-wise conversion to another backend.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ReluNetwork<U> {
        ReluNetwork { mats: self.mats.iter().map(|m| m.map(&f)).collect(), masks: self.masks.clone() }
    }
}

impl ReluNetwork<Rational> {
    /// `Some((layer, value))` for the first weight outside `{-1, 0, 1}`.
    pub fn first_non_ternary(&self) -> Option<(usize, String)> {
        for (i, m) in self.mats.iter().enumerate() {
            if let Some(v) = m.entries().find(|v| !(v.is_zero() || v.abs().is_one())) {
                return Some((i + 1, format_rational(v)));
            }
        }
        None
    }

    pub fn to_f64(&self) -> ReluNetwork<f64> {
        self.map(|q| q.as_f64())
    }
}
