use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, is_unit_interval, parse_rational, Rational};

/// Choices made where an op is not differentiable.
///
/// `relu_at_zero` is the value of `ReLU'(0)` (in `[0, 1]`), `abs_at_zero` the
/// value of `|·|'(0)` (in `[-1, 1]`). Max, min, median and the infinity norm
/// select the lowest index among ties.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionPolicy {
    relu_at_zero: Rational,
    abs_at_zero: Rational,
}

impl SelectionPolicy {
    pub fn new(relu_at_zero: Rational, abs_at_zero: Rational) -> Result<Self> {
        if !is_unit_interval(&relu_at_zero) {
            return Err(Error::Policy(format!(
                "relu_at_zero = {} outside [0, 1]",
                format_rational(&relu_at_zero)
            )));
        }
        if abs_at_zero.abs() > Rational::one() {
            return Err(Error::Policy(format!(
                "abs_at_zero = {} outside [-1, 1]",
                format_rational(&abs_at_zero)
            )));
        }
        Ok(SelectionPolicy { relu_at_zero, abs_at_zero })
    }

    /// Parses `relu0=<q>,abs0=<q>`; omitted keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut relu0 = Rational::default();
        let mut abs0 = Rational::default();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            let v = parse_rational(v)?;
            match k.trim() {
                "relu0" | "relu_at_zero" => relu0 = v,
                "abs0" | "abs_at_zero" => abs0 = v,
                other => return Err(Error::Parse(format!("unknown policy key {other:?}"))),
            }
        }
        Self::new(relu0, abs0)
    }

    pub fn relu_at_zero(&self) -> &Rational {
        &self.relu_at_zero
    }

    pub fn abs_at_zero(&self) -> &Rational {
        &self.abs_at_zero
    }
}
