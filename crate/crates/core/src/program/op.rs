use std::fmt;

use crate::scalar::{format_rational, Rational};

/// A primitive of the dictionary. Constants are stored in the op itself so they
/// are never confused with program variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    AddConst(Rational),
    MulConst(Rational),
    Inv,
    Exp,
    Log,
    Relu,
    Abs,
    LeakyRelu(Rational),
    Elu(Rational),
    Max(usize),
    Min(usize),
    Median(usize),
    Norm1(usize),
    NormInf(usize),
    Custom { name: String, arity: usize },
}

impl Op {
    /// Lowercase kind name used in the JSON format.
    pub fn name(&self) -> &str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::AddConst(_) => "add-const",
            Op::MulConst(_) => "mul-const",
            Op::Inv => "inv",
            Op::Exp => "exp",
            Op::Log => "log",
            Op::Relu => "relu",
            Op::Abs => "abs",
            Op::LeakyRelu(_) => "leaky-relu",
            Op::Elu(_) => "elu",
            Op::Max(_) => "max",
            Op::Min(_) => "min",
            Op::Median(_) => "median",
            Op::Norm1(_) => "norm1",
            Op::NormInf(_) => "norm-inf",
            Op::Custom { .. } => "custom",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul => 2,
            Op::AddConst(_)
            | Op::MulConst(_)
            | Op::Inv
            | Op::Exp
            | Op::Log
            | Op::Relu
            | Op::Abs
            | Op::LeakyRelu(_)
            | Op::Elu(_) => 1,
            Op::Max(k) | Op::Min(k) | Op::Median(k) | Op::Norm1(k) | Op::NormInf(k) => *k,
            Op::Custom { arity, .. } => *arity,
        }
    }

    /// Arity rule as text, for error messages.
    pub fn arity_rule(&self) -> String {
        match self {
            Op::Max(_) | Op::Min(_) | Op::Median(_) | Op::Norm1(_) | Op::NormInf(_) => {
                "k >= 2".to_string()
            }
            Op::Custom { .. } => ">= 1".to_string(),
            other => other.arity().to_string(),
        }
    }

    pub fn arity_ok(&self) -> bool {
        match self {
            Op::Max(k) | Op::Min(k) | Op::Median(k) | Op::Norm1(k) | Op::NormInf(k) => *k >= 2,
            Op::Custom { arity, .. } => *arity >= 1,
            _ => true,
        }
    }

    pub fn constant(&self) -> Option<&Rational> {
        match self {
            Op::AddConst(c) | Op::MulConst(c) | Op::LeakyRelu(c) | Op::Elu(c) => Some(c),
            _ => None,
        }
    }

    /// Member of `{add, sub, relu}`, the dictionary of the network conversions.
    pub fn is_relu_linear(&self) -> bool {
        matches!(self, Op::Add | Op::Sub | Op::Relu)
    }

    /// Builds an op from its JSON fields. `k` is the number of arguments.
    pub fn from_parts(
        name: &str,
        k: usize,
        constant: Option<Rational>,
        custom: Option<&str>,
    ) -> Option<Op> {
        let need = |c: Option<Rational>| c;
        Some(match name {
            "add" => Op::Add,
            "sub" => Op::Sub,
            "mul" => Op::Mul,
            "add-const" => Op::AddConst(need(constant)?),
            "mul-const" => Op::MulConst(need(constant)?),
            "inv" => Op::Inv,
            "exp" => Op::Exp,
            "log" => Op::Log,
            "relu" => Op::Relu,
            "abs" => Op::Abs,
            "leaky-relu" => Op::LeakyRelu(need(constant)?),
            "elu" => Op::Elu(need(constant)?),
            "max" => Op::Max(k),
            "min" => Op::Min(k),
            "median" => Op::Median(k),
            "norm1" => Op::Norm1(k),
            "norm-inf" => Op::NormInf(k),
            "custom" => Op::Custom { name: custom?.to_string(), arity: k },
            _ => return None,
        })
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::AddConst(c) | Op::MulConst(c) | Op::LeakyRelu(c) | Op::Elu(c) => {
                write!(f, "{}({})", self.name(), format_rational(c))
            }
            Op::Max(k) | Op::Min(k) | Op::Median(k) | Op::Norm1(k) | Op::NormInf(k) => {
                write!(f, "{}-{}", self.name(), k)
            }
            Op::Custom { name, .. } => write!(f, "custom({name})"),
            _ => f.write_str(self.name()),
        }
    }
}
