//! Nonsmooth automatic differentiation on straight-line programs.
//!
//! * [`program`]: programs over a dictionary of elementary operations, with
//!   nested calls, flattening and a JSON format.
//! * [`engine`]: evaluation, reverse and forward mode with explicit selection
//!   derivatives at kinks, generic over the scalar type.
//! * [`cost`]: cost schemes, closed-form and measured differentiation cost,
//!   and the per-operation overhead tables.
//! * [`relu_net`]: linear ReLU networks with skip connections, their autodiff
//!   conservative gradient, and conversions to and from `{add, sub, relu}`
//!   programs.
//! * [`enumerate`]: polynomial-time test for a singleton autodiff conservative
//!   gradient, with a brute-force oracle.
//! * [`hardness`]: the max network, the 3-SAT encoder and sign sweep, and the
//!   directional-derivative instances.
//! * [`gen`]: seeded random instances.
//!
//! The engine runs on `f32`, `f64` and exact rationals ([`Rational`]); the
//! aliases below fix the common choices.

pub mod cost;
pub mod engine;
pub mod enumerate;
pub mod error;
pub mod gen;
pub mod hardness;
pub mod linalg;
pub mod program;
pub mod relu_net;
pub mod scalar;

pub use cost::{audit, CostReport, CostScheme};
pub use engine::{Engine, SelectionPolicy, Trace};
pub use enumerate::{brute_force_vertices, decide_singleton, EnumVerdict};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use program::{Node, Op, Program, ProgramBuilder};
pub use relu_net::{RationalNetwork, ReluNetwork};
pub use scalar::{Rational, Scalar};

pub type EngineF32 = Engine<f32>;
pub type EngineF64 = Engine<f64>;
pub type ExactEngine = Engine<Rational>;
pub type TraceF64 = Trace<f64>;
pub type ExactTrace = Trace<Rational>;
pub type MatrixF64 = Matrix<f64>;
pub type RationalMatrix = Matrix<Rational>;
pub type NetworkF64 = ReluNetwork<f64>;
