//! Cost schemes and cost audits.
//!
//! A [`CostScheme`] prices every dictionary op twice: `cost(g)` for plain
//! evaluation and `cost(gd)` for the joint evaluation of the value and a
//! selection derivative. [`audit`] turns a program and a scheme into the
//! backward/forward aggregates and overhead constants, and [`op_table`]
//! reproduces the per-op constant tables symbolically.

mod audit;
mod scheme;
pub mod table;

pub use audit::{audit, instrumented_run, CostReport, OpRow, RunMode};
pub use scheme::{CostScheme, OpPrice, Price};
pub use table::{op_table, render_table, Poly, Preset, RowValues, TableId, TableRow};
