use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use super::CostScheme;
use crate::engine::{CountingMeter, Engine};
use crate::error::{Error, Result};
use crate::program::{NodeKind, Program};
use crate::scalar::{format_rational, int, rational_to_json, Rational, Scalar};

/// Per-op summary row of a [`CostReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct OpRow {
    pub op: String,
    pub count: usize,
    pub cost_g: Rational,
    pub arity: usize,
    pub cost_gd: Rational,
    /// `(cost(gd) + 2 max(cost(+), cost(×)) |pr|) / cost(g)`; `None` when `cost(g) = 0`.
    pub omega_b: Option<Rational>,
    /// `(cost(gd) + p |pr| cost(×) + p (|pr| - 1) cost(+)) / cost(g)`.
    pub omega_f: Option<Rational>,
}

/// Exact cost aggregates of a single-output program.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub scheme: String,
    pub p: usize,
    /// Computation nodes after flattening.
    pub nodes: usize,
    pub cost_p: Rational,
    /// `sum cost(gd_i)`, the cost of evaluation with derivatives.
    pub cost_gd: Rational,
    pub cost_backprop: Rational,
    pub cost_forprop: Rational,
    /// Max-form overhead constant; `None` if some node has zero cost.
    pub omega_b: Option<Rational>,
    /// Same maximum with `|pr| (cost(+) + cost(×))` in place of `2 max(cost(+), cost(×)) |pr|`.
    pub omega_b_sum_form: Option<Rational>,
    pub omega_f: Option<Rational>,
    pub ratio_b: Option<Rational>,
    pub ratio_f: Option<Rational>,
    pub per_op_table: Vec<OpRow>,
}

fn ratio(num: &Rational, den: &Rational) -> Option<Rational> {
    if den.is_zero() {
        None
    } else {
        Some(num / den)
    }
}

fn max_opt(acc: &mut Option<Option<Rational>>, v: Option<Rational>) {
    *acc = Some(match (acc.take(), v) {
        (None, v) => v,
        (Some(None), _) | (Some(_), None) => None,
        (Some(Some(a)), Some(b)) => Some(if b > a { b } else { a }),
    });
}

/// Audits `program` under `scheme`. Nested programs are flattened first, which
/// preserves `cost(P)`.
pub fn audit(program: &Program, scheme: &CostScheme) -> Result<CostReport> {
    if program.q() != 1 {
        return Err(Error::MultiOutput(program.q()));
    }
    let flat = program.flatten()?;
    let p = flat.p();
    let pp = int(p as i64);
    let add = scheme.add();
    let mul = scheme.mul();
    let two_max = int(2) * if add > mul { add.clone() } else { mul.clone() };

    let mut cost_p = Rational::zero();
    let mut cost_gd = Rational::zero();
    let mut cost_b = Rational::zero();
    let mut cost_f = Rational::zero();
    let mut omega_b = None;
    let mut omega_sum = None;
    let mut omega_f = None;
    let mut rows: BTreeMap<String, OpRow> = BTreeMap::new();

    for (k, node) in flat.nodes().iter().enumerate() {
        let NodeKind::Op(op) = &node.kind else { unreachable!("flattened") };
        let i = p + 1 + k;
        let g = scheme
            .primitive(op)
            .ok_or_else(|| Error::UnpricedOp { node: i, op: op.to_string() })?;
        let gd = scheme
            .derived(op)
            .ok_or_else(|| Error::UnpricedOp { node: i, op: op.to_string() })?;
        let a = int(node.args.len() as i64);
        let back_sum = &gd + &a * (&add + &mul);
        let back_max = &gd + &two_max * &a;
        let fwd = &gd + &pp * &a * &mul + &pp * (&a - int(1)) * &add;

        cost_p += &g;
        cost_gd += &gd;
        cost_b += &back_sum;
        cost_f += &fwd;
        let (wb, ws, wf) = (ratio(&back_max, &g), ratio(&back_sum, &g), ratio(&fwd, &g));
        max_opt(&mut omega_b, wb.clone());
        max_opt(&mut omega_sum, ws);
        max_opt(&mut omega_f, wf.clone());
        rows.entry(op.to_string())
            .or_insert_with(|| OpRow {
                op: op.to_string(),
                count: 0,
                cost_g: g,
                arity: node.args.len(),
                cost_gd: gd,
                omega_b: wb,
                omega_f: wf,
            })
            .count += 1;
    }

    Ok(CostReport {
        scheme: scheme.name().to_string(),
        p,
        nodes: flat.nodes().len(),
        ratio_b: ratio(&cost_b, &cost_p),
        ratio_f: ratio(&cost_f, &cost_p),
        cost_p,
        cost_gd,
        cost_backprop: cost_b,
        cost_forprop: cost_f,
        omega_b: omega_b.flatten(),
        omega_b_sum_form: omega_sum.flatten(),
        omega_f: omega_f.flatten(),
        per_op_table: rows.into_values().collect(),
    })
}

fn opt_json(v: &Option<Rational>) -> Value {
    v.as_ref().map_or(Value::Null, rational_to_json)
}

fn approx(v: &Option<Rational>) -> Value {
    v.as_ref().and_then(|q| q.to_f64()).map_or(Value::Null, Value::from)
}

fn opt_text(v: &Option<Rational>) -> String {
    v.as_ref().map_or_else(|| "unbounded".to_string(), format_rational)
}

impl CostReport {
    /// `ratio_b <= omega_b` and `ratio_f <= omega_f` (vacuous when unbounded).
    pub fn bounds_hold(&self) -> bool {
        let le = |r: &Option<Rational>, w: &Option<Rational>| match (r, w) {
            (Some(r), Some(w)) => r <= w,
            _ => true,
        };
        le(&self.ratio_b, &self.omega_b)
            && le(&self.ratio_b, &self.omega_b_sum_form)
            && le(&self.ratio_f, &self.omega_f)
    }

    /// Exact values are integers or `"a/b"` strings; `*_approx` fields are floats.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .per_op_table
            .iter()
            .map(|r| {
                json!({
                    "op": r.op,
                    "count": r.count,
                    "cost_g": rational_to_json(&r.cost_g),
                    "arity": r.arity,
                    "cost_gd": rational_to_json(&r.cost_gd),
                    "omega_b": opt_json(&r.omega_b),
                    "omega_f": opt_json(&r.omega_f),
                })
            })
            .collect();
        json!({
            "scheme": self.scheme,
            "p": self.p,
            "nodes": self.nodes,
            "cost_p": rational_to_json(&self.cost_p),
            "cost_gd": rational_to_json(&self.cost_gd),
            "cost_backprop": rational_to_json(&self.cost_backprop),
            "cost_forprop": rational_to_json(&self.cost_forprop),
            "omega_b": opt_json(&self.omega_b),
            "omega_b_sum_form": opt_json(&self.omega_b_sum_form),
            "omega_f": opt_json(&self.omega_f),
            "ratio_b": opt_json(&self.ratio_b),
            "ratio_f": opt_json(&self.ratio_f),
            "ratio_b_approx": approx(&self.ratio_b),
            "ratio_f_approx": approx(&self.ratio_f),
            "bounds_hold": self.bounds_hold(),
            "per_op_table": rows,
        })
    }

    /// Aligned text table, one row per op kind, followed by the aggregates.
    pub fn to_text(&self) -> String {
        let header = ["op", "count", "cost(g)", "|pr|", "cost(gd)", "omega_b", "omega_f"];
        let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.per_op_table {
            table.push(vec![
                r.op.clone(),
                r.count.to_string(),
                format_rational(&r.cost_g),
                r.arity.to_string(),
                format_rational(&r.cost_gd),
                opt_text(&r.omega_b),
                opt_text(&r.omega_f),
            ]);
        }
        let mut out = render(&table);
        let _ = writeln!(out, "scheme            {}", self.scheme);
        let _ = writeln!(out, "cost(P)           {}", format_rational(&self.cost_p));
        let _ = writeln!(out, "cost(backprop)    {}", format_rational(&self.cost_backprop));
        let _ = writeln!(out, "cost(forprop)     {}", format_rational(&self.cost_forprop));
        let _ = writeln!(out, "ratio_b           {}", opt_text(&self.ratio_b));
        let _ = writeln!(out, "ratio_f           {}", opt_text(&self.ratio_f));
        let _ = writeln!(out, "omega_b           {}", opt_text(&self.omega_b));
        let _ = writeln!(out, "omega_b (sum)     {}", opt_text(&self.omega_b_sum_form));
        let _ = writeln!(out, "omega_f           {}", opt_text(&self.omega_f));
        out
    }
}

/// Left-aligned columns separated by two spaces.
pub(crate) fn render(table: &[Vec<String>]) -> String {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in table {
        let line: Vec<String> =
            row.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Eval,
    Backprop,
    Forprop,
}

/// Runs the engine with a counting meter and returns the scheme-weighted number
/// of operations it executed. Forward mode uses the identity seed.
pub fn instrumented_run<T: Scalar>(
    engine: &Engine<T>,
    program: &Program,
    x: &[T],
    mode: RunMode,
    scheme: &CostScheme,
) -> Result<Rational> {
    let flat = program.flatten()?;
    for (k, node) in flat.nodes().iter().enumerate() {
        if let NodeKind::Op(op) = &node.kind {
            if scheme.primitive(op).is_none() || scheme.derived(op).is_none() {
                return Err(Error::UnpricedOp { node: flat.p() + 1 + k, op: op.to_string() });
            }
        }
    }
    let mut meter = CountingMeter::new(scheme);
    match mode {
        RunMode::Eval => {
            engine.evaluate_metered(program, x, &mut meter)?;
        }
        RunMode::Backprop => {
            engine.backprop_metered(program, x, &mut meter)?;
        }
        RunMode::Forprop => {
            engine.forprop_metered(program, x, None, &mut meter)?;
        }
    }
    Ok(meter.total())
}
