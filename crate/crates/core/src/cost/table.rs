//! Per-op overhead tables with symbolic costs.
//!
//! Costs are polynomials in `c_nl` (smooth nonlinear op), `c_R` (sign
//! evaluation / comparison) and `n` (input count of the norm rows). Every row
//! keeps `cost(g)`, `|pr|` and `cost(gd)` symbolically, so the overhead
//! `omega = (cost(gd) + 2 cost(×) |pr|) / cost(g)` can be evaluated anywhere on
//! the parameter domain and compared with the stated bound.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::scalar::{format_rational, int, rat, rational_to_json, Rational};

/// Variables of [`Poly`], by exponent position.
pub const VARS: [&str; 3] = ["c_nl", "c_R", "n"];

/// Polynomial with rational coefficients in `c_nl`, `c_R`, `n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<[u32; 3], Rational>,
}

impl Poly {
    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::default();
        p.push([0, 0, 0], c);
        p
    }

    pub fn int(c: i64) -> Self {
        Self::constant(int(c))
    }

    pub fn c_nl() -> Self {
        Self::var(0)
    }

    pub fn c_r() -> Self {
        Self::var(1)
    }

    pub fn n() -> Self {
        Self::var(2)
    }

    fn var(i: usize) -> Self {
        let mut e = [0; 3];
        e[i] = 1;
        let mut p = Poly::default();
        p.push(e, Rational::one());
        p
    }

    fn push(&mut self, e: [u32; 3], c: Rational) {
        let entry = self.terms.entry(e).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    /// Value at `(c_nl, c_R, n)`.
    pub fn eval(&self, c_nl: &Rational, c_r: &Rational, n: &Rational) -> Rational {
        let vals = [c_nl, c_r, n];
        let mut total = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, &k) in vals.iter().zip(e) {
                for _ in 0..k {
                    t *= *v;
                }
            }
            total += t;
        }
        total
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| *e == [0, 0, 0])
    }
}

impl Add for Poly {
    type Output = Poly;

    fn add(mut self, rhs: Poly) -> Poly {
        for (e, c) in rhs.terms {
            self.push(e, c);
        }
        self
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.push(e, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        // Constant first, then by total degree and variable order.
        let mut keys: Vec<&[u32; 3]> = self.terms.keys().collect();
        keys.sort_by_key(|e| (e.iter().sum::<u32>(), e.map(|k| u32::MAX - k)));
        for (idx, e) in keys.into_iter().enumerate() {
            let c = &self.terms[e];
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { VARS[i].to_string() } else { format!("{}^{k}", VARS[i]) })
                .collect();
            let mag = c.abs();
            let body = if mono.is_empty() {
                format_rational(&mag)
            } else if mag.is_one() {
                mono.join("*")
            } else {
                format!("{}*{}", format_rational(&mag), mono.join("*"))
            };
            match (idx, c.is_negative()) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

/// Which published table a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    /// Unit costs on the ReLU dictionary.
    Unit,
    /// Weighted costs on the same dictionary, with `×ReLU` for `ReLU`.
    Weighted,
    /// Extended nonsmooth ops.
    Extended,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub table: TableId,
    pub label: &'static str,
    pub cost_g: Poly,
    pub arity: Poly,
    pub cost_gd: Poly,
    /// Stated value of `omega`.
    pub bound: Rational,
    /// `true` when the stated value is an equality rather than an upper bound.
    pub exact: bool,
}

/// Numeric values of a row at a parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct RowValues {
    pub cost_g: Rational,
    pub arity: Rational,
    pub cost_gd: Rational,
    pub ratio_gd: Rational,
    /// `cost(×) |pr| / cost(g)`.
    pub ratio_mul: Rational,
    pub omega: Rational,
}

impl TableRow {
    /// `cost(gd) + 2 cost(×) |pr|`, with `cost(×) = 1`.
    pub fn omega_numerator(&self) -> Poly {
        self.cost_gd.clone() + &Poly::int(2) * &self.arity
    }

    pub fn omega_text(&self) -> String {
        if self.cost_g.is_constant() {
            format!("({}) / {}", self.omega_numerator(), self.cost_g)
        } else {
            format!("({}) / ({})", self.omega_numerator(), self.cost_g)
        }
    }

    /// Values at `(c_nl, c_R, n)`; `None` if `cost(g)` vanishes there.
    pub fn eval(&self, c_nl: &Rational, c_r: &Rational, n: &Rational) -> Option<RowValues> {
        let g = self.cost_g.eval(c_nl, c_r, n);
        if g.is_zero() {
            return None;
        }
        let a = self.arity.eval(c_nl, c_r, n);
        let gd = self.cost_gd.eval(c_nl, c_r, n);
        let omega = self.omega_numerator().eval(c_nl, c_r, n) / &g;
        Some(RowValues { ratio_gd: &gd / &g, ratio_mul: &a / &g, omega, cost_g: g, arity: a, cost_gd: gd })
    }

    /// Whether the stated bound (or equality) holds at the point.
    pub fn bound_holds_at(&self, c_nl: &Rational, c_r: &Rational, n: &Rational) -> bool {
        match self.eval(c_nl, c_r, n) {
            Some(v) if self.exact => v.omega == self.bound,
            Some(v) => v.omega <= self.bound,
            None => false,
        }
    }

    pub fn to_json(&self, c_nl: &Rational, c_r: &Rational, n: &Rational) -> Value {
        let v = self.eval(c_nl, c_r, n);
        json!({
            "op": self.label,
            "cost_g": self.cost_g.to_string(),
            "arity": self.arity.to_string(),
            "cost_gd": self.cost_gd.to_string(),
            "omega": self.omega_text(),
            "stated": format!("{}{}", if self.exact { "" } else { "<= " }, format_rational(&self.bound)),
            "value": v.as_ref().map_or(Value::Null, |v| json!({
                "cost_g": rational_to_json(&v.cost_g),
                "arity": rational_to_json(&v.arity),
                "cost_gd": rational_to_json(&v.cost_gd),
                "ratio_gd": rational_to_json(&v.ratio_gd),
                "ratio_mul": rational_to_json(&v.ratio_mul),
                "omega": rational_to_json(&v.omega),
            })),
            "holds": self.bound_holds_at(c_nl, c_r, n),
        })
    }
}

/// Which constants to tabulate.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// The unit-cost table (all rows constant).
    Unit,
    /// The weighted table followed by the extended-op table, evaluated at the
    /// given parameters (`n` for the norm rows).
    Weighted { c_nonlin: Rational, c_relu: Rational, n: usize },
}

impl Preset {
    pub fn params(&self) -> (Rational, Rational, Rational) {
        match self {
            Preset::Unit => (int(1), int(1), int(1)),
            Preset::Weighted { c_nonlin, c_relu, n } => {
                (c_nonlin.clone(), c_relu.clone(), int(*n as i64))
            }
        }
    }
}

fn row(
    table: TableId,
    label: &'static str,
    cost_g: Poly,
    arity: Poly,
    cost_gd: Poly,
    bound: Rational,
    exact: bool,
) -> TableRow {
    TableRow { table, label, cost_g, arity, cost_gd, bound, exact }
}

/// Rows of the unit table: `(+,×)`, `(+c,×c)`, `log`, `exp`, `inv`, `ReLU`.
pub fn unit_rows() -> Vec<TableRow> {
    let c = Poly::int;
    let t = TableId::Unit;
    vec![
        row(t, "(+,×)", c(1), c(2), c(1), int(5), true),
        row(t, "(+c,×c)", c(1), c(1), c(1), int(3), true),
        row(t, "log", c(1), c(1), c(2), int(4), true),
        row(t, "exp", c(1), c(1), c(1), int(3), true),
        row(t, "inv", c(1), c(1), c(3), int(5), true),
        row(t, "ReLU", c(1), c(1), c(1), int(3), true),
    ]
}

/// Rows of the weighted table.
pub fn weighted_rows() -> Vec<TableRow> {
    let c = Poly::int;
    let nl = Poly::c_nl;
    let t = TableId::Weighted;
    let one_r = c(1) + Poly::c_r();
    vec![
        row(t, "(+,×)", c(1), c(2), c(1), int(5), true),
        row(t, "(+c,×c)", c(1), c(1), c(1), int(3), true),
        row(t, "log", nl(), c(1), &c(2) * &nl(), int(4), false),
        row(t, "exp", nl(), c(1), nl(), int(3), false),
        row(t, "inv", nl(), c(1), nl() + c(2), int(5), false),
        row(t, "×ReLU", one_r.clone(), c(2), one_r, int(5), false),
    ]
}

/// Rows of the extended-op table. For these ops `cost(gd) = cost(g)`.
pub fn extended_rows() -> Vec<TableRow> {
    let c = Poly::int;
    let cr = Poly::c_r;
    let n = Poly::n;
    let t = TableId::Extended;
    let same = |label, g: Poly, a: Poly, bound, exact| row(t, label, g.clone(), a, g, bound, exact);
    vec![
        same("(+,×)", c(1), c(2), int(5), true),
        same("|·|", c(1) + cr(), c(1), int(3), false),
        same("ELU", c(2) + cr() + Poly::c_nl(), c(1), int(2), false),
        same("3×3-max-pool", c(153) + &c(8) * &cr(), c(9), rat(112, 100), false),
        same("‖·‖∞", n() + &(&c(2) * &n()) * &cr() + c(-1), n(), int(3), false),
        same("‖·‖₁", &n() * &(c(2) + cr()) + c(-1), n(), int(2), false),
    ]
}

/// Rows for a preset: the unit table, or the weighted and extended tables.
pub fn op_table(preset: &Preset) -> Vec<TableRow> {
    match preset {
        Preset::Unit => unit_rows(),
        Preset::Weighted { .. } => {
            let mut rows = weighted_rows();
            rows.extend(extended_rows());
            rows
        }
    }
}

/// Aligned text rendering of the rows at the preset's parameters.
pub fn render_table(preset: &Preset) -> String {
    let (a, b, n) = preset.params();
    let mut table = vec![["table", "op", "cost(g)", "|pr|", "cost(gd)", "omega", "value", "stated"]
        .map(String::from)
        .to_vec()];
    for r in op_table(preset) {
        let v = r.eval(&a, &b, &n);
        table.push(vec![
            format!("{:?}", r.table).to_lowercase(),
            r.label.to_string(),
            r.cost_g.to_string(),
            r.arity.to_string(),
            r.cost_gd.to_string(),
            r.omega_text(),
            v.map_or_else(|| "unbounded".into(), |v| format_rational(&v.omega)),
            format!("{}{}", if r.exact { "" } else { "<= " }, format_rational(&r.bound)),
        ]);
    }
    super::audit::render(&table)
}
