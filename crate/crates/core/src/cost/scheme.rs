use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::program::Op;
use crate::scalar::{format_rational, int, parse_rational, Rational};

/// Price of an op as a function of its arity `k`:
/// `base + per_arg * k + sort * k * ceil(log2 k)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Price {
    pub base: Rational,
    pub per_arg: Rational,
    pub sort: Rational,
}

impl Price {
    pub fn fixed(c: Rational) -> Self {
        Price { base: c, ..Price::default() }
    }

    pub fn at(&self, k: usize) -> Rational {
        let kk = int(k as i64);
        let log = int(ceil_log2(k) as i64);
        &self.base + &self.per_arg * &kk + &self.sort * kk * log
    }

    fn nonnegative_for_k_ge_2(&self) -> bool {
        // Affine plus a nonnegative-slope sort term: checking k = 2 and the slopes suffices.
        !self.at(2).is_negative() && !self.per_arg.is_negative() && !self.sort.is_negative()
    }
}

pub(crate) fn ceil_log2(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpPrice {
    /// `cost(g)`.
    pub g: Price,
    /// `cost(gd)`.
    pub gd: Price,
}

impl OpPrice {
    pub fn fixed(g: Rational, gd: Rational) -> Self {
        OpPrice { g: Price::fixed(g), gd: Price::fixed(gd) }
    }
}

/// Per-op costs for a dictionary and its derived dictionary.
#[derive(Clone, Debug, PartialEq)]
pub struct CostScheme {
    name: String,
    prices: BTreeMap<String, OpPrice>,
}

fn key(op: &Op) -> String {
    match op {
        Op::Custom { name, .. } => format!("custom:{name}"),
        other => other.name().to_string(),
    }
}

impl CostScheme {
    /// Unit costs: every op of the ReLU dictionary costs 1, with joint
    /// value/derivative costs add/mul 1, ±c 1, log 2, exp 1, inv 3, relu 1.
    /// Extended ops use the weighted formulas at `c_nonlin = c_relu = 1`.
    pub fn unit() -> Self {
        let mut s = Self::weighted(int(1), int(1)).expect("valid constants");
        s.name = "unit".into();
        let one = int(1);
        for (k, gd) in [
            ("add", 1),
            ("sub", 1),
            ("mul", 1),
            ("add-const", 1),
            ("mul-const", 1),
            ("log", 2),
            ("exp", 1),
            ("inv", 3),
            ("relu", 1),
        ] {
            s.prices.insert(k.into(), OpPrice::fixed(one.clone(), int(gd)));
        }
        s
    }

    /// Weighted scheme: smooth nonlinear ops cost `c_nonlin >= 1`, a sign
    /// evaluation or pairwise comparison costs `c_relu >= 0`.
    pub fn weighted(c_nonlin: Rational, c_relu: Rational) -> Result<Self> {
        if c_nonlin < int(1) {
            return Err(Error::Policy(format!(
                "c_nonlin = {} must be >= 1",
                format_rational(&c_nonlin)
            )));
        }
        if c_relu.is_negative() {
            return Err(Error::Policy(format!("c_relu = {} must be >= 0", format_rational(&c_relu))));
        }
        let one = int(1);
        let two = int(2);
        let cn = c_nonlin.clone();
        let cr = c_relu.clone();
        let mut prices = BTreeMap::new();
        let mut put = |k: &str, g: Price, gd: Price| {
            prices.insert(k.to_string(), OpPrice { g, gd });
        };
        let same = |p: Price| (p.clone(), p);
        for k in ["add", "sub", "mul", "add-const", "mul-const"] {
            put(k, Price::fixed(one.clone()), Price::fixed(one.clone()));
        }
        put("log", Price::fixed(cn.clone()), Price::fixed(&two * &cn));
        put("exp", Price::fixed(cn.clone()), Price::fixed(cn.clone()));
        put("inv", Price::fixed(cn.clone()), Price::fixed(&cn + &two));
        for k in ["relu", "abs", "leaky-relu"] {
            let (g, gd) = same(Price::fixed(&one + &cr));
            put(k, g, gd);
        }
        let (g, gd) = same(Price::fixed(&two + &cr + &cn));
        put("elu", g, gd);
        // k - 1 pairwise comparisons.
        for k in ["max", "min"] {
            let (g, gd) = same(Price { base: -cr.clone(), per_arg: cr.clone(), sort: Rational::zero() });
            put(k, g, gd);
        }
        // Comparison sort: k ceil(log2 k) comparisons.
        let (g, gd) = same(Price { sort: cr.clone(), ..Price::default() });
        put("median", g, gd);
        // k sign evaluations, k negations, k - 1 additions.
        let (g, gd) = same(Price { base: -one.clone(), per_arg: &two + &cr, sort: Rational::zero() });
        put("norm1", g, gd);
        // k negations, 2k comparisons, k - 1 further operations.
        let (g, gd) =
            same(Price { base: -one.clone(), per_arg: &one + &two * &cr, sort: Rational::zero() });
        put("norm-inf", g, gd);
        Ok(CostScheme {
            name: format!(
                "weighted(c_nonlin={},c_relu={})",
                format_rational(&c_nonlin),
                format_rational(&c_relu)
            ),
            prices,
        })
    }

    /// Parses `unit` or `weighted:c_nonlin=<q>,c_relu=<q>` (either key may be omitted, default 1).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "unit" {
            return Ok(Self::unit());
        }
        let Some(rest) = text.strip_prefix("weighted") else {
            return Err(Error::Parse(format!("unknown cost scheme {text:?}")));
        };
        let rest = rest.trim_start_matches(':');
        let mut cn = int(1);
        let mut cr = int(1);
        for part in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            let v = parse_rational(v)?;
            match k.trim() {
                "c_nonlin" | "c_nl" => cn = v,
                "c_relu" | "c_R" => cr = v,
                other => return Err(Error::Parse(format!("unknown scheme parameter {other:?}"))),
            }
        }
        Self::weighted(cn, cr)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Overrides (or adds) the price of an op kind, e.g. `"log"`.
    pub fn set_price(&mut self, kind: &str, price: OpPrice) -> Result<()> {
        if !price.g.nonnegative_for_k_ge_2() || !price.gd.nonnegative_for_k_ge_2() {
            return Err(Error::Policy(format!("negative price for {kind}")));
        }
        if matches!(kind, "add" | "mul") && (price.g.at(2).is_zero() || price.g.at(2).is_negative()) {
            return Err(Error::Policy(format!("cost({kind}) must be positive")));
        }
        self.prices.insert(kind.to_string(), price);
        Ok(())
    }

    /// Prices a custom op registered under `name`.
    pub fn set_custom(&mut self, name: &str, g: Rational, gd: Rational) -> Result<()> {
        self.set_price(&format!("custom:{name}"), OpPrice::fixed(g, gd))
    }

    /// `cost(g)` for `op`, or `None` when unpriced.
    pub fn primitive(&self, op: &Op) -> Option<Rational> {
        self.prices.get(&key(op)).map(|p| p.g.at(op.arity()))
    }

    /// `cost(gd)` for `op`, or `None` when unpriced.
    pub fn derived(&self, op: &Op) -> Option<Rational> {
        self.prices.get(&key(op)).map(|p| p.gd.at(op.arity()))
    }

    /// `cost(+)`.
    pub fn add(&self) -> Rational {
        self.prices["add"].g.at(2)
    }

    /// `cost(×)`.
    pub fn mul(&self) -> Rational {
        self.prices["mul"].g.at(2)
    }
}

impl fmt::Display for CostScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
