//! Command implementations. Each returns the JSON (or text) to print.

use std::path::Path;

use serde_json::{json, Value};

use nsad_core::cost::{op_table, render_table, Preset};
use nsad_core::enumerate::{decide_singleton_with, DecideOptions};
use nsad_core::hardness::{encode_3sat, positive_sign_vector, directional_check, CnfFormula, DirectionalInstance};
use nsad_core::program::json as program_json;
use nsad_core::relu_net::{json as net_json, net_from_program, program_from_net};
use nsad_core::scalar::{parse_rational, rational_to_json};
use nsad_core::{audit, CostScheme, Engine, Error, Program, Rational, Result, Scalar, SelectionPolicy};

use crate::{Arith, Command, Mode, SatAction};

pub fn run(command: Command) -> Result<String> {
    match command {
        Command::Eval { program, x, arith, sidecar } => eval(&program, &x, arith, sidecar.as_deref()),
        Command::Grad { program, x, mode, policy, scheme, arith, sidecar } => {
            let prog = load_program(&program, sidecar.as_deref())?;
            let policy = SelectionPolicy::parse(&policy)?;
            let scheme = CostScheme::parse(&scheme)?;
            let xs = parse_point(&x)?;
            let (value, grad) = match arith {
                Arith::F64 => grad_with::<f64>(&prog, &xs, mode, policy)?,
                Arith::Exact => grad_with::<Rational>(&prog, &xs, mode, policy)?,
            };
            let report = audit(&prog, &scheme)?;
            Ok(pretty(&json!({ "value": value, "grad": grad, "cost_report": report.to_json() })))
        }
        Command::Cost { target, scheme, n, text, sidecar } => {
            let scheme_obj = CostScheme::parse(&scheme)?;
            if target == "table" {
                let preset = if scheme.trim() == "unit" {
                    Preset::Unit
                } else {
                    let (c_nonlin, c_relu) = weighted_params(&scheme)?;
                    Preset::Weighted { c_nonlin, c_relu, n }
                };
                if text {
                    return Ok(render_table(&preset));
                }
                let (a, b, nn) = preset.params();
                let rows: Vec<Value> = op_table(&preset).iter().map(|r| r.to_json(&a, &b, &nn)).collect();
                return Ok(pretty(&json!({ "scheme": scheme_obj.name(), "rows": rows })));
            }
            let prog = load_program(Path::new(&target), sidecar.as_deref())?;
            let report = audit(&prog, &scheme_obj)?;
            Ok(if text { report.to_text() } else { pretty(&report.to_json()) })
        }
        Command::Sat { action } => match action {
            SatAction::Encode { cnf } => {
                let f = load_cnf(&cnf)?;
                Ok(pretty(&net_json::to_json(&encode_3sat(&f)?)))
            }
            SatAction::Check { cnf, jobs } => {
                let f = load_cnf(&cnf)?;
                let net = encode_3sat(&f)?;
                let witness = positive_sign_vector(&net, jobs)?;
                let mut out = json!({
                    "p": f.p(),
                    "clauses": f.clauses().len(),
                    "satisfiable": witness.is_some(),
                    "clarke_singleton_at_zero": witness.is_none(),
                });
                if let Some(w) = witness {
                    out["witness"] = json!(w);
                }
                Ok(pretty(&out))
            }
        },
        Command::Enum { network, x, seed } => {
            let net = net_json::parse(&read(&network)?)?;
            let xs = parse_point(&x)?;
            let mut opts = DecideOptions::default();
            if let Some(s) = seed {
                opts.seed = s;
            }
            Ok(pretty(&decide_singleton_with(&net, &xs, opts)?.to_json()))
        }
        Command::Convert { input } => convert(&input),
        Command::Ddemo { p, seed } => {
            let inst = DirectionalInstance::random(p, seed)?;
            let report = directional_check(&inst)?;
            Ok(pretty(&report.to_json()))
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path, sidecar: Option<&Path>) -> Result<Program> {
    program_json::load(path, sidecar)
}

fn load_cnf(path: &Path) -> Result<CnfFormula> {
    CnfFormula::parse_dimacs(&read(path)?)
}

/// `"2,1/3,-0.5"` as exact rationals.
fn parse_point(text: &str) -> Result<Vec<Rational>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_rational).collect()
}

fn weighted_params(scheme: &str) -> Result<(Rational, Rational)> {
    let mut cn = Rational::from_integer(1.into());
    let mut cr = cn.clone();
    let rest = scheme.trim().trim_start_matches("weighted").trim_start_matches(':');
    for part in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
        match k.trim() {
            "c_nonlin" | "c_nl" => cn = parse_rational(v)?,
            _ => cr = parse_rational(v)?,
        }
    }
    Ok((cn, cr))
}

/// JSON form of an engine scalar: plain numbers for floats, exact rationals otherwise.
trait ToJson {
    fn to_json(&self) -> Value;
}

impl ToJson for f64 {
    fn to_json(&self) -> Value {
        json!(self)
    }
}

impl ToJson for Rational {
    fn to_json(&self) -> Value {
        rational_to_json(self)
    }
}

fn to_json_vec<T: ToJson>(v: &[T]) -> Value {
    Value::Array(v.iter().map(ToJson::to_json).collect())
}

fn convert_point<T: Scalar>(x: &[Rational]) -> Vec<T> {
    x.iter().map(T::from_rational).collect()
}

fn eval(path: &Path, x: &str, arith: Arith, sidecar: Option<&Path>) -> Result<String> {
    let prog = load_program(path, sidecar)?;
    let xs = parse_point(x)?;
    let y = match arith {
        Arith::F64 => to_json_vec(&Engine::<f64>::default().evaluate(&prog, &convert_point(&xs))?),
        Arith::Exact => to_json_vec(&Engine::<Rational>::default().evaluate(&prog, &xs)?),
    };
    Ok(pretty(&json!({ "y": y })))
}

fn grad_with<T: Scalar + ToJson>(prog: &Program, x: &[Rational], mode: Mode, policy: SelectionPolicy) -> Result<(Value, Value)> {
    let engine = Engine::<T>::new(policy);
    let x: Vec<T> = convert_point(x);
    let (value, grad) = match mode {
        Mode::Bwd => engine.backprop(prog, &x)?,
        Mode::Fwd => engine.forprop(prog, &x, None)?,
    };
    Ok((value.to_json(), to_json_vec(&grad)))
}

/// Network documents carry `"L"`; anything else is read as a program.
fn convert(path: &Path) -> Result<String> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if value.get("L").is_some() {
        let net = net_json::from_json(&value)?;
        Ok(pretty(&program_json::to_json(&program_from_net(&net)?)))
    } else {
        let prog = program_json::from_json(&value, &mut |name| Err(Error::UnknownReference(name.to_string())))?;
        let net = net_from_program(&prog)?;
        Ok(pretty(&net_json::to_json(&net)))
    }
}
