//! JSON program format.
//!
//! ```json
//! {"p": 3, "q": 1, "nodes": [
//!   {"op": "add", "args": [2, 3]},
//!   {"op": "mul", "args": [1, 4]}
//! ]}
//! ```
//!
//! Constants go in `"const"` (a number, or a string such as `"3/7"`), custom ops
//! carry `"name"`, and calls use `{"op": "call", "sub": "<ref>", "args": [...]}`.
//! References are resolved by the caller; [`load`] resolves them through a
//! sidecar file mapping each reference to a program file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use super::{Node, NodeKind, Op, Program};
use crate::error::{Error, Result};
use crate::scalar::{rational_from_json, rational_to_json};

/// Canonical JSON value of a program. Keys are emitted in sorted order.
pub fn to_json(program: &Program) -> Value {
    let nodes: Vec<Value> = program.nodes().iter().map(node_to_json).collect();
    json!({"p": program.p(), "q": program.q(), "nodes": nodes})
}

fn node_to_json(node: &Node) -> Value {
    let mut obj = Map::new();
    obj.insert("args".into(), json!(node.args));
    match &node.kind {
        NodeKind::Op(op) => {
            obj.insert("op".into(), Value::from(op.name()));
            if let Some(c) = op.constant() {
                obj.insert("const".into(), rational_to_json(c));
            }
            if let Op::Custom { name, .. } = op {
                obj.insert("name".into(), Value::from(name.as_str()));
            }
        }
        NodeKind::Call { name, .. } => {
            obj.insert("op".into(), Value::from("call"));
            obj.insert("sub".into(), Value::from(name.as_str()));
        }
    }
    Value::Object(obj)
}

/// Pretty-printed canonical text, newline terminated.
pub fn to_string(program: &Program) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(program)).expect("serializable");
    s.push('\n');
    s
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Parse(format!("{ctx}: missing field {key:?}")))
}

fn as_index(v: &Value, ctx: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::Parse(format!("{ctx}: expected a nonnegative integer, got {v}")))
}

/// Builds a program from its JSON value; `resolve` maps `"sub"` references to programs.
pub fn from_json(
    value: &Value,
    resolve: &mut dyn FnMut(&str) -> Result<Arc<Program>>,
) -> Result<Program> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("program must be a JSON object".into()))?;
    let p = as_index(field(obj, "p", "program")?, "p")?;
    let q = as_index(field(obj, "q", "program")?, "q")?;
    let raw_nodes = field(obj, "nodes", "program")?
        .as_array()
        .ok_or_else(|| Error::Parse("\"nodes\" must be an array".into()))?;
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    for (k, raw) in raw_nodes.iter().enumerate() {
        let ctx = format!("node {}", p + 1 + k);
        let n = raw
            .as_object()
            .ok_or_else(|| Error::Parse(format!("{ctx}: expected an object")))?;
        let op_name = field(n, "op", &ctx)?
            .as_str()
            .ok_or_else(|| Error::Parse(format!("{ctx}: \"op\" must be a string")))?;
        let args = field(n, "args", &ctx)?
            .as_array()
            .ok_or_else(|| Error::Parse(format!("{ctx}: \"args\" must be an array")))?
            .iter()
            .map(|a| as_index(a, &ctx))
            .collect::<Result<Vec<_>>>()?;
        if op_name == "call" {
            let sub = field(n, "sub", &ctx)?
                .as_str()
                .ok_or_else(|| Error::Parse(format!("{ctx}: \"sub\" must be a string")))?;
            nodes.push(Node::call(sub, resolve(sub)?, args));
            continue;
        }
        let constant = n.get("const").map(rational_from_json).transpose()?;
        let custom = n.get("name").and_then(Value::as_str);
        let op = Op::from_parts(op_name, args.len(), constant, custom).ok_or_else(|| {
            Error::Parse(format!("{ctx}: unknown op {op_name:?} or missing const/name"))
        })?;
        nodes.push(Node::op(op, args));
    }
    Program::new(p, q, nodes)
}

/// Parses a program without nested calls.
pub fn parse_flat(text: &str) -> Result<Program> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_json(&value, &mut |name| Err(Error::UnknownReference(name.to_string())))
}

/// Parses program text, resolving references through `subs` (already loaded programs).
pub fn parse_with(text: &str, subs: &HashMap<String, Arc<Program>>) -> Result<Program> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_json(&value, &mut |name| {
        subs.get(name).cloned().ok_or_else(|| Error::UnknownReference(name.to_string()))
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Loads a program file. The optional sidecar is a JSON object mapping reference
/// names to program files (relative to the sidecar's directory); subprograms may
/// themselves reference other entries of the same sidecar.
pub fn load(path: &Path, sidecar: Option<&Path>) -> Result<Program> {
    let mut table: HashMap<String, PathBuf> = HashMap::new();
    if let Some(side) = sidecar {
        let value: Value =
            serde_json::from_str(&read(side)?).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("sidecar must map names to files".into()))?;
        let base = side.parent().unwrap_or_else(|| Path::new("."));
        for (name, file) in obj {
            let file = file
                .as_str()
                .ok_or_else(|| Error::Parse(format!("sidecar entry {name:?} must be a path")))?;
            table.insert(name.clone(), base.join(file));
        }
    }
    let mut loader = Loader { table, cache: HashMap::new(), stack: Vec::new() };
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    from_json(&value, &mut |name| loader.get(name))
}

struct Loader {
    table: HashMap<String, PathBuf>,
    cache: HashMap<String, Arc<Program>>,
    stack: Vec<String>,
}

impl Loader {
    fn get(&mut self, name: &str) -> Result<Arc<Program>> {
        if let Some(p) = self.cache.get(name) {
            return Ok(p.clone());
        }
        if self.stack.iter().any(|s| s == name) {
            return Err(Error::Parse(format!("recursive subprogram reference {name:?}")));
        }
        let path = self
            .table
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownReference(name.to_string()))?;
        let value: Value =
            serde_json::from_str(&read(&path)?).map_err(|e| Error::Parse(e.to_string()))?;
        self.stack.push(name.to_string());
        let prog = from_json(&value, &mut |inner| self.get(inner));
        self.stack.pop();
        let prog = Arc::new(prog?);
        self.cache.insert(name.to_string(), prog.clone());
        Ok(prog)
    }
}
