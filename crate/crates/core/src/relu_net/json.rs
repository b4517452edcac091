//! Network files: `{"L": int, "mats": [[[num]]], "masks": [[0|1]]}`.
//!
//! `mats[i]` is `M_{i+1}` as a list of rows; `masks[i]` flags the ReLU
//! coordinates of `Φ_{i+1}` (1 = relu, 0 = identity). Entries are JSON numbers
//! or `"a/b"` strings.

use serde_json::{json, Value};

use super::RationalNetwork;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{rational_from_json, rational_to_json};

pub fn to_json(net: &RationalNetwork) -> Value {
    let mats: Vec<Value> = net
        .mats()
        .iter()
        .map(|m| Value::Array(m.to_rows().iter().map(|r| r.iter().map(rational_to_json).collect()).collect()))
        .collect();
    let masks: Vec<Vec<u8>> = net.masks().iter().map(|mk| mk.iter().map(|&b| b as u8).collect()).collect();
    json!({ "L": net.depth(), "mats": mats, "masks": masks })
}

pub fn to_string(net: &RationalNetwork) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(net)).expect("json values always serialize");
    s.push('\n');
    s
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Parse(format!("network: missing field {key:?}")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Parse(format!("network: {what} must be an array")))
}

pub fn from_json(v: &Value) -> Result<RationalNetwork> {
    let l = field(v, "L")?
        .as_u64()
        .ok_or_else(|| Error::Parse("network: L must be a nonnegative integer".into()))? as usize;
    let mut mats = Vec::new();
    for (i, m) in array(field(v, "mats")?, "mats")?.iter().enumerate() {
        let rows = array(m, &format!("mats[{i}]"))?
            .iter()
            .map(|r| array(r, &format!("row of mats[{i}]"))?.iter().map(rational_from_json).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        mats.push(Matrix::from_rows(rows)?);
    }
    let mut masks = Vec::new();
    for (i, mk) in array(field(v, "masks")?, "masks")?.iter().enumerate() {
        let flags = array(mk, &format!("masks[{i}]"))?
            .iter()
            .map(|f| match f.as_u64() {
                Some(0) => Ok(false),
                Some(1) => Ok(true),
                _ => Err(Error::Parse(format!("network: masks[{i}] entries must be 0 or 1, got {f}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        masks.push(flags);
    }
    if mats.len() != l {
        return Err(Error::Parse(format!("network: L = {l} but {} matrices given", mats.len())));
    }
    RationalNetwork::new(mats, masks)
}

pub fn parse(text: &str) -> Result<RationalNetwork> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_json(&v)
}
