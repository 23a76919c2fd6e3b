//! Flat `key = value` text format (a TOML-compatible subset).
//!
//! One binding per line; `#` starts a comment; values are bare integers,
//! floats, booleans, quoted strings, or `[v1, v2, ...]` arrays of numbers.
//! Nested tables are deliberately unsupported.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    IntList(Vec<i64>),
    FloatList(Vec<f64>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
            Value::IntList(_) => "integer list",
            Value::FloatList(_) => "float list",
        }
    }
}

/// Parsed document: ordered map from key to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    entries: BTreeMap<String, Value>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDoc::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim().to_string();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{}`", lineno + 1, raw.trim()))
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!("line {}: bad key `{}`", lineno + 1, key)));
            }
            let value = parse_value(value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, e)))?;
            doc.entries.insert(key.to_string(), value);
        }
        Ok(doc)
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Int(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(Error::Config(format!("key `{key}`: expected non-negative integer, got {}", v.type_name()))),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.get_u64(key)?.map(|v| v as usize))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Int(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(Error::Config(format!("key `{key}`: expected number, got {}", v.type_name()))),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(v) => Err(Error::Config(format!("key `{key}`: expected boolean, got {}", v.type_name()))),
        }
    }

    pub fn get_str(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(Error::Config(format!("key `{key}`: expected string, got {}", v.type_name()))),
        }
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::IntList(v)) => {
                if v.iter().any(|&x| x < 0) {
                    return Err(Error::Config(format!("key `{key}`: negative entry in index list")));
                }
                Ok(Some(v.iter().map(|&x| x as usize).collect()))
            }
            Some(Value::Int(i)) if *i >= 0 => Ok(Some(vec![*i as usize])),
            Some(v) => Err(Error::Config(format!("key `{key}`: expected integer list, got {}", v.type_name()))),
        }
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Value::FloatList(v)) => Ok(Some(v.clone())),
            Some(Value::IntList(v)) => Ok(Some(v.iter().map(|&x| x as f64).collect())),
            Some(Value::Float(x)) => Ok(Some(vec![*x])),
            Some(Value::Int(i)) => Ok(Some(vec![*i as f64])),
            Some(v) => Err(Error::Config(format!("key `{key}`: expected number list, got {}", v.type_name()))),
        }
    }

    /// Canonical serialization: sorted keys, one binding per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            match v {
                Value::Int(i) => writeln!(out, "{k} = {i}").unwrap(),
                Value::Float(x) => writeln!(out, "{k} = {}", fmt_float(*x)).unwrap(),
                Value::Bool(b) => writeln!(out, "{k} = {b}").unwrap(),
                Value::Str(s) => writeln!(out, "{k} = \"{s}\"").unwrap(),
                Value::IntList(v) => {
                    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                    writeln!(out, "{k} = [{}]", items.join(", ")).unwrap();
                }
                Value::FloatList(v) => {
                    let items: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
                    writeln!(out, "{k} = [{}]", items.join(", ")).unwrap();
                }
            }
        }
        out
    }
}

fn fmt_float(x: f64) -> String {
    // Round-trippable float formatting; keep a decimal point so the value
    // re-parses as a float.
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (idx, ch) in line.char_indices() {
        match ch {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..idx],
            _ => {}
        }
    }
    line
}

fn parse_value(text: &str) -> std::result::Result<Value, String> {
    if text.is_empty() {
        return Err("empty value".into());
    }
    if let Some(stripped) = text.strip_prefix('"') {
        let inner = stripped.strip_suffix('"').ok_or("unterminated string")?;
        if inner.contains('"') {
            return Err("embedded quote in string".into());
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if text == "true" {
        return Ok(Value::Bool(true));
    }
    if text == "false" {
        return Ok(Value::Bool(false));
    }
    if let Some(stripped) = text.strip_prefix('[') {
        let inner = stripped.strip_suffix(']').ok_or("unterminated list")?;
        let items: Vec<&str> = inner
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .collect();
        let all_ints = items.iter().all(|s| s.parse::<i64>().is_ok());
        if all_ints {
            return Ok(Value::IntList(items.iter().map(|s| s.parse::<i64>().unwrap()).collect()));
        }
        let mut floats = Vec::with_capacity(items.len());
        for s in items {
            floats.push(s.parse::<f64>().map_err(|_| format!("bad list entry `{s}`"))?);
        }
        return Ok(Value::FloatList(floats));
    }
    if let Ok(i) = text.parse::<i64>() {
        return Ok(Value::Int(i));
    }
    if let Ok(x) = text.parse::<f64>() {
        return Ok(Value::Float(x));
    }
    Err(format!("cannot parse value `{text}`"))
}
