//! Line-oriented `key = value` experiment configs.
//!
//! `#` starts a comment, lists are comma-separated, keys are validated
//! against a per-suite schema and every diagnostic carries the line number.

use std::collections::BTreeMap;
use std::fmt;

/// Experiment families the runner knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Dilate,
    Zeno,
    Stokes,
    Gauss,
    Rlc,
    Cost,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Dilate => "dilate",
            Suite::Zeno => "zeno",
            Suite::Stokes => "stokes",
            Suite::Gauss => "gauss",
            Suite::Rlc => "rlc",
            Suite::Cost => "cost",
        }
    }

    fn parse(s: &str) -> Option<Suite> {
        match s {
            "dilate" => Some(Suite::Dilate),
            "zeno" => Some(Suite::Zeno),
            "stokes" => Some(Suite::Stokes),
            "gauss" => Some(Suite::Gauss),
            "rlc" => Some(Suite::Rlc),
            "cost" => Some(Suite::Cost),
            _ => None,
        }
    }
}

/// Typed parameter values.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Count(u64),
    Scalar(f64),
    CountList(Vec<u64>),
    ScalarList(Vec<f64>),
}

/// Schema entry kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Count,
    Scalar,
    CountList,
    ScalarList,
}

fn schema(suite: Suite) -> &'static [(&'static str, Kind)] {
    match suite {
        Suite::Dilate => &[
            ("n", Kind::Count),
            ("m", Kind::Count),
            ("ancilla", Kind::Count),
            ("jstar", Kind::Count),
            ("t", Kind::ScalarList),
        ],
        Suite::Zeno => &[
            ("n", Kind::Count),
            ("m", Kind::Count),
            ("ancilla", Kind::Count),
            ("jstar", Kind::Count),
            ("t", Kind::Scalar),
            ("steps", Kind::CountList),
        ],
        Suite::Stokes => &[
            ("n", Kind::CountList),
            ("t", Kind::Scalar),
            ("ancilla", Kind::Count),
            ("jstar", Kind::Count),
        ],
        Suite::Gauss => &[
            ("n", Kind::Count),
            ("t", Kind::Scalar),
            ("mq", Kind::CountList),
        ],
        Suite::Rlc => &[
            ("N", Kind::CountList),
            ("t", Kind::Scalar),
            ("ancilla", Kind::Count),
            ("jstar", Kind::Count),
        ],
        Suite::Cost => &[
            ("h", Kind::ScalarList),
            ("t", Kind::ScalarList),
            ("eps", Kind::Scalar),
            ("d", Kind::Count),
            ("chi", Kind::Scalar),
        ],
    }
}

/// Parsed experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    pub fn count(&self, key: &str, default: u64) -> u64 {
        match self.params.get(key) {
            Some(Value::Count(v)) => *v,
            _ => default,
        }
    }

    pub fn scalar(&self, key: &str, default: f64) -> f64 {
        match self.params.get(key) {
            Some(Value::Scalar(v)) => *v,
            _ => default,
        }
    }

    pub fn count_list(&self, key: &str, default: &[u64]) -> Vec<u64> {
        match self.params.get(key) {
            Some(Value::CountList(v)) => v.clone(),
            _ => default.to_vec(),
        }
    }

    pub fn scalar_list(&self, key: &str, default: &[f64]) -> Vec<f64> {
        match self.params.get(key) {
            Some(Value::ScalarList(v)) => v.clone(),
            _ => default.to_vec(),
        }
    }

    /// Canonical `key=value` rendering used for the params hash.
    pub fn canonical_params(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.params {
            out.push_str(k);
            out.push('=');
            match v {
                Value::Count(c) => out.push_str(&c.to_string()),
                Value::Scalar(s) => out.push_str(&format!("{s:e}")),
                Value::CountList(cs) => {
                    let parts: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                    out.push_str(&parts.join(","));
                }
                Value::ScalarList(ss) => {
                    let parts: Vec<String> = ss.iter().map(|s| format!("{s:e}")).collect();
                    out.push_str(&parts.join(","));
                }
            }
            out.push(';');
        }
        out
    }
}

/// Parse failure with its source line.
#[derive(Debug, Clone, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Parse a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    // strip comments, keep (line, key, value)
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some(eq) = stripped.find('=') else {
            return Err(err(
                line_no,
                format!("expected `key = value`, got '{stripped}'"),
            ));
        };
        let key = stripped[..eq].trim().to_string();
        let value = stripped[eq + 1..].trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(err(line_no, "empty key or value"));
        }
        entries.push((line_no, key, value));
    }

    // the suite determines the schema, so find it first
    let mut suite: Option<(usize, Suite)> = None;
    for (line, key, value) in &entries {
        if key == "suite" {
            if suite.is_some() {
                return Err(err(*line, "duplicate suite key"));
            }
            let s = Suite::parse(value)
                .ok_or_else(|| err(*line, format!("unknown suite '{value}'")))?;
            suite = Some((*line, s));
        }
    }
    let Some((_, suite)) = suite else {
        return Err(err(
            text.lines().count().max(1),
            "suite required (suite = dilate|zeno|stokes|gauss|rlc|cost)",
        ));
    };

    let table = schema(suite);
    let mut params = BTreeMap::new();
    let mut seed = 42u64;
    let mut output_path = None;
    for (line, key, value) in entries {
        match key.as_str() {
            "suite" => {}
            "seed" => {
                seed = value
                    .parse::<u64>()
                    .map_err(|_| err(line, format!("expected integer seed, got '{value}'")))?;
            }
            "out" => output_path = Some(value),
            other => {
                let Some((_, kind)) = table.iter().find(|(name, _)| *name == other) else {
                    return Err(err(
                        line,
                        format!("unknown key '{other}' for suite '{}'", suite.name()),
                    ));
                };
                let parsed = parse_value(&value, *kind)
                    .map_err(|msg| err(line, format!("key '{other}': {msg}")))?;
                if params.insert(key.clone(), parsed).is_some() {
                    return Err(err(line, format!("duplicate key '{other}'")));
                }
            }
        }
    }
    Ok(ExperimentConfig {
        suite,
        params,
        seed,
        output_path,
    })
}

fn parse_value(text: &str, kind: Kind) -> Result<Value, String> {
    let items: Vec<&str> = text.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err("empty list element".into());
    }
    match kind {
        Kind::Count => {
            if items.len() != 1 {
                return Err("expected a single count, got a list".into());
            }
            items[0]
                .parse::<u64>()
                .map(Value::Count)
                .map_err(|_| format!("expected count, got '{}'", items[0]))
        }
        Kind::Scalar => {
            if items.len() != 1 {
                return Err("expected a single scalar, got a list".into());
            }
            parse_f64(items[0]).map(Value::Scalar)
        }
        Kind::CountList => items
            .iter()
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| format!("expected count, got '{s}'"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Value::CountList),
        Kind::ScalarList => items
            .iter()
            .map(|s| parse_f64(s))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::ScalarList),
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected scalar, got '{s}'"))?;
    if !v.is_finite() {
        return Err(format!("scalar must be finite, got '{s}'"));
    }
    Ok(v)
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
