//! Tensor and vector files.
//!
//! Text format: a header line `order <m> dim <n>` followed by one line per
//! nonzero, `i1 i2 .. im value`, with 1-based indices. Blank lines and lines
//! starting with `#` are ignored.
//!
//! JSON format: `{"order": m, "dim": n, "entries": [[i1, .., im, value], ..]}`,
//! also 1-based.
//!
//! Values are written in shortest round-trip form, so a write/read cycle is
//! bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::error::{Error, Result};
use crate::tensor::{ProbVector, StochasticTensor, DENSE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorFormat {
    Text,
    Json,
}

impl TensorFormat {
    /// `.json` selects JSON, anything else text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => TensorFormat::Json,
            _ => TensorFormat::Text,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    order: usize,
    dim: usize,
    entries: Vec<Vec<Value>>,
}

fn one_based(indices: &[usize]) -> impl Iterator<Item = usize> + '_ {
    indices.iter().map(|i| i + 1)
}

/// Prefer dense storage when it fits.
fn settle_storage(t: StochasticTensor) -> Result<StochasticTensor> {
    match t.dim().checked_pow(t.order() as u32) {
        Some(len) if len <= DENSE_LIMIT => t.to_dense(),
        _ => Ok(t),
    }
}

fn to_zero_based(raw: Vec<usize>, dim: usize, line: usize) -> Result<Vec<usize>> {
    if raw.iter().any(|&i| i == 0 || i > dim) {
        return Err(Error::Parse {
            line,
            msg: format!("index {raw:?} outside 1..={dim}"),
        });
    }
    Ok(raw.into_iter().map(|i| i - 1).collect())
}

pub fn parse_text(src: &str) -> Result<StochasticTensor> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header `order m dim n`".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (order, dim) = match fields.as_slice() {
        ["order", m, "dim", n] => {
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: hline,
                    msg: format!("bad header value '{s}': {e}"),
                })
            };
            (parse(m)?, parse(n)?)
        }
        _ => {
            return Err(Error::Parse {
                line: hline,
                msg: format!("expected `order m dim n`, got '{header}'"),
            })
        }
    };
    let mut entries = Vec::new();
    for (line, text) in lines {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != order + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, got {}", order + 1, fields.len()),
            });
        }
        let idx = fields[..order]
            .iter()
            .map(|s| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad index '{s}': {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let value: f64 = fields[order].parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad value '{}': {e}", fields[order]),
        })?;
        entries.push((to_zero_based(idx, dim, line)?, value));
    }
    settle_storage(StochasticTensor::from_entries(order, dim, entries)?)
}

pub fn to_text(t: &StochasticTensor) -> String {
    let mut out = format!("order {} dim {}\n", t.order(), t.dim());
    t.for_each_entry(|idx, v| {
        for i in one_based(idx) {
            out.push_str(&i.to_string());
            out.push(' ');
        }
        out.push_str(&format!("{v:?}\n"));
    });
    out
}

pub fn parse_json(src: &str) -> Result<StochasticTensor> {
    let doc: TensorJson = serde_json::from_str(src)?;
    let mut entries = Vec::with_capacity(doc.entries.len());
    for (k, row) in doc.entries.into_iter().enumerate() {
        let bad = |msg: String| Error::Parse { line: k + 1, msg };
        if row.len() != doc.order + 1 {
            return Err(bad(format!(
                "entry has {} fields, expected {}",
                row.len(),
                doc.order + 1
            )));
        }
        let idx = row[..doc.order]
            .iter()
            .map(|v| {
                v.as_u64()
                    .map(|i| i as usize)
                    .ok_or_else(|| bad(format!("bad index {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let value = row[doc.order]
            .as_f64()
            .ok_or_else(|| bad(format!("bad value {}", row[doc.order])))?;
        entries.push((to_zero_based(idx, doc.dim, k + 1)?, value));
    }
    settle_storage(StochasticTensor::from_entries(doc.order, doc.dim, entries)?)
}

pub fn to_json(t: &StochasticTensor) -> Result<String> {
    let mut entries = Vec::with_capacity(t.nnz());
    let mut bad_value = None;
    t.for_each_entry(|idx, v| {
        let mut row: Vec<Value> = one_based(idx).map(|i| Value::from(i as u64)).collect();
        match Number::from_f64(v) {
            Some(n) => row.push(Value::Number(n)),
            None => bad_value = Some(v),
        }
        entries.push(row);
    });
    if let Some(v) = bad_value {
        return Err(Error::Structural(format!("cannot encode {v} in JSON")));
    }
    Ok(serde_json::to_string(&TensorJson {
        order: t.order(),
        dim: t.dim(),
        entries,
    })?)
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<StochasticTensor> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match TensorFormat::from_path(path) {
        TensorFormat::Json => parse_json(&src),
        TensorFormat::Text => parse_text(&src),
    }
}

pub fn save_tensor(t: &StochasticTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let body = match TensorFormat::from_path(path) {
        TensorFormat::Json => to_json(t)?,
        TensorFormat::Text => to_text(t),
    };
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Whitespace-separated nonnegative values, rescaled to unit sum.
pub fn parse_vector(src: &str) -> Result<ProbVector> {
    let mut values = Vec::new();
    for (k, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|e| Error::Parse {
                line: k + 1,
                msg: format!("bad value '{tok}': {e}"),
            })?;
            values.push(v);
        }
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NotProbVector("negative or non-finite component".into()));
    }
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::NoPositiveMass);
    }
    ProbVector::new(values.into_iter().map(|v| v / sum).collect())
        .map_err(|_| Error::NotProbVector("cannot normalize".into()))
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<ProbVector> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vector(&src)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# two-state chain\norder 2 dim 2\n1 1 0.9\n2 1 0.1\n\n1 2 0.3\n2 2 0.7\n";

    #[test]
    fn parses_text() {
        let t = parse_text(SAMPLE).unwrap();
        assert_eq!((t.order(), t.dim()), (2, 2));
        assert_eq!(t.get(&[1, 0]), 0.1);
        assert_eq!(t.get(&[0, 1]), 0.3);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn text_errors() {
        assert!(matches!(parse_text(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_text("order 2\n"), Err(Error::Parse { .. })));
        let err = parse_text("order 2 dim 2\n1 3 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_text("order 2 dim 2\n0 1 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse_text("order 2 dim 2\n1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse_text("order 2 dim 2\n1 1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn json_matches_text() {
        let t = parse_text(SAMPLE).unwrap();
        let json = to_json(&t).unwrap();
        assert!(json.contains("\"entries\":[[1,1,0.9]"));
        assert_eq!(parse_json(&json).unwrap(), t);
        let src = r#"{"order":2,"dim":2,"entries":[[1,1,1.0],[2,2,1.0]]}"#;
        assert_eq!(parse_json(src).unwrap().get(&[1, 1]), 1.0);
        assert!(parse_json(r#"{"order":2,"dim":2,"entries":[[1,1]]}"#).is_err());
    }

    #[test]
    fn vectors() {
        let v = parse_vector("1 1\n2\n").unwrap();
        assert_eq!(v.as_slice(), &[0.25, 0.25, 0.5]);
        assert!(parse_vector("0 0").is_err());
        assert!(parse_vector("1 -1").is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = parse_text(SAMPLE).unwrap();
        for name in ["t.txt", "t.json"] {
            let p = dir.path().join(name);
            save_tensor(&t, &p).unwrap();
            assert_eq!(load_tensor(&p).unwrap(), t);
        }
        let missing = dir.path().join("missing.txt");
        assert!(matches!(load_tensor(&missing), Err(Error::Io { .. })));
    }
}
