use std::io::Read;

use clap::Args;
use num_bigint::BigInt;
use psidir::lattice::{Dimensions, TargetMatrix};
use psidir::measure::IntervalUnion;
use psidir::psi::PsiFunction;
use psidir::ratcf::{cf_expand, CFState};
use psidir::{parse_rational, Rational};
use serde_json::Value;

/// Rational inputs are expanded completely; this only guards against absurd sizes.
const RATIONAL_DEPTH_CAP: usize = 1 << 20;

/// Ways to name the real `x`: exactly one of the three sources must be given.
#[derive(Args, Debug, Clone)]
pub struct XArgs {
    /// Exact rational in [0, 1), e.g. 5/8.
    #[arg(long)]
    pub x_rational: Option<String>,
    /// Comma-separated continued-fraction entries a_1,a_2,...
    #[arg(long)]
    pub x_entries: Option<String>,
    /// With --x-entries: the list is the complete expansion of a rational.
    #[arg(long)]
    pub terminal: bool,
    /// JSON file (or - for stdin) holding `entries`, e.g. the output of construct.
    #[arg(long)]
    pub x_from_json: Option<String>,
}

impl XArgs {
    pub fn describe(&self) -> Value {
        if let Some(x) = &self.x_rational {
            serde_json::json!({"x_rational": x})
        } else if let Some(e) = &self.x_entries {
            serde_json::json!({"x_entries": e, "terminal": self.terminal})
        } else {
            serde_json::json!({"x_from_json": self.x_from_json})
        }
    }

    pub fn resolve(&self) -> Result<CFState, String> {
        let given = [
            self.x_rational.is_some(),
            self.x_entries.is_some(),
            self.x_from_json.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err("give exactly one of --x-rational, --x-entries, --x-from-json".into());
        }
        if let Some(x) = &self.x_rational {
            let x = parse_rational(x)?;
            return cf_expand(&x, RATIONAL_DEPTH_CAP).map_err(|e| e.to_string());
        }
        if let Some(e) = &self.x_entries {
            let entries = parse_bigints(e)?;
            return CFState::from_entries(entries, self.terminal).map_err(|e| e.to_string());
        }
        let path = self.x_from_json.as_deref().unwrap_or("-");
        let text = if path == "-" {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| format!("reading stdin: {e}"))?;
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| format!("reading {path}: {e}"))?
        };
        cf_from_json(&text)
    }
}

/// Accepts a bare `{entries, terminal}` object or a report whose `result` has them.
fn cf_from_json(text: &str) -> Result<CFState, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let body = match doc.get("result") {
        Some(r) if r.get("entries").is_some() => r,
        _ => &doc,
    };
    let entries = body
        .get("entries")
        .and_then(Value::as_array)
        .ok_or("JSON input has no `entries` array")?;
    let entries = entries
        .iter()
        .map(|v| match v {
            Value::String(s) => s.parse::<BigInt>().map_err(|_| format!("bad entry '{s}'")),
            Value::Number(n) => n
                .as_u64()
                .map(BigInt::from)
                .ok_or_else(|| format!("bad entry {n}")),
            other => Err(format!("bad entry {other}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let terminal = body
        .get("terminal")
        .and_then(Value::as_bool)
        .unwrap_or(false);
    CFState::from_entries(entries, terminal).map_err(|e| e.to_string())
}

pub fn parse_psi(s: &str) -> Result<PsiFunction, String> {
    s.parse::<PsiFunction>().map_err(|e| e.to_string())
}

pub fn parse_bigints(s: &str) -> Result<Vec<BigInt>, String> {
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<BigInt>()
                .map_err(|_| format!("not an integer: '{w}'"))
        })
        .collect()
}

pub fn parse_u64s(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<u64>()
                .map_err(|_| format!("not a positive integer: '{w}'"))
        })
        .collect()
}

pub fn parse_rationals(s: &str) -> Result<Vec<Rational>, String> {
    s.split(',').map(parse_rational).collect()
}

/// `a:b` with `a <= b`.
pub fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("window must look like 2:10, got '{s}'"))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("bad window start '{a}'"))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| format!("bad window end '{b}'"))?;
    if a > b {
        return Err(format!("window start {a} exceeds end {b}"));
    }
    Ok((a, b))
}

pub fn parse_rational_pair(s: &str) -> Result<(Rational, Rational), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    Ok((parse_rational(a)?, parse_rational(b)?))
}

/// `a:b,c:d,...` as a union of open subintervals of (0, 1).
pub fn parse_union(s: &str) -> Result<IntervalUnion, String> {
    let parts = s
        .split(',')
        .map(parse_rational_pair)
        .collect::<Result<Vec<_>, _>>()?;
    IntervalUnion::from_unsorted(parts).map_err(|e| e.to_string())
}

/// Row-major `m x n` matrix.
pub fn parse_matrix(s: &str, m: usize, n: usize) -> Result<TargetMatrix, String> {
    let dims = Dimensions::new(m, n).map_err(|e| e.to_string())?;
    TargetMatrix::new(dims, parse_rationals(s)?).map_err(|e| e.to_string())
}
