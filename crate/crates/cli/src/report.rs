use num_bigint::BigInt;
use psidir::classify::{ClassificationReport, IndexVerdict, Summary};
use psidir::ratcf::CFState;
use psidir::{RatInterval, Rational};
use serde_json::{json, Map, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn rat(x: &Rational) -> Value {
    Value::String(x.to_string())
}

pub fn big(x: &BigInt) -> Value {
    Value::String(x.to_string())
}

pub fn rats(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(rat).collect())
}

/// `{"enclosure": [lo, hi], "approx_decimal": "~..."}`; the decimal is for reading only.
pub fn enc(x: &RatInterval) -> Value {
    json!({
        "enclosure": [rat(x.lo()), rat(x.hi())],
        "approx_decimal": format!("~{}", x.approx()),
    })
}

pub fn opt_rat(x: &Option<Rational>) -> Value {
    x.as_ref().map_or(Value::Null, rat)
}

pub fn summary(s: &Summary) -> Value {
    match s {
        Summary::AllSatisfiedFrom(n) => json!({"kind": "AllSatisfiedFrom", "index": n}),
        Summary::ViolationsAt(v) => json!({"kind": "ViolationsAt", "indices": v}),
        Summary::Inconclusive => json!({"kind": "Inconclusive"}),
    }
}

pub fn verdict(v: &IndexVerdict) -> Value {
    json!({
        "n": v.n,
        "status": v.status.to_string(),
        "lhs": enc(&v.lhs),
        "rhs": enc(&v.rhs),
        "bits": v.bits,
    })
}

pub fn classification(r: &ClassificationReport) -> Value {
    json!({
        "window": [r.window.0, r.window.1],
        "terminal_index": r.terminal_index,
        "summary": summary(&r.summary),
        "verdicts": r.verdicts.iter().map(verdict).collect::<Vec<_>>(),
    })
}

pub fn cf_state(cf: &CFState) -> Value {
    let convergents: Vec<Value> = (0..=cf.depth())
        .map(|n| json!({"n": n, "p": big(cf.p(n)), "q": big(cf.q(n))}))
        .collect();
    json!({
        "entries": cf.entries().iter().map(big).collect::<Vec<_>>(),
        "terminal": cf.is_terminal(),
        "value": cf.value().as_ref().map_or(Value::Null, rat),
        "cylinder": enc(cf.cylinder()),
        "convergents": convergents,
    })
}

/// The common envelope every report carries so that a run can be replayed.
pub struct Envelope {
    pub command: &'static str,
    pub parameters: Map<String, Value>,
    pub seed: Option<u64>,
    pub precision_bits: u32,
}

impl Envelope {
    pub fn new(command: &'static str, precision_bits: u32) -> Self {
        Envelope {
            command,
            parameters: Map::new(),
            seed: None,
            precision_bits,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn render(&self, result: Value) -> Value {
        let mut doc = Map::new();
        doc.insert("tool_version".into(), TOOL_VERSION.into());
        doc.insert("command".into(), self.command.into());
        doc.insert("parameters".into(), Value::Object(self.parameters.clone()));
        if let Some(seed) = self.seed {
            doc.insert("seed".into(), seed.into());
        }
        doc.insert("precision_bits".into(), self.precision_bits.into());
        doc.insert("result".into(), result);
        Value::Object(doc)
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for row in rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}
