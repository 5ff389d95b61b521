//! Report emission: JSON with values rounded to 12 significant digits, or a
//! plain key/value table.

use std::io::Write;

use serde_json::{Number, Value};
use wotlab::verify::VerifyReport;
use wotlab::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Table,
}

fn round(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Rounds every non-integer number in place.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round).and_then(Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(m) => m.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            out.push((prefix.to_string(), format!("[{}]", items.join(", "))));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn table(v: &Value) -> String {
    if let Some(report) = v.get("checks").and_then(|_| serde_json::from_value::<VerifyReport>(v.clone()).ok()) {
        return verify_table(&report);
    }
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, x)| format!("{k:<width$}  {x}\n")).collect()
}

fn verify_table(r: &VerifyReport) -> String {
    let width = r.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:>7}  {:>7}  {:>10}  {:>10}\n", "check", "cases", "passed", "worst", "tolerance");
    for c in &r.checks {
        s += &format!("{:<width$}  {:>7}  {:>7}  {:>10.3e}  {:>10.1e}\n", c.name, c.cases, c.passed, c.worst, c.tolerance);
        for f in &c.failures {
            s += &format!("  case {} (seed {}): {}\n", f.index, f.seed, f.detail);
        }
    }
    s += &format!("{} of {} cases passed (seed {})\n", r.passed, r.total, r.seed);
    s
}

/// Serializes `report` with the schema tag and writes it to `out` or stdout.
pub fn emit<T: serde::Serialize>(command: &str, report: &T, format: Format, out: Option<&str>) -> Result<()> {
    let mut v = serde_json::to_value(report)?;
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), Value::String(wotlab::verify::SCHEMA.into()));
        m.insert("command".into(), Value::String(command.into()));
    }
    round_numbers(&mut v);
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&v)? + "\n",
        Format::Table => table(&v),
    };
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        let mut v = serde_json::json!({"a": 0.1 + 0.2, "b": [1, 2.000000000000001], "c": "x"});
        round_numbers(&mut v);
        assert_eq!(v["a"].as_f64().unwrap(), 0.3);
        assert_eq!(v["b"][0].as_u64(), Some(1));
        assert_eq!(v["b"][1].as_f64().unwrap(), 2.0);
    }
}
