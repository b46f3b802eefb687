use std::fs;
use std::io::Write;

use anyhow::{Context, Result};
use serde_json::Value;

use crate::args::{Format, OutputArgs};

/// What a subcommand produced.
pub enum Output {
    /// Rendered as pretty JSON, or as one CSV row of its scalar fields.
    Record(Value),
    /// Already laid out as CSV rows with a header.
    Rows(Vec<String>, Vec<Vec<String>>),
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner().context("flushing CSV")?)
}

pub fn render(output: &Output, format: Format) -> Result<Vec<u8>> {
    match (output, format) {
        (Output::Record(v), Format::Json) => {
            let mut s = serde_json::to_vec_pretty(v)?;
            s.push(b'\n');
            Ok(s)
        }
        (Output::Record(v), Format::Csv) => {
            let obj = v.as_object().context("result is not an object")?;
            let scalars: Vec<(&String, &Value)> = obj
                .iter()
                .filter(|(_, v)| !v.is_object() && !v.is_array())
                .collect();
            let header = scalars.iter().map(|(k, _)| k.to_string()).collect::<Vec<_>>();
            let row = scalars.iter().map(|(_, v)| cell(v)).collect();
            csv_bytes(&header, &[row])
        }
        (Output::Rows(header, rows), Format::Csv) => csv_bytes(header, rows),
        (Output::Rows(header, rows), Format::Json) => {
            let records: Vec<Value> = rows
                .iter()
                .map(|r| {
                    Value::Object(
                        header
                            .iter()
                            .zip(r)
                            .map(|(k, v)| {
                                let parsed = v
                                    .parse::<f64>()
                                    .ok()
                                    .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number))
                                    .unwrap_or_else(|| Value::String(v.clone()));
                                (k.clone(), if v.is_empty() { Value::Null } else { parsed })
                            })
                            .collect(),
                    )
                })
                .collect();
            render(&Output::Record(Value::Array(records)), Format::Json)
        }
    }
}

pub fn emit(output: &Output, args: &OutputArgs) -> Result<()> {
    let bytes = render(output, args.format)?;
    match &args.output {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            Ok(out.flush()?)
        }
    }
}
