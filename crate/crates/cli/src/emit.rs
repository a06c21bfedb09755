//! Rendering of command results as JSON or CSV.

use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().cloned()).collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Json(Value),
    Table(Table),
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `a.b.0`-style paths to every scalar of a JSON value.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        scalar => out.push((prefix.to_string(), cell(scalar))),
    }
}

fn csv_text(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render(out: &Output, format: Format) -> Result<String, CliError> {
    match (out, format) {
        (Output::Json(v), Format::Json) => Ok(pretty(v)),
        (Output::Table(t), Format::Json) => Ok(pretty(&t.to_json())),
        (Output::Table(t), Format::Csv) => csv_text(&t.columns, t.rows.iter().map(|r| r.iter().map(cell).collect())),
        (Output::Json(v), Format::Csv) => {
            let mut pairs = Vec::new();
            flatten("", v, &mut pairs);
            csv_text(&["key".into(), "value".into()], pairs.into_iter().map(|(k, v)| vec![k, v]))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tables_and_values() {
        let mut t = Table::new(&["score", "note"]);
        t.push(vec![json!(8.5), json!("a,b")]);
        t.push(vec![json!(7.66), Value::Null]);
        let csv = render(&Output::Table(t.clone()), Format::Csv).unwrap();
        assert_eq!(csv, "score,note\n8.5,\"a,b\"\n7.66,\n");
        let js: Value = serde_json::from_str(&render(&Output::Table(t), Format::Json).unwrap()).unwrap();
        assert_eq!(js[1]["score"], json!(7.66));

        let v = json!({"value": 0.5, "certificate": {"status": "Optimal", "res": [1e-9, 2e-9]}});
        let csv = render(&Output::Json(v), Format::Csv).unwrap();
        assert_eq!(
            csv,
            "key,value\ncertificate.res.0,1e-9\ncertificate.res.1,2e-9\ncertificate.status,Optimal\nvalue,0.5\n"
        );
    }
}
