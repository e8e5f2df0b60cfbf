//! Plain-text rendering of JSON reports: scalars as aligned `key  value`
//! rows, arrays of objects as column tables, long numeric arrays summarized.

use serde_json::{Map, Value};

const INLINE_ARRAY: usize = 8;

pub fn table(value: &Value) -> String {
    let mut out = String::new();
    match value {
        Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
            out.push_str(&columns(items));
        }
        Value::Object(map) => object(map, &mut out),
        other => {
            out.push_str(&scalar(other));
            out.push('\n');
        }
    }
    out
}

fn object(map: &Map<String, Value>, out: &mut String) {
    let mut rows = Vec::new();
    let mut sections = Vec::new();
    flatten("", map, &mut rows, &mut sections);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        out.push_str(&format!("{k:<width$}  {v}\n"));
    }
    for (name, items) in sections {
        out.push_str(&format!("\n{name}\n"));
        out.push_str(&columns(items));
    }
}

fn flatten<'a>(
    prefix: &str,
    map: &'a Map<String, Value>,
    rows: &mut Vec<(String, String)>,
    sections: &mut Vec<(String, &'a [Value])>,
) {
    for (k, v) in map {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Object(inner) => flatten(&key, inner, rows, sections),
            Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object) => {
                sections.push((key, items));
            }
            Value::Array(items) if items.iter().all(|x| matches!(x, Value::String(_))) => {
                for (i, item) in items.iter().enumerate() {
                    rows.push((format!("{key}[{i}]"), scalar(item)));
                }
            }
            other => rows.push((key, scalar(other))),
        }
    }
}

fn columns(items: &[Value]) -> String {
    let mut header: Vec<String> = Vec::new();
    for item in items {
        for k in item.as_object().expect("objects only").keys() {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let cells: Vec<Vec<String>> = items
        .iter()
        .map(|item| {
            header
                .iter()
                .map(|k| item.get(k).map(scalar).unwrap_or_default())
                .collect()
        })
        .collect();
    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(c, h)| {
            cells
                .iter()
                .map(|row| row[c].len())
                .chain([h.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s:<w$}"))
            .collect();
        format!("{}\n", parts.join("  ").trim_end())
    };
    let mut out = line(&header);
    for row in &cells {
        out.push_str(&line(row));
    }
    out
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) if items.len() <= INLINE_ARRAY => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            format!("[{}]", parts.join(", "))
        }
        Value::Array(items) => {
            let nums: Vec<f64> = items.iter().filter_map(Value::as_f64).collect();
            if nums.len() == items.len() {
                let min = nums.iter().copied().fold(f64::INFINITY, f64::min);
                let max = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                format!("{} values in [{min}, {max}]", nums.len())
            } else {
                format!("{} items", items.len())
            }
        }
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn aligned_rows_and_sections() {
        let v = json!({"lower": 3.0, "upper": 7.0, "notes": ["a"], "rows": [{"size": 10, "value": 1.5}, {"size": 100, "value": 2.0}]});
        let t = table(&v);
        assert_eq!(t, "lower     3.0\nupper     7.0\nnotes[0]  a\n\nrows\nsize  value\n10    1.5\n100   2.0\n");
    }

    #[test]
    fn long_arrays_are_summarized() {
        let v = json!({"rg": (0..20).map(f64::from).collect::<Vec<_>>()});
        assert_eq!(table(&v), "rg  20 values in [0, 19]\n");
    }
}
