#![allow(dead_code)]

use assert_cmd::Command;
use serde_json::Value;

pub fn qcthermo() -> Command {
    let mut c = Command::cargo_bin("qcthermo").unwrap();
    c.env_remove("QCTHERMO_FORMAT");
    c
}

pub fn run(args: &[&str]) -> std::process::Output {
    qcthermo().args(args).output().unwrap()
}

pub fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

pub fn csv_rows(args: &[&str]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut full = args.to_vec();
    full.extend(["--format", "csv"]);
    let out = run(&full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

pub fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

pub fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/output.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks `doc` against the subset of JSON Schema the output schema uses.
/// Returns the first violation as `path: reason`.
pub fn validate(root: &Value, schema: &Value, doc: &Value, path: &str) -> Result<(), String> {
    let fail = |why: String| Err(format!("{}: {why}", if path.is_empty() { "$" } else { path }));
    let Some(s) = schema.as_object() else {
        return Ok(());
    };
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let target = r
            .trim_start_matches("#/")
            .split('/')
            .fold(root, |node, key| &node[key]);
        validate(root, target, doc, path)?;
    }
    if let Some(t) = s.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => doc.is_object(),
            "array" => doc.is_array(),
            "string" => doc.is_string(),
            "boolean" => doc.is_boolean(),
            "integer" => doc.is_i64() || doc.is_u64(),
            "number" => doc.is_number(),
            _ => return fail(format!("unsupported type {t}")),
        };
        if !ok {
            return fail(format!("expected {t}, got {doc}"));
        }
    }
    if let Some(c) = s.get("const") {
        if doc != c {
            return fail(format!("expected {c}, got {doc}"));
        }
    }
    if let Some(e) = s.get("enum").and_then(Value::as_array) {
        if !e.contains(doc) {
            return fail(format!("{doc} not in {e:?}"));
        }
    }
    if let Some(x) = doc.as_f64() {
        if s.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
            return fail(format!("{x} below minimum"));
        }
        if s.get("maximum").and_then(Value::as_f64).is_some_and(|m| x > m) {
            return fail(format!("{x} above maximum"));
        }
        if s.get("exclusiveMinimum").and_then(Value::as_f64).is_some_and(|m| x <= m) {
            return fail(format!("{x} not above exclusive minimum"));
        }
    }
    if let Some(items) = doc.as_array() {
        if s.get("minItems").and_then(Value::as_u64).is_some_and(|m| (items.len() as u64) < m) {
            return fail("too few items".into());
        }
        if s.get("maxItems").and_then(Value::as_u64).is_some_and(|m| items.len() as u64 > m) {
            return fail("too many items".into());
        }
        if let Some(item_schema) = s.get("items") {
            for (i, item) in items.iter().enumerate() {
                validate(root, item_schema, item, &format!("{path}[{i}]"))?;
            }
        }
    }
    if let Some(obj) = doc.as_object() {
        if let Some(req) = s.get("required").and_then(Value::as_array) {
            for k in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(k) {
                    return fail(format!("missing {k}"));
                }
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => validate(root, sub, v, &format!("{path}.{k}"))?,
                None => match s.get("additionalProperties") {
                    Some(Value::Bool(false)) => return fail(format!("unexpected property {k}")),
                    Some(sub @ Value::Object(_)) => validate(root, sub, v, &format!("{path}.{k}"))?,
                    _ => {}
                },
            }
        }
    }
    if let Some(alts) = s.get("oneOf").and_then(Value::as_array) {
        let results: Vec<_> = alts.iter().map(|a| validate(root, a, doc, path)).collect();
        let passing = results.iter().filter(|r| r.is_ok()).count();
        if passing != 1 {
            let reasons: Vec<String> = results.into_iter().filter_map(Result::err).collect();
            return fail(format!("{passing} oneOf branches match; failures: {reasons:?}"));
        }
    }
    Ok(())
}
