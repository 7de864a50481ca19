mod common;

use common::{json, schema, validate};
use serde_json::json;

const INVOCATIONS: &[&[&str]] = &[
    &["eval", "--system", "oscillator", "--omega", "2,0.5"],
    &["eval", "--system", "well", "--edges", "1,2", "--h", "0.5"],
    &["eval", "--system", "well", "--edges", "1", "--h", "3"],
    &["sweep", "--system", "well", "--edges", "1", "--direction", "h_to_0"],
    &["sweep", "--system", "oscillator", "--omega", "1", "--direction", "N_to_inf"],
    &["sweep", "--system", "well", "--edges", "1", "--direction", "h_to_0", "--grid", "0.2,0.1,0.05,0.02,0.01,1e-300"],
    &["hear-drum", "--edges", "1,2,3"],
    &["gibbs", "--levels", "0,1,2"],
    &["gibbs", "--levels", "0,1000"],
    &["kw", "--potential", "harmonic", "--omega", "1,2"],
    &["kw", "--potential", "constant", "--edges", "1", "--value", "2"],
    &["kw", "--potential", "expr", "--expr", "x1^4 + 0.5*x2^2"],
];

#[test]
fn every_output_matches_the_schema() {
    let s = schema();
    for args in INVOCATIONS {
        let doc = json(args);
        if let Err(e) = validate(&s, &s, &doc, "") {
            panic!("{args:?}: {e}");
        }
    }
}

#[test]
fn schema_rejects_broken_documents() {
    let s = schema();
    let mut doc = json(&["gibbs", "--levels", "0,1,2"]);
    assert!(validate(&s, &s, &doc, "").is_ok());

    doc["total_variation"] = json!(null);
    assert!(validate(&s, &s, &doc, "").is_err());

    let mut doc = json(&["eval", "--system", "oscillator", "--omega", "1"]);
    doc["report"]["signs"]["d_f"] = json!(2);
    assert!(validate(&s, &s, &doc, "").is_err());

    let mut doc = json(&["kw", "--potential", "harmonic", "--omega", "1"]);
    doc["extra"] = json!(1);
    assert!(validate(&s, &s, &doc, "").is_err());

    let mut doc = json(&["hear-drum", "--edges", "1,2"]);
    doc["schema_version"] = json!(2);
    assert!(validate(&s, &s, &doc, "").is_err());
}
