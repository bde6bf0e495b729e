mod common;

use std::collections::BTreeMap;

use fm_core::classmap::import_classes;
use fm_core::document::Document;
use fm_core::sim::{SimConfig, Simulator};
use fm_core::value::Value;

fn diagrams() -> Vec<Vec<String>> {
    vec![
        vec![common::corpus("Time.cls")],
        vec![common::corpus("Book.cls")],
        vec![common::corpus("car.cls"), common::corpus("electricCar.cls")],
    ]
}

#[test]
fn every_imported_method_runs_after_its_constructor() {
    for texts in diagrams() {
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let doc = import_classes(&refs).unwrap().doc;
        assert!(!doc.validate().has_errors());
        for m in &doc.methods {
            let args: BTreeMap<String, Value> = m.params.iter().map(|p| (p.clone(), Value::Int(3))).collect();
            let mut sim = Simulator::new(&doc, SimConfig::default());
            // Constructors are the `_init` events; run them all first.
            for e in doc.events.iter().filter(|e| e.name.ends_with("_init")) {
                sim.run_event(e.id).unwrap();
            }
            sim.run_method(m, &args).unwrap_or_else(|e| panic!("{}: {e}", m.name));
            assert!(!sim.trace().is_empty(), "{} did nothing", m.name);
        }
    }
}

#[test]
fn imported_models_survive_a_print_and_reparse() {
    for texts in diagrams() {
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let doc = import_classes(&refs).unwrap().doc;
        let again = Document::parse(&doc.to_dsl()).unwrap();
        assert_eq!(again.to_dsl(), doc.to_dsl());
        assert_eq!(again.methods.len(), doc.methods.len());
    }
}
