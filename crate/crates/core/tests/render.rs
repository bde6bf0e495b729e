mod common;

use fm_core::document::Document;
use fm_core::render::{overlay, to_dot, RenderOptions};
use proptest::prelude::*;

fn fidelity(doc: &Document) {
    let opts = RenderOptions::default();
    let dot = to_dot(&doc.model, &opts);
    assert_eq!(dot, to_dot(&doc.model, &opts));
    let c = common::check_dot(&dot).unwrap_or_else(|e| panic!("{e}\n{dot}"));
    let m = &doc.model;
    assert_eq!(c.clusters, m.spheres.len() + m.machines.len());
    assert_eq!(c.solid_edges, m.flows.len());
    assert_eq!(c.dashed_edges, m.triggers.len());
    assert_eq!(c.dotted_edges, m.storages.len());
    assert_eq!(c.nodes.len(), m.all_stages().len() + m.storages.len());
}

#[test]
fn corpus_renders_faithfully() {
    for (_, text) in common::corpus_models() {
        fidelity(&Document::parse(&text).unwrap());
    }
}

#[test]
fn time_constructor_edges_are_dashed() {
    let doc = Document::parse(&common::corpus("time.fm")).unwrap();
    let dot = to_dot(&doc.model, &RenderOptions::default());
    let c = common::check_dot(&dot).unwrap();
    assert_eq!(c.clusters, 1 + 4);
    let ctor = dot.lines().filter(|l| l.contains("\"Time.Time.create\" ->") && l.contains("style=dashed")).count();
    assert_eq!(ctor, 3);
}

#[test]
fn print_overlay_adds_one_cluster() {
    let doc = Document::parse(&common::corpus("time.fm")).unwrap();
    let plain = RenderOptions::default();
    let base = common::check_dot(&to_dot(&doc.model, &plain)).unwrap();
    let opts = RenderOptions { overlay: vec!["e3".into(), "e4".into()], ..plain.clone() };
    let dot = overlay(&doc.model, &doc.events, &opts).unwrap();
    let c = common::check_dot(&dot).unwrap();
    assert_eq!(c.clusters, base.clusters + 1);
    let cluster = &dot[dot.find("cluster_event:").unwrap()..];
    for m in ["hour", "minute", "second"] {
        for s in ["process", "release", "transfer"] {
            assert!(cluster.contains(&format!("\"Time.{m}.{s}\";")), "{m}.{s}");
        }
    }
    assert!(dot.contains("[e3, e4]"), "shared nodes list both events");
    assert_eq!(overlay(&doc.model, &doc.events, &plain).unwrap(), to_dot(&doc.model, &plain));
}

#[test]
fn author_cluster_nests_inside_book() {
    let doc = Document::parse(&common::corpus("book.fm")).unwrap();
    let dot = to_dot(&doc.model, &RenderOptions::default());
    let book = dot.find("\"cluster_sphere:Book\"").unwrap();
    let author = dot.find("\"cluster_sphere:Book.Author\"").unwrap();
    let indent = |at: usize| at - dot[..at].rfind('\n').unwrap() - 1;
    assert!(author > book);
    assert!(indent(author) > indent(book));
}

#[test]
fn hiding_storage_drops_its_nodes() {
    let doc = Document::parse(&common::corpus("atm.fm")).unwrap();
    let opts = RenderOptions { show_storage: false, rankdir: "TB".into(), ..RenderOptions::default() };
    let dot = to_dot(&doc.model, &opts);
    let c = common::check_dot(&dot).unwrap();
    assert_eq!(c.dotted_edges, 0);
    assert_eq!(c.nodes.len(), doc.model.all_stages().len());
    assert!(dot.contains("rankdir=\"TB\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_models_render_faithfully(seed in any::<u64>()) {
        fidelity(&Document::parse(&common::random_model(seed, 5)).unwrap());
    }
}
