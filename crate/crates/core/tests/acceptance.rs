//! The acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use fm_core::classmap::import_classes;
use fm_core::diag::Code;
use fm_core::document::Document;
use fm_core::dsl::{parse_model, print_model};
use fm_core::events::{admissible, enumerate_sequences, Event, EventId};
use fm_core::model::{legal_flow, StageRef};
use fm_core::render::{to_dot, RenderOptions};
use fm_core::sim::{SimConfig, Simulator};
use fm_core::value::Value;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn args(pairs: &[(&str, i64)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), Value::Int(*v))).collect()
}

fn ints(vals: &[&Value]) -> Vec<i64> {
    vals.iter()
        .map(|v| match v {
            Value::Int(i) => *i,
            other => panic!("expected an int, got {other}"),
        })
        .collect()
}

/// Appends a flow between two stages of one machine that no lifecycle
/// allows.
fn inject_illegal_flow(doc: &Document, text: &str) -> Option<String> {
    let m = &doc.model;
    for s in m.all_stages() {
        for t in m.all_stages() {
            if s.machine == t.machine && s != t && !legal_flow(s, t) {
                return Some(format!("{text}\nflow {} -> {}\n", m.stage_path(s), m.stage_path(t)));
            }
        }
    }
    None
}

fn corpus_validates() -> Outcome {
    for (name, text) in common::corpus_models() {
        let doc = Document::parse(&text).map_err(|e| format!("{name}: {e}"))?;
        let d = doc.validate();
        ensure!(!d.has_errors(), "{name}: {d}");
        let bad = inject_illegal_flow(&doc, &text).ok_or(format!("{name}: nowhere to inject"))?;
        let d = Document::parse(&bad).map_err(|e| format!("{name}: {e}"))?.validate();
        ensure!(d.count(Code::IllegalFlow) == 1 && d.errors().count() == 1, "{name} with an illegal flow: {d}");
    }
    Ok(format!("{} models, 0 errors; 1 IllegalFlow each after injection", common::CORPUS_MODELS.len()))
}

fn time_doc() -> Document {
    import_classes(&[&common::corpus("Time.cls")]).unwrap().doc
}

fn time_semantics() -> Outcome {
    let doc = time_doc();
    let mut sim = Simulator::new(&doc, SimConfig::default());
    let method = |n: &str| doc.method_by_name(n).unwrap();
    let none = BTreeMap::new();
    sim.run_method(method("Time"), &none).map_err(|e| e.to_string())?;
    sim.run_method(method("printUniversal"), &none).map_err(|e| e.to_string())?;
    let first = ints(&sim.trace().emitted());
    ensure!(first == [0, 0, 0], "after the constructor: {first:?}");
    sim.run_method(method("setTime"), &args(&[("h", 13), ("m", 27), ("s", 6)])).map_err(|e| e.to_string())?;
    sim.run_method(method("printUniversal"), &none).map_err(|e| e.to_string())?;
    let all = ints(&sim.trace().emitted());
    ensure!(all[3..] == [13, 27, 6], "after setTime: {:?}", &all[3..]);
    let out = sim.finish();
    ensure!(out.stuck.is_empty(), "stuck tokens: {:?}", out.stuck);
    Ok("(0, 0, 0) then (13, 27, 6)".into())
}

fn time_event_order() -> Outcome {
    let doc = time_doc();
    let mut sim = Simulator::new(&doc, SimConfig::default());
    let program = [("Time", args(&[])), ("setTime", args(&[("h", 13), ("m", 27), ("s", 6)]))];
    let prints = [("printUniversal", args(&[])), ("printStandard", args(&[]))];
    for (name, a) in program.iter().chain(prints.iter()) {
        sim.run_method(doc.method_by_name(name).unwrap(), a).map_err(|e| e.to_string())?;
    }
    let order: Vec<&str> = sim.trace().event_order().iter().map(|&e| doc.event(e).name.as_str()).collect();
    let want = ["Time_init", "Time_setTime", "Time_printUniversal", "Time_printStandard"];
    ensure!(order == want, "trace order {order:?}");
    Ok(order.join(", "))
}

/// An event's region written out as qualified paths, so regions of two
/// documents compare directly.
fn region_key(doc: &Document, e: &Event) -> BTreeSet<String> {
    let m = &doc.model;
    let p = |s: StageRef| m.stage_path(s);
    let mut out: BTreeSet<String> = e.region.stages.iter().map(|&s| p(s)).collect();
    out.extend(e.region.flows.iter().map(|&f| format!("{} -> {}", p(m.flow(f).from), p(m.flow(f).to))));
    out.extend(e.region.triggers.iter().map(|&t| format!("{} => {}", p(m.trigger(t).from), p(m.trigger(t).to))));
    out
}

fn book_methods() -> Outcome {
    let imported = import_classes(&[&common::corpus("Book.cls")]).map_err(|e| e.to_string())?.doc;
    let hand = Document::parse(&common::corpus("book.fm")).map_err(|e| e.to_string())?;
    // The name map pairs events whose regions coincide.
    let mut map: BTreeMap<EventId, EventId> = BTreeMap::new();
    for e in &imported.events {
        let key = region_key(&imported, e);
        let matches: Vec<&Event> = hand.events.iter().filter(|h| region_key(&hand, h) == key).collect();
        ensure!(matches.len() == 1, "event {} matches {} hand-coded events", e.name, matches.len());
        map.insert(e.id, matches[0].id);
    }
    let image: BTreeSet<_> = map.values().collect();
    ensure!(image.len() == hand.events.len(), "the name map is not a bijection");
    ensure!(imported.methods.len() == hand.methods.len(), "method counts differ");
    for hm in &hand.methods {
        let im = imported.method_by_name(&hm.name).ok_or(format!("no imported method {}", hm.name))?;
        let mapped: Vec<EventId> = im.events.iter().map(|e| map[e]).collect();
        ensure!(mapped == hm.events, "method {} differs", hm.name);
    }
    let ctor = hand.method_event_names(hand.method_by_name("Book").unwrap());
    ensure!(ctor == ["e5", "e1", "e4", "e7", "e2"], "constructor {ctor:?}");
    let get_price = hand.method_event_names(hand.method_by_name("getPrice").unwrap());
    ensure!(get_price == ["e4", "e2"], "getPrice {get_price:?}");
    Ok(format!("{} methods isomorphic; constructor {{{}}}", hand.methods.len(), ctor.join(", ")))
}

fn chronology_oracle() -> Outcome {
    let doc = Document::parse(&common::corpus("video_rental.fm")).map_err(|e| e.to_string())?;
    let chron = doc.chronology_by_name("rental").unwrap();
    ensure!(chron.bound(doc.event_by_name("V2").unwrap().id) == 3, "V2 bound is not 3");
    let listed: BTreeSet<Vec<EventId>> = enumerate_sequences(chron, 8).map_err(|e| e.to_string())?.into_iter().collect();
    let mut brute = BTreeSet::new();
    let mut layer: Vec<Vec<EventId>> = vec![Vec::new()];
    for _ in 0..8 {
        let mut next = Vec::new();
        for s in &layer {
            for &e in &chron.nodes {
                let mut t = s.clone();
                t.push(e);
                if admissible(chron, &t) {
                    brute.insert(t.clone());
                }
                next.push(t);
            }
        }
        layer = next;
    }
    ensure!(listed == brute, "{} enumerated vs {} by brute force", listed.len(), brute.len());
    Ok(format!("{} sequences, sets equal", listed.len()))
}

fn conservation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let config = SimConfig { bindings: args(&[("k", 7)]), ..SimConfig::default() };
    let (mut runs, mut models) = (0, 0);
    for seed in 0..1000u64 {
        if runs >= 250 {
            break;
        }
        let text = common::random_model(seed, 5);
        let doc = Document::parse(&text).map_err(|e| e.to_string())?;
        ensure!(doc.model.machines.len() <= 5, "seed {seed}: too many machines");
        let chron = doc.chronology_by_name("c").unwrap();
        let seqs = enumerate_sequences(chron, 5).map_err(|e| e.to_string())?;
        let Some(seq) = seqs.choose(&mut rng) else { continue };
        models += 1;
        if common::run_checked(&doc, seq, &config).map_err(|e| format!("seed {seed}: {e}"))? {
            runs += 1;
        }
    }
    ensure!(runs >= 200, "only {runs} completed runs");
    Ok(format!("{runs} runs over {models} models, 0 violations"))
}

fn round_trip() -> Outcome {
    let mut texts: Vec<String> = common::corpus_models().into_iter().map(|(_, t)| t).collect();
    texts.extend((10_000..10_500).map(|s| common::random_model(s, 5)));
    for t in &texts {
        let a = parse_model(t).map_err(|e| e.to_string())?;
        let b = parse_model(&print_model(&a)).map_err(|e| e.to_string())?;
        ensure!(a.structurally_eq(&b), "round trip changed:\n{t}");
    }
    Ok(format!("{} models", texts.len()))
}

fn render_fidelity() -> Outcome {
    let opts = RenderOptions::default();
    for (name, text) in common::corpus_models() {
        let doc = Document::parse(&text).map_err(|e| e.to_string())?;
        let m = &doc.model;
        let dot = to_dot(m, &opts);
        ensure!(dot == to_dot(m, &opts), "{name}: output differs between runs");
        let c = common::check_dot(&dot).map_err(|e| format!("{name}: {e}"))?;
        ensure!(c.clusters == m.spheres.len() + m.machines.len(), "{name}: {} clusters", c.clusters);
        ensure!(c.solid_edges == m.flows.len(), "{name}: {} solid edges", c.solid_edges);
        ensure!(c.dashed_edges == m.triggers.len(), "{name}: {} dashed edges", c.dashed_edges);
    }
    Ok("deterministic; clusters, solid and dashed edges match".into())
}

fn car_behaviour() -> Outcome {
    let t = import_classes(&[&common::corpus("car.cls"), &common::corpus("electricCar.cls")]).map_err(|e| e.to_string())?;
    let doc = &t.doc;
    let mut rng = StdRng::seed_from_u64(9);
    let none = BTreeMap::new();
    let last_emit = |sim: &Simulator| ints(&sim.trace().emitted()).last().copied();
    for _ in 0..100 {
        let f = rng.gen_range(1..=1_000_000i64);
        let x = rng.gen_range(0..=1_000_000i64);
        let n = rng.gen_range(0..=64i64);
        let start = |sim: &mut Simulator| -> Result<(), String> {
            sim.run_event(doc.event_by_name("car_init").unwrap().id).map_err(|e| e.to_string())?;
            sim.run_method(doc.method_by_name("refuel").unwrap(), &args(&[("x", f)])).map_err(|e| e.to_string())
        };
        let run = |sim: &mut Simulator, m: &str, a: &BTreeMap<String, Value>| {
            sim.run_method(doc.method_by_name(m).unwrap(), a).map_err(|e| e.to_string())
        };

        let mut sim = Simulator::new(doc, SimConfig::default());
        start(&mut sim)?;
        run(&mut sim, "drive", &none)?;
        run(&mut sim, "getFuel", &none)?;
        ensure!(last_emit(&sim) == Some(f - 1), "drive from {f}: {:?}", last_emit(&sim));

        let mut sim = Simulator::new(doc, SimConfig::default());
        start(&mut sim)?;
        run(&mut sim, "refuel", &args(&[("x", x)]))?;
        run(&mut sim, "getFuel", &none)?;
        ensure!(last_emit(&sim) == Some(f + x), "refuel {x} from {f}: {:?}", last_emit(&sim));

        let mut sim = Simulator::new(doc, SimConfig::default());
        run(&mut sim, "setnumBatteries", &args(&[("n", n)]))?;
        run(&mut sim, "getnumBatteries", &none)?;
        ensure!(last_emit(&sim) == Some(n), "numBatteries {n}: {:?}", last_emit(&sim));
    }
    Ok("100 random cases exact".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("corpus validates; one injected illegal flow", corpus_validates),
        ("Time constructor and setTime output", time_semantics),
        ("Time program event order", time_event_order),
        ("Book methods match the e1-e7 decomposition", book_methods),
        ("video chronology enumeration equals brute force", chronology_oracle),
        ("token conservation and flow locality", conservation),
        ("parse-print-parse round trip", round_trip),
        ("DOT determinism and structural fidelity", render_fidelity),
        ("car and electricCar behaviour", car_behaviour),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {title}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {title}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
