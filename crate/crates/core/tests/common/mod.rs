#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const CORPUS_MODELS: [&str; 5] = ["video_rental", "time", "car", "book", "atm"];

pub fn corpus_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(file)
}

pub fn corpus(file: &str) -> String {
    std::fs::read_to_string(corpus_path(file)).unwrap()
}

pub fn corpus_models() -> Vec<(&'static str, String)> {
    CORPUS_MODELS.iter().map(|n| (*n, corpus(&format!("{n}.fm")))).collect()
}

// ---------------------------------------------------------------- DOT ----

/// What a DOT reader sees in the emitted text.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct DotCounts {
    pub clusters: usize,
    pub solid_edges: usize,
    pub dashed_edges: usize,
    pub dotted_edges: usize,
    pub nodes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum DotTok {
    Id(String),
    Punct(char),
    Arrow,
}

fn dot_tokens(text: &str) -> Result<Vec<DotTok>, String> {
    let cs: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match cs.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push('\\');
                        s.push(*cs.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(DotTok::Id(s));
        } else if c == '-' && cs.get(i + 1) == Some(&'>') {
            out.push(DotTok::Arrow);
            i += 2;
        } else if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
            let start = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_' || cs[i] == '.') {
                i += 1;
            }
            out.push(DotTok::Id(cs[start..i].iter().collect()));
        } else if "{}[]=;,".contains(c) {
            out.push(DotTok::Punct(c));
            i += 1;
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct DotParser {
    toks: Vec<DotTok>,
    pos: usize,
    counts: DotCounts,
}

impl DotParser {
    fn peek(&self) -> Option<&DotTok> {
        self.toks.get(self.pos)
    }
    fn next(&mut self) -> Result<DotTok, String> {
        let t = self.toks.get(self.pos).cloned().ok_or("unexpected end")?;
        self.pos += 1;
        Ok(t)
    }
    fn punct(&mut self, c: char) -> Result<(), String> {
        match self.next()? {
            DotTok::Punct(p) if p == c => Ok(()),
            t => Err(format!("expected {c:?}, found {t:?}")),
        }
    }
    fn id(&mut self) -> Result<String, String> {
        match self.next()? {
            DotTok::Id(s) => Ok(s),
            t => Err(format!("expected an id, found {t:?}")),
        }
    }
    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&DotTok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn attrs(&mut self) -> Result<Vec<(String, String)>, String> {
        let mut out = Vec::new();
        if !self.eat('[') {
            return Ok(out);
        }
        while !self.eat(']') {
            let k = self.id()?;
            self.punct('=')?;
            let v = self.id()?;
            out.push((k, v));
            if !self.eat(',') {
                self.eat(';');
            }
        }
        Ok(out)
    }

    fn stmts(&mut self) -> Result<(), String> {
        while !self.eat('}') {
            let first = self.id()?;
            if first == "subgraph" {
                let name = self.id()?;
                if name.starts_with("cluster") {
                    self.counts.clusters += 1;
                }
                self.punct('{')?;
                self.stmts()?;
            } else if matches!(first.as_str(), "node" | "edge" | "graph") && self.peek() == Some(&DotTok::Punct('[')) {
                self.attrs()?;
            } else if self.eat('=') {
                self.id()?;
            } else if self.peek() == Some(&DotTok::Arrow) {
                self.pos += 1;
                let to = self.id()?;
                let attrs = self.attrs()?;
                let style = attrs.iter().find(|(k, _)| k == "style").map(|(_, v)| v.as_str());
                match style {
                    None => self.counts.solid_edges += 1,
                    Some("dashed") => self.counts.dashed_edges += 1,
                    Some("dotted") => self.counts.dotted_edges += 1,
                    Some(s) => return Err(format!("unexpected edge style {s}")),
                }
                self.counts.nodes.insert(first);
                self.counts.nodes.insert(to);
            } else {
                self.attrs()?;
                self.counts.nodes.insert(first);
            }
            self.eat(';');
        }
        Ok(())
    }
}

/// Parses the subset of DOT the renderer emits, rejecting anything
/// malformed, and counts clusters and edges by style.
pub fn check_dot(text: &str) -> Result<DotCounts, String> {
    let mut p = DotParser { toks: dot_tokens(text)?, pos: 0, counts: DotCounts::default() };
    if p.id()? != "digraph" {
        return Err("expected digraph".into());
    }
    if let Some(DotTok::Id(_)) = p.peek() {
        p.pos += 1;
    }
    p.punct('{')?;
    p.stmts()?;
    if p.pos != p.toks.len() {
        return Err("trailing input".into());
    }
    Ok(p.counts)
}

// -------------------------------------------------------- random models ----

const KINDS: [&str; 7] = ["create", "receive", "arrive", "accept", "process", "release", "transfer"];
const INTRA: [(&str, &str); 11] = [
    ("transfer", "receive"),
    ("transfer", "arrive"),
    ("arrive", "accept"),
    ("accept", "process"),
    ("accept", "release"),
    ("receive", "process"),
    ("receive", "release"),
    ("create", "process"),
    ("create", "release"),
    ("process", "release"),
    ("release", "transfer"),
];

struct GenMachine {
    /// Path relative to the top level.
    path: String,
    stages: Vec<&'static str>,
    int_typed: bool,
}

fn pick_stages(rng: &mut StdRng) -> Vec<&'static str> {
    loop {
        let mut s: Vec<&'static str> = KINDS.iter().copied().filter(|_| rng.gen_bool(0.55)).collect();
        if s.contains(&"receive") && s.contains(&"arrive") {
            let drop = if rng.gen_bool(0.5) { "receive" } else { "arrive" };
            s.retain(|k| *k != drop);
        }
        if !s.is_empty() {
            return s;
        }
    }
}

fn literal(rng: &mut StdRng) -> String {
    rng.gen_range(-20i64..=20).to_string()
}

/// Arithmetic needs a numeric payload, so only int machines get add, sub
/// and argument-driven set.
fn effect(rng: &mut StdRng, int_target: bool) -> String {
    match rng.gen_range(0..7) {
        0 => String::new(),
        1 => format!(" with set {}", literal(rng)),
        2 if int_target => format!(" with add {}", literal(rng)),
        3 if int_target => format!(" with sub {}", literal(rng)),
        4 if int_target => " with set k".to_string(),
        5 => " with output".to_string(),
        _ => " with output \"v={}\"".to_string(),
    }
}

/// A random model that validates without errors: at most `max_machines`
/// machines spread over nested spheres, legal flows only, triggers with
/// integer effects, events over closed regions, and a chronology whose
/// succession is acyclic. Every trigger argument is named `k`.
pub fn random_model(seed: u64, max_machines: usize) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_machines);
    let mut out = String::new();
    let mut machines: Vec<GenMachine> = Vec::new();

    // Spheres: a top-level slot plus up to two spheres, the second possibly
    // nested in the first.
    let nested = rng.gen_bool(0.4);
    let mut slots: Vec<Vec<usize>> = vec![Vec::new(); 1 + rng.gen_range(0..=2)];
    for m in 0..n {
        let slot = rng.gen_range(0..slots.len());
        slots[slot].push(m);
    }
    let prefix = |slot: usize| -> String {
        match slot {
            0 => String::new(),
            1 => "s.".into(),
            _ if nested => "s.t.".into(),
            _ => "t.".into(),
        }
    };
    let mut defs: Vec<Vec<String>> = vec![Vec::new(); slots.len()];
    for (slot, ms) in slots.iter().enumerate() {
        for &m in ms {
            let mut stages = pick_stages(&mut rng);
            let int_typed = rng.gen_bool(0.3);
            let mods: Vec<String> = stages
                .iter()
                .map(|k| {
                    if rng.gen_bool(0.15) {
                        format!("{k} store")
                    } else if *k == "accept" && rng.gen_bool(0.3) {
                        "accept reject".to_string()
                    } else {
                        k.to_string()
                    }
                })
                .collect();
            let tag = if int_typed { " : int" } else { "" };
            defs[slot].push(format!("machine m{m}{tag} {{ {} }}", mods.join(", ")));
            stages.sort_by_key(|k| KINDS.iter().position(|x| x == k));
            machines.push(GenMachine { path: format!("{}m{m}", prefix(slot)), stages, int_typed });
        }
    }
    // Sphere t nests in s when `nested`; emit bodies accordingly.
    let body = |slot: usize| defs.get(slot).cloned().unwrap_or_default();
    for d in body(0) {
        out.push_str(&d);
        out.push('\n');
    }
    if slots.len() > 1 {
        out.push_str("sphere s {\n");
        for d in body(1) {
            out.push_str(&format!("  {d}\n"));
        }
        if slots.len() > 2 && nested {
            out.push_str("  sphere t {\n");
            for d in body(2) {
                out.push_str(&format!("    {d}\n"));
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
        if slots.len() > 2 && !nested {
            out.push_str("sphere t {\n");
            for d in body(2) {
                out.push_str(&format!("  {d}\n"));
            }
            out.push_str("}\n");
        }
    }
    machines.sort_by(|a, b| a.path.cmp(&b.path));

    let mut flows: Vec<(String, String)> = Vec::new();
    for m in &machines {
        for (a, b) in INTRA {
            if m.stages.contains(&a) && m.stages.contains(&b) && rng.gen_bool(0.6) {
                flows.push((format!("{}.{a}", m.path), format!("{}.{b}", m.path)));
            }
        }
    }
    for a in &machines {
        for b in &machines {
            if a.path != b.path && a.stages.contains(&"transfer") && b.stages.contains(&"transfer") && rng.gen_bool(0.3) {
                flows.push((format!("{}.transfer", a.path), format!("{}.transfer", b.path)));
            }
        }
    }
    let all_stages: Vec<(String, bool)> = machines
        .iter()
        .flat_map(|m| m.stages.iter().map(move |k| (format!("{}.{k}", m.path), m.int_typed)))
        .collect();
    let mut triggers: Vec<(String, String, String)> = Vec::new();
    for _ in 0..rng.gen_range(0..=n + 1) {
        let (a, _) = all_stages.choose(&mut rng).unwrap().clone();
        let (b, int_target) = all_stages.choose(&mut rng).unwrap().clone();
        let e = effect(&mut rng, int_target);
        if !triggers.iter().any(|(x, y, _)| *x == a && *y == b) {
            triggers.push((a, b, e));
        }
    }
    for (a, b) in &flows {
        out.push_str(&format!("flow {a} -> {b}\n"));
    }
    for (a, b, e) in &triggers {
        out.push_str(&format!("trigger {a} => {b}{e}\n"));
    }

    let n_events = rng.gen_range(1..=4);
    for e in 0..n_events {
        let region: Vec<&String> = loop {
            let r: Vec<&String> = all_stages.iter().map(|(s, _)| s).filter(|_| rng.gen_bool(0.5)).collect();
            if !r.is_empty() {
                break r;
            }
        };
        out.push_str(&format!("event ev{e} {{\n"));
        for s in &region {
            out.push_str(&format!("  include {s}\n"));
        }
        for (a, b) in &flows {
            if region.contains(&a) && region.contains(&b) && rng.gen_bool(0.8) {
                out.push_str(&format!("  include flow {a} -> {b}\n"));
            }
        }
        for (a, b, eff) in &triggers {
            if region.contains(&a) && region.contains(&b) && rng.gen_bool(0.8) {
                out.push_str(&format!("  include trigger {a} => {b}{eff}\n"));
            }
        }
        if rng.gen_bool(0.2) {
            out.push_str(&format!("  duration {}.5\n", rng.gen_range(0..9)));
        }
        out.push_str("}\n");
    }
    out.push_str("chronology c {\n");
    for e in 0..n_events {
        out.push_str(&format!("  ev{e} repeat {}\n", rng.gen_range(1..=3)));
        for f in e + 1..n_events {
            if rng.gen_bool(0.5) {
                out.push_str(&format!("  ev{e} -> ev{f}\n"));
            }
        }
    }
    if n_events >= 3 && rng.gen_bool(0.3) {
        out.push_str("  ev1 | ev2\n");
    }
    out.push_str("}\n");
    out
}

// ------------------------------------------------------------- replay ----

use std::collections::BTreeMap;

use fm_core::document::Document;
use fm_core::events::EventId;
use fm_core::model::legal_flow;
use fm_core::sim::{Action, Location, SimConfig, SimError, Simulator, TokenId, TraceRecord};

/// Token locations rebuilt from trace records alone.
#[derive(Default)]
pub struct Replay {
    pub at: BTreeMap<TokenId, Location>,
}

impl Replay {
    /// Applies one record, checking continuity and that every move between
    /// stages follows a declared legal flow.
    pub fn apply(&mut self, doc: &Document, r: &TraceRecord) -> Result<(), String> {
        let Some(t) = r.token else { return Ok(()) };
        let to = r.to.ok_or_else(|| format!("step {}: token {t} without destination", r.step))?;
        match (self.at.get(&t).copied(), r.from) {
            (None, None) => {}
            (Some(cur), Some(from)) if cur == from => {}
            (cur, from) => {
                return Err(format!("step {}: {t} recorded from {from:?} but replay has it at {cur:?}", r.step))
            }
        }
        let model = &doc.model;
        let stage_of = |l: Location| match l {
            Location::Stage(a) => Some(a),
            Location::Storage(s) => Some(model.storage(s).stage),
            Location::Environment => None,
        };
        if let Some(f) = r.via {
            // A flow move may start from the source stage or its storage.
            let fl = model.flow(f);
            let from = r.from.and_then(stage_of);
            if from != Some(fl.from) || to != Location::Stage(fl.to) || !legal_flow(fl.from, fl.to) {
                return Err(format!("step {}: {t} moved along an undeclared or illegal flow", r.step));
            }
        } else {
            match (r.from, to) {
                (Some(Location::Environment), _) => {
                    return Err(format!("step {}: {t} came back from the environment", r.step));
                }
                (Some(Location::Stage(a)), Location::Environment) => {
                    if r.action != Action::Emit || a.stage != fm_core::model::StageKind::Transfer {
                        return Err(format!("step {}: {t} left the model other than by emit at transfer", r.step));
                    }
                }
                (Some(from), _) if stage_of(from) != stage_of(to) && to != Location::Environment => {
                    return Err(format!("step {}: {t} changed stage without a flow", r.step));
                }
                _ => {}
            }
        }
        self.at.insert(t, to);
        Ok(())
    }

    pub fn count(&self, pred: fn(&Location) -> bool) -> usize {
        self.at.values().filter(|l| pred(l)).count()
    }
}

/// Runs `seq` event by event, replaying the trace after each one and
/// comparing it with the simulator's own state. `Ok(false)` when the run
/// hit the step limit.
pub fn run_checked(doc: &Document, seq: &[EventId], config: &SimConfig) -> Result<bool, String> {
    let mut sim = Simulator::new(doc, config.clone());
    let mut replay = Replay::default();
    let mut seen = 0;
    for &e in seq {
        match sim.run_event(e) {
            Ok(()) => {}
            Err(SimError::StepLimitExceeded { .. }) => return Ok(false),
            Err(other) => return Err(format!("{other}")),
        }
        let records = &sim.trace().records;
        for r in &records[seen..] {
            replay.apply(doc, r)?;
        }
        seen = records.len();
        let st = sim.state();
        let resident = replay.count(|l| matches!(l, Location::Stage(_)));
        let stored = replay.count(|l| matches!(l, Location::Storage(_)));
        let emitted = replay.count(|l| matches!(l, Location::Environment));
        if st.created() != st.resident() + st.stored() + st.emitted() {
            return Err(format!("created {} != resident + stored + emitted", st.created()));
        }
        if (st.created(), st.resident(), st.stored(), st.emitted()) != (replay.at.len(), resident, stored, emitted) {
            return Err(format!(
                "state counts {:?} differ from replay {:?}",
                (st.created(), st.resident(), st.stored(), st.emitted()),
                (replay.at.len(), resident, stored, emitted)
            ));
        }
        for tok in &st.tokens {
            if replay.at.get(&tok.id) != Some(&tok.location) {
                return Err(format!("{} is at {:?} but replay says {:?}", tok.id, tok.location, replay.at.get(&tok.id)));
            }
        }
    }
    Ok(true)
}
