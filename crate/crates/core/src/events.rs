//! Events laid over a static description, chronologies that order them, and
//! methods as named event sequences.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::diag::{Code, Diagnostic, Diagnostics, Loc};
use crate::dsl::ast::{ArcKind, ChronologyDecl, EventDecl, IncludeItem, MethodDecl};
use crate::model::{FlowId, Model, SphereId, StageRef, TriggerId};
use crate::value::Operand;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EventId(pub u32);

impl EventId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The sub-diagram an event activates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Region {
    pub stages: BTreeSet<StageRef>,
    pub flows: BTreeSet<FlowId>,
    pub triggers: BTreeSet<TriggerId>,
}

impl Region {
    pub fn is_empty(&self) -> bool {
        self.stages.is_empty() && self.flows.is_empty() && self.triggers.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub id: EventId,
    pub name: String,
    pub region: Region,
    /// Carried for documentation; never consulted by control or simulation.
    pub time: Option<String>,
    pub duration: Option<f64>,
    pub loc: Option<Loc>,
}

/// Binds an event declaration to the model. Returns the event together with
/// any warnings, or the errors that prevented binding.
pub fn bind_event(
    model: &Model,
    scope: Option<SphereId>,
    decl: &EventDecl,
    id: EventId,
) -> Result<(Event, Diagnostics), Diagnostics> {
    let mut errs = Diagnostics::new();
    let mut region = Region::default();

    for inc in &decl.includes {
        match &inc.item {
            IncludeItem::Stage(r) => match model.resolve_ref(scope, r) {
                Ok(sr) => {
                    region.stages.insert(sr);
                }
                Err(d) => errs.push(d),
            },
            IncludeItem::Flow(a, b) => {
                match (model.resolve_ref(scope, a), model.resolve_ref(scope, b)) {
                    (Ok(from), Ok(to)) => {
                        let found: Vec<FlowId> = model
                            .flows
                            .iter()
                            .filter(|f| f.from == from && f.to == to)
                            .map(|f| f.id)
                            .collect();
                        if found.is_empty() {
                            errs.push(
                                Diagnostic::error(
                                    Code::DanglingRef,
                                    format!("no flow {a} -> {b} is declared"),
                                )
                                .at(Some(inc.loc)),
                            );
                        }
                        region.flows.extend(found);
                    }
                    (x, y) => {
                        for d in [x.err(), y.err()].into_iter().flatten() {
                            errs.push(d);
                        }
                    }
                }
            }
            IncludeItem::Trigger(a, b, effect) => {
                match (model.resolve_ref(scope, a), model.resolve_ref(scope, b)) {
                    (Ok(from), Ok(to)) => {
                        let found: Vec<TriggerId> = model
                            .triggers
                            .iter()
                            .filter(|t| t.from == from && t.to == to && &t.effect == effect)
                            .map(|t| t.id)
                            .collect();
                        if found.is_empty() {
                            errs.push(
                                Diagnostic::error(
                                    Code::DanglingRef,
                                    format!("no matching trigger {a} => {b} is declared"),
                                )
                                .at(Some(inc.loc)),
                            );
                        }
                        region.triggers.extend(found);
                    }
                    (x, y) => {
                        for d in [x.err(), y.err()].into_iter().flatten() {
                            errs.push(d);
                        }
                    }
                }
            }
        }
    }

    if decl.includes.is_empty() {
        errs.push(
            Diagnostic::error(Code::EmptyRegion, format!("event `{}` includes nothing", decl.name))
                .at(Some(decl.loc))
                .with_element(decl.name.clone()),
        );
    }

    let endpoints = region
        .flows
        .iter()
        .map(|&f| (model.flow(f).from, model.flow(f).to))
        .chain(region.triggers.iter().map(|&t| (model.trigger(t).from, model.trigger(t).to)));
    for (from, to) in endpoints {
        for end in [from, to] {
            if !region.stages.contains(&end) {
                errs.push(
                    Diagnostic::error(
                        Code::RegionNotClosed,
                        format!(
                            "event `{}` includes an edge touching {} but not that stage",
                            decl.name,
                            model.stage_path(end)
                        ),
                    )
                    .at(Some(decl.loc))
                    .with_element(model.stage_path(end)),
                );
            }
        }
    }

    if errs.has_errors() {
        return Err(errs);
    }

    let mut warnings = Diagnostics::new();
    if components(model, &region) > 1 {
        warnings.push(
            Diagnostic::warning(
                Code::DisconnectedRegion,
                format!("event `{}` covers disconnected parts of the model", decl.name),
            )
            .at(Some(decl.loc))
            .with_element(decl.name.clone()),
        );
    }

    Ok((
        Event {
            id,
            name: decl.name.clone(),
            region,
            time: decl.time.clone(),
            duration: decl.duration,
            loc: Some(decl.loc),
        },
        warnings,
    ))
}

/// Number of weakly connected components among region stages, joined by
/// the region's flows and triggers.
fn components(model: &Model, region: &Region) -> usize {
    let stages: Vec<StageRef> = region.stages.iter().copied().collect();
    let index: BTreeMap<StageRef, usize> =
        stages.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut parent: Vec<usize> = (0..stages.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let edges = region
        .flows
        .iter()
        .map(|&f| (model.flow(f).from, model.flow(f).to))
        .chain(region.triggers.iter().map(|&t| (model.trigger(t).from, model.trigger(t).to)));
    for (a, b) in edges {
        if let (Some(&x), Some(&y)) = (index.get(&a), index.get(&b)) {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            parent[rx] = ry;
        }
    }
    (0..stages.len()).filter(|&i| find(&mut parent, i) == i).count()
}

/// A control graph over events.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chronology {
    pub name: String,
    /// Events in order of first mention.
    pub nodes: Vec<EventId>,
    pub succession: BTreeSet<(EventId, EventId)>,
    /// Maximum occurrences per event; events without an entry occur at most
    /// once. A bound of two or more also lets the event follow itself.
    pub repeat: BTreeMap<EventId, u64>,
    /// Groups of mutually exclusive events.
    pub alternatives: Vec<BTreeSet<EventId>>,
    pub loc: Option<Loc>,
}

impl Chronology {
    /// Resolves event names; `|` pairs are merged into groups by
    /// connectivity.
    pub fn from_decl(decl: &ChronologyDecl, events: &[Event]) -> Result<Chronology, Diagnostics> {
        let mut errs = Diagnostics::new();
        let mut chron = Chronology {
            name: decl.name.clone(),
            loc: Some(decl.loc),
            ..Chronology::default()
        };
        let mut lookup = |name: &str, loc: Loc, chron: &mut Chronology| -> Option<EventId> {
            match events.iter().find(|e| e.name == name) {
                Some(e) => {
                    if !chron.nodes.contains(&e.id) {
                        chron.nodes.push(e.id);
                    }
                    Some(e.id)
                }
                None => {
                    errs.push(
                        Diagnostic::error(
                            Code::DanglingRef,
                            format!("chronology `{}` names unknown event `{name}`", decl.name),
                        )
                        .at(Some(loc))
                        .with_element(name.to_string()),
                    );
                    None
                }
            }
        };
        let mut pairs: Vec<(EventId, EventId)> = Vec::new();
        for arc in &decl.arcs {
            match &arc.kind {
                ArcKind::Succession(a, b) => {
                    let x = lookup(a, arc.loc, &mut chron);
                    let y = lookup(b, arc.loc, &mut chron);
                    if let (Some(x), Some(y)) = (x, y) {
                        chron.succession.insert((x, y));
                    }
                }
                ArcKind::Repeat(a, n) => {
                    if let Some(x) = lookup(a, arc.loc, &mut chron) {
                        chron.repeat.insert(x, *n);
                    }
                }
                ArcKind::Alternative(a, b) => {
                    let x = lookup(a, arc.loc, &mut chron);
                    let y = lookup(b, arc.loc, &mut chron);
                    if let (Some(x), Some(y)) = (x, y) {
                        pairs.push((x, y));
                    }
                }
            }
        }
        for (x, y) in pairs {
            let gx = chron.alternatives.iter().position(|g| g.contains(&x));
            let gy = chron.alternatives.iter().position(|g| g.contains(&y));
            match (gx, gy) {
                (Some(i), Some(j)) if i != j => {
                    let merged = chron.alternatives.remove(j.max(i));
                    chron.alternatives[i.min(j)].extend(merged);
                }
                (Some(_), Some(_)) => {}
                (Some(i), None) => {
                    chron.alternatives[i].insert(y);
                }
                (None, Some(j)) => {
                    chron.alternatives[j].insert(x);
                }
                (None, None) => chron.alternatives.push(BTreeSet::from([x, y])),
            }
        }
        if errs.has_errors() {
            Err(errs)
        } else {
            Ok(chron)
        }
    }

    pub fn bound(&self, e: EventId) -> u64 {
        self.repeat.get(&e).copied().unwrap_or(1)
    }

    /// Nodes with no incoming succession edge from another node.
    pub fn sources(&self) -> Vec<EventId> {
        let mut s: Vec<EventId> = self
            .nodes
            .iter()
            .copied()
            .filter(|n| !self.succession.iter().any(|&(a, b)| b == *n && a != *n))
            .collect();
        s.sort();
        s
    }

    fn successors(&self, e: EventId) -> Vec<EventId> {
        let mut out: BTreeSet<EventId> = self
            .succession
            .iter()
            .filter(|(a, _)| *a == e)
            .map(|&(_, b)| b)
            .collect();
        if self.bound(e) >= 2 {
            out.insert(e);
        }
        out.into_iter().collect()
    }

    fn may_step(&self, a: EventId, b: EventId) -> bool {
        self.succession.contains(&(a, b)) || (a == b && self.bound(a) >= 2)
    }

    /// Whether appending `next` to a sequence with these occurrence counts
    /// keeps every repeat bound and alternative group satisfied.
    fn may_add(&self, counts: &BTreeMap<EventId, u64>, next: EventId) -> bool {
        if counts.get(&next).copied().unwrap_or(0) + 1 > self.bound(next) {
            return false;
        }
        self.alternatives.iter().all(|g| {
            !g.contains(&next) || g.iter().all(|m| *m == next || !counts.contains_key(m))
        })
    }
}

/// Checks a bound chronology against the event list.
pub fn validate_chronology(events: &[Event], chron: &Chronology) -> Diagnostics {
    let mut diags = Diagnostics::new();
    let known = |e: &EventId| e.index() < events.len();
    let mentioned: BTreeSet<EventId> = chron
        .nodes
        .iter()
        .copied()
        .chain(chron.succession.iter().flat_map(|&(a, b)| [a, b]))
        .chain(chron.repeat.keys().copied())
        .chain(chron.alternatives.iter().flatten().copied())
        .collect();
    for e in mentioned.iter().filter(|e| !known(e)) {
        diags.push(
            Diagnostic::error(
                Code::DanglingRef,
                format!("chronology `{}` names unknown event #{}", chron.name, e.0),
            )
            .at(chron.loc),
        );
    }
    for (&e, &n) in &chron.repeat {
        if n < 1 {
            let name = events.get(e.index()).map_or_else(|| format!("#{}", e.0), |ev| ev.name.clone());
            diags.push(
                Diagnostic::error(
                    Code::RepeatBoundZero,
                    format!("event `{name}` has repeat bound 0 in chronology `{}`", chron.name),
                )
                .at(chron.loc)
                .with_element(name),
            );
        }
    }
    for (i, g) in chron.alternatives.iter().enumerate() {
        for h in &chron.alternatives[i + 1..] {
            if !g.is_disjoint(h) {
                diags.push(
                    Diagnostic::error(
                        Code::AlternativeOverlap,
                        format!("alternative groups overlap in chronology `{}`", chron.name),
                    )
                    .at(chron.loc),
                );
            }
        }
    }
    if !chron.nodes.is_empty() && chron.sources().is_empty() {
        diags.push(
            Diagnostic::warning(
                Code::NoSourceEvent,
                format!("chronology `{}` has no starting event", chron.name),
            )
            .at(chron.loc),
        );
    }
    diags
}

/// Whether `seq` is generated by the control graph: it starts at a source,
/// every step follows a succession edge (or repeats an event whose bound
/// allows it), no event exceeds its bound, and each alternative group
/// contributes at most one event. The empty sequence is not admissible.
pub fn admissible(chron: &Chronology, seq: &[EventId]) -> bool {
    let Some(&first) = seq.first() else {
        return false;
    };
    if !chron.sources().contains(&first) {
        return false;
    }
    let mut counts: BTreeMap<EventId, u64> = BTreeMap::new();
    for (i, &e) in seq.iter().enumerate() {
        if !chron.nodes.contains(&e) {
            return false;
        }
        if i > 0 && !chron.may_step(seq[i - 1], e) {
            return false;
        }
        if !chron.may_add(&counts, e) {
            return false;
        }
        *counts.entry(e).or_default() += 1;
    }
    true
}

pub const MAX_ENUMERATION_LEN: usize = 12;
pub const MAX_ENUMERATED: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EnumerateError {
    #[error("maximum length must be between 1 and {MAX_ENUMERATION_LEN}, got {0}")]
    MaxLen(usize),
    #[error("more than {MAX_ENUMERATED} admissible sequences")]
    LimitExceeded,
}

/// Every admissible sequence of length at most `max_len`, in lexicographic
/// order of event ids (a prefix sorts before its extensions).
pub fn enumerate_sequences(
    chron: &Chronology,
    max_len: usize,
) -> Result<Vec<Vec<EventId>>, EnumerateError> {
    if max_len == 0 || max_len > MAX_ENUMERATION_LEN {
        return Err(EnumerateError::MaxLen(max_len));
    }
    let mut out = Vec::new();
    let mut path = Vec::new();
    let mut counts = BTreeMap::new();
    for s in chron.sources() {
        if chron.may_add(&counts, s) {
            extend(chron, max_len, s, &mut path, &mut counts, &mut out)?;
        }
    }
    Ok(out)
}

fn extend(
    chron: &Chronology,
    max_len: usize,
    next: EventId,
    path: &mut Vec<EventId>,
    counts: &mut BTreeMap<EventId, u64>,
    out: &mut Vec<Vec<EventId>>,
) -> Result<(), EnumerateError> {
    path.push(next);
    *counts.entry(next).or_default() += 1;
    if out.len() >= MAX_ENUMERATED {
        return Err(EnumerateError::LimitExceeded);
    }
    out.push(path.clone());
    if path.len() < max_len {
        for succ in chron.successors(next) {
            if chron.may_add(counts, succ) {
                extend(chron, max_len, succ, path, counts, out)?;
            }
        }
    }
    path.pop();
    let c = counts.get_mut(&next).expect("counted above");
    *c -= 1;
    if *c == 0 {
        counts.remove(&next);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MethodId(pub u32);

/// A compound event: an ordered, non-empty sequence of events.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSpec {
    pub id: MethodId,
    pub name: String,
    pub events: Vec<EventId>,
    /// Argument names referenced by triggers in the method's events, in
    /// first-use order. A run must bind all of them.
    pub params: Vec<String>,
    pub loc: Option<Loc>,
}

pub fn bind_method(
    model: &Model,
    decl: &MethodDecl,
    events: &[Event],
    id: MethodId,
) -> Result<MethodSpec, Diagnostics> {
    let mut errs = Diagnostics::new();
    if decl.events.is_empty() {
        errs.push(
            Diagnostic::error(
                Code::EmptySequence,
                format!("method `{}` has no events", decl.name),
            )
            .at(Some(decl.loc))
            .with_element(decl.name.clone()),
        );
    }
    let mut seq = Vec::new();
    for name in &decl.events {
        match events.iter().find(|e| &e.name == name) {
            Some(e) => seq.push(e.id),
            None => errs.push(
                Diagnostic::error(
                    Code::DanglingRef,
                    format!("method `{}` names unknown event `{name}`", decl.name),
                )
                .at(Some(decl.loc))
                .with_element(name.clone()),
            ),
        }
    }
    if errs.has_errors() {
        return Err(errs);
    }
    let mut params: Vec<String> = Vec::new();
    for &e in &seq {
        for &t in &events[e.index()].region.triggers {
            if let Some(Operand::Arg(a)) = model.trigger(t).effect.as_ref().and_then(|x| x.operand()) {
                if !params.contains(a) {
                    params.push(a.clone());
                }
            }
        }
    }
    Ok(MethodSpec { id, name: decl.name.clone(), events: seq, params, loc: Some(decl.loc) })
}
