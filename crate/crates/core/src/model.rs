//! The static flow description: spheres, machines and their stages, flows,
//! triggers and storage, plus name resolution and semantic validation.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::diag::{Code, Diagnostic, Diagnostics, Loc};
use crate::dsl::ast::{Decl, MachineDecl, ModelAst, RefAst};
use crate::value::Effect;

/// The lifecycle stages a thing can occupy inside a machine. The derived
/// ordering is the canonical print order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Create,
    Receive,
    Arrive,
    Accept,
    Process,
    Release,
    Transfer,
}

impl StageKind {
    pub const ALL: [StageKind; 7] = [
        StageKind::Create,
        StageKind::Receive,
        StageKind::Arrive,
        StageKind::Accept,
        StageKind::Process,
        StageKind::Release,
        StageKind::Transfer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Create => "create",
            StageKind::Receive => "receive",
            StageKind::Arrive => "arrive",
            StageKind::Accept => "accept",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::Transfer => "transfer",
        }
    }

    pub fn from_keyword(word: &str) -> Option<StageKind> {
        StageKind::ALL.into_iter().find(|k| k.as_str() == word)
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! id_type {
    ($($name:ident),*) => {$(
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    )*};
}

id_type!(SphereId, MachineId, FlowId, TriggerId, StorageId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StageRef {
    pub machine: MachineId,
    pub stage: StageKind,
}

impl StageRef {
    pub fn new(machine: MachineId, stage: StageKind) -> Self {
        StageRef { machine, stage }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sphere {
    pub id: SphereId,
    pub name: String,
    pub parent: Option<SphereId>,
    pub children: Vec<SphereId>,
    pub machines: Vec<MachineId>,
    pub loc: Option<Loc>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Machine {
    pub id: MachineId,
    pub name: String,
    /// `None` for machines declared at the top level.
    pub sphere: Option<SphereId>,
    /// Declared stages in canonical order, at most one per kind.
    pub stages: Vec<StageKind>,
    pub type_tag: Option<String>,
    pub inherited: bool,
    /// Accept stage rejects arriving things instead of admitting them.
    pub rejects: bool,
    pub loc: Option<Loc>,
}

impl Machine {
    pub fn has(&self, kind: StageKind) -> bool {
        self.stages.contains(&kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub from: StageRef,
    pub to: StageRef,
    pub loc: Option<Loc>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trigger {
    pub id: TriggerId,
    pub from: StageRef,
    pub to: StageRef,
    pub effect: Option<Effect>,
    pub loc: Option<Loc>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Storage {
    pub id: StorageId,
    pub stage: StageRef,
    pub loc: Option<Loc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Element {
    Sphere(SphereId),
    Machine(MachineId),
    Flow(FlowId),
    Trigger(TriggerId),
    Storage(StorageId),
}

/// A built static description. Ids index the element vectors and are
/// assigned in declaration order; `order` interleaves all elements in the
/// order they were declared.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Model {
    pub spheres: Vec<Sphere>,
    pub machines: Vec<Machine>,
    pub flows: Vec<Flow>,
    pub triggers: Vec<Trigger>,
    pub storages: Vec<Storage>,
    pub order: Vec<Element>,
}

impl Model {
    pub fn sphere(&self, id: SphereId) -> &Sphere {
        &self.spheres[id.index()]
    }

    pub fn machine(&self, id: MachineId) -> &Machine {
        &self.machines[id.index()]
    }

    pub fn flow(&self, id: FlowId) -> &Flow {
        &self.flows[id.index()]
    }

    pub fn trigger(&self, id: TriggerId) -> &Trigger {
        &self.triggers[id.index()]
    }

    pub fn storage(&self, id: StorageId) -> &Storage {
        &self.storages[id.index()]
    }

    pub fn declares(&self, r: StageRef) -> bool {
        self.machines
            .get(r.machine.index())
            .is_some_and(|m| m.has(r.stage))
    }

    /// Dotted path of a sphere from the root, e.g. `Book.Author`.
    pub fn sphere_path(&self, id: SphereId) -> String {
        let mut parts = Vec::new();
        let mut cur = Some(id);
        let mut guard = 0;
        while let Some(s) = cur {
            parts.push(self.sphere(s).name.as_str());
            cur = self.sphere(s).parent;
            guard += 1;
            if guard > self.spheres.len() {
                break;
            }
        }
        parts.reverse();
        parts.join(".")
    }

    /// Dotted path of a machine from the root, e.g. `Time.hour`.
    pub fn machine_path(&self, id: MachineId) -> String {
        let m = self.machine(id);
        match m.sphere {
            Some(s) => format!("{}.{}", self.sphere_path(s), m.name),
            None => m.name.clone(),
        }
    }

    pub fn stage_path(&self, r: StageRef) -> String {
        format!("{}.{}", self.machine_path(r.machine), r.stage)
    }

    pub fn machine_by_path(&self, path: &str) -> Option<MachineId> {
        self.machines
            .iter()
            .map(|m| m.id)
            .find(|&id| self.machine_path(id) == path)
    }

    pub fn stage_by_path(&self, path: &str) -> Option<StageRef> {
        let (machine, stage) = path.rsplit_once('.')?;
        let stage = StageKind::from_keyword(stage)?;
        let r = StageRef::new(self.machine_by_path(machine)?, stage);
        self.declares(r).then_some(r)
    }

    /// Storages attached to a stage, in declaration order.
    pub fn storages_at(&self, r: StageRef) -> impl Iterator<Item = &Storage> {
        self.storages.iter().filter(move |s| s.stage == r)
    }

    /// Every declared stage, machines in declaration order and stages in
    /// canonical order.
    pub fn all_stages(&self) -> Vec<StageRef> {
        self.machines
            .iter()
            .flat_map(|m| m.stages.iter().map(move |&k| StageRef::new(m.id, k)))
            .collect()
    }

    pub fn child_sphere(&self, scope: Option<SphereId>, name: &str) -> Option<SphereId> {
        match scope {
            Some(s) => self
                .sphere(s)
                .children
                .iter()
                .copied()
                .find(|&c| self.sphere(c).name == name),
            None => self
                .spheres
                .iter()
                .find(|s| s.parent.is_none() && s.name == name)
                .map(|s| s.id),
        }
    }

    fn child_machine(&self, scope: Option<SphereId>, name: &str) -> Option<MachineId> {
        match scope {
            Some(s) => self
                .sphere(s)
                .machines
                .iter()
                .copied()
                .find(|&m| self.machine(m).name == name),
            None => self
                .machines
                .iter()
                .find(|m| m.sphere.is_none() && m.name == name)
                .map(|m| m.id),
        }
    }

    fn resolve_machine_from(&self, scope: Option<SphereId>, path: &[String]) -> Option<MachineId> {
        let (last, spheres) = path.split_last()?;
        let mut cur = scope;
        for seg in spheres {
            cur = Some(self.child_sphere(cur, seg)?);
        }
        self.child_machine(cur, last)
    }

    /// Resolves a dotted machine path innermost-scope first, then outward
    /// through the enclosing spheres up to the root.
    pub fn resolve_machine(&self, scope: Option<SphereId>, path: &[String]) -> Option<MachineId> {
        let mut cur = scope;
        loop {
            if let Some(m) = self.resolve_machine_from(cur, path) {
                return Some(m);
            }
            cur = self.sphere(cur?).parent;
        }
    }

    /// Resolves a stage reference; the machine must declare the stage.
    pub fn resolve_ref(&self, scope: Option<SphereId>, r: &RefAst) -> Result<StageRef, Diagnostic> {
        let machine = self.resolve_machine(scope, &r.path).ok_or_else(|| {
            Diagnostic::error(
                Code::DanglingRef,
                format!("unknown machine `{}`", r.path.join(".")),
            )
            .at(Some(r.loc))
            .with_element(r.to_string())
        })?;
        let sr = StageRef::new(machine, r.stage);
        if !self.declares(sr) {
            return Err(Diagnostic::error(
                Code::DanglingRef,
                format!(
                    "machine `{}` declares no {} stage",
                    self.machine_path(machine),
                    r.stage
                ),
            )
            .at(Some(r.loc))
            .with_element(r.to_string()));
        }
        Ok(sr)
    }
}

/// Builds a model from the structural declarations of a parsed file.
/// Events, chronologies and methods are ignored here.
pub fn build_model(ast: &ModelAst) -> Result<Model, Diagnostics> {
    let mut b = Builder::default();
    b.declare(&ast.decls, None);
    b.connect(&ast.decls, None);
    if b.diags.has_errors() {
        Err(b.diags)
    } else {
        Ok(b.model)
    }
}

#[derive(Default)]
struct Builder {
    model: Model,
    diags: Diagnostics,
    sphere_cursor: usize,
}

impl Builder {
    fn scope_name(&self, scope: Option<SphereId>, name: &str) -> String {
        match scope {
            Some(s) => format!("{}.{}", self.model.sphere_path(s), name),
            None => name.to_string(),
        }
    }

    fn name_taken(&self, scope: Option<SphereId>, name: &str) -> bool {
        self.model.child_sphere(scope, name).is_some()
            || self.model.child_machine(scope, name).is_some()
    }

    fn declare(&mut self, decls: &[Decl], scope: Option<SphereId>) {
        for decl in decls {
            match decl {
                Decl::Sphere(s) => {
                    if self.name_taken(scope, &s.name) {
                        self.diags.push(
                            Diagnostic::error(
                                Code::DuplicateName,
                                format!("`{}` is already declared in this scope", s.name),
                            )
                            .at(Some(s.loc))
                            .with_element(self.scope_name(scope, &s.name)),
                        );
                    }
                    let id = SphereId(self.model.spheres.len() as u32);
                    self.model.spheres.push(Sphere {
                        id,
                        name: s.name.clone(),
                        parent: scope,
                        children: Vec::new(),
                        machines: Vec::new(),
                        loc: Some(s.loc),
                    });
                    if let Some(p) = scope {
                        self.model.spheres[p.index()].children.push(id);
                    }
                    self.model.order.push(Element::Sphere(id));
                    self.declare(&s.body, Some(id));
                }
                Decl::Machine(m) => self.declare_machine(m, scope),
                _ => {}
            }
        }
    }

    fn declare_machine(&mut self, m: &MachineDecl, scope: Option<SphereId>) {
        if self.name_taken(scope, &m.name) {
            self.diags.push(
                Diagnostic::error(
                    Code::DuplicateName,
                    format!("`{}` is already declared in this scope", m.name),
                )
                .at(Some(m.loc))
                .with_element(self.scope_name(scope, &m.name)),
            );
        }
        let id = MachineId(self.model.machines.len() as u32);
        let mut stages: Vec<StageKind> = Vec::new();
        let mut rejects = false;
        for st in &m.stages {
            if stages.contains(&st.kind) {
                self.diags.push(
                    Diagnostic::error(
                        Code::DuplicateName,
                        format!("stage {} declared twice in machine `{}`", st.kind, m.name),
                    )
                    .at(Some(st.loc))
                    .with_element(self.scope_name(scope, &m.name)),
                );
                continue;
            }
            stages.push(st.kind);
            rejects |= st.reject;
        }
        stages.sort();
        self.model.machines.push(Machine {
            id,
            name: m.name.clone(),
            sphere: scope,
            stages,
            type_tag: m.type_tag.clone(),
            inherited: m.inherited,
            rejects,
            loc: Some(m.loc),
        });
        if let Some(s) = scope {
            self.model.spheres[s.index()].machines.push(id);
        }
        self.model.order.push(Element::Machine(id));
        for st in m.stages.iter().filter(|st| st.store) {
            let sid = StorageId(self.model.storages.len() as u32);
            self.model.storages.push(Storage {
                id: sid,
                stage: StageRef::new(id, st.kind),
                loc: Some(st.loc),
            });
            self.model.order.push(Element::Storage(sid));
        }
    }

    fn resolve(&mut self, scope: Option<SphereId>, r: &RefAst) -> Option<StageRef> {
        match self.model.resolve_ref(scope, r) {
            Ok(sr) => Some(sr),
            Err(d) => {
                self.diags.push(d);
                None
            }
        }
    }

    fn connect(&mut self, decls: &[Decl], scope: Option<SphereId>) {
        for decl in decls {
            match decl {
                Decl::Sphere(s) => {
                    // Spheres were numbered in pre-order during `declare`.
                    let id = self.next_sphere();
                    debug_assert_eq!(self.model.sphere(id).name, s.name);
                    self.connect(&s.body, Some(id));
                }
                Decl::Flow(f) => {
                    let from = self.resolve(scope, &f.from);
                    let to = self.resolve(scope, &f.to);
                    if let (Some(from), Some(to)) = (from, to) {
                        let id = FlowId(self.model.flows.len() as u32);
                        self.model.flows.push(Flow { id, from, to, loc: Some(f.loc) });
                        self.model.order.push(Element::Flow(id));
                    }
                }
                Decl::Trigger(t) => {
                    let from = self.resolve(scope, &t.from);
                    let to = self.resolve(scope, &t.to);
                    if let (Some(from), Some(to)) = (from, to) {
                        let id = TriggerId(self.model.triggers.len() as u32);
                        self.model.triggers.push(Trigger {
                            id,
                            from,
                            to,
                            effect: t.effect.clone(),
                            loc: Some(t.loc),
                        });
                        self.model.order.push(Element::Trigger(id));
                    }
                }
                Decl::Storage(s) => {
                    // The stage need not be declared; validation reports that.
                    match self.model.resolve_machine(scope, &s.target.path) {
                        Some(machine) => {
                            let id = StorageId(self.model.storages.len() as u32);
                            self.model.storages.push(Storage {
                                id,
                                stage: StageRef::new(machine, s.target.stage),
                                loc: Some(s.loc),
                            });
                            self.model.order.push(Element::Storage(id));
                        }
                        None => self.diags.push(
                            Diagnostic::error(
                                Code::DanglingRef,
                                format!("unknown machine `{}`", s.target.path.join(".")),
                            )
                            .at(Some(s.target.loc))
                            .with_element(s.target.to_string()),
                        ),
                    }
                }
                _ => {}
            }
        }
    }

    fn next_sphere(&mut self) -> SphereId {
        let id = SphereId(self.sphere_cursor as u32);
        self.sphere_cursor += 1;
        id
    }
}

const INTRA_MACHINE_FLOWS: [(StageKind, StageKind); 11] = {
    use StageKind::*;
    [
        (Transfer, Receive),
        (Transfer, Arrive),
        (Arrive, Accept),
        (Accept, Process),
        (Accept, Release),
        (Receive, Process),
        (Receive, Release),
        (Create, Process),
        (Create, Release),
        (Process, Release),
        (Release, Transfer),
    ]
};

/// Whether a flow between two stages follows the machine lifecycle. Across
/// machines only transfer-to-transfer flows are legal.
pub fn legal_flow(from: StageRef, to: StageRef) -> bool {
    if from.machine != to.machine {
        from.stage == StageKind::Transfer && to.stage == StageKind::Transfer
    } else {
        INTRA_MACHINE_FLOWS.contains(&(from.stage, to.stage))
    }
}

/// Checks a model and returns every violation found. Pure: the same model
/// always yields the same diagnostics in the same order.
pub fn validate(model: &Model) -> Diagnostics {
    let mut diags = Diagnostics::new();

    for f in &model.flows {
        let mut resolved = true;
        for end in [f.from, f.to] {
            if !model.declares(end) {
                resolved = false;
                diags.push(
                    Diagnostic::error(Code::DanglingRef, "flow endpoint is not a declared stage")
                        .at(f.loc)
                        .with_element(format!("flow#{}", f.id.0)),
                );
            }
        }
        if resolved && !legal_flow(f.from, f.to) {
            diags.push(
                Diagnostic::error(
                    Code::IllegalFlow,
                    format!(
                        "flow {} -> {} is not a legal stage transition",
                        model.stage_path(f.from),
                        model.stage_path(f.to)
                    ),
                )
                .at(f.loc)
                .with_element(model.stage_path(f.from))
                .with_element(model.stage_path(f.to)),
            );
        }
    }

    for t in &model.triggers {
        if !model.declares(t.from) || !model.declares(t.to) {
            diags.push(
                Diagnostic::error(Code::DanglingRef, "trigger endpoint is not a declared stage")
                    .at(t.loc)
                    .with_element(format!("trigger#{}", t.id.0)),
            );
        }
    }

    for m in &model.machines {
        if m.has(StageKind::Receive) && m.has(StageKind::Arrive) {
            diags.push(
                Diagnostic::error(
                    Code::ReceiveAndArriveTogether,
                    format!(
                        "machine `{}` declares both receive and arrive",
                        model.machine_path(m.id)
                    ),
                )
                .at(m.loc)
                .with_element(model.machine_path(m.id)),
            );
        }
    }

    for cycle in sphere_cycles(model) {
        let names: Vec<String> = cycle.iter().map(|&s| model.sphere(s).name.clone()).collect();
        let mut d = Diagnostic::error(
            Code::SphereCycle,
            format!("sphere parent links form a cycle: {}", names.join(" -> ")),
        )
        .at(model.sphere(cycle[0]).loc);
        d.elements = names;
        diags.push(d);
    }

    for s in &model.storages {
        if !model.declares(s.stage) {
            let name = match model.machines.get(s.stage.machine.index()) {
                Some(_) => model.stage_path(s.stage),
                None => format!("storage#{}", s.id.0),
            };
            diags.push(
                Diagnostic::error(
                    Code::StorageOnMissingStage,
                    format!("storage attached to undeclared stage {name}"),
                )
                .at(s.loc)
                .with_element(name),
            );
        }
    }

    let mut touched = vec![false; model.machines.len()];
    let mut inbound: BTreeSet<StageRef> = BTreeSet::new();
    for (from, to) in model
        .flows
        .iter()
        .map(|f| (f.from, f.to))
        .chain(model.triggers.iter().map(|t| (t.from, t.to)))
    {
        for end in [from, to] {
            if let Some(slot) = touched.get_mut(end.machine.index()) {
                *slot = true;
            }
        }
        inbound.insert(to);
    }
    for m in &model.machines {
        if !touched[m.id.index()] {
            diags.push(
                Diagnostic::warning(
                    Code::OrphanMachine,
                    format!("no flow or trigger touches machine `{}`", model.machine_path(m.id)),
                )
                .at(m.loc)
                .with_element(model.machine_path(m.id)),
            );
            continue;
        }
        for &k in &m.stages {
            let r = StageRef::new(m.id, k);
            if k != StageKind::Create && k != StageKind::Transfer && !inbound.contains(&r) {
                diags.push(
                    Diagnostic::warning(
                        Code::UnreachableStage,
                        format!("nothing flows into or triggers {}", model.stage_path(r)),
                    )
                    .at(m.loc)
                    .with_element(model.stage_path(r)),
                );
            }
        }
    }

    diags
}

/// Each distinct cycle in the sphere parent relation, starting from its
/// lowest id.
fn sphere_cycles(model: &Model) -> Vec<Vec<SphereId>> {
    let mut cycles: Vec<Vec<SphereId>> = Vec::new();
    let mut done = vec![false; model.spheres.len()];
    for start in 0..model.spheres.len() {
        if done[start] {
            continue;
        }
        let mut chain: Vec<usize> = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            if i >= model.spheres.len() {
                break;
            }
            if let Some(pos) = chain.iter().position(|&c| c == i) {
                let mut cyc: Vec<SphereId> =
                    chain[pos..].iter().map(|&c| SphereId(c as u32)).collect();
                let min_pos = cyc.iter().enumerate().min_by_key(|(_, s)| **s).map(|(p, _)| p);
                cyc.rotate_left(min_pos.unwrap_or(0));
                if !cycles.contains(&cyc) {
                    cycles.push(cyc);
                }
                break;
            }
            if done[i] {
                break;
            }
            chain.push(i);
            cur = model.spheres[i].parent.map(|p| p.index());
        }
        for c in chain {
            done[c] = true;
        }
    }
    cycles
}

/// Every stage reachable from `start` along flows and triggers, `start`
/// included.
pub fn stage_reachability(model: &Model, start: StageRef) -> BTreeSet<StageRef> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        let next = model
            .flows
            .iter()
            .filter(|f| f.from == cur)
            .map(|f| f.to)
            .chain(model.triggers.iter().filter(|t| t.from == cur).map(|t| t.to));
        for n in next {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}
