//! Syntax tree of a `.fm` file. Every node keeps its source location;
//! declaration order is preserved exactly.

use std::fmt;

use crate::diag::Loc;
use crate::model::StageKind;
use crate::value::Effect;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelAst {
    pub decls: Vec<Decl>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Sphere(SphereDecl),
    Machine(MachineDecl),
    Flow(FlowDecl),
    Trigger(TriggerDecl),
    Storage(StorageDecl),
    Event(EventDecl),
    Chronology(ChronologyDecl),
    Method(MethodDecl),
}

impl Decl {
    pub fn loc(&self) -> Loc {
        match self {
            Decl::Sphere(d) => d.loc,
            Decl::Machine(d) => d.loc,
            Decl::Flow(d) => d.loc,
            Decl::Trigger(d) => d.loc,
            Decl::Storage(d) => d.loc,
            Decl::Event(d) => d.loc,
            Decl::Chronology(d) => d.loc,
            Decl::Method(d) => d.loc,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereDecl {
    pub name: String,
    pub body: Vec<Decl>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineDecl {
    pub name: String,
    /// Basic type of the thing the machine holds, e.g. `int`.
    pub type_tag: Option<String>,
    pub inherited: bool,
    pub stages: Vec<StageDecl>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageDecl {
    pub kind: StageKind,
    pub store: bool,
    /// Only meaningful on `accept`: arriving things are turned away.
    pub reject: bool,
    pub loc: Loc,
}

/// `a.b.c.stage`: a dotted machine path followed by a stage kind.
#[derive(Clone, Debug, PartialEq)]
pub struct RefAst {
    pub path: Vec<String>,
    pub stage: StageKind,
    pub loc: Loc,
}

impl fmt::Display for RefAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.path.join("."), self.stage)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowDecl {
    pub from: RefAst,
    pub to: RefAst,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriggerDecl {
    pub from: RefAst,
    pub to: RefAst,
    pub effect: Option<Effect>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageDecl {
    pub target: RefAst,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventDecl {
    pub name: String,
    pub includes: Vec<Include>,
    pub time: Option<String>,
    pub duration: Option<f64>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Include {
    pub item: IncludeItem,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IncludeItem {
    Stage(RefAst),
    Flow(RefAst, RefAst),
    /// Matches declared triggers with these endpoints and an equal effect.
    Trigger(RefAst, RefAst, Option<Effect>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChronologyDecl {
    pub name: String,
    pub arcs: Vec<Arc>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub kind: ArcKind,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ArcKind {
    /// `a -> b`
    Succession(String, String),
    /// `a repeat n`
    Repeat(String, u64),
    /// `a | b`: at most one of the two may occur.
    Alternative(String, String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub events: Vec<String>,
    pub loc: Loc,
}

impl ModelAst {
    /// A copy with every location zeroed and every stage list in canonical
    /// order. Two trees are structurally equal when their normal forms are.
    pub fn normalized(&self) -> ModelAst {
        ModelAst {
            decls: self.decls.iter().map(normalize_decl).collect(),
        }
    }

    pub fn structurally_eq(&self, other: &ModelAst) -> bool {
        self.normalized() == other.normalized()
    }

    /// Depth-first sequence of every declaration, spheres before their bodies.
    pub fn walk(&self) -> Vec<&Decl> {
        fn go<'a>(decls: &'a [Decl], out: &mut Vec<&'a Decl>) {
            for d in decls {
                out.push(d);
                if let Decl::Sphere(s) = d {
                    go(&s.body, out);
                }
            }
        }
        let mut out = Vec::new();
        go(&self.decls, &mut out);
        out
    }
}

const Z: Loc = Loc::new(0, 0);

fn normalize_ref(r: &RefAst) -> RefAst {
    RefAst { loc: Z, ..r.clone() }
}

fn normalize_decl(d: &Decl) -> Decl {
    match d {
        Decl::Sphere(s) => Decl::Sphere(SphereDecl {
            name: s.name.clone(),
            body: s.body.iter().map(normalize_decl).collect(),
            loc: Z,
        }),
        Decl::Machine(m) => {
            let mut stages: Vec<StageDecl> = m
                .stages
                .iter()
                .map(|s| StageDecl { loc: Z, ..s.clone() })
                .collect();
            stages.sort_by_key(|s| (s.kind, s.store, s.reject));
            Decl::Machine(MachineDecl { stages, loc: Z, ..m.clone() })
        }
        Decl::Flow(f) => Decl::Flow(FlowDecl {
            from: normalize_ref(&f.from),
            to: normalize_ref(&f.to),
            loc: Z,
        }),
        Decl::Trigger(t) => Decl::Trigger(TriggerDecl {
            from: normalize_ref(&t.from),
            to: normalize_ref(&t.to),
            effect: t.effect.clone(),
            loc: Z,
        }),
        Decl::Storage(s) => Decl::Storage(StorageDecl {
            target: normalize_ref(&s.target),
            loc: Z,
        }),
        Decl::Event(e) => Decl::Event(EventDecl {
            includes: e
                .includes
                .iter()
                .map(|i| Include {
                    item: match &i.item {
                        IncludeItem::Stage(r) => IncludeItem::Stage(normalize_ref(r)),
                        IncludeItem::Flow(a, b) => {
                            IncludeItem::Flow(normalize_ref(a), normalize_ref(b))
                        }
                        IncludeItem::Trigger(a, b, e) => {
                            IncludeItem::Trigger(normalize_ref(a), normalize_ref(b), e.clone())
                        }
                    },
                    loc: Z,
                })
                .collect(),
            loc: Z,
            ..e.clone()
        }),
        Decl::Chronology(c) => Decl::Chronology(ChronologyDecl {
            arcs: c.arcs.iter().map(|a| Arc { loc: Z, ..a.clone() }).collect(),
            loc: Z,
            ..c.clone()
        }),
        Decl::Method(m) => Decl::Method(MethodDecl { loc: Z, ..m.clone() }),
    }
}
