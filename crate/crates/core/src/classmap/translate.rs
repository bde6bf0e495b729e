use crate::classmap::{link_inheritance, parse_classes, AttrType, ClassDecl, MethodKind, Sign};
use crate::diag::{Code, Diagnostic, Diagnostics, Loc};
use crate::document::{Document, LoadError};
use crate::dsl::ast::*;
use crate::lex::ParseErrors;
use crate::model::StageKind::{self, *};
use crate::value::{Effect, Operand, Value};

/// A translated class set: the generated syntax tree, the loaded document,
/// and a map from class elements to model paths and method names.
#[derive(Clone, Debug)]
pub struct Translation {
    pub ast: ModelAst,
    pub doc: Document,
    pub names: Vec<(String, String)>,
}

const Z: Loc = Loc::new(0, 0);
const CLASS_STAGES: [(StageKind, bool); 5] =
    [(Create, true), (Receive, false), (Process, true), (Release, false), (Transfer, false)];
const LIFECYCLE: [(StageKind, StageKind); 5] = [
    (Create, Process),
    (Transfer, Receive),
    (Receive, Process),
    (Process, Release),
    (Release, Transfer),
];

fn r(path: &[String], stage: StageKind) -> RefAst {
    RefAst { path: path.to_vec(), stage, loc: Z }
}

fn p(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn cat(a: &[String], b: &[String]) -> Vec<String> {
    a.iter().chain(b).cloned().collect()
}

fn machine(name: &str, tag: Option<&str>) -> Decl {
    Decl::Machine(MachineDecl {
        name: name.to_string(),
        type_tag: tag.map(str::to_string),
        inherited: false,
        stages: CLASS_STAGES
            .iter()
            .map(|&(kind, store)| StageDecl { kind, store, reject: false, loc: Z })
            .collect(),
        loc: Z,
    })
}

fn flow(a: RefAst, b: RefAst) -> Decl {
    Decl::Flow(FlowDecl { from: a, to: b, loc: Z })
}

fn trigger(a: RefAst, b: RefAst, effect: Option<Effect>) -> Decl {
    Decl::Trigger(TriggerDecl { from: a, to: b, effect, loc: Z })
}

fn mark_inherited(decls: &mut [Decl]) {
    for d in decls {
        match d {
            Decl::Machine(m) => m.inherited = true,
            Decl::Sphere(s) => mark_inherited(&mut s.body),
            _ => {}
        }
    }
}

fn init_value(a: &crate::classmap::AttrDecl) -> Value {
    a.init.clone().unwrap_or_else(|| a.ty.tag().and_then(Value::zero_for).unwrap_or_else(Value::unit))
}

/// Model path of the machine holding attribute `a`, relative to its class
/// sphere: the attribute machine, or the class machine of an object's
/// sub-sphere.
fn attr_path(cls: &ClassDecl, a: &str) -> Vec<String> {
    match cls.attribute(a).map(|x| &x.ty) {
        Some(AttrType::Object(k)) => p(&[k, k]),
        _ => p(&[a]),
    }
}

fn output_chain(m: &[String]) -> [(RefAst, RefAst); 2] {
    [(r(m, Process), r(m, Release)), (r(m, Release), r(m, Transfer))]
}

/// One generated event; refs are relative to the class sphere.
struct EventPlan {
    name: String,
    stages: Vec<RefAst>,
    flows: Vec<(RefAst, RefAst)>,
    triggers: Vec<(RefAst, RefAst, Option<Effect>)>,
}

struct Ctx<'a> {
    classes: &'a [ClassDecl],
    diags: Diagnostics,
}

impl Ctx<'_> {
    fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Contents of the sphere for `cls`, refs relative to that sphere.
    fn body(&mut self, cls: &ClassDecl, stack: &mut Vec<String>) -> Vec<Decl> {
        let c = p(&[&cls.name]);
        let mut decls = Vec::new();
        if let Some(sup) = cls.superclass.as_deref().and_then(|s| self.class(s)).cloned() {
            let mut inherited = self.body(&sup, stack);
            mark_inherited(&mut inherited);
            decls.extend(inherited);
        }
        decls.push(machine(&cls.name, None));
        let own: Vec<_> = cls.attributes.iter().filter(|a| !a.inherited).cloned().collect();
        for a in own.iter().filter(|a| a.ty.tag().is_some()) {
            decls.push(machine(&a.name, a.ty.tag()));
        }
        let mut holds: Vec<&String> = cls
            .attributes
            .iter()
            .filter(|a| a.inherited)
            .filter_map(|a| match &a.ty {
                AttrType::Object(k) => Some(k),
                _ => None,
            })
            .collect();
        for a in &own {
            let AttrType::Object(k) = &a.ty else { continue };
            if holds.contains(&k) {
                self.diags.push(
                    Diagnostic::error(
                        Code::MultiplicityUnsupported,
                        format!("class `{}` holds more than one `{k}`", cls.name),
                    )
                    .at(Some(a.loc))
                    .with_element(format!("{}.{}", cls.name, a.name)),
                );
                continue;
            }
            holds.push(k);
            let Some(kc) = self.class(k).cloned() else {
                self.diags.push(
                    Diagnostic::error(Code::UnknownClass, format!("no class `{k}`"))
                        .at(Some(a.loc))
                        .with_element(format!("{}.{}", cls.name, a.name)),
                );
                continue;
            };
            if stack.contains(k) || k == &cls.name {
                self.diags.push(
                    Diagnostic::error(
                        Code::ObjectCycle,
                        format!("`{}` contains itself through `{}`", cls.name, a.name),
                    )
                    .at(Some(a.loc))
                    .with_element(format!("{}.{}", cls.name, a.name)),
                );
                continue;
            }
            stack.push(cls.name.clone());
            let inner = self.body(&kc, stack);
            stack.pop();
            decls.push(Decl::Sphere(SphereDecl { name: k.clone(), body: inner, loc: Z }));
        }
        let mut own_machines = vec![c.clone()];
        own_machines.extend(own.iter().filter(|a| a.ty.tag().is_some()).map(|a| p(&[&a.name])));
        for m in &own_machines {
            for (a, b) in LIFECYCLE {
                decls.push(flow(r(m, a), r(m, b)));
            }
        }
        for a in &cls.attributes {
            decls.push(flow(r(&attr_path(cls, &a.name), Transfer), r(&c, Transfer)));
        }
        let mut triggers: Vec<(RefAst, RefAst, Option<Effect>)> = Vec::new();
        // Triggers starting in a nested sphere are declared there.
        for ev in self.events(cls) {
            for t in ev.triggers {
                if t.0.path == c && !triggers.contains(&t) {
                    triggers.push(t);
                }
            }
        }
        for (a, b, e) in triggers {
            decls.push(trigger(a, b, e));
        }
        decls
    }

    /// Init stages and triggers, recursively through object attributes.
    fn init_plan(&self, cls: &ClassDecl, prefix: &[String], plan: &mut EventPlan) {
        let c = cat(prefix, &p(&[&cls.name]));
        plan.stages.push(r(&c, Create));
        for a in &cls.attributes {
            match &a.ty {
                AttrType::Object(k) => {
                    let Some(kc) = self.class(k) else { continue };
                    if k == &cls.name || prefix.contains(k) {
                        continue;
                    }
                    plan.triggers.push((r(&c, Create), r(&cat(prefix, &p(&[k, k])), Create), None));
                    self.init_plan(kc, &cat(prefix, &p(&[k])), plan);
                }
                _ => {
                    let target = cat(prefix, &p(&[&a.name]));
                    plan.stages.push(r(&target, Create));
                    let effect = Effect::Set(Operand::Lit(init_value(a)));
                    plan.triggers.push((r(&c, Create), r(&target, Create), Some(effect)));
                }
            }
        }
    }

    /// Event bodies for a class, refs relative to its sphere.
    fn events(&self, cls: &ClassDecl) -> Vec<EventPlan> {
        let c = p(&[&cls.name]);
        let mut out = Vec::new();
        let mut init = EventPlan {
            name: format!("{}_init", cls.name),
            stages: vec![],
            flows: vec![],
            triggers: vec![],
        };
        self.init_plan(cls, &[], &mut init);
        out.push(init);
        out.push(EventPlan {
            name: format!("{}_out", cls.name),
            stages: [Transfer, Receive, Process, Release].iter().map(|&s| r(&c, s)).collect(),
            flows: LIFECYCLE[1..].iter().map(|&(a, b)| (r(&c, a), r(&c, b))).collect(),
            triggers: vec![],
        });
        let send = |name: String, m: Vec<String>, via: Option<Vec<String>>| {
            let mut stages = vec![r(&c, Process), r(&m, Process), r(&m, Release), r(&m, Transfer)];
            let mut flows: Vec<(RefAst, RefAst)> = output_chain(&m).into();
            let mut last = m.clone();
            if let Some(v) = via {
                stages.push(r(&v, Transfer));
                flows.push((r(&m, Transfer), r(&v, Transfer)));
                last = v;
            }
            stages.push(r(&c, Transfer));
            flows.push((r(&last, Transfer), r(&c, Transfer)));
            EventPlan {
                name,
                stages,
                flows,
                triggers: vec![(r(&c, Process), r(&m, Process), Some(Effect::Output(None)))],
            }
        };
        for m in cls.methods.iter().filter(|m| !m.inherited) {
            let mut add = |ev: EventPlan| {
                if !out.iter().any(|e: &EventPlan| e.name == ev.name) {
                    out.push(ev);
                }
            };
            match &m.kind {
                MethodKind::Constructor { params } => {
                    for a in params {
                        add(self.getter_event(cls, std::slice::from_ref(a), &send));
                    }
                }
                MethodKind::Getter { path } => add(self.getter_event(cls, path, &send)),
                MethodKind::Setter { attrs, params } => {
                    let mut ev = EventPlan {
                        name: format!("{}_{}", cls.name, m.name),
                        stages: vec![r(&c, Receive)],
                        flows: vec![],
                        triggers: vec![],
                    };
                    for (a, q) in attrs.iter().zip(params) {
                        let t = attr_path(cls, a);
                        ev.stages.push(r(&t, Create));
                        ev.triggers.push((r(&c, Receive), r(&t, Create), Some(Effect::Set(Operand::Arg(q.clone())))));
                    }
                    add(ev);
                }
                MethodKind::Update { attr, sign, operand } => {
                    let t = attr_path(cls, attr);
                    let effect = match sign {
                        Sign::Plus => Effect::Add(operand.clone()),
                        Sign::Minus => Effect::Sub(operand.clone()),
                    };
                    add(EventPlan {
                        name: format!("{}_{}", cls.name, m.name),
                        stages: vec![r(&c, Process), r(&t, Process)],
                        flows: vec![],
                        triggers: vec![(r(&c, Process), r(&t, Process), Some(effect))],
                    });
                }
                MethodKind::Output { attrs, format } => {
                    let mut ev = EventPlan {
                        name: format!("{}_{}", cls.name, m.name),
                        stages: vec![r(&c, Process)],
                        flows: vec![],
                        triggers: vec![],
                    };
                    for a in attrs {
                        let t = attr_path(cls, a);
                        ev.stages.extend([r(&t, Process), r(&t, Release), r(&t, Transfer)]);
                        ev.flows.extend(output_chain(&t));
                        ev.triggers.push((r(&c, Process), r(&t, Process), Some(Effect::Output(format.clone()))));
                    }
                    add(ev);
                }
            }
        }
        out
    }

    fn getter_event(
        &self,
        cls: &ClassDecl,
        path: &[String],
        send: &dyn Fn(String, Vec<String>, Option<Vec<String>>) -> EventPlan,
    ) -> EventPlan {
        let attr = cls.attribute(&path[0]);
        match (attr.map(|a| &a.ty), path.len()) {
            (Some(AttrType::Object(k)), 1) => {
                send(format!("{}_recv_{}", cls.name, path[0]), p(&[k, k]), None)
            }
            (Some(AttrType::Object(k)), _) => send(
                format!("{}_send_{}_{}", cls.name, path[0], path[1]),
                p(&[k, &path[1]]),
                Some(p(&[k, k])),
            ),
            _ => send(format!("{}_send_{}", cls.name, path[0]), p(&[&path[0]]), None),
        }
    }

    fn method_events(&self, cls: &ClassDecl, m: &crate::classmap::MethodDef) -> Vec<String> {
        let getter = |path: &[String]| -> Vec<String> {
            match (cls.attribute(&path[0]).map(|a| &a.ty), path.len()) {
                (Some(AttrType::Object(_)), 1) => vec![format!("{}_recv_{}", cls.name, path[0])],
                (Some(AttrType::Object(_)), _) => {
                    vec![format!("{}_send_{}_{}", cls.name, path[0], path[1])]
                }
                _ => vec![format!("{}_send_{}", cls.name, path[0]), format!("{}_out", cls.name)],
            }
        };
        match &m.kind {
            MethodKind::Constructor { params } if params.is_empty() => vec![format!("{}_init", cls.name)],
            MethodKind::Constructor { params } => {
                let mut evs: Vec<String> = params
                    .iter()
                    .map(|a| getter(std::slice::from_ref(a)).remove(0))
                    .collect();
                evs.push(format!("{}_out", cls.name));
                evs
            }
            MethodKind::Getter { path } => getter(path),
            _ => vec![format!("{}_{}", cls.name, m.name)],
        }
    }
}

fn qualify(prefix: &[String], r: &RefAst) -> RefAst {
    RefAst { path: cat(prefix, &r.path), ..r.clone() }
}

fn event_decl(prefix: &[String], ev: &EventPlan) -> Decl {
    let mut includes = Vec::new();
    let mut seen: Vec<&RefAst> = Vec::new();
    for s in &ev.stages {
        if !seen.contains(&s) {
            seen.push(s);
            includes.push(Include { item: IncludeItem::Stage(qualify(prefix, s)), loc: Z });
        }
    }
    for (a, b) in &ev.flows {
        includes.push(Include { item: IncludeItem::Flow(qualify(prefix, a), qualify(prefix, b)), loc: Z });
    }
    for (a, b, e) in &ev.triggers {
        includes.push(Include {
            item: IncludeItem::Trigger(qualify(prefix, a), qualify(prefix, b), e.clone()),
            loc: Z,
        });
    }
    Decl::Event(EventDecl { name: ev.name.clone(), includes, time: None, duration: None, loc: Z })
}

/// Translates linked classes. Each class becomes a top-level sphere with
/// its events and one method per declared (not inherited) method.
pub fn translate(classes: &[ClassDecl]) -> Result<Translation, Diagnostics> {
    let mut ctx = Ctx { classes, diags: Diagnostics::new() };
    let mut decls = Vec::new();
    let mut events = Vec::new();
    let mut methods = Vec::new();
    let mut names = Vec::new();
    for cls in classes {
        let body = ctx.body(cls, &mut Vec::new());
        decls.push(Decl::Sphere(SphereDecl { name: cls.name.clone(), body, loc: Z }));
        names.push((cls.name.clone(), cls.name.clone()));
        for a in &cls.attributes {
            names.push((format!("{}.{}", cls.name, a.name), attr_path(cls, &a.name).join(".")));
        }
        let prefix = p(&[&cls.name]);
        for ev in ctx.events(cls) {
            events.push(event_decl(&prefix, &ev));
        }
        for m in cls.methods.iter().filter(|m| !m.inherited) {
            names.push((format!("{}.{}", cls.name, m.name), m.name.clone()));
            methods.push(Decl::Method(MethodDecl {
                name: m.name.clone(),
                events: ctx.method_events(cls, m),
                loc: Z,
            }));
        }
    }
    if ctx.diags.has_errors() {
        return Err(ctx.diags);
    }
    decls.extend(events);
    decls.extend(methods);
    let ast = ModelAst { decls };
    let doc = Document::from_ast(ast.clone())?;
    Ok(Translation { ast, doc, names })
}

/// Parses, links and translates one or more class files as a unit.
pub fn import_classes(texts: &[&str]) -> Result<Translation, LoadError> {
    let mut classes = Vec::new();
    let mut errs = Vec::new();
    for t in texts {
        match parse_classes(t) {
            Ok(cs) => classes.extend(cs),
            Err(e) => errs.extend(e.0),
        }
    }
    if !errs.is_empty() {
        return Err(LoadError::Parse(ParseErrors(errs)));
    }
    let linked = link_inheritance(&classes).map_err(LoadError::Semantic)?;
    translate(&linked).map_err(LoadError::Semantic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Code;

    const TIME: &str = include_str!("../../corpus/Time.cls");
    const CAR: &str = include_str!("../../corpus/car.cls");
    const ECAR: &str = include_str!("../../corpus/electricCar.cls");
    const BOOK: &str = include_str!("../../corpus/Book.cls");

    fn method_names(t: &Translation, name: &str) -> Vec<String> {
        let m = t.doc.method_by_name(name).unwrap();
        t.doc.method_event_names(m).into_iter().map(String::from).collect()
    }

    #[test]
    fn time_has_a_class_machine_and_three_attribute_machines() {
        let t = import_classes(&[TIME]).unwrap();
        let m = &t.doc.model;
        assert_eq!(m.spheres.len(), 1);
        assert_eq!(m.machines.len(), 4);
        assert!(m.machines.iter().all(|mc| mc.stages.len() == 5));
        assert_eq!(m.flows.len(), 4 * 5 + 3);
        assert!(!t.doc.validate().has_errors());
        assert_eq!(method_names(&t, "Time"), ["Time_init"]);
    }

    #[test]
    fn subclass_copies_parent_machines_marked_inherited() {
        let t = import_classes(&[CAR, ECAR]).unwrap();
        let m = &t.doc.model;
        let inherited: Vec<String> = m
            .machines
            .iter()
            .enumerate()
            .filter(|(_, mc)| mc.inherited)
            .map(|(i, _)| m.machine_path(crate::model::MachineId(i as u32)))
            .collect();
        assert_eq!(inherited, ["electricCar.car", "electricCar.maxSpeed", "electricCar.fuel"]);
        assert_eq!(t.doc.methods.len(), 7);
    }

    #[test]
    fn object_attribute_becomes_a_nested_sphere() {
        let t = import_classes(&[BOOK]).unwrap();
        let m = &t.doc.model;
        assert!(m.stage_by_path("Book.Author.Author.transfer").is_some());
        assert_eq!(
            method_names(&t, "Book"),
            ["Book_send_name", "Book_recv_author", "Book_send_price", "Book_send_qtyInStock", "Book_out"]
        );
        assert_eq!(method_names(&t, "getAuthorName"), ["Book_send_author_name"]);
    }

    #[test]
    fn printed_translation_reparses_to_the_same_tree() {
        let t = import_classes(&[CAR, ECAR]).unwrap();
        let again = crate::dsl::parse_model(&crate::dsl::print_model(&t.ast)).unwrap();
        assert_eq!(crate::dsl::print_model(&again), crate::dsl::print_model(&t.ast));
        let twice = import_classes(&[CAR, ECAR]).unwrap();
        assert_eq!(crate::dsl::print_model(&twice.ast), crate::dsl::print_model(&t.ast));
    }

    #[test]
    fn object_cycles_and_unknown_classes_are_rejected() {
        let err = import_classes(&["class A { private b : object:B }\nclass B { private a : object:A }"]);
        let Err(LoadError::Semantic(d)) = err else { panic!("{err:?}") };
        assert!(d.count(Code::ObjectCycle) >= 1);
        let err = import_classes(&["class A { private b : object:Nope }"]);
        let Err(LoadError::Semantic(d)) = err else { panic!("{err:?}") };
        assert_eq!(d.count(Code::UnknownClass), 1);
    }
}
