//! DOT output: spheres and machines as nested clusters, flows as solid
//! edges, triggers as dashed edges, storage as cylinder nodes, and events
//! as optional rounded overlay clusters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::diag::{Code, Diagnostic, Diagnostics};
use crate::events::Event;
use crate::model::{Element, Model, SphereId, StageRef};
use crate::value::quote;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    /// Names of events to overlay.
    pub overlay: Vec<String>,
    pub show_storage: bool,
    pub rankdir: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { overlay: Vec::new(), show_storage: true, rankdir: "LR".into() }
    }
}

fn node_id(model: &Model, s: StageRef) -> String {
    quote(&model.stage_path(s))
}

/// The model alone; any overlay in `opts` is ignored.
pub fn to_dot(model: &Model, opts: &RenderOptions) -> String {
    render(model, &[], &BTreeMap::new(), opts)
}

/// The model with one rounded cluster per overlaid region. Events whose
/// regions cover the same stages share a cluster. Stages in more than one
/// overlaid event list every event in their label.
pub fn overlay(model: &Model, events: &[Event], opts: &RenderOptions) -> Result<String, Diagnostics> {
    let mut diags = Diagnostics::new();
    let mut chosen: Vec<&Event> = Vec::new();
    for name in &opts.overlay {
        match events.iter().find(|e| &e.name == name) {
            Some(e) if !chosen.iter().any(|c| c.id == e.id) => chosen.push(e),
            Some(_) => {}
            None => diags.push(
                Diagnostic::error(Code::DanglingRef, format!("no event named `{name}` to overlay"))
                    .with_element(name.clone()),
            ),
        }
    }
    if diags.has_errors() {
        return Err(diags);
    }
    let mut groups: Vec<(Vec<&str>, &BTreeSet<StageRef>)> = Vec::new();
    for e in &chosen {
        match groups.iter_mut().find(|(_, stages)| **stages == e.region.stages) {
            Some((names, _)) => names.push(&e.name),
            None => groups.push((vec![&e.name], &e.region.stages)),
        }
    }
    let mut membership: BTreeMap<StageRef, Vec<&str>> = BTreeMap::new();
    for e in &chosen {
        for s in &e.region.stages {
            membership.entry(*s).or_default().push(&e.name);
        }
    }
    membership.retain(|_, v| v.len() > 1);
    Ok(render(model, &groups, &membership, opts))
}

fn render(
    model: &Model,
    groups: &[(Vec<&str>, &BTreeSet<StageRef>)],
    membership: &BTreeMap<StageRef, Vec<&str>>,
    opts: &RenderOptions,
) -> String {
    let mut out = String::new();
    out.push_str("digraph fm {\n");
    let _ = writeln!(out, "  rankdir={};", quote(&opts.rankdir));
    out.push_str("  compound=true;\n");
    out.push_str("  node [shape=box, style=rounded];\n");

    write_scope(&mut out, model, None, membership, 1);

    if opts.show_storage {
        for st in &model.storages {
            let id = quote(&format!("storage:{}", st.id.0));
            let _ = writeln!(out, "  {id} [shape=cylinder, label=\"store\"];");
        }
    }
    for f in &model.flows {
        let _ = writeln!(out, "  {} -> {};", node_id(model, f.from), node_id(model, f.to));
    }
    for t in &model.triggers {
        let label = t.effect.as_ref().map(|e| format!(", label={}", quote(&e.to_string())));
        let _ = writeln!(
            out,
            "  {} -> {} [style=dashed{}];",
            node_id(model, t.from),
            node_id(model, t.to),
            label.unwrap_or_default()
        );
    }
    if opts.show_storage {
        for st in &model.storages {
            // A storage on an undeclared stage has no node to attach to.
            if model.declares(st.stage) {
                let id = quote(&format!("storage:{}", st.id.0));
                let _ = writeln!(
                    out,
                    "  {} -> {id} [style=dotted, arrowhead=none];",
                    node_id(model, st.stage)
                );
            }
        }
    }
    for (names, stages) in groups {
        let _ = writeln!(out, "  subgraph {} {{", quote(&format!("cluster_event:{}", names.join(","))));
        let _ = writeln!(out, "    label={};", quote(&names.join(", ")));
        out.push_str("    style=\"rounded,dashed\";\n");
        for s in stages.iter() {
            let _ = writeln!(out, "    {};", node_id(model, *s));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Clusters for the spheres and machines directly inside `scope`, in
/// declaration order.
fn write_scope(
    out: &mut String,
    model: &Model,
    scope: Option<SphereId>,
    membership: &BTreeMap<StageRef, Vec<&str>>,
    level: usize,
) {
    for el in &model.order {
        match *el {
            Element::Sphere(s) if model.sphere(s).parent == scope => {
                let sp = model.sphere(s);
                indent(out, level);
                let _ = writeln!(out, "subgraph {} {{", quote(&format!("cluster_sphere:{}", model.sphere_path(s))));
                indent(out, level + 1);
                let _ = writeln!(out, "label={};", quote(&sp.name));
                write_scope(out, model, Some(s), membership, level + 1);
                indent(out, level);
                out.push_str("}\n");
            }
            Element::Machine(m) if model.machine(m).sphere == scope => {
                let mc = model.machine(m);
                let mut label = mc.name.clone();
                if let Some(t) = &mc.type_tag {
                    label.push_str(&format!(" : {t}"));
                }
                if mc.inherited {
                    label.push_str(" (inherited)");
                }
                indent(out, level);
                let _ = writeln!(out, "subgraph {} {{", quote(&format!("cluster_machine:{}", model.machine_path(m))));
                indent(out, level + 1);
                let _ = writeln!(out, "label={};", quote(&label));
                for &k in &mc.stages {
                    let s = StageRef::new(m, k);
                    let mut text = k.to_string();
                    if let Some(evs) = membership.get(&s) {
                        text.push_str(&format!("\n[{}]", evs.join(", ")));
                    }
                    indent(out, level + 1);
                    let _ = writeln!(out, "{} [label={}];", node_id(model, s), quote(&text));
                }
                indent(out, level);
                out.push_str("}\n");
            }
            _ => {}
        }
    }
}
