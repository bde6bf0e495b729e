use std::fmt::Write;

use crate::dsl::ast::*;
use crate::value::{fmt_real, quote};

/// Prints a syntax tree in canonical form: one statement per line, two
/// spaces of indent per nesting level, stage lists in canonical order.
pub fn print_model(ast: &ModelAst) -> String {
    let mut out = String::new();
    for d in &ast.decls {
        print_decl(&mut out, d, 0);
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_decl(out: &mut String, decl: &Decl, level: usize) {
    indent(out, level);
    match decl {
        Decl::Sphere(s) => {
            let _ = writeln!(out, "sphere {} {{", s.name);
            for d in &s.body {
                print_decl(out, d, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Decl::Machine(m) => {
            let _ = write!(out, "machine {}", m.name);
            if let Some(t) = &m.type_tag {
                let _ = write!(out, " : {t}");
            }
            if m.inherited {
                out.push_str(" inherited");
            }
            let mut stages: Vec<&StageDecl> = m.stages.iter().collect();
            stages.sort_by_key(|s| s.kind);
            let list: Vec<String> = stages
                .iter()
                .map(|s| {
                    let mut t = s.kind.to_string();
                    if s.store {
                        t.push_str(" store");
                    }
                    if s.reject {
                        t.push_str(" reject");
                    }
                    t
                })
                .collect();
            if list.is_empty() {
                out.push_str(" { }\n");
            } else {
                let _ = writeln!(out, " {{ {} }}", list.join(", "));
            }
        }
        Decl::Flow(f) => {
            let _ = writeln!(out, "flow {} -> {}", f.from, f.to);
        }
        Decl::Trigger(t) => {
            let _ = write!(out, "trigger {} => {}", t.from, t.to);
            if let Some(e) = &t.effect {
                let _ = write!(out, " with {e}");
            }
            out.push('\n');
        }
        Decl::Storage(s) => {
            let _ = writeln!(out, "storage {}", s.target);
        }
        Decl::Event(e) => {
            let _ = writeln!(out, "event {} {{", e.name);
            for inc in &e.includes {
                indent(out, level + 1);
                match &inc.item {
                    IncludeItem::Stage(r) => {
                        let _ = writeln!(out, "include {r}");
                    }
                    IncludeItem::Flow(a, b) => {
                        let _ = writeln!(out, "include flow {a} -> {b}");
                    }
                    IncludeItem::Trigger(a, b, eff) => {
                        let _ = write!(out, "include trigger {a} => {b}");
                        if let Some(eff) = eff {
                            let _ = write!(out, " with {eff}");
                        }
                        out.push('\n');
                    }
                }
            }
            if let Some(t) = &e.time {
                indent(out, level + 1);
                let _ = writeln!(out, "time {}", quote(t));
            }
            if let Some(d) = e.duration {
                indent(out, level + 1);
                let _ = writeln!(out, "duration {}", fmt_real(d));
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Decl::Chronology(c) => {
            let _ = writeln!(out, "chronology {} {{", c.name);
            for arc in &c.arcs {
                indent(out, level + 1);
                let _ = match &arc.kind {
                    ArcKind::Succession(a, b) => writeln!(out, "{a} -> {b}"),
                    ArcKind::Repeat(a, n) => writeln!(out, "{a} repeat {n}"),
                    ArcKind::Alternative(a, b) => writeln!(out, "{a} | {b}"),
                };
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Decl::Method(m) => {
            let _ = writeln!(out, "method {} = ({})", m.name, m.events.join(", "));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;

    #[test]
    fn empty_prints_empty() {
        assert_eq!(print_model(&ModelAst::default()), "");
    }

    #[test]
    fn stages_come_out_in_canonical_order() {
        let ast = parse_model("machine m { transfer, create store, release }").unwrap();
        let text = print_model(&ast);
        assert_eq!(text, "machine m { create store, release, transfer }\n");
        assert!(parse_model(&text).unwrap().structurally_eq(&ast));
    }

    #[test]
    fn nested_indentation() {
        let ast = parse_model("sphere A { sphere B { machine m : int { create } } }").unwrap();
        assert_eq!(
            print_model(&ast),
            "sphere A {\n  sphere B {\n    machine m : int { create }\n  }\n}\n"
        );
    }
}
