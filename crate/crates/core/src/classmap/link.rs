use std::collections::BTreeSet;

use crate::classmap::{ClassDecl, MethodKind};
use crate::diag::{Code, Diagnostic, Diagnostics};

/// Resolves single inheritance: each subclass receives copies of its
/// superclass's attributes and methods, marked inherited, ahead of its own.
/// Classes keep their input order.
pub fn link_inheritance(classes: &[ClassDecl]) -> Result<Vec<ClassDecl>, Diagnostics> {
    let mut diags = Diagnostics::new();
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].iter().any(|d| d.name == c.name) {
            diags.push(
                Diagnostic::error(Code::DuplicateName, format!("class `{}` declared twice", c.name))
                    .at(Some(c.loc))
                    .with_element(c.name.clone()),
            );
        }
    }
    let find = |name: &str| classes.iter().position(|c| c.name == name);

    let mut reported: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for (i, c) in classes.iter().enumerate() {
        let Some(sup) = &c.superclass else { continue };
        if find(sup).is_none() {
            diags.push(
                Diagnostic::error(
                    Code::UnknownSuperclass,
                    format!("class `{}` inherits undeclared `{sup}`", c.name),
                )
                .at(Some(c.loc))
                .with_element(c.name.clone()),
            );
            continue;
        }
        // Walk up the chain; a cycle shows up as a repeated class.
        let mut chain = vec![i];
        let mut cur = i;
        while let Some(next) = classes[cur].superclass.as_deref().and_then(find) {
            if let Some(at) = chain.iter().position(|&k| k == next) {
                let cycle: BTreeSet<usize> = chain[at..].iter().copied().collect();
                if reported.insert(cycle.clone()) {
                    let names: Vec<&str> = cycle.iter().map(|&k| classes[k].name.as_str()).collect();
                    diags.push(
                        Diagnostic::error(
                            Code::InheritanceCycle,
                            format!("inheritance cycle through {}", names.join(", ")),
                        )
                        .at(Some(classes[next].loc))
                        .with_element(classes[next].name.clone()),
                    );
                }
                break;
            }
            chain.push(next);
            cur = next;
        }
    }
    if diags.has_errors() {
        return Err(diags);
    }

    let mut resolved: Vec<Option<ClassDecl>> = vec![None; classes.len()];
    for i in 0..classes.len() {
        resolve(i, classes, &mut resolved, &mut diags);
    }
    let out: Vec<ClassDecl> = resolved.into_iter().map(|c| c.expect("resolved")).collect();

    for c in out.iter().filter(|c| c.superclass.is_some()) {
        for m in c.methods.iter().filter(|m| !m.inherited) {
            for a in m.attrs() {
                if c.attribute(a).is_none() {
                    diags.push(
                        Diagnostic::error(
                            Code::UnknownAttribute,
                            format!("method `{}` of `{}` uses undeclared attribute `{a}`", m.name, c.name),
                        )
                        .at(Some(m.loc))
                        .with_element(format!("{}.{}", c.name, m.name)),
                    );
                }
            }
            if let MethodKind::Getter { path } = &m.kind {
                let scalar = c.attribute(&path[0]).is_some_and(|a| a.ty.tag().is_some());
                if path.len() == 2 && scalar {
                    diags.push(
                        Diagnostic::error(
                            Code::UnknownAttribute,
                            format!("`{}` is not an object attribute", path[0]),
                        )
                        .at(Some(m.loc))
                        .with_element(format!("{}.{}", c.name, m.name)),
                    );
                }
            }
        }
    }
    if diags.has_errors() {
        Err(diags)
    } else {
        Ok(out)
    }
}

fn resolve(
    i: usize,
    classes: &[ClassDecl],
    resolved: &mut Vec<Option<ClassDecl>>,
    diags: &mut Diagnostics,
) {
    if resolved[i].is_some() {
        return;
    }
    let c = &classes[i];
    let Some(sup) = &c.superclass else {
        resolved[i] = Some(c.clone());
        return;
    };
    let s = classes.iter().position(|d| &d.name == sup).expect("checked above");
    resolve(s, classes, resolved, diags);
    let parent = resolved[s].as_ref().expect("resolved").clone();

    let mut out = ClassDecl { attributes: Vec::new(), methods: Vec::new(), ..c.clone() };
    for a in &parent.attributes {
        out.attributes.push(crate::classmap::AttrDecl { inherited: true, ..a.clone() });
    }
    for m in &parent.methods {
        out.methods.push(crate::classmap::MethodDef { inherited: true, ..m.clone() });
    }
    for a in &c.attributes {
        if parent.attribute(&a.name).is_some() || a.name == parent.name {
            diags.push(
                Diagnostic::error(
                    Code::InheritanceConflict,
                    format!("`{}` in `{}` collides with an inherited name", a.name, c.name),
                )
                .at(Some(a.loc))
                .with_element(format!("{}.{}", c.name, a.name)),
            );
            continue;
        }
        out.attributes.push(a.clone());
    }
    for m in &c.methods {
        if parent.methods.iter().any(|p| p.name == m.name) {
            diags.push(
                Diagnostic::error(
                    Code::InheritanceConflict,
                    format!("method `{}` in `{}` collides with an inherited method", m.name, c.name),
                )
                .at(Some(m.loc))
                .with_element(format!("{}.{}", c.name, m.name)),
            );
            continue;
        }
        out.methods.push(m.clone());
    }
    resolved[i] = Some(out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classmap::parse_classes;

    fn link(src: &str) -> Result<Vec<ClassDecl>, Diagnostics> {
        link_inheritance(&parse_classes(src).unwrap())
    }

    #[test]
    fn self_inheritance_is_a_cycle() {
        let d = link("class X inherits X {}").unwrap_err();
        assert_eq!(d.count(Code::InheritanceCycle), 1);
    }

    #[test]
    fn unknown_superclass() {
        let d = link("class E inherits Bicycle {}").unwrap_err();
        assert_eq!(d.count(Code::UnknownSuperclass), 1);
    }

    #[test]
    fn subclass_sees_inherited_members_first() {
        let out = link(
            "class car { private fuel : int  get fuel }\n\
             class e inherits car { private n : int  set n (k)  get fuel2 }",
        );
        let d = out.unwrap_err();
        assert_eq!(d.count(Code::UnknownAttribute), 1);
        let out = link(
            "class car { private fuel : int  get fuel }\n\
             class e inherits car { private n : int  set n (k) }",
        )
        .unwrap();
        let names: Vec<&str> = out[1].attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["fuel", "n"]);
        assert_eq!(out[1].methods.len(), 2);
        assert!(out[1].methods[0].inherited);
    }

    #[test]
    fn redeclared_attribute_conflicts() {
        let d = link("class A { private x : int }\nclass B inherits A { private x : int }").unwrap_err();
        assert_eq!(d.count(Code::InheritanceConflict), 1);
    }
}
