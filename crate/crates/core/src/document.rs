//! A loaded `.fm` file: syntax tree, built model, bound events,
//! chronologies and methods.

use std::fmt;

use crate::diag::{Code, Diagnostic, Diagnostics, Loc};
use crate::dsl::ast::{Decl, ModelAst};
use crate::dsl::{parse_model, print_model};
use crate::events::{
    bind_event, bind_method, validate_chronology, Chronology, Event, EventId, MethodId,
    MethodSpec,
};
use crate::lex::ParseErrors;
use crate::model::{build_model, validate, Model, SphereId};

#[derive(Clone, Debug)]
pub struct Document {
    pub ast: ModelAst,
    pub model: Model,
    pub events: Vec<Event>,
    pub chronologies: Vec<Chronology>,
    pub methods: Vec<MethodSpec>,
    /// Warnings raised while binding events.
    pub binding_warnings: Diagnostics,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}")]
    Parse(ParseErrors),
    #[error("{0}")]
    Semantic(Diagnostics),
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, LoadError> {
        let ast = parse_model(text).map_err(LoadError::Parse)?;
        Document::from_ast(ast).map_err(LoadError::Semantic)
    }

    /// Builds the model and binds everything layered on it. On failure the
    /// returned diagnostics include every problem found, static-model
    /// violations among them when the model itself could be built.
    pub fn from_ast(ast: ModelAst) -> Result<Document, Diagnostics> {
        let model = build_model(&ast)?;
        let mut errs = Diagnostics::new();
        let mut warnings = Diagnostics::new();

        let mut scoped: Vec<(Option<SphereId>, &Decl)> = Vec::new();
        let mut cursor = 0u32;
        collect_scoped(&ast.decls, None, &mut cursor, &mut scoped);

        let mut names: Vec<(String, Loc)> = Vec::new();
        let mut check_name = |name: &str, loc: Loc, errs: &mut Diagnostics| {
            if names.iter().any(|(n, _)| n == name) {
                errs.push(
                    Diagnostic::error(
                        Code::DuplicateName,
                        format!("`{name}` is already declared as an event, chronology or method"),
                    )
                    .at(Some(loc))
                    .with_element(name.to_string()),
                );
            } else {
                names.push((name.to_string(), loc));
            }
        };

        let mut events = Vec::new();
        for (scope, decl) in &scoped {
            if let Decl::Event(e) = decl {
                check_name(&e.name, e.loc, &mut errs);
                match bind_event(&model, *scope, e, EventId(events.len() as u32)) {
                    Ok((ev, w)) => {
                        events.push(ev);
                        warnings.extend(w);
                    }
                    Err(d) => errs.extend(d),
                }
            }
        }
        let mut chronologies = Vec::new();
        let mut methods = Vec::new();
        for (_, decl) in &scoped {
            match decl {
                Decl::Chronology(c) => {
                    check_name(&c.name, c.loc, &mut errs);
                    match Chronology::from_decl(c, &events) {
                        Ok(ch) => chronologies.push(ch),
                        Err(d) => errs.extend(d),
                    }
                }
                Decl::Method(m) => {
                    check_name(&m.name, m.loc, &mut errs);
                    match bind_method(&model, m, &events, MethodId(methods.len() as u32)) {
                        Ok(ms) => methods.push(ms),
                        Err(d) => errs.extend(d),
                    }
                }
                _ => {}
            }
        }

        if errs.has_errors() {
            let mut all = validate(&model);
            all.extend(errs);
            return Err(all);
        }
        Ok(Document { ast, model, events, chronologies, methods, binding_warnings: warnings })
    }

    /// Every diagnostic for the loaded file: static-model checks, event
    /// binding warnings and chronology checks.
    pub fn validate(&self) -> Diagnostics {
        let mut d = validate(&self.model);
        d.extend(self.binding_warnings.clone());
        for c in &self.chronologies {
            d.extend(validate_chronology(&self.events, c));
        }
        d
    }

    pub fn to_dsl(&self) -> String {
        print_model(&self.ast)
    }

    pub fn event(&self, id: EventId) -> &Event {
        &self.events[id.index()]
    }

    pub fn event_by_name(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn method_by_name(&self, name: &str) -> Option<&MethodSpec> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn chronology_by_name(&self, name: &str) -> Option<&Chronology> {
        self.chronologies.iter().find(|c| c.name == name)
    }

    /// Event names of a method, in order.
    pub fn method_event_names(&self, m: &MethodSpec) -> Vec<&str> {
        m.events.iter().map(|&e| self.event(e).name.as_str()).collect()
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

/// Flattens the declarations, pairing each with its enclosing sphere.
/// Spheres are numbered in pre-order, matching the model builder.
fn collect_scoped<'a>(
    decls: &'a [Decl],
    scope: Option<SphereId>,
    cursor: &mut u32,
    out: &mut Vec<(Option<SphereId>, &'a Decl)>,
) {
    for d in decls {
        out.push((scope, d));
        if let Decl::Sphere(s) = d {
            let id = SphereId(*cursor);
            *cursor += 1;
            collect_scoped(&s.body, Some(id), cursor, out);
        }
    }
}
