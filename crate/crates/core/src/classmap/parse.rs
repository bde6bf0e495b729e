use crate::classmap::{AttrDecl, AttrType, ClassDecl, MethodDef, MethodKind, Sign, Visibility};
use crate::diag::Loc;
use crate::dsl::number_value;
use crate::lex::{tokenize, Cursor, ParseError, ParseErrors, Tok};
use crate::value::{Operand, Value};

const BODY_KEYWORDS: [&str; 5] = ["constructor", "set", "get", "update", "output"];

/// Parses a `.cls` file. Besides syntax, each class is checked for
/// duplicate member names, setter arity, and (for classes without a
/// superclass) references to undeclared attributes.
pub fn parse_classes(text: &str) -> Result<Vec<ClassDecl>, ParseErrors> {
    let (toks, mut errs) = tokenize(text);
    let mut c = Cursor::new(toks);
    let mut classes = Vec::new();
    while !c.at_eof() {
        let start = c.pos();
        match class(&mut c) {
            Ok(cl) => {
                errs.extend(check(&cl));
                classes.push(cl);
            }
            Err(e) => {
                errs.push(e);
                if c.pos() == start {
                    c.advance();
                }
                skip_to_next_class(&mut c);
            }
        }
    }
    if errs.is_empty() {
        Ok(classes)
    } else {
        errs.sort_by_key(|e| e.loc);
        Err(ParseErrors(errs))
    }
}

fn skip_to_next_class(c: &mut Cursor) {
    let mut depth = 0usize;
    while !c.at_eof() {
        match &c.peek().tok {
            Tok::Ident(w) if w == "class" && depth == 0 => return,
            Tok::LBrace => depth += 1,
            Tok::RBrace => depth = depth.saturating_sub(1),
            _ => {}
        }
        c.advance();
    }
}

fn class(c: &mut Cursor) -> Result<ClassDecl, ParseError> {
    let loc = c.expect_word("class")?.loc;
    let (name, _) = c.ident("class name")?;
    let superclass = if c.eat_word("inherits") {
        Some(c.ident("superclass name")?.0)
    } else {
        None
    };
    c.expect(Tok::LBrace)?;
    let mut cl = ClassDecl { name, superclass, attributes: Vec::new(), methods: Vec::new(), loc };
    while !c.eat(&Tok::RBrace) {
        if c.eat(&Tok::Semi) {
            continue;
        }
        member(c, &mut cl)?;
    }
    Ok(cl)
}

fn member(c: &mut Cursor, cl: &mut ClassDecl) -> Result<(), ParseError> {
    let t = c.peek().clone();
    let Tok::Ident(word) = &t.tok else {
        return Err(c.error(&["attribute", "method", "`}`"]));
    };
    if (word == "public" || word == "private") && c.peek_at(1) != &Tok::Eq {
        c.advance();
        let visibility = if word == "public" { Visibility::Public } else { Visibility::Private };
        let (name, _) = c.ident("attribute name")?;
        c.expect(Tok::Colon)?;
        let ty = attr_type(c)?;
        let init = if c.eat(&Tok::Eq) { Some(scalar(c)?) } else { None };
        cl.attributes.push(AttrDecl { name, ty, visibility, init, inherited: false, loc: t.loc });
        return Ok(());
    }
    let explicit = if c.peek_at(1) == &Tok::Eq {
        let (n, _) = c.ident("method name")?;
        c.advance();
        Some(n)
    } else {
        None
    };
    let (kind, default_name) = body(c, &cl.name)?;
    cl.methods.push(MethodDef {
        name: explicit.unwrap_or(default_name),
        kind,
        inherited: false,
        loc: t.loc,
    });
    Ok(())
}

fn attr_type(c: &mut Cursor) -> Result<AttrType, ParseError> {
    let ty = match &c.peek().tok {
        Tok::Ident(w) if w == "int" => AttrType::Int,
        Tok::Ident(w) if w == "real" => AttrType::Real,
        Tok::Ident(w) if w == "string" => AttrType::Str,
        Tok::Ident(w) if w == "object" => {
            c.advance();
            c.expect(Tok::Colon)?;
            return Ok(AttrType::Object(c.ident("class name")?.0));
        }
        _ => return Err(c.error(&["`int`", "`real`", "`string`", "`object`"])),
    };
    c.advance();
    Ok(ty)
}

fn scalar(c: &mut Cursor) -> Result<Value, ParseError> {
    match operand(c)? {
        Operand::Lit(v) => Ok(v),
        Operand::Arg(_) => Err(ParseError {
            loc: c.peek().loc,
            expected: vec!["number".into(), "string".into()],
            found: "a name".into(),
        }),
    }
}

fn operand(c: &mut Cursor) -> Result<Operand, ParseError> {
    let negative = c.eat(&Tok::Minus);
    let t = c.peek().clone();
    let op = match (&t.tok, negative) {
        (Tok::Number(n), _) => Operand::Lit(number_value(n, negative).ok_or_else(|| ParseError {
            loc: t.loc,
            expected: vec!["a representable number".into()],
            found: format!("number {n}"),
        })?),
        (Tok::Str(s), false) => Operand::Lit(Value::Str(s.clone())),
        (Tok::Ident(s), false) => Operand::Arg(s.clone()),
        _ => return Err(c.error(&["number", "string", "parameter name"])),
    };
    c.advance();
    Ok(op)
}

fn names(c: &mut Cursor, what: &str) -> Result<Vec<String>, ParseError> {
    let mut out = vec![c.ident(what)?.0];
    while c.eat(&Tok::Comma) {
        out.push(c.ident(what)?.0);
    }
    Ok(out)
}

fn body(c: &mut Cursor, class: &str) -> Result<(MethodKind, String), ParseError> {
    let word = match &c.peek().tok {
        Tok::Ident(w) if BODY_KEYWORDS.contains(&w.as_str()) => w.clone(),
        _ => {
            return Err(c.error(&[
                "`public`",
                "`private`",
                "`constructor`",
                "`set`",
                "`get`",
                "`update`",
                "`output`",
            ]))
        }
    };
    c.advance();
    Ok(match word.as_str() {
        "constructor" => {
            c.expect(Tok::LParen)?;
            let params = if c.is(&Tok::RParen) { Vec::new() } else { names(c, "parameter")? };
            c.expect(Tok::RParen)?;
            (MethodKind::Constructor { params }, class.to_string())
        }
        "set" => {
            let attrs = names(c, "attribute name")?;
            c.expect(Tok::LParen)?;
            let params = names(c, "parameter")?;
            c.expect(Tok::RParen)?;
            let name = format!("set{}", attrs.concat());
            (MethodKind::Setter { attrs, params }, name)
        }
        "get" => {
            let mut path = vec![c.ident("attribute name")?.0];
            if c.eat(&Tok::Dot) {
                path.push(c.ident("attribute name")?.0);
            }
            let name = format!("get{}", path.concat());
            (MethodKind::Getter { path }, name)
        }
        "update" => {
            let (attr, _) = c.ident("attribute name")?;
            let sign = if c.eat(&Tok::Plus) {
                Sign::Plus
            } else if c.eat(&Tok::Minus) {
                Sign::Minus
            } else {
                return Err(c.error(&["`+`", "`-`"]));
            };
            let operand = operand(c)?;
            let name = format!("update{attr}");
            (MethodKind::Update { attr, sign, operand }, name)
        }
        _ => {
            let attrs = names(c, "attribute name")?;
            let format = if c.eat_word("format") {
                match c.peek().tok.clone() {
                    Tok::Str(s) => {
                        c.advance();
                        Some(s)
                    }
                    _ => return Err(c.error(&["format string"])),
                }
            } else {
                None
            };
            let name = format!("output{}", attrs.concat());
            (MethodKind::Output { attrs, format }, name)
        }
    })
}

fn semantic(loc: Loc, expected: &str, found: String) -> ParseError {
    ParseError { loc, expected: vec![expected.into()], found }
}

/// Checks that need the whole class but not other classes.
fn check(cl: &ClassDecl) -> Vec<ParseError> {
    let mut errs = Vec::new();
    for (i, a) in cl.attributes.iter().enumerate() {
        if cl.attributes[..i].iter().any(|b| b.name == a.name) {
            errs.push(semantic(a.loc, "a new attribute name", format!("duplicate `{}`", a.name)));
        }
        if let (Some(v), Some(tag)) = (&a.init, a.ty.tag()) {
            let fits = matches!(
                (tag, v),
                ("int", Value::Int(_)) | ("real", Value::Int(_) | Value::Real(_)) | ("string", Value::Str(_))
            );
            if !fits {
                errs.push(semantic(a.loc, &format!("a {tag} initializer"), format!("{v}")));
            }
        }
        if a.init.is_some() && a.ty.tag().is_none() {
            errs.push(semantic(a.loc, "no initializer on an object attribute", "`=`".into()));
        }
    }
    for (i, m) in cl.methods.iter().enumerate() {
        if cl.methods[..i].iter().any(|n| n.name == m.name) {
            errs.push(semantic(m.loc, "a new method name", format!("duplicate `{}`", m.name)));
        }
        if let MethodKind::Setter { attrs, params } = &m.kind {
            if attrs.len() != params.len() {
                errs.push(semantic(
                    m.loc,
                    &format!("{} parameters", attrs.len()),
                    format!("{}", params.len()),
                ));
            }
        }
        // With a superclass, unknown names may be inherited; linking decides.
        if cl.superclass.is_none() {
            for a in m.attrs() {
                if cl.attribute(a).is_none() {
                    errs.push(semantic(m.loc, "a declared attribute", format!("`{a}`")));
                }
            }
            if let MethodKind::Getter { path } = &m.kind {
                if path.len() == 2 {
                    if let Some(attr) = cl.attribute(&path[0]) {
                        if attr.ty.tag().is_some() {
                            errs.push(semantic(m.loc, "an object attribute", format!("`{}`", path[0])));
                        }
                    }
                }
            }
        }
    }
    errs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_class() {
        let cls = parse_classes("class A {}").unwrap();
        assert_eq!(cls.len(), 1);
        assert!(cls[0].attributes.is_empty() && cls[0].methods.is_empty());
    }

    #[test]
    fn members_and_default_names() {
        let src = r#"
            class car {
                private maxSpeed : int
                public fuel : int = 0
                setSpeed = set maxSpeed (s)
                get fuel
                update fuel - 1;
                show = output fuel, maxSpeed format "{}!"
            }
        "#;
        let cls = parse_classes(src).unwrap();
        let names: Vec<&str> = cls[0].methods.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["setSpeed", "getfuel", "updatefuel", "show"]);
        assert_eq!(cls[0].attributes[1].init, Some(Value::Int(0)));
    }

    #[test]
    fn undeclared_setter_target() {
        let errs = parse_classes("class A { private x : int\n set y (v) }").unwrap_err();
        assert_eq!(errs.0.len(), 1);
        assert_eq!(errs.0[0].loc.line, 2);
    }

    #[test]
    fn setter_arity_and_duplicates() {
        let src = "class A { private x : int  private x : int  set x (a, b) }";
        assert_eq!(parse_classes(src).unwrap_err().0.len(), 2);
    }

    #[test]
    fn subclass_may_name_inherited_attributes() {
        assert!(parse_classes("class B inherits A { get fuel }").is_ok());
    }

    #[test]
    fn one_error_per_broken_class() {
        let errs = parse_classes("class A { private }\nclass B { get }\nclass C {}").unwrap_err();
        assert_eq!(errs.0.len(), 2);
    }
}
