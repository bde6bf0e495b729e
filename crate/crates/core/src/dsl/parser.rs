use crate::diag::Loc;
use crate::dsl::ast::*;
use crate::lex::{tokenize, Cursor, ParseError, ParseErrors, Tok};
use crate::model::StageKind;
use crate::value::{Effect, Operand, Value};

const DECL_KEYWORDS: [&str; 8] = [
    "sphere",
    "machine",
    "flow",
    "trigger",
    "storage",
    "event",
    "chronology",
    "method",
];

/// Parses a `.fm` file. Either the whole text parses, or every syntax error
/// is returned (at most one per statement).
pub fn parse_model(text: &str) -> Result<ModelAst, ParseErrors> {
    let (toks, mut errs) = tokenize(text);
    let mut p = Parser { c: Cursor::new(toks), errs: Vec::new() };
    let decls = p.decls(false);
    errs.append(&mut p.errs);
    if errs.is_empty() {
        Ok(ModelAst { decls })
    } else {
        errs.sort_by_key(|e| e.loc);
        Err(ParseErrors(errs))
    }
}

struct Parser {
    c: Cursor,
    errs: Vec<ParseError>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn decls(&mut self, nested: bool) -> Vec<Decl> {
        let mut out = Vec::new();
        loop {
            if self.c.at_eof() || (nested && self.c.is(&Tok::RBrace)) {
                break;
            }
            let start = self.c.pos();
            match self.decl() {
                Ok(d) => out.push(d),
                Err(e) => {
                    self.errs.push(e);
                    self.recover(nested, self.c.pos() == start);
                }
            }
        }
        out
    }

    /// Skips to the start of the next statement, stepping over whole blocks.
    /// `stuck` is set when the failed statement consumed nothing, so at least
    /// one token must go.
    fn recover(&mut self, nested: bool, stuck: bool) {
        let mut first = stuck;
        loop {
            match &self.c.peek().tok {
                Tok::Eof => return,
                // the enclosing sphere closes here
                Tok::RBrace if nested => return,
                Tok::Ident(w) if !first && DECL_KEYWORDS.contains(&w.as_str()) => return,
                Tok::LBrace => {
                    self.c.advance();
                    self.skip_block();
                    first = false;
                    continue;
                }
                _ => {}
            }
            self.c.advance();
            first = false;
        }
    }

    /// Consumes tokens through the `}` matching an already consumed `{`.
    fn skip_block(&mut self) {
        let mut depth = 1usize;
        while !self.c.at_eof() {
            match self.c.advance().tok {
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    depth -= 1;
                    if depth == 0 {
                        return;
                    }
                }
                _ => {}
            }
        }
    }

    /// Runs a block body parser; on failure skips the rest of the block.
    fn block<T>(&mut self, body: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        match body(self) {
            Ok(v) => Ok(v),
            Err(e) => {
                self.skip_block();
                Err(e)
            }
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let word = match &self.c.peek().tok {
            Tok::Ident(w) if DECL_KEYWORDS.contains(&w.as_str()) => w.clone(),
            _ => return Err(self.c.error(&["a declaration"])),
        };
        let loc = self.c.advance().loc;
        match word.as_str() {
            "sphere" => self.sphere(loc),
            "machine" => self.machine(loc),
            "flow" => {
                let from = self.reference()?;
                self.c.expect(Tok::Arrow)?;
                let to = self.reference()?;
                Ok(Decl::Flow(FlowDecl { from, to, loc }))
            }
            "trigger" => {
                let from = self.reference()?;
                self.c.expect(Tok::FatArrow)?;
                let to = self.reference()?;
                let effect = self.effect_opt()?;
                Ok(Decl::Trigger(TriggerDecl { from, to, effect, loc }))
            }
            "storage" => Ok(Decl::Storage(StorageDecl { target: self.reference()?, loc })),
            "event" => self.event(loc),
            "chronology" => self.chronology(loc),
            "method" => self.method(loc),
            _ => unreachable!(),
        }
    }

    fn sphere(&mut self, loc: Loc) -> PResult<Decl> {
        let (name, _) = self.c.ident("sphere name")?;
        self.c.expect(Tok::LBrace)?;
        let body = self.decls(true);
        self.c.expect(Tok::RBrace)?;
        Ok(Decl::Sphere(SphereDecl { name, body, loc }))
    }

    fn machine(&mut self, loc: Loc) -> PResult<Decl> {
        let (name, _) = self.c.ident("machine name")?;
        let type_tag = if self.c.eat(&Tok::Colon) {
            Some(self.c.ident("type name")?.0)
        } else {
            None
        };
        let inherited = self.c.eat_word("inherited");
        self.c.expect(Tok::LBrace)?;
        let stages = self.block(|p| {
            let mut stages = Vec::new();
            if !p.c.is(&Tok::RBrace) {
                stages.push(p.stage()?);
                while p.c.eat(&Tok::Comma) {
                    stages.push(p.stage()?);
                }
            }
            p.c.expect(Tok::RBrace)?;
            Ok(stages)
        })?;
        Ok(Decl::Machine(MachineDecl { name, type_tag, inherited, stages, loc }))
    }

    fn stage(&mut self) -> PResult<StageDecl> {
        let t = self.c.peek().clone();
        let kind = match &t.tok {
            Tok::Ident(w) => StageKind::from_keyword(w),
            _ => None,
        }
        .ok_or_else(|| self.c.error(&["stage kind"]))?;
        self.c.advance();
        let mut decl = StageDecl { kind, store: false, reject: false, loc: t.loc };
        loop {
            if self.c.eat_word("store") {
                decl.store = true;
            } else if kind == StageKind::Accept && self.c.eat_word("reject") {
                decl.reject = true;
            } else {
                break;
            }
        }
        Ok(decl)
    }

    fn reference(&mut self) -> PResult<RefAst> {
        let (first, loc) = self.c.ident("machine name")?;
        let mut segs = vec![(first, loc)];
        while self.c.eat(&Tok::Dot) {
            segs.push(self.c.ident("name or stage kind")?);
        }
        let (last, last_loc) = segs.pop().expect("at least one segment");
        let stage = match StageKind::from_keyword(&last) {
            Some(k) if !segs.is_empty() => k,
            _ => {
                return Err(ParseError {
                    loc: last_loc,
                    expected: vec!["`.` followed by a stage kind".into()],
                    found: format!("`{last}`"),
                })
            }
        };
        Ok(RefAst { path: segs.into_iter().map(|(s, _)| s).collect(), stage, loc })
    }

    fn effect_opt(&mut self) -> PResult<Option<Effect>> {
        if !self.c.eat_word("with") {
            return Ok(None);
        }
        let word = match &self.c.peek().tok {
            Tok::Ident(w) => w.clone(),
            _ => return Err(self.c.error(&["`set`", "`add`", "`sub`", "`output`"])),
        };
        let effect = match word.as_str() {
            "set" => {
                self.c.advance();
                Effect::Set(self.operand()?)
            }
            "add" => {
                self.c.advance();
                Effect::Add(self.operand()?)
            }
            "sub" => {
                self.c.advance();
                Effect::Sub(self.operand()?)
            }
            "output" => {
                self.c.advance();
                match &self.c.peek().tok {
                    Tok::Str(s) => {
                        let s = s.clone();
                        self.c.advance();
                        Effect::Output(Some(s))
                    }
                    _ => Effect::Output(None),
                }
            }
            _ => return Err(self.c.error(&["`set`", "`add`", "`sub`", "`output`"])),
        };
        Ok(Some(effect))
    }

    fn operand(&mut self) -> PResult<Operand> {
        let negative = self.c.eat(&Tok::Minus);
        let t = self.c.peek().clone();
        match (&t.tok, negative) {
            (Tok::Number(n), _) => {
                self.c.advance();
                let v = number_value(n, negative).ok_or_else(|| ParseError {
                    loc: t.loc,
                    expected: vec!["a representable number".into()],
                    found: format!("number {n}"),
                })?;
                Ok(Operand::Lit(v))
            }
            (Tok::Str(s), false) => {
                self.c.advance();
                Ok(Operand::Lit(Value::Str(s.clone())))
            }
            (Tok::Ident(s), false) => {
                self.c.advance();
                Ok(Operand::Arg(s.clone()))
            }
            _ => Err(self.c.error(&["number", "string", "argument name"])),
        }
    }

    fn event(&mut self, loc: Loc) -> PResult<Decl> {
        let (name, _) = self.c.ident("event name")?;
        self.c.expect(Tok::LBrace)?;
        self.block(|p| {
            let mut ev = EventDecl { name, includes: Vec::new(), time: None, duration: None, loc };
            loop {
                let t = p.c.peek().clone();
                if p.c.eat(&Tok::RBrace) {
                    break;
                }
                if p.c.eat_word("include") {
                    let item = if p.c.is_word("flow") && p.c.peek_at(1) != &Tok::Dot {
                        p.c.advance();
                        let a = p.reference()?;
                        p.c.expect(Tok::Arrow)?;
                        IncludeItem::Flow(a, p.reference()?)
                    } else if p.c.is_word("trigger") && p.c.peek_at(1) != &Tok::Dot {
                        p.c.advance();
                        let a = p.reference()?;
                        p.c.expect(Tok::FatArrow)?;
                        let b = p.reference()?;
                        IncludeItem::Trigger(a, b, p.effect_opt()?)
                    } else {
                        IncludeItem::Stage(p.reference()?)
                    };
                    ev.includes.push(Include { item, loc: t.loc });
                } else if ev.time.is_none() && p.c.eat_word("time") {
                    match &p.c.peek().tok {
                        Tok::Str(s) => {
                            ev.time = Some(s.clone());
                            p.c.advance();
                        }
                        _ => return Err(p.c.error(&["string"])),
                    }
                } else if ev.duration.is_none() && p.c.eat_word("duration") {
                    let nt = p.c.peek().clone();
                    match &nt.tok {
                        Tok::Number(n) => {
                            ev.duration = n.parse::<f64>().ok().filter(|d| d.is_finite());
                            if ev.duration.is_none() {
                                return Err(p.c.error(&["a finite number"]));
                            }
                            p.c.advance();
                        }
                        _ => return Err(p.c.error(&["number"])),
                    }
                } else {
                    return Err(p.c.error(&["`include`", "`time`", "`duration`", "`}`"]));
                }
            }
            Ok(Decl::Event(ev))
        })
    }

    fn chronology(&mut self, loc: Loc) -> PResult<Decl> {
        let (name, _) = self.c.ident("chronology name")?;
        self.c.expect(Tok::LBrace)?;
        self.block(|p| {
            let mut arcs = Vec::new();
            while !p.c.eat(&Tok::RBrace) {
                let (a, aloc) = p.c.ident("event name or `}`")?;
                let kind = if p.c.eat(&Tok::Arrow) {
                    ArcKind::Succession(a, p.c.ident("event name")?.0)
                } else if p.c.eat(&Tok::Pipe) {
                    ArcKind::Alternative(a, p.c.ident("event name")?.0)
                } else if p.c.eat_word("repeat") {
                    let nt = p.c.peek().clone();
                    let n = match &nt.tok {
                        Tok::Number(n) => n.parse::<u64>().ok(),
                        _ => None,
                    }
                    .ok_or_else(|| p.c.error(&["non-negative integer"]))?;
                    p.c.advance();
                    ArcKind::Repeat(a, n)
                } else {
                    return Err(p.c.error(&["`->`", "`|`", "`repeat`"]));
                };
                arcs.push(Arc { kind, loc: aloc });
            }
            Ok(Decl::Chronology(ChronologyDecl { name, arcs, loc }))
        })
    }

    fn method(&mut self, loc: Loc) -> PResult<Decl> {
        let (name, _) = self.c.ident("method name")?;
        self.c.expect(Tok::Eq)?;
        self.c.expect(Tok::LParen)?;
        let mut events = Vec::new();
        if !self.c.is(&Tok::RParen) {
            events.push(self.c.ident("event name")?.0);
            while self.c.eat(&Tok::Comma) {
                events.push(self.c.ident("event name")?.0);
            }
        }
        self.c.expect(Tok::RParen)?;
        Ok(Decl::Method(MethodDecl { name, events, loc }))
    }
}

pub(crate) fn number_value(text: &str, negative: bool) -> Option<Value> {
    if text.contains('.') {
        let r: f64 = text.parse().ok()?;
        r.is_finite().then_some(Value::Real(if negative { -r } else { r }))
    } else {
        let s = if negative { format!("-{text}") } else { text.to_string() };
        s.parse::<i64>().ok().map(Value::Int)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_an_empty_model() {
        assert_eq!(parse_model("").unwrap(), ModelAst::default());
        assert_eq!(parse_model("  # only a comment\n").unwrap(), ModelAst::default());
    }

    #[test]
    fn hour_machine_inside_time() {
        let ast = parse_model("sphere Time { machine hour { create, release, transfer } }").unwrap();
        assert_eq!(ast.decls.len(), 1);
        let Decl::Sphere(s) = &ast.decls[0] else { panic!() };
        assert_eq!(s.name, "Time");
        assert_eq!(s.body.len(), 1);
        let Decl::Machine(m) = &s.body[0] else { panic!() };
        assert_eq!(m.stages.len(), 3);
        assert_eq!(m.stages[0].kind, StageKind::Create);
    }

    #[test]
    fn dangling_arrow_is_reported_after_the_arrow() {
        let errs = parse_model("flow hour.release ->").unwrap_err();
        assert_eq!(errs.0.len(), 1);
        assert_eq!(errs.0[0].loc.line, 1);
        assert!(errs.0[0].loc.col > 18, "{:?}", errs.0[0]);
        assert_eq!(errs.0[0].found, "end of input");
    }

    #[test]
    fn one_error_per_statement_with_resync() {
        let src = "machine a { create, bogus }\nflow a.create -> \nmachine b { create }\nflow a ->";
        let errs = parse_model(src).unwrap_err();
        assert_eq!(errs.0.len(), 3, "{errs}");
        assert_eq!(errs.0[0].loc.line, 1);
        assert_eq!(errs.0[1].loc.line, 3);
        assert_eq!(errs.0[2].loc.line, 4);
    }

    #[test]
    fn trigger_effects_and_event_items() {
        let src = r#"
            machine c { create, process }
            trigger c.create => c.process with sub -1
            event e {
              include c.create
              include flow c.create -> c.process
              include trigger c.create => c.process with output "{}"
              time "noon"
              duration 2.5
            }
            chronology k { e repeat 2  e -> f  f | g }
            method m = (e, f)
            method none = ()
        "#;
        let ast = parse_model(src).unwrap();
        let Decl::Trigger(t) = &ast.decls[1] else { panic!() };
        assert_eq!(t.effect, Some(Effect::Sub(Operand::Lit(Value::Int(-1)))));
        let Decl::Event(e) = &ast.decls[2] else { panic!() };
        assert_eq!(e.includes.len(), 3);
        assert_eq!(e.time.as_deref(), Some("noon"));
        assert_eq!(e.duration, Some(2.5));
        let Decl::Chronology(c) = &ast.decls[3] else { panic!() };
        assert_eq!(c.arcs.len(), 3);
        let Decl::Method(m) = &ast.decls[5] else { panic!() };
        assert!(m.events.is_empty());
    }

    #[test]
    fn keyword_like_names_are_contextual() {
        let src = "machine flow { create }\nevent time { include flow.create }";
        let ast = parse_model(src).unwrap();
        let Decl::Event(e) = &ast.decls[1] else { panic!() };
        assert!(matches!(e.includes[0].item, IncludeItem::Stage(_)));
    }

    #[test]
    fn reference_must_end_in_a_stage() {
        assert!(parse_model("flow a.b -> c.create").is_err());
        assert!(parse_model("flow create -> c.create").is_err());
    }

    #[test]
    fn unclosed_sphere_is_an_error() {
        let errs = parse_model("sphere A { machine m { create }").unwrap_err();
        assert_eq!(errs.0.len(), 1);
    }
}
