use std::collections::{BTreeMap, VecDeque};

use crate::document::Document;
use crate::events::{admissible, Chronology, Event, EventId, MethodSpec};
use crate::model::{legal_flow, FlowId, MachineId, Model, StageKind, StageRef, StorageId, TriggerId};
use crate::sim::trace::{Action, Location, TokenId, Trace, TraceRecord};
use crate::value::{ArithError, Effect, Value};

pub const DEFAULT_MAX_STEPS: u64 = 10_000;

/// A thing instance moving through the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub id: TokenId,
    pub payload: Value,
    pub location: Location,
    /// The machine that created it.
    pub home: MachineId,
    /// Set while the token sits at a transfer stage on its way out of the
    /// machine it was released from.
    pub outbound: bool,
    /// Made by an output effect; never mistaken for an attribute's value
    /// holder.
    pub copy: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Activation {
    pub stage: StageRef,
    pub trigger: TriggerId,
    pub effect: Option<Effect>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimState {
    /// Every token ever created, indexed by id.
    pub tokens: Vec<Token>,
    /// Current value per machine; re-creation overwrites.
    pub values: BTreeMap<MachineId, Value>,
    pub queue: VecDeque<Activation>,
    pub step: u64,
}

impl SimState {
    pub fn new() -> Self {
        SimState::default()
    }

    pub fn created(&self) -> usize {
        self.tokens.len()
    }

    pub fn resident(&self) -> usize {
        self.tokens.iter().filter(|t| matches!(t.location, Location::Stage(_))).count()
    }

    pub fn stored(&self) -> usize {
        self.tokens.iter().filter(|t| matches!(t.location, Location::Storage(_))).count()
    }

    pub fn emitted(&self) -> usize {
        self.tokens.iter().filter(|t| t.location == Location::Environment).count()
    }

    pub fn value(&self, machine: MachineId) -> Option<&Value> {
        self.values.get(&machine)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub max_steps: u64,
    pub bindings: BTreeMap<String, Value>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { max_steps: DEFAULT_MAX_STEPS, bindings: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("step limit of {limit} exceeded")]
    StepLimitExceeded { limit: u64 },
    #[error("method `{method}` needs argument `{param}`")]
    MissingArgument { method: String, param: String },
    #[error("sequence is not admissible under chronology `{chronology}`")]
    InadmissibleSequence { chronology: String },
    #[error("at {machine}: {source}")]
    Arith { machine: String, source: ArithError },
    #[error("at {machine}: a {found} value does not fit type {expected}")]
    TypeMismatch { machine: String, expected: String, found: &'static str },
}

/// A token left at a stage it cannot leave and that is neither a release,
/// a transfer nor a storage point.
#[derive(Clone, Debug, PartialEq)]
pub struct StuckToken {
    pub step: u64,
    pub token: TokenId,
    pub stage: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub state: SimState,
    pub trace: Trace,
    pub stuck: Vec<StuckToken>,
}

/// Runs events one after another over a shared state.
pub struct Simulator<'a> {
    model: &'a Model,
    events: &'a [Event],
    config: SimConfig,
    state: SimState,
    trace: Trace,
    stuck: Vec<StuckToken>,
    occurrences: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(doc: &'a Document, config: SimConfig) -> Self {
        Simulator::over(&doc.model, &doc.events, config, SimState::new())
    }

    pub fn over(model: &'a Model, events: &'a [Event], config: SimConfig, state: SimState) -> Self {
        Simulator {
            model,
            events,
            config,
            state,
            trace: Trace::default(),
            stuck: Vec::new(),
            occurrences: 0,
        }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn run_event(&mut self, id: EventId) -> Result<(), SimError> {
        self.run_event_at(id.index())
    }

    /// Runs a method's events in order with `args` bound on top of the
    /// configured bindings.
    pub fn run_method(
        &mut self,
        method: &MethodSpec,
        args: &BTreeMap<String, Value>,
    ) -> Result<(), SimError> {
        let saved = self.config.bindings.clone();
        self.config.bindings.extend(args.iter().map(|(k, v)| (k.clone(), v.clone())));
        if let Some(p) = method.params.iter().find(|p| !self.config.bindings.contains_key(*p)) {
            self.config.bindings = saved;
            return Err(SimError::MissingArgument { method: method.name.clone(), param: p.clone() });
        }
        let result = method.events.iter().try_for_each(|&e| self.run_event(e));
        self.config.bindings = saved;
        result
    }

    pub fn finish(self) -> SimOutcome {
        SimOutcome { state: self.state, trace: self.trace, stuck: self.stuck }
    }
}

/// Executes one event against `state`, returning the new state and the
/// records it produced.
pub fn execute_event(
    model: &Model,
    state: SimState,
    event: &Event,
    config: &SimConfig,
) -> Result<(SimState, Vec<TraceRecord>, Vec<StuckToken>), SimError> {
    let events = std::slice::from_ref(event);
    let mut sim = Simulator::over(model, events, config.clone(), state);
    // The slice holds exactly this event, whatever its id.
    sim.run_event_at(0)?;
    let out = sim.finish();
    Ok((out.state, out.trace.records, out.stuck))
}

impl Simulator<'_> {
    fn run_event_at(&mut self, index: usize) -> Result<(), SimError> {
        let event = &self.events[index];
        let mut run = Run {
            model: self.model,
            config: &self.config,
            state: &mut self.state,
            records: &mut self.trace.records,
            stuck: &mut self.stuck,
            event,
            occurrence: self.occurrences,
        };
        self.occurrences += 1;
        run.execute()
    }
}

pub fn run_method(
    doc: &Document,
    state: SimState,
    method: &MethodSpec,
    args: &BTreeMap<String, Value>,
    config: &SimConfig,
) -> Result<SimOutcome, SimError> {
    let mut sim = Simulator::over(&doc.model, &doc.events, config.clone(), state);
    sim.run_method(method, args)?;
    Ok(sim.finish())
}

/// Folds the events of `seq` over an empty initial state. When a chronology
/// is given a non-empty sequence must be admissible under it.
pub fn simulate_sequence(
    doc: &Document,
    seq: &[EventId],
    chronology: Option<&Chronology>,
    config: &SimConfig,
) -> Result<SimOutcome, SimError> {
    if let Some(c) = chronology {
        if !seq.is_empty() && !admissible(c, seq) {
            return Err(SimError::InadmissibleSequence { chronology: c.name.clone() });
        }
    }
    let mut sim = Simulator::new(doc, config.clone());
    for &e in seq {
        sim.run_event(e)?;
    }
    Ok(sim.finish())
}

struct Run<'r> {
    model: &'r Model,
    config: &'r SimConfig,
    state: &'r mut SimState,
    records: &'r mut Vec<TraceRecord>,
    stuck: &'r mut Vec<StuckToken>,
    event: &'r Event,
    occurrence: usize,
}

struct Rec {
    action: Action,
    machine: MachineId,
    token: Option<TokenId>,
    before: Option<Value>,
    after: Option<Value>,
    from: Option<Location>,
    to: Option<Location>,
    via: Option<FlowId>,
}

impl Rec {
    fn bare(action: Action, machine: MachineId) -> Rec {
        Rec { action, machine, token: None, before: None, after: None, from: None, to: None, via: None }
    }
}

impl Run<'_> {
    fn execute(&mut self) -> Result<(), SimError> {
        let region = &self.event.region;
        let sources: Vec<StageRef> = region
            .stages
            .iter()
            .copied()
            .filter(|&s| {
                !region.flows.iter().any(|&f| self.model.flow(f).to == s)
                    && !region.triggers.iter().any(|&t| self.model.trigger(t).to == s)
            })
            .collect();
        let waiting: Vec<StageRef> = region
            .stages
            .iter()
            .copied()
            .filter(|s| !sources.contains(s) && self.resident_at(*s).is_some())
            .collect();
        for s in sources.into_iter().chain(waiting) {
            self.activate(s, None)?;
        }
        while let Some(a) = self.state.queue.pop_front() {
            let from = self.model.trigger(a.trigger).from;
            self.record(Rec::bare(Action::TriggerFire, from.machine))?;
            self.activate(a.stage, a.effect.as_ref())?;
        }
        Ok(())
    }

    fn record(&mut self, r: Rec) -> Result<(), SimError> {
        if self.state.step >= self.config.max_steps {
            return Err(SimError::StepLimitExceeded { limit: self.config.max_steps });
        }
        self.state.step += 1;
        self.records.push(TraceRecord {
            step: self.state.step,
            event: self.event.name.clone(),
            action: r.action,
            machine: self.model.machine_path(r.machine),
            token: r.token,
            payload_before: r.before,
            payload_after: r.after,
            event_id: self.event.id,
            occurrence: self.occurrence,
            machine_id: r.machine,
            from: r.from,
            to: r.to,
            via: r.via,
        });
        Ok(())
    }

    fn first_token(&self, pred: impl Fn(&Token) -> bool) -> Option<usize> {
        self.state.tokens.iter().position(pred)
    }

    fn resident_at(&self, s: StageRef) -> Option<usize> {
        self.first_token(|t| t.location == Location::Stage(s))
    }

    fn storage_at(&self, s: StageRef) -> Option<StorageId> {
        self.model.storages_at(s).next().map(|st| st.id)
    }

    fn held_at(&self, s: StageRef) -> Option<usize> {
        self.resident_at(s).or_else(|| {
            let ids: Vec<StorageId> = self.model.storages_at(s).map(|st| st.id).collect();
            self.first_token(|t| matches!(t.location, Location::Storage(k) if ids.contains(&k)))
        })
    }

    /// Finds the token an activation of `s` works on: one resident at `s`,
    /// one in its storage, or one a declared flow can bring in.
    fn pull(&self, s: StageRef) -> Option<(usize, Option<FlowId>)> {
        if let Some(i) = self.held_at(s) {
            return Some((i, None));
        }
        self.model
            .flows
            .iter()
            .filter(|f| f.to == s && legal_flow(f.from, f.to))
            .find_map(|f| self.held_at(f.from).map(|i| (i, Some(f.id))))
    }

    /// The token holding a machine's value, wherever it rests in the machine.
    fn value_holder(&self, m: MachineId) -> Option<usize> {
        self.first_token(|t| {
            t.home == m
                && !t.copy
                && match t.location {
                    Location::Stage(s) => s.machine == m,
                    Location::Storage(k) => self.model.storage(k).stage.machine == m,
                    Location::Environment => false,
                }
        })
    }

    fn base_value(&self, m: MachineId) -> Value {
        self.state
            .values
            .get(&m)
            .cloned()
            .or_else(|| self.model.machine(m).type_tag.as_deref().and_then(Value::zero_for))
            .unwrap_or_else(Value::unit)
    }

    fn apply(&self, m: MachineId, effect: Option<&Effect>, v: Value) -> Result<Value, SimError> {
        let machine = || self.model.machine_path(m);
        let operand = |o: &crate::value::Operand| {
            o.resolve(&self.config.bindings).ok_or_else(|| SimError::MissingArgument {
                method: self.event.name.clone(),
                param: o.to_string(),
            })
        };
        let out = match effect {
            None | Some(Effect::Output(_)) => return Ok(v),
            Some(Effect::Set(o)) => operand(o)?,
            Some(Effect::Add(o)) => {
                v.add(&operand(o)?).map_err(|e| SimError::Arith { machine: machine(), source: e })?
            }
            Some(Effect::Sub(o)) => {
                v.sub(&operand(o)?).map_err(|e| SimError::Arith { machine: machine(), source: e })?
            }
        };
        conform(self.model.machine(m).type_tag.as_deref(), out).map_err(|found| {
            SimError::TypeMismatch {
                machine: machine(),
                expected: self.model.machine(m).type_tag.clone().unwrap_or_default(),
                found,
            }
        })
    }

    fn set_payload(&mut self, i: usize, v: Value) {
        let t = &mut self.state.tokens[i];
        t.payload = v.clone();
        if !t.copy {
            self.state.values.insert(t.home, v);
        }
    }

    fn spawn(&mut self, s: StageRef, payload: Value, copy: bool) -> usize {
        let id = TokenId(self.state.tokens.len() as u32 + 1);
        self.state.tokens.push(Token {
            id,
            payload: payload.clone(),
            location: Location::Stage(s),
            home: s.machine,
            outbound: false,
            copy,
        });
        if !copy {
            self.state.values.insert(s.machine, payload);
        }
        self.state.tokens.len() - 1
    }

    fn fire(&mut self, s: StageRef) {
        for &t in &self.event.region.triggers {
            let trig = self.model.trigger(t);
            if trig.from == s {
                self.state.queue.push_back(Activation {
                    stage: trig.to,
                    trigger: t,
                    effect: trig.effect.clone(),
                });
            }
        }
    }

    fn activate(&mut self, s: StageRef, effect: Option<&Effect>) -> Result<(), SimError> {
        let m = s.machine;
        let action = Action::for_stage(s.stage);
        let (i, from, via, before) = match self.pull(s) {
            Some((i, via)) => {
                let t = &self.state.tokens[i];
                (i, Some(t.location), via, Some(t.payload.clone()))
            }
            None if s.stage == StageKind::Create => {
                let rewrites = matches!(effect, Some(Effect::Set(_) | Effect::Add(_) | Effect::Sub(_)));
                if let (true, Some(i)) = (rewrites, self.value_holder(m)) {
                    // The value is overwritten where it rests.
                    let old = self.state.tokens[i].payload.clone();
                    let new = self.apply(m, effect, old.clone())?;
                    self.set_payload(i, new.clone());
                    let loc = self.state.tokens[i].location;
                    self.record(Rec {
                        action,
                        machine: m,
                        token: Some(self.state.tokens[i].id),
                        before: Some(old),
                        after: Some(new),
                        from: Some(loc),
                        to: Some(loc),
                        via: None,
                    })?;
                    self.fire(s);
                    return Ok(());
                }
                let payload = self.apply(m, effect, self.base_value(m))?;
                let i = self.spawn(s, payload, false);
                (i, None, None, None)
            }
            None => {
                self.record(Rec::bare(action, m))?;
                self.fire(s);
                return Ok(());
            }
        };

        if from.is_some() {
            self.move_to(i, s, via);
        }
        let after = if before.is_some() {
            let v = self.apply(m, effect, self.state.tokens[i].payload.clone())?;
            self.set_payload(i, v.clone());
            v
        } else {
            self.state.tokens[i].payload.clone()
        };
        self.record(Rec {
            action,
            machine: m,
            token: Some(self.state.tokens[i].id),
            before,
            after: Some(after.clone()),
            from,
            to: Some(Location::Stage(s)),
            via,
        })?;
        self.fire(s);

        if let Some(Effect::Output(fmt)) = effect {
            let payload = match fmt {
                Some(f) => Value::Str(f.replace("{}", &plain(&after))),
                None => after.clone(),
            };
            let c = self.spawn(s, payload.clone(), true);
            self.record(Rec {
                action: Action::Create,
                machine: m,
                token: Some(self.state.tokens[c].id),
                before: Some(after),
                after: Some(payload),
                from: None,
                to: Some(Location::Stage(s)),
                via: None,
            })?;
            self.route(c, s)?;
            self.rest(i, s)
        } else {
            self.route(i, s)
        }
    }

    fn move_to(&mut self, i: usize, s: StageRef, via: Option<FlowId>) {
        let outbound = match via.map(|f| self.model.flow(f).from) {
            Some(prev) => {
                s.stage == StageKind::Transfer
                    && prev.machine == s.machine
                    && prev.stage == StageKind::Release
            }
            None => self.state.tokens[i].outbound,
        };
        let t = &mut self.state.tokens[i];
        t.location = Location::Stage(s);
        t.outbound = outbound;
    }

    /// The in-region flow a token at `s` follows next. At a transfer stage
    /// an outgoing token only leaves the machine; an incoming one enters it
    /// when the region allows and otherwise passes on to the next machine.
    fn next_flow(&self, i: usize, s: StageRef) -> Option<FlowId> {
        let outbound = self.state.tokens[i].outbound;
        let mut candidates: Vec<FlowId> = self
            .event
            .region
            .flows
            .iter()
            .copied()
            .filter(|&f| {
                let fl = self.model.flow(f);
                fl.from == s && legal_flow(fl.from, fl.to)
            })
            .collect();
        if s.stage == StageKind::Transfer {
            let (leave, enter): (Vec<FlowId>, Vec<FlowId>) = candidates
                .into_iter()
                .partition(|&f| self.model.flow(f).to.machine != s.machine);
            candidates = if outbound || enter.is_empty() { leave } else { enter };
        }
        if s.stage == StageKind::Accept && self.model.machine(s.machine).rejects {
            candidates.sort_by_key(|&f| self.model.flow(f).to.stage != StageKind::Release);
        }
        candidates.first().copied()
    }

    fn route(&mut self, i: usize, mut s: StageRef) -> Result<(), SimError> {
        while let Some(f) = self.next_flow(i, s) {
            let to = self.model.flow(f).to;
            let from = self.state.tokens[i].location;
            self.move_to(i, to, Some(f));
            let t = &self.state.tokens[i];
            self.record(Rec {
                action: Action::for_stage(to.stage),
                machine: to.machine,
                token: Some(t.id),
                before: Some(t.payload.clone()),
                after: Some(t.payload.clone()),
                from: Some(from),
                to: Some(Location::Stage(to)),
                via: Some(f),
            })?;
            self.fire(to);
            s = to;
        }
        self.settle(i, s)
    }

    fn store(&mut self, i: usize, s: StageRef, k: StorageId) -> Result<(), SimError> {
        let t = &mut self.state.tokens[i];
        t.location = Location::Storage(k);
        t.outbound = false;
        let t = &self.state.tokens[i];
        self.record(Rec {
            action: Action::Store,
            machine: s.machine,
            token: Some(t.id),
            before: Some(t.payload.clone()),
            after: Some(t.payload.clone()),
            from: Some(Location::Stage(s)),
            to: Some(Location::Storage(k)),
            via: None,
        })
    }

    /// Leaves a token where it is, in the stage's storage when it has one.
    fn rest(&mut self, i: usize, s: StageRef) -> Result<(), SimError> {
        match self.storage_at(s) {
            Some(k) => self.store(i, s, k),
            None => Ok(()),
        }
    }

    fn settle(&mut self, i: usize, s: StageRef) -> Result<(), SimError> {
        if let Some(k) = self.storage_at(s) {
            return self.store(i, s, k);
        }
        let t = &self.state.tokens[i];
        if t.outbound && s.stage == StageKind::Transfer {
            let (id, payload) = (t.id, t.payload.clone());
            self.state.tokens[i].location = Location::Environment;
            return self.record(Rec {
                action: Action::Emit,
                machine: s.machine,
                token: Some(id),
                before: Some(payload.clone()),
                after: Some(payload),
                from: Some(Location::Stage(s)),
                to: Some(Location::Environment),
                via: None,
            });
        }
        if !matches!(s.stage, StageKind::Release | StageKind::Transfer) {
            self.stuck.push(StuckToken {
                step: self.state.step,
                token: t.id,
                stage: self.model.stage_path(s),
            });
        }
        Ok(())
    }
}

/// Checks a value against a machine's basic type; integers widen to real.
fn conform(tag: Option<&str>, v: Value) -> Result<Value, &'static str> {
    match (tag, v) {
        (Some("int"), v @ Value::Int(_)) => Ok(v),
        (Some("real"), Value::Int(i)) => Ok(Value::Real(i as f64)),
        (Some("real"), v @ Value::Real(_)) => Ok(v),
        (Some("string"), v @ Value::Str(_)) => Ok(v),
        (Some("int" | "real" | "string"), v) => Err(v.type_name()),
        (_, v) => Ok(v),
    }
}

/// Strings without quotes; everything else as displayed.
fn plain(v: &Value) -> String {
    match v {
        Value::Str(s) => s.clone(),
        other => other.to_string(),
    }
}
