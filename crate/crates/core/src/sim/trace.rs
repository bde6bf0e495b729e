use std::fmt::{self, Write};

use serde::Serialize;

use crate::events::EventId;
use crate::model::{FlowId, MachineId, StageKind, StageRef, StorageId};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u32);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Stage(StageRef),
    Storage(StorageId),
    Environment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Create,
    Receive,
    Process,
    Release,
    Transfer,
    TriggerFire,
    Emit,
    Store,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Create => "create",
            Action::Receive => "receive",
            Action::Process => "process",
            Action::Release => "release",
            Action::Transfer => "transfer",
            Action::TriggerFire => "trigger-fire",
            Action::Emit => "emit",
            Action::Store => "store",
        }
    }

    /// Arrive and accept are reported as receive.
    pub fn for_stage(kind: StageKind) -> Action {
        match kind {
            StageKind::Create => Action::Create,
            StageKind::Receive | StageKind::Arrive | StageKind::Accept => Action::Receive,
            StageKind::Process => Action::Process,
            StageKind::Release => Action::Release,
            StageKind::Transfer => Action::Transfer,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One trace line. The first seven fields are the serialized form; the rest
/// let a reader replay token movement exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub event: String,
    pub action: Action,
    /// Qualified machine path.
    pub machine: String,
    pub token: Option<TokenId>,
    pub payload_before: Option<Value>,
    pub payload_after: Option<Value>,

    pub event_id: EventId,
    /// Index of the event occurrence within the executed sequence.
    pub occurrence: usize,
    pub machine_id: MachineId,
    /// Token location before and after the record, when a token is involved.
    pub from: Option<Location>,
    pub to: Option<Location>,
    /// The flow a move followed.
    pub via: Option<FlowId>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    step: u64,
    event: &'a str,
    action: Action,
    machine: &'a str,
    token: Option<String>,
    #[serde(rename = "payload-before")]
    payload_before: Option<&'a Value>,
    #[serde(rename = "payload-after")]
    payload_after: Option<&'a Value>,
}

fn cell(v: &Option<Value>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Event ids, one per executed occurrence that produced records.
    pub fn event_order(&self) -> Vec<EventId> {
        let mut out = Vec::new();
        let mut last = None;
        for r in &self.records {
            if last != Some(r.occurrence) {
                out.push(r.event_id);
                last = Some(r.occurrence);
            }
        }
        out
    }

    /// Payloads emitted to the environment, in order.
    pub fn emitted(&self) -> Vec<&Value> {
        self.records
            .iter()
            .filter(|r| r.action == Action::Emit)
            .filter_map(|r| r.payload_after.as_ref())
            .collect()
    }

    /// One record per line, fields separated by tabs.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.step,
                r.event,
                r.action,
                r.machine,
                r.token.map_or_else(|| "-".to_string(), |t| t.to_string()),
                cell(&r.payload_before),
                cell(&r.payload_after),
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let recs: Vec<JsonRecord<'_>> = self
            .records
            .iter()
            .map(|r| JsonRecord {
                step: r.step,
                event: &r.event,
                action: r.action,
                machine: &r.machine,
                token: r.token.map(|t| t.to_string()),
                payload_before: r.payload_before.as_ref(),
                payload_after: r.payload_after.as_ref(),
            })
            .collect();
        serde_json::to_string_pretty(&recs).expect("trace records serialize")
    }
}
