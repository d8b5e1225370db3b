//! Trial logs and their on-disk form.
//!
//! A log is stored as two files:
//!
//! * `<stem>.csv`: one row per agent per step, columns
//!   `t,id,x,y,heading,speed,cmd_kind,voltage,condition` in that order.
//!   `t` is the time at the end of the step, `cmd_kind` one of
//!   `none|steer_left|steer_right|accelerate`, `condition` one of
//!   `normal|entangled|snagged`. Floats use shortest round-trip formatting.
//! * `<stem>.json`: the sidecar with the config snapshot, seed, events and
//!   termination.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::controllers::StimKind;
use crate::world::{AgentId, Config, Vec2};

pub const CSV_HEADER: [&str; 9] = [
    "t",
    "id",
    "x",
    "y",
    "heading",
    "speed",
    "cmd_kind",
    "voltage",
    "condition",
];
pub const SIDECAR_FORMAT: &str = "swarm-sim-trial/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    Entangle { a: AgentId, b: AgentId },
    Release { a: AgentId, b: AgentId },
    Snag { agent: AgentId },
    Escape { agent: AgentId },
    GoalReached { agent: AgentId },
    Lost { agent: AgentId },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    /// Index of the step (1-based) at whose end the event happened.
    pub step: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Termination {
    AllReached { time: f64 },
    Timeout { time: f64 },
}

impl Termination {
    pub fn time(&self) -> f64 {
        match *self {
            Termination::AllReached { time } | Termination::Timeout { time } => time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: AgentId,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub cmd_kind: StimKind,
    pub voltage: f64,
    pub condition: String,
}

impl AgentRecord {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    /// In ascending id order.
    pub agents: Vec<AgentRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialLog {
    pub config: Config,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    seed: u64,
    leader_id: AgentId,
    agents: usize,
    steps: usize,
    termination: Termination,
    events: Vec<Event>,
    config: Config,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    id: AgentId,
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
    cmd_kind: String,
    voltage: f64,
    condition: String,
}

pub fn csv_path(stem: &Path) -> PathBuf {
    stem.with_extension("csv")
}

pub fn sidecar_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl TrialLog {
    pub fn leader_id(&self) -> AgentId {
        0
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, EngineError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for step in &self.steps {
            for a in &step.agents {
                w.serialize(CsvRow {
                    t: step.time,
                    id: a.id,
                    x: a.x,
                    y: a.y,
                    heading: a.heading,
                    speed: a.speed,
                    cmd_kind: a.cmd_kind.label().to_string(),
                    voltage: a.voltage,
                    condition: a.condition.clone(),
                })?;
            }
        }
        if self.steps.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        w.into_inner().map_err(|e| EngineError::Io(e.into_error()))
    }

    pub fn to_sidecar_json(&self) -> Result<String, EngineError> {
        let sidecar = Sidecar {
            format: SIDECAR_FORMAT.to_string(),
            seed: self.seed,
            leader_id: self.leader_id(),
            agents: self.config.agents,
            steps: self.steps.len(),
            termination: self.termination,
            events: self.events.clone(),
            config: self.config.clone(),
        };
        Ok(serde_json::to_string_pretty(&sidecar)? + "\n")
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<(), EngineError> {
        write_atomic(&csv_path(stem), &self.to_csv()?)?;
        write_atomic(&sidecar_path(stem), self.to_sidecar_json()?.as_bytes())?;
        Ok(())
    }

    /// Reads a log back from `<stem>.csv` and `<stem>.json`.
    pub fn read(stem: &Path) -> Result<TrialLog, EngineError> {
        let json = fs::read_to_string(sidecar_path(stem))?;
        let csv_bytes = fs::read(csv_path(stem))?;
        TrialLog::parse(&csv_bytes, &json)
    }

    pub fn parse(csv_bytes: &[u8], sidecar_json: &str) -> Result<TrialLog, EngineError> {
        let sidecar: Sidecar = serde_json::from_str(sidecar_json)?;
        if sidecar.format != SIDECAR_FORMAT {
            return Err(EngineError::MalformedLog {
                row: 0,
                reason: format!("unsupported sidecar format {:?}", sidecar.format),
            });
        }
        let n = sidecar.agents;
        let mut reader = csv::Reader::from_reader(csv_bytes);
        let header = reader.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(EngineError::MalformedLog {
                row: 1,
                reason: format!("expected header {}", CSV_HEADER.join(",")),
            });
        }
        let mut steps: Vec<StepRecord> = Vec::new();
        for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
            // line 1 is the header
            let line = i + 2;
            let bad = |reason: String| EngineError::MalformedLog { row: line, reason };
            let row = row.map_err(|e| bad(e.to_string()))?;
            let kind = StimKind::from_label(&row.cmd_kind)
                .ok_or_else(|| bad(format!("unknown cmd_kind {:?}", row.cmd_kind)))?;
            if !matches!(row.condition.as_str(), "normal" | "entangled" | "snagged") {
                return Err(bad(format!("unknown condition {:?}", row.condition)));
            }
            if (kind == StimKind::None) != (row.voltage == 0.0) || row.voltage < 0.0 {
                return Err(bad(format!(
                    "voltage {} inconsistent with {}",
                    row.voltage, row.cmd_kind
                )));
            }
            let index = i / n.max(1);
            if i % n.max(1) == 0 {
                steps.push(StepRecord {
                    time: row.t,
                    agents: Vec::with_capacity(n),
                });
            }
            let step = steps.last_mut().expect("pushed above");
            if row.t != step.time {
                return Err(bad(format!(
                    "row belongs to t={} but step {} is at t={}",
                    row.t,
                    index + 1,
                    step.time
                )));
            }
            if row.id as usize != step.agents.len() {
                return Err(bad(format!("expected agent id {} got {}", step.agents.len(), row.id)));
            }
            step.agents.push(AgentRecord {
                id: row.id,
                x: row.x,
                y: row.y,
                heading: row.heading,
                speed: row.speed,
                cmd_kind: kind,
                voltage: row.voltage,
                condition: row.condition,
            });
        }
        if steps.last().is_some_and(|s| s.agents.len() != n) {
            return Err(EngineError::MalformedLog {
                row: steps.len() * n + 1,
                reason: "truncated final step".into(),
            });
        }
        if steps.len() != sidecar.steps {
            return Err(EngineError::MalformedLog {
                row: 0,
                reason: format!("sidecar declares {} steps, CSV holds {}", sidecar.steps, steps.len()),
            });
        }
        Ok(TrialLog {
            config: sidecar.config,
            seed: sidecar.seed,
            steps,
            events: sidecar.events,
            termination: sidecar.termination,
        })
    }
}
