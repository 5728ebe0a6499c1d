//! Event JSON Lines:
//! `{"event_id":1,"timestamp":12.3,"team":"home","player_id":"h7","kind":"pass","x":40.0,"y":30.0,"outcome":"success"}`.

use std::path::Path;

use counter_gnn_core::tracking::{sort_events, EventKind, EventRecord, Outcome, Team, Vec2};
use serde::{Deserialize, Serialize};

use super::{read_jsonl, write_jsonl};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLine {
    pub event_id: u64,
    pub timestamp: f64,
    pub team: Team,
    pub player_id: String,
    pub kind: String,
    pub x: f64,
    pub y: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadedEvents {
    pub events: Vec<EventRecord>,
    /// Records whose kind was not recognised and became `other`.
    pub unknown_kinds: usize,
}

pub fn load_events(path: &Path) -> Result<LoadedEvents> {
    let lines: Vec<EventLine> = read_jsonl(path)?;
    let mut out = LoadedEvents::default();
    for l in lines {
        if !(l.timestamp.is_finite() && l.x.is_finite() && l.y.is_finite()) {
            return Err(Error::format(path, format!("event {}: non-finite value", l.event_id)));
        }
        let kind = EventKind::parse(&l.kind).unwrap_or_else(|| {
            out.unknown_kinds += 1;
            EventKind::Other
        });
        out.events.push(EventRecord {
            event_id: l.event_id,
            timestamp: l.timestamp,
            team: l.team,
            player_id: l.player_id,
            kind,
            location: Vec2::new(l.x, l.y),
            outcome: l.outcome,
        });
    }
    sort_events(&mut out.events);
    Ok(out)
}

pub fn save_events(path: &Path, events: &[EventRecord]) -> Result<()> {
    let lines: Vec<EventLine> = events
        .iter()
        .map(|e| EventLine {
            event_id: e.event_id,
            timestamp: e.timestamp,
            team: e.team,
            player_id: e.player_id.clone(),
            kind: e.kind.as_str().to_string(),
            x: e.location.x,
            y: e.location.y,
            outcome: e.outcome,
        })
        .collect();
    write_jsonl(path, &lines)
}
