//! Run summaries and their on-disk form: one directory per run holding
//! newline-delimited logs that `replay` can fold back into a snapshot.

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::frame::{EventFrame, FrameBody};
use super::RunStatus;
use crate::agents::DistanceReport;
use crate::gridworld::WorldEvent;
use crate::scenario::ScenarioFile;
use crate::solver::Plan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub seed: u64,
    pub scenario_digest: String,
    pub scenario: ScenarioFile,
    pub status: RunStatus,
    #[serde(default)]
    pub started_tick: Option<u64>,
    #[serde(default)]
    pub ended_tick: Option<u64>,
    #[serde(default)]
    pub plan_pre: Option<Plan>,
    #[serde(default)]
    pub plan_post: Option<Plan>,
    #[serde(default)]
    pub reduction: Option<DistanceReport>,
    #[serde(default)]
    pub error: Option<String>,
    pub frame_count: u64,
    pub message_count: u64,
    pub event_count: u64,
}

impl RunRecord {
    pub fn new(run_id: String, seed: u64, digest: &str, scenario: ScenarioFile) -> Self {
        RunRecord {
            run_id,
            seed,
            scenario_digest: digest.to_owned(),
            scenario,
            status: RunStatus::Configured,
            started_tick: None,
            ended_tick: None,
            plan_pre: None,
            plan_post: None,
            reduction: None,
            error: None,
            frame_count: 0,
            message_count: 0,
            event_count: 0,
        }
    }

    /// Moves the status forward; backwards moves are ignored.
    pub fn advance(&mut self, status: RunStatus) -> bool {
        if self.status.can_become(status) {
            self.status = status;
            true
        } else {
            false
        }
    }
}

/// Stable id from the scenario and seed.
pub fn run_id(digest: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(digest.as_bytes());
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())[..12].to_owned()
}

pub const FRAMES_FILE: &str = "frames.ndjson";
pub const MESSAGES_FILE: &str = "messages.ndjson";
pub const EVENTS_FILE: &str = "events.ndjson";
pub const RECORD_FILE: &str = "record.json";
pub const SCENARIO_FILE: &str = "scenario.json";

fn write_ndjson<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes a finished run under `runs_dir/<run_id>/`.
pub fn persist_run(
    runs_dir: &Path,
    record: &RunRecord,
    scenario_content: &str,
    frames: &[EventFrame],
    events: &[WorldEvent],
) -> io::Result<PathBuf> {
    let dir = runs_dir.join(&record.run_id);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(SCENARIO_FILE), scenario_content)?;
    write_ndjson(&dir.join(FRAMES_FILE), frames)?;
    let messages: Vec<_> = frames
        .iter()
        .filter_map(|f| match &f.body {
            FrameBody::MessageSent(e) => Some(e),
            _ => None,
        })
        .collect();
    write_ndjson(&dir.join(MESSAGES_FILE), messages)?;
    write_ndjson(&dir.join(EVENTS_FILE), events)?;
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    fs::write(dir.join(RECORD_FILE), text)?;
    Ok(dir)
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Reads a frame log; `path` may be the file or its run directory.
pub fn load_frames(path: &Path) -> Result<Vec<EventFrame>, ReplayError> {
    let path = if path.is_dir() {
        path.join(FRAMES_FILE)
    } else {
        path.to_path_buf()
    };
    let io_err = |source| ReplayError::Io {
        path: path.clone(),
        source,
    };
    let file = fs::File::open(&path).map_err(io_err)?;
    let mut frames = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| ReplayError::Corrupt {
            path: path.clone(),
            line: i + 1,
            message,
        };
        let frame: EventFrame = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        let expected = frames.len() as u64 + 1;
        if frame.seq != expected {
            return Err(corrupt(format!("expected seq {expected}, found {}", frame.seq)));
        }
        frames.push(frame);
    }
    Ok(frames)
}
