use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::frame::{DeliveryRecord, EventFrame, FrameBody};
use super::RunStatus;
use crate::agents::DistanceReport;
use crate::alias::Alias;
use crate::gridworld::TruckState;

/// Everything an observer can know about a run at one point of its log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub last_seq: u64,
    pub status: RunStatus,
    pub trucks: BTreeMap<Alias, TruckState>,
    pub deliveries: Vec<DeliveryRecord>,
    pub message_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DistanceReport>,
}

impl Default for Snapshot {
    fn default() -> Self {
        Snapshot {
            tick: 0,
            last_seq: 0,
            status: RunStatus::Configured,
            trucks: BTreeMap::new(),
            deliveries: Vec::new(),
            message_count: 0,
            report: None,
        }
    }
}

impl Snapshot {
    pub fn apply(&mut self, frame: &EventFrame) {
        self.last_seq = frame.seq;
        self.tick = frame.tick;
        if self.status == RunStatus::Configured {
            self.status = RunStatus::Running;
        }
        match &frame.body {
            FrameBody::TruckMoved(states) => {
                for s in states {
                    self.trucks.insert(s.truck.clone(), s.clone());
                }
            }
            FrameBody::MessageSent(_) => self.message_count += 1,
            FrameBody::DeliveryCompleted(d) => self.deliveries.push(d.clone()),
            FrameBody::Milestone(_) => {}
            FrameBody::RunCompleted(outcome) => {
                self.status = outcome.status;
                self.report = outcome.report.clone();
            }
        }
    }
}

/// Rebuilds the state reached after `frames`.
pub fn fold<'a>(frames: impl IntoIterator<Item = &'a EventFrame>) -> Snapshot {
    let mut s = Snapshot::default();
    for f in frames {
        s.apply(f);
    }
    s
}
