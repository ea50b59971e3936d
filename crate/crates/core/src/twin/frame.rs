use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use super::RunStatus;
use crate::agents::{DistanceReport, OrderId};
use crate::alias::Alias;
use crate::gridworld::{MarkerId, TruckState};
use crate::messaging::{Envelope, MessageSink};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub truck: Alias,
    pub customer: Alias,
    pub order_id: OrderId,
    pub node: MarkerId,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestone {
    pub text: String,
    pub truck: Alias,
    pub customer: Alias,
    pub order_id: OrderId,
}

impl Milestone {
    pub fn delivered(d: &DeliveryRecord) -> Self {
        Milestone {
            text: format!("{} successfully delivered products to {}", d.truck, d.customer),
            truck: d.truck.clone(),
            customer: d.customer.clone(),
            order_id: d.order_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DistanceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum FrameBody {
    /// Full new state of every truck that changed since the last such frame.
    TruckMoved(Vec<TruckState>),
    MessageSent(Envelope),
    DeliveryCompleted(DeliveryRecord),
    Milestone(Milestone),
    RunCompleted(RunOutcome),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFrame {
    pub seq: u64,
    pub tick: u64,
    #[serde(flatten)]
    pub body: FrameBody,
}

/// Append-only frame store: one writer, any number of readers. Readers
/// copy out under a short lock and wait on the watch channel, so they
/// never hold up the writer.
pub struct FrameLog {
    frames: Mutex<Vec<EventFrame>>,
    last: watch::Sender<u64>,
    closed: AtomicBool,
    messages: AtomicU64,
}

impl Default for FrameLog {
    fn default() -> Self {
        FrameLog {
            frames: Mutex::default(),
            last: watch::Sender::new(0),
            closed: AtomicBool::new(false),
            messages: AtomicU64::new(0),
        }
    }
}

impl FrameLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, tick: u64, body: FrameBody) -> u64 {
        let mut frames = self.frames.lock().expect("frame log poisoned");
        let seq = frames.len() as u64 + 1;
        frames.push(EventFrame { seq, tick, body });
        drop(frames);
        self.last.send_replace(seq);
        seq
    }

    pub fn last_seq(&self) -> u64 {
        *self.last.borrow()
    }

    /// Frames with seq > `since`, at most `limit` of them.
    pub fn since(&self, since: u64, limit: usize) -> Vec<EventFrame> {
        let frames = self.frames.lock().expect("frame log poisoned");
        let start = (since as usize).min(frames.len());
        frames[start..].iter().take(limit).cloned().collect()
    }

    pub fn all(&self) -> Vec<EventFrame> {
        self.frames.lock().expect("frame log poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.frames.lock().expect("frame log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn messages_since(&self, since: u64) -> Vec<(u64, Envelope)> {
        let frames = self.frames.lock().expect("frame log poisoned");
        let start = (since as usize).min(frames.len());
        frames[start..]
            .iter()
            .filter_map(|f| match &f.body {
                FrameBody::MessageSent(e) => Some((f.seq, e.clone())),
                _ => None,
            })
            .collect()
    }

    /// Envelopes recorded so far, counted independently of the frames.
    pub fn message_count(&self) -> u64 {
        self.messages.load(Ordering::SeqCst)
    }

    /// No more frames will follow.
    pub fn close(&self) {
        self.closed.store(true, Ordering::SeqCst);
        let seq = self.last_seq();
        self.last.send_replace(seq);
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.last.subscribe()
    }
}

impl MessageSink for FrameLog {
    fn record(&self, envelope: &Envelope) {
        self.messages.fetch_add(1, Ordering::SeqCst);
        self.push(envelope.sim_tick, FrameBody::MessageSent(envelope.clone()));
    }
}
