use std::fmt;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{DistanceReport, FleetEntry, OrderId, TransportOrder, TransportTask};
use crate::alias::Alias;
use crate::gridworld::{MarkerId, SegmentId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MsgId(pub String);

impl fmt::Display for MsgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Performative {
    Request,
    Inform,
    Confirm,
    Refuse,
}

impl Performative {
    pub fn is_reply(self) -> bool {
        self != Performative::Request
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MsgType {
    TransportOrder,
    RoutePlan,
    TransportTask,
    NoticeOfArrival,
    ConfirmationOfReceipt,
    DepotArrival,
    SegmentClaim,
    SegmentRelease,
    FulfilmentComplete,
    DistanceReport,
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A carrier's disclosure: its orders and the bare facts about its fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSubmission {
    pub carrier: Alias,
    pub orders: Vec<TransportOrder>,
    pub fleet: Vec<FleetEntry>,
}

/// Routes for one carrier's own trucks only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutePlanMsg {
    pub carrier: Alias,
    pub tasks: Vec<TransportTask>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalNotice {
    pub truck: Alias,
    pub customer: Alias,
    pub order_id: OrderId,
    pub node: MarkerId,
}

/// Proof of delivery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Receipt {
    pub customer: Alias,
    pub truck: Alias,
    pub order_id: OrderId,
    /// Tick at which the first notice for this order was confirmed.
    pub receipt_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepotArrival {
    pub truck: Alias,
    pub depot: Alias,
    pub node: MarkerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentUse {
    pub truck: Alias,
    pub segment: SegmentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fulfilment {
    pub truck: Alias,
    pub task_id: String,
    pub delivered: Vec<OrderId>,
    pub failed: Vec<OrderId>,
    pub blocks: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refusal {
    pub reason: String,
}

/// Typed payloads, one per message type.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    TransportOrder(OrderSubmission),
    RoutePlan(RoutePlanMsg),
    TransportTask(TransportTask),
    NoticeOfArrival(ArrivalNotice),
    ConfirmationOfReceipt(Receipt),
    DepotArrival(DepotArrival),
    SegmentClaim(SegmentUse),
    SegmentRelease(SegmentUse),
    FulfilmentComplete(Fulfilment),
    DistanceReport(DistanceReport),
}

fn parse<T: DeserializeOwned>(v: &Value) -> Result<T, serde_json::Error> {
    T::deserialize(v)
}

impl Payload {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Payload::TransportOrder(_) => MsgType::TransportOrder,
            Payload::RoutePlan(_) => MsgType::RoutePlan,
            Payload::TransportTask(_) => MsgType::TransportTask,
            Payload::NoticeOfArrival(_) => MsgType::NoticeOfArrival,
            Payload::ConfirmationOfReceipt(_) => MsgType::ConfirmationOfReceipt,
            Payload::DepotArrival(_) => MsgType::DepotArrival,
            Payload::SegmentClaim(_) => MsgType::SegmentClaim,
            Payload::SegmentRelease(_) => MsgType::SegmentRelease,
            Payload::FulfilmentComplete(_) => MsgType::FulfilmentComplete,
            Payload::DistanceReport(_) => MsgType::DistanceReport,
        }
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            Payload::TransportOrder(p) => serde_json::to_value(p),
            Payload::RoutePlan(p) => serde_json::to_value(p),
            Payload::TransportTask(p) => serde_json::to_value(p),
            Payload::NoticeOfArrival(p) => serde_json::to_value(p),
            Payload::ConfirmationOfReceipt(p) => serde_json::to_value(p),
            Payload::DepotArrival(p) => serde_json::to_value(p),
            Payload::SegmentClaim(p) | Payload::SegmentRelease(p) => serde_json::to_value(p),
            Payload::FulfilmentComplete(p) => serde_json::to_value(p),
            Payload::DistanceReport(p) => serde_json::to_value(p),
        };
        v.expect("payload types serialise infallibly")
    }

    /// Decodes `value` against the schema of `msg_type`.
    pub fn parse(msg_type: MsgType, value: &Value) -> Result<Payload, serde_json::Error> {
        Ok(match msg_type {
            MsgType::TransportOrder => Payload::TransportOrder(parse(value)?),
            MsgType::RoutePlan => Payload::RoutePlan(parse(value)?),
            MsgType::TransportTask => Payload::TransportTask(parse(value)?),
            MsgType::NoticeOfArrival => Payload::NoticeOfArrival(parse(value)?),
            MsgType::ConfirmationOfReceipt => Payload::ConfirmationOfReceipt(parse(value)?),
            MsgType::DepotArrival => Payload::DepotArrival(parse(value)?),
            MsgType::SegmentClaim => Payload::SegmentClaim(parse(value)?),
            MsgType::SegmentRelease => Payload::SegmentRelease(parse(value)?),
            MsgType::FulfilmentComplete => Payload::FulfilmentComplete(parse(value)?),
            MsgType::DistanceReport => Payload::DistanceReport(parse(value)?),
        })
    }
}

/// A typed inter-agent message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub msg_id: MsgId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_id: Option<MsgId>,
    pub sender: Alias,
    pub recipient: Alias,
    pub performative: Performative,
    pub msg_type: MsgType,
    pub payload: Value,
    pub sim_tick: u64,
    pub sent_at: DateTime<Utc>,
}

impl Envelope {
    pub fn payload(&self) -> Result<Payload, serde_json::Error> {
        Payload::parse(self.msg_type, &self.payload)
    }

    pub fn is_reply_to(&self, request: &Envelope) -> bool {
        self.performative.is_reply() && self.correlation_id.as_ref() == Some(&request.msg_id)
    }

    pub fn refusal_reason(&self) -> Option<String> {
        if self.performative != Performative::Refuse {
            return None;
        }
        Some(
            serde_json::from_value::<Refusal>(self.payload.clone())
                .map(|r| r.reason)
                .unwrap_or_default(),
        )
    }
}

/// What a handler answers.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    /// Acknowledge; an optional payload may change the reply's message type.
    Confirm(Option<Payload>),
    Inform(Payload),
    Refuse(String),
}

impl Reply {
    pub fn ack() -> Self {
        Reply::Confirm(None)
    }

    /// Builds the reply envelope for `request`.
    pub fn into_envelope(self, request: &Envelope, sent_at: DateTime<Utc>) -> Envelope {
        let (performative, msg_type, payload) = match self {
            Reply::Confirm(None) => (Performative::Confirm, request.msg_type, Value::Null),
            Reply::Confirm(Some(p)) => (Performative::Confirm, p.msg_type(), p.to_value()),
            Reply::Inform(p) => (Performative::Inform, p.msg_type(), p.to_value()),
            Reply::Refuse(reason) => (
                Performative::Refuse,
                request.msg_type,
                serde_json::to_value(Refusal { reason }).expect("refusal serialises"),
            ),
        };
        Envelope {
            msg_id: MsgId(format!("{}-r", request.msg_id)),
            correlation_id: Some(request.msg_id.clone()),
            sender: request.recipient.clone(),
            recipient: request.sender.clone(),
            performative,
            msg_type,
            payload,
            sim_tick: request.sim_tick,
            sent_at,
        }
    }
}
