//! Per-truck protocol transcripts and the pattern they must follow.

use crate::alias::Alias;
use crate::messaging::{Envelope, MsgType, Performative};

/// The message types in `log` that belong to `truck`'s side of the protocol:
/// the task it received, the requests it sent and the receipts it got.
pub fn project_truck(log: &[Envelope], truck: &Alias) -> Vec<MsgType> {
    log.iter()
        .filter(|e| match e.performative {
            Performative::Request if &e.sender == truck => matches!(
                e.msg_type,
                MsgType::SegmentClaim
                    | MsgType::SegmentRelease
                    | MsgType::NoticeOfArrival
                    | MsgType::DepotArrival
                    | MsgType::FulfilmentComplete
            ),
            Performative::Request => {
                &e.recipient == truck && e.msg_type == MsgType::TransportTask
            }
            Performative::Confirm => {
                &e.recipient == truck && e.msg_type == MsgType::ConfirmationOfReceipt
            }
            _ => false,
        })
        .map(|e| e.msg_type)
        .collect()
}

/// Matches `TransportTask (Claim|Release)* (NoA CoR (Claim|Release)*){k}
/// DepotArrival FulfilmentComplete`.
pub fn conforms(seq: &[MsgType], stops: usize) -> bool {
    let mut it = seq.iter().peekable();
    let skip_segments = |it: &mut std::iter::Peekable<std::slice::Iter<'_, MsgType>>| {
        while matches!(it.peek(), Some(MsgType::SegmentClaim | MsgType::SegmentRelease)) {
            it.next();
        }
    };
    if it.next() != Some(&MsgType::TransportTask) {
        return false;
    }
    skip_segments(&mut it);
    for _ in 0..stops {
        if it.next() != Some(&MsgType::NoticeOfArrival)
            || it.next() != Some(&MsgType::ConfirmationOfReceipt)
        {
            return false;
        }
        skip_segments(&mut it);
    }
    it.next() == Some(&MsgType::DepotArrival)
        && it.next() == Some(&MsgType::FulfilmentComplete)
        && it.next().is_none()
}
