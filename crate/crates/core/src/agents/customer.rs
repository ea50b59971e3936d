use std::collections::BTreeMap;

use crate::agents::OrderId;
use crate::alias::Alias;
use crate::gridworld::MarkerId;
use crate::messaging::{Bus, Envelope, Handler, Payload, Receipt, Reply};

/// Waits for arrival notices and signs for its own orders.
#[derive(Debug, Clone)]
pub struct CustomerAgent {
    alias: Alias,
    home: MarkerId,
    expected: Vec<OrderId>,
    receipts: BTreeMap<OrderId, Receipt>,
}

impl CustomerAgent {
    pub fn new(alias: Alias, home: MarkerId, expected: Vec<OrderId>) -> Self {
        CustomerAgent {
            alias,
            home,
            expected,
            receipts: BTreeMap::new(),
        }
    }

    pub fn alias(&self) -> &Alias {
        &self.alias
    }

    pub fn receipts(&self) -> &BTreeMap<OrderId, Receipt> {
        &self.receipts
    }
}

impl Handler for CustomerAgent {
    fn handle(&mut self, request: &Envelope, payload: Payload, _: &Bus) -> Reply {
        let Payload::NoticeOfArrival(notice) = payload else {
            return Reply::Refuse(format!("customer does not accept {}", request.msg_type));
        };
        if notice.customer != self.alias || !self.expected.contains(&notice.order_id) {
            return Reply::Refuse(format!("unknown order {}", notice.order_id));
        }
        if notice.node != self.home {
            return Reply::Refuse(format!("truck is at {}, not at {}", notice.node, self.home));
        }
        // a repeated notice gets the original receipt back
        let receipt = self
            .receipts
            .entry(notice.order_id.clone())
            .or_insert_with(|| Receipt {
                customer: self.alias.clone(),
                truck: notice.truck.clone(),
                order_id: notice.order_id.clone(),
                receipt_tick: request.sim_tick,
            })
            .clone();
        Reply::Confirm(Some(Payload::ConfirmationOfReceipt(receipt)))
    }
}
