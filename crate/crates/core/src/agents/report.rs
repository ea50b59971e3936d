use serde::{Deserialize, Serialize};

use crate::alias::Alias;
use crate::gridworld::MarkerId;

/// One row of the before/after comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruckReduction {
    pub truck: Alias,
    pub before_route: Vec<MarkerId>,
    pub after_route: Vec<MarkerId>,
    pub before_blocks: u32,
    pub after_blocks: u32,
}

/// Distance saved by collaborating, computed once every truck has finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub pre_total: u32,
    pub post_total: u32,
    pub reduction_blocks: i64,
    /// `None` when the baseline drives no blocks at all.
    pub relative_reduction: Option<f64>,
    pub per_truck: Vec<TruckReduction>,
    #[serde(default)]
    pub failed_stops: Vec<crate::agents::OrderId>,
}

impl DistanceReport {
    pub fn new(pre_total: u32, post_total: u32, per_truck: Vec<TruckReduction>) -> Self {
        let relative = crate::solver::synergy_blocks(pre_total, post_total).ok();
        DistanceReport {
            pre_total,
            post_total,
            reduction_blocks: i64::from(pre_total) - i64::from(post_total),
            relative_reduction: relative,
            per_truck,
            failed_stops: Vec::new(),
        }
    }
}
