//! Discrete model of the marked delivery map.
//!
//! Nodes are identified by marker ids laid out column-major on a grid with
//! the origin in the south-west corner, so for the default 5x5 map the three
//! corner depots sit at 0 (south-west), 20 (south-east) and 24 (north-east).

mod map;
mod marker;
mod world;

pub use map::{Edge, GridMap, NodeLabel, PathTable, SegmentId};
pub use marker::{coord_to_marker, marker_to_coord, Coord, MarkerId, DEFAULT_SIZE};
pub use world::{Phase, Timing, Traversal, TruckState, World, WorldEvent};

use thiserror::Error;

use crate::alias::Alias;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("marker {0} is outside the map")]
    MarkerOutOfRange(u32),
    #[error("coordinate ({x}, {y}) is outside the map")]
    CoordOutOfRange { x: i64, y: i64 },
    #[error("nodes {a} and {b} are not axis-adjacent")]
    NotAdjacent { a: MarkerId, b: MarkerId },
    #[error("edge {0} is not on the map")]
    UnknownEdge(Edge),
    #[error("edge {edge} already belongs to segment {segment}")]
    OverlappingSegment { edge: Edge, segment: SegmentId },
    #[error("no path from {from} to {to}")]
    NoPath { from: MarkerId, to: MarkerId },
    #[error("invalid route: hop {index} from {from} to {to} is not an edge")]
    InvalidRoute {
        index: usize,
        from: MarkerId,
        to: MarkerId,
    },
    #[error("node {node} is not reachable from {root}")]
    Disconnected { root: MarkerId, node: MarkerId },
    #[error("unknown truck {0}")]
    UnknownTruck(Alias),
    #[error("truck {0} already exists")]
    DuplicateTruck(Alias),
    #[error("truck {truck} cannot {action} while {phase:?}")]
    IllegalTransition {
        truck: Alias,
        phase: Phase,
        action: &'static str,
    },
    #[error("route for {truck} must start at its position {at}")]
    RouteStart { truck: Alias, at: MarkerId },
}
