use std::fmt;

use serde::{Deserialize, Serialize};

use super::GridError;

/// Side length of the default square map.
pub const DEFAULT_SIZE: u16 = 5;

/// Node identity on the map, as read from the fiducial marker placed there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarkerId(pub u16);

impl MarkerId {
    pub const fn new(id: u16) -> Self {
        MarkerId(id)
    }

    pub const fn value(self) -> u16 {
        self.0
    }
}

impl fmt::Display for MarkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u16> for MarkerId {
    fn from(value: u16) -> Self {
        MarkerId(value)
    }
}

/// Column `x` and row `y`, with `(0, 0)` at the south-west corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub x: u16,
    pub y: u16,
}

impl Coord {
    pub const fn new(x: u16, y: u16) -> Self {
        Coord { x, y }
    }

    pub fn manhattan(self, other: Coord) -> u32 {
        u32::from(self.x.abs_diff(other.x)) + u32::from(self.y.abs_diff(other.y))
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Column-major layout: `x = id / height`, `y = id % height`.
pub(crate) fn coord_in(id: MarkerId, width: u16, height: u16) -> Result<Coord, GridError> {
    let total = u32::from(width) * u32::from(height);
    if u32::from(id.0) >= total {
        return Err(GridError::MarkerOutOfRange(u32::from(id.0)));
    }
    Ok(Coord::new(id.0 / height, id.0 % height))
}

pub(crate) fn marker_in(coord: Coord, width: u16, height: u16) -> Result<MarkerId, GridError> {
    if coord.x >= width || coord.y >= height {
        return Err(GridError::CoordOutOfRange {
            x: i64::from(coord.x),
            y: i64::from(coord.y),
        });
    }
    Ok(MarkerId(coord.x * height + coord.y))
}

/// Coordinate of a marker on the default 5x5 map.
pub fn marker_to_coord(id: MarkerId) -> Result<Coord, GridError> {
    coord_in(id, DEFAULT_SIZE, DEFAULT_SIZE)
}

/// Marker at a coordinate of the default 5x5 map.
pub fn coord_to_marker(coord: Coord) -> Result<MarkerId, GridError> {
    marker_in(coord, DEFAULT_SIZE, DEFAULT_SIZE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_and_interior() {
        assert_eq!(marker_to_coord(MarkerId(0)).unwrap(), Coord::new(0, 0));
        assert_eq!(marker_to_coord(MarkerId(24)).unwrap(), Coord::new(4, 4));
        assert_eq!(marker_to_coord(MarkerId(11)).unwrap(), Coord::new(2, 1));
        // depots described as bottom left, bottom right, top right
        assert_eq!(marker_to_coord(MarkerId(20)).unwrap(), Coord::new(4, 0));
    }

    #[test]
    fn out_of_range() {
        assert_eq!(
            marker_to_coord(MarkerId(25)),
            Err(GridError::MarkerOutOfRange(25))
        );
        assert!(coord_to_marker(Coord::new(5, 0)).is_err());
        assert!(coord_to_marker(Coord::new(0, 5)).is_err());
    }

    #[test]
    fn roundtrip_all_markers() {
        for id in 0..25u16 {
            let c = marker_to_coord(MarkerId(id)).unwrap();
            assert_eq!(coord_to_marker(c).unwrap(), MarkerId(id));
        }
    }

    #[test]
    fn non_square_layout() {
        // 3 columns x 2 rows
        assert_eq!(coord_in(MarkerId(5), 3, 2).unwrap(), Coord::new(2, 1));
        assert!(coord_in(MarkerId(6), 3, 2).is_err());
        assert_eq!(marker_in(Coord::new(1, 1), 3, 2).unwrap(), MarkerId(3));
    }
}
