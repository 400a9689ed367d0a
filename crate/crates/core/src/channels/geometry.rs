//! Hexagonal seven-cell layout and uniform UE drops.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Angle of `self` seen from `origin`, measured from the x axis.
    pub fn azimuth_from(self, origin: Point) -> f64 {
        (self.y - origin.y).atan2(self.x - origin.x)
    }
}

/// The serving cell (index 0) and its six neighbours.
///
/// Hexagons have flat tops: corners sit at multiples of 60° from the BS and
/// neighbouring BSs at `√3·R` in the directions 30° + k·60°.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    hex_radius_m: f64,
    min_distance_m: f64,
    neighbor_count: usize,
    bs_positions: Vec<Point>,
}

impl Default for CellGeometry {
    fn default() -> Self {
        Self::new(250.0, 25.0).expect("default geometry is valid")
    }
}

impl CellGeometry {
    pub fn new(hex_radius_m: f64, min_distance_m: f64) -> Result<Self> {
        if !(hex_radius_m > 0.0 && hex_radius_m.is_finite()) {
            return Err(domain("CellGeometry", "hex_radius_m", hex_radius_m));
        }
        if !(min_distance_m > 0.0 && min_distance_m < hex_radius_m) {
            return Err(domain("CellGeometry", "min_distance_m", min_distance_m));
        }
        let spacing = 3.0_f64.sqrt() * hex_radius_m;
        let mut bs_positions = vec![Point::ORIGIN];
        for k in 0..6 {
            let angle = (30.0 + 60.0 * k as f64).to_radians();
            bs_positions.push(Point::new(spacing * angle.cos(), spacing * angle.sin()));
        }
        Ok(Self {
            hex_radius_m,
            min_distance_m,
            neighbor_count: 6,
            bs_positions,
        })
    }

    pub fn hex_radius_m(&self) -> f64 {
        self.hex_radius_m
    }

    pub fn min_distance_m(&self) -> f64 {
        self.min_distance_m
    }

    pub fn neighbor_count(&self) -> usize {
        self.neighbor_count
    }

    pub fn bs_positions(&self) -> &[Point] {
        &self.bs_positions
    }

    pub fn cell_count(&self) -> usize {
        self.bs_positions.len()
    }

    /// A corner of the serving hexagon, the farthest point from its BS.
    pub fn corner_point(&self) -> Point {
        Point::new(self.hex_radius_m, 0.0)
    }

    /// Whether `p` lies inside hexagon `cell` (boundary included).
    pub fn in_hexagon(&self, cell: usize, p: Point) -> bool {
        let c = self.bs_positions[cell];
        let (dx, dy) = ((p.x - c.x).abs(), (p.y - c.y).abs());
        let r = self.hex_radius_m;
        let s3 = 3.0_f64.sqrt();
        dy <= 0.5 * s3 * r && s3 * dx + dy <= s3 * r
    }

    /// Hexagon minus the disc of radius `min_distance_m` around the BS.
    pub fn in_service_area(&self, cell: usize, p: Point) -> bool {
        self.in_hexagon(cell, p) && p.distance(self.bs_positions[cell]) >= self.min_distance_m
    }

    /// One uniform position in the service area of `cell`.
    pub fn sample_in_cell<R: Rng + ?Sized>(&self, cell: usize, rng: &mut R) -> Point {
        let c = self.bs_positions[cell];
        let r = self.hex_radius_m;
        let half_height = 0.5 * 3.0_f64.sqrt() * r;
        loop {
            let p = Point::new(
                c.x + rng.random_range(-r..=r),
                c.y + rng.random_range(-half_height..=half_height),
            );
            if self.in_service_area(cell, p) {
                return p;
            }
        }
    }
}

/// `count` uniform positions in the serving cell.
pub fn drop_ues<R: Rng + ?Sized>(geom: &CellGeometry, count: usize, rng: &mut R) -> Vec<Point> {
    (0..count).map(|_| geom.sample_in_cell(0, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbours_share_edges() {
        let g = CellGeometry::default();
        // The segment between BS0 and a neighbour crosses the shared edge
        // at its midpoint.
        for k in 1..7 {
            let b = g.bs_positions()[k];
            let near = Point::new(b.x * 0.49, b.y * 0.49);
            let far = Point::new(b.x * 0.51, b.y * 0.51);
            assert!(g.in_hexagon(0, near) && !g.in_hexagon(k, near));
            assert!(g.in_hexagon(k, far) && !g.in_hexagon(0, far));
        }
        assert!(g.in_hexagon(0, g.corner_point()));
    }
}
