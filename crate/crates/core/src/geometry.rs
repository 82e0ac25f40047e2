//! Node placement: one BS at the origin, two RSUs inside the BS disk, and two
//! vehicles plus one backscatter tag inside each RSU disk.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Smallest distance used in any pathloss computation, meters.
pub const MIN_DISTANCE_M: f64 = 1.0;

const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub bs: Point,
    pub rsu: [Point; 2],
    /// `vehicles[m][i]` is vehicle `i` served by RSU `m`.
    pub vehicles: [[Point; 2]; 2],
    pub tags: [Point; 2],
}

/// Uniform point in the ring `MIN_DISTANCE_M <= r <= radius` around `center`.
///
/// This is the uniform disk conditioned on the minimum distance to the
/// center, drawn without rejection so every call consumes exactly two
/// uniforms.
fn point_in_ring<R: Rng + ?Sized>(rng: &mut R, center: Point, radius: f64) -> Point {
    let u: f64 = rng.random();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    let inner = MIN_DISTANCE_M * MIN_DISTANCE_M;
    let r = (inner + u * (radius * radius - inner)).sqrt();
    Point {
        x: center.x + r * theta.cos(),
        y: center.y + r * theta.sin(),
    }
}

/// Draws a point in the ring around `center` until it keeps the minimum
/// distance to every node in `avoid`.
fn point_in_ring_avoiding<R: Rng + ?Sized>(
    rng: &mut R,
    center: Point,
    radius: f64,
    avoid: &[Point],
) -> Result<Point> {
    for _ in 0..MAX_RESAMPLES {
        let p = point_in_ring(rng, center, radius);
        if avoid.iter().all(|q| p.distance(*q) >= MIN_DISTANCE_M) {
            return Ok(p);
        }
    }
    Err(Error::Precondition(format!(
        "could not place a node {MIN_DISTANCE_M} m away from its neighbours within {radius} m"
    )))
}

/// Samples a placement for the two-RSU topology.
pub fn sample_placement<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Result<Placement> {
    for (name, radius) in [
        ("bs_radius_m", config.bs_radius_m),
        ("rsu_radius_m", config.rsu_radius_m),
    ] {
        if !(radius.is_finite() && radius > MIN_DISTANCE_M) {
            return Err(Error::Precondition(format!(
                "{name} = {radius} must exceed the {MIN_DISTANCE_M} m minimum link distance"
            )));
        }
    }

    let bs = Point::ORIGIN;
    let rsu = [
        point_in_ring(rng, bs, config.bs_radius_m),
        point_in_ring(rng, bs, config.bs_radius_m),
    ];
    let tags = [
        point_in_ring(rng, rsu[0], config.rsu_radius_m),
        point_in_ring(rng, rsu[1], config.rsu_radius_m),
    ];
    let mut vehicles = [[Point::ORIGIN; 2]; 2];
    for m in 0..2 {
        for slot in vehicles[m].iter_mut() {
            *slot =
                point_in_ring_avoiding(rng, rsu[m], config.rsu_radius_m, &[tags[m], rsu[1 - m]])?;
        }
    }
    Ok(Placement {
        bs,
        rsu,
        vehicles,
        tags,
    })
}
