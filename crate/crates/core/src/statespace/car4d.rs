//! Ackermann-style car on a half-cell lattice.
//!
//! State is `(xi, yi, theta, v)`: world position `(0.5·xi, 0.5·yi)` in cell
//! units, heading `theta·30°` and signed velocity `v ∈ [-1, 3]` in half-cells
//! per step. Every action costs 1 and combines a velocity change
//! `Δv ∈ {-1, 0, 1}` with a steering change `δ ∈ {-60°, …, 60°}`:
//!
//! * `v' = clamp(v + Δv, -1, 3)`, `theta' = theta + δ/30 (mod 12)`;
//! * `v' = 0`: the car stays in place and may only turn by up to 30°;
//! * otherwise it translates `v'` half-cells along `theta'` (backwards for
//!   `v' < 0`), the endpoint snapped to the nearest lattice point. The
//!   straight segment is sampled every half cell and each sample's cell must
//!   be free.

use rand::Rng;

use super::{random_free_cell, Domain, DomainKind, GridDomain, StateCodec, Transition};
use crate::gridmap::OccupancyGrid;

pub const HEADINGS: u8 = 12;
pub const MIN_VELOCITY: i8 = -1;
pub const MAX_VELOCITY: i8 = 3;

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;
const COS: [f64; 12] = [
    1.0,
    HALF_SQRT3,
    0.5,
    0.0,
    -0.5,
    -HALF_SQRT3,
    -1.0,
    -HALF_SQRT3,
    -0.5,
    0.0,
    0.5,
    HALF_SQRT3,
];
const SIN: [f64; 12] = [
    0.0,
    0.5,
    HALF_SQRT3,
    1.0,
    HALF_SQRT3,
    0.5,
    0.0,
    -0.5,
    -HALF_SQRT3,
    -1.0,
    -HALF_SQRT3,
    -0.5,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CarState {
    pub xi: i32,
    pub yi: i32,
    pub theta: u8,
    pub v: i8,
}

impl CarState {
    pub const fn new(xi: i32, yi: i32, theta: u8, v: i8) -> Self {
        CarState { xi, yi, theta, v }
    }

    pub fn world_position(&self) -> (f64, f64) {
        (0.5 * self.xi as f64, 0.5 * self.yi as f64)
    }
}

impl StateCodec for CarState {
    fn encode(&self) -> Vec<i64> {
        vec![
            self.xi as i64,
            self.yi as i64,
            self.theta as i64,
            self.v as i64,
        ]
    }

    fn decode(values: &[i64]) -> Option<Self> {
        match values {
            &[xi, yi, theta, v] => {
                if !(0..HEADINGS as i64).contains(&theta)
                    || !(MIN_VELOCITY as i64..=MAX_VELOCITY as i64).contains(&v)
                {
                    return None;
                }
                Some(CarState::new(
                    i32::try_from(xi).ok()?,
                    i32::try_from(yi).ok()?,
                    theta as u8,
                    v as i8,
                ))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
struct Primitive {
    dxi: i32,
    dyi: i32,
    /// Segment samples in half-cell offsets, excluding the start point.
    samples: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Car4d<'g> {
    grid: &'g OccupancyGrid,
    /// Indexed by `theta * 4 + velocity slot` for `v ∈ {-1, 1, 2, 3}`.
    primitives: Vec<Primitive>,
}

fn velocity_slot(v: i8) -> usize {
    match v {
        -1 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        _ => unreachable!("no motion primitive for v = {v}"),
    }
}

fn build_primitives() -> Vec<Primitive> {
    let mut out = Vec::with_capacity(HEADINGS as usize * 4);
    for theta in 0..HEADINGS as usize {
        for v in [-1i8, 1, 2, 3] {
            let fx = v as f64 * COS[theta];
            let fy = v as f64 * SIN[theta];
            let dxi = fx.round() as i32;
            let dyi = fy.round() as i32;
            let length = ((dxi * dxi + dyi * dyi) as f64).sqrt();
            let steps = length.ceil().max(1.0) as usize;
            let samples = (1..=steps)
                .map(|i| {
                    let t = i as f64 / steps as f64;
                    (dxi as f64 * t, dyi as f64 * t)
                })
                .collect();
            out.push(Primitive { dxi, dyi, samples });
        }
    }
    out
}

impl<'g> Car4d<'g> {
    pub fn new(grid: &'g OccupancyGrid) -> Self {
        Car4d {
            grid,
            primitives: build_primitives(),
        }
    }

    fn position_free(&self, xi: f64, yi: f64) -> bool {
        let cx = (0.5 * xi).floor() as i64;
        let cy = (0.5 * yi).floor() as i64;
        !self.grid.is_blocked(cx, cy)
    }
}

impl Domain for Car4d<'_> {
    type State = CarState;

    fn successors(&self, s: &CarState, out: &mut Vec<Transition<CarState>>) -> u64 {
        let first = out.len();
        let mut checks = 0u64;
        for dv in [-1i8, 0, 1] {
            let v = (s.v + dv).clamp(MIN_VELOCITY, MAX_VELOCITY);
            for delta in -2i8..=2 {
                let theta = (s.theta as i8 + delta).rem_euclid(HEADINGS as i8) as u8;
                let next = if v == 0 {
                    if delta.abs() > 1 {
                        continue;
                    }
                    CarState::new(s.xi, s.yi, theta, 0)
                } else {
                    let prim = &self.primitives[theta as usize * 4 + velocity_slot(v)];
                    let mut clear = true;
                    for &(ox, oy) in &prim.samples {
                        checks += 1;
                        if !self.position_free(s.xi as f64 + ox, s.yi as f64 + oy) {
                            clear = false;
                            break;
                        }
                    }
                    if !clear {
                        continue;
                    }
                    CarState::new(s.xi + prim.dxi, s.yi + prim.dyi, theta, v)
                };
                if next == *s || out[first..].iter().any(|t| t.successor == next) {
                    continue;
                }
                out.push(Transition {
                    successor: next,
                    cost: 1,
                });
            }
        }
        checks
    }

    fn h_g(&self, s: &CarState, goal: &CarState) -> f64 {
        let dx = 0.5 * (s.xi - goal.xi) as f64;
        let dy = 0.5 * (s.yi - goal.yi) as f64;
        dx.hypot(dy) / MAX_VELOCITY as f64
    }

    fn is_goal(&self, s: &CarState, goal: &CarState) -> bool {
        s.xi == goal.xi && s.yi == goal.yi
    }

    fn region_distance(&self, a: &CarState, b: &CarState) -> f64 {
        0.5 * (a.xi - b.xi).abs().max((a.yi - b.yi).abs()) as f64
    }

    fn is_free(&self, s: &CarState) -> bool {
        s.theta < HEADINGS
            && (MIN_VELOCITY..=MAX_VELOCITY).contains(&s.v)
            && self.position_free(s.xi as f64, s.yi as f64)
    }
}

impl<'g> GridDomain<'g> for Car4d<'g> {
    type Lattice = CarState;

    const KIND: DomainKind = DomainKind::Car4d;

    fn on_grid(grid: &'g OccupancyGrid) -> Self {
        Car4d::new(grid)
    }

    fn grid(&self) -> &'g OccupancyGrid {
        self.grid
    }

    fn anchor_cell(&self, s: &CarState) -> (i64, i64) {
        (s.xi.div_euclid(2) as i64, s.yi.div_euclid(2) as i64)
    }

    fn cell_h_g(&self, cx: i64, cy: i64, goal: &CarState) -> f64 {
        let (gx, gy) = goal.world_position();
        (cx as f64 + 0.5 - gx).hypot(cy as f64 + 0.5 - gy) / MAX_VELOCITY as f64
    }

    fn extra_feature_len(&self) -> usize {
        HEADINGS as usize + (MAX_VELOCITY - MIN_VELOCITY + 1) as usize
    }

    fn push_extra_features(&self, s: &CarState, out: &mut Vec<f64>) {
        out.extend((0..HEADINGS).map(|t| if t == s.theta { 1.0 } else { 0.0 }));
        out.extend((MIN_VELOCITY..=MAX_VELOCITY).map(|v| if v == s.v { 1.0 } else { 0.0 }));
    }

    fn random_start<R: Rng>(&self, rng: &mut R) -> Option<CarState> {
        let (cx, cy) = random_free_cell(self.grid, rng)?;
        let xi = 2 * cx as i32 + rng.gen_range(0..2);
        let yi = 2 * cy as i32 + rng.gen_range(0..2);
        Some(CarState::new(xi, yi, rng.gen_range(0..HEADINGS), 0))
    }

    fn goal_at(&self, cx: i64, cy: i64) -> CarState {
        CarState::new(2 * cx as i32 + 1, 2 * cy as i32 + 1, 0, 0)
    }
}
