//! State spaces: successor generation, the global heuristic and the
//! local-region metric.
//!
//! Every domain exposes exact integer action costs and a floating-point
//! global heuristic `h_g`. Local regions are Chebyshev windows over the
//! position components, measured in grid cells.

mod car4d;
mod graph;
mod grid2d;

use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gridmap::OccupancyGrid;

pub use car4d::{Car4d, CarState, HEADINGS, MAX_VELOCITY, MIN_VELOCITY};
pub use graph::ExplicitGraph;
pub use grid2d::{Cell, Grid2d};

/// Exact path cost. Both implemented grid domains use unit actions.
pub type Cost = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition<S> {
    pub successor: S,
    pub cost: Cost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Grid2d,
    Car4d,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Grid2d => "grid2d",
            DomainKind::Car4d => "car4d",
        }
    }
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Lattice states serialize as flat integer arrays in sample and problem files.
pub trait StateCodec: Sized {
    fn encode(&self) -> Vec<i64>;
    fn decode(values: &[i64]) -> Option<Self>;
}

pub trait Domain {
    type State: Copy + Eq + Hash + Debug;

    /// Appends valid successors of `s` to `out` and returns the number of
    /// cell occupancy checks performed.
    fn successors(&self, s: &Self::State, out: &mut Vec<Transition<Self::State>>) -> u64;

    fn h_g(&self, s: &Self::State, goal: &Self::State) -> f64;

    fn is_goal(&self, s: &Self::State, goal: &Self::State) -> bool;

    /// Chebyshev distance between the positions of `a` and `b`, in cells.
    fn region_distance(&self, a: &Self::State, b: &Self::State) -> f64;

    fn is_free(&self, s: &Self::State) -> bool;

    /// `b` lies on the border of the `k`-window around `a`.
    fn in_lrb(&self, a: &Self::State, b: &Self::State, k: u32) -> bool {
        self.region_distance(a, b) == k as f64
    }

    /// `b` has left the `k`-window around `a`.
    fn escaped(&self, a: &Self::State, b: &Self::State, k: u32) -> bool {
        self.region_distance(a, b) > k as f64
    }
}

/// Domains backed by an occupancy grid, with everything the feature
/// extractor and the problem sampler need.
pub trait GridDomain<'g>: Domain<State = <Self as GridDomain<'g>>::Lattice> + Sync {
    type Lattice: Copy + Eq + Hash + Debug + StateCodec + Send + Sync;

    const KIND: DomainKind;

    fn on_grid(grid: &'g OccupancyGrid) -> Self;

    fn grid(&self) -> &'g OccupancyGrid;

    /// Cell containing the state's position.
    fn anchor_cell(&self, s: &Self::State) -> (i64, i64);

    /// `h_g` evaluated at the centre of cell `(cx, cy)`.
    fn cell_h_g(&self, cx: i64, cy: i64, goal: &Self::State) -> f64;

    /// Length of the domain-specific tail of the feature vector
    /// (excluding the bias).
    fn extra_feature_len(&self) -> usize;

    fn push_extra_features(&self, s: &Self::State, out: &mut Vec<f64>);

    /// Uniformly random collision-free start state, or `None` after a bounded
    /// number of rejections.
    fn random_start<R: Rng>(&self, rng: &mut R) -> Option<Self::State>;

    /// Goal state at the given free cell.
    fn goal_at(&self, cx: i64, cy: i64) -> Self::State;
}

/// Draws a free cell by rejection sampling.
pub fn random_free_cell<R: Rng>(grid: &OccupancyGrid, rng: &mut R) -> Option<(i64, i64)> {
    for _ in 0..10_000 {
        let cx = rng.gen_range(0..grid.width()) as i64;
        let cy = rng.gen_range(0..grid.height()) as i64;
        if !grid.is_blocked(cx, cy) {
            return Some((cx, cy));
        }
    }
    None
}
