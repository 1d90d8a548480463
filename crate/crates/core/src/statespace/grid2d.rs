use rand::Rng;

use super::{random_free_cell, Cost, Domain, DomainKind, GridDomain, StateCodec, Transition};
use crate::gridmap::OccupancyGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }
}

impl StateCodec for Cell {
    fn encode(&self) -> Vec<i64> {
        vec![self.x as i64, self.y as i64]
    }

    fn decode(values: &[i64]) -> Option<Self> {
        match values {
            &[x, y] => Some(Cell::new(i32::try_from(x).ok()?, i32::try_from(y).ok()?)),
            _ => None,
        }
    }
}

/// 4-connected unit-cost grid with the Manhattan heuristic.
#[derive(Clone, Copy, Debug)]
pub struct Grid2d<'g> {
    grid: &'g OccupancyGrid,
}

const MOVES: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

impl<'g> Grid2d<'g> {
    pub fn new(grid: &'g OccupancyGrid) -> Self {
        Grid2d { grid }
    }
}

impl Domain for Grid2d<'_> {
    type State = Cell;

    fn successors(&self, s: &Cell, out: &mut Vec<Transition<Cell>>) -> u64 {
        for (dx, dy) in MOVES {
            let next = Cell::new(s.x + dx, s.y + dy);
            if !self.grid.is_blocked(next.x as i64, next.y as i64) {
                out.push(Transition {
                    successor: next,
                    cost: 1 as Cost,
                });
            }
        }
        MOVES.len() as u64
    }

    fn h_g(&self, s: &Cell, goal: &Cell) -> f64 {
        ((s.x - goal.x).abs() + (s.y - goal.y).abs()) as f64
    }

    fn is_goal(&self, s: &Cell, goal: &Cell) -> bool {
        s == goal
    }

    fn region_distance(&self, a: &Cell, b: &Cell) -> f64 {
        (a.x - b.x).abs().max((a.y - b.y).abs()) as f64
    }

    fn is_free(&self, s: &Cell) -> bool {
        !self.grid.is_blocked(s.x as i64, s.y as i64)
    }
}

impl<'g> GridDomain<'g> for Grid2d<'g> {
    type Lattice = Cell;

    const KIND: DomainKind = DomainKind::Grid2d;

    fn on_grid(grid: &'g OccupancyGrid) -> Self {
        Grid2d::new(grid)
    }

    fn grid(&self) -> &'g OccupancyGrid {
        self.grid
    }

    fn anchor_cell(&self, s: &Cell) -> (i64, i64) {
        (s.x as i64, s.y as i64)
    }

    fn cell_h_g(&self, cx: i64, cy: i64, goal: &Cell) -> f64 {
        ((cx - goal.x as i64).abs() + (cy - goal.y as i64).abs()) as f64
    }

    fn extra_feature_len(&self) -> usize {
        0
    }

    fn push_extra_features(&self, _s: &Cell, _out: &mut Vec<f64>) {}

    fn random_start<R: Rng>(&self, rng: &mut R) -> Option<Cell> {
        random_free_cell(self.grid, rng).map(|(x, y)| Cell::new(x as i32, y as i32))
    }

    fn goal_at(&self, cx: i64, cy: i64) -> Cell {
        Cell::new(cx as i32, cy as i32)
    }
}
