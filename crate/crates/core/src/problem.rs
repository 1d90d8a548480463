//! Start-goal problems over a set of maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridmap::OccupancyGrid;
use crate::search::{astar, NoHook, SearchParams};
use crate::seed::rng_for;
use crate::statespace::{random_free_cell, DomainKind, GridDomain, StateCodec};

/// Runs `$body` with `$d` bound to the domain type selected by `$kind`.
#[macro_export]
macro_rules! with_domain {
    ($kind:expr, $d:ident => $body:expr) => {
        match $kind {
            $crate::statespace::DomainKind::Grid2d => {
                type $d<'g> = $crate::statespace::Grid2d<'g>;
                $body
            }
            $crate::statespace::DomainKind::Car4d => {
                type $d<'g> = $crate::statespace::Car4d<'g>;
                $body
            }
        }
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub problem_id: u64,
    pub domain: DomainKind,
    pub map_id: String,
    pub start: Vec<i64>,
    pub goal: Vec<i64>,
}

impl Problem {
    pub fn decode<'g, D: GridDomain<'g>>(&self) -> Result<(D::State, D::State)> {
        if self.domain != D::KIND {
            return Err(Error::MixedDomain {
                first: D::KIND.to_string(),
                other: self.domain.to_string(),
            });
        }
        let bad = |what: &str, v: &[i64]| {
            Error::Config(format!("problem {}: invalid {what} {v:?}", self.problem_id))
        };
        let start = D::Lattice::decode(&self.start).ok_or_else(|| bad("start", &self.start))?;
        let goal = D::Lattice::decode(&self.goal).ok_or_else(|| bad("goal", &self.goal))?;
        Ok((start, goal))
    }
}

/// Named maps, kept in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MapSet {
    maps: Vec<(String, OccupancyGrid)>,
}

impl MapSet {
    pub fn new(maps: Vec<(String, OccupancyGrid)>) -> Self {
        MapSet { maps }
    }

    pub fn get(&self, id: &str) -> Option<&OccupancyGrid> {
        self.maps
            .iter()
            .find(|(name, _)| name == id)
            .map(|(_, g)| g)
    }

    pub fn require(&self, id: &str) -> Result<&OccupancyGrid> {
        self.get(id)
            .ok_or_else(|| Error::Config(format!("unknown map id {id:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &OccupancyGrid)> {
        self.maps.iter().map(|(n, g)| (n.as_str(), g))
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// How problems are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Chebyshev distance band between start and goal cells.
    pub min_distance: u32,
    pub max_distance: u32,
    /// Draws per problem before giving up.
    pub max_retries: u32,
    /// Weight of the search that certifies solvability.
    pub check_weight: f64,
    pub check_limit: Option<u64>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            min_distance: 10,
            max_distance: 60,
            max_retries: 200,
            check_weight: 4.0,
            check_limit: Some(500_000),
        }
    }
}

/// Problems drawn for one purpose, plus how many draws were rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemBatch {
    pub problems: Vec<Problem>,
    pub resampled: u64,
}

/// Draws `count` solvable problems with ids `first_id..`. Problem `i` uses
/// map `i mod len` and its own random stream, so any prefix of a batch is
/// reproducible on its own.
pub fn sample_problems(
    maps: &MapSet,
    domain: DomainKind,
    first_id: u64,
    count: usize,
    spec: &ProblemSpec,
    seed: u64,
    purpose: &str,
) -> Result<ProblemBatch> {
    if maps.is_empty() {
        return Err(Error::Config("no maps to sample problems on".into()));
    }
    if spec.min_distance > spec.max_distance {
        return Err(Error::Config("min_distance exceeds max_distance".into()));
    }
    let mut problems = Vec::with_capacity(count);
    let mut resampled = 0;
    for id in first_id..first_id + count as u64 {
        let (map_id, grid) = &maps.maps[(id % maps.len() as u64) as usize];
        let (problem, rejected) =
            with_domain!(domain, D => draw::<D>(grid, map_id, id, spec, seed, purpose))?;
        resampled += rejected;
        problems.push(problem);
    }
    Ok(ProblemBatch {
        problems,
        resampled,
    })
}

fn draw<'g, D: GridDomain<'g>>(
    grid: &'g OccupancyGrid,
    map_id: &str,
    id: u64,
    spec: &ProblemSpec,
    seed: u64,
    purpose: &str,
) -> Result<(Problem, u64)> {
    let domain = D::on_grid(grid);
    let mut rng = rng_for(seed, purpose, id);
    let params = SearchParams::new(spec.check_weight).with_limit(spec.check_limit);
    for attempt in 0..spec.max_retries as u64 {
        let Some(start) = domain.random_start(&mut rng) else {
            continue;
        };
        let Some((gx, gy)) = random_free_cell(grid, &mut rng) else {
            continue;
        };
        let (sx, sy) = domain.anchor_cell(&start);
        let dist = (sx - gx).abs().max((sy - gy).abs());
        if dist < spec.min_distance as i64 || dist > spec.max_distance as i64 {
            continue;
        }
        let goal = domain.goal_at(gx, gy);
        if !astar(&domain, start, goal, params, &mut NoHook).solved() {
            continue;
        }
        let problem = Problem {
            problem_id: id,
            domain: D::KIND,
            map_id: map_id.to_string(),
            start: start.encode(),
            goal: goal.encode(),
        };
        return Ok((problem, attempt));
    }
    Err(Error::Config(format!(
        "no solvable problem found on map {map_id:?} after {} draws",
        spec.max_retries
    )))
}
