#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::hash::Hash;

use loha::gridmap::OccupancyGrid;
use loha::search::SearchTree;
use loha::statespace::{Cell, Domain, Transition};

/// Shortest 4-connected path length by breadth-first search.
pub fn bfs_cost(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<u32> {
    let (w, h) = (grid.width() as i32, grid.height() as i32);
    let idx = |c: Cell| (c.y * w + c.x) as usize;
    let mut dist = vec![u32::MAX; (w * h) as usize];
    let mut queue = VecDeque::new();
    dist[idx(start)] = 0;
    queue.push_back(start);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            return Some(dist[idx(c)]);
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = Cell::new(c.x + dx, c.y + dy);
            if !grid.is_blocked(n.x as i64, n.y as i64) && dist[idx(n)] == u32::MAX {
                dist[idx(n)] = dist[idx(c)] + 1;
                queue.push_back(n);
            }
        }
    }
    None
}

/// Uniform-cost search over any domain, independent of the crate's searches.
pub fn dijkstra_cost<D: Domain>(
    domain: &D,
    start: D::State,
    goal: &D::State,
    limit: usize,
) -> Option<u32>
where
    D::State: Ord,
{
    let mut best: HashMap<D::State, u32> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(start, 0);
    heap.push(Reverse((0u32, start)));
    let mut out: Vec<Transition<D::State>> = Vec::new();
    let mut popped = 0;
    while let Some(Reverse((g, s))) = heap.pop() {
        if best.get(&s).is_some_and(|&b| b < g) {
            continue;
        }
        if domain.is_goal(&s, goal) {
            return Some(g);
        }
        popped += 1;
        if popped > limit {
            return None;
        }
        out.clear();
        domain.successors(&s, &mut out);
        for t in &out {
            let ng = g + t.cost;
            if best.get(&t.successor).map_or(true, |&b| ng < b) {
                best.insert(t.successor, ng);
                heap.push(Reverse((ng, t.successor)));
            }
        }
    }
    None
}

/// Sum of action costs along the tree path from `ancestor` down to `id`,
/// re-derived from the domain's transitions.
pub fn tree_path_cost<D: Domain>(
    domain: &D,
    tree: &SearchTree<D::State>,
    ancestor: u32,
    id: u32,
) -> Option<u32>
where
    D::State: Hash + Eq,
{
    let mut chain = vec![id];
    let mut cur = id;
    while cur != ancestor {
        cur = tree.node(cur).parent?;
        chain.push(cur);
    }
    chain.reverse();
    let mut total = 0;
    let mut out = Vec::new();
    for pair in chain.windows(2) {
        let (a, b) = (tree.node(pair[0]).state, tree.node(pair[1]).state);
        out.clear();
        domain.successors(&a, &mut out);
        total += out.iter().find(|t| t.successor == b)?.cost;
    }
    Some(total)
}

pub fn random_free_cell(grid: &OccupancyGrid, rng: &mut impl rand::Rng) -> Cell {
    loop {
        let c = Cell::new(
            rng.gen_range(0..grid.width() as i32),
            rng.gen_range(0..grid.height() as i32),
        );
        if !grid.is_blocked(c.x as i64, c.y as i64) {
            return c;
        }
    }
}
