use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{ExpansionHook, Key, NodeId, SearchNode, SearchResult, SearchStatus, SearchTree};
use crate::statespace::{Cost, Domain, Transition};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchParams {
    /// Heuristic inflation `w ≥ 1`; priorities are `g + w·h_g`.
    pub weight: f64,
    pub expansion_limit: Option<u64>,
}

impl SearchParams {
    pub fn new(weight: f64) -> Self {
        assert!(weight >= 1.0, "weight must be >= 1, got {weight}");
        SearchParams {
            weight,
            expansion_limit: None,
        }
    }

    pub fn with_limit(mut self, limit: Option<u64>) -> Self {
        self.expansion_limit = limit;
        self
    }
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams::new(1.0)
    }
}

/// Weighted A* from `start` to `goal`.
pub fn astar<D, H>(
    domain: &D,
    start: D::State,
    goal: D::State,
    params: SearchParams,
    hook: &mut H,
) -> SearchResult<D::State>
where
    D: Domain,
    H: ExpansionHook<D::State>,
{
    best_first(
        domain,
        start,
        &goal,
        params,
        |s: &D::State| domain.is_goal(s, &goal),
        None,
        hook,
    )
}

#[derive(Clone, Copy, Debug)]
struct OpenEntry {
    priority: Key,
    g: Cost,
    seq: u64,
    id: NodeId,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // BinaryHeap is a max-heap: the "greatest" entry is the one to expand.
    fn cmp(&self, other: &Self) -> Ordering {
        (Reverse(self.priority), self.g, Reverse(self.seq)).cmp(&(
            Reverse(other.priority),
            other.g,
            Reverse(other.seq),
        ))
    }
}

/// Weighted best-first search terminating on the first popped state that
/// satisfies `is_target`. `goal` only feeds the heuristic. States for which
/// `blocked` returns true are never generated.
pub(crate) fn best_first<D, T, H>(
    domain: &D,
    start: D::State,
    goal: &D::State,
    params: SearchParams,
    is_target: T,
    blocked: Option<&dyn Fn(&D::State) -> bool>,
    hook: &mut H,
) -> SearchResult<D::State>
where
    D: Domain,
    T: Fn(&D::State) -> bool,
    H: ExpansionHook<D::State>,
{
    let w = params.weight;
    let mut tree = SearchTree::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut expansions = 0u64;
    let mut collision_checks = 0u64;
    let mut successors: Vec<Transition<D::State>> = Vec::new();

    let h0 = domain.h_g(&start, goal);
    let root = tree.insert(SearchNode {
        state: start,
        g: 0,
        h: h0,
        parent: None,
        expansion_index: None,
    });
    open.push(OpenEntry {
        priority: Key(w * h0),
        g: 0,
        seq,
        id: root,
    });
    seq += 1;

    let mut status = SearchStatus::Exhausted;
    let mut terminal = None;

    while let Some(entry) = open.pop() {
        let node = tree.node(entry.id);
        if node.is_closed() || node.g != entry.g {
            continue;
        }
        if is_target(&node.state) {
            status = SearchStatus::Solved;
            terminal = Some(entry.id);
            break;
        }
        if params
            .expansion_limit
            .is_some_and(|limit| expansions >= limit)
        {
            status = SearchStatus::ExpansionLimit;
            break;
        }

        let state = node.state;
        let g = node.g;
        tree.node_mut(entry.id).expansion_index = Some(expansions);
        expansions += 1;

        successors.clear();
        collision_checks += domain.successors(&state, &mut successors);
        for t in &successors {
            if blocked.is_some_and(|b| b(&t.successor)) {
                continue;
            }
            let ng = g + t.cost;
            let id = match tree.id_of(&t.successor) {
                None => {
                    let h = domain.h_g(&t.successor, goal);
                    tree.insert(SearchNode {
                        state: t.successor,
                        g: ng,
                        h,
                        parent: Some(entry.id),
                        expansion_index: None,
                    })
                }
                Some(id) => {
                    let existing = tree.node_mut(id);
                    if existing.is_closed() || ng >= existing.g {
                        continue;
                    }
                    existing.g = ng;
                    existing.parent = Some(entry.id);
                    id
                }
            };
            let h = tree.node(id).h;
            open.push(OpenEntry {
                priority: Key(ng as f64 + w * h),
                g: ng,
                seq,
                id,
            });
            seq += 1;
        }

        hook.on_expand(&tree, entry.id);
    }

    let (path, cost) = match terminal {
        Some(id) => (Some(tree.path_to(id)), Some(tree.node(id).g)),
        None => (None, None),
    };
    SearchResult {
        status,
        path,
        cost,
        expansions,
        generated: tree.len() as u64,
        collision_checks,
        terminal,
        tree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::OccupancyGrid;
    use crate::search::{FnHook, NoHook};
    use crate::statespace::{Cell, Grid2d};

    /// Plain Dijkstra over all cells; independent of the engine under test.
    fn dijkstra(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<u32> {
        let (w, h) = (grid.width(), grid.height());
        let mut dist = vec![u32::MAX; w * h];
        let mut heap = BinaryHeap::new();
        let idx = |c: Cell| c.y as usize * w + c.x as usize;
        dist[idx(start)] = 0;
        heap.push(Reverse((0u32, start.x, start.y)));
        while let Some(Reverse((d, x, y))) = heap.pop() {
            let c = Cell::new(x, y);
            if d > dist[idx(c)] {
                continue;
            }
            if c == goal {
                return Some(d);
            }
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let n = Cell::new(x + dx, y + dy);
                if grid.is_blocked(n.x as i64, n.y as i64) {
                    continue;
                }
                if d + 1 < dist[idx(n)] {
                    dist[idx(n)] = d + 1;
                    heap.push(Reverse((d + 1, n.x, n.y)));
                }
            }
        }
        None
    }

    #[test]
    fn straight_line() {
        let g = OccupancyGrid::empty(8, 8).unwrap();
        let d = Grid2d::new(&g);
        let r = astar(
            &d,
            Cell::new(0, 0),
            Cell::new(5, 0),
            SearchParams::new(1.0),
            &mut NoHook,
        );
        assert_eq!(r.status, SearchStatus::Solved);
        assert_eq!(r.cost, Some(5));
        let path = r.path.unwrap();
        assert_eq!(path.first(), Some(&Cell::new(0, 0)));
        assert_eq!(path.last(), Some(&Cell::new(5, 0)));
        // High-g tie breaking walks straight to the goal.
        assert_eq!(r.expansions, 5);
    }

    #[test]
    fn wall_detour_matches_dijkstra() {
        let g = OccupancyGrid::from_ascii(&[
            "..........",
            "....@.....",
            "....@.....",
            "....@.....",
            "....@.....",
            "....@.....",
            "....@.....",
            "..........",
        ])
        .unwrap();
        let d = Grid2d::new(&g);
        let (s, t) = (Cell::new(1, 3), Cell::new(8, 3));
        let r = astar(&d, s, t, SearchParams::new(1.0), &mut NoHook);
        assert_eq!(r.cost, dijkstra(&g, s, t));
        assert_eq!(r.cost, Some(13));
    }

    #[test]
    fn random_grids_optimal_and_weighted_bound() {
        for seed in 0..40 {
            let g = OccupancyGrid::generate_random(24, 24, 0.3, seed).unwrap();
            let d = Grid2d::new(&g);
            let (s, t) = (Cell::new(1, 1), Cell::new(22, 21));
            if !d.is_free(&s) || !d.is_free(&t) {
                continue;
            }
            let opt = dijkstra(&g, s, t);
            let r = astar(&d, s, t, SearchParams::new(1.0), &mut NoHook);
            assert_eq!(r.cost, opt, "seed {seed}");
            let r4 = astar(&d, s, t, SearchParams::new(4.0), &mut NoHook);
            match opt {
                Some(c) => assert!(r4.cost.unwrap() <= 4 * c),
                None => assert_eq!(r4.status, SearchStatus::Exhausted),
            }
        }
    }

    #[test]
    fn exhausted_and_limited() {
        let g = OccupancyGrid::from_ascii(&["..@..", "..@..", "..@..", "..@.."]).unwrap();
        let d = Grid2d::new(&g);
        let r = astar(
            &d,
            Cell::new(0, 0),
            Cell::new(4, 0),
            SearchParams::new(1.0),
            &mut NoHook,
        );
        assert_eq!(r.status, SearchStatus::Exhausted);
        assert_eq!(r.expansions, 8);
        let r = astar(
            &d,
            Cell::new(0, 0),
            Cell::new(4, 0),
            SearchParams::new(1.0).with_limit(Some(3)),
            &mut NoHook,
        );
        assert_eq!(r.status, SearchStatus::ExpansionLimit);
        assert_eq!(r.expansions, 3);
    }

    #[test]
    fn hook_sees_children_and_monotone_priorities() {
        let g = OccupancyGrid::generate_random(32, 32, 0.25, 3).unwrap();
        let d = Grid2d::new(&g);
        let (s, t) = (Cell::new(0, 0), Cell::new(31, 31));
        let mut last_f = f64::NEG_INFINITY;
        let mut count = 0u64;
        let mut hook = FnHook(|tree: &SearchTree<Cell>, id: NodeId| {
            let node = tree.node(id);
            assert_eq!(node.expansion_index, Some(count));
            count += 1;
            assert!(node.f() >= last_f);
            last_f = node.f();
            if let Some(p) = node.parent {
                assert_eq!(tree.node(p).g + 1, node.g);
                assert!(tree.node(p).expansion_index < node.expansion_index);
            }
            // Successors generated by this expansion already point back here.
            for n in tree.nodes() {
                if n.parent == Some(id) {
                    assert_eq!(n.g, node.g + 1);
                }
            }
        });
        let _ = astar(&d, s, t, SearchParams::new(1.0), &mut hook);
    }
}
