use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::ops::Bound::{Excluded, Included, Unbounded};

use super::{ExpansionHook, Key, NodeId, SearchNode, SearchResult, SearchStatus, SearchTree};
use crate::statespace::{Cost, Domain, Transition};

/// OPEN ordered by `f = g + h_g`.
type OpenKey = (Key, NodeId);
/// FOCAL ordered by the secondary priority, then larger `g`, then insertion.
type FocalKey = (Key, Reverse<Cost>, u64, NodeId);

#[derive(Clone, Copy, Debug)]
struct Membership {
    f: Key,
    focal: FocalKey,
    in_open: bool,
}

/// Focal search with suboptimality bound `w`.
///
/// OPEN is ordered by `f = g + h_g`; FOCAL holds every open node with
/// `f ≤ w·f_min` and is expanded in order of `focal_priority(node)`. The
/// priority is evaluated whenever a node is inserted or its `g` improves.
pub fn focal_search<D, P, H>(
    domain: &D,
    start: D::State,
    goal: D::State,
    weight: f64,
    mut focal_priority: P,
    expansion_limit: Option<u64>,
    hook: &mut H,
) -> SearchResult<D::State>
where
    D: Domain,
    P: FnMut(&SearchNode<D::State>) -> f64,
    H: ExpansionHook<D::State>,
{
    assert!(weight >= 1.0, "weight must be >= 1, got {weight}");
    let mut tree = SearchTree::new();
    let mut members: Vec<Membership> = Vec::new();
    let mut open: BTreeSet<OpenKey> = BTreeSet::new();
    let mut focal: BTreeSet<FocalKey> = BTreeSet::new();
    let mut bound = f64::NEG_INFINITY;
    let mut seq = 0u64;
    let mut expansions = 0u64;
    let mut collision_checks = 0u64;
    let mut successors: Vec<Transition<D::State>> = Vec::new();

    let root = tree.insert(SearchNode {
        state: start,
        g: 0,
        h: domain.h_g(&start, &goal),
        parent: None,
        expansion_index: None,
    });
    {
        let node = tree.node(root);
        let m = Membership {
            f: Key(node.f()),
            focal: (Key(focal_priority(node)), Reverse(0), seq, root),
            in_open: true,
        };
        seq += 1;
        open.insert((m.f, root));
        members.push(m);
    }

    let mut status = SearchStatus::Exhausted;
    let mut terminal = None;

    while let Some(&(Key(f_min), _)) = open.first() {
        let new_bound = weight * f_min;
        if new_bound > bound {
            let lo = if bound == f64::NEG_INFINITY {
                Unbounded
            } else {
                Excluded((Key(bound), NodeId::MAX))
            };
            for &(_, id) in open.range((lo, Included((Key(new_bound), NodeId::MAX)))) {
                focal.insert(members[id as usize].focal);
            }
        } else if new_bound < bound {
            for &(_, id) in open.range((
                Excluded((Key(new_bound), NodeId::MAX)),
                Included((Key(bound), NodeId::MAX)),
            )) {
                focal.remove(&members[id as usize].focal);
            }
        }
        bound = new_bound;

        let key = focal.pop_first().expect("FOCAL contains the f_min node");
        let id = key.3;
        let m = &mut members[id as usize];
        open.remove(&(m.f, id));
        m.in_open = false;

        let node = tree.node(id);
        if domain.is_goal(&node.state, &goal) {
            status = SearchStatus::Solved;
            terminal = Some(id);
            break;
        }
        if expansion_limit.is_some_and(|limit| expansions >= limit) {
            status = SearchStatus::ExpansionLimit;
            break;
        }

        let state = node.state;
        let g = node.g;
        tree.node_mut(id).expansion_index = Some(expansions);
        expansions += 1;

        successors.clear();
        collision_checks += domain.successors(&state, &mut successors);
        for t in &successors {
            let ng = g + t.cost;
            let child = match tree.id_of(&t.successor) {
                None => {
                    let h = domain.h_g(&t.successor, &goal);
                    let child = tree.insert(SearchNode {
                        state: t.successor,
                        g: ng,
                        h,
                        parent: Some(id),
                        expansion_index: None,
                    });
                    members.push(Membership {
                        f: Key(0.0),
                        focal: (Key(0.0), Reverse(0), 0, child),
                        in_open: false,
                    });
                    child
                }
                Some(existing) => {
                    let node = tree.node_mut(existing);
                    if node.is_closed() || ng >= node.g {
                        continue;
                    }
                    node.g = ng;
                    node.parent = Some(id);
                    let m = members[existing as usize];
                    if m.in_open {
                        open.remove(&(m.f, existing));
                        focal.remove(&m.focal);
                    }
                    existing
                }
            };
            let node = tree.node(child);
            let m = Membership {
                f: Key(node.f()),
                focal: (Key(focal_priority(node)), Reverse(ng), seq, child),
                in_open: true,
            };
            seq += 1;
            open.insert((m.f, child));
            if m.f.0 <= bound {
                focal.insert(m.focal);
            }
            members[child as usize] = m;
        }

        hook.on_expand(&tree, id);
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
    use crate::search::{astar, NoHook, SearchParams};
    use crate::statespace::{Cell, Grid2d};

    #[test]
    fn f_priority_matches_astar_cost() {
        for seed in 0..30 {
            let g = OccupancyGrid::generate_random(24, 24, 0.25, seed).unwrap();
            let d = Grid2d::new(&g);
            let (s, t) = (Cell::new(0, 0), Cell::new(23, 20));
            let a = astar(&d, s, t, SearchParams::new(1.0), &mut NoHook);
            let f = focal_search(&d, s, t, 1.0, |n| n.f(), None, &mut NoHook);
            assert_eq!(a.status, f.status);
            assert_eq!(a.cost, f.cost, "seed {seed}");
        }
    }

    #[test]
    fn weighted_priority_reproduces_weighted_astar() {
        // With focal priority g + w·h the weighted-A* choice is always in FOCAL,
        // so the expansion sequences coincide.
        for seed in 0..30 {
            let g = OccupancyGrid::generate_random(32, 32, 0.3, seed).unwrap();
            let d = Grid2d::new(&g);
            let (s, t) = (Cell::new(1, 2), Cell::new(30, 29));
            for w in [2.0, 4.0] {
                let a = astar(&d, s, t, SearchParams::new(w), &mut NoHook);
                let f = focal_search(&d, s, t, w, |n| n.g as f64 + w * n.h, None, &mut NoHook);
                assert_eq!(a.expansions, f.expansions, "seed {seed} w {w}");
                assert_eq!(a.path, f.path);
            }
        }
    }

    #[test]
    fn greedy_priority_escapes_cul_de_sac() {
        // The goal is straight through a dead-end pocket; greedy guidance
        // dives into it first and FOCAL must refill from OPEN.
        let g = OccupancyGrid::from_ascii(&[
            "............",
            "..@@@@@@@...",
            "........@...",
            "........@...",
            "..@@@@@@@...",
            "............",
        ])
        .unwrap();
        let d = Grid2d::new(&g);
        let (s, t) = (Cell::new(0, 3), Cell::new(11, 3));
        let goal = t;
        let r = focal_search(&d, s, t, 3.0, |n| d.h_g(&n.state, &goal), None, &mut NoHook);
        assert_eq!(r.status, SearchStatus::Solved);
        let opt = astar(&d, s, t, SearchParams::new(1.0), &mut NoHook)
            .cost
            .unwrap();
        assert!(r.cost.unwrap() <= 3 * opt);
    }

    #[test]
    fn exhausted_when_unreachable() {
        let g = OccupancyGrid::from_ascii(&["..@..", "..@..", "..@..", "..@.."]).unwrap();
        let d = Grid2d::new(&g);
        let r = focal_search(
            &d,
            Cell::new(0, 0),
            Cell::new(4, 0),
            2.0,
            |n| n.h,
            None,
            &mut NoHook,
        );
        assert_eq!(r.status, SearchStatus::Exhausted);
        assert_eq!(r.expansions, 8);
    }
}
