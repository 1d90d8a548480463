//! Local-residual training data harvested from a single global search.
//!
//! Once a state `s` is expanded, a best-first search orders the states that
//! descend from `s` by `g(s') + h_g(s') = g(s) + b(s, s')` with
//! `b(s, s') = c(s, s') + h_g(s')`. Dropping the constant `g(s)` leaves the
//! ordering a local search rooted at `s` would use, so the first expanded
//! descendant that leaves the window of `s` is its best escape, and each
//! earlier in-window descendant gives a lower bound on it.
//!
//! [`BacktrackCollector`] hooks into the search and, on every expansion,
//! walks up the parent chain of the expanded node:
//!
//! ```text
//! cur = s.parent
//! while cur exists and cur is not complete:
//!     b = (g(s) - g(cur)) + h_g(s) - h_g(cur)
//!     if dist(cur, s) > K: complete cur with b, dropping its partial record
//!     else:                overwrite cur's partial record with (b, dist)
//!     cur = cur.parent
//! ```
//!
//! It never generates successors, checks collisions or touches OPEN.

use serde::{Deserialize, Serialize};

use crate::search::{
    local_residual_oracle, ExpansionHook, NodeId, OracleConfig, OracleOutcome, SearchTree,
};
use crate::statespace::{Cost, Domain, DomainKind, StateCodec};

pub const SAMPLE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSource {
    Oracle,
    BacktrackComplete,
    BacktrackIncomplete,
}

/// Search that produced a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Astar,
    WeightedAstar,
    Focal,
    LocalOracle,
}

/// One training record. Field order is the on-disk JSONL order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub schema_version: u32,
    pub domain: DomainKind,
    pub map_id: String,
    pub problem_id: u64,
    pub state: Vec<i64>,
    pub goal: Vec<i64>,
    #[serde(rename = "K")]
    pub k: u32,
    /// Residual `h_k`, exact (complete) or a lower bound (incomplete).
    pub target: f64,
    /// Loss weight: 1 for complete samples, `d / K` otherwise.
    pub alpha: f64,
    pub complete: bool,
    pub source: SampleSource,
    pub search_mode: SearchMode,
    pub h_g_s: f64,
}

/// Identifies where collected samples come from.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleContext {
    pub domain: DomainKind,
    pub map_id: String,
    pub problem_id: u64,
    pub goal: Vec<i64>,
    pub k: u32,
    pub search_mode: SearchMode,
}

/// Per-ancestor bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendingRecord<S> {
    pub state: S,
    pub h_g_s: f64,
    pub g_s: Cost,
    /// Latest residual bound, or the exact residual once completed.
    pub best_b: f64,
    /// Region distance of the descendant that produced `best_b`, in cells.
    pub best_d: f64,
    pub completed: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CollectorStats {
    pub expansions_seen: u64,
    /// Ancestor visits across all backtracks.
    pub backtrack_steps: u64,
    pub completions: u64,
    pub incomplete_updates: u64,
    /// Overwrites of a partial record with a smaller bound.
    pub bound_decreases: u64,
    /// Completions whose target is below the last partial bound.
    pub completions_below_bound: u64,
}

pub struct BacktrackCollector<'d, D: Domain> {
    domain: &'d D,
    k: u32,
    records: Vec<Option<PendingRecord<D::State>>>,
    stats: CollectorStats,
}

impl<'d, D: Domain> BacktrackCollector<'d, D> {
    pub fn new(domain: &'d D, k: u32) -> Self {
        assert!(k >= 1, "local window K must be >= 1");
        BacktrackCollector {
            domain,
            k,
            records: Vec::new(),
            stats: CollectorStats::default(),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn stats(&self) -> CollectorStats {
        self.stats
    }

    pub fn record(&self, id: NodeId) -> Option<&PendingRecord<D::State>> {
        self.records.get(id as usize).and_then(Option::as_ref)
    }

    /// Records in node-id order.
    pub fn records(&self) -> impl Iterator<Item = (NodeId, &PendingRecord<D::State>)> {
        self.records
            .iter()
            .enumerate()
            .filter_map(|(id, r)| r.as_ref().map(|r| (id as NodeId, r)))
    }

    pub fn complete_count(&self) -> usize {
        self.records().filter(|(_, r)| r.completed).count()
    }

    pub fn incomplete_count(&self) -> usize {
        self.records().filter(|(_, r)| !r.completed).count()
    }

    /// Emits one sample per completed record and one per partial record
    /// that made progress (`best_d > 0`).
    pub fn finalize(&self, ctx: &SampleContext) -> Vec<Sample>
    where
        D::State: StateCodec,
    {
        assert_eq!(ctx.k, self.k, "sample context K differs from collector K");
        let k = self.k as f64;
        self.records()
            .filter(|(_, r)| r.completed || r.best_d > 0.0)
            .map(|(_, r)| Sample {
                schema_version: SAMPLE_SCHEMA_VERSION,
                domain: ctx.domain,
                map_id: ctx.map_id.clone(),
                problem_id: ctx.problem_id,
                state: r.state.encode(),
                goal: ctx.goal.clone(),
                k: self.k,
                target: r.best_b,
                alpha: if r.completed { 1.0 } else { r.best_d / k },
                complete: r.completed,
                source: if r.completed {
                    SampleSource::BacktrackComplete
                } else {
                    SampleSource::BacktrackIncomplete
                },
                search_mode: ctx.search_mode,
                h_g_s: r.h_g_s,
            })
            .collect()
    }
}

impl<D: Domain> ExpansionHook<D::State> for BacktrackCollector<'_, D> {
    fn on_expand(&mut self, tree: &SearchTree<D::State>, id: NodeId) {
        self.stats.expansions_seen += 1;
        let node = tree.node(id);
        let k = self.k as f64;
        let mut cur = node.parent;
        while let Some(c) = cur {
            if self.record(c).is_some_and(|r| r.completed) {
                break;
            }
            let ancestor = tree.node(c);
            let b = (node.g - ancestor.g) as f64 + node.h - ancestor.h;
            let d = self.domain.region_distance(&ancestor.state, &node.state);
            let previous = self.record(c).map(|r| r.best_b);
            let completed = d > k;
            if completed {
                self.stats.completions += 1;
                if previous.is_some_and(|p| b < p) {
                    self.stats.completions_below_bound += 1;
                }
            } else {
                self.stats.incomplete_updates += 1;
                if previous.is_some_and(|p| b < p) {
                    self.stats.bound_decreases += 1;
                }
            }
            if self.records.len() <= c as usize {
                self.records.resize(tree.len(), None);
            }
            self.records[c as usize] = Some(PendingRecord {
                state: ancestor.state,
                h_g_s: ancestor.h,
                g_s: ancestor.g,
                best_b: b,
                best_d: d,
                completed,
            });
            self.stats.backtrack_steps += 1;
            cur = ancestor.parent;
        }
    }
}

/// Oracle baseline options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleCollection {
    pub oracle: OracleConfig,
    /// Treat states the global search closed before the root as obstacles.
    pub closed_list_obstacles: bool,
}

impl OracleCollection {
    pub fn new(oracle: OracleConfig) -> Self {
        OracleCollection {
            oracle,
            closed_list_obstacles: false,
        }
    }
}

/// Expansion order of a finished global search, used by the closed-list
/// ablation.
pub struct ClosedList<'t, S> {
    tree: &'t SearchTree<S>,
}

impl<'t, S: Copy + Eq + std::hash::Hash> ClosedList<'t, S> {
    pub fn new(tree: &'t SearchTree<S>) -> Self {
        ClosedList { tree }
    }

    /// Whether `state` had been expanded before `root` was.
    pub fn closed_before(&self, root: &S, state: &S) -> bool {
        let Some(other) = self
            .tree
            .id_of(state)
            .and_then(|id| self.tree.node(id).expansion_index)
        else {
            return false;
        };
        match self
            .tree
            .id_of(root)
            .and_then(|id| self.tree.node(id).expansion_index)
        {
            Some(root_index) => other < root_index,
            None => true,
        }
    }
}

/// Runs the local oracle from every state. Dead ends and capped searches
/// yield no sample but their expansions are still counted.
pub fn collect_via_oracle<D>(
    domain: &D,
    states: &[D::State],
    goal: &D::State,
    options: OracleCollection,
    closed: Option<&ClosedList<'_, D::State>>,
    ctx: &SampleContext,
) -> (Vec<Sample>, u64)
where
    D: Domain,
    D::State: StateCodec,
{
    let mut samples = Vec::new();
    let mut total_expansions = 0;
    for s in states {
        let blocked = |t: &D::State| closed.is_some_and(|c| c.closed_before(s, t));
        let blocked_ref: Option<&dyn Fn(&D::State) -> bool> = if options.closed_list_obstacles {
            Some(&blocked)
        } else {
            None
        };
        let result = local_residual_oracle(domain, *s, goal, options.oracle, blocked_ref);
        total_expansions += result.expansions;
        if let OracleOutcome::Residual { h_k, .. } = result.outcome {
            samples.push(Sample {
                schema_version: SAMPLE_SCHEMA_VERSION,
                domain: ctx.domain,
                map_id: ctx.map_id.clone(),
                problem_id: ctx.problem_id,
                state: s.encode(),
                goal: ctx.goal.clone(),
                k: options.oracle.k,
                target: h_k,
                alpha: 1.0,
                complete: true,
                source: SampleSource::Oracle,
                search_mode: SearchMode::LocalOracle,
                h_g_s: domain.h_g(s, goal),
            });
        }
    }
    (samples, total_expansions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::OccupancyGrid;
    use crate::search::{astar, NoHook, SearchParams};
    use crate::statespace::{Cell, ExplicitGraph, Grid2d};

    fn ctx(k: u32) -> SampleContext {
        SampleContext {
            domain: DomainKind::Grid2d,
            map_id: "test".into(),
            problem_id: 0,
            goal: vec![0, 0],
            k,
            search_mode: SearchMode::Astar,
        }
    }

    #[test]
    fn corridor_states_complete_with_zero_residual() {
        // 1-wide corridor along y = 2, goal at its east end.
        let mut rows = vec!["@".repeat(20); 5];
        rows[2] = ".".repeat(20);
        let g = OccupancyGrid::from_ascii(&rows.iter().map(String::as_str).collect::<Vec<_>>())
            .unwrap();
        let y = 2;
        let d = Grid2d::new(&g);
        let k = 3;
        let mut collector = BacktrackCollector::new(&d, k);
        let r = astar(
            &d,
            Cell::new(0, y),
            Cell::new(19, y),
            SearchParams::new(1.0),
            &mut collector,
        );
        assert_eq!(r.cost, Some(19));
        // Expanded: x = 0..=18. States at x <= 18 - (K + 1) complete.
        for x in 0..20 {
            let id = r.tree.id_of(&Cell::new(x, y)).unwrap();
            let rec = collector.record(id);
            if x <= 18 - (k as i32 + 1) {
                let rec = rec.unwrap();
                assert!(rec.completed, "x = {x}");
                assert_eq!(rec.best_b, 0.0);
                assert_eq!(rec.best_d, (k + 1) as f64);
            } else if x < 18 {
                let rec = rec.unwrap();
                assert!(!rec.completed);
                assert_eq!(rec.best_d, (18 - x) as f64);
            } else {
                assert!(rec.is_none(), "x = {x}");
            }
        }
        let samples = collector.finalize(&ctx(k));
        assert_eq!(samples.len(), 18);
        assert!(samples.iter().all(|s| s.target == 0.0));
        assert_eq!(samples.iter().filter(|s| s.complete).count(), 15);
    }

    #[test]
    fn alpha_and_dropping_rules() {
        let mut graph = ExplicitGraph::new();
        let a = graph.add_vertex(0, 0);
        let b = graph.add_vertex(1, 0);
        let c = graph.add_vertex(2, 0);
        graph.add_edge(a, b);
        graph.add_edge(b, c);
        let far = graph.add_vertex(50, 50);
        let mut collector = BacktrackCollector::new(&graph, 4);
        let r = astar(&graph, a, far, SearchParams::new(1.0), &mut collector);
        assert!(!r.solved());
        let samples = collector.finalize(&ctx(4));
        // a: partial via c (d = 2), b: partial via c (d = 1); c is a leaf.
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].state, vec![0]);
        assert_eq!(samples[0].alpha, 0.5);
        assert_eq!(
            samples[0].target,
            2.0 + graph.h_g(&c, &far) - graph.h_g(&a, &far)
        );
        assert!(!samples[0].complete);
        assert_eq!(samples[1].alpha, 0.25);
    }

    #[test]
    fn start_only_search_yields_nothing() {
        let g = OccupancyGrid::from_ascii(&["@@@@", "@.@@", "@@@@", "@@@@"]).unwrap();
        let d = Grid2d::new(&g);
        let mut collector = BacktrackCollector::new(&d, 2);
        let r = astar(
            &d,
            Cell::new(1, 1),
            Cell::new(3, 3),
            SearchParams::new(1.0),
            &mut collector,
        );
        assert_eq!(r.expansions, 1);
        assert!(collector.finalize(&ctx(2)).is_empty());
        assert_eq!(collector.stats().backtrack_steps, 0);
    }

    #[test]
    fn completed_chain_stops_backtracking() {
        let g = OccupancyGrid::empty(30, 5).unwrap();
        let d = Grid2d::new(&g);
        let mut collector = BacktrackCollector::new(&d, 1);
        let r = astar(
            &d,
            Cell::new(0, 2),
            Cell::new(29, 2),
            SearchParams::new(1.0),
            &mut collector,
        );
        assert!(r.solved());
        // Each expansion visits its parent (partial) and grandparent (completes),
        // then stops at the completed great-grandparent.
        let stats = collector.stats();
        assert!(stats.backtrack_steps <= 2 * stats.expansions_seen);
    }

    #[test]
    fn oracle_collection_accounting() {
        let g = OccupancyGrid::empty(30, 30).unwrap();
        let d = Grid2d::new(&g);
        let goal = Cell::new(29, 29);
        let states: Vec<Cell> = (0..10).map(|i| Cell::new(i, 2 * i)).collect();
        let cfg = OracleConfig::new(3);
        let (samples, total) = collect_via_oracle(
            &d,
            &states,
            &goal,
            OracleCollection::new(cfg),
            None,
            &ctx(3),
        );
        let expected: u64 = states
            .iter()
            .map(|s| local_residual_oracle(&d, *s, &goal, cfg, None).expansions)
            .sum();
        assert_eq!(total, expected);
        assert_eq!(samples.len(), 10);
        assert!(samples.iter().all(|s| s.target == 0.0 && s.alpha == 1.0));
    }

    #[test]
    fn closed_list_ablation() {
        let g = OccupancyGrid::generate_random(24, 24, 0.2, 4).unwrap();
        let d = Grid2d::new(&g);
        let (s, goal) = (Cell::new(2, 2), Cell::new(21, 20));
        let r = astar(&d, s, goal, SearchParams::new(1.0), &mut NoHook);
        let states: Vec<Cell> = r
            .tree
            .expansion_order()
            .iter()
            .map(|&id| r.tree.node(id).state)
            .collect();
        let cfg = OracleCollection::new(OracleConfig::new(3));
        let off = collect_via_oracle(&d, &states, &goal, cfg, None, &ctx(3));

        // Flag on with an empty closed list is identical.
        let empty = crate::search::SearchTree::new();
        let on_empty = OracleCollection {
            closed_list_obstacles: true,
            ..cfg
        };
        let same = collect_via_oracle(
            &d,
            &states,
            &goal,
            on_empty,
            Some(&ClosedList::new(&empty)),
            &ctx(3),
        );
        assert_eq!(off, same);

        // Flag on with the real closed list: later roots see fewer open cells.
        let closed = ClosedList::new(&r.tree);
        let (on, _) = collect_via_oracle(&d, &states, &goal, on_empty, Some(&closed), &ctx(3));
        assert!(on.len() <= off.0.len());
    }

    #[test]
    fn closed_list_blocking_only_exit_is_dead_end() {
        // Pocket opening to the east; the global search closed the mouth first.
        let g = OccupancyGrid::from_ascii(&[
            "@@@@@@@@", "@....@@@", "@.......", "@....@@@", "@@@@@@@@",
        ])
        .unwrap();
        let d = Grid2d::new(&g);
        let goal = Cell::new(7, 2);
        let mouth = Cell::new(5, 2);
        let mut graph_tree = crate::search::SearchTree::new();
        graph_tree.insert(crate::search::SearchNode {
            state: mouth,
            g: 0,
            h: 0.0,
            parent: None,
            expansion_index: Some(0),
        });
        graph_tree.insert(crate::search::SearchNode {
            state: Cell::new(2, 2),
            g: 0,
            h: 0.0,
            parent: None,
            expansion_index: Some(1),
        });
        let closed = ClosedList::new(&graph_tree);
        let options = OracleCollection {
            oracle: OracleConfig::new(4),
            closed_list_obstacles: true,
        };
        let (samples, _) = collect_via_oracle(
            &d,
            &[Cell::new(2, 2)],
            &goal,
            options,
            Some(&closed),
            &ctx(4),
        );
        assert!(samples.is_empty());
        let (samples, _) = collect_via_oracle(
            &d,
            &[Cell::new(2, 2)],
            &goal,
            OracleCollection::new(OracleConfig::new(4)),
            None,
            &ctx(4),
        );
        assert_eq!(samples.len(), 1);
    }
}
