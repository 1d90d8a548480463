//! Best-first search engines over a [`Domain`](crate::statespace::Domain).
//!
//! All engines share the same contracts:
//!
//! * strict closed list: a state is expanded at most once; a cheaper path
//!   found before expansion updates `g` and the parent, afterwards it is
//!   ignored;
//! * priority ties go to the larger `g`, then to the earlier insertion;
//! * the expansion hook runs once per expansion, after the parent pointers
//!   of all successors have been set.

mod astar;
mod focal;
mod oracle;

use std::cmp::Ordering;
use std::hash::Hash;

use rustc_hash::FxHashMap;

use crate::statespace::Cost;

pub(crate) use astar::best_first;
pub use astar::{astar, SearchParams};
pub use focal::focal_search;
pub use oracle::{local_residual_oracle, EscapeRule, OracleConfig, OracleOutcome, OracleResult};

pub type NodeId = u32;

#[derive(Clone, Debug)]
pub struct SearchNode<S> {
    pub state: S,
    /// Exact cost of the current best path from the root.
    pub g: Cost,
    /// Unweighted global heuristic `h_g`.
    pub h: f64,
    pub parent: Option<NodeId>,
    /// Position in the expansion sequence, once expanded.
    pub expansion_index: Option<u64>,
}

impl<S> SearchNode<S> {
    pub fn f(&self) -> f64 {
        self.g as f64 + self.h
    }

    pub fn is_closed(&self) -> bool {
        self.expansion_index.is_some()
    }
}

/// Every node generated by a search, addressable by id or by state.
#[derive(Clone, Debug)]
pub struct SearchTree<S> {
    nodes: Vec<SearchNode<S>>,
    lookup: FxHashMap<S, NodeId>,
}

impl<S: Copy + Eq + Hash> SearchTree<S> {
    pub(crate) fn new() -> Self {
        SearchTree {
            nodes: Vec::new(),
            lookup: FxHashMap::default(),
        }
    }

    pub(crate) fn insert(&mut self, node: SearchNode<S>) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.lookup.insert(node.state, id);
        self.nodes.push(node);
        id
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut SearchNode<S> {
        &mut self.nodes[id as usize]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode<S> {
        &self.nodes[id as usize]
    }

    pub fn id_of(&self, state: &S) -> Option<NodeId> {
        self.lookup.get(state).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SearchNode<S>] {
        &self.nodes
    }

    /// Ids of expanded nodes in expansion order.
    pub fn expansion_order(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = (0..self.nodes.len() as NodeId)
            .filter(|&id| self.node(id).is_closed())
            .collect();
        ids.sort_by_key(|&id| self.node(id).expansion_index);
        ids
    }

    /// Root-to-`id` state sequence following parent pointers.
    pub fn path_to(&self, id: NodeId) -> Vec<S> {
        let mut path = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let node = self.node(c);
            path.push(node.state);
            cur = node.parent;
        }
        path.reverse();
        path
    }

    /// True when `ancestor` lies on the parent chain of `id` (or is `id`).
    pub fn is_ancestor(&self, ancestor: NodeId, id: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.node(c).parent;
        }
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Solved,
    Exhausted,
    ExpansionLimit,
}

#[derive(Clone, Debug)]
pub struct SearchResult<S> {
    pub status: SearchStatus,
    pub path: Option<Vec<S>>,
    pub cost: Option<Cost>,
    pub expansions: u64,
    pub generated: u64,
    pub collision_checks: u64,
    /// Node that satisfied the goal test, when solved.
    pub terminal: Option<NodeId>,
    pub tree: SearchTree<S>,
}

impl<S> SearchResult<S> {
    pub fn solved(&self) -> bool {
        self.status == SearchStatus::Solved
    }
}

/// Observer invoked on every expansion.
pub trait ExpansionHook<S> {
    fn on_expand(&mut self, tree: &SearchTree<S>, id: NodeId);
}

/// Hook that does nothing.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoHook;

impl<S> ExpansionHook<S> for NoHook {
    fn on_expand(&mut self, _tree: &SearchTree<S>, _id: NodeId) {}
}

impl<S, H: ExpansionHook<S> + ?Sized> ExpansionHook<S> for &mut H {
    fn on_expand(&mut self, tree: &SearchTree<S>, id: NodeId) {
        (**self).on_expand(tree, id)
    }
}

impl<S, A: ExpansionHook<S>, B: ExpansionHook<S>> ExpansionHook<S> for (A, B) {
    fn on_expand(&mut self, tree: &SearchTree<S>, id: NodeId) {
        self.0.on_expand(tree, id);
        self.1.on_expand(tree, id);
    }
}

impl<S, H: ExpansionHook<S>> ExpansionHook<S> for Option<H> {
    fn on_expand(&mut self, tree: &SearchTree<S>, id: NodeId) {
        if let Some(h) = self {
            h.on_expand(tree, id);
        }
    }
}

/// Adapts a closure into a hook.
pub struct FnHook<F>(pub F);

impl<S, F: FnMut(&SearchTree<S>, NodeId)> ExpansionHook<S> for FnHook<F> {
    fn on_expand(&mut self, tree: &SearchTree<S>, id: NodeId) {
        (self.0)(tree, id)
    }
}

/// Totally ordered float for priority keys.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Key(pub f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
