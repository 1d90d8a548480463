use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashSet;

use super::{Domain, StateCodec, Transition};

/// Directed unit-cost graph whose vertices sit on integer lattice positions.
///
/// Edges only join 4-adjacent positions, so the Manhattan heuristic to the
/// goal's position is consistent. Used for exact checks on tree-shaped
/// state spaces, where every state is reachable along exactly one path.
#[derive(Clone, Debug, Default)]
pub struct ExplicitGraph {
    positions: Vec<(i32, i32)>,
    edges: Vec<Vec<u32>>,
}

impl ExplicitGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, x: i32, y: i32) -> u32 {
        self.positions.push((x, y));
        self.edges.push(Vec::new());
        (self.positions.len() - 1) as u32
    }

    pub fn add_edge(&mut self, from: u32, to: u32) {
        let (a, b) = (self.positions[from as usize], self.positions[to as usize]);
        assert_eq!(
            (a.0 - b.0).abs() + (a.1 - b.1).abs(),
            1,
            "edges must join 4-adjacent positions"
        );
        self.edges[from as usize].push(to);
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, v: u32) -> (i32, i32) {
        self.positions[v as usize]
    }

    /// Grows a random out-tree rooted at vertex 0 by repeatedly attaching a
    /// new vertex to a free lattice neighbour of a random existing vertex.
    pub fn random_tree<R: Rng>(vertices: usize, rng: &mut R) -> Self {
        let mut graph = ExplicitGraph::new();
        let mut used = FxHashSet::default();
        graph.add_vertex(0, 0);
        used.insert((0, 0));
        let mut attempts = 0;
        while graph.len() < vertices && attempts < vertices * 200 {
            attempts += 1;
            let parent = rng.gen_range(0..graph.len()) as u32;
            let (px, py) = graph.position(parent);
            let mut dirs = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            dirs.shuffle(rng);
            if let Some(&(dx, dy)) = dirs
                .iter()
                .find(|&&(dx, dy)| !used.contains(&(px + dx, py + dy)))
            {
                let child = graph.add_vertex(px + dx, py + dy);
                used.insert((px + dx, py + dy));
                graph.add_edge(parent, child);
            }
        }
        graph
    }
}

impl StateCodec for u32 {
    fn encode(&self) -> Vec<i64> {
        vec![*self as i64]
    }

    fn decode(values: &[i64]) -> Option<Self> {
        match values {
            &[v] => u32::try_from(v).ok(),
            _ => None,
        }
    }
}

impl Domain for ExplicitGraph {
    type State = u32;

    fn successors(&self, s: &u32, out: &mut Vec<Transition<u32>>) -> u64 {
        out.extend(
            self.edges[*s as usize]
                .iter()
                .map(|&successor| Transition { successor, cost: 1 }),
        );
        0
    }

    fn h_g(&self, s: &u32, goal: &u32) -> f64 {
        let (a, b) = (self.position(*s), self.position(*goal));
        ((a.0 - b.0).abs() + (a.1 - b.1).abs()) as f64
    }

    fn is_goal(&self, s: &u32, goal: &u32) -> bool {
        s == goal
    }

    fn region_distance(&self, a: &u32, b: &u32) -> f64 {
        let (a, b) = (self.position(*a), self.position(*b));
        (a.0 - b.0).abs().max((a.1 - b.1).abs()) as f64
    }

    fn is_free(&self, s: &u32) -> bool {
        (*s as usize) < self.len()
    }
}
