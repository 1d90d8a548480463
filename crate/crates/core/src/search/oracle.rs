//! Ground-truth local residuals by multi-goal local search.
//!
//! From a root `s` the oracle runs A* with priority `b(s, s') = c(s, s') +
//! h_g(s')`, where `h_g` still estimates the cost to the global goal. It
//! stops on the first expanded state outside the local window, or on the
//! global goal itself, giving
//!
//! ```text
//! h_gk(s) = min  c(s, s') + h_g(s')   s' on the window border
//!               c(s, s_g)            s_g inside the window
//!               ∞                    otherwise
//! h_k(s)  = h_gk(s) - h_g(s)
//! ```

use super::{best_first, NoHook, SearchParams, SearchStatus};
use crate::statespace::Domain;

/// Which states count as having left the local window.
#[derive(
    Clone,
    Copy,
    Debug,
    PartialEq,
    Eq,
    Default,
    serde::Serialize,
    serde::Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum EscapeRule {
    /// `region_distance ≥ K`: the state lies on or beyond the border.
    #[default]
    Reach,
    /// `region_distance > K`: the backtracking collector's completion test.
    Exceed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub k: u32,
    pub expansion_cap: Option<u64>,
    pub rule: EscapeRule,
}

impl OracleConfig {
    pub fn new(k: u32) -> Self {
        assert!(k >= 1, "local window K must be >= 1");
        OracleConfig {
            k,
            expansion_cap: None,
            rule: EscapeRule::Reach,
        }
    }

    pub fn with_rule(mut self, rule: EscapeRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_cap(mut self, cap: Option<u64>) -> Self {
        self.expansion_cap = cap;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome<S> {
    Residual {
        h_k: f64,
        /// State that terminated the local search: the first escaping
        /// state, or the global goal.
        best_border: S,
        reached_goal: bool,
    },
    /// No state outside the window (and not the goal) is reachable.
    DeadEnd,
    Capped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<S> {
    pub outcome: OracleOutcome<S>,
    pub expansions: u64,
}

impl<S> OracleResult<S> {
    pub fn residual(&self) -> Option<f64> {
        match self.outcome {
            OracleOutcome::Residual { h_k, .. } => Some(h_k),
            _ => None,
        }
    }
}

/// Computes `h_k(s)` exactly. `blocked` marks extra states to treat as
/// obstacles (the closed-list ablation).
pub fn local_residual_oracle<D: Domain>(
    domain: &D,
    s: D::State,
    goal: &D::State,
    config: OracleConfig,
    blocked: Option<&dyn Fn(&D::State) -> bool>,
) -> OracleResult<D::State> {
    let k = config.k as f64;
    let escaped = |t: &D::State| {
        let d = domain.region_distance(&s, t);
        match config.rule {
            EscapeRule::Reach => d >= k,
            EscapeRule::Exceed => d > k,
        }
    };
    let result = best_first(
        domain,
        s,
        goal,
        SearchParams::new(1.0).with_limit(config.expansion_cap),
        |t: &D::State| escaped(t) || domain.is_goal(t, goal),
        blocked,
        &mut NoHook,
    );
    let outcome = match result.status {
        SearchStatus::Solved => {
            let end = result
                .tree
                .node(result.terminal.expect("solved search has a terminal"));
            let reached_goal = domain.is_goal(&end.state, goal);
            let border_h = if reached_goal { 0.0 } else { end.h };
            let h_gk = end.g as f64 + border_h;
            OracleOutcome::Residual {
                h_k: h_gk - result.tree.node(0).h,
                best_border: end.state,
                reached_goal,
            }
        }
        SearchStatus::Exhausted => OracleOutcome::DeadEnd,
        SearchStatus::ExpansionLimit => OracleOutcome::Capped,
    };
    OracleResult {
        outcome,
        expansions: result.expansions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::OccupancyGrid;
    use crate::statespace::{Cell, Grid2d};

    #[test]
    fn empty_grid_residual_is_zero() {
        let g = OccupancyGrid::empty(40, 40).unwrap();
        let d = Grid2d::new(&g);
        let goal = Cell::new(38, 30);
        for s in [Cell::new(5, 5), Cell::new(10, 20), Cell::new(3, 35)] {
            for rule in [EscapeRule::Reach, EscapeRule::Exceed] {
                let r =
                    local_residual_oracle(&d, s, &goal, OracleConfig::new(3).with_rule(rule), None);
                assert_eq!(r.residual(), Some(0.0));
            }
        }
    }

    #[test]
    fn enclosed_state_is_dead_end() {
        let g = OccupancyGrid::from_ascii(&[
            "........", "..@@@...", "..@.@...", "..@@@...", "........", "........",
        ])
        .unwrap();
        let d = Grid2d::new(&g);
        let r = local_residual_oracle(
            &d,
            Cell::new(3, 2),
            &Cell::new(7, 5),
            OracleConfig::new(2),
            None,
        );
        assert_eq!(r.outcome, OracleOutcome::DeadEnd);
    }

    #[test]
    fn goal_inside_window() {
        let g = OccupancyGrid::empty(20, 20).unwrap();
        let d = Grid2d::new(&g);
        let s = Cell::new(10, 10);
        let goal = Cell::new(12, 11);
        let r = local_residual_oracle(&d, s, &goal, OracleConfig::new(4), None);
        match r.outcome {
            OracleOutcome::Residual {
                h_k,
                best_border,
                reached_goal,
            } => {
                assert!(reached_goal);
                assert_eq!(best_border, goal);
                assert_eq!(h_k, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cap_reports_capped() {
        let g = OccupancyGrid::empty(40, 40).unwrap();
        let d = Grid2d::new(&g);
        let r = local_residual_oracle(
            &d,
            Cell::new(20, 20),
            &Cell::new(0, 20),
            OracleConfig::new(8).with_cap(Some(2)),
            None,
        );
        assert_eq!(r.outcome, OracleOutcome::Capped);
        assert_eq!(r.expansions, 2);
    }

    #[test]
    fn blocked_states_force_dead_end() {
        let g = OccupancyGrid::empty(20, 20).unwrap();
        let d = Grid2d::new(&g);
        let s = Cell::new(10, 10);
        let goal = Cell::new(19, 10);
        let free = local_residual_oracle(&d, s, &goal, OracleConfig::new(3), None);
        let nothing = |_: &Cell| false;
        let same = local_residual_oracle(&d, s, &goal, OracleConfig::new(3), Some(&nothing));
        assert_eq!(free, same);
        let ring = |c: &Cell| (c.x - 10).abs().max((c.y - 10).abs()) == 1;
        let r = local_residual_oracle(&d, s, &goal, OracleConfig::new(3), Some(&ring));
        assert_eq!(r.outcome, OracleOutcome::DeadEnd);
    }
}
