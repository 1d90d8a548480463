//! Local residual heuristic from the exhaustive local search: zero in open
//! space, positive in front of a wall, and the cost of the two escape rules.

use loha::gridmap::OccupancyGrid;
use loha::search::{local_residual_oracle, EscapeRule, OracleConfig};
use loha::statespace::{Cell, Grid2d};

fn main() -> loha::Result<()> {
    let grid = OccupancyGrid::from_ascii(&[
        "............",
        "............",
        "......@.....",
        "......@.....",
        "......@.....",
        "......@.....",
        "......@.....",
        "............",
    ])?;
    let domain = Grid2d::new(&grid);
    let goal = Cell::new(11, 4);
    for k in [1, 2, 3] {
        for rule in [EscapeRule::Reach, EscapeRule::Exceed] {
            let config = OracleConfig::new(k).with_rule(rule);
            let open = local_residual_oracle(&domain, Cell::new(1, 4), &goal, config, None);
            let wall = local_residual_oracle(&domain, Cell::new(5, 4), &goal, config, None);
            println!(
                "K={k} {rule:?}: open h_k={:?} ({} exp), at wall h_k={:?} ({} exp)",
                open.residual(),
                open.expansions,
                wall.residual(),
                wall.expansions
            );
        }
    }
    Ok(())
}
