//! The car state lattice: successors of one state, the Euclidean heuristic,
//! and a weighted A* plan on a random map.

use loha::gridmap::OccupancyGrid;
use loha::search::{astar, NoHook, SearchParams};
use loha::statespace::{Car4d, CarState, Domain, GridDomain};

fn main() -> loha::Result<()> {
    let grid = OccupancyGrid::generate_random(64, 64, 0.2, 3)?;
    let domain = Car4d::new(&grid);
    let start = CarState::new(20, 20, 0, 1);
    let mut out = Vec::new();
    let checks = domain.successors(&start, &mut out);
    println!(
        "{} successors of {start:?} ({checks} cell checks)",
        out.len()
    );
    for t in out.iter().take(6) {
        println!("  {:?} cost {}", t.successor, t.cost);
    }
    let goal = domain.goal_at(40, 45);
    println!("h_g(start) = {:.3}", domain.h_g(&start, &goal));
    if grid.is_blocked(40, 45) {
        println!("goal cell is blocked on this map");
        return Ok(());
    }
    let r = astar(
        &domain,
        start,
        goal,
        SearchParams::new(4.0).with_limit(Some(200_000)),
        &mut NoHook,
    );
    match r.path {
        Some(path) => println!(
            "w=4: cost {:?} in {} expansions, {} states",
            r.cost,
            r.expansions,
            path.len()
        ),
        None => println!("no path ({:?})", r.status),
    }
    Ok(())
}
