//! Collects local residual labels for free while A* runs, and compares the
//! complete ones with the local oracle.

use loha::collector::{BacktrackCollector, SampleContext, SearchMode};
use loha::gridmap::OccupancyGrid;
use loha::search::{astar, local_residual_oracle, EscapeRule, OracleConfig, SearchParams};
use loha::statespace::{Cell, DomainKind, Grid2d, StateCodec};

fn main() -> loha::Result<()> {
    let mut grid = OccupancyGrid::generate_random(48, 48, 0.25, 11)?;
    grid.set_blocked(2, 2, false);
    grid.set_blocked(44, 40, false);
    let domain = Grid2d::new(&grid);
    let (start, goal) = (Cell::new(2, 2), Cell::new(44, 40));
    let k = 3;
    let mut collector = BacktrackCollector::new(&domain, k);
    let r = astar(&domain, start, goal, SearchParams::new(1.0), &mut collector);
    let ctx = SampleContext {
        domain: DomainKind::Grid2d,
        map_id: "example".into(),
        problem_id: 0,
        goal: goal.encode(),
        k,
        search_mode: SearchMode::Astar,
    };
    let samples = collector.finalize(&ctx);
    let complete: Vec<_> = samples.iter().filter(|s| s.complete).collect();
    println!(
        "{} expansions -> {} samples ({} complete, {} partial)",
        r.expansions,
        samples.len(),
        complete.len(),
        samples.len() - complete.len()
    );
    let (mut equal, mut above) = (0, 0);
    for s in &complete {
        let state = Cell::decode(&s.state).unwrap();
        let config = OracleConfig::new(k).with_rule(EscapeRule::Exceed);
        let oracle = local_residual_oracle(&domain, state, &goal, config, None)
            .residual()
            .unwrap();
        assert!(s.target >= oracle);
        if s.target == oracle {
            equal += 1;
        } else {
            above += 1;
        }
    }
    println!("complete targets: {equal} equal the oracle, {above} exceed it");
    if let Some(s) = samples.iter().find(|s| !s.complete) {
        println!(
            "a partial sample: target >= {} with weight alpha = {}",
            s.target, s.alpha
        );
    }
    Ok(())
}
