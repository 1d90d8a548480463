//! The online loop: solve a few problems, add their samples, retrain, and
//! watch the held-out speedup round by round.

use loha::gridmap::OccupancyGrid;
use loha::model::Hyperparams;
use loha::planner::{online_loop, Guidance, OnlineConfig};
use loha::problem::{sample_problems, MapSet, ProblemSpec};
use loha::statespace::DomainKind;

fn main() -> loha::Result<()> {
    let maps = MapSet::new(
        (0..3)
            .map(|i| {
                (
                    format!("m{i}"),
                    OccupancyGrid::generate_random(96, 96, 0.3, 70 + i).unwrap(),
                )
            })
            .collect(),
    );
    let spec = ProblemSpec::default();
    let held_out = sample_problems(&maps, DomainKind::Car4d, 0, 15, &spec, 2, "eval")?;
    let config = OnlineConfig {
        batch_size: 5,
        rounds: 3,
        weight: 4.0,
        k: 4,
        guidance: Guidance::default(),
        hyperparams: Hyperparams::default(),
        fine_tune: false,
        expansion_limit: Some(1_000_000),
        problem_spec: spec,
        seed: 2,
    };
    let outcome = online_loop(&config, &maps, &held_out.problems)?;
    for r in &outcome.rounds {
        println!(
            "round {}: {} samples, {} collection expansions, median speedup {:.3}",
            r.round,
            r.dataset_size,
            r.collection_expansions,
            r.report.speedup.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
