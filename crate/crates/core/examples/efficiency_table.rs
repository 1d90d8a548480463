//! Expansions spent per training sample: local oracle versus backtracking,
//! for several window sizes, on small car maps.

use loha::gridmap::OccupancyGrid;
use loha::harness::efficiency_rows;
use loha::problem::{sample_problems, MapSet, ProblemSpec};
use loha::statespace::DomainKind;

fn main() -> loha::Result<()> {
    let maps = MapSet::new(
        (0..2)
            .map(|i| {
                (
                    format!("m{i}"),
                    OccupancyGrid::generate_random(64, 64, 0.3, 90 + i).unwrap(),
                )
            })
            .collect(),
    );
    let spec = ProblemSpec {
        min_distance: 10,
        max_distance: 25,
        ..ProblemSpec::default()
    };
    let problems = sample_problems(&maps, DomainKind::Car4d, 0, 10, &spec, 3, "train")?;
    let rows = efficiency_rows(
        &maps,
        &problems.problems,
        &[2, 4, 8],
        4.0,
        Some(200_000),
        20,
        3,
    )?;
    println!(
        "{:<11} {:>2} {:>10} {:>8} {:>10}",
        "method", "K", "expansions", "samples", "per sample"
    );
    for r in rows {
        println!(
            "{:<11} {:>2} {:>10} {:>8} {:>10.2}",
            r.method, r.k, r.expansions, r.samples, r.expansions_per_sample
        );
    }
    Ok(())
}
