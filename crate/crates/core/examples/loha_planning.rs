//! Trains a residual model offline and compares the guided focal search
//! against weighted A* on held-out problems. The returned costs stay within
//! the weight bound whatever the model predicts.

use loha::gridmap::OccupancyGrid;
use loha::model::Hyperparams;
use loha::planner::{collect_batch, evaluate, train_on, Guidance, Method};
use loha::problem::{sample_problems, MapSet, ProblemSpec};
use loha::statespace::DomainKind;

fn main() -> loha::Result<()> {
    let maps = MapSet::new(
        (0..3)
            .map(|i| {
                (
                    format!("m{i}"),
                    OccupancyGrid::generate_random(96, 96, 0.3, 40 + i).unwrap(),
                )
            })
            .collect(),
    );
    let spec = ProblemSpec::default();
    let (k, w) = (4, 4.0);
    let train_set = sample_problems(&maps, DomainKind::Car4d, 0, 20, &spec, 5, "train")?;
    let held_out = sample_problems(&maps, DomainKind::Car4d, 0, 20, &spec, 5, "eval")?;
    let collected = collect_batch(&maps, &train_set.problems, k, w, None, None)?;
    let (model, losses) = train_on(&maps, &collected.samples, &Hyperparams::default(), None)?;
    println!(
        "{} samples from {} expansions, final loss {:.4}",
        collected.samples.len(),
        collected.expansions,
        losses.last().unwrap()
    );
    let baseline = Method::WeightedAstar { weight: w };
    for guidance in [Guidance::Offset, Guidance::Inflated, Guidance::Additive] {
        let method = Method::Loha {
            weight: w,
            model: &model,
            guidance,
        };
        let report = evaluate(
            &maps,
            &held_out.problems,
            &baseline,
            &method,
            k,
            Some(1_000_000),
        )?;
        println!(
            "{guidance:?}: median speedup {:.3}, mean cost ratio {:.3}, {} unsolved",
            report.speedup.unwrap_or(f64::NAN),
            report.mean_cost_ratio.unwrap_or(f64::NAN),
            report.unsolved
        );
    }
    Ok(())
}
