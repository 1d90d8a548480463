//! Collects samples on small car maps, trains the residual regressor, checks
//! its gradients and round-trips it through a model file.

use loha::gridmap::OccupancyGrid;
use loha::model::{build_dataset, gradient_check, load_model, save_model, train, Hyperparams};
use loha::planner::collect_batch;
use loha::problem::{sample_problems, MapSet, ProblemSpec};
use loha::statespace::DomainKind;

fn main() -> loha::Result<()> {
    let maps = MapSet::new(
        (0..3)
            .map(|i| {
                (
                    format!("m{i}"),
                    OccupancyGrid::generate_random(64, 64, 0.3, i).unwrap(),
                )
            })
            .collect(),
    );
    let problems = sample_problems(
        &maps,
        DomainKind::Car4d,
        0,
        8,
        &ProblemSpec::default(),
        1,
        "train",
    )?;
    let collected = collect_batch(&maps, &problems.problems, 4, 4.0, None, None)?;
    let data = build_dataset(&collected.samples, &|id: &str| maps.get(id))?;
    println!(
        "{} samples, {} features each, {} expansions",
        data.len(),
        data.dim,
        collected.expansions
    );

    let hyper = Hyperparams {
        epochs: 10,
        ..Hyperparams::default()
    };
    let out = train(&data, &hyper)?;
    for (epoch, loss) in out.loss_history.iter().enumerate() {
        println!("epoch {epoch:2}: loss {loss:.5}");
    }
    let check = gradient_check(&out.model, data.row(0), data.targets[0], data.alphas[0]);
    println!("gradient check: max relative error {check:.2e}");

    let path = std::env::temp_dir().join("loha-example-model.bin");
    save_model(&path, &out.model, None)?;
    assert_eq!(load_model(&path)?, out.model);
    println!("model written to {}", path.display());
    Ok(())
}
