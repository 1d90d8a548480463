use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{feature_len, featurize_into, transform_features, SQUARE_SYMMETRIES};
use super::network::{ResidualModel, Trace};
use crate::collector::Sample;
use crate::error::{Error, Result};
use crate::gridmap::OccupancyGrid;
use crate::seed::rng_for;
use crate::statespace::{Car4d, DomainKind, Grid2d, GridDomain, StateCodec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub optimizer: Optimizer,
    /// Weight each squared error by the sample's `alpha`. Off means every
    /// sample weighs 1.
    pub use_alpha: bool,
    /// Train on all eight rotations and reflections of each sample.
    #[serde(default)]
    pub symmetries: bool,
    /// Regress incomplete samples onto `target / alpha`, extrapolating the
    /// partial progress linearly to the region border.
    #[serde(default)]
    pub scale_incomplete: bool,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 30,
            hidden: vec![64, 64],
            optimizer: Optimizer::Adam,
            use_alpha: true,
            symmetries: false,
            scale_incomplete: false,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Featurized training set, one row per usable sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub domain: DomainKind,
    pub k: u32,
    pub dim: usize,
    features: Vec<f64>,
    pub targets: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Input samples dropped for non-finite targets or non-positive weights.
    pub skipped: usize,
}

impl Dataset {
    pub fn from_rows(
        domain: DomainKind,
        k: u32,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
        alphas: Vec<f64>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        assert_eq!(rows.len(), targets.len());
        assert_eq!(rows.len(), alphas.len());
        let dim = rows[0].len();
        let mut features = Vec::with_capacity(dim * rows.len());
        for r in &rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            features.extend_from_slice(r);
        }
        Ok(Dataset {
            domain,
            k,
            dim,
            features,
            targets,
            alphas,
            skipped: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Every row under each of the eight square symmetries, identity first.
    pub fn with_symmetries(&self) -> Dataset {
        let n = SQUARE_SYMMETRIES.len();
        let mut features = Vec::with_capacity(self.features.len() * n);
        for i in 0..self.len() {
            for t in 0..n {
                features.extend(transform_features(self.row(i), self.k, self.domain, t));
            }
        }
        let repeat = |v: &[f64]| {
            v.iter()
                .flat_map(|&x| std::iter::repeat_n(x, n))
                .collect()
        };
        Dataset {
            features,
            targets: repeat(&self.targets),
            alphas: repeat(&self.alphas),
            ..self.clone()
        }
    }

    /// Targets divided by their weights. Complete rows have weight 1 and
    /// keep their value.
    pub fn with_scaled_targets(&self) -> Dataset {
        Dataset {
            targets: self
                .targets
                .iter()
                .zip(&self.alphas)
                .map(|(t, a)| t / a)
                .collect(),
            ..self.clone()
        }
    }

    fn weight(&self, i: usize, use_alpha: bool) -> f64 {
        if use_alpha {
            self.alphas[i]
        } else {
            1.0
        }
    }
}

/// Checks that samples agree on domain and `K`, returning both.
pub fn check_homogeneous(samples: &[Sample]) -> Result<(DomainKind, u32)> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    for s in samples {
        if s.k != first.k {
            return Err(Error::MixedK {
                first: first.k,
                other: s.k,
            });
        }
        if s.domain != first.domain {
            return Err(Error::MixedDomain {
                first: first.domain.to_string(),
                other: s.domain.to_string(),
            });
        }
    }
    Ok((first.domain, first.k))
}

/// Featurizes samples against their maps. Samples with non-finite targets
/// or zero weight are skipped.
pub fn build_dataset<'m>(
    samples: &[Sample],
    maps: &dyn Fn(&str) -> Option<&'m OccupancyGrid>,
) -> Result<Dataset> {
    let (domain, k) = check_homogeneous(samples)?;
    match domain {
        DomainKind::Grid2d => build_for::<Grid2d>(samples, maps, k),
        DomainKind::Car4d => build_for::<Car4d>(samples, maps, k),
    }
}

fn build_for<'m, D: GridDomain<'m>>(
    samples: &[Sample],
    maps: &dyn Fn(&str) -> Option<&'m OccupancyGrid>,
    k: u32,
) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut alphas = Vec::new();
    let mut skipped = 0;
    let mut dim = 0;
    for s in samples {
        if !s.target.is_finite() || !(s.alpha > 0.0) {
            skipped += 1;
            continue;
        }
        let grid = maps(&s.map_id)
            .ok_or_else(|| Error::Config(format!("unknown map id {:?}", s.map_id)))?;
        let domain = D::on_grid(grid);
        let state = D::Lattice::decode(&s.state)
            .ok_or_else(|| Error::Config(format!("invalid {} state {:?}", D::KIND, s.state)))?;
        let goal = D::Lattice::decode(&s.goal)
            .ok_or_else(|| Error::Config(format!("invalid {} goal {:?}", D::KIND, s.goal)))?;
        dim = feature_len(&domain, k);
        featurize_into(&domain, &state, &goal, k, &mut features);
        targets.push(s.target);
        alphas.push(s.alpha);
    }
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        domain: D::KIND,
        k,
        dim,
        features,
        targets,
        alphas,
        skipped,
    })
}

/// SHA-256 over the canonical JSON lines of the samples.
pub fn samples_hash(samples: &[Sample]) -> String {
    let mut hasher = Sha256::new();
    for s in samples {
        hasher.update(serde_json::to_vec(s).expect("samples serialize"));
        hasher.update(b"\n");
    }
    hex(&hasher.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: ResidualModel,
    /// Full-dataset loss after each epoch.
    pub loss_history: Vec<f64>,
}

/// Weighted mean squared error over the whole dataset.
pub fn dataset_loss(model: &ResidualModel, data: &Dataset, use_alpha: bool) -> f64 {
    let total: f64 = (0..data.len())
        .map(|i| {
            let e = model.forward(data.row(i)) - data.targets[i];
            data.weight(i, use_alpha) * e * e
        })
        .sum();
    total / data.len() as f64
}

/// Trains from a fresh initialization.
pub fn train(data: &Dataset, hyper: &Hyperparams) -> Result<TrainOutcome> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sizes = vec![data.dim];
    sizes.extend(&hyper.hidden);
    sizes.push(1);
    let mut model = ResidualModel::new(&sizes, &mut rng_for(hyper.seed, "init", 0));
    let data = &prepare(data, hyper);
    // Start the output at the weighted mean target so the final rectifier
    // begins in its active region.
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..data.len() {
        let w = data.weight(i, hyper.use_alpha);
        num += w * data.targets[i];
        den += w;
    }
    let last = model.layers_mut().last_mut().unwrap();
    last.biases[0] = if den > 0.0 { num / den } else { 0.0 };
    fit(model, data, hyper)
}

/// Continues training an existing model.
pub fn fine_tune(
    model: ResidualModel,
    data: &Dataset,
    hyper: &Hyperparams,
) -> Result<TrainOutcome> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if model.input_len() != data.dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_len(),
            actual: data.dim,
        });
    }
    fit(model, &prepare(data, hyper), hyper)
}

#[derive(Clone)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

fn prepare(data: &Dataset, hyper: &Hyperparams) -> Dataset {
    let data = if hyper.scale_incomplete {
        data.with_scaled_targets()
    } else {
        data.clone()
    };
    if hyper.symmetries {
        data.with_symmetries()
    } else {
        data
    }
}

fn fit(mut model: ResidualModel, data: &Dataset, hyper: &Hyperparams) -> Result<TrainOutcome> {
    let n_params = model.parameter_count();
    let mut adam = Adam {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        t: 0,
    };
    let mut grads = model.zeros_like();
    let mut trace = Trace::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_history = Vec::with_capacity(hyper.epochs);
    // An epoch that raises the full-dataset loss is undone and the step
    // size halved, so the recorded loss never increases.
    let mut learning_rate = hyper.learning_rate;
    let mut best = dataset_loss(&model, data, hyper.use_alpha);
    for epoch in 0..hyper.epochs {
        let snapshot = (model.clone(), adam.clone());
        order.shuffle(&mut rng_for(hyper.seed, "shuffle", epoch as u64));
        for batch in order.chunks(hyper.batch_size) {
            grads.fill_zero();
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let x = data.row(i);
                let p = model.forward_trace(x, &mut trace);
                let d_out = scale * data.weight(i, hyper.use_alpha) * (p - data.targets[i]);
                if d_out != 0.0 {
                    model.backward(x, &trace, d_out, &mut grads);
                }
            }
            match hyper.optimizer {
                Optimizer::Sgd => {
                    for (p, g) in model.parameters_mut().zip(grads.parameters()) {
                        *p -= learning_rate * g;
                    }
                }
                Optimizer::Adam => {
                    adam.t += 1;
                    let c1 = 1.0 - BETA1.powi(adam.t);
                    let c2 = 1.0 - BETA2.powi(adam.t);
                    let step = learning_rate * c2.sqrt() / c1;
                    for (((p, g), m), v) in model
                        .parameters_mut()
                        .zip(grads.parameters())
                        .zip(adam.m.iter_mut())
                        .zip(adam.v.iter_mut())
                    {
                        *m = BETA1 * *m + (1.0 - BETA1) * g;
                        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                        *p -= step * *m / (v.sqrt() + EPS);
                    }
                }
            }
        }
        let loss = dataset_loss(&model, data, hyper.use_alpha);
        if loss <= best {
            best = loss;
        } else {
            (model, adam) = snapshot;
            learning_rate *= 0.5;
        }
        loss_history.push(best);
    }
    Ok(TrainOutcome {
        model,
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(rows: Vec<Vec<f64>>, targets: Vec<f64>, alphas: Vec<f64>) -> Dataset {
        Dataset::from_rows(DomainKind::Grid2d, 1, rows, targets, alphas).unwrap()
    }

    #[test]
    fn memorizes_single_sample() {
        let data = tiny(vec![vec![0.3, -0.2, 1.0]], vec![2.0], vec![1.0]);
        let hyper = Hyperparams {
            epochs: 400,
            learning_rate: 1e-2,
            ..Hyperparams::default()
        };
        let out = train(&data, &hyper).unwrap();
        assert!((out.model.forward(data.row(0)) - 2.0).abs() < 0.05);
    }

    #[test]
    fn weighted_conflict_pulls_toward_heavier_target() {
        // Weighted least squares optimum is (0.5 * 0 + 1 * 4) / 1.5 = 8/3.
        let x = vec![0.5, 0.5, 1.0];
        let data = tiny(vec![x.clone(), x.clone()], vec![0.0, 4.0], vec![0.5, 1.0]);
        let hyper = Hyperparams {
            epochs: 2000,
            learning_rate: 1e-2,
            ..Hyperparams::default()
        };
        let p = train(&data, &hyper).unwrap().model.forward(&x);
        assert!((p - 8.0 / 3.0).abs() < 0.05, "{p}");
    }

    #[test]
    fn alpha_scale_does_not_move_optimum() {
        let rows = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ];
        let targets = vec![1.0, 3.0, 2.0];
        let hyper = Hyperparams {
            epochs: 3000,
            learning_rate: 1e-2,
            batch_size: 3,
            ..Hyperparams::default()
        };
        let a = train(
            &tiny(rows.clone(), targets.clone(), vec![0.25, 0.5, 1.0]),
            &hyper,
        )
        .unwrap();
        let b = train(&tiny(rows.clone(), targets, vec![0.5, 1.0, 2.0]), &hyper).unwrap();
        for r in &rows {
            assert!((a.model.forward(r) - b.model.forward(r)).abs() < 0.05);
        }
    }

    #[test]
    fn deterministic() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 / 50.0, (i % 7) as f64, 1.0])
            .collect();
        let targets: Vec<f64> = (0..50).map(|i| (i % 5) as f64).collect();
        let data = tiny(rows, targets, vec![1.0; 50]);
        let hyper = Hyperparams {
            epochs: 5,
            batch_size: 8,
            ..Hyperparams::default()
        };
        assert_eq!(train(&data, &hyper).unwrap(), train(&data, &hyper).unwrap());
    }

    #[test]
    fn rejects_empty_and_mixed() {
        assert!(matches!(check_homogeneous(&[]), Err(Error::EmptyDataset)));
        let s = Sample {
            schema_version: 1,
            domain: DomainKind::Grid2d,
            map_id: "m".into(),
            problem_id: 0,
            state: vec![1, 1],
            goal: vec![2, 2],
            k: 2,
            target: 0.0,
            alpha: 1.0,
            complete: true,
            source: crate::collector::SampleSource::BacktrackComplete,
            search_mode: crate::collector::SearchMode::Astar,
            h_g_s: 2.0,
        };
        let mut other = s.clone();
        other.k = 3;
        assert!(matches!(
            check_homogeneous(&[s.clone(), other]),
            Err(Error::MixedK { first: 2, other: 3 })
        ));
        let mut car = s.clone();
        car.domain = DomainKind::Car4d;
        assert!(matches!(
            check_homogeneous(&[s, car]),
            Err(Error::MixedDomain { .. })
        ));
    }

    #[test]
    fn build_skips_infinite_targets() {
        let grid = OccupancyGrid::empty(8, 8).unwrap();
        let base = Sample {
            schema_version: 1,
            domain: DomainKind::Grid2d,
            map_id: "m".into(),
            problem_id: 0,
            state: vec![1, 1],
            goal: vec![6, 6],
            k: 2,
            target: 1.0,
            alpha: 1.0,
            complete: true,
            source: crate::collector::SampleSource::Oracle,
            search_mode: crate::collector::SearchMode::LocalOracle,
            h_g_s: 10.0,
        };
        let mut inf = base.clone();
        inf.target = f64::INFINITY;
        let maps = |id: &str| (id == "m").then_some(&grid);
        let data = build_dataset(&[base.clone(), inf.clone()], &maps).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data.skipped, 1);
        assert_eq!(data.dim, 2 * 25 + 1);
        assert!(matches!(
            build_dataset(&[inf], &maps),
            Err(Error::EmptyDataset)
        ));
        let mut unknown = base;
        unknown.map_id = "x".into();
        assert!(matches!(
            build_dataset(&[unknown], &maps),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn loss_never_increases_even_with_a_large_step() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let targets = rows
            .iter()
            .map(|r| (r[0] * 3.0 - r[1]).abs() + rng.gen_range(0.0..0.5))
            .collect();
        let alphas = (0..200).map(|_| rng.gen_range(0.1..1.0)).collect();
        let data = tiny(rows, targets, alphas);
        let hyper = Hyperparams {
            learning_rate: 0.3,
            epochs: 25,
            hidden: vec![16],
            ..Hyperparams::default()
        };
        let out = train(&data, &hyper).unwrap();
        assert!(out.loss_history.windows(2).all(|p| p[1] <= p[0]));
        assert!(out.loss_history.last().unwrap().is_finite());
    }
}
