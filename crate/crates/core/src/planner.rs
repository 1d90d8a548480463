//! Focal search guided by a learned residual, evaluation against a
//! baseline, and the online collect-and-retrain loop.

use std::cell::RefCell;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::collector::{BacktrackCollector, CollectorStats, Sample, SampleContext, SearchMode};
use crate::error::{Error, Result};
use crate::gridmap::OccupancyGrid;
use crate::model::features::push_spatial;
use crate::model::{
    build_dataset, feature_len, featurize_into, fine_tune, spatial_len, train, Hyperparams,
    ResidualModel,
};
use crate::problem::{sample_problems, MapSet, Problem, ProblemSpec};
use crate::search::{astar, focal_search, SearchParams, SearchResult};
use crate::statespace::{Cost, GridDomain, StateCodec};
use crate::with_domain;

/// How the predicted residual enters the FOCAL ordering. OPEN and the
/// FOCAL admission test always use `f = g + h_g`, so the bound holds for
/// either form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Guidance {
    /// `g + h_g + ĥ_k`.
    Additive,
    /// `g + w·(h_g + ĥ_k)`.
    Inflated,
    /// `g + w·h_g + ĥ_k`: the weighted-A* priority shifted by the residual.
    #[default]
    Offset,
}

/// Memoized residual predictions for one goal.
///
/// The first-layer sum over the spatial features depends only on the
/// anchor cell and `h_g(s)`, so it is cached and shared by every state
/// that agrees on both. Results are bit-identical to an uncached forward
/// pass.
pub struct ResidualPredictor<'p, 'g, D: GridDomain<'g>> {
    model: &'p ResidualModel,
    domain: &'p D,
    goal: D::State,
    k: u32,
    split: usize,
    heads: RefCell<FxHashMap<(i64, i64, u64), Vec<f64>>>,
    scratch: RefCell<Vec<f64>>,
    _grid: std::marker::PhantomData<&'g ()>,
}

impl<'p, 'g, D: GridDomain<'g>> ResidualPredictor<'p, 'g, D> {
    pub fn new(model: &'p ResidualModel, domain: &'p D, goal: D::State, k: u32) -> Result<Self> {
        let expected = feature_len(domain, k);
        if model.input_len() != expected {
            return Err(Error::DimensionMismatch {
                expected: model.input_len(),
                actual: expected,
            });
        }
        Ok(ResidualPredictor {
            model,
            domain,
            goal,
            k,
            split: spatial_len(k),
            heads: RefCell::new(FxHashMap::default()),
            scratch: RefCell::new(Vec::with_capacity(expected)),
            _grid: std::marker::PhantomData,
        })
    }

    pub fn predict(&self, s: &D::State, h_g: f64) -> f64 {
        let (cx, cy) = self.domain.anchor_cell(s);
        let key = (cx, cy, h_g.to_bits());
        let mut scratch = self.scratch.borrow_mut();
        let mut heads = self.heads.borrow_mut();
        let head = heads.entry(key).or_insert_with(|| {
            scratch.clear();
            push_spatial(self.domain, s, &self.goal, self.k, &mut scratch);
            self.model.head_first_layer(&scratch)
        });
        scratch.clear();
        self.domain.push_extra_features(s, &mut scratch);
        scratch.push(1.0);
        let z = self.model.tail_first_layer(head, self.split, &scratch);
        self.model.forward_from_first(z)
    }

    /// Uncached reference path.
    pub fn predict_uncached(&self, s: &D::State) -> f64 {
        let mut x = Vec::new();
        featurize_into(self.domain, s, &self.goal, self.k, &mut x);
        self.model.forward(&x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanOptions {
    pub weight: f64,
    pub k: u32,
    pub guidance: Guidance,
    pub expansion_limit: Option<u64>,
}

pub struct PlanOutput<S> {
    pub result: SearchResult<S>,
    pub samples: Vec<Sample>,
    pub collector: Option<CollectorStats>,
}

/// Focal search whose FOCAL list is ordered by the residual-corrected
/// priority. Without a model the residual is zero. With `collect` set, a
/// backtracking collector observes the same search.
pub fn loha_plan<'g, D: GridDomain<'g>>(
    domain: &D,
    start: D::State,
    goal: D::State,
    model: Option<&ResidualModel>,
    options: &PlanOptions,
    collect: Option<&SampleContext>,
) -> Result<PlanOutput<D::State>> {
    let w = options.weight;
    if !(w >= 1.0) {
        return Err(Error::Config(format!("weight {w} must be >= 1")));
    }
    let predictor = match model {
        Some(m) => Some(ResidualPredictor::new(m, domain, goal, options.k)?),
        None => None,
    };
    let priority = |n: &crate::search::SearchNode<D::State>| {
        let r = predictor.as_ref().map_or(0.0, |p| p.predict(&n.state, n.h));
        match options.guidance {
            Guidance::Additive => n.g as f64 + n.h + r,
            Guidance::Inflated => n.g as f64 + w * (n.h + r),
            Guidance::Offset => n.g as f64 + w * n.h + r,
        }
    };
    let mut collector = collect.map(|_| BacktrackCollector::new(domain, options.k));
    let result = focal_search(
        domain,
        start,
        goal,
        w,
        priority,
        options.expansion_limit,
        &mut collector,
    );
    let (samples, stats) = match (collect, &collector) {
        (Some(ctx), Some(c)) => (c.finalize(ctx), Some(c.stats())),
        _ => (Vec::new(), None),
    };
    Ok(PlanOutput {
        result,
        samples,
        collector: stats,
    })
}

/// A search configuration to evaluate.
#[derive(Clone, Copy, Debug)]
pub enum Method<'m> {
    /// `g + w·h_g` best-first search.
    WeightedAstar { weight: f64 },
    Loha {
        weight: f64,
        model: &'m ResidualModel,
        guidance: Guidance,
    },
}

impl Method<'_> {
    pub fn weight(&self) -> f64 {
        match *self {
            Method::WeightedAstar { weight } | Method::Loha { weight, .. } => weight,
        }
    }
}

/// One search on one problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub expansions: u64,
    pub cost: Option<Cost>,
    pub collision_checks: u64,
}

pub fn run_method(
    maps: &MapSet,
    problem: &Problem,
    method: &Method,
    k: u32,
    limit: Option<u64>,
) -> Result<RunOutcome> {
    let grid = maps.require(&problem.map_id)?;
    with_domain!(problem.domain, D => run_on::<D>(grid, problem, method, k, limit))
}

fn run_on<'g, D: GridDomain<'g>>(
    grid: &'g OccupancyGrid,
    problem: &Problem,
    method: &Method,
    k: u32,
    limit: Option<u64>,
) -> Result<RunOutcome> {
    let domain = D::on_grid(grid);
    let (start, goal) = problem.decode::<D>()?;
    let result = match *method {
        Method::WeightedAstar { weight } => astar(
            &domain,
            start,
            goal,
            SearchParams::new(weight).with_limit(limit),
            &mut crate::search::NoHook,
        ),
        Method::Loha {
            weight,
            model,
            guidance,
        } => {
            let options = PlanOptions {
                weight,
                k,
                guidance,
                expansion_limit: limit,
            };
            loha_plan(&domain, start, goal, Some(model), &options, None)?.result
        }
    };
    Ok(RunOutcome {
        expansions: result.expansions,
        cost: result.cost,
        collision_checks: result.collision_checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub problem_id: u64,
    pub baseline_expansions: u64,
    pub method_expansions: u64,
    pub baseline_cost: Option<Cost>,
    pub method_cost: Option<Cost>,
}

impl EvalRow {
    pub fn both_solved(&self) -> bool {
        self.baseline_cost.is_some() && self.method_cost.is_some()
    }

    pub fn speedup(&self) -> Option<f64> {
        (self.both_solved() && self.method_expansions > 0)
            .then(|| self.baseline_expansions as f64 / self.method_expansions as f64)
    }

    /// Method cost over baseline cost.
    pub fn cost_ratio(&self) -> Option<f64> {
        match (self.baseline_cost, self.method_cost) {
            (Some(b), Some(m)) if b > 0 => Some(m as f64 / b as f64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Median over problems solved by both methods of baseline / method
    /// expansions.
    pub speedup: Option<f64>,
    pub mean_cost_ratio: Option<f64>,
    /// Problems left out because either side failed.
    pub unsolved: usize,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let speedups: Vec<f64> = rows.iter().filter_map(EvalRow::speedup).collect();
        let ratios: Vec<f64> = rows.iter().filter_map(EvalRow::cost_ratio).collect();
        let unsolved = rows.iter().filter(|r| !r.both_solved()).count();
        let mean_cost_ratio =
            (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
        EvalReport {
            speedup: median(speedups),
            mean_cost_ratio,
            unsolved,
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "problem_id,baseline_expansions,method_expansions,baseline_cost,method_cost\n",
        );
        let cost = |c: Option<Cost>| c.map_or_else(String::new, |c| c.to_string());
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.problem_id,
                r.baseline_expansions,
                r.method_expansions,
                cost(r.baseline_cost),
                cost(r.method_cost)
            ));
        }
        out
    }
}

pub fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Runs `baseline` and `method` on every problem. Problems run in parallel
/// on the current rayon pool; rows keep problem order.
pub fn evaluate(
    maps: &MapSet,
    problems: &[Problem],
    baseline: &Method,
    method: &Method,
    k: u32,
    limit: Option<u64>,
) -> Result<EvalReport> {
    let rows = problems
        .par_iter()
        .map(|p| {
            let b = run_method(maps, p, baseline, k, limit)?;
            let m = run_method(maps, p, method, k, limit)?;
            Ok(EvalRow {
                problem_id: p.problem_id,
                baseline_expansions: b.expansions,
                method_expansions: m.expansions,
                baseline_cost: b.cost,
                method_cost: m.cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_rows(rows))
}

/// Result of collecting on a batch of problems.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Collection {
    pub samples: Vec<Sample>,
    pub expansions: u64,
    pub solved: usize,
    pub stats: Vec<CollectorStats>,
}

/// Solves each problem once with backtracking collection enabled: weighted
/// A* ordering without a model, residual-guided focal search with one.
pub fn collect_batch(
    maps: &MapSet,
    problems: &[Problem],
    k: u32,
    weight: f64,
    model: Option<(&ResidualModel, Guidance)>,
    limit: Option<u64>,
) -> Result<Collection> {
    let parts = problems
        .par_iter()
        .map(|p| {
            let grid = maps.require(&p.map_id)?;
            with_domain!(p.domain, D => collect_one::<D>(grid, p, k, weight, model, limit))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Collection::default();
    for (samples, expansions, solved, stats) in parts {
        out.samples.extend(samples);
        out.expansions += expansions;
        out.solved += solved as usize;
        out.stats.push(stats);
    }
    Ok(out)
}

fn collect_one<'g, D: GridDomain<'g>>(
    grid: &'g OccupancyGrid,
    problem: &Problem,
    k: u32,
    weight: f64,
    model: Option<(&ResidualModel, Guidance)>,
    limit: Option<u64>,
) -> Result<(Vec<Sample>, u64, bool, CollectorStats)> {
    let domain = D::on_grid(grid);
    let (start, goal) = problem.decode::<D>()?;
    let mut ctx = SampleContext {
        domain: D::KIND,
        map_id: problem.map_id.clone(),
        problem_id: problem.problem_id,
        goal: goal.encode(),
        k,
        search_mode: SearchMode::WeightedAstar,
    };
    match model {
        None => {
            if weight == 1.0 {
                ctx.search_mode = SearchMode::Astar;
            }
            let mut collector = BacktrackCollector::new(&domain, k);
            let r = astar(
                &domain,
                start,
                goal,
                SearchParams::new(weight).with_limit(limit),
                &mut collector,
            );
            Ok((
                collector.finalize(&ctx),
                r.expansions,
                r.solved(),
                collector.stats(),
            ))
        }
        Some((m, guidance)) => {
            ctx.search_mode = SearchMode::Focal;
            let options = PlanOptions {
                weight,
                k,
                guidance,
                expansion_limit: limit,
            };
            let out = loha_plan(&domain, start, goal, Some(m), &options, Some(&ctx))?;
            Ok((
                out.samples,
                out.result.expansions,
                out.result.solved(),
                out.collector.unwrap_or_default(),
            ))
        }
    }
}

/// Trains a fresh model, or fine-tunes `init` when given.
pub fn train_on(
    maps: &MapSet,
    samples: &[Sample],
    hyper: &Hyperparams,
    init: Option<ResidualModel>,
) -> Result<(ResidualModel, Vec<f64>)> {
    let data = build_dataset(samples, &|id: &str| maps.get(id))?;
    let out = match init {
        Some(m) => fine_tune(m, &data, hyper)?,
        None => train(&data, hyper)?,
    };
    Ok((out.model, out.loss_history))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    pub batch_size: usize,
    pub rounds: usize,
    pub weight: f64,
    #[serde(rename = "K")]
    pub k: u32,
    pub guidance: Guidance,
    pub hyperparams: Hyperparams,
    /// Continue from the previous round's weights instead of retraining.
    pub fine_tune: bool,
    pub expansion_limit: Option<u64>,
    pub problem_spec: ProblemSpec,
    pub seed: u64,
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if !(self.weight >= 1.0) {
            return Err(Error::Config(format!(
                "weight {} must be >= 1",
                self.weight
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        self.hyperparams.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineRound {
    /// Zero-based; round 0 collects with weighted A*.
    pub round: usize,
    pub report: EvalReport,
    pub dataset_size: usize,
    /// Expansions of all collecting searches so far.
    pub collection_expansions: u64,
    /// Problem draws rejected (unsolvable or out of band) this round.
    pub resampled: u64,
    pub final_loss: Option<f64>,
}

pub struct OnlineOutcome {
    pub rounds: Vec<OnlineRound>,
    pub model: ResidualModel,
    pub samples: Vec<Sample>,
}

/// Alternates collection and retraining. Every round solves `batch_size`
/// fresh problems (weighted A* in round 0, the current model afterwards),
/// appends their samples, retrains and evaluates against weighted A* on
/// `eval_set`.
pub fn online_loop(
    config: &OnlineConfig,
    maps: &MapSet,
    eval_set: &[Problem],
) -> Result<OnlineOutcome> {
    config.validate()?;
    let domain = eval_set
        .first()
        .map(|p| p.domain)
        .ok_or_else(|| Error::Config("empty evaluation set".into()))?;
    let mut samples = Vec::new();
    let mut collection_expansions = 0;
    let mut model: Option<ResidualModel> = None;
    let mut rounds = Vec::with_capacity(config.rounds);
    let baseline = Method::WeightedAstar {
        weight: config.weight,
    };
    for round in 0..config.rounds {
        let batch = sample_problems(
            maps,
            domain,
            (round * config.batch_size) as u64,
            config.batch_size,
            &config.problem_spec,
            config.seed,
            "online-train",
        )?;
        let guided = model.as_ref().map(|m| (m, config.guidance));
        let collected = collect_batch(
            maps,
            &batch.problems,
            config.k,
            config.weight,
            guided,
            config.expansion_limit,
        )?;
        samples.extend(collected.samples);
        collection_expansions += collected.expansions;
        let init = if config.fine_tune { model.take() } else { None };
        let (next, losses) = train_on(maps, &samples, &config.hyperparams, init)?;
        let method = Method::Loha {
            weight: config.weight,
            model: &next,
            guidance: config.guidance,
        };
        let report = evaluate(
            maps,
            eval_set,
            &baseline,
            &method,
            config.k,
            config.expansion_limit,
        )?;
        rounds.push(OnlineRound {
            round,
            report,
            dataset_size: samples.len(),
            collection_expansions,
            resampled: batch.resampled,
            final_loss: losses.last().copied(),
        });
        model = Some(next);
    }
    Ok(OnlineOutcome {
        rounds,
        model: model.expect("at least one round"),
        samples,
    })
}
