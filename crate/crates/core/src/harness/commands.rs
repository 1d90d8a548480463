use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{config_hash, Defaults, ExperimentConfig};
use super::files::{
    ensure_parent, file_hash, load_map_dir, manifest_path, maps_hash, read_samples, write_bytes,
    write_json, write_samples,
};
use super::{BenchArgs, CollectArgs, EvalArgs, GenMapsArgs, OnlineArgs, OracleArgs, TrainArgs};
use crate::collector::{
    collect_via_oracle, ClosedList, OracleCollection, Sample, SampleContext, SearchMode,
};
use crate::error::{Error, Result};
use crate::gridmap::OccupancyGrid;
use crate::model::{self, load_metadata, load_model, save_model, ModelMetadata, ResidualModel};
use crate::planner::{collect_batch, evaluate, online_loop, Method, OnlineConfig};
use crate::problem::{sample_problems, MapSet, Problem};
use crate::search::{astar, EscapeRule, NoHook, OracleConfig, SearchParams};
use crate::seed::{derive_seed, rng_for};
use crate::statespace::{DomainKind, GridDomain, StateCodec};
use crate::with_domain;

/// Random stream label for training problems.
pub const TRAIN_PURPOSE: &str = "train";
/// Random stream label for held-out problems.
pub const EVAL_PURPOSE: &str = "eval";

pub fn gen_maps(a: &GenMapsArgs) -> Result<String> {
    if a.num_maps == 0 {
        return Err(Error::Config("--num-maps must be >= 1".into()));
    }
    let config = json!({
        "num_maps": a.num_maps,
        "width": a.width,
        "height": a.height,
        "density": a.density,
        "seed": a.seed,
    });
    let hash = config_hash("gen-maps", &config, &());
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut entries = Vec::with_capacity(a.num_maps);
    for i in 0..a.num_maps {
        let seed = derive_seed(a.seed, "map", i as u64);
        let grid = OccupancyGrid::generate_random(a.width, a.height, a.density, seed)?;
        let file = format!("map_{i:03}.map");
        let path = a.out.join(&file);
        grid.write_map(&path)?;
        entries.push(json!({
            "id": format!("map_{i:03}"),
            "file": file,
            "sha256": file_hash(&path)?,
            "obstacles": grid.obstacle_count(),
        }));
    }
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "command": "gen-maps",
            "config_hash": hash,
            "config": config,
            "maps": entries,
        }),
    )?;
    Ok(format!("wrote {} maps to {}", a.num_maps, a.out.display()))
}

/// Model plus its sidecar, if one exists.
fn open_model(path: &Path) -> Result<(ResidualModel, Option<ModelMetadata>)> {
    let model = load_model(path)?;
    let meta = if model::io::sidecar_path(path).exists() {
        Some(load_metadata(path)?)
    } else {
        None
    };
    Ok((model, meta))
}

fn check_model_fits(meta: Option<&ModelMetadata>, domain: DomainKind, k: u32) -> Result<()> {
    if let Some(m) = meta {
        if m.domain != domain {
            return Err(Error::MixedDomain {
                first: m.domain.to_string(),
                other: domain.to_string(),
            });
        }
        if m.k != k {
            return Err(Error::Config(format!(
                "model was trained for K={} but K={k} was requested",
                m.k
            )));
        }
    }
    Ok(())
}

pub fn collect(a: &CollectArgs) -> Result<String> {
    let opened = a.model.as_deref().map(open_model).transpose()?;
    let meta = opened.as_ref().and_then(|(_, m)| m.as_ref());
    let k_default = meta.map_or(4, |m| m.k);
    let cfg = ExperimentConfig::resolve(
        &a.common,
        &a.problems,
        Defaults {
            domain: meta.map_or(DomainKind::Car4d, |m| m.domain),
            k: &[k_default],
            w: &[4.0],
            problems: 20,
        },
    )?;
    let (k, w, seed) = (cfg.single_k()?, cfg.single_w()?, cfg.single_seed()?);
    check_model_fits(meta, cfg.domain, k)?;
    let maps = load_map_dir(&a.map_dir)?;
    let inputs = json!({
        "maps": maps_hash(&maps),
        "model": a.model.as_deref().map(file_hash).transpose()?,
    });
    let options = json!({ "guidance": a.guidance });
    let hash = config_hash("collect", &(&cfg, &options), &inputs);
    let batch = sample_problems(
        &maps,
        cfg.domain,
        0,
        cfg.problems,
        &cfg.problem_spec,
        seed,
        TRAIN_PURPOSE,
    )?;
    let guided = opened.as_ref().map(|(m, _)| (m, a.guidance));
    let col = collect_batch(&maps, &batch.problems, k, w, guided, cfg.expansion_limit)?;
    write_samples(&cfg.out, &col.samples)?;
    let complete = col.samples.iter().filter(|s| s.complete).count();
    write_json(
        &manifest_path(&cfg.out),
        &json!({
            "command": "collect",
            "config_hash": hash,
            "config": cfg,
            "options": options,
            "inputs": inputs,
            "problems": batch.problems,
            "resampled": batch.resampled,
            "solved": col.solved,
            "expansions": col.expansions,
            "samples": col.samples.len(),
            "complete": complete,
        }),
    )?;
    Ok(format!(
        "{} samples ({complete} complete) from {} problems, {} expansions",
        col.samples.len(),
        batch.problems.len(),
        col.expansions
    ))
}

/// Oracle labels for states drawn from one global-search tree.
#[derive(Clone, Debug, Default)]
pub struct OracleRun {
    pub samples: Vec<Sample>,
    /// States handed to the oracle, including dead ends.
    pub states: usize,
    pub oracle_expansions: u64,
    pub global_expansions: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleSampling {
    pub k: u32,
    pub weight: f64,
    pub expansion_limit: Option<u64>,
    pub states_per_problem: usize,
    pub seed: u64,
    pub escape: EscapeRule,
    pub closed_list_obstacles: bool,
}

/// Runs weighted A* on every problem, draws up to `states_per_problem`
/// expanded states per tree and labels them with the local oracle.
pub fn oracle_label(maps: &MapSet, problems: &[Problem], s: &OracleSampling) -> Result<OracleRun> {
    let parts = problems
        .par_iter()
        .map(|p| {
            let grid = maps.require(&p.map_id)?;
            with_domain!(p.domain, D => oracle_one::<D>(grid, p, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = OracleRun::default();
    for part in parts {
        out.samples.extend(part.samples);
        out.states += part.states;
        out.oracle_expansions += part.oracle_expansions;
        out.global_expansions += part.global_expansions;
    }
    Ok(out)
}

fn oracle_one<'g, D: GridDomain<'g>>(
    grid: &'g OccupancyGrid,
    p: &Problem,
    s: &OracleSampling,
) -> Result<OracleRun> {
    let domain = D::on_grid(grid);
    let (start, goal) = p.decode::<D>()?;
    let params = SearchParams::new(s.weight).with_limit(s.expansion_limit);
    let r = astar(&domain, start, goal, params, &mut NoHook);
    let expanded = r.tree.expansion_order();
    let mut rng = rng_for(s.seed, "oracle-states", p.problem_id);
    let mut picks = rand::seq::index::sample(
        &mut rng,
        expanded.len(),
        s.states_per_problem.min(expanded.len()),
    )
    .into_vec();
    picks.sort_unstable();
    let states: Vec<D::State> = picks
        .iter()
        .map(|&i| r.tree.node(expanded[i]).state)
        .collect();
    let ctx = SampleContext {
        domain: D::KIND,
        map_id: p.map_id.clone(),
        problem_id: p.problem_id,
        goal: goal.encode(),
        k: s.k,
        search_mode: SearchMode::LocalOracle,
    };
    let options = OracleCollection {
        oracle: OracleConfig::new(s.k).with_rule(s.escape),
        closed_list_obstacles: s.closed_list_obstacles,
    };
    let closed = ClosedList::new(&r.tree);
    let (samples, oracle_expansions) =
        collect_via_oracle(&domain, &states, &goal, options, Some(&closed), &ctx);
    Ok(OracleRun {
        samples,
        states: states.len(),
        oracle_expansions,
        global_expansions: r.expansions,
    })
}

pub fn oracle(a: &OracleArgs) -> Result<String> {
    let cfg = ExperimentConfig::resolve(
        &a.common,
        &a.problems,
        Defaults {
            domain: DomainKind::Car4d,
            k: &[4],
            w: &[4.0],
            problems: 20,
        },
    )?;
    let maps = load_map_dir(&a.map_dir)?;
    let sampling = OracleSampling {
        k: cfg.single_k()?,
        weight: cfg.single_w()?,
        expansion_limit: cfg.expansion_limit,
        states_per_problem: a.states_per_problem,
        seed: cfg.single_seed()?,
        escape: a.escape,
        closed_list_obstacles: a.closed_list_obstacles,
    };
    let options = json!({
        "states_per_problem": a.states_per_problem,
        "escape": a.escape,
        "closed_list_obstacles": a.closed_list_obstacles,
    });
    let inputs = json!({ "maps": maps_hash(&maps) });
    let hash = config_hash("oracle", &(&cfg, &options), &inputs);
    let batch = sample_problems(
        &maps,
        cfg.domain,
        0,
        cfg.problems,
        &cfg.problem_spec,
        sampling.seed,
        TRAIN_PURPOSE,
    )?;
    let run = oracle_label(&maps, &batch.problems, &sampling)?;
    write_samples(&cfg.out, &run.samples)?;
    write_json(
        &manifest_path(&cfg.out),
        &json!({
            "command": "oracle",
            "config_hash": hash,
            "config": cfg,
            "options": options,
            "inputs": inputs,
            "problems": batch.problems,
            "resampled": batch.resampled,
            "states": run.states,
            "samples": run.samples.len(),
            "expansions": run.oracle_expansions,
            "global_expansions": run.global_expansions,
        }),
    )?;
    Ok(format!(
        "{} samples from {} states, {} oracle expansions",
        run.samples.len(),
        run.states,
        run.oracle_expansions
    ))
}

/// Collection cost recorded next to a sample file, or 0 without a manifest.
fn collection_expansions(samples_path: &Path) -> Result<u64> {
    let path = manifest_path(samples_path);
    if !path.exists() {
        return Ok(0);
    }
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)?;
    Ok(value
        .get("expansions")
        .and_then(|v| v.as_u64())
        .unwrap_or(0))
}

pub fn train(a: &TrainArgs) -> Result<String> {
    let hyper = a.params.hyperparams(a.seed)?;
    let samples = read_samples(&a.samples)?;
    let maps = load_map_dir(&a.map_dir)?;
    let data = model::build_dataset(&samples, &|id: &str| maps.get(id))?;
    let set_hash = model::samples_hash(&samples);
    let inputs = json!({ "samples": set_hash, "maps": maps_hash(&maps) });
    let hash = config_hash("train", &hyper, &inputs);
    let out = model::train(&data, &hyper)?;
    let meta = ModelMetadata {
        domain: data.domain,
        k: data.k,
        layer_sizes: out.model.sizes(),
        hyperparams: hyper,
        training_set_hash: set_hash,
        dataset_size: data.len(),
        collection_expansions: collection_expansions(&a.samples)?,
        loss_history: out.loss_history.clone(),
        config_hash: hash,
    };
    ensure_parent(&a.out)?;
    save_model(&a.out, &out.model, Some(&meta))?;
    Ok(format!(
        "trained on {} samples ({} skipped), final loss {:.6}",
        data.len(),
        data.skipped,
        out.loss_history.last().copied().unwrap_or(f64::NAN)
    ))
}

pub fn eval(a: &EvalArgs) -> Result<String> {
    let (model, meta) = open_model(&a.model)?;
    let cfg = ExperimentConfig::resolve(
        &a.common,
        &a.problems,
        Defaults {
            domain: meta.as_ref().map_or(DomainKind::Car4d, |m| m.domain),
            k: &[meta.as_ref().map_or(4, |m| m.k)],
            w: &[4.0],
            problems: 50,
        },
    )?;
    let (k, w, seed) = (cfg.single_k()?, cfg.single_w()?, cfg.single_seed()?);
    check_model_fits(meta.as_ref(), cfg.domain, k)?;
    let maps = load_map_dir(&a.map_dir)?;
    let options = json!({ "guidance": a.guidance });
    let inputs = json!({ "maps": maps_hash(&maps), "model": file_hash(&a.model)? });
    let hash = config_hash("eval", &(&cfg, &options), &inputs);
    let batch = sample_problems(
        &maps,
        cfg.domain,
        0,
        cfg.problems,
        &cfg.problem_spec,
        seed,
        EVAL_PURPOSE,
    )?;
    let method = Method::Loha {
        weight: w,
        model: &model,
        guidance: a.guidance,
    };
    let report = evaluate(
        &maps,
        &batch.problems,
        &Method::WeightedAstar { weight: w },
        &method,
        k,
        cfg.expansion_limit,
    )?;
    let csv = format!("# config_hash: {hash}\n{}", report.to_csv());
    write_bytes(&cfg.out, csv.as_bytes())?;
    write_json(
        &manifest_path(&cfg.out),
        &json!({
            "command": "eval",
            "config_hash": hash,
            "config": cfg,
            "options": options,
            "inputs": inputs,
            "speedup": report.speedup,
            "mean_cost_ratio": report.mean_cost_ratio,
            "unsolved": report.unsolved,
            "problems": report.rows.len(),
            "resampled": batch.resampled,
            "dataset_size": meta.as_ref().map(|m| m.dataset_size),
            "collection_expansions": meta.as_ref().map(|m| m.collection_expansions),
        }),
    )?;
    Ok(match report.speedup {
        Some(s) => format!("median speedup {s:.3} over {} problems", report.rows.len()),
        None => "no problem was solved by both methods".into(),
    })
}

/// Mean held-out speedup across seeds for each online round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub config_hash: String,
    pub rounds: Vec<OnlineRoundSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineRoundSummary {
    /// Zero-based.
    pub round: usize,
    /// Per seed, in `--seed` order; `None` when no problem was solved by both.
    pub speedups: Vec<Option<f64>>,
    pub mean_speedup: Option<f64>,
    pub mean_dataset_size: f64,
}

pub fn online(a: &OnlineArgs) -> Result<String> {
    let cfg = ExperimentConfig::resolve(
        &a.common,
        &a.problems,
        Defaults {
            domain: DomainKind::Car4d,
            k: &[4],
            w: &[4.0],
            problems: 50,
        },
    )?;
    let (k, w) = (cfg.single_k()?, cfg.single_w()?);
    let maps = load_map_dir(&a.map_dir)?;
    let options = json!({
        "round_size": a.round_size,
        "rounds": a.rounds,
        "fine_tune": a.fine_tune,
        "guidance": a.guidance,
        "train": a.params,
    });
    let inputs = json!({ "maps": maps_hash(&maps) });
    let hash = config_hash("online", &(&cfg, &options), &inputs);
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut csv = format!(
        "# config_hash: {hash}\nseed,round,speedup,mean_cost_ratio,unsolved,dataset_size,collection_expansions,resampled,final_loss\n"
    );
    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let eval_set = sample_problems(
            &maps,
            cfg.domain,
            0,
            cfg.problems,
            &cfg.problem_spec,
            seed,
            EVAL_PURPOSE,
        )?;
        let config = OnlineConfig {
            batch_size: a.round_size,
            rounds: a.rounds,
            weight: w,
            k,
            guidance: a.guidance,
            hyperparams: a.params.hyperparams(seed)?,
            fine_tune: a.fine_tune,
            expansion_limit: cfg.expansion_limit,
            problem_spec: cfg.problem_spec,
            seed,
        };
        let outcome = online_loop(&config, &maps, &eval_set.problems)?;
        for r in &outcome.rounds {
            csv.push_str(&format!(
                "{seed},{},{},{},{},{},{},{},{}\n",
                r.round,
                opt(r.report.speedup),
                opt(r.report.mean_cost_ratio),
                r.report.unsolved,
                r.dataset_size,
                r.collection_expansions,
                r.resampled,
                opt(r.final_loss),
            ));
        }
        let model_path = cfg.out.join(format!("model_seed{seed}.bin"));
        let meta = ModelMetadata {
            domain: cfg.domain,
            k,
            layer_sizes: outcome.model.sizes(),
            hyperparams: config.hyperparams.clone(),
            training_set_hash: model::samples_hash(&outcome.samples),
            dataset_size: outcome.samples.len(),
            collection_expansions: outcome.rounds.last().map_or(0, |r| r.collection_expansions),
            loss_history: Vec::new(),
            config_hash: hash.clone(),
        };
        save_model(&model_path, &outcome.model, Some(&meta))?;
        per_seed.push(outcome.rounds);
    }
    let rounds = (0..a.rounds)
        .map(|i| {
            let speedups: Vec<Option<f64>> =
                per_seed.iter().map(|rs| rs[i].report.speedup).collect();
            let solved: Vec<f64> = speedups.iter().flatten().copied().collect();
            OnlineRoundSummary {
                round: i,
                mean_speedup: (!solved.is_empty())
                    .then(|| solved.iter().sum::<f64>() / solved.len() as f64),
                speedups,
                mean_dataset_size: per_seed
                    .iter()
                    .map(|rs| rs[i].dataset_size as f64)
                    .sum::<f64>()
                    / per_seed.len() as f64,
            }
        })
        .collect();
    let summary = OnlineSummary {
        config_hash: hash,
        rounds,
    };
    write_bytes(&cfg.out.join("rounds.csv"), csv.as_bytes())?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    let line = summary
        .rounds
        .iter()
        .map(|r| opt(r.mean_speedup))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(format!("mean speedup per round: {line}"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// One cell of the efficiency table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    #[serde(rename = "K")]
    pub k: u32,
    pub expansions: u64,
    pub samples: usize,
    pub expansions_per_sample: f64,
}

pub const LOCAL_ASTAR: &str = "Local A*";
pub const COMPLETE: &str = "Complete";
pub const INCOMPLETE: &str = "Incomplete";

/// Expansions spent per training sample by the local oracle and by
/// backtracking, for each `K`. The backtracking rows share the global
/// searches' expansions: Complete divides by complete samples only,
/// Incomplete by all samples.
pub fn efficiency_rows(
    maps: &MapSet,
    problems: &[Problem],
    ks: &[u32],
    weight: f64,
    expansion_limit: Option<u64>,
    states_per_problem: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(3 * ks.len());
    for &k in ks {
        let sampling = OracleSampling {
            k,
            weight,
            expansion_limit,
            states_per_problem,
            seed,
            escape: EscapeRule::Reach,
            closed_list_obstacles: false,
        };
        let run = oracle_label(maps, problems, &sampling)?;
        let col = collect_batch(maps, problems, k, weight, None, expansion_limit)?;
        let complete = col.samples.iter().filter(|s| s.complete).count();
        let row = |method: &str, expansions: u64, samples: usize| BenchRow {
            method: method.into(),
            k,
            expansions,
            samples,
            expansions_per_sample: if samples == 0 {
                f64::INFINITY
            } else {
                expansions as f64 / samples as f64
            },
        };
        rows.push(row(LOCAL_ASTAR, run.oracle_expansions, run.samples.len()));
        rows.push(row(COMPLETE, col.expansions, complete));
        rows.push(row(INCOMPLETE, col.expansions, col.samples.len()));
    }
    Ok(rows)
}

pub fn bench_efficiency(a: &BenchArgs) -> Result<String> {
    let cfg = ExperimentConfig::resolve(
        &a.common,
        &a.problems,
        Defaults {
            domain: DomainKind::Car4d,
            k: &[2, 4, 8],
            w: &[BENCH_WEIGHT],
            problems: 10,
        },
    )?;
    let (w, seed) = (cfg.single_w()?, cfg.single_seed()?);
    let maps = load_map_dir(&a.map_dir)?;
    let options = json!({ "states_per_problem": a.states_per_problem });
    let inputs = json!({ "maps": maps_hash(&maps) });
    let hash = config_hash("bench-efficiency", &(&cfg, &options), &inputs);
    let batch = sample_problems(
        &maps,
        cfg.domain,
        0,
        cfg.problems,
        &cfg.problem_spec,
        seed,
        TRAIN_PURPOSE,
    )?;
    let rows = efficiency_rows(
        &maps,
        &batch.problems,
        &cfg.k,
        w,
        cfg.expansion_limit,
        a.states_per_problem,
        seed,
    )?;
    let mut csv = format!(
        "# config_hash: {hash}\n\
         # expansions_per_sample = expansions / samples. Local A*: oracle expansions over labelled states.\n\
         # Complete and Incomplete share the global-search expansions; Complete counts complete samples only.\n\
         method,K,expansions,samples,expansions_per_sample\n"
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method, r.k, r.expansions, r.samples, r.expansions_per_sample
        ));
    }
    write_bytes(&cfg.out, csv.as_bytes())?;
    Ok(format!(
        "{} rows written to {}",
        rows.len(),
        cfg.out.display()
    ))
}

/// Weight of the global searches in the efficiency table.
pub const BENCH_WEIGHT: f64 = 4.0;
