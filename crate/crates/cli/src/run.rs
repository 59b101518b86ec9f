//! Executes a validated configuration.

use minentlab::bounds::{
    dephasing_reduction_check, fano_check, guarantee_check, hmin_below_shannon_check, minimax_bound,
    quantum_fano_check, singlet_fano_check, ANALYTIC_TOL, SDP_TOL,
};
use minentlab::discretize::{covering_partition, greedy_packing_net, validate_discretization, Metric};
use minentlab::entfrac::{verify_thm1, verify_thm2};
use minentlab::entropy::conditional_shannon;
use minentlab::learning::{
    exact_learning_scenario, exhaustive_map_success, induced_joint, map_decoder_success, monte_carlo_risk,
    prop2_check, prop3_check, Estimator, LearningTask, Loss, Score,
};
use minentlab::quantum::singlet_fraction_given_decoder;
use minentlab::random::{random_density, random_probability, random_pure, random_table};
use minentlab::sdp::channel_from_dual;
use minentlab::{solve_hmin, BoundReport, ComplexMatrix, Discretization, JointTable, MetricSpace, SdpStatus};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CommandKind, ExperimentConfig, SpaceConfig, VerifyTarget};
use crate::spec::ChannelSpec;
use crate::CliError;

/// Default number of instances in a randomized suite.
pub const DEFAULT_N: usize = 100;
/// Duality-gap target handed to the solver by `minent`.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;
/// Pass tolerance of the entanglement-fraction checks.
pub const DEFAULT_THEOREM_TOL: f64 = 1e-6;

pub enum Output {
    Reports(Vec<BoundReport>),
    /// A single JSON document and whether it counts as passing.
    Document(Value, bool),
}

impl Output {
    pub fn passed(&self) -> bool {
        match self {
            Output::Reports(r) => r.iter().all(|r| r.pass),
            Output::Document(_, pass) => *pass,
        }
    }
}

type Res<T> = Result<T, CliError>;

pub fn run(cfg: &ExperimentConfig) -> Res<Output> {
    let out = match cfg.command {
        CommandKind::Discretize => return discretize(cfg),
        CommandKind::Minent => return minent(cfg),
        CommandKind::SingletFraction => singlet_fraction(cfg)?,
        CommandKind::Verify => verify(cfg)?,
        CommandKind::Simulate => simulate(cfg)?,
        CommandKind::ExactLearning => exact_learning(cfg)?,
    };
    let hash = cfg.hash();
    let seed = cfg.is_randomized().then_some(cfg.seed).flatten();
    Ok(Output::Reports(
        out.into_iter()
            .map(|mut r| {
                if let Some(t) = cfg.tol {
                    r.pass = r.slack >= -t;
                }
                r.with_provenance(seed, Some(hash.clone()))
            })
            .collect(),
    ))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn build_space(space: Option<&SpaceConfig>) -> Res<MetricSpace> {
    let Some(space) = space else {
        return Ok(MetricSpace::grid_1d(0.0, 1.0, 0.05)?);
    };
    if let Some(points) = &space.points {
        let bounds = match &space.bounds {
            Some(b) => b.clone(),
            None => {
                let dim = points.first().map_or(0, Vec::len);
                (0..dim)
                    .map(|k| {
                        points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                            (lo.min(p[k]), hi.max(p[k]))
                        })
                    })
                    .collect()
            }
        };
        return Ok(MetricSpace::new(points.clone(), space.metric, bounds)?);
    }
    match (&space.bounds, &space.counts) {
        (Some(b), Some(c)) => Ok(MetricSpace::uniform_grid(b.clone(), c, space.metric)?),
        _ => Err(usage("space needs points or bounds with counts")),
    }
}

/// Candidate points evenly spread over `[0, 1]` with greedy cells of one
/// point each, so the partition has exactly `n` cells.
fn unit_cells(n: usize) -> Res<Discretization> {
    let space = MetricSpace::uniform_grid(vec![(0.0, 1.0)], &[n], Metric::AbsoluteDifference)?;
    let eps = if n > 1 { 1.0 / (n - 1) as f64 } else { 1.0 };
    let disc = covering_partition(&greedy_packing_net(&space, eps)?)?;
    if disc.len() != n {
        return Err(usage(format!("could not build {n} cells")));
    }
    Ok(disc)
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs `f` on instance indices `0..n` in parallel, each with its own
/// substream, and concatenates results in index order.
fn suite<F>(n: usize, seed: u64, f: F) -> Res<Vec<BoundReport>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Res<Vec<BoundReport>> + Sync,
{
    let parts: Vec<Vec<BoundReport>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            f(i, &mut rng).map(|reports| {
                reports
                    .into_iter()
                    .map(|mut r| {
                        r.instance = format!("#{i} {}", r.instance);
                        r
                    })
                    .collect()
            })
        })
        .collect::<Res<_>>()?;
    Ok(parts.concat())
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect())
            .collect(),
    )
}

fn discretize(cfg: &ExperimentConfig) -> Res<Output> {
    let eps = cfg.epsilon.ok_or_else(|| usage("epsilon is required"))?;
    let space = build_space(cfg.space.as_ref())?;
    let disc = covering_partition(&greedy_packing_net(&space, eps)?)?;
    let violations = validate_discretization(&disc);
    let cells = disc.cells().map(<[usize]>::to_vec).unwrap_or_default();
    let mut sizes = vec![0usize; disc.len()];
    cells.iter().for_each(|&c| sizes[c] += 1);
    let doc = json!({
        "epsilon": eps,
        "metric": space.metric(),
        "kind": disc.kind(),
        "candidates": space.len(),
        "centers": disc.centers(),
        "cells": cells,
        "cell_sizes": sizes,
        "violations": violations,
        "config_hash": cfg.hash(),
    });
    Ok(Output::Document(doc, violations.is_empty()))
}

fn state(cfg: &ExperimentConfig) -> Res<minentlab::DensityOperator> {
    Ok(cfg.state.as_ref().ok_or_else(|| usage("state is required"))?.build()?)
}

fn minent(cfg: &ExperimentConfig) -> Res<Output> {
    let rho = state(cfg)?;
    let sol = solve_hmin(&rho, cfg.tol.unwrap_or(DEFAULT_SOLVER_TOL))?;
    let (primal_res, dual_res, trace_res) = sol.residuals(rho.matrix());
    let doc = json!({
        "dims": rho.dims(),
        "primal_value": sol.primal_value,
        "dual_value": sol.dual_value,
        "gap": sol.gap,
        "hmin": sol.hmin(),
        "iterations": sol.iterations,
        "status": sol.status,
        "residuals": { "primal": primal_res, "dual": dual_res, "partial_trace": trace_res },
        "sigma": matrix_json(&sol.sigma),
        "config_hash": cfg.hash(),
    });
    Ok(Output::Document(doc, sol.status == SdpStatus::Optimal))
}

fn singlet_fraction(cfg: &ExperimentConfig) -> Res<Vec<BoundReport>> {
    let rho = state(cfg)?;
    let sol = solve_hmin(&rho, DEFAULT_SOLVER_TOL)?;
    if sol.status != SdpStatus::Optimal {
        return Err(minentlab::Error::Numerical(format!("solver stopped with gap {:.3e}", sol.gap)).into());
    }
    let decoder = channel_from_dual(&sol)?;
    let achieved = singlet_fraction_given_decoder(&rho, &decoder)?;
    Ok(vec![
        BoundReport::equality(
            "decoder-attains-optimum",
            achieved,
            sol.primal_value,
            SDP_TOL,
            format!("dims={:?}, hmin={}", rho.dims(), sol.hmin()),
        ),
        singlet_fano_check(&rho)?,
    ])
}

fn classical_reports(t: &JointTable) -> Res<Vec<BoundReport>> {
    let success = exhaustive_map_success(t).unwrap_or_else(|_| map_decoder_success(t).0);
    Ok(vec![fano_check(t, success)?, guarantee_check(t)?, hmin_below_shannon_check(t)?])
}

fn verify(cfg: &ExperimentConfig) -> Res<Vec<BoundReport>> {
    let target = cfg.target.ok_or_else(|| usage("verify needs a target"))?;
    let n = cfg.n.unwrap_or(DEFAULT_N);
    let seed = cfg.seed.unwrap_or(0);
    let randomized = cfg.suite.is_some();
    match target {
        VerifyTarget::Classical if randomized => suite(n, seed, |_, rng| {
            let (ra, cb) = (rng.random_range(1..=6), rng.random_range(1..=6));
            classical_reports(&random_table(rng, ra, cb))
        }),
        VerifyTarget::Classical => {
            let table = cfg.table.as_ref().ok_or_else(|| usage("table is required"))?;
            classical_reports(&JointTable::from_nested(table)?)
        }
        VerifyTarget::Qfano => suite(n, seed, |_, rng| {
            let d = rng.random_range(1..=3);
            let psi = random_pure(rng, &[d, d]);
            let rank = rng.random_range(1..=d * d);
            let rho = random_density(rng, &[d, d], rank);
            Ok(vec![quantum_fano_check(&psi, &rho, d)?])
        }),
        VerifyTarget::Dephasing if randomized => suite(n, seed, |_, rng| {
            let dims = [rng.random_range(1..=3), rng.random_range(1..=3)];
            let rank = rng.random_range(1..=dims[0] * dims[1]);
            Ok(vec![dephasing_reduction_check(&random_density(rng, &dims, rank))?])
        }),
        VerifyTarget::Dephasing => Ok(vec![dephasing_reduction_check(&state(cfg)?)?]),
        VerifyTarget::Prop2 | VerifyTarget::Prop3 if randomized => random_learning_suite(cfg, target, n, seed),
        VerifyTarget::Prop2 => {
            let eps = cfg.epsilon.ok_or_else(|| usage("epsilon is required"))?;
            let task = configured_task(cfg, 2.0 * eps)?;
            Ok(vec![prop2_check(&task, task.partition(), eps)?])
        }
        VerifyTarget::Prop3 => {
            let eps = cfg.epsilon.ok_or_else(|| usage("epsilon is required"))?;
            let task = configured_task(cfg, eps)?;
            Ok(vec![prop3_check(&task, task.partition())?])
        }
        VerifyTarget::Thm1 | VerifyTarget::Thm2 => theorem_reports(cfg, target, n, seed),
    }
}

/// Task on the greedy partition of the configured space at radius `radius`.
fn configured_task(cfg: &ExperimentConfig, radius: f64) -> Res<LearningTask> {
    let tc = cfg.task.as_ref().ok_or_else(|| usage("task is required"))?;
    let space = build_space(cfg.space.as_ref())?;
    let partition = covering_partition(&greedy_packing_net(&space, radius)?)?;
    if partition.len() != tc.likelihood.len() {
        return Err(usage(format!(
            "task.likelihood has {} rows but the partition at radius {radius} has {} cells",
            tc.likelihood.len(),
            partition.len()
        )));
    }
    Ok(LearningTask::new(partition, tc.likelihood.clone(), tc.prior.clone(), tc.loss, tc.score)?)
}

fn random_learning_suite(cfg: &ExperimentConfig, target: VerifyTarget, n: usize, seed: u64) -> Res<Vec<BoundReport>> {
    let space = build_space(cfg.space.as_ref())?;
    suite(n, seed, |i, rng| {
        if target == VerifyTarget::Prop2 {
            let eps = cfg.epsilon.unwrap_or_else(|| [0.15, 0.175, 0.2, 0.25, 0.3, 0.5][rng.random_range(0..6)]);
            let packing = covering_partition(&greedy_packing_net(&space, 2.0 * eps)?)?;
            let nv = packing.len();
            let max_b = (1..=16u32).take_while(|&b| nv.checked_pow(b).is_some_and(|x| x <= 4096)).last().unwrap_or(1);
            let nb = rng.random_range(1..=max_b as usize);
            let likelihood = (0..nv).map(|_| random_probability(rng, nb)).collect();
            let loss = [Loss::ZeroOne { eps }, Loss::Squared, Loss::Absolute][i % 3];
            let task = LearningTask::new(packing.clone(), likelihood, None, loss, Score::Indicator { eps })?;
            Ok(vec![prop2_check(&task, &packing, eps)?])
        } else {
            let eps = cfg.epsilon.unwrap_or_else(|| [0.26, 0.34, 0.5, 1.0][rng.random_range(0..4)]);
            let net = covering_partition(&greedy_packing_net(&space, eps)?)?;
            let nb = rng.random_range(1..=16);
            let likelihood = (0..net.len()).map(|_| random_probability(rng, nb)).collect();
            let score = if i % 2 == 0 { Score::Indicator { eps } } else { Score::CMinusT { c: 1.5 } };
            let task = LearningTask::new(net.clone(), likelihood, None, Loss::ZeroOne { eps }, score)?;
            Ok(vec![prop3_check(&task, &net)?])
        }
    })
}

fn theorem_reports(cfg: &ExperimentConfig, target: VerifyTarget, n: usize, seed: u64) -> Res<Vec<BoundReport>> {
    let tol = cfg.tol.unwrap_or(DEFAULT_THEOREM_TOL);
    let check = |cells: usize, spec: ChannelSpec, rng: &mut ChaCha8Rng| -> Res<BoundReport> {
        let disc = unit_cells(cells)?;
        let noise = spec.build(cells, rng)?;
        let mut r = match target {
            VerifyTarget::Thm1 => verify_thm1(&disc, &noise, tol)?,
            _ => verify_thm2(&disc, &noise, tol)?,
        };
        r.instance = format!("{spec}, {}", r.instance);
        Ok(r)
    };
    if cfg.suite.is_none() {
        let cells = cfg.partition_size.ok_or_else(|| usage("partition_size is required"))?;
        let spec: ChannelSpec = cfg
            .channel
            .as_deref()
            .ok_or_else(|| usage("channel is required"))?
            .parse()
            .map_err(CliError::Usage)?;
        return Ok(vec![check(cells, spec, &mut instance_rng(seed, 0))?]);
    }
    // Named channels, eleven depolarizing strengths, then `n` random channels,
    // for each partition size.
    let sizes: Vec<usize> = match cfg.partition_size {
        Some(s) => vec![s],
        None => (2..=4).collect(),
    };
    let mut jobs: Vec<(usize, Option<ChannelSpec>)> = Vec::new();
    for &s in &sizes {
        jobs.push((s, Some(ChannelSpec::Identity)));
        jobs.push((s, Some(ChannelSpec::Dephasing)));
        jobs.extend((0..=10).map(|k| (s, Some(ChannelSpec::Depolarizing { lambda: k as f64 / 10.0 }))));
        jobs.extend((0..n).map(|_| (s, None)));
    }
    suite(jobs.len(), seed, |i, rng| {
        let (cells, spec) = jobs[i];
        let spec = spec.unwrap_or_else(|| ChannelSpec::Random { kraus: rng.random_range(1..=4) });
        Ok(vec![check(cells, spec, rng)?])
    })
}

fn parse_estimator(s: Option<&str>) -> Res<Estimator> {
    match s {
        None | Some("map") => Ok(Estimator::MapCenter),
        Some(other) => match other.strip_prefix("constant:") {
            Some(coords) => coords
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(|point| Estimator::Constant { point })
                .map_err(|_| usage(format!("bad estimator point \"{coords}\""))),
            None => Err(usage(format!("unknown estimator \"{other}\"; expected map or constant:<x>"))),
        },
    }
}

fn simulate(cfg: &ExperimentConfig) -> Res<Vec<BoundReport>> {
    let eps = cfg.epsilon.ok_or_else(|| usage("epsilon is required"))?;
    let task = configured_task(cfg, eps)?;
    let estimator = parse_estimator(cfg.estimator.as_deref())?;
    let samples = cfg.samples.unwrap_or(10_000);
    let seed = cfg.seed.ok_or_else(|| usage("seed is required"))?;
    let partition = task.partition();
    let joint = induced_joint(&task, partition)?;
    let h = conditional_shannon(&joint);
    let uniform = task.prior().is_none() && partition.len() >= 2;
    let minimax = if uniform {
        Some(minimax_bound(h, partition.len(), task.loss.value(eps / 2.0))?)
    } else {
        None
    };
    let batches: Vec<_> = (0..cfg.batches.unwrap_or(1))
        .into_par_iter()
        .map(|b| monte_carlo_risk(&task, partition, &estimator, samples, seed, b as u64))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (b, est) in batches.iter().enumerate() {
        let instance = format!(
            "batch {b}, samples {samples}, loss {}±{}, success {}±{}",
            est.expected_loss, est.loss_half_width, est.success, est.success_half_width
        );
        if let Some(rhs) = minimax {
            out.push(BoundReport::inequality(
                "empirical-minimax",
                est.expected_loss + est.loss_half_width,
                rhs,
                ANALYTIC_TOL,
                instance.clone(),
            ));
        }
        if estimator == Estimator::MapCenter {
            out.push(BoundReport::inequality(
                "empirical-success-guarantee",
                est.success + est.success_half_width,
                (-h).exp2(),
                ANALYTIC_TOL,
                instance,
            ));
        }
    }
    Ok(out)
}

fn exact_learning(cfg: &ExperimentConfig) -> Res<Vec<BoundReport>> {
    let ec = cfg.exact.as_ref().ok_or_else(|| usage("exact is required"))?;
    let concepts = ec
        .concepts
        .iter()
        .map(|c| c.chars().map(|ch| ch == '1').collect())
        .collect();
    let inst = exact_learning_scenario(ec.bits, concepts, ec.queries, ec.p_x.clone(), ec.coherent)?;
    let success = inst.classical_success();
    let label = format!("n={}, m={}, |C|={}, success={success}", inst.n, inst.m, inst.concepts.len());
    let mut out = vec![fano_check(&inst.table, success)?, guarantee_check(&inst.table)?];
    if let Some(rows) = inst.dephased_rows() {
        let na = rows.len();
        let dephased = JointTable::from_prior_and_channel(&vec![1.0 / na as f64; na], &rows)?;
        out.push(BoundReport::equality(
            "dephased-examples",
            map_decoder_success(&dephased).0,
            success,
            ANALYTIC_TOL,
            label.clone(),
        ));
        if let Ok(cq) = inst.cq_state() {
            let sol = solve_hmin(&cq, DEFAULT_SOLVER_TOL)?;
            out.push(BoundReport::inequality(
                "coherent-no-harder",
                sol.primal_value,
                success,
                SDP_TOL,
                label.clone(),
            ));
        }
    }
    for r in &mut out {
        if !r.instance.starts_with("n=") {
            r.instance = format!("{label}; {}", r.instance);
        }
    }
    Ok(out)
}
