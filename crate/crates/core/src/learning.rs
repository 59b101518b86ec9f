//! Cell-constant learning tasks, MAP decoding, exhaustive minimax risk,
//! Monte Carlo risk estimates and the exact-learning scenario.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{learning_guarantee_bound, minimax_bound, BoundReport, ANALYTIC_TOL};
use crate::discretize::{Discretization, GEOM_TOL};
use crate::entropy::{classical_hmin_success, conditional_shannon, JointTable};
use crate::error::{invalid, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::quantum::DensityOperator;

/// Floor applied to scores before taking logarithms.
pub const SCORE_FLOOR: f64 = 1e-12;
/// Largest number of decoders enumerated by the exhaustive routines.
pub const MAX_ENUMERATION: usize = 46_656;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Loss {
    Squared,
    Absolute,
    /// `1{t ≥ eps}`
    ZeroOne { eps: f64 },
}

impl Loss {
    pub fn value(self, t: f64) -> f64 {
        match self {
            Loss::Squared => t * t,
            Loss::Absolute => t,
            Loss::ZeroOne { eps } => {
                if t >= eps - GEOM_TOL * eps.max(1.0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Score {
    /// `1{t ≤ eps}`
    Indicator { eps: f64 },
    /// `c − t`
    CMinusT { c: f64 },
}

impl Score {
    pub fn value(self, t: f64) -> f64 {
        match self {
            Score::Indicator { eps } => {
                if t <= eps + GEOM_TOL * eps.max(1.0) {
                    1.0
                } else {
                    0.0
                }
            }
            Score::CMinusT { c } => c - t,
        }
    }

    /// `max(s(t), SCORE_FLOOR)`, the strictly positive version used in logs
    /// and expectations.
    pub fn floored(self, t: f64) -> f64 {
        self.value(t).max(SCORE_FLOOR)
    }
}

fn check_monotone(f: impl Fn(f64) -> f64, upto: f64, increasing: bool) -> bool {
    let probes = 200;
    let mut prev = f(0.0);
    (1..=probes).all(|k| {
        let v = f(upto * k as f64 / probes as f64);
        let ok = if increasing { v >= prev - 1e-15 } else { v <= prev + 1e-15 };
        prev = v;
        ok
    })
}

/// Observation model that is constant on the cells of a covering partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningTask {
    partition: Discretization,
    likelihood: Vec<Vec<f64>>,
    /// Prior over the centers of the discretization handed to
    /// [`induced_joint`]; uniform when absent.
    prior: Option<Vec<f64>>,
    pub loss: Loss,
    pub score: Score,
}

impl LearningTask {
    /// `likelihood[w][b] = p(b | cell w)` for each cell of `partition`.
    pub fn new(
        partition: Discretization,
        likelihood: Vec<Vec<f64>>,
        prior: Option<Vec<f64>>,
        loss: Loss,
        score: Score,
    ) -> Result<Self> {
        if partition.cells().is_none() {
            return invalid("task partition has no cells; run covering_partition first");
        }
        if likelihood.len() != partition.len() {
            return invalid(format!(
                "likelihood has {} rows for {} cells",
                likelihood.len(),
                partition.len()
            ));
        }
        let nb = likelihood[0].len();
        if nb == 0 {
            return invalid("observation alphabet is empty");
        }
        for (w, row) in likelihood.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if row.len() != nb || row.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-12 {
                return invalid(format!("likelihood row {w} is not a distribution over {nb} outcomes"));
            }
        }
        if let Some(p) = &prior {
            let s: f64 = p.iter().sum();
            if p.iter().any(|&x| x < 0.0) || (s - 1.0).abs() > 1e-12 {
                return invalid("prior is not a probability vector");
            }
        }
        let span = partition.space().diameter().max(1.0);
        if !check_monotone(|t| loss.value(t), span, true) {
            return invalid("loss must be non-decreasing");
        }
        if !check_monotone(|t| score.value(t), span, false) {
            return invalid("score must be non-increasing");
        }
        if let Score::CMinusT { c } = score {
            if c <= 0.0 {
                return invalid("score c − t needs c > 0");
            }
        }
        Ok(Self {
            partition,
            likelihood,
            prior,
            loss,
            score,
        })
    }

    pub fn partition(&self) -> &Discretization {
        &self.partition
    }

    pub fn likelihood(&self) -> &[Vec<f64>] {
        &self.likelihood
    }

    pub fn prior(&self) -> Option<&[f64]> {
        self.prior.as_deref()
    }

    pub fn observations(&self) -> usize {
        self.likelihood[0].len()
    }

    pub fn with_prior(mut self, prior: Option<Vec<f64>>) -> Self {
        self.prior = prior;
        self
    }

    /// Likelihood row of the task cell containing a candidate point.
    fn row_for(&self, point: &[f64]) -> Option<&[f64]> {
        let space = self.partition.space();
        let idx = space
            .points()
            .iter()
            .position(|p| space.distance(p, point) <= GEOM_TOL)?;
        let cell = self.partition.cells()?[idx];
        Some(&self.likelihood[cell])
    }

    fn prior_for(&self, disc: &Discretization) -> Result<Vec<f64>> {
        match &self.prior {
            Some(p) if p.len() == disc.len() => Ok(p.clone()),
            Some(p) => invalid(format!(
                "prior has {} entries but the discretization has {} centers",
                p.len(),
                disc.len()
            )),
            None => Ok(vec![1.0 / disc.len() as f64; disc.len()]),
        }
    }

    fn rows_for(&self, disc: &Discretization) -> Result<Vec<Vec<f64>>> {
        if disc.space() != self.partition.space() {
            return invalid("discretization lives on a different space than the task");
        }
        disc.centers()
            .iter()
            .enumerate()
            .map(|(w, c)| {
                self.row_for(c).map(<[f64]>::to_vec).ok_or_else(|| {
                    crate::Error::InvalidInput(format!("center {w} = {c:?} is not a candidate point"))
                })
            })
            .collect()
    }
}

/// `p(w, b) = prior(w) · p(b | α_w)` over the centers of `disc`.
pub fn induced_joint(task: &LearningTask, disc: &Discretization) -> Result<JointTable> {
    let prior = task.prior_for(disc)?;
    let rows = task.rows_for(disc)?;
    JointTable::from_prior_and_channel(&prior, &rows)
}

/// MAP decoder `b ↦ argmax_a p(a, b)` (lowest index on ties) and its success.
pub fn map_decoder_success(t: &JointTable) -> (f64, Vec<usize>) {
    let mut success = 0.0;
    let decoder = (0..t.cols())
        .map(|b| {
            let mut best = 0;
            for a in 1..t.rows() {
                if t.get(a, b) > t.get(best, b) {
                    best = a;
                }
            }
            success += t.get(best, b);
            best
        })
        .collect();
    (success, decoder)
}

/// Calls `visit` with every map `{0..len} → {0..base}`.
fn odometer(base: usize, len: usize, mut visit: impl FnMut(&[usize])) {
    let mut digits = vec![0usize; len];
    visit(&digits);
    loop {
        let mut pos = 0;
        while pos < len {
            digits[pos] += 1;
            if digits[pos] < base {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == len {
            return;
        }
        visit(&digits);
    }
}

fn enumeration_size(base: usize, len: usize) -> Option<usize> {
    (0..len).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Best success over all `|A|^|B|` deterministic decoders.
pub fn exhaustive_map_success(t: &JointTable) -> Result<f64> {
    let (na, nb) = (t.rows(), t.cols());
    match enumeration_size(na, nb) {
        Some(n) if n <= MAX_ENUMERATION => {}
        _ => return invalid(format!("{na}^{nb} decoders exceed the enumeration limit")),
    }
    let mut best: f64 = 0.0;
    odometer(na, nb, |dec| {
        let s: f64 = dec.iter().enumerate().map(|(b, &a)| t.get(a, b)).sum();
        best = best.max(s);
    });
    Ok(best)
}

/// Exhaustive minimax risk over estimators `B → V` on the centers of `disc`,
/// `min_dec max_v Σ_b p(b | α_v) ℓ(d(α_dec(b), α_v))`, and an optimal decoder.
pub fn exhaustive_minimax_risk(task: &LearningTask, disc: &Discretization) -> Result<(f64, Vec<usize>)> {
    let rows = task.rows_for(disc)?;
    let (nv, nb) = (disc.len(), task.observations());
    match enumeration_size(nv, nb) {
        Some(n) if n <= 4096 => {}
        _ => return invalid(format!("{nv}^{nb} estimators exceed 4096")),
    }
    let space = disc.space();
    let centers = disc.centers();
    // cost[v][u][b] = p(b|v) ℓ(d(α_u, α_v))
    let loss: Vec<Vec<f64>> = (0..nv)
        .map(|v| (0..nv).map(|u| task.loss.value(space.distance(&centers[u], &centers[v]))).collect())
        .collect();
    let mut risk = vec![0.0; nv];
    let mut best = (f64::INFINITY, vec![0; nb]);
    odometer(nv, nb, |dec| {
        for (v, r) in risk.iter_mut().enumerate() {
            *r = dec.iter().enumerate().map(|(b, &u)| rows[v][b] * loss[v][u]).sum();
        }
        let worst = risk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if worst < best.0 {
            best = (worst, dec.to_vec());
        }
    });
    Ok(best)
}

/// Minimax lower bound on a packing of radius `2ε`: the exhaustive minimax
/// risk must dominate `ℓ(ε)(H(V|B) − 1)/log₂|V|` with `V` uniform.
pub fn prop2_check(task: &LearningTask, packing: &Discretization, eps: f64) -> Result<BoundReport> {
    if !packing.kind().is_packing() {
        return invalid("prop2 needs a packing");
    }
    if (packing.epsilon() - 2.0 * eps).abs() > GEOM_TOL * eps.max(1.0) {
        return invalid(format!(
            "packing radius {} is not 2ε = {}",
            packing.epsilon(),
            2.0 * eps
        ));
    }
    let uniform = task.clone().with_prior(None);
    let joint = induced_joint(&uniform, packing)?;
    let hvb = conditional_shannon(&joint);
    let rhs = minimax_bound(hvb, packing.len(), task.loss.value(eps))?;
    let (risk, _) = exhaustive_minimax_risk(task, packing)?;
    Ok(BoundReport::inequality(
        "minimax-lower-bound",
        risk,
        rhs,
        ANALYTIC_TOL,
        format!("|V|={}, |B|={}, eps={eps}, H(V|B)={hvb:.6}", packing.len(), task.observations()),
    ))
}

/// Per-cell expected score `E[s(d(α_Ŵ(B), α_w)) | w]` of the MAP decoder.
pub fn cell_scores(task: &LearningTask, net: &Discretization) -> Result<Vec<f64>> {
    let joint = induced_joint(task, net)?;
    let rows = task.rows_for(net)?;
    let (_, decoder) = map_decoder_success(&joint);
    let space = net.space();
    let centers = net.centers();
    Ok((0..net.len())
        .map(|w| {
            decoder
                .iter()
                .enumerate()
                .map(|(b, &u)| rows[w][b] * task.score.floored(space.distance(&centers[u], &centers[w])))
                .sum()
        })
        .collect())
}

/// Learning guarantee on an ε-net: the best cell's expected score dominates
/// `s(ε) 2^{−H(W|B)}`, reported in log₂ units.
pub fn prop3_check(task: &LearningTask, net: &Discretization) -> Result<BoundReport> {
    if !net.kind().is_net() {
        return invalid("prop3 needs a net");
    }
    let joint = induced_joint(task, net)?;
    let hwb = conditional_shannon(&joint);
    let s_eps = task.score.floored(net.epsilon());
    let rhs = learning_guarantee_bound(hwb, s_eps)?;
    let best = cell_scores(task, net)?
        .into_iter()
        .fold(SCORE_FLOOR, f64::max);
    Ok(BoundReport::inequality(
        "learning-guarantee",
        best.log2(),
        rhs,
        ANALYTIC_TOL,
        format!("|W|={}, |B|={}, eps={}, H(W|B)={hwb:.6}", net.len(), task.observations(), net.epsilon()),
    ))
}

/// Rule mapping an observation index to a parameter estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Estimator {
    /// Center of the MAP cell for the induced joint.
    MapCenter,
    /// Always the same point.
    Constant { point: Vec<f64> },
    /// One point per observation.
    Lookup { points: Vec<Vec<f64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub samples: usize,
    pub expected_loss: f64,
    pub loss_half_width: f64,
    pub success: f64,
    pub success_half_width: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Samples `w ~ prior`, `α = α_w`, `b ~ p(·|α)`, and averages `ℓ(d(α̂(b), α))`
/// and `1{d ≤ ε}` with `ε` taken from `disc`. Stream `stream` of the seeded
/// generator is used, so independent runs can share a seed.
pub fn monte_carlo_risk(
    task: &LearningTask,
    disc: &Discretization,
    estimator: &Estimator,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let prior = task.prior_for(disc)?;
    let rows = task.rows_for(disc)?;
    let nb = task.observations();
    let estimates: Vec<Vec<f64>> = match estimator {
        Estimator::MapCenter => {
            let joint = JointTable::from_prior_and_channel(&prior, &rows)?;
            let (_, dec) = map_decoder_success(&joint);
            dec.iter().map(|&w| disc.centers()[w].clone()).collect()
        }
        Estimator::Constant { point } => vec![point.clone(); nb],
        Estimator::Lookup { points } => {
            if points.len() != nb {
                return invalid(format!("lookup estimator has {} entries for {nb} observations", points.len()));
            }
            points.clone()
        }
    };
    for p in &estimates {
        if p.len() != disc.space().dimension() {
            return invalid("estimate has the wrong number of coordinates");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let draw_w = WeightedIndex::new(&prior).map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
    let draw_b: Vec<WeightedIndex<f64>> = rows
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| crate::Error::InvalidInput(e.to_string())))
        .collect::<Result<_>>()?;
    let space = disc.space();
    let eps = disc.epsilon();
    let tol = GEOM_TOL * eps.max(1.0);
    let (mut sum_l, mut sum_l2, mut hits) = (0.0, 0.0, 0usize);
    for _ in 0..samples {
        let w = draw_w.sample(&mut rng);
        let b = draw_b[w].sample(&mut rng);
        let d = space.distance(&estimates[b], &disc.centers()[w]);
        let l = task.loss.value(d);
        sum_l += l;
        sum_l2 += l * l;
        if d <= eps + tol {
            hits += 1;
        }
    }
    let n = samples as f64;
    let mean = sum_l / n;
    let var = if samples > 1 {
        ((sum_l2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let success = hits as f64 / n;
    Ok(MonteCarloEstimate {
        samples,
        expected_loss: mean,
        loss_half_width: Z95 * (var / n).sqrt(),
        success,
        success_half_width: Z95 * (success * (1.0 - success) / n).sqrt(),
    })
}

/// Concept learning from labelled examples `(x, c(x))` with `x ~ p_X`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactLearningInstance {
    pub n: usize,
    pub m: usize,
    /// `concepts[a][x] = c_a(x)`
    pub concepts: Vec<Vec<bool>>,
    pub p_x: Vec<f64>,
    /// Rows index concepts; columns encode `(x_1, y_1, …, x_m, y_m)`.
    pub table: JointTable,
    /// `|ψ^a⟩^{⊗m}` with `|ψ^a⟩ = Σ_x √p_X(x) |x, c_a(x)⟩`, when requested.
    pub states: Option<Vec<Vec<C64>>>,
}

/// Builds the classical table and optionally the coherent example states.
/// Concepts are equally likely.
pub fn exact_learning_scenario(
    n: usize,
    concepts: Vec<Vec<bool>>,
    m: usize,
    p_x: Option<Vec<f64>>,
    coherent: bool,
) -> Result<ExactLearningInstance> {
    if n == 0 || n > 3 {
        return invalid(format!("input bits n = {n} must be between 1 and 3"));
    }
    if concepts.is_empty() || concepts.len() > 16 {
        return invalid(format!("concept class size {} must be between 1 and 16", concepts.len()));
    }
    if m == 0 || m > 4 {
        return invalid(format!("query count m = {m} must be between 1 and 4"));
    }
    let nx = 1usize << n;
    if concepts.iter().any(|c| c.len() != nx) {
        return invalid(format!("every concept needs a truth table of length {nx}"));
    }
    let p_x = p_x.unwrap_or_else(|| vec![1.0 / nx as f64; nx]);
    let total: f64 = p_x.iter().sum();
    if p_x.len() != nx || p_x.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
        return invalid("p_X must be a probability vector over the inputs");
    }
    let single = 2 * nx;
    let nb = single.pow(m as u32);
    let na = concepts.len();

    // One-query amplitudes √p_X(x) on |x, c(x)⟩, then the m-fold tensor power.
    let one: Vec<Vec<f64>> = concepts
        .iter()
        .map(|c| {
            let mut v = vec![0.0; single];
            for x in 0..nx {
                v[2 * x + usize::from(c[x])] = p_x[x].sqrt();
            }
            v
        })
        .collect();
    let powers: Vec<Vec<f64>> = one
        .iter()
        .map(|v| {
            let mut acc = vec![1.0];
            for _ in 0..m {
                acc = acc.iter().flat_map(|&a| v.iter().map(move |&x| a * x)).collect();
            }
            acc
        })
        .collect();
    let weights: Vec<f64> = powers
        .iter()
        .flat_map(|amps| amps.iter().map(|a| a * a / na as f64))
        .collect();
    let table = JointTable::from_weights(na, nb, weights)?;
    let states = coherent.then(|| {
        powers
            .iter()
            .map(|amps| amps.iter().map(|&a| C64::new(a, 0.0)).collect())
            .collect()
    });
    Ok(ExactLearningInstance {
        n,
        m,
        concepts,
        p_x,
        table,
        states,
    })
}

impl ExactLearningInstance {
    pub fn classical_success(&self) -> f64 {
        map_decoder_success(&self.table).0
    }

    pub fn hmin(&self) -> Result<f64> {
        Ok(classical_hmin_success(&self.table)?.hmin)
    }

    /// Diagonals of the dephased example states, one row per concept.
    pub fn dephased_rows(&self) -> Option<Vec<Vec<f64>>> {
        self.states
            .as_ref()
            .map(|s| s.iter().map(|amps| amps.iter().map(|a| a.norm_sqr()).collect()).collect())
    }

    /// `Σ_a |a⟩⟨a|/|C| ⊗ |ψ^a⟩⟨ψ^a|`, for instances small enough to hand to
    /// the SDP solver.
    pub fn cq_state(&self) -> Result<DensityOperator> {
        let states = match &self.states {
            Some(s) => s,
            None => return invalid("instance was built without coherent states"),
        };
        let (na, nb) = (self.concepts.len(), self.table.cols());
        if na * nb > 64 {
            return invalid("cq state too large for the solver");
        }
        let mut m = ComplexMatrix::zeros(na * nb, na * nb);
        for (a, psi) in states.iter().enumerate() {
            for i in 0..nb {
                for j in 0..nb {
                    m[(a * nb + i, a * nb + j)] = psi[i] * psi[j].conj() / na as f64;
                }
            }
        }
        DensityOperator::new(m, vec![na, nb])
    }
}
