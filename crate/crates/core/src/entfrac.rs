//! Entanglement-fraction objects on finite grids and the two theorems that
//! bound the entanglement fraction by conditional entropies.
//!
//! Grid states use unit-normalised cell-indicator vectors `e_i = 1_{cell i}/√h`,
//! so a continuous kernel `K(r, α)` integrated over a cell pair becomes the
//! coefficient `h · K(x_i, x_j)` for cells of width `h`.

use serde::Serialize;

use crate::bounds::BoundReport;
use crate::discretize::{Discretization, Kind};
use crate::entropy::{conditional_von_neumann, von_neumann};
use crate::error::{invalid, mismatch, Result};
use crate::linalg::{vec_norm, ComplexMatrix, C64, ZERO};
use crate::quantum::{apply_channel, maximally_entangled, Channel, DensityOperator};
use crate::sdp::{schmidt_coefficients, solve_hmin, SdpStatus};

/// Duality-gap target for the solves inside the theorem checks.
pub const THEOREM_SOLVER_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SingletMode {
    /// Cells of a covering partition (ε-net).
    Partition,
    /// Balls around the points of an ε-packing.
    Packing,
}

/// Maximally entangled state on `C^n ⊗ C^n` with one basis vector per cell.
pub fn partition_singlet(disc: &Discretization, mode: SingletMode) -> Result<DensityOperator> {
    match mode {
        SingletMode::Partition if !disc.kind().is_net() => {
            return invalid("partition singlet needs a net");
        }
        SingletMode::Packing if !disc.kind().is_packing() => {
            return invalid("packing singlet needs a packing");
        }
        _ => {}
    }
    if disc.is_empty() {
        return invalid("discretization has no centers");
    }
    maximally_entangled(disc.len())
}

/// Uniform decomposition of `[lo, hi]` into `m` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub m: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if m == 0 || !(hi > lo) {
            return invalid("grid needs m ≥ 1 and hi > lo");
        }
        Ok(Self { lo, hi, m })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.m as f64
    }

    /// Midpoint of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }
}

/// Bipartite grid state; `amplitudes[i * m + j]` multiplies `e_i ⊗ e_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub grid: Grid1D,
    pub amplitudes: Vec<C64>,
}

impl GridState {
    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn normalized(&self) -> Result<GridState> {
        let n = self.norm();
        if n == 0.0 {
            return invalid("cannot normalise the zero vector");
        }
        Ok(GridState {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a / n).collect(),
        })
    }

    pub fn distance(&self, other: &GridState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Unnormalised `|Φ_ε⟩ = Σ_ij h·1{|x_i − x_j| ≤ ε} e_i ⊗ e_j`.
pub fn grid_phi_eps(grid: Grid1D, epsilon: f64) -> Result<GridState> {
    if !(epsilon >= 0.0) {
        return invalid("epsilon must be nonnegative");
    }
    let (m, h) = (grid.m, grid.width());
    let tol = 1e-12 * epsilon.max(1.0);
    let mut amplitudes = vec![ZERO; m * m];
    for i in 0..m {
        for j in 0..m {
            if (grid.center(i) - grid.center(j)).abs() <= epsilon + tol {
                amplitudes[i * m + j] = C64::new(h, 0.0);
            }
        }
    }
    Ok(GridState { grid, amplitudes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProjectorKind {
    /// Pairs sharing a nearest net point.
    W2,
    /// Pairs sharing a nearest packing point.
    V2,
}

/// Projector onto the span of `e_i ⊗ e_j` over cell pairs with the same
/// nearest center. It is diagonal in the grid basis and stored as a mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceProjector {
    pub grid: Grid1D,
    pub kind: ProjectorKind,
    /// Nearest-center index of each grid cell.
    pub labels: Vec<usize>,
    mask: Vec<bool>,
}

impl SubspaceProjector {
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.mask.len() {
            return mismatch("vector length does not match the projector");
        }
        Ok(v
            .iter()
            .zip(&self.mask)
            .map(|(&a, &keep)| if keep { a } else { ZERO })
            .collect())
    }

    pub fn rank(&self) -> usize {
        self.mask.iter().filter(|&&k| k).count()
    }

    /// Dense matrix form, for small grids.
    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::diag_real(&self.mask.iter().map(|&k| f64::from(u8::from(k))).collect::<Vec<_>>())
    }
}

fn grid_labels(grid: Grid1D, disc: &Discretization) -> Result<Vec<usize>> {
    if disc.space().dimension() != 1 {
        return invalid("grid projectors need a one-dimensional space");
    }
    let labels: Vec<usize> = (0..grid.m)
        .map(|i| disc.nearest_index(&[grid.center(i)]))
        .collect::<Result<_>>()?;
    let mut seen = vec![false; disc.len()];
    labels.iter().for_each(|&w| seen[w] = true);
    if let Some(w) = seen.iter().position(|&s| !s) {
        return invalid(format!("grid is coarser than the cells: cell {w} contains no grid cell"));
    }
    Ok(labels)
}

pub fn build_projector(grid: Grid1D, disc: &Discretization, kind: ProjectorKind) -> Result<SubspaceProjector> {
    match kind {
        ProjectorKind::W2 if !disc.kind().is_net() => return invalid("W² projector needs a net"),
        ProjectorKind::V2 if !disc.kind().is_packing() => return invalid("V² projector needs a packing"),
        _ => {}
    }
    let labels = grid_labels(grid, disc)?;
    let m = grid.m;
    let mask = (0..m * m).map(|k| labels[k / m] == labels[k % m]).collect();
    Ok(SubspaceProjector {
        grid,
        kind,
        labels,
        mask,
    })
}

/// `|W|^{-1/2} Σ_w |w⟩ ⊗ |w⟩` with `|w⟩` the normalised indicator of cell `w`.
pub fn grid_embed_singlet(grid: Grid1D, disc: &Discretization) -> Result<GridState> {
    let labels = grid_labels(grid, disc)?;
    let m = grid.m;
    let mut sizes = vec![0usize; disc.len()];
    labels.iter().for_each(|&w| sizes[w] += 1);
    let scale = 1.0 / (disc.len() as f64).sqrt();
    let amplitudes = (0..m * m)
        .map(|k| {
            let (a, b) = (labels[k / m], labels[k % m]);
            if a == b {
                C64::new(scale / sizes[a] as f64, 0.0)
            } else {
                ZERO
            }
        })
        .collect();
    Ok(GridState { grid, amplitudes })
}

/// `‖Π|Φ_ε⟩/‖Π|Φ_ε⟩‖ − φ_grid‖` for the covering partition of `disc`.
pub fn grid_identity_deviation(grid: Grid1D, disc: &Discretization) -> Result<f64> {
    let phi = grid_phi_eps(grid, disc.epsilon())?;
    let proj = build_projector(grid, disc, ProjectorKind::W2)?;
    let projected = GridState {
        grid,
        amplitudes: proj.apply(&phi.amplitudes)?,
    }
    .normalized()?;
    Ok(projected.distance(&grid_embed_singlet(grid, disc)?))
}

/// Extends a channel on the span of the orthonormal columns of `basis` to the
/// whole space: `K̃ = V K V†` together with the complement projector.
pub fn embed_channel(small: &Channel, large_dim: usize, basis: &ComplexMatrix) -> Result<Channel> {
    let k = small.in_dim();
    if small.out_dim() != k {
        return invalid("embedded channel must map the subspace to itself");
    }
    if basis.rows() != large_dim || basis.cols() != k || k > large_dim {
        return mismatch(format!(
            "basis is {}x{}, expected {large_dim}x{k}",
            basis.rows(),
            basis.cols()
        ));
    }
    if (&basis.adjoint() * basis).max_abs_diff(&ComplexMatrix::identity(k)) > 1e-10 {
        return invalid("subspace basis is not orthonormal");
    }
    let v_dag = basis.adjoint();
    let mut kraus: Vec<ComplexMatrix> = small
        .kraus()
        .iter()
        .map(|kr| &(basis * kr) * &v_dag)
        .collect();
    let complement = &ComplexMatrix::identity(large_dim) - &(basis * &v_dag);
    if complement.max_abs() > 1e-12 {
        kraus.push(complement);
    }
    Channel::with_tolerance(kraus, large_dim, large_dim, 1e-9)
}

/// `(I ⊗ N)(|φ⟩⟨φ|)` for the singlet on the cells of `disc`.
fn witness_state(disc: &Discretization, noise: &Channel, mode: SingletMode) -> Result<DensityOperator> {
    let phi = partition_singlet(disc, mode)?;
    if noise.in_dim() != disc.len() {
        return mismatch(format!(
            "noise acts on dimension {}, the discretization has {} cells",
            noise.in_dim(),
            disc.len()
        ));
    }
    apply_channel(noise, &phi, 1)
}

fn optimal_singlet_fraction(rho: &DensityOperator) -> Result<f64> {
    let sol = solve_hmin(rho, THEOREM_SOLVER_TOL)?;
    if sol.status != SdpStatus::Optimal {
        return Err(crate::Error::Numerical(format!("solver stopped with gap {:.3e}", sol.gap)));
    }
    Ok(sol.primal_value)
}

/// Entanglement-fraction guarantee at the partition singlet:
/// `log₂ 2^{−Hmin(R|B)_σ} ≥ −H(R|B)_σ` with `σ = (I ⊗ N)(φ)`.
pub fn verify_thm1(disc: &Discretization, noise: &Channel, tol: f64) -> Result<BoundReport> {
    if disc.len() > 8 {
        return invalid("theorem checks support at most 8 cells");
    }
    let sigma = witness_state(disc, noise, SingletMode::Partition)?;
    let q = optimal_singlet_fraction(&sigma)?;
    let h = conditional_von_neumann(&sigma)?;
    Ok(BoundReport::inequality(
        "entanglement-fraction-guarantee",
        q.log2(),
        -h,
        tol,
        format!("|W|={}, d_B={}, kraus={}", disc.len(), noise.out_dim(), noise.kraus().len()),
    ))
}

/// Error after the optimal decoder against the entropy bound at the packing
/// singlet: `1 − q*/|V| ≥ (H(RB)_ρ − 1)/log₂(|V|² − 1)`.
pub fn verify_thm2(disc: &Discretization, noise: &Channel, tol: f64) -> Result<BoundReport> {
    let v = disc.len();
    if v < 2 {
        return invalid("packing needs at least two points");
    }
    if v > 8 {
        return invalid("theorem checks support at most 8 cells");
    }
    let rho = witness_state(disc, noise, SingletMode::Packing)?;
    let q = optimal_singlet_fraction(&rho)?;
    let h = von_neumann(&rho)?;
    Ok(BoundReport::inequality(
        "entanglement-fraction-error",
        1.0 - q / v as f64,
        (h - 1.0) / ((v * v - 1) as f64).log2(),
        tol,
        format!("|V|={v}, d_B={}, kraus={}", noise.out_dim(), noise.kraus().len()),
    ))
}

/// `(Σ of the k largest Schmidt coefficients)² / k`
pub fn singlet_overlap_qk(psi: &DensityOperator, k: usize) -> Result<f64> {
    let (dr, da) = psi.bipartite_dims()?;
    if k == 0 || k > dr.min(da) {
        return invalid(format!("k = {k} must lie in 1..={}", dr.min(da)));
    }
    let s: f64 = schmidt_coefficients(psi)?.iter().take(k).sum();
    Ok(s * s / k as f64)
}

/// Discretization whose centers are the given points, flagged as both a
/// packing and a net; convenient for the theorem suites, which only use the
/// number of cells.
pub fn abstract_cells(n: usize) -> Result<Discretization> {
    if n == 0 {
        return invalid("need at least one cell");
    }
    let points: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let space = crate::discretize::MetricSpace::new(
        points.clone(),
        crate::discretize::Metric::AbsoluteDifference,
        vec![(0.0, (n - 1) as f64)],
    )?;
    Discretization::new(space, points, 1.0, Kind::Both)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{covering_partition, greedy_packing_net, MetricSpace};
    use crate::quantum::{bell, depolarizing, identity_channel};
    use crate::random;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_space() -> MetricSpace {
        MetricSpace::grid_1d(0.0, 1.0, 0.05).unwrap()
    }

    fn halves(eps: f64) -> Discretization {
        let d = Discretization::new(unit_space(), vec![vec![0.25], vec![0.75]], eps, Kind::Net).unwrap();
        covering_partition(&d).unwrap()
    }

    #[test]
    fn partition_singlet_examples() {
        let two = partition_singlet(&abstract_cells(2).unwrap(), SingletMode::Partition).unwrap();
        assert!(two.matrix().max_abs_diff(bell().matrix()) < 1e-15);
        let one = partition_singlet(&abstract_cells(1).unwrap(), SingletMode::Partition).unwrap();
        assert_eq!(one.dims(), &[1, 1]);
        let three = partition_singlet(&abstract_cells(3).unwrap(), SingletMode::Packing).unwrap();
        let marg = three.partial_trace(&[0]).unwrap();
        assert!((von_neumann(&marg).unwrap() - 3f64.log2()).abs() < 1e-9);
        let packing_only = Discretization::new(unit_space(), vec![vec![0.0]], 0.1, Kind::Packing).unwrap();
        assert!(partition_singlet(&packing_only, SingletMode::Partition).is_err());
    }

    #[test]
    fn grid_identity_holds_when_cells_fit_in_epsilon() {
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let dev = grid_identity_deviation(grid, &halves(0.5)).unwrap();
        assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn grid_identity_deviation_with_wide_cells() {
        // Cells of diameter 0.5 with ε = 0.25: only the near-diagonal band of
        // each cell block survives, so the projected state is far from the
        // uniform block state. Independent evaluation of the two overlaps:
        // within a block of n cells the band holds Σ_i #{j : |i − j| ≤ n/2}
        // entries.
        let grid = Grid1D::new(0.0, 1.0, 200).unwrap();
        let dev = grid_identity_deviation(grid, &halves(0.25)).unwrap();
        let n = 100i64;
        let band: i64 = (0..n).map(|i| (0..n).filter(|j| (i - j).abs() * 2 <= n).count() as i64).sum();
        let cos = band as f64 / ((band as f64).sqrt() * n as f64);
        let expect = (2.0 - 2.0 * cos).sqrt();
        assert!((dev - expect).abs() < 1e-9, "{dev} vs {expect}");
        assert!(dev > 0.5);
    }

    #[test]
    fn single_cell_projector_preserves_phi() {
        let grid = Grid1D::new(0.0, 1.0, 20).unwrap();
        let one = covering_partition(&Discretization::new(unit_space(), vec![vec![0.5]], 1.5, Kind::Net).unwrap()).unwrap();
        let phi = grid_phi_eps(grid, 1.5).unwrap();
        assert!(phi.amplitudes.iter().all(|a| a.re > 0.0));
        let proj = build_projector(grid, &one, ProjectorKind::W2).unwrap();
        assert_eq!(proj.apply(&phi.amplitudes).unwrap(), phi.amplitudes);
    }

    #[test]
    fn projector_is_idempotent() {
        let grid = Grid1D::new(0.0, 1.0, 30).unwrap();
        let proj = build_projector(grid, &halves(0.25), ProjectorKind::W2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random::random_vector(&mut rng, 900);
        let once = proj.apply(&v).unwrap();
        let twice = proj.apply(&once).unwrap();
        let diff: f64 = once.iter().zip(&twice).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-9);
        assert_eq!(proj.rank(), 2 * 15 * 15);
        let small = build_projector(Grid1D::new(0.0, 1.0, 4).unwrap(), &halves(0.25), ProjectorKind::W2).unwrap();
        let m = small.matrix();
        assert!((&m * &m).max_abs_diff(&m) < 1e-15 && m.is_hermitian(0.0));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid = Grid1D::new(0.0, 1.0, 1).unwrap();
        assert!(build_projector(grid, &halves(0.25), ProjectorKind::W2).is_err());
    }

    #[test]
    fn embedded_identity_and_depolarizing() {
        let basis = ComplexMatrix::from_fn(4, 2, |i, j| if i == j { C64::new(1.0, 0.0) } else { ZERO });
        let id = embed_channel(&identity_channel(2), 4, &basis).unwrap();
        let x = ComplexMatrix::unit(4, 4, 0, 1);
        assert!(id.apply_matrix(&x).unwrap().max_abs_diff(&x) < 1e-15);

        let basis3 = ComplexMatrix::from_fn(3, 2, |i, j| if i == j + 1 { C64::new(1.0, 0.0) } else { ZERO });
        let dep = embed_channel(&depolarizing(2, 1.0).unwrap(), 3, &basis3).unwrap();
        let out = dep.apply_matrix(&ComplexMatrix::unit(3, 3, 1, 1)).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::diag_real(&[0.0, 0.5, 0.5])) < 1e-15);

        let skew = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(embed_channel(&identity_channel(2), 3, &skew).is_err());
    }

    #[test]
    fn embedding_commutes_with_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random::random_channel(&mut rng, 2, 2, 2);
        let b = random::random_channel(&mut rng, 2, 2, 3);
        let u = random::random_unitary(&mut rng, 4);
        let basis = ComplexMatrix::from_fn(4, 2, |i, j| u[(i, j)]);
        let lhs = embed_channel(&a.compose_after(&b).unwrap(), 4, &basis).unwrap();
        let rhs = embed_channel(&a, 4, &basis).unwrap().compose_after(&embed_channel(&b, 4, &basis).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let x = ComplexMatrix::outer(&basis.column(i), &basis.column(j));
                assert!(lhs.apply_matrix(&x).unwrap().max_abs_diff(&rhs.apply_matrix(&x).unwrap()) < 1e-9);
            }
        }
    }

    #[test]
    fn thm1_examples() {
        let two = abstract_cells(2).unwrap();
        let r = verify_thm1(&two, &identity_channel(2), 1e-6).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-6 && (r.rhs - 1.0).abs() < 1e-9 && r.pass);
        let r = verify_thm1(&two, &depolarizing(2, 1.0).unwrap(), 1e-6).unwrap();
        assert!((r.lhs + 1.0).abs() < 1e-6 && (r.rhs + 1.0).abs() < 1e-9 && r.pass);
        let r = verify_thm1(&two, &depolarizing(2, 0.5).unwrap(), 1e-6).unwrap();
        assert!(r.pass && r.slack > 1e-3);
    }

    #[test]
    fn thm2_examples() {
        let two = abstract_cells(2).unwrap();
        let r = verify_thm2(&two, &identity_channel(2), 1e-6).unwrap();
        assert!(r.lhs.abs() < 1e-6 && (r.rhs + 1.0 / 3f64.log2()).abs() < 1e-9 && r.pass);
        let r = verify_thm2(&two, &depolarizing(2, 1.0).unwrap(), 1e-6).unwrap();
        assert!((r.lhs - 0.75).abs() < 1e-6 && (r.rhs - 1.0 / 3f64.log2()).abs() < 1e-9 && r.pass);
        assert!((r.rhs - 0.631).abs() < 1e-3);
        assert!(verify_thm2(&two, &depolarizing(2, 0.5).unwrap(), 1e-6).unwrap().pass);
        assert!(verify_thm2(&abstract_cells(1).unwrap(), &identity_channel(1), 1e-6).is_err());
    }

    #[test]
    fn qk_examples() {
        assert!((singlet_overlap_qk(&bell(), 2).unwrap() - 1.0).abs() < 1e-12);
        let prod = DensityOperator::pure(
            &[C64::new(1.0, 0.0), ZERO, ZERO, ZERO],
            vec![2, 2],
        )
        .unwrap();
        assert!((singlet_overlap_qk(&prod, 2).unwrap() - 0.5).abs() < 1e-12);
        let ghz = maximally_entangled(3).unwrap();
        assert!((singlet_overlap_qk(&ghz, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(singlet_overlap_qk(&ghz, 4).is_err());
    }

    #[test]
    fn greedy_cells_feed_the_theorems() {
        let net = covering_partition(&greedy_packing_net(&unit_space(), 0.4).unwrap()).unwrap();
        assert_eq!(net.len(), 3);
        assert!(verify_thm1(&net, &depolarizing(3, 0.3).unwrap(), 1e-6).unwrap().pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn k_qk_is_nondecreasing(seed in any::<u64>(), dr in 1usize..=4, da in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random::random_pure(&mut rng, &[dr, da]);
            let mut prev = 0.0;
            for k in 1..=dr.min(da) {
                let v = k as f64 * singlet_overlap_qk(&psi, k).unwrap();
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }

        #[test]
        fn embedded_random_channels_are_cptp(seed in any::<u64>(), k in 1usize..=3, extra in 0usize..=2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = random::random_channel(&mut rng, k, k, 2);
            let u = random::random_unitary(&mut rng, k + extra);
            let basis = ComplexMatrix::from_fn(k + extra, k, |i, j| u[(i, j)]);
            let big = embed_channel(&ch, k + extra, &basis).unwrap();
            prop_assert!(big.tp_defect() < 1e-9);
        }
    }
}
