//! Shannon, von Neumann and min-entropies, in bits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quantum::DensityOperator;

/// Eigenvalues at or above this negative threshold are clipped to zero before
/// taking logarithms.
pub const EIGEN_CLIP: f64 = -1e-10;

/// Joint distribution `p(a, b)` stored row-major with `a` indexing rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl JointTable {
    /// Validates nonnegativity and a total of one within 1e-12.
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid("table dimensions must be positive");
        }
        if p.len() != rows * cols {
            return invalid(format!(
                "table has {} entries, expected {}",
                p.len(),
                rows * cols
            ));
        }
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return invalid("table entries must be finite and nonnegative");
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("table sums to {total}, not 1"));
        }
        Ok(Self { rows, cols, p })
    }

    /// Normalises nonnegative weights into a table.
    pub fn from_weights(rows: usize, cols: usize, w: Vec<f64>) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return invalid("table has zero total mass");
        }
        Self::new(rows, cols, w.into_iter().map(|x| x / total).collect())
    }

    /// Table from a nested `p[a][b]` layout.
    pub fn from_nested(p: &[Vec<f64>]) -> Result<Self> {
        let rows = p.len();
        let cols = p.first().map_or(0, Vec::len);
        if p.iter().any(|r| r.len() != cols) {
            return invalid("table rows differ in length");
        }
        Self::new(rows, cols, p.concat())
    }

    /// `p(a, b) = prior(a) · channel[a][b]`
    pub fn from_prior_and_channel(prior: &[f64], channel: &[Vec<f64>]) -> Result<Self> {
        if prior.len() != channel.len() {
            return invalid("prior and channel disagree on the number of inputs");
        }
        for (a, row) in channel.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return invalid(format!("likelihood row {a} sums to {s}"));
            }
        }
        let rows: Vec<Vec<f64>> = prior
            .iter()
            .zip(channel)
            .map(|(&pa, row)| row.iter().map(|&q| pa * q).collect())
            .collect();
        Self::from_nested(&rows)
    }

    /// Binary symmetric channel with crossover `q` under a uniform prior.
    pub fn binary_symmetric(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return invalid(format!("crossover {q} outside [0, 1]"));
        }
        Self::new(2, 2, vec![(1.0 - q) / 2.0, q / 2.0, q / 2.0, (1.0 - q) / 2.0])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.cols + b]
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.p.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|b| (0..self.rows).map(|a| self.get(a, b)).sum())
            .collect()
    }
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon entropy of a probability vector.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().map(|&x| plogp(x)).sum()
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("probability {p} outside [0, 1]"));
    }
    Ok(plogp(p) + plogp(1.0 - p))
}

/// `H(A|B) = H(AB) − H(B)`
pub fn conditional_shannon(t: &JointTable) -> f64 {
    (shannon(&t.p) - shannon(&t.col_marginal())).max(0.0)
}

/// Optimal guessing probability and classical min-entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HminSuccess {
    pub success: f64,
    pub hmin: f64,
}

/// `Σ_b max_a p(a, b)` and its negative logarithm.
pub fn classical_hmin_success(t: &JointTable) -> Result<HminSuccess> {
    let success: f64 = (0..t.cols)
        .map(|b| (0..t.rows).map(|a| t.get(a, b)).fold(0.0, f64::max))
        .sum();
    if success <= 0.0 {
        return invalid("table has no mass");
    }
    Ok(HminSuccess {
        success,
        hmin: -success.log2(),
    })
}

/// Entropy of a spectrum after clipping tiny negative eigenvalues.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < EIGEN_CLIP {
            return invalid(format!("negative eigenvalue {l:.3e}"));
        }
        s += plogp(l.max(0.0));
    }
    Ok(s)
}

pub fn von_neumann(rho: &DensityOperator) -> Result<f64> {
    spectrum_entropy(&rho.eigenvalues())
}

/// `H(R|B) = S(RB) − S(B)` for a bipartite state; may be negative.
pub fn conditional_von_neumann(rho: &DensityOperator) -> Result<f64> {
    rho.bipartite_dims()?;
    let b = rho.partial_trace(&[1])?;
    Ok(von_neumann(rho)? - von_neumann(&b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bell, diagonal_embedding};
    use crate::random;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h2_oracle(p: f64) -> f64 {
        // Natural-log evaluation, converted once.
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) / std::f64::consts::LN_2
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.25).unwrap() - h2_oracle(0.25)).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.811_278_124_459_132_9).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn conditional_shannon_examples() {
        let corr = JointTable::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(conditional_shannon(&corr), 0.0);
        let indep = JointTable::new(2, 2, vec![0.25; 4]).unwrap();
        assert!((conditional_shannon(&indep) - 1.0).abs() < 1e-15);
        let bsc = JointTable::binary_symmetric(0.25).unwrap();
        assert!((conditional_shannon(&bsc) - h2_oracle(0.25)).abs() < 1e-15);
    }

    #[test]
    fn classical_hmin_examples() {
        let corr = JointTable::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = classical_hmin_success(&corr).unwrap();
        assert_eq!((r.success, r.hmin), (1.0, 0.0));
        let indep = JointTable::new(2, 2, vec![0.25; 4]).unwrap();
        let r = classical_hmin_success(&indep).unwrap();
        assert_eq!((r.success, r.hmin), (0.5, 1.0));
        let r = classical_hmin_success(&JointTable::binary_symmetric(0.25).unwrap()).unwrap();
        assert!((r.success - 0.75).abs() < 1e-15);
        assert!((r.hmin - (4.0f64 / 3.0).log2()).abs() < 1e-15);
    }

    #[test]
    fn table_validation() {
        assert!(JointTable::new(2, 2, vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(JointTable::new(2, 2, vec![0.5, 0.5, 0.1, 0.1]).is_err());
        assert!(JointTable::new(2, 2, vec![1.0]).is_err());
        assert!(JointTable::from_weights(1, 2, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn von_neumann_examples() {
        let half = DensityOperator::maximally_mixed(vec![2]).unwrap();
        assert!((von_neumann(&half).unwrap() - 1.0).abs() < 1e-12);
        assert!((conditional_von_neumann(&bell()).unwrap() + 1.0).abs() < 1e-12);
        let quarter = DensityOperator::maximally_mixed(vec![2, 2]).unwrap();
        assert!((von_neumann(&quarter).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_vn_requires_bipartite() {
        let half = DensityOperator::maximally_mixed(vec![2]).unwrap();
        assert!(conditional_von_neumann(&half).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn hmin_below_shannon_and_guarantee(seed in any::<u64>(), ra in 1usize..=6, cb in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random::random_table(&mut rng, ra, cb);
            let h = conditional_shannon(&t);
            let r = classical_hmin_success(&t).unwrap();
            prop_assert!(r.hmin <= h + 1e-10);
            prop_assert!(r.success >= (-h).exp2() - 1e-10);
            prop_assert!(r.success <= 1.0 + 1e-12);
            prop_assert!(h <= (ra as f64).log2() + 1e-10);
        }

        #[test]
        fn diagonal_embedding_entropy_matches_table(seed in any::<u64>(), ra in 1usize..=4, cb in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random::random_table(&mut rng, ra, cb);
            let rho = diagonal_embedding(&t);
            let q = conditional_von_neumann(&rho).unwrap();
            prop_assert!((q - conditional_shannon(&t)).abs() < 1e-9);
        }

        #[test]
        fn entropy_is_unitarily_invariant(seed in any::<u64>(), d in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random::random_density(&mut rng, &[d], d);
            let u = random::random_unitary(&mut rng, d);
            let rotated = rho.conjugate(&u).unwrap();
            prop_assert!((von_neumann(&rho).unwrap() - von_neumann(&rotated).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn binary_entropy_symmetric(p in 0.0f64..=1.0) {
            prop_assert!((binary_entropy(p).unwrap() - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_states_have_zero_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random::random_pure(&mut rng, &[2, 3]);
        assert!(von_neumann(&psi).unwrap().abs() < 1e-9);
        assert!(spectrum_entropy(&[1.0 + 1e-11, -1e-11]).unwrap().abs() < 1e-9);
        assert!(spectrum_entropy(&[1.1, -0.1]).is_err());
    }
}
