//! Seeded generators for random test instances.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::entropy::JointTable;
use crate::linalg::{vec_inner, vec_norm, ComplexMatrix, C64};
use crate::quantum::{normalize_kraus, Channel, DensityOperator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Uniform (flat Dirichlet) probability vector.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Random joint table. About a fifth of the entries are zeroed so that ties
/// and deterministic columns occur.
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> JointTable {
    loop {
        let w: Vec<f64> = (0..rows * cols)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    Exp1.sample(rng)
                }
            })
            .collect();
        if let Ok(t) = JointTable::from_weights(rows, cols, w) {
            return t;
        }
    }
}

/// Haar-random unitary by Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, d);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let c = vec_inner(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let n = vec_norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        cols.push(v);
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Random unit vector.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = vec_norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DensityOperator {
    let d: usize = dims.iter().product();
    let v = random_vector(rng, d);
    DensityOperator::pure(&v, dims.to_vec()).expect("unit vector gives a valid state")
}

/// Induced-measure random state `GG†/Tr(GG†)` with `G` of size `d × rank`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], rank: usize) -> DensityOperator {
    let d: usize = dims.iter().product();
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m.scale_real(1.0 / tr).hermitian_part(), dims.to_vec())
        .expect("Wishart matrix gives a valid state")
}

/// Random channel with `n_kraus` Kraus operators, `K_k = G_k S^{-1/2}`.
pub fn random_channel<R: Rng + ?Sized>(
    rng: &mut R,
    in_dim: usize,
    out_dim: usize,
    n_kraus: usize,
) -> Channel {
    let mut kraus: Vec<ComplexMatrix> = (0..n_kraus.max(1))
        .map(|_| ginibre(rng, out_dim, in_dim))
        .collect();
    normalize_kraus(&mut kraus, in_dim).expect("Gaussian Kraus sum is invertible");
    Channel::with_tolerance(kraus, in_dim, out_dim, 1e-10).expect("normalised Kraus list")
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    ginibre(rng, d, d).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(&mut rng, 5);
        assert!((&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(5)) < 1e-12);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_table(&mut ChaCha8Rng::seed_from_u64(9), 3, 4);
        let b = random_table(&mut ChaCha8Rng::seed_from_u64(9), 3, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn random_channel_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = random_channel(&mut rng, 3, 2, 4);
        assert!(ch.tp_defect() < 1e-12);
    }
}
