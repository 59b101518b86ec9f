//! Finite-dimensional states and channels.
//!
//! A [`DensityOperator`] carries the dimensions of its tensor factors so that
//! partial traces and local channel applications can be addressed by factor
//! index. A [`Channel`] is a Kraus list; its Choi matrix uses the
//! input-first ordering `J = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)`.

use crate::entropy::JointTable;
use crate::error::{invalid, mismatch, Result};
use crate::linalg::{kron_all, vec_norm, ComplexMatrix, C64, HERMITIAN_TOL, ONE, ZERO};

/// Most negative eigenvalue tolerated in a density operator.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Allowed deviation of `Σ K†K` from the identity.
pub const TP_TOL: f64 = 1e-10;
/// Tolerance used when validating Choi matrices.
pub const CHOI_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return invalid("density operator must be square");
        }
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || total != matrix.dim() {
            return mismatch(format!(
                "factor dimensions {dims:?} do not multiply to {}",
                matrix.dim()
            ));
        }
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL.max(1e-11) {
            return invalid(format!("state is not Hermitian (defect {defect:.3e})"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return invalid(format!("trace is {:.12} rather than 1", tr.re));
        }
        let matrix = matrix.hermitian_part();
        let min_eig = matrix
            .hermitian_eig()?
            .values
            .last()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -PSD_TOL {
            return invalid(format!("state has negative eigenvalue {min_eig:.3e}"));
        }
        Ok(Self { matrix, dims })
    }

    /// Single-factor state.
    pub fn single(matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.rows();
        Self::new(matrix, vec![d])
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ`.
    pub fn pure(amplitudes: &[C64], dims: Vec<usize>) -> Result<Self> {
        let norm = vec_norm(amplitudes);
        if (norm - 1.0).abs() > 1e-9 {
            return invalid(format!("state vector has norm {norm}"));
        }
        Self::new(ComplexMatrix::outer(amplitudes, amplitudes), dims)
    }

    /// `I/d` on the given factors.
    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        Self::new(ComplexMatrix::identity(d).scale_real(1.0 / d as f64), dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `(d_R, d_B)` of a bipartite state.
    pub fn bipartite_dims(&self) -> Result<(usize, usize)> {
        match self.dims[..] {
            [a, b] => Ok((a, b)),
            _ => invalid(format!(
                "expected a bipartite state, got factors {:?}",
                self.dims
            )),
        }
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.eigh_unchecked().values
    }

    /// Amplitude vector when the state is pure (top eigenvalue ≥ 1 − 1e-9).
    pub fn pure_amplitudes(&self) -> Result<Vec<C64>> {
        let eig = self.matrix.eigh_unchecked();
        if eig.values[0] < 1.0 - 1e-9 {
            return invalid(format!(
                "state is mixed (largest eigenvalue {:.12})",
                eig.values[0]
            ));
        }
        Ok(eig.column(0))
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: self.matrix.kron(&other.matrix),
            dims,
        }
    }

    /// `Σ_i p_i ρ_i` over states with identical factor structure.
    pub fn mixture(weights: &[f64], states: &[DensityOperator]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return invalid("mixture needs one weight per state");
        }
        let dims = states[0].dims.clone();
        let mut acc = ComplexMatrix::zeros(states[0].dim(), states[0].dim());
        for (w, s) in weights.iter().zip(states) {
            if s.dims != dims {
                return mismatch("mixture components differ in dimensions");
            }
            if *w < 0.0 {
                return invalid("mixture weights must be nonnegative");
            }
            acc = &acc + &s.matrix.scale_real(*w);
        }
        Self::new(acc, dims)
    }

    /// Conjugation by a unitary acting on the whole space.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return mismatch("unitary has the wrong dimension");
        }
        Self::new(&(u * &self.matrix) * &u.adjoint(), self.dims.clone())
    }

    /// Fidelity with a pure state: `⟨ψ|ρ|ψ⟩`.
    pub fn overlap_with_pure(&self, psi: &[C64]) -> f64 {
        self.matrix.expectation(psi).re
    }

    /// Reduced state on the factors listed in `keep` (in ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let reduced = partial_trace_matrix(&self.matrix, &self.dims, keep)?;
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        let dims = keep_sorted.iter().map(|&k| self.dims[k]).collect();
        Ok(Self {
            matrix: reduced.hermitian_part(),
            dims,
        })
    }

    /// Classical table `p(r, b) = ⟨rb|ρ|rb⟩` of a bipartite state.
    pub fn diagonal_table(&self) -> Result<JointTable> {
        let (dr, db) = self.bipartite_dims()?;
        let diag: Vec<f64> = (0..dr * db)
            .map(|i| self.matrix[(i, i)].re.max(0.0))
            .collect();
        JointTable::from_weights(dr, db, diag)
    }
}

/// Partial trace of a raw matrix with factor dimensions `dims`, keeping the
/// factors named in `keep`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let k = dims.len();
    if keep.is_empty() {
        return invalid("partial trace must keep at least one factor");
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&f| f >= k) {
        return invalid(format!("bad factor index set {keep:?} for {k} factors"));
    }
    if dims.iter().product::<usize>() != m.rows() || !m.is_square() {
        return mismatch("dimensions do not match matrix");
    }
    let traced: Vec<usize> = (0..k).filter(|f| !keep_sorted.contains(f)).collect();
    let keep_dim: usize = keep_sorted.iter().map(|&f| dims[f]).product();
    let trace_dim: usize = traced.iter().map(|&f| dims[f]).product();

    // Row-major strides of each factor in the full index.
    let mut strides = vec![1usize; k];
    for f in (0..k.saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    let offset = |factors: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &f in factors.iter().rev() {
            off += (idx % dims[f]) * strides[f];
            idx /= dims[f];
        }
        off
    };
    let keep_offsets: Vec<usize> = (0..keep_dim).map(|i| offset(&keep_sorted, i)).collect();
    let trace_offsets: Vec<usize> = (0..trace_dim).map(|i| offset(&traced, i)).collect();

    Ok(ComplexMatrix::from_fn(keep_dim, keep_dim, |i, j| {
        trace_offsets
            .iter()
            .map(|&t| m[(keep_offsets[i] + t, keep_offsets[j] + t)])
            .sum()
    }))
}

/// Completely positive trace-preserving map given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    kraus: Vec<ComplexMatrix>,
    in_dim: usize,
    out_dim: usize,
}

impl Channel {
    pub fn new(kraus: Vec<ComplexMatrix>, in_dim: usize, out_dim: usize) -> Result<Self> {
        Self::with_tolerance(kraus, in_dim, out_dim, TP_TOL)
    }

    pub(crate) fn with_tolerance(
        kraus: Vec<ComplexMatrix>,
        in_dim: usize,
        out_dim: usize,
        tol: f64,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return invalid("a channel needs at least one Kraus operator");
        }
        if in_dim == 0 || out_dim == 0 {
            return invalid("channel dimensions must be positive");
        }
        for (i, k) in kraus.iter().enumerate() {
            if k.rows() != out_dim || k.cols() != in_dim {
                return mismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {out_dim}x{in_dim}",
                    k.rows(),
                    k.cols()
                ));
            }
        }
        let ch = Self {
            kraus,
            in_dim,
            out_dim,
        };
        let defect = ch.tp_defect();
        if defect > tol {
            return invalid(format!("Kraus operators are not trace preserving (defect {defect:.3e})"));
        }
        Ok(ch)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// `max |Σ K†K − I|`
    pub fn tp_defect(&self) -> f64 {
        let sum = self.kraus.iter().fold(
            ComplexMatrix::zeros(self.in_dim, self.in_dim),
            |acc, k| &acc + &(&k.adjoint() * k),
        );
        sum.max_abs_diff(&ComplexMatrix::identity(self.in_dim))
    }

    /// Applies the channel to a bare operator on its input space.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.in_dim || x.cols() != self.in_dim {
            return mismatch(format!(
                "channel input dimension {} does not match operator {}x{}",
                self.in_dim,
                x.rows(),
                x.cols()
            ));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.out_dim, self.out_dim), |acc, k| {
                &acc + &(&(k * x) * &k.adjoint())
            }))
    }

    /// Heisenberg-picture adjoint `N†(Y) = Σ K† Y K`.
    pub fn apply_adjoint(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if y.rows() != self.out_dim || y.cols() != self.out_dim {
            return mismatch("adjoint input has the wrong dimension");
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.in_dim, self.in_dim), |acc, k| {
                &acc + &(&(&k.adjoint() * y) * k)
            }))
    }

    /// `self ∘ first`
    pub fn compose_after(&self, first: &Channel) -> Result<Channel> {
        if first.out_dim != self.in_dim {
            return mismatch("composed channels have incompatible dimensions");
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &self.kraus {
            for b in &first.kraus {
                kraus.push(a * b);
            }
        }
        Channel::with_tolerance(kraus, first.in_dim, self.out_dim, 1e-9)
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` of dimension `in·out`.
    pub fn choi(&self) -> ComplexMatrix {
        let (din, dout) = (self.in_dim, self.out_dim);
        let mut j = ComplexMatrix::zeros(din * dout, din * dout);
        for k in &self.kraus {
            // Σ_i |i⟩ ⊗ K|i⟩ is the vectorisation of K.
            let v: Vec<C64> = (0..din * dout).map(|idx| k[(idx % dout, idx / dout)]).collect();
            j = &j + &ComplexMatrix::outer(&v, &v);
        }
        j
    }

    /// Inverse Choi–Jamiołkowski map.
    pub fn from_choi(choi: &ComplexMatrix, in_dim: usize, out_dim: usize) -> Result<Channel> {
        if choi.rows() != in_dim * out_dim || !choi.is_square() {
            return mismatch("Choi matrix dimension must equal in_dim·out_dim");
        }
        let scale = choi.max_abs().max(1.0);
        let eig = choi.hermitian_eig()?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -CHOI_TOL * scale {
            return invalid(format!("Choi matrix is not PSD (eigenvalue {min:.3e})"));
        }
        let reduced = partial_trace_matrix(choi, &[in_dim, out_dim], &[0])?;
        let defect = reduced.max_abs_diff(&ComplexMatrix::identity(in_dim));
        if defect > CHOI_TOL {
            return invalid(format!("Choi matrix is not trace preserving (defect {defect:.3e})"));
        }
        let cutoff = 1e-14 * scale;
        let mut kraus = Vec::new();
        for (idx, &lambda) in eig.values.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let w = eig.column(idx);
            let s = lambda.sqrt();
            kraus.push(ComplexMatrix::from_fn(out_dim, in_dim, |b, i| {
                w[i * out_dim + b] * s
            }));
        }
        if kraus.is_empty() {
            return invalid("Choi matrix is zero");
        }
        normalize_kraus(&mut kraus, in_dim)?;
        Channel::with_tolerance(kraus, in_dim, out_dim, CHOI_TOL)
    }
}

/// Rescales `K_k → K_k (Σ K†K)^{-1/2}` to remove rounding drift from a nearly
/// trace-preserving Kraus list.
pub(crate) fn normalize_kraus(kraus: &mut [ComplexMatrix], in_dim: usize) -> Result<()> {
    let sum = kraus.iter().fold(ComplexMatrix::zeros(in_dim, in_dim), |acc, k| {
        &acc + &(&k.adjoint() * k)
    });
    let inv_sqrt = sum.hermitian_part().hermitian_map(|l| {
        if l > 1e-300 {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    })?;
    for k in kraus.iter_mut() {
        *k = &*k * &inv_sqrt;
    }
    Ok(())
}

/// Applies `ch` to tensor factor `factor` of `rho`.
pub fn apply_channel(ch: &Channel, rho: &DensityOperator, factor: usize) -> Result<DensityOperator> {
    let dims = rho.dims();
    if factor >= dims.len() {
        return invalid(format!("factor {factor} out of range for {} factors", dims.len()));
    }
    if dims[factor] != ch.in_dim {
        return mismatch(format!(
            "channel input dimension {} does not match factor dimension {}",
            ch.in_dim, dims[factor]
        ));
    }
    let left: usize = dims[..factor].iter().product();
    let right: usize = dims[factor + 1..].iter().product();
    let il = ComplexMatrix::identity(left);
    let ir = ComplexMatrix::identity(right);
    let out_total = left * ch.out_dim * right;
    let mut out = ComplexMatrix::zeros(out_total, out_total);
    for k in &ch.kraus {
        let full = kron_all(&[il.clone(), k.clone(), ir.clone()]);
        out = &out + &(&(&full * rho.matrix()) * &full.adjoint());
    }
    let mut new_dims = dims.to_vec();
    new_dims[factor] = ch.out_dim;
    DensityOperator::new(out.hermitian_part(), new_dims)
}

/// `Δ(ρ) = Σ_i |i⟩⟨i|ρ|i⟩⟨i|` in the computational basis.
pub fn dephase(dim: usize) -> Channel {
    dephase_in_basis(&ComplexMatrix::identity(dim)).expect("computational basis is orthonormal")
}

/// Completely dephasing channel with respect to the orthonormal columns of
/// `basis`.
pub fn dephase_in_basis(basis: &ComplexMatrix) -> Result<Channel> {
    let d = basis.rows();
    if !basis.is_square() {
        return invalid("dephasing basis must be square");
    }
    let gram = &basis.adjoint() * basis;
    if gram.max_abs_diff(&ComplexMatrix::identity(d)) > 1e-10 {
        return invalid("dephasing basis is not orthonormal");
    }
    let kraus = (0..d)
        .map(|i| {
            let v = basis.column(i);
            ComplexMatrix::outer(&v, &v)
        })
        .collect();
    Channel::new(kraus, d, d)
}

/// `|φ⟩ = d^{-1/2} Σ_a |a⟩|a⟩` on `C^d ⊗ C^d`.
pub fn maximally_entangled_vector(d: usize) -> Vec<C64> {
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = vec![ZERO; d * d];
    for a in 0..d {
        v[a * d + a] = amp;
    }
    v
}

pub fn maximally_entangled(d: usize) -> Result<DensityOperator> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    DensityOperator::pure(&maximally_entangled_vector(d), vec![d, d])
}

/// `Σ_a √p_a |a⟩|a⟩`, the state whose dephased version is the diagonal
/// distribution `p`.
pub fn schmidt_state(weights: &[f64]) -> Result<DensityOperator> {
    let d = weights.len();
    if d == 0 {
        return invalid("need at least one weight");
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-12 {
        return invalid("weights must be a probability vector");
    }
    let mut v = vec![ZERO; d * d];
    for (a, &w) in weights.iter().enumerate() {
        v[a * d + a] = C64::new(w.sqrt(), 0.0);
    }
    DensityOperator::pure(&v, vec![d, d])
}

/// Diagonal state with `p(a, b)` on its diagonal, factors `(|A|, |B|)`.
pub fn diagonal_embedding(table: &JointTable) -> DensityOperator {
    let diag: Vec<f64> = table.probabilities().to_vec();
    DensityOperator::new(
        ComplexMatrix::diag_real(&diag),
        vec![table.rows(), table.cols()],
    )
    .expect("a joint table embeds as a valid state")
}

/// `q(R|B) = d_R ⟨φ|(I ⊗ D)(ρ)|φ⟩` for a decoder `D: B → Â` with `dim Â = d_R`.
pub fn singlet_fraction_given_decoder(rho: &DensityOperator, decoder: &Channel) -> Result<f64> {
    let (dr, db) = rho.bipartite_dims()?;
    if decoder.in_dim != db {
        return mismatch(format!(
            "decoder input {} does not match system B dimension {db}",
            decoder.in_dim
        ));
    }
    if decoder.out_dim != dr {
        return mismatch(format!(
            "decoder output {} does not match reference dimension {dr}",
            decoder.out_dim
        ));
    }
    let decoded = apply_channel(decoder, rho, 1)?;
    // d⟨φ|τ|φ⟩ = Σ_ij τ_{(i,i),(j,j)}
    let m = decoded.matrix();
    let mut acc = ZERO;
    for i in 0..dr {
        for j in 0..dr {
            acc += m[(i * dr + i, j * dr + j)];
        }
    }
    Ok(acc.re)
}

pub fn identity_channel(d: usize) -> Channel {
    Channel::new(vec![ComplexMatrix::identity(d)], d, d).expect("identity is a channel")
}

/// `ρ ↦ (1 − λ)ρ + λ Tr(ρ) I/d`
pub fn depolarizing(d: usize, lambda: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("depolarizing parameter {lambda} outside [0, 1]"));
    }
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let mut kraus = Vec::with_capacity(d * d + 1);
    if lambda < 1.0 {
        kraus.push(ComplexMatrix::identity(d).scale_real((1.0 - lambda).sqrt()));
    }
    if lambda > 0.0 {
        let w = (lambda / d as f64).sqrt();
        for i in 0..d {
            for j in 0..d {
                kraus.push(ComplexMatrix::unit(d, d, i, j).scale_real(w));
            }
        }
    }
    Channel::new(kraus, d, d)
}

/// Classical channel with `transition[b][a] = p(b|a)`; columns must sum to one.
pub fn classical_stochastic(transition: &[Vec<f64>]) -> Result<Channel> {
    let out = transition.len();
    let inp = transition.first().map_or(0, Vec::len);
    if out == 0 || inp == 0 || transition.iter().any(|r| r.len() != inp) {
        return invalid("stochastic matrix must be non-empty and rectangular");
    }
    for a in 0..inp {
        let col: f64 = (0..out).map(|b| transition[b][a]).sum();
        if (col - 1.0).abs() > 1e-10 || (0..out).any(|b| transition[b][a] < 0.0) {
            return invalid(format!("column {a} is not a probability distribution"));
        }
    }
    let mut kraus = Vec::new();
    for (b, row) in transition.iter().enumerate() {
        for (a, &p) in row.iter().enumerate() {
            if p > 0.0 {
                kraus.push(ComplexMatrix::unit(out, inp, b, a).scale_real(p.sqrt()));
            }
        }
    }
    Channel::new(kraus, inp, out)
}

/// Measures in the computational basis and prepares `states[i]` on outcome `i`.
pub fn measure_prepare(states: &[DensityOperator]) -> Result<Channel> {
    if states.is_empty() {
        return invalid("need at least one prepared state");
    }
    let din = states.len();
    let dout = states[0].dim();
    let mut kraus = Vec::new();
    for (i, s) in states.iter().enumerate() {
        if s.dim() != dout {
            return mismatch("prepared states differ in dimension");
        }
        let eig = s.matrix().eigh_unchecked();
        for (k, &l) in eig.values.iter().enumerate() {
            if l > 1e-15 {
                let v: Vec<C64> = eig.column(k).iter().map(|z| z * l.sqrt()).collect();
                let e_i: Vec<C64> = (0..din).map(|j| if j == i { ONE } else { ZERO }).collect();
                kraus.push(ComplexMatrix::outer(&v, &e_i));
            }
        }
    }
    Channel::with_tolerance(kraus, din, dout, 1e-9)
}

/// Bell state on two qubits.
pub fn bell() -> DensityOperator {
    maximally_entangled(2).expect("d = 2 is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn plus_state() -> DensityOperator {
        let h = C64::new(0.5f64.sqrt(), 0.0);
        DensityOperator::pure(&[h, h], vec![2]).unwrap()
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let r = bell().partial_trace(&[0]).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn product_partial_trace_recovers_factor() {
        let rho = DensityOperator::single(ComplexMatrix::diag_real(&[0.7, 0.3])).unwrap();
        let tau = plus_state();
        let prod = rho.tensor(&tau);
        let back = prod.partial_trace(&[0]).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let back2 = prod.partial_trace(&[1]).unwrap();
        assert!(back2.matrix().max_abs_diff(tau.matrix()) < 1e-15);
    }

    #[test]
    fn diagonal_embedding_marginal_is_column_sums() {
        let t = JointTable::new(2, 3, vec![0.1, 0.2, 0.1, 0.3, 0.0, 0.3]).unwrap();
        let rho = diagonal_embedding(&t);
        let pb = rho.partial_trace(&[1]).unwrap();
        let expect = [0.4, 0.2, 0.4];
        for (b, e) in expect.iter().enumerate() {
            assert!(close(pb.matrix()[(b, b)].re, *e, 1e-15));
        }
        assert!(pb.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        assert!(bell().partial_trace(&[2]).is_err());
        assert!(bell().partial_trace(&[]).is_err());
    }

    #[test]
    fn identity_channel_leaves_state_unchanged() {
        let out = apply_channel(&identity_channel(2), &bell(), 1).unwrap();
        assert!(out.matrix().max_abs_diff(bell().matrix()) < 1e-15);
    }

    #[test]
    fn full_depolarizing_on_half_bell_is_maximally_mixed() {
        let out = apply_channel(&depolarizing(2, 1.0).unwrap(), &bell(), 1).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
    }

    #[test]
    fn dephasing_half_bell_gives_classical_correlation() {
        let out = apply_channel(&dephase(2), &bell(), 1).unwrap();
        let expect = ComplexMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5]);
        assert!(out.matrix().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn apply_channel_dimension_mismatch() {
        let err = apply_channel(&identity_channel(3), &bell(), 1).unwrap_err();
        assert!(matches!(err, crate::Error::DimensionMismatch(_)));
    }

    #[test]
    fn choi_of_identity_is_unnormalized_singlet() {
        let j = identity_channel(2).choi();
        let expect = bell().matrix().scale_real(2.0);
        assert!(j.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn choi_of_full_depolarizing() {
        let j = depolarizing(2, 1.0).unwrap().choi();
        assert!(j.max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn from_choi_rejects_non_tp_and_non_psd() {
        let not_tp = ComplexMatrix::identity(4);
        assert!(Channel::from_choi(&not_tp, 2, 2).is_err());
        let not_psd = ComplexMatrix::diag_real(&[1.5, 0.5, -0.5, 1.5]);
        assert!(Channel::from_choi(&not_psd, 2, 2).is_err());
    }

    #[test]
    fn dephase_plus_gives_maximally_mixed() {
        let out = dephase(2).apply_matrix(plus_state().matrix()).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn dephase_fixes_diagonal_states() {
        let rho = ComplexMatrix::diag_real(&[0.2, 0.5, 0.3]);
        let out = dephase(3).apply_matrix(&rho).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn dephase_in_rotated_basis() {
        let h = 0.5f64.sqrt();
        let hadamard = ComplexMatrix::from_real_rows(&[vec![h, h], vec![h, -h]]).unwrap();
        let ch = dephase_in_basis(&hadamard).unwrap();
        let out = ch.apply_matrix(plus_state().matrix()).unwrap();
        assert!(out.max_abs_diff(plus_state().matrix()) < 1e-15);
        let skew = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(dephase_in_basis(&skew).is_err());
    }

    #[test]
    fn maximally_entangled_small_cases() {
        let one = maximally_entangled(1).unwrap();
        assert_eq!(one.dims(), &[1, 1]);
        assert!(close(one.matrix()[(0, 0)].re, 1.0, 1e-15));
        let three = maximally_entangled(3).unwrap();
        let marg = three.partial_trace(&[0]).unwrap();
        assert!(marg
            .matrix()
            .max_abs_diff(&ComplexMatrix::identity(3).scale_real(1.0 / 3.0))
            < 1e-15);
        assert!(maximally_entangled(0).is_err());
    }

    #[test]
    fn singlet_fraction_examples() {
        let id = identity_channel(2);
        assert!(close(singlet_fraction_given_decoder(&bell(), &id).unwrap(), 2.0, 1e-14));
        let mixed = DensityOperator::maximally_mixed(vec![2, 2]).unwrap();
        let dec = depolarizing(2, 0.3).unwrap();
        assert!(close(singlet_fraction_given_decoder(&mixed, &dec).unwrap(), 0.5, 1e-14));
        let classical = DensityOperator::new(
            ComplexMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5]),
            vec![2, 2],
        )
        .unwrap();
        assert!(close(singlet_fraction_given_decoder(&classical, &id).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn singlet_fraction_rejects_wrong_decoder_output() {
        let dec = classical_stochastic(&[vec![1.0, 1.0]]).unwrap();
        assert!(singlet_fraction_given_decoder(&bell(), &dec).is_err());
    }

    #[test]
    fn depolarizing_endpoints() {
        let rho = ComplexMatrix::from_rows(&[
            vec![C64::new(0.6, 0.0), C64::new(0.1, 0.2)],
            vec![C64::new(0.1, -0.2), C64::new(0.4, 0.0)],
        ])
        .unwrap();
        let zero = depolarizing(2, 0.0).unwrap().apply_matrix(&rho).unwrap();
        assert!(zero.max_abs_diff(&rho) < 1e-15);
        let one = depolarizing(2, 1.0).unwrap().apply_matrix(&rho).unwrap();
        assert!(one.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        assert!(depolarizing(2, 1.5).is_err());
    }

    #[test]
    fn binary_symmetric_channel_on_diagonal_state() {
        let bsc = classical_stochastic(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let out = bsc.apply_matrix(&ComplexMatrix::diag_real(&[1.0, 0.0])).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::diag_real(&[0.75, 0.25])) < 1e-15);
        assert!(classical_stochastic(&[vec![0.5, 0.2], vec![0.4, 0.8]]).is_err());
    }

    #[test]
    fn classical_channel_sandwiched_by_dephasing() {
        let t = vec![vec![0.6, 0.1, 0.3], vec![0.4, 0.9, 0.7]];
        let ch = classical_stochastic(&t).unwrap();
        let sandwich = dephase(2)
            .compose_after(&ch)
            .unwrap()
            .compose_after(&dephase(3))
            .unwrap();
        for a in 0..3 {
            let out = sandwich.apply_matrix(&ComplexMatrix::unit(3, 3, a, a)).unwrap();
            for b in 0..2 {
                assert!(close(out[(b, b)].re, t[b][a], 1e-14));
            }
        }
    }

    #[test]
    fn measure_prepare_outputs_prepared_states() {
        let states = vec![plus_state(), DensityOperator::single(ComplexMatrix::diag_real(&[0.0, 1.0])).unwrap()];
        let ch = measure_prepare(&states).unwrap();
        let out = ch.apply_matrix(&ComplexMatrix::diag_real(&[1.0, 0.0])).unwrap();
        assert!(out.max_abs_diff(plus_state().matrix()) < 1e-14);
    }

    #[test]
    fn density_operator_validation() {
        assert!(DensityOperator::single(ComplexMatrix::diag_real(&[0.5, 0.4])).is_err());
        assert!(DensityOperator::single(ComplexMatrix::diag_real(&[1.2, -0.2])).is_err());
        assert!(DensityOperator::new(ComplexMatrix::identity(4).scale_real(0.25), vec![3]).is_err());
    }

    #[test]
    fn diagonal_table_of_bell() {
        let t = bell().diagonal_table().unwrap();
        assert_eq!(t.probabilities(), &[0.5, 0.0, 0.0, 0.5]);
    }
}
