//! Conditional min-entropy as a semidefinite program.
//!
//! Primal: minimise `Tr σ` subject to `I_R ⊗ σ ⪰ ρ`.
//! Dual: maximise `Tr(ρY)` subject to `Y ⪰ 0`, `Tr_R Y = I_B`.
//!
//! The optimum equals `2^{-Hmin(R|B)}`, which is also the largest singlet
//! fraction reachable by a decoder on `B`. The solver follows the central path
//! of the log-det barrier `t·Tr σ − log det(I ⊗ σ − ρ)` with damped Newton
//! steps and reads a dual certificate off the barrier gradient.

use serde::Serialize;

use crate::error::{invalid, mismatch, Result};
use crate::linalg::{cholesky_solve, ComplexMatrix, C64, ZERO};
use crate::quantum::{partial_trace_matrix, Channel, DensityOperator};

pub const MAX_NEWTON_STEPS: usize = 500;
const MU_FACTOR: f64 = 0.2;
const CENTERING_DECREMENT: f64 = 1e-10;
const MAX_CENTERING_STEPS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    InfeasibleInput,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Primal variable on `B`.
    pub sigma: ComplexMatrix,
    /// Dual variable on `R ⊗ B`.
    pub y: ComplexMatrix,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: SdpStatus,
    pub d_r: usize,
    pub d_b: usize,
}

impl SdpSolution {
    /// `Hmin(R|B) = −log₂ (primal value)`
    pub fn hmin(&self) -> f64 {
        -self.primal_value.log2()
    }

    /// Largest violation among `I⊗σ − ρ ⪰ 0`, `Y ⪰ 0` and `Tr_R Y = I`.
    pub fn residuals(&self, rho: &ComplexMatrix) -> (f64, f64, f64) {
        let s = &ComplexMatrix::identity(self.d_r).kron(&self.sigma) - rho;
        let primal = (-s.eigh_unchecked().values.last().copied().unwrap_or(0.0)).max(0.0);
        let dual = (-self.y.eigh_unchecked().values.last().copied().unwrap_or(0.0)).max(0.0);
        let tr = partial_trace_matrix(&self.y, &[self.d_r, self.d_b], &[1])
            .map(|z| z.max_abs_diff(&ComplexMatrix::identity(self.d_b)))
            .unwrap_or(f64::INFINITY);
        (primal, dual, tr)
    }
}

/// Solves the min-entropy SDP for a bipartite state.
pub fn solve_hmin(rho: &DensityOperator, tol: f64) -> Result<SdpSolution> {
    let (dr, db) = rho.bipartite_dims()?;
    solve_hmin_matrix(rho.matrix(), dr, db, tol)
}

/// Same as [`solve_hmin`] on a raw Hermitian matrix. A matrix that is not
/// positive semidefinite yields status [`SdpStatus::InfeasibleInput`].
pub fn solve_hmin_matrix(rho: &ComplexMatrix, dr: usize, db: usize, tol: f64) -> Result<SdpSolution> {
    if dr == 0 || db == 0 {
        return invalid("dimensions must be positive");
    }
    if rho.rows() != dr * db || !rho.is_square() {
        return mismatch(format!("matrix is {}x{}, expected {}", rho.rows(), rho.cols(), dr * db));
    }
    if dr * db > 64 {
        return invalid("solver supports d_R·d_B ≤ 64");
    }
    if !(tol >= 1e-9) {
        return invalid(format!("tolerance {tol} below 1e-9"));
    }
    let eig = rho.hermitian_eig()?;
    let rho = rho.hermitian_part();
    let lmax = eig.values[0];
    let lmin = *eig.values.last().unwrap();
    if lmin < -1e-10 {
        return Ok(SdpSolution {
            sigma: ComplexMatrix::zeros(db, db),
            y: ComplexMatrix::zeros(dr * db, dr * db),
            primal_value: f64::NAN,
            dual_value: f64::NAN,
            gap: f64::NAN,
            iterations: 0,
            status: SdpStatus::InfeasibleInput,
            d_r: dr,
            d_b: db,
        });
    }
    Barrier::new(&rho, dr, db).run(lmax.max(0.0) + 1.0, tol)
}

struct Barrier<'a> {
    rho: &'a ComplexMatrix,
    dr: usize,
    db: usize,
    n: usize,
    eye_r: ComplexMatrix,
}

struct Point {
    sigma: ComplexMatrix,
    g: ComplexMatrix,
    log_det: f64,
}

impl<'a> Barrier<'a> {
    fn new(rho: &'a ComplexMatrix, dr: usize, db: usize) -> Self {
        Self {
            rho,
            dr,
            db,
            n: dr * db,
            eye_r: ComplexMatrix::identity(dr),
        }
    }

    /// Slack `I⊗σ − ρ`, its inverse and log-determinant, if strictly feasible.
    fn evaluate(&self, sigma: ComplexMatrix) -> Option<Point> {
        let s = &self.eye_r.kron(&sigma) - self.rho;
        let l = s.cholesky()?;
        let log_det = 2.0 * (0..self.n).map(|i| l[(i, i)].re.ln()).sum::<f64>();
        let g = cholesky_inverse(&l);
        Some(Point { sigma, g, log_det })
    }

    fn objective(&self, p: &Point, t: f64) -> f64 {
        t * p.sigma.trace().re - p.log_det
    }

    fn tr_r(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let db = self.db;
        ComplexMatrix::from_fn(db, db, |b, c| {
            (0..self.dr).map(|r| m[(r * db + b, r * db + c)]).sum()
        })
    }

    /// Newton direction for the barrier at parameter `t`; returns `(Δ, λ²)`.
    fn newton(&self, p: &Point, t: f64) -> (ComplexMatrix, f64) {
        let (dr, db) = (self.dr, self.db);
        let m = db * db;
        let g = &p.g;
        let grad = &ComplexMatrix::identity(db).scale_real(t) - &self.tr_r(g);

        // Hessian of −log det in the vec(Δ) basis:
        // H[(b,b'),(c,c')] = Σ_{r,r'} G[(r,b),(r',c)] · G[(r',c'),(r,b')]
        let mut h = ComplexMatrix::zeros(m, m);
        for r in 0..dr {
            for rp in 0..dr {
                for b in 0..db {
                    for c in 0..db {
                        let x = g[(r * db + b, rp * db + c)];
                        if x == ZERO {
                            continue;
                        }
                        for bp in 0..db {
                            for cp in 0..db {
                                h[(b * db + bp, c * db + cp)] += x * g[(rp * db + cp, r * db + bp)];
                            }
                        }
                    }
                }
            }
        }
        let h = h.hermitian_part();
        let rhs: Vec<C64> = grad.as_slice().iter().map(|x| -x).collect();
        let sol = hpd_solve_regularized(&h, &rhs);
        let delta = ComplexMatrix::from_vec(db, db, sol)
            .expect("solution has d_B² entries")
            .hermitian_part();
        let lambda2 = -grad.inner(&delta).re;
        (delta, lambda2.max(0.0))
    }

    /// Dual certificate from the barrier gradient, rescaled so that the
    /// partial-trace constraint holds exactly.
    fn dual(&self, p: &Point, t: f64) -> Option<(ComplexMatrix, f64)> {
        let y = p.g.scale_real(1.0 / t);
        let z = self.tr_r(&y).hermitian_part();
        let z_inv_sqrt = z
            .hermitian_eig()
            .ok()
            .filter(|e| e.values.last().is_some_and(|&v| v > 0.0))?
            .reconstruct_with(|v| 1.0 / v.sqrt());
        let k = self.eye_r.kron(&z_inv_sqrt);
        let y = (&(&k * &y) * &k).hermitian_part();
        let dual_value = self.rho.inner(&y).re;
        Some((y, dual_value))
    }

    fn run(&self, start_scale: f64, tol: f64) -> Result<SdpSolution> {
        let db = self.db;
        let mut point = self
            .evaluate(ComplexMatrix::identity(db).scale_real(start_scale))
            .expect("scaled identity is strictly feasible");
        let mut t = 1.0;
        let mut iterations = 0;
        let mut best: Option<(ComplexMatrix, f64)> = None;

        loop {
            // Centering. Inside the region of quadratic convergence a full
            // Newton step stays feasible, so the line search is only needed
            // while the decrement is large.
            let mut stalled = false;
            let mut steps = 0;
            while iterations < MAX_NEWTON_STEPS && steps < MAX_CENTERING_STEPS {
                let (delta, lambda2) = self.newton(&point, t);
                iterations += 1;
                steps += 1;
                if lambda2 / 2.0 <= CENTERING_DECREMENT {
                    break;
                }
                if lambda2 < 0.0625 {
                    let cand = (&point.sigma + &delta).hermitian_part();
                    if let Some(q) = self.evaluate(cand) {
                        point = q;
                        continue;
                    }
                }
                let f0 = self.objective(&point, t);
                let mut alpha = 1.0;
                let mut next = None;
                while alpha > 1e-12 {
                    let cand = &point.sigma + &delta.scale_real(alpha);
                    if let Some(q) = self.evaluate(cand.hermitian_part()) {
                        if self.objective(&q, t) <= f0 - 0.25 * alpha * lambda2 {
                            next = Some(q);
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                match next {
                    Some(q) => point = q,
                    None => {
                        stalled = true;
                        break;
                    }
                }
            }

            if let Some((y, dual_value)) = self.dual(&point, t) {
                if best.as_ref().is_none_or(|b| dual_value > b.1) {
                    best = Some((y, dual_value));
                }
            }
            let primal_value = point.sigma.trace().re;
            let (y, dual_value) = match &best {
                Some((y, d)) => (y.clone(), *d),
                None => (ComplexMatrix::zeros(self.n, self.n), f64::NEG_INFINITY),
            };
            let gap = primal_value - dual_value;
            let done = gap <= tol;
            if done || iterations >= MAX_NEWTON_STEPS || stalled {
                return Ok(SdpSolution {
                    sigma: point.sigma.hermitian_part(),
                    y,
                    primal_value,
                    dual_value,
                    gap,
                    iterations,
                    status: if done {
                        SdpStatus::Optimal
                    } else {
                        SdpStatus::MaxIterations
                    },
                    d_r: self.dr,
                    d_b: self.db,
                });
            }
            t /= MU_FACTOR;
        }
    }
}

fn cholesky_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = ZERO);
        e[j] = C64::new(1.0, 0.0);
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv.hermitian_part()
}

fn hpd_solve_regularized(h: &ComplexMatrix, rhs: &[C64]) -> Vec<C64> {
    let scale = (0..h.rows()).map(|i| h[(i, i)].re).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    loop {
        let shifted = if shift > 0.0 {
            h + &ComplexMatrix::identity(h.rows()).scale_real(shift)
        } else {
            h.clone()
        };
        if let Some(l) = shifted.cholesky() {
            return cholesky_solve(&l, rhs);
        }
        shift = if shift == 0.0 { 1e-15 * scale } else { shift * 10.0 };
    }
}

/// Decoder `B → Â` whose adjoint reproduces the dual variable,
/// `Y = Σ_ij |i⟩⟨j| ⊗ D†(|i⟩⟨j|)`.
pub fn channel_from_dual(sol: &SdpSolution) -> Result<Channel> {
    let (dr, db) = (sol.d_r, sol.d_b);
    if sol.status != SdpStatus::Optimal {
        return invalid("dual variable comes from an unconverged solve");
    }
    let eig = sol.y.hermitian_eig()?;
    let scale = sol.y.max_abs().max(1.0);
    if eig.values.last().copied().unwrap_or(0.0) < -1e-8 * scale {
        return invalid("dual variable is not positive semidefinite");
    }
    let tr = partial_trace_matrix(&sol.y, &[dr, db], &[1])?;
    if tr.max_abs_diff(&ComplexMatrix::identity(db)) > 1e-6 {
        return invalid("dual variable violates the partial-trace constraint");
    }
    let mut kraus = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda <= 1e-14 * scale {
            continue;
        }
        let s = lambda.sqrt();
        let u = eig.column(k);
        kraus.push(ComplexMatrix::from_fn(dr, db, |i, b| (u[i * db + b] * s).conj()));
    }
    crate::quantum::normalize_kraus(&mut kraus, db)?;
    Channel::with_tolerance(kraus, db, dr, 1e-9)
}

/// Singular values of the amplitude matrix of a pure bipartite state.
pub fn schmidt_coefficients(psi: &DensityOperator) -> Result<Vec<f64>> {
    let (dr, db) = psi.bipartite_dims()?;
    let v = psi.pure_amplitudes()?;
    let a = ComplexMatrix::from_vec(dr, db, v)?;
    let mut s: Vec<f64> = (&a * &a.adjoint())
        .eigh_unchecked()
        .values
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// `(Σ_i s_i)²` over the Schmidt coefficients of a pure state.
pub fn pure_state_hmin_oracle(psi: &DensityOperator) -> Result<f64> {
    let s: f64 = schmidt_coefficients(psi)?.iter().sum();
    Ok(s * s)
}
