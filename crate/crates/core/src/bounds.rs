//! Both sides of the Fano-type inequalities, packaged as [`BoundReport`]s.
//!
//! Every report is oriented so that the claimed inequality reads
//! `lhs ≥ rhs`; `slack = lhs − rhs` and the report passes when the slack is
//! at least `−tolerance`.

use serde::{Deserialize, Serialize};

use crate::entropy::{
    binary_entropy, classical_hmin_success, conditional_shannon, von_neumann, JointTable,
};
use crate::error::{invalid, mismatch, Result};
use crate::quantum::{apply_channel, dephase, DensityOperator};
use crate::sdp::{channel_from_dual, solve_hmin, SdpStatus};

/// Tolerance for inequalities evaluated in closed form.
pub const ANALYTIC_TOL: f64 = 1e-9;
/// Tolerance for inequalities in which an SDP optimum appears.
pub const SDP_TOL: f64 = 1e-6;
/// Duality-gap target used when a check calls the SDP solver.
pub const SOLVER_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub instance: String,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

impl BoundReport {
    /// Report for the claim `lhs ≥ rhs`.
    pub fn inequality(name: &str, lhs: f64, rhs: f64, tol: f64, instance: impl Into<String>) -> Self {
        let slack = lhs - rhs;
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            pass: slack >= -tol,
            instance: instance.into(),
            seed: None,
            config_hash: None,
        }
    }

    /// Report for the claim `lhs = rhs`; the slack is `−|lhs − rhs|`.
    pub fn equality(name: &str, lhs: f64, rhs: f64, tol: f64, instance: impl Into<String>) -> Self {
        let slack = 0.0 - (lhs - rhs).abs();
        Self {
            slack,
            pass: slack >= -tol,
            ..Self::inequality(name, lhs, rhs, tol, instance)
        }
    }

    pub fn with_provenance(mut self, seed: Option<u64>, config_hash: Option<String>) -> Self {
        self.seed = seed;
        self.config_hash = config_hash;
        self
    }
}

fn fano_expression(p: f64, alphabet: usize) -> Result<f64> {
    let tail = if alphabet > 1 {
        (1.0 - p) * ((alphabet - 1) as f64).log2()
    } else {
        0.0
    };
    Ok(binary_entropy(p)? + tail)
}

/// `H(A|B) ≤ h₂(P) + (1 − P) log₂(|A| − 1)` for an achievable success `P`.
pub fn fano_check(t: &JointTable, success: f64) -> Result<BoundReport> {
    if !(0.0..=1.0 + 1e-12).contains(&success) {
        return invalid(format!("success probability {success} outside [0, 1]"));
    }
    let success = success.min(1.0);
    let instance = format!("table {}x{}, success {success:.6}", t.rows(), t.cols());
    if t.rows() == 1 {
        return Ok(BoundReport::inequality("fano", 0.0, 0.0, ANALYTIC_TOL, instance));
    }
    let lhs = fano_expression(success, t.rows())?;
    Ok(BoundReport::inequality(
        "fano",
        lhs,
        conditional_shannon(t),
        ANALYTIC_TOL,
        instance,
    ))
}

/// `max_Â Pr(Â = A) ≥ 2^{−H(A|B)}`
pub fn guarantee_check(t: &JointTable) -> Result<BoundReport> {
    let success = classical_hmin_success(t)?.success;
    Ok(BoundReport::inequality(
        "min-entropy-guarantee",
        success,
        (-conditional_shannon(t)).exp2(),
        ANALYTIC_TOL,
        format!("table {}x{}", t.rows(), t.cols()),
    ))
}

/// `H(A|B) ≥ Hmin(A|B)`
pub fn hmin_below_shannon_check(t: &JointTable) -> Result<BoundReport> {
    Ok(BoundReport::inequality(
        "hmin-below-shannon",
        conditional_shannon(t),
        classical_hmin_success(t)?.hmin,
        ANALYTIC_TOL,
        format!("table {}x{}", t.rows(), t.cols()),
    ))
}

/// `H(RB)_ρ ≤ h₂(p) + (1 − p) log₂(d² − 1)` with `p = ⟨ψ|ρ|ψ⟩`.
pub fn quantum_fano_check(psi: &DensityOperator, rho: &DensityOperator, d: usize) -> Result<BoundReport> {
    if rho.dims() != [d, d] || psi.dims() != [d, d] {
        return mismatch(format!(
            "expected both states on {d}x{d}, got {:?} and {:?}",
            psi.dims(),
            rho.dims()
        ));
    }
    let instance = format!("d={d}");
    if d == 1 {
        return Ok(BoundReport::inequality("quantum-fano", 0.0, 0.0, ANALYTIC_TOL, instance));
    }
    let amps = psi.pure_amplitudes()?;
    let p = rho.overlap_with_pure(&amps).clamp(0.0, 1.0);
    let lhs = fano_expression(p, d * d)?;
    Ok(BoundReport::inequality(
        "quantum-fano",
        lhs,
        von_neumann(rho)?,
        ANALYTIC_TOL,
        format!("d={d}, p={p:.6}"),
    ))
}

/// Quantum Fano at the maximally entangled state after the optimal decoder:
/// `p = q*(R|B)/d` against the entropy of the decoded state.
pub fn singlet_fano_check(rho: &DensityOperator) -> Result<BoundReport> {
    let (dr, db) = rho.bipartite_dims()?;
    let sol = solve_hmin(rho, SOLVER_TOL)?;
    if sol.status != SdpStatus::Optimal {
        return Err(crate::Error::Numerical(format!("solver stopped with gap {:.3e}", sol.gap)));
    }
    let decoder = channel_from_dual(&sol)?;
    let decoded = apply_channel(&decoder, rho, 1)?;
    let p = (sol.primal_value / dr as f64).clamp(0.0, 1.0);
    let lhs = if dr == 1 { 0.0 } else { fano_expression(p, dr * dr)? };
    Ok(BoundReport::inequality(
        "singlet-fano",
        lhs,
        von_neumann(&decoded)?,
        SDP_TOL,
        format!("d_R={dr}, d_B={db}, q={:.6}", sol.primal_value),
    ))
}

/// `ℓ(ε) (H(V|B) − 1) / log₂|V|`, clamped at zero.
pub fn minimax_bound(hvb: f64, cardinality: usize, loss_at_eps: f64) -> Result<f64> {
    if cardinality < 2 {
        return invalid(format!("packing cardinality {cardinality} is below 2"));
    }
    Ok((loss_at_eps * (hvb - 1.0) / (cardinality as f64).log2()).max(0.0))
}

/// `log₂ s(ε) − H(W|B)`
pub fn learning_guarantee_bound(hwb: f64, score_at_eps: f64) -> Result<f64> {
    if !(score_at_eps > 0.0) {
        return invalid(format!("score {score_at_eps} must be strictly positive"));
    }
    Ok(score_at_eps.log2() - hwb)
}

/// The optimal singlet fraction of `(Δ ⊗ Δ)(ρ)` equals the best classical
/// guessing probability on the diagonal of `ρ`.
pub fn dephasing_reduction_check(rho: &DensityOperator) -> Result<BoundReport> {
    let (dr, db) = rho.bipartite_dims()?;
    let dephased = apply_channel(&dephase(db), &apply_channel(&dephase(dr), rho, 0)?, 1)?;
    let sol = solve_hmin(&dephased, SOLVER_TOL)?;
    if sol.status != SdpStatus::Optimal {
        return Err(crate::Error::Numerical(format!("solver stopped with gap {:.3e}", sol.gap)));
    }
    let table = rho.diagonal_table()?;
    let classical = classical_hmin_success(&table)?.success;
    Ok(BoundReport::equality(
        "dephasing-reduction",
        sol.primal_value,
        classical,
        SDP_TOL,
        format!("d_R={dr}, d_B={db}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::exhaustive_map_success;
    use crate::quantum::{bell, depolarizing};
    use crate::random;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fano_examples() {
        let noiseless = JointTable::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = fano_check(&noiseless, 1.0).unwrap();
        assert!(r.pass && r.lhs == 0.0 && r.rhs == 0.0);

        let bsc = JointTable::binary_symmetric(0.25).unwrap();
        let r = fano_check(&bsc, 0.75).unwrap();
        assert!(r.pass && r.slack.abs() < 1e-12);

        let indep = JointTable::new(4, 4, vec![1.0 / 16.0; 16]).unwrap();
        let r = fano_check(&indep, 0.25).unwrap();
        let expect = binary_entropy(0.25).unwrap() + 0.75 * 3f64.log2();
        assert!((r.lhs - expect).abs() < 1e-15);
        assert!((r.lhs - 2.0).abs() < 1e-12 && (r.rhs - 2.0).abs() < 1e-12 && r.pass);

        let single = JointTable::new(1, 3, vec![0.2, 0.3, 0.5]).unwrap();
        assert!(fano_check(&single, 1.0).unwrap().pass);
        assert!(fano_check(&bsc, 1.2).is_err());
    }

    #[test]
    fn guarantee_examples() {
        let corr = JointTable::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = guarantee_check(&corr).unwrap();
        assert!(r.pass && r.lhs == 1.0 && r.rhs == 1.0);
        let indep = JointTable::new(2, 2, vec![0.25; 4]).unwrap();
        let r = guarantee_check(&indep).unwrap();
        assert!(r.pass && (r.lhs - 0.5).abs() < 1e-15 && (r.rhs - 0.5).abs() < 1e-15);
        let r = guarantee_check(&JointTable::binary_symmetric(0.25).unwrap()).unwrap();
        assert!(r.pass && (r.rhs - 0.570).abs() < 1e-3);
        assert!((r.rhs - (-binary_entropy(0.25).unwrap()).exp2()).abs() < 1e-15);
    }

    #[test]
    fn quantum_fano_examples() {
        let b = bell();
        let r = quantum_fano_check(&b, &b, 2).unwrap();
        assert!(r.pass && r.lhs.abs() < 1e-9 && r.rhs.abs() < 1e-9);

        let mixed = DensityOperator::maximally_mixed(vec![2, 2]).unwrap();
        let r = quantum_fano_check(&b, &mixed, 2).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-9 && (r.rhs - 2.0).abs() < 1e-9 && r.pass);

        let half = apply_channel(&depolarizing(2, 0.5).unwrap(), &b, 1).unwrap();
        let r = quantum_fano_check(&b, &half, 2).unwrap();
        // Spectrum of the depolarized Bell state: 1 − 3λ/4 once, λ/4 three times.
        let spectrum = [0.625, 0.125, 0.125, 0.125];
        let h: f64 = spectrum.iter().map(|&x: &f64| -x * x.log2()).sum();
        assert!((r.rhs - h).abs() < 1e-9);
        assert!((h - 1.5488).abs() < 1e-4);
        let p: f64 = 0.625;
        let lhs = -(p * p.log2() + (1.0 - p) * (1.0 - p).log2()) + (1.0 - p) * 3f64.log2();
        assert!((r.lhs - lhs).abs() < 1e-12 && r.pass);
    }

    #[test]
    fn minimax_bound_examples() {
        assert!((minimax_bound(2.0, 4, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(minimax_bound(1.0, 2, 1.0).unwrap(), 0.0);
        assert!((minimax_bound(1.5, 4, 0.04).unwrap() - 0.01).abs() < 1e-15);
        assert!(minimax_bound(1.0, 1, 1.0).is_err());
    }

    #[test]
    fn learning_guarantee_examples() {
        assert_eq!(learning_guarantee_bound(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(learning_guarantee_bound(1.0, 1.0).unwrap(), -1.0);
        let h = binary_entropy(0.25).unwrap();
        let v = learning_guarantee_bound(h, 1.0).unwrap();
        assert!((v.exp2() - 0.570).abs() < 1e-3);
        assert!(learning_guarantee_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn dephasing_examples() {
        let r = dephasing_reduction_check(&bell()).unwrap();
        assert!(r.pass && (r.lhs - 1.0).abs() < 1e-6);
        let mixed = DensityOperator::maximally_mixed(vec![2, 2]).unwrap();
        let r = dephasing_reduction_check(&mixed).unwrap();
        assert!(r.pass && (r.rhs - 0.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random::random_density(&mut rng, &[3, 3], 4);
        let r = dephasing_reduction_check(&rho).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn singlet_fano_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let d = rng.random_range(2..=3);
            let rank = rng.random_range(1..=d * d);
            let rho = random::random_density(&mut rng, &[d, d], rank);
            assert!(singlet_fano_check(&rho).unwrap().pass);
        }
    }

    #[test]
    fn report_orientation() {
        let r = BoundReport::inequality("x", 1.0, 1.0 + 5e-10, ANALYTIC_TOL, "");
        assert!(r.pass);
        let r = BoundReport::inequality("x", 1.0, 1.0 + 2e-9, ANALYTIC_TOL, "");
        assert!(!r.pass);
        let r = BoundReport::equality("x", 1.0, 1.0 + 2e-7, SDP_TOL, "");
        assert!(r.pass && r.slack < 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn classical_checks_pass(seed in any::<u64>(), a in 1usize..=5, b in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random::random_table(&mut rng, a, b);
            let map = exhaustive_map_success(&t).unwrap();
            prop_assert!(fano_check(&t, map).unwrap().pass);
            prop_assert!(guarantee_check(&t).unwrap().pass);
            prop_assert!(hmin_below_shannon_check(&t).unwrap().pass);
        }

        #[test]
        fn quantum_fano_passes(seed in any::<u64>(), d in 1usize..=3, rank in 1usize..=9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random::random_pure(&mut rng, &[d, d]);
            let rho = random::random_density(&mut rng, &[d, d], rank);
            prop_assert!(quantum_fano_check(&psi, &rho, d).unwrap().pass);
        }
    }
}
