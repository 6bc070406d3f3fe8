//! Residual 3-tangle of pure three-qubit states.
//!
//! The 3-tangle τ = τ_A(BC) − τ_AB − τ_AC isolates the tripartite
//! entanglement a pure state carries beyond its pairwise 2-tangles
//! (squared concurrences); it is 1 for GHZ, 0 for W and product states,
//! and symmetric under relabeling the parties. Three routes are
//! implemented and cross-checked:
//!
//! - [`tau3_residual`]: the defining difference, with τ_A(BC) = 4 det ρ_A
//!   and the pair tangles from the concurrence oracle,
//! - [`tau3_taufinal`]: τ = 2(1 − Tr ρ_A² − Tr ρ_B² + Tr ρ_C² − τ_AB),
//!   which needs only single-party purities and one pair concurrence,
//! - [`tau3_tracediff`]: |τ|² = 8((Tr ρ_AB ρ̃_AB)² − Tr((ρ_AB ρ̃_AB)²)),
//!   valid because two-party reductions of a pure three-qubit state are
//!   rank 2, with the moments taken from the permutation-circuit engine.
//!
//! All of this is only defined for pure states; mixed inputs are rejected
//! unless explicitly overridden, in which case the output is stamped
//! unreliable.

use crate::concurrence::{moments_direct, spin_flip_direct, wootters_concurrence};
use crate::error::{Error, Result};
use crate::interferometer::{
    ensemble_power, prob_zero, simulate_statevector, CircuitInput, Gate, GateCircuit,
    ENSEMBLE_WEIGHT_FLOOR,
};
use crate::momentcircuits::{self, CircuitMode};
use crate::par;
use crate::states::{DensityMatrix, PureState};
use num_complex::Complex64;
use serde::Serialize;

/// A state counts as pure when Tr ρ² ≥ 1 − PURITY_TOL.
pub const PURITY_TOL: f64 = 1e-8;

/// Which formula produced a tangle value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TangleMethod {
    Residual,
    TauFinal,
    TraceDiff,
}

/// Measured ingredients kept for audit.
#[derive(Debug, Clone, Serialize)]
pub struct TangleComponents {
    /// Tr ρ_A², Tr ρ_B², Tr ρ_C².
    pub purities: [f64; 3],
    /// Pair 2-tangles τ_AB, τ_AC (squared concurrences), when used.
    pub tau_ab: Option<f64>,
    pub tau_ac: Option<f64>,
    /// First two moments of ρ_AB ρ̃_AB, when used.
    pub moments_ab: Option<[f64; 2]>,
}

/// A 3-tangle value with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct TangleValue {
    pub tau: f64,
    pub method: TangleMethod,
    pub components: TangleComponents,
    /// Set when the purity guard was overridden on a mixed input.
    pub unreliable: bool,
}

fn require_three_qubit(psi: &PureState) -> Result<()> {
    if psi.dims() != [2, 2, 2] {
        return Err(Error::DimMismatch {
            context: "three-qubit pure state required",
            got: psi.dim(),
            expected: 8,
        });
    }
    Ok(())
}

fn purities(psi: &PureState) -> Result<[f64; 3]> {
    Ok([
        psi.reduced(&[0])?.purity(),
        psi.reduced(&[1])?.purity(),
        psi.reduced(&[2])?.purity(),
    ])
}

/// det ρ = (1 − Tr ρ²)/2 for a unit-trace 2×2 matrix.
fn det_from_purity(purity: f64) -> f64 {
    0.5 * (1.0 - purity)
}

/// τ = 4 det ρ_A − C²(ρ_AB) − C²(ρ_AC).
pub fn tau3_residual(psi: &PureState) -> Result<TangleValue> {
    require_three_qubit(psi)?;
    let purities = purities(psi)?;
    let (c_ab, _) = wootters_concurrence(&psi.reduced(&[0, 1])?)?;
    let (c_ac, _) = wootters_concurrence(&psi.reduced(&[0, 2])?)?;
    let tau_ab = c_ab * c_ab;
    let tau_ac = c_ac * c_ac;
    let tau = 4.0 * det_from_purity(purities[0]) - tau_ab - tau_ac;
    Ok(TangleValue {
        tau: tau.max(0.0),
        method: TangleMethod::Residual,
        components: TangleComponents {
            purities,
            tau_ab: Some(tau_ab),
            tau_ac: Some(tau_ac),
            moments_ab: None,
        },
        unreliable: false,
    })
}

/// τ = 2(1 − Tr ρ_A² − Tr ρ_B² + Tr ρ_C² − τ_AB).
pub fn tau3_taufinal(psi: &PureState) -> Result<TangleValue> {
    require_three_qubit(psi)?;
    let purities = purities(psi)?;
    let (c_ab, _) = wootters_concurrence(&psi.reduced(&[0, 1])?)?;
    let tau_ab = c_ab * c_ab;
    let tau = 2.0 * (1.0 - purities[0] - purities[1] + purities[2] - tau_ab);
    Ok(TangleValue {
        tau: tau.max(0.0),
        method: TangleMethod::TauFinal,
        components: TangleComponents {
            purities,
            tau_ab: Some(tau_ab),
            tau_ac: None,
            moments_ab: None,
        },
        unreliable: false,
    })
}

/// τ = √(8 max(0, p₁² − p₂)) with p₁, p₂ the first two moments of
/// ρ_AB ρ̃_AB measured by the permutation-circuit engine.
pub fn tau3_tracediff(psi: &PureState) -> Result<TangleValue> {
    require_three_qubit(psi)?;
    let rho_ab = psi.reduced(&[0, 1])?;
    let p1 = momentcircuits::moment_from_terms(1, &rho_ab)?;
    let p2 = momentcircuits::moment_from_terms(2, &rho_ab)?;
    let radicand = p1 * p1 - p2;
    if radicand < -PURITY_TOL {
        return Err(Error::ParamOutOfRange(format!(
            "negative tau^2 radicand {radicand:e}; input is not a pure three-qubit state"
        )));
    }
    let tau = (8.0 * radicand.max(0.0)).sqrt();
    Ok(TangleValue {
        tau,
        method: TangleMethod::TraceDiff,
        components: TangleComponents {
            purities: purities(psi)?,
            tau_ab: None,
            tau_ac: None,
            moments_ab: Some([p1, p2]),
        },
        unreliable: false,
    })
}

/// Purity guard shared by the density-matrix entry points: reject mixed
/// inputs unless overridden.
pub fn pure_from_density(rho: &DensityMatrix, override_purity: bool) -> Result<(PureState, bool)> {
    if rho.dims() != [2, 2, 2] {
        return Err(Error::DimMismatch {
            context: "three-qubit state required",
            got: rho.dim(),
            expected: 8,
        });
    }
    let purity = rho.purity();
    let pure_enough = purity >= 1.0 - PURITY_TOL;
    if !pure_enough && !override_purity {
        return Err(Error::NotPure {
            purity,
            threshold: 1.0 - PURITY_TOL,
        });
    }
    // Dominant eigenvector as the pure representative.
    let ensemble = rho.ensemble(ENSEMBLE_WEIGHT_FLOOR)?;
    let psi = ensemble
        .into_iter()
        .next()
        .map(|(_, s)| s)
        .ok_or(Error::NotPure {
            purity,
            threshold: 1.0 - PURITY_TOL,
        })?;
    Ok((psi, !pure_enough))
}

// ---------------------------------------------------------------------------
// Combined purity circuit

/// Gate-level combined purity circuit: two copies of a three-qubit state,
/// three control qubits, control i toggling the SWAP of party i's rails.
/// Each control's marginal P(0) is (1 + Tr ρ_i²)/2 simultaneously, so one
/// run serves all three purities.
///
/// Layout: controls 0..3, copy-1 rails 3..6, copy-2 rails 6..9.
pub fn combined_purity_circuit() -> Result<GateCircuit> {
    let n = 9;
    let mut gates = Vec::new();
    for c in 0..3 {
        gates.push(Gate::Hadamard(c));
    }
    for party in 0..3 {
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(3 + party, 6 + party);
        gates.push(Gate::ControlledPermutation {
            controls: vec![party],
            map,
        });
    }
    for c in 0..3 {
        gates.push(Gate::Hadamard(c));
    }
    GateCircuit::new(n, gates, 0)
}

/// Run the combined purity circuit on two copies of `rho3` and return the
/// three marginal-visibility purity estimates (Tr ρ_A², Tr ρ_B², Tr ρ_C²).
pub fn combined_purities_gate_level(rho3: &DensityMatrix) -> Result<[f64; 3]> {
    if rho3.dims() != [2, 2, 2] {
        return Err(Error::DimMismatch {
            context: "three-qubit state required",
            got: rho3.dim(),
            expected: 8,
        });
    }
    let circ = combined_purity_circuit()?;
    let ensemble = rho3.ensemble(ENSEMBLE_WEIGHT_FLOOR)?;
    let members = ensemble_power(&ensemble, 2);
    // Weighted marginals over the ensemble, accumulated per control.
    let per_member: Vec<Result<[f64; 3]>> = par::map(&members, |(w, amps)| {
        let mut full = vec![Complex64::new(0.0, 0.0); amps.len() << 3];
        full[..amps.len()].copy_from_slice(amps);
        let state = simulate_statevector(&circ, &full, 0.0)?;
        Ok([
            w * prob_zero(&state, 0, circ.n_qubits),
            w * prob_zero(&state, 1, circ.n_qubits),
            w * prob_zero(&state, 2, circ.n_qubits),
        ])
    });
    let mut p0 = [0.0f64; 3];
    for m in per_member {
        let m = m?;
        for (acc, v) in p0.iter_mut().zip(m) {
            *acc += v;
        }
    }
    // P(0) = (1 + tr rho_i^2)/2 per control.
    Ok([
        2.0 * p0[0] - 1.0,
        2.0 * p0[1] - 1.0,
        2.0 * p0[2] - 1.0,
    ])
}

// ---------------------------------------------------------------------------
// Naive |tau|^2 circuit

/// Result of the single-interferometer |τ|² measurement.
#[derive(Debug, Clone, Serialize)]
pub struct NaiveTauSq {
    /// Signed visibility of the fringe.
    pub visibility: f64,
    /// |τ|² from the trace-difference identity, for comparison.
    pub tau_sq: f64,
    /// visibility / |τ|²; a state-independent constant.
    pub ratio: f64,
}

/// The layout of the naive circuit: primary, box toggle, 4 aux ancillas,
/// then 4 copies of a two-qubit state (14 qubits).
fn naive_layout_qubits() -> usize {
    2 + 4 + 8
}

fn naive_rail_a(copy: usize) -> usize {
    6 + 2 * copy
}

fn naive_rail_b(copy: usize) -> usize {
    6 + 2 * copy + 1
}

/// Gate-level naive |τ|² circuit: the m = 2 moment circuit with its
/// matrix-multiplication box controlled by one extra |−⟩ ancilla that
/// gives the box-on branch a minus sign.
pub fn naive_tau_sq_gate_circuit() -> Result<GateCircuit> {
    let n = naive_layout_qubits();
    let p = 0usize;
    let toggle = 1usize;
    let mut gates = vec![Gate::Hadamard(p)];
    for anc in [toggle, 2, 3, 4, 5] {
        gates.push(Gate::Hadamard(anc));
        gates.push(Gate::Phase(anc, std::f64::consts::PI));
        gates.push(Gate::ControlledZ(p, anc));
    }
    gates.push(Gate::ChiPhase {
        qubit: p,
        scale: -1.0,
    });
    // The multiplication box chains the two rho copies (0 and 2); it fires
    // only when both the primary and the toggle are on.
    let base = momentcircuits::base_permutation(2);
    let mut map: Vec<usize> = (0..n).collect();
    for j in 0..4 {
        map[naive_rail_a(j)] = naive_rail_a(base.perm_a()[j]);
        map[naive_rail_b(j)] = naive_rail_b(base.perm_b()[j]);
    }
    gates.push(Gate::ControlledPermutation {
        controls: vec![p, toggle],
        map,
    });
    // Slot swaps, doubly controlled as in the plain m = 2 circuit; slot k
    // pairs copies 2k and 2k+1, aux ancillas 2+2k (A) and 3+2k (B).
    for k in 0..2 {
        let mut swap_a: Vec<usize> = (0..n).collect();
        swap_a.swap(naive_rail_a(2 * k), naive_rail_a(2 * k + 1));
        gates.push(Gate::ControlledPermutation {
            controls: vec![p, 2 + 2 * k],
            map: swap_a,
        });
        let mut swap_b: Vec<usize> = (0..n).collect();
        swap_b.swap(naive_rail_b(2 * k), naive_rail_b(2 * k + 1));
        gates.push(Gate::ControlledPermutation {
            controls: vec![p, 3 + 2 * k],
            map: swap_b,
        });
    }
    gates.push(Gate::Hadamard(p));
    GateCircuit::new(n, gates, p)
}

/// Evaluate the naive |τ|² interferometer on a pure three-qubit state.
///
/// Analytic mode evaluates the signed sum (p₁² − p₂)/2⁵ from the term
/// engine; gate-level mode simulates the 14-qubit circuit on four copies
/// of ρ_AB. Both report the measured visibility over |τ|², which the
/// five |−⟩ ancillas fix at 1/256.
pub fn naive_tau_sq_circuit(psi: &PureState, mode: CircuitMode) -> Result<NaiveTauSq> {
    require_three_qubit(psi)?;
    let rho_ab = psi.reduced(&[0, 1])?;
    let p1 = momentcircuits::moment_from_terms(1, &rho_ab)?;
    let p2 = momentcircuits::moment_from_terms(2, &rho_ab)?;
    let tau_sq = 8.0 * (p1 * p1 - p2).max(0.0);
    let visibility = match mode {
        CircuitMode::Analytic => (p1 * p1 - p2) / 32.0,
        CircuitMode::GateLevel => {
            let circ = naive_tau_sq_gate_circuit()?;
            let ensemble = rho_ab.ensemble(ENSEMBLE_WEIGHT_FLOOR)?;
            let members = ensemble_power(&ensemble, 4);
            let input = CircuitInput::Ensemble(
                members
                    .into_iter()
                    .map(|(w, amps)| {
                        let mut full = vec![Complex64::new(0.0, 0.0); amps.len() << 6];
                        full[..amps.len()].copy_from_slice(&amps);
                        (w, full)
                    })
                    .collect(),
            );
            // The fringe amplitude is real, so two phase points pin the
            // signed visibility: v = P(0)|_{chi=0} - P(0)|_{chi=pi}.
            let p_at_0 =
                crate::interferometer::simulate_gate_circuit(&circ, &input, 0.0)?;
            let p_at_pi =
                crate::interferometer::simulate_gate_circuit(&circ, &input, std::f64::consts::PI)?;
            p_at_0 - p_at_pi
        }
    };
    let ratio = if tau_sq.abs() > 1e-14 {
        visibility / tau_sq
    } else {
        f64::NAN
    };
    Ok(NaiveTauSq {
        visibility,
        tau_sq,
        ratio,
    })
}

// ---------------------------------------------------------------------------
// Identities

/// Pair spectra and party determinants behind the relabeling identities.
#[derive(Debug, Clone, Serialize)]
pub struct TanglePairReport {
    /// λ₁λ₂ for the AB, AC, BC reduced states.
    pub lambda_products: [f64; 3],
    /// 4 det ρ_i per party.
    pub four_det: [f64; 3],
    /// max_i |Tr(ρ_ij ρ̃_ij) + Tr(ρ_ik ρ̃_ik) − 4 det ρ_i|.
    pub pair_sum_residual: f64,
    /// max − min of τ over the six party relabelings.
    pub relabeling_spread: f64,
}

/// Verify the pair-sum identity, the λ₁λ₂ relabeling symmetry, and the
/// relabeling invariance of τ itself.
pub fn tangle_pair_identities(psi: &PureState) -> Result<TanglePairReport> {
    require_three_qubit(psi)?;
    let pairs = [[0usize, 1], [0, 2], [1, 2]];
    let mut lambda_products = [0.0f64; 3];
    let mut first_moments = [0.0f64; 3];
    for (slot, pair) in pairs.iter().enumerate() {
        let rho = psi.reduced(pair)?;
        let (_, spec) = wootters_concurrence(&rho)?;
        lambda_products[slot] = spec.lambdas[0] * spec.lambdas[1];
        first_moments[slot] = rho.mat().matmul(&spin_flip_direct(&rho)?)?.trace().re;
    }
    let p = purities(psi)?;
    let four_det = [
        4.0 * det_from_purity(p[0]),
        4.0 * det_from_purity(p[1]),
        4.0 * det_from_purity(p[2]),
    ];
    // Party i's determinant identity uses the two pairs containing i:
    // A -> AB + AC, B -> AB + BC, C -> AC + BC.
    let sums = [
        first_moments[0] + first_moments[1],
        first_moments[0] + first_moments[2],
        first_moments[1] + first_moments[2],
    ];
    let pair_sum_residual = sums
        .iter()
        .zip(&four_det)
        .map(|(s, d)| (s - d).abs())
        .fold(0.0, f64::max);

    let relabelings: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut taus = Vec::with_capacity(6);
    for perm in &relabelings {
        let permuted = psi.permute_parties(perm)?;
        taus.push(tau3_residual(&permuted)?.tau);
    }
    let t_max = taus.iter().cloned().fold(f64::MIN, f64::max);
    let t_min = taus.iter().cloned().fold(f64::MAX, f64::min);

    Ok(TanglePairReport {
        lambda_products,
        four_det,
        pair_sum_residual,
        relabeling_spread: t_max - t_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_named, random_mixed, random_pure, NamedState};

    fn ghz() -> PureState {
        make_named(NamedState::Ghz3).unwrap().as_pure().unwrap().clone()
    }

    fn w3() -> PureState {
        make_named(NamedState::W3).unwrap().as_pure().unwrap().clone()
    }

    fn product000() -> PureState {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(1.0, 0.0);
        PureState::new(amps, vec![2, 2, 2]).unwrap()
    }

    #[test]
    fn residual_on_canonical_states() {
        // GHZ: det rho_A = 1/4 and both pair concurrences vanish.
        let t = tau3_residual(&ghz()).unwrap();
        assert!((t.tau - 1.0).abs() < 1e-10);
        // W: 4 * 2/9 = 4/9 + 4/9 exactly.
        let t = tau3_residual(&w3()).unwrap();
        assert!(t.tau.abs() < 1e-10);
        assert!((t.components.tau_ab.unwrap() - 4.0 / 9.0).abs() < 1e-10);
        let t = tau3_residual(&product000()).unwrap();
        assert!(t.tau.abs() < 1e-12);
    }

    #[test]
    fn taufinal_on_canonical_states() {
        let t = tau3_taufinal(&ghz()).unwrap();
        assert!((t.tau - 1.0).abs() < 1e-10);
        assert_eq!(t.components.purities.map(|p| (p * 2.0).round()), [1.0, 1.0, 1.0]);
        let t = tau3_taufinal(&w3()).unwrap();
        assert!(t.tau.abs() < 1e-10);
        for p in t.components.purities {
            assert!((p - 5.0 / 9.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tracediff_on_canonical_states() {
        // GHZ: lambda = (1/2, 1/2, 0, 0), so p1 = 1/2, p2 = 1/8.
        let t = tau3_tracediff(&ghz()).unwrap();
        assert!((t.tau - 1.0).abs() < 1e-10);
        let [p1, p2] = t.components.moments_ab.unwrap();
        assert!((p1 - 0.5).abs() < 1e-10);
        assert!((p2 - 0.125).abs() < 1e-10);

        let t = tau3_tracediff(&w3()).unwrap();
        assert!(t.tau.abs() < 1e-8);
        let t = tau3_tracediff(&product000()).unwrap();
        assert!(t.tau.abs() < 1e-10);
    }

    #[test]
    fn methods_agree_on_random_pure_states() {
        for seed in 0..100 {
            let psi = random_pure(3, seed + 7000).unwrap();
            let a = tau3_residual(&psi).unwrap().tau;
            let b = tau3_taufinal(&psi).unwrap().tau;
            let c = tau3_tracediff(&psi).unwrap().tau;
            assert!((a - b).abs() < 1e-8, "seed {seed}: {a} vs {b}");
            assert!((a - c).abs() < 1e-8, "seed {seed}: {a} vs {c}");
            assert!((0.0..=1.0 + 1e-8).contains(&a));
        }
    }

    #[test]
    fn rank_two_property_of_reductions() {
        // Two-party reductions of pure three-qubit states are rank 2, so
        // the lower two concurrence-spectrum values vanish.
        for seed in 0..50 {
            let psi = random_pure(3, seed + 7500).unwrap();
            for pair in [[0usize, 1], [0, 2], [1, 2]] {
                let (_, spec) = wootters_concurrence(&psi.reduced(&pair).unwrap()).unwrap();
                assert!(spec.lambdas[2] < 1e-8);
                assert!(spec.lambdas[3] < 1e-8);
            }
        }
    }

    #[test]
    fn purity_guard() {
        let mixed = random_mixed(3, 8, 1).unwrap();
        assert!(matches!(
            pure_from_density(&mixed, false),
            Err(Error::NotPure { .. })
        ));
        let (psi, unreliable) = pure_from_density(&mixed, true).unwrap();
        assert!(unreliable);
        assert_eq!(psi.dims(), &[2, 2, 2]);

        let pure = random_pure(3, 2).unwrap().to_density();
        let (_, unreliable) = pure_from_density(&pure, false).unwrap();
        assert!(!unreliable);
    }

    #[test]
    fn combined_purity_circuit_matches_partial_trace() {
        for (psi, expect) in [
            (ghz(), [0.5, 0.5, 0.5]),
            (product000(), [1.0, 1.0, 1.0]),
            (w3(), [5.0 / 9.0, 5.0 / 9.0, 5.0 / 9.0]),
        ] {
            let got = combined_purities_gate_level(&psi.to_density()).unwrap();
            for (g, e) in got.iter().zip(expect) {
                assert!((g - e).abs() < 1e-10, "{got:?} vs {expect:?}");
            }
        }

        for seed in 0..10 {
            let psi = random_pure(3, seed + 7700).unwrap();
            let got = combined_purities_gate_level(&psi.to_density()).unwrap();
            let want = purities(&psi).unwrap();
            for (g, e) in got.iter().zip(want) {
                assert!((g - e).abs() < 1e-10);
            }
        }

        // Mixed three-qubit inputs run through the ensemble path.
        let mixed = random_mixed(3, 4, 5).unwrap();
        let got = combined_purities_gate_level(&mixed).unwrap();
        for (i, g) in got.iter().enumerate() {
            let want = mixed.reduced(&[i]).unwrap().purity();
            assert!((g - want).abs() < 1e-10);
        }
    }

    #[test]
    fn naive_circuit_ghz_and_product() {
        // GHZ: p1^2 - p2 = 1/8, the naive fringe visibility is 1/256 of
        // |tau|^2 = 1.
        let r = naive_tau_sq_circuit(&ghz(), CircuitMode::Analytic).unwrap();
        assert!((r.visibility - 1.0 / 256.0).abs() < 1e-12);
        assert!((r.tau_sq - 1.0).abs() < 1e-10);
        assert!((r.ratio - 1.0 / 256.0).abs() < 1e-12);

        let r = naive_tau_sq_circuit(&product000(), CircuitMode::Analytic).unwrap();
        assert!(r.visibility.abs() < 1e-12);
    }

    #[test]
    fn naive_circuit_gate_level_matches_analytic() {
        for seed in [0u64, 1] {
            let psi = random_pure(3, seed + 7900).unwrap();
            let a = naive_tau_sq_circuit(&psi, CircuitMode::Analytic).unwrap();
            let g = naive_tau_sq_circuit(&psi, CircuitMode::GateLevel).unwrap();
            assert!(
                (a.visibility - g.visibility).abs() < 1e-10,
                "seed {seed}: {} vs {}",
                a.visibility,
                g.visibility
            );
        }
    }

    #[test]
    fn pair_identities() {
        let r = tangle_pair_identities(&ghz()).unwrap();
        for lp in r.lambda_products {
            assert!((lp - 0.25).abs() < 1e-10);
        }
        assert!(r.pair_sum_residual < 1e-10);
        assert!(r.relabeling_spread < 1e-10);

        let r = tangle_pair_identities(&w3()).unwrap();
        for lp in r.lambda_products {
            assert!(lp.abs() < 1e-8);
        }
        assert!(r.pair_sum_residual < 1e-10);

        for seed in 0..50 {
            let psi = random_pure(3, seed + 8000).unwrap();
            let r = tangle_pair_identities(&psi).unwrap();
            assert!(r.pair_sum_residual < 1e-10, "seed {seed}");
            assert!(r.relabeling_spread < 1e-8, "seed {seed}");
            let spread = r
                .lambda_products
                .iter()
                .cloned()
                .fold(f64::MIN, f64::max)
                - r.lambda_products.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-8, "seed {seed}: {:?}", r.lambda_products);
        }
    }
}
