//! Controlled-permutation circuits for the moments Tr((ρρ̃)^m).
//!
//! Expanding ρ̃ = ρ − 1⊗ρ_B − ρ_A⊗1 + 1 in each of the m ρ̃ factors of
//! (ρρ̃)^m turns the moment into a signed sum of 4^m traces, each of which
//! is Tr(P · ρ^⊗2m) for a permutation P of the A and B rails of 2m state
//! copies. A term's permutation is a fixed wiring (the cyclic
//! matrix-multiplication chain over the ρ copies) composed with up to two
//! controlled rail swaps per ρ̃ slot: the A-swap participates exactly when
//! the chosen factor carries the A subsystem ({ρ, ρ_A⊗1}) and the B-swap
//! when it carries B ({ρ, 1⊗ρ_B}). The term's sign is the product of a −1
//! for every slot whose factor carries exactly one subsystem.
//!
//! Three evaluation routes, used to check one another:
//!
//! - [`eval_term_exact`] contracts the rail wiring directly, treating each
//!   copy of ρ as a 4-index tensor. This is the circuit-semantics engine,
//!   independent of matrix multiplication.
//! - [`full_circuit_visibility`] measures the whole signed sum in one
//!   interferometer run with 2m auxiliary |−⟩ ancillas, paying a 1/4^m
//!   visibility factor.
//! - [`per_term_estimate`] measures each term separately at full
//!   visibility and recombines the signs classically.

use crate::error::{Error, Result};
use crate::interferometer::{
    chi_grid, ensemble_power, fit_fringe, fit_fringe_full, sample_fringe_law_rng, CircuitInput,
    Gate, GateCircuit, VisibilityEstimate, ENSEMBLE_WEIGHT_FLOOR,
};
use crate::par;
use crate::states::rng::SeededRng;
use crate::states::DensityMatrix;
use num_complex::Complex64;

/// Highest moment order supported (the spectrum has four points).
pub const MAX_MOMENT: usize = 4;

/// A bijection on the rail indices of `n_copies` state copies, independent
/// for the A and B rails. The value semantics is
///
/// ```text
/// Tr(P ρ^⊗n) = Σ_x Π_j ρ[(x^A_{pa(j)}, x^B_{pb(j)}), (x^A_j, x^B_j)]
/// ```
///
/// i.e. `pa(j)` names the copy whose A row-index is contracted against
/// copy j's A column-index (equivalently: rail j's content moves to rail
/// `pa(j)` in the circuit picture).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RailPermutation {
    perm_a: Vec<usize>,
    perm_b: Vec<usize>,
}

impl RailPermutation {
    pub fn new(perm_a: Vec<usize>, perm_b: Vec<usize>) -> Result<Self> {
        if perm_a.len() != perm_b.len() {
            return Err(Error::DimMismatch {
                context: "rail permutation lengths",
                got: perm_b.len(),
                expected: perm_a.len(),
            });
        }
        for perm in [&perm_a, &perm_b] {
            let n = perm.len();
            let mut seen = vec![false; n];
            for &to in perm {
                if to >= n || seen[to] {
                    return Err(Error::ParamOutOfRange(
                        "rail permutation is not a bijection".into(),
                    ));
                }
                seen[to] = true;
            }
        }
        Ok(RailPermutation { perm_a, perm_b })
    }

    pub fn identity(n_copies: usize) -> Self {
        RailPermutation {
            perm_a: (0..n_copies).collect(),
            perm_b: (0..n_copies).collect(),
        }
    }

    pub fn n_copies(&self) -> usize {
        self.perm_a.len()
    }

    pub fn perm_a(&self) -> &[usize] {
        &self.perm_a
    }

    pub fn perm_b(&self) -> &[usize] {
        &self.perm_b
    }

    /// Conjugate both rails by the same relabeling of copies:
    /// σ ↦ π σ π⁻¹.
    pub fn relabel(&self, relabeling: &[usize]) -> Result<RailPermutation> {
        let n = self.n_copies();
        if relabeling.len() != n {
            return Err(Error::DimMismatch {
                context: "relabeling length",
                got: relabeling.len(),
                expected: n,
            });
        }
        let conj = |perm: &[usize]| -> Vec<usize> {
            let mut out = vec![0; n];
            for j in 0..n {
                out[relabeling[j]] = relabeling[perm[j]];
            }
            out
        };
        RailPermutation::new(conj(&self.perm_a), conj(&self.perm_b))
    }
}

/// One term of the expanded moment sum: an ancilla on/off configuration
/// with its sign and rail wiring.
#[derive(Debug, Clone)]
pub struct TermCircuit {
    pub moment_order: usize,
    /// Per ρ̃ slot: (A-swap on, B-swap on).
    pub ancilla_config: Vec<(bool, bool)>,
    pub sign: i8,
    pub permutation: RailPermutation,
    pub copies_used: usize,
}

impl TermCircuit {
    /// Slot letters: `R` for ρ, `A` for ρ_A⊗1, `B` for 1⊗ρ_B, `I` for 1.
    pub fn slot_word(&self) -> String {
        self.ancilla_config
            .iter()
            .map(|&(a, b)| match (a, b) {
                (true, true) => 'R',
                (true, false) => 'A',
                (false, true) => 'B',
                (false, false) => 'I',
            })
            .collect()
    }

    /// Ancilla bits as a string, A then B per slot.
    pub fn config_bits(&self) -> String {
        self.ancilla_config
            .iter()
            .flat_map(|&(a, b)| [if a { '1' } else { '0' }, if b { '1' } else { '0' }])
            .collect()
    }
}

fn check_moment_order(m: usize) -> Result<()> {
    if m < 1 || m > MAX_MOMENT {
        return Err(Error::ParamOutOfRange(format!(
            "moment order {m} outside 1..={MAX_MOMENT}"
        )));
    }
    Ok(())
}

fn require_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimMismatch {
            context: "two-qubit state required",
            got: rho.dim(),
            expected: 4,
        });
    }
    Ok(())
}

/// Cyclic previous-participant map: participants chain in copy order,
/// everything else self-traces.
fn prev_cycle(n_copies: usize, participants: &[usize]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n_copies).collect();
    let k = participants.len();
    for (i, &p) in participants.iter().enumerate() {
        perm[p] = participants[(i + k - 1) % k];
    }
    perm
}

/// Build the term for one ancilla configuration (slot bits).
pub fn term_for_config(m: usize, config: &[(bool, bool)]) -> Result<TermCircuit> {
    check_moment_order(m)?;
    if config.len() != m {
        return Err(Error::DimMismatch {
            context: "ancilla config length",
            got: config.len(),
            expected: m,
        });
    }
    let n_copies = 2 * m;
    // Copies alternate ρ-chain (even index) and ρ̃ slot (odd index);
    // slot k is copy 2k+1.
    let mut parts_a: Vec<usize> = Vec::new();
    let mut parts_b: Vec<usize> = Vec::new();
    for j in 0..n_copies {
        if j % 2 == 0 {
            parts_a.push(j);
            parts_b.push(j);
        } else {
            let (a_on, b_on) = config[(j - 1) / 2];
            if a_on {
                parts_a.push(j);
            }
            if b_on {
                parts_b.push(j);
            }
        }
    }
    let permutation = RailPermutation::new(
        prev_cycle(n_copies, &parts_a),
        prev_cycle(n_copies, &parts_b),
    )?;
    let sign = config
        .iter()
        .map(|&(a, b)| if a != b { -1i8 } else { 1 })
        .product();
    Ok(TermCircuit {
        moment_order: m,
        ancilla_config: config.to_vec(),
        sign,
        permutation,
        copies_used: n_copies,
    })
}

/// All 4^m terms of the m-th moment, ordered by ancilla configuration
/// (slot bits A₁B₁A₂B₂... read as a binary number).
pub fn enumerate_terms(m: usize) -> Result<Vec<TermCircuit>> {
    check_moment_order(m)?;
    let n_terms = 1usize << (2 * m);
    let mut out = Vec::with_capacity(n_terms);
    for code in 0..n_terms {
        let config: Vec<(bool, bool)> = (0..m)
            .map(|k| {
                let a = (code >> (2 * m - 1 - 2 * k)) & 1 == 1;
                let b = (code >> (2 * m - 2 - 2 * k)) & 1 == 1;
                (a, b)
            })
            .collect();
        out.push(term_for_config(m, &config)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exact contraction engine

struct Frontier {
    vars: Vec<usize>,
    data: Vec<Complex64>,
}

impl Frontier {
    fn scalar() -> Self {
        Frontier {
            vars: Vec::new(),
            data: vec![Complex64::new(1.0, 0.0)],
        }
    }
}

/// Tr(P ρ^⊗2m) by sequential tensor contraction along the wiring.
///
/// Each copy is a 4-index tensor over bit variables (A row/col, B row/col
/// per copy); copies are absorbed in order and variables are summed out as
/// soon as their last referencing copy has been absorbed. The result of a
/// valid wiring is real; an imaginary part above 1e-8 is an error and
/// anything below is discarded.
pub fn eval_term_exact(term: &TermCircuit, rho: &DensityMatrix) -> Result<f64> {
    require_two_qubit(rho)?;
    let n = term.permutation.n_copies();
    let pa = term.permutation.perm_a();
    let pb = term.permutation.perm_b();

    // Variable ids: A_j = j, B_j = n + j.
    // A_v is referenced by copy v (column role) and copy pa^{-1}(v) (row
    // role); it dies when the later of the two is absorbed.
    let mut pa_inv = vec![0usize; n];
    let mut pb_inv = vec![0usize; n];
    for j in 0..n {
        pa_inv[pa[j]] = j;
        pb_inv[pb[j]] = j;
    }
    let mut last_use = vec![0usize; 2 * n];
    for v in 0..n {
        last_use[v] = v.max(pa_inv[v]);
        last_use[n + v] = v.max(pb_inv[v]);
    }

    let mut frontier = Frontier::scalar();
    for j in 0..n {
        // Roles: [A row, B row, A col, B col] bound to these variables.
        let roles = [pa[j], n + pb[j], j, n + j];
        let mut new_vars = frontier.vars.clone();
        for &v in &roles {
            if !new_vars.contains(&v) {
                new_vars.push(v);
            }
        }
        let old_pos: Vec<usize> = frontier
            .vars
            .iter()
            .map(|v| new_vars.iter().position(|w| w == v).unwrap())
            .collect();
        let role_pos: Vec<usize> = roles
            .iter()
            .map(|v| new_vars.iter().position(|w| w == v).unwrap())
            .collect();

        let size = 1usize << new_vars.len();
        let mut data = vec![Complex64::new(0.0, 0.0); size];
        let nf = new_vars.len();
        for (idx, slot) in data.iter_mut().enumerate() {
            let bit = |pos: usize| (idx >> (nf - 1 - pos)) & 1;
            let mut old_idx = 0usize;
            for (k, &p) in old_pos.iter().enumerate() {
                old_idx |= bit(p) << (frontier.vars.len() - 1 - k);
            }
            let row = 2 * bit(role_pos[0]) + bit(role_pos[1]);
            let col = 2 * bit(role_pos[2]) + bit(role_pos[3]);
            *slot = frontier.data[old_idx] * rho.mat().at(row, col);
        }

        // Sum out every variable whose last use is this copy.
        let keep: Vec<usize> = new_vars
            .iter()
            .copied()
            .filter(|&v| last_use[v] > j)
            .collect();
        let keep_pos: Vec<usize> = keep
            .iter()
            .map(|v| new_vars.iter().position(|w| w == v).unwrap())
            .collect();
        let ksize = 1usize << keep.len();
        let mut kdata = vec![Complex64::new(0.0, 0.0); ksize];
        for (idx, &val) in data.iter().enumerate() {
            let bit = |pos: usize| (idx >> (nf - 1 - pos)) & 1;
            let mut kidx = 0usize;
            for (k, &p) in keep_pos.iter().enumerate() {
                kidx |= bit(p) << (keep.len() - 1 - k);
            }
            kdata[kidx] += val;
        }
        frontier = Frontier {
            vars: keep,
            data: kdata,
        };
    }

    debug_assert!(frontier.vars.is_empty());
    let value = frontier.data[0];
    if value.im.abs() > 1e-8 {
        return Err(Error::NotReal { imag: value.im });
    }
    Ok(value.re)
}

/// Tr((ρρ̃)^m) as the signed sum over all enumerated terms. Terms are
/// evaluated in parallel under the `parallel` feature and summed in
/// configuration order, so the result is bit-stable.
pub fn moment_from_terms(m: usize, rho: &DensityMatrix) -> Result<f64> {
    let terms = enumerate_terms(m)?;
    let values: Vec<Result<f64>> = par::map(&terms, |t| eval_term_exact(t, rho));
    let mut total = 0.0;
    for (t, v) in terms.iter().zip(values) {
        total += t.sign as f64 * v?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Gate-level full circuit

/// Qubit layout of the full m-th moment circuit: primary ancilla, 2m
/// auxiliary ancillas, then A and B rails of 2m copies.
#[derive(Debug, Clone, Copy)]
pub struct MomentLayout {
    pub m: usize,
}

impl MomentLayout {
    pub fn n_qubits(&self) -> usize {
        1 + 2 * self.m + 4 * self.m
    }

    pub fn primary(&self) -> usize {
        0
    }

    /// Ancilla controlling slot k's A-swap.
    pub fn aux_a(&self, k: usize) -> usize {
        1 + 2 * k
    }

    /// Ancilla controlling slot k's B-swap.
    pub fn aux_b(&self, k: usize) -> usize {
        2 + 2 * k
    }

    pub fn rail_a(&self, copy: usize) -> usize {
        1 + 2 * self.m + 2 * copy
    }

    pub fn rail_b(&self, copy: usize) -> usize {
        1 + 2 * self.m + 2 * copy + 1
    }

    /// Full-length qubit map for a rail permutation.
    pub fn qubit_map(&self, perm: &RailPermutation) -> Vec<usize> {
        let mut map: Vec<usize> = (0..self.n_qubits()).collect();
        for j in 0..perm.n_copies() {
            map[self.rail_a(j)] = self.rail_a(perm.perm_a()[j]);
            map[self.rail_b(j)] = self.rail_b(perm.perm_b()[j]);
        }
        map
    }
}

/// The base matrix-multiplication wiring: the cyclic chain over the ρ
/// copies (even indices), with every ρ̃ slot passing straight through.
pub fn base_permutation(m: usize) -> RailPermutation {
    let evens: Vec<usize> = (0..m).map(|k| 2 * k).collect();
    RailPermutation::new(prev_cycle(2 * m, &evens), prev_cycle(2 * m, &evens))
        .expect("prev_cycle builds a bijection")
}

/// The full interferometric circuit for ¼^m·Tr((ρρ̃)^m): primary ancilla
/// Hadamard and χ phase, 2m auxiliary ancillas in |−⟩ with controlled-Z to
/// the primary, the primary-controlled base chain, and doubly-controlled
/// rail swaps per slot.
pub fn build_full_circuit(m: usize) -> Result<GateCircuit> {
    check_moment_order(m)?;
    let layout = MomentLayout { m };
    let p = layout.primary();
    let mut gates = vec![Gate::Hadamard(p)];
    for i in 0..2 * m {
        let aux = 1 + i;
        gates.push(Gate::Hadamard(aux));
        gates.push(Gate::Phase(aux, std::f64::consts::PI));
        gates.push(Gate::ControlledZ(p, aux));
    }
    gates.push(Gate::ChiPhase {
        qubit: p,
        scale: -1.0,
    });
    gates.push(Gate::ControlledPermutation {
        controls: vec![p],
        map: layout.qubit_map(&base_permutation(m)),
    });
    for k in 0..m {
        let rho_copy = 2 * k;
        let slot_copy = 2 * k + 1;
        let mut swap_a: Vec<usize> = (0..layout.n_qubits()).collect();
        swap_a.swap(layout.rail_a(rho_copy), layout.rail_a(slot_copy));
        gates.push(Gate::ControlledPermutation {
            controls: vec![p, layout.aux_a(k)],
            map: swap_a,
        });
        let mut swap_b: Vec<usize> = (0..layout.n_qubits()).collect();
        swap_b.swap(layout.rail_b(rho_copy), layout.rail_b(slot_copy));
        gates.push(Gate::ControlledPermutation {
            controls: vec![p, layout.aux_b(k)],
            map: swap_b,
        });
    }
    gates.push(Gate::Hadamard(p));
    GateCircuit::new(layout.n_qubits(), gates, p)
}

/// How to evaluate a full moment circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitMode {
    Analytic,
    GateLevel,
}

/// Signed visibility of the full m-th moment circuit,
/// v·e^{iφ} = Tr((ρρ̃)^m) / 4^m with φ ∈ {0, π}.
///
/// Gate-level mode simulates the explicit circuit on 6m+1 qubits (mixed
/// inputs by rank decomposition, capped at m ≤ 2; pure inputs at m ≤ 3)
/// and fits the exact fringe; it must agree with the analytic value to
/// 1e-10.
pub fn full_circuit_visibility(
    m: usize,
    rho: &DensityMatrix,
    mode: CircuitMode,
) -> Result<VisibilityEstimate> {
    check_moment_order(m)?;
    require_two_qubit(rho)?;
    match mode {
        CircuitMode::Analytic => {
            let signed = moment_from_terms(m, rho)? / 4f64.powi(m as i32);
            Ok(VisibilityEstimate {
                v: signed.abs(),
                phi: if signed < 0.0 { std::f64::consts::PI } else { 0.0 },
                stderr_v: None,
            })
        }
        CircuitMode::GateLevel => {
            let scan = full_circuit_exact_scan(m, rho, &chi_grid(8))?;
            fit_fringe(&scan)
        }
    }
}

/// Exact (noise-free) fringe scan of the gate-level full moment circuit.
pub fn full_circuit_exact_scan(
    m: usize,
    rho: &DensityMatrix,
    chis: &[f64],
) -> Result<crate::interferometer::FringeScan> {
    check_moment_order(m)?;
    require_two_qubit(rho)?;
    let ensemble = rho.ensemble(ENSEMBLE_WEIGHT_FLOOR)?;
    let pure_limit = if ensemble.len() == 1 { 3 } else { 2 };
    if m > pure_limit {
        return Err(Error::SizeLimit {
            context: "gate-level moment circuit",
            needed: m,
            limit: pure_limit,
        });
    }
    let circ = build_full_circuit(m)?;
    let members = ensemble_power(&ensemble, 2 * m);
    let input = CircuitInput::Ensemble(
        members
            .into_iter()
            .map(|(w, amps)| {
                let mut full = vec![Complex64::new(0.0, 0.0); amps.len() << (1 + 2 * m)];
                full[..amps.len()].copy_from_slice(&amps);
                (w, full)
            })
            .collect(),
    );
    crate::interferometer::sample_fringe_circuit(&circ, &input, chis, 0, 0)
}

// ---------------------------------------------------------------------------
// Sampled estimators

/// A sampled moment with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Estimate Tr((ρρ̃)^m) by sampling the full circuit's fringe and undoing
/// the 1/4^m visibility factor. `shots` Bernoulli draws per grid point.
pub fn full_circuit_estimate(
    m: usize,
    rho: &DensityMatrix,
    chis: &[f64],
    shots: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    check_moment_order(m)?;
    require_two_qubit(rho)?;
    let signed = moment_from_terms(m, rho)? / 4f64.powi(m as i32);
    let mut rng = SeededRng::from_seed(seed);
    let scan = sample_fringe_law_rng(
        |chi| 0.5 * (1.0 + signed * chi.cos()),
        chis,
        shots,
        &mut rng,
    );
    let fit = fit_fringe_full(&scan)?;
    let (amp, stderr) = fit.cos_amplitude();
    let scale = 4f64.powi(m as i32);
    Ok(MomentEstimate {
        value: scale * amp,
        stderr: scale * stderr.unwrap_or(0.0),
    })
}

/// Estimate Tr((ρρ̃)^m) by measuring every term's fringe separately at
/// full visibility and recombining the signs classically.
///
/// `shots` Bernoulli draws per term per grid point; term t draws from
/// sub-stream (seed, t), so the estimate is independent of evaluation
/// order and identical with or without the `parallel` feature.
pub fn per_term_estimate(
    m: usize,
    rho: &DensityMatrix,
    chis: &[f64],
    shots: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    check_moment_order(m)?;
    require_two_qubit(rho)?;
    let terms = enumerate_terms(m)?;
    let chis_owned: Vec<f64> = chis.to_vec();
    let results: Vec<Result<(f64, f64)>> = par::map_indices(terms.len(), |idx| {
        let term = &terms[idx];
        let value = eval_term_exact(term, rho)?;
        let mut rng = SeededRng::substream(seed, idx as u64);
        let scan = sample_fringe_law_rng(
            |chi| 0.5 * (1.0 + value * chi.cos()),
            &chis_owned,
            shots,
            &mut rng,
        );
        let fit = fit_fringe_full(&scan)?;
        let (amp, stderr) = fit.cos_amplitude();
        Ok((amp, stderr.unwrap_or(0.0)))
    });
    let mut value = 0.0;
    let mut var = 0.0;
    for (term, r) in terms.iter().zip(results) {
        let (amp, stderr) = r?;
        value += term.sign as f64 * amp;
        var += stderr * stderr;
    }
    Ok(MomentEstimate {
        value,
        stderr: var.sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Copy accounting

/// Number of fresh state copies a measurement strategy consumes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyBudget {
    /// Copies consumed by each constituent circuit run.
    pub per_run: Vec<usize>,
    /// Total copies across the family.
    pub total: usize,
}

/// Measurement strategies with known copy budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// One interferometer run per concurrence moment m = 1..4 (2m copies
    /// each).
    ConcurrenceMomentsFull,
    /// 3-tangle from the four concurrence moment circuits plus the
    /// combined three-party purity circuit.
    Tangle3Method1,
    /// The single |τ|² interferometer (an m = 2 circuit with a toggled
    /// multiplication box).
    Tangle3NaiveTauSq,
    /// The combined three-party purity circuit alone.
    CombinedPurities,
}

pub fn copy_budget(method: Method) -> CopyBudget {
    let per_run: Vec<usize> = match method {
        Method::ConcurrenceMomentsFull => (1..=MAX_MOMENT).map(|m| 2 * m).collect(),
        Method::Tangle3Method1 => {
            let mut v: Vec<usize> = (1..=MAX_MOMENT).map(|m| 2 * m).collect();
            v.push(2);
            v
        }
        Method::Tangle3NaiveTauSq => vec![4],
        Method::CombinedPurities => vec![2],
    };
    let total = per_run.iter().sum();
    CopyBudget { per_run, total }
}

/// Term table CSV: `moment,config_bits,sign,value` for m = 1..=m_max.
pub fn term_table_csv(rho: &DensityMatrix, m_max: usize) -> Result<String> {
    check_moment_order(m_max)?;
    let mut out = String::from("moment,config_bits,sign,value\n");
    for m in 1..=m_max {
        for term in enumerate_terms(m)? {
            let value = eval_term_exact(&term, rho)?;
            out.push_str(&format!(
                "{},{},{},{}\n",
                m,
                term.config_bits(),
                term.sign,
                value
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concurrence::moments_direct;
    use crate::states::rng::SeededRng;
    use crate::states::{make_named, random_mixed, NamedState, StateData};

    fn bell() -> DensityMatrix {
        make_named(NamedState::BellPhiPlus).unwrap().to_density()
    }

    fn max_mixed() -> DensityMatrix {
        match make_named(NamedState::MaxMixed).unwrap() {
            StateData::Mixed(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn enumerate_counts_and_signs() {
        assert_eq!(enumerate_terms(1).unwrap().len(), 4);
        assert_eq!(enumerate_terms(2).unwrap().len(), 16);
        assert_eq!(enumerate_terms(4).unwrap().len(), 256);
        assert!(enumerate_terms(5).is_err());

        // m = 1 signs: +1 for I and R, -1 for the single-subsystem factors.
        let terms = enumerate_terms(1).unwrap();
        let signs: Vec<i8> = terms.iter().map(|t| t.sign).collect();
        let words: Vec<String> = terms.iter().map(|t| t.slot_word()).collect();
        assert_eq!(words, vec!["I", "B", "A", "R"]);
        assert_eq!(signs, vec![1, -1, -1, 1]);
    }

    #[test]
    fn first_moment_term_values() {
        let rho = random_mixed(2, 4, 10).unwrap();
        let terms = enumerate_terms(1).unwrap();
        let by_word = |w: &str| -> f64 {
            let t = terms.iter().find(|t| t.slot_word() == w).unwrap();
            eval_term_exact(t, &rho).unwrap()
        };
        // Full swap gives tr(rho^2), single-rail swaps give reduced
        // purities, no swap gives (tr rho)^2 = 1.
        assert!((by_word("R") - rho.purity()).abs() < 1e-12);
        assert!((by_word("A") - rho.reduced(&[0]).unwrap().purity()).abs() < 1e-12);
        assert!((by_word("B") - rho.reduced(&[1]).unwrap().purity()).abs() < 1e-12);
        assert!((by_word("I") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_from_terms_matches_direct_canonical() {
        for (state, label) in [(bell(), "bell"), (max_mixed(), "max_mixed")] {
            let direct = moments_direct(&state).unwrap();
            for m in 1..=4 {
                let v = moment_from_terms(m, &state).unwrap();
                assert!(
                    (v - direct[m - 1]).abs() < 1e-10,
                    "{label} m={m}: {v} vs {}",
                    direct[m - 1]
                );
            }
        }
        // Product state: all moments zero.
        let prod = make_named(NamedState::Product00).unwrap().to_density();
        for m in 1..=4 {
            assert!(moment_from_terms(m, &prod).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn moment_from_terms_matches_direct_random() {
        for seed in 0..50 {
            let rho = random_mixed(2, 4, seed + 5000).unwrap();
            let direct = moments_direct(&rho).unwrap();
            for m in 1..=4 {
                let v = moment_from_terms(m, &rho).unwrap();
                assert!(
                    (v - direct[m - 1]).abs() < 1e-10,
                    "seed {seed} m={m}: {v} vs {}",
                    direct[m - 1]
                );
            }
        }
    }

    #[test]
    fn relabeling_invariance() {
        // Conjugating both rails by the same copy relabeling cannot change
        // the trace; checked on random configs and relabelings.
        let rho = random_mixed(2, 4, 77).unwrap();
        let mut rng = SeededRng::from_seed(123);
        let terms = enumerate_terms(3).unwrap();
        for _ in 0..100 {
            let t = &terms[(rng.uniform() * terms.len() as f64) as usize % terms.len()];
            // Random permutation of copies by sorting random keys.
            let mut relabel: Vec<usize> = (0..t.copies_used).collect();
            for i in (1..relabel.len()).rev() {
                let j = (rng.uniform() * (i + 1) as f64) as usize % (i + 1);
                relabel.swap(i, j);
            }
            let conj = t.permutation.relabel(&relabel).unwrap();
            let t2 = TermCircuit {
                permutation: conj,
                ..t.clone()
            };
            let a = eval_term_exact(t, &rho).unwrap();
            let b = eval_term_exact(&t2, &rho).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn full_circuit_visibility_prefactors() {
        // Bell: moment 1 with the 1/4 ancilla discount; moment 2 with 1/16.
        let b = bell();
        let v1 = full_circuit_visibility(1, &b, CircuitMode::Analytic).unwrap();
        assert!((v1.signed() - 0.25).abs() < 1e-12);
        let v2 = full_circuit_visibility(2, &b, CircuitMode::Analytic).unwrap();
        assert!((v2.signed() - 1.0 / 16.0).abs() < 1e-12);

        // Maximally mixed: moment 1 is 1/4, visibility 1/16.
        let mm = max_mixed();
        let v1 = full_circuit_visibility(1, &mm, CircuitMode::Analytic).unwrap();
        assert!((v1.signed() - 1.0 / 16.0).abs() < 1e-14);

        // The 4^m rescale is exact in floating point (powers of two).
        for m in 1..=4 {
            let v = full_circuit_visibility(m, &mm, CircuitMode::Analytic).unwrap();
            let p = moment_from_terms(m, &mm).unwrap();
            assert_eq!(v.signed() * 4f64.powi(m as i32), p);
        }
    }

    #[test]
    fn gate_level_matches_analytic_m1_mixed() {
        // 7-qubit simulation with a rank-4 input.
        for seed in [0u64, 1, 2] {
            let rho = random_mixed(2, 4, seed + 6000).unwrap();
            let analytic = full_circuit_visibility(1, &rho, CircuitMode::Analytic).unwrap();
            let gate = full_circuit_visibility(1, &rho, CircuitMode::GateLevel).unwrap();
            assert!(
                (gate.signed() - analytic.signed()).abs() < 1e-10,
                "seed {seed}: {} vs {}",
                gate.signed(),
                analytic.signed()
            );
        }
    }

    #[test]
    fn gate_level_matches_analytic_m2_pure() {
        // 13-qubit simulation with a pure (rank-1) input.
        let b = bell();
        let analytic = full_circuit_visibility(2, &b, CircuitMode::Analytic).unwrap();
        let gate = full_circuit_visibility(2, &b, CircuitMode::GateLevel).unwrap();
        assert!((gate.signed() - analytic.signed()).abs() < 1e-10);
    }

    #[test]
    fn gate_level_size_limits() {
        let rho = random_mixed(2, 4, 1).unwrap();
        assert!(matches!(
            full_circuit_visibility(3, &rho, CircuitMode::GateLevel),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn per_term_estimate_exact_mode() {
        // shots = 0 reproduces the exact moment.
        let rho = random_mixed(2, 4, 33).unwrap();
        for m in 1..=2 {
            let est = per_term_estimate(m, &rho, &chi_grid(8), 0, 0).unwrap();
            let exact = moment_from_terms(m, &rho).unwrap();
            assert!((est.value - exact).abs() < 1e-10);
            assert_eq!(est.stderr, 0.0);
        }
    }

    #[test]
    fn per_term_estimate_bell_m1_sampled() {
        let est = per_term_estimate(1, &bell(), &chi_grid(8), 125_000, 9).unwrap();
        assert!((est.value - 1.0).abs() < 0.01, "{}", est.value);
        assert!((est.value - 1.0).abs() < 3.5 * est.stderr);
    }

    #[test]
    fn per_term_beats_full_circuit_variance_m2() {
        // Equal total shot budget: the full circuit pays the 1/16
        // visibility discount, the per-term route does not.
        let chis = chi_grid(8);
        let per_point_total = 160_000u64;
        let full = full_circuit_estimate(2, &bell(), &chis, per_point_total, 21).unwrap();
        let per_term =
            per_term_estimate(2, &bell(), &chis, per_point_total / 16, 22).unwrap();
        assert!(
            per_term.stderr < full.stderr,
            "per-term {} vs full {}",
            per_term.stderr,
            full.stderr
        );
    }

    #[test]
    fn per_term_estimate_is_unbiased() {
        // Mean over independent seeds lands within 3 sigma of the exact
        // moment.
        let rho = bell();
        let exact = moment_from_terms(1, &rho).unwrap();
        let chis = chi_grid(4);
        let n_seeds = 200;
        let mut sum = 0.0;
        let mut se = 0.0;
        for seed in 0..n_seeds {
            let est = per_term_estimate(1, &rho, &chis, 256, seed).unwrap();
            sum += est.value;
            se = est.stderr;
        }
        let mean = sum / n_seeds as f64;
        let tol = 3.0 * se / (n_seeds as f64).sqrt();
        assert!((mean - exact).abs() < tol, "mean {mean} vs {exact} (tol {tol})");
    }

    #[test]
    fn copy_budgets() {
        assert_eq!(copy_budget(Method::Tangle3Method1).total, 22);
        assert_eq!(copy_budget(Method::Tangle3NaiveTauSq).total, 4);
        assert_eq!(copy_budget(Method::CombinedPurities).total, 2);
        let full = copy_budget(Method::ConcurrenceMomentsFull);
        assert_eq!(full.per_run, vec![2, 4, 6, 8]);
        assert_eq!(full.total, 20);
        // The m-th moment circuit consumes 2m copies per run.
        for (i, per) in full.per_run.iter().enumerate() {
            assert_eq!(*per, 2 * (i + 1));
        }
    }

    #[test]
    fn term_table_has_full_term_count() {
        let rho = max_mixed();
        let csv = term_table_csv(&rho, 2).unwrap();
        // Header + 4 + 16 rows.
        assert_eq!(csv.lines().count(), 1 + 4 + 16);
        assert!(csv.starts_with("moment,config_bits,sign,value\n"));
    }
}
