//! Generalized Mach–Zehnder interferometry.
//!
//! One ancilla in superposition controls an operation `U` on an internal
//! register carrying ρ; a phase χ on the reference arm scans an
//! interference fringe whose intensity along the ancilla-0 output is
//!
//! ```text
//! P(0) = (1 + Re(e^{-iχ} · Tr(Uρ))) / 2
//! ```
//!
//! so the fringe visibility is |Tr(Uρ)| and its phase is arg Tr(Uρ). This
//! normalization is fixed project-wide. The module provides the analytic
//! law ([`intensity_analytic`]), a small gate-level statevector simulator
//! ([`GateCircuit`]) to cross-validate it, convex mixtures of unitaries
//! ([`MixedUnitaryChannel`]), and shot-noise fringe sampling with a linear
//! least-squares fringe fit.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;
use crate::states::rng::{complex_normal, SeededRng};
use crate::states::{DensityMatrix, PureState};
use num_complex::Complex64;

/// Statevector size guard.
pub const MAX_QUBITS: usize = 26;

/// Pure states with ensemble weight below this are dropped from
/// rank decompositions.
pub const ENSEMBLE_WEIGHT_FLOOR: f64 = 1e-12;

/// Interferometer phase setting, in radians.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSetting {
    pub chi: f64,
}

impl PhaseSetting {
    pub fn new(chi: f64) -> Result<Self> {
        if !chi.is_finite() {
            return Err(Error::ParamOutOfRange("phase must be finite".into()));
        }
        Ok(PhaseSetting { chi })
    }
}

/// Convex mixture of unitaries Σ p_k U_k applied under interferometric
/// control.
#[derive(Debug, Clone)]
pub struct MixedUnitaryChannel {
    terms: Vec<(f64, CMatrix)>,
}

impl MixedUnitaryChannel {
    pub fn new(terms: Vec<(f64, CMatrix)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::ParamOutOfRange(
                "channel needs at least one term".into(),
            ));
        }
        let dim = terms[0].1.rows();
        let mut total = 0.0;
        for (p, u) in &terms {
            if *p < 0.0 {
                return Err(Error::ParamOutOfRange(format!("negative weight {p}")));
            }
            total += p;
            if u.rows() != dim || u.cols() != dim {
                return Err(Error::DimMismatch {
                    context: "channel term dimension",
                    got: u.rows(),
                    expected: dim,
                });
            }
            let dev = u.unitarity_deviation();
            if dev > 1e-10 {
                return Err(Error::NotUnitary { deviation: dev });
            }
        }
        let dev = (total - 1.0).abs();
        if dev > 1e-12 {
            return Err(Error::WeightsNotNormalized { deviation: dev });
        }
        Ok(MixedUnitaryChannel { terms })
    }

    /// Single-unitary channel.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![(1.0, u)])
    }

    pub fn terms(&self) -> &[(f64, CMatrix)] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].1.rows()
    }

    /// Tr((Σ p_k U_k) ρ), the complex fringe amplitude.
    pub fn fringe_amplitude(&self, rho: &DensityMatrix) -> Result<Complex64> {
        if rho.dim() != self.dim() {
            return Err(Error::DimMismatch {
                context: "channel vs state dimension",
                got: rho.dim(),
                expected: self.dim(),
            });
        }
        let mut t = Complex64::new(0.0, 0.0);
        for (p, u) in &self.terms {
            t += u.matmul(rho.mat())?.trace() * *p;
        }
        Ok(t)
    }
}

/// Fitted fringe amplitude and phase.
#[derive(Debug, Clone)]
pub struct VisibilityEstimate {
    /// Fringe visibility, |Tr(Uρ)| in exact mode.
    pub v: f64,
    /// Fringe phase in radians.
    pub phi: f64,
    /// Standard error of `v` from the fit covariance (sampled scans only).
    pub stderr_v: Option<f64>,
}

impl VisibilityEstimate {
    /// v·cos(φ): the real fringe amplitude, signed. For permutation
    /// circuits the amplitude is real and this recovers its sign.
    pub fn signed(&self) -> f64 {
        self.v * self.phi.cos()
    }
}

/// One fringe sample point: phase, estimated P(0), and shot count
/// (0 marks an exact, noise-free point).
#[derive(Debug, Clone, Copy)]
pub struct FringePoint {
    pub chi: f64,
    pub p0: f64,
    pub shots: u64,
}

/// A sampled (or exact) interference fringe.
#[derive(Debug, Clone)]
pub struct FringeScan {
    pub points: Vec<FringePoint>,
}

impl FringeScan {
    /// CSV with header `chi,p0,shots`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("chi,p0,shots\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.chi, p.p0, p.shots));
        }
        out
    }
}

/// Equispaced phase grid over [0, 2π).
pub fn chi_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| std::f64::consts::TAU * k as f64 / n as f64)
        .collect()
}

/// Exact intensity P(0) for a channel and state at phase χ.
pub fn intensity_analytic(
    channel: &MixedUnitaryChannel,
    rho: &DensityMatrix,
    chi: PhaseSetting,
) -> Result<f64> {
    let t = channel.fringe_amplitude(rho)?;
    Ok(0.5 * (1.0 + (Complex64::new(0.0, -chi.chi).exp() * t).re))
}

/// Exact visibility and phase for a channel and state.
pub fn channel_visibility(
    channel: &MixedUnitaryChannel,
    rho: &DensityMatrix,
) -> Result<VisibilityEstimate> {
    let t = channel.fringe_amplitude(rho)?;
    Ok(VisibilityEstimate {
        v: t.norm(),
        phi: t.im.atan2(t.re),
        stderr_v: None,
    })
}

// ---------------------------------------------------------------------------
// Gate-level simulator

/// One gate of a [`GateCircuit`]. Qubit 0 is the most significant bit of
/// the basis index.
#[derive(Debug, Clone)]
pub enum Gate {
    Hadamard(usize),
    /// diag(1, e^{iθ}) on one qubit.
    Phase(usize, f64),
    /// diag(1, e^{i·scale·χ}): the interferometer phase, bound at
    /// simulation time.
    ChiPhase { qubit: usize, scale: f64 },
    /// Controlled-Z between two qubits.
    ControlledZ(usize, usize),
    Swap(usize, usize),
    /// Permute qubit contents (qubit j's state moves to qubit `map[j]`)
    /// when every control is 1. Controls must be fixed points of `map`.
    ControlledPermutation { controls: Vec<usize>, map: Vec<usize> },
    /// Apply `matrix` on `targets` (targets[0] is the slow index) when
    /// every control is 1.
    ControlledUnitary {
        controls: Vec<usize>,
        targets: Vec<usize>,
        matrix: CMatrix,
    },
}

/// A fixed-order gate list over `n_qubits` with one measured qubit.
#[derive(Debug, Clone)]
pub struct GateCircuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub measured: usize,
}

impl GateCircuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>, measured: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::SizeLimit {
                context: "gate circuit",
                needed: n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let circ = GateCircuit {
            n_qubits,
            gates,
            measured,
        };
        circ.validate()?;
        Ok(circ)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        let bad = |q: usize| -> Result<()> {
            if q >= n {
                Err(Error::ParamOutOfRange(format!(
                    "qubit index {q} out of range for {n} qubits"
                )))
            } else {
                Ok(())
            }
        };
        bad(self.measured)?;
        for g in &self.gates {
            match g {
                Gate::Hadamard(q) | Gate::Phase(q, _) | Gate::ChiPhase { qubit: q, .. } => bad(*q)?,
                Gate::ControlledZ(a, b) | Gate::Swap(a, b) => {
                    bad(*a)?;
                    bad(*b)?;
                    if a == b {
                        return Err(Error::ParamOutOfRange(
                            "two-qubit gate needs distinct qubits".into(),
                        ));
                    }
                }
                Gate::ControlledPermutation { controls, map } => {
                    if map.len() != n {
                        return Err(Error::DimMismatch {
                            context: "permutation map length",
                            got: map.len(),
                            expected: n,
                        });
                    }
                    let mut seen = vec![false; n];
                    for &to in map {
                        bad(to)?;
                        if seen[to] {
                            return Err(Error::ParamOutOfRange(
                                "permutation map is not a bijection".into(),
                            ));
                        }
                        seen[to] = true;
                    }
                    for &c in controls {
                        bad(c)?;
                        if map[c] != c {
                            return Err(Error::ParamOutOfRange(
                                "permutation must fix its control qubits".into(),
                            ));
                        }
                    }
                }
                Gate::ControlledUnitary {
                    controls,
                    targets,
                    matrix,
                } => {
                    if targets.is_empty() {
                        return Err(Error::ParamOutOfRange("unitary needs targets".into()));
                    }
                    for &t in targets {
                        bad(t)?;
                        if controls.contains(&t) {
                            return Err(Error::ParamOutOfRange(
                                "controls and targets overlap".into(),
                            ));
                        }
                    }
                    for &c in controls {
                        bad(c)?;
                    }
                    let want = 1usize << targets.len();
                    if matrix.rows() != want || matrix.cols() != want {
                        return Err(Error::DimMismatch {
                            context: "controlled unitary matrix size",
                            got: matrix.rows(),
                            expected: want,
                        });
                    }
                    let dev = matrix.unitarity_deviation();
                    if dev > 1e-10 {
                        return Err(Error::NotUnitary { deviation: dev });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Initial register contents for a simulation.
#[derive(Debug, Clone)]
pub enum CircuitInput {
    Pure(Vec<Complex64>),
    /// Weighted pure components, e.g. a rank decomposition of a mixed
    /// input. Weights are used as-is.
    Ensemble(Vec<(f64, Vec<Complex64>)>),
}

impl CircuitInput {
    /// Full-register state |0...0⟩ ⊗ |rails⟩ with `n_ancillas` leading
    /// zeroed qubits.
    pub fn pure_with_ancillas(n_ancillas: usize, rails: &PureState) -> Self {
        CircuitInput::Pure(pad_ancillas(n_ancillas, rails.amps()))
    }

    /// Ensemble variant of [`CircuitInput::pure_with_ancillas`].
    pub fn ensemble_with_ancillas(n_ancillas: usize, members: Vec<(f64, PureState)>) -> Self {
        CircuitInput::Ensemble(
            members
                .into_iter()
                .map(|(w, s)| (w, pad_ancillas(n_ancillas, s.amps())))
                .collect(),
        )
    }
}

fn pad_ancillas(n_ancillas: usize, rails: &[Complex64]) -> Vec<Complex64> {
    // Ancillas are the slow bits and start in |0>, so the rail amplitudes
    // occupy the leading block unchanged.
    let mut full = vec![Complex64::new(0.0, 0.0); rails.len() << n_ancillas];
    full[..rails.len()].copy_from_slice(rails);
    full
}

/// Kronecker product of two amplitude vectors (left factor slow).
pub fn kron_amps(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// All weighted pure components of ρ^⊗copies from a rank decomposition of
/// one copy: the product ensemble over member tuples, in lexicographic
/// tuple order.
pub fn ensemble_power(
    members: &[(f64, PureState)],
    copies: usize,
) -> Vec<(f64, Vec<Complex64>)> {
    let mut out: Vec<(f64, Vec<Complex64>)> = vec![(1.0, vec![Complex64::new(1.0, 0.0)])];
    for _ in 0..copies {
        let mut next = Vec::with_capacity(out.len() * members.len());
        for (w, amps) in &out {
            for (mw, ms) in members {
                next.push((w * mw, kron_amps(amps, ms.amps())));
            }
        }
        out = next;
    }
    out
}

#[inline]
fn bit_of(idx: usize, q: usize, n: usize) -> usize {
    (idx >> (n - 1 - q)) & 1
}

#[inline]
fn mask_of(q: usize, n: usize) -> usize {
    1usize << (n - 1 - q)
}

fn apply_gate(state: &mut Vec<Complex64>, gate: &Gate, n: usize, chi: f64) {
    match gate {
        Gate::Hadamard(q) => {
            let m = mask_of(*q, n);
            let s = 1.0 / 2f64.sqrt();
            for idx in 0..state.len() {
                if idx & m == 0 {
                    let a = state[idx];
                    let b = state[idx | m];
                    state[idx] = (a + b) * s;
                    state[idx | m] = (a - b) * s;
                }
            }
        }
        Gate::Phase(q, theta) => {
            let m = mask_of(*q, n);
            let ph = Complex64::new(0.0, *theta).exp();
            for (idx, amp) in state.iter_mut().enumerate() {
                if idx & m != 0 {
                    *amp *= ph;
                }
            }
        }
        Gate::ChiPhase { qubit, scale } => {
            apply_gate(state, &Gate::Phase(*qubit, scale * chi), n, chi);
        }
        Gate::ControlledZ(a, b) => {
            let m = mask_of(*a, n) | mask_of(*b, n);
            for (idx, amp) in state.iter_mut().enumerate() {
                if idx & m == m {
                    *amp = -*amp;
                }
            }
        }
        Gate::Swap(a, b) => {
            let ma = mask_of(*a, n);
            let mb = mask_of(*b, n);
            for idx in 0..state.len() {
                if idx & ma != 0 && idx & mb == 0 {
                    let other = (idx & !ma) | mb;
                    state.swap(idx, other);
                }
            }
        }
        Gate::ControlledPermutation { controls, map } => {
            let cmask: usize = controls.iter().map(|&c| mask_of(c, n)).fold(0, |a, b| a | b);
            let mut out = state.clone();
            for (idx, &amp) in state.iter().enumerate() {
                if idx & cmask == cmask {
                    let mut dst = 0usize;
                    for j in 0..n {
                        if bit_of(idx, j, n) == 1 {
                            dst |= mask_of(map[j], n);
                        }
                    }
                    out[dst] = amp;
                }
            }
            *state = out;
        }
        Gate::ControlledUnitary {
            controls,
            targets,
            matrix,
        } => {
            let cmask: usize = controls.iter().map(|&c| mask_of(c, n)).fold(0, |a, b| a | b);
            let tmasks: Vec<usize> = targets.iter().map(|&t| mask_of(t, n)).collect();
            let tall: usize = tmasks.iter().fold(0, |a, &b| a | b);
            let tdim = 1usize << targets.len();
            let mut local = vec![Complex64::new(0.0, 0.0); tdim];
            for base in 0..state.len() {
                if base & tall != 0 || base & cmask != cmask {
                    continue;
                }
                for (t, slot) in local.iter_mut().enumerate() {
                    let mut idx = base;
                    for (k, &tm) in tmasks.iter().enumerate() {
                        if (t >> (tmasks.len() - 1 - k)) & 1 == 1 {
                            idx |= tm;
                        }
                    }
                    *slot = state[idx];
                }
                for r in 0..tdim {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (cidx, &val) in local.iter().enumerate() {
                        acc += matrix.at(r, cidx) * val;
                    }
                    let mut idx = base;
                    for (k, &tm) in tmasks.iter().enumerate() {
                        if (r >> (tmasks.len() - 1 - k)) & 1 == 1 {
                            idx |= tm;
                        }
                    }
                    state[idx] = acc;
                }
            }
        }
    }
}

/// Evolve a pure register through the circuit at phase `chi` and return the
/// final statevector.
pub fn simulate_statevector(
    circ: &GateCircuit,
    input: &[Complex64],
    chi: f64,
) -> Result<Vec<Complex64>> {
    let dim = 1usize << circ.n_qubits;
    if input.len() != dim {
        return Err(Error::DimMismatch {
            context: "statevector length",
            got: input.len(),
            expected: dim,
        });
    }
    let mut state = input.to_vec();
    for gate in &circ.gates {
        apply_gate(&mut state, gate, circ.n_qubits, chi);
    }
    Ok(state)
}

/// Probability of measuring `qubit` as 0 in `state`.
pub fn prob_zero(state: &[Complex64], qubit: usize, n_qubits: usize) -> f64 {
    let m = mask_of(qubit, n_qubits);
    state
        .iter()
        .enumerate()
        .filter(|(idx, _)| idx & m == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Exact P(measured qubit = 0) for the circuit at phase `chi`, summing over
/// ensemble members for mixed inputs. Members run in parallel when the
/// `parallel` feature is on; the weighted sum is taken in member order.
pub fn simulate_gate_circuit(circ: &GateCircuit, input: &CircuitInput, chi: f64) -> Result<f64> {
    match input {
        CircuitInput::Pure(amps) => {
            let state = simulate_statevector(circ, amps, chi)?;
            Ok(prob_zero(&state, circ.measured, circ.n_qubits))
        }
        CircuitInput::Ensemble(members) => {
            let probs: Vec<Result<f64>> = par::map(members, |(w, amps)| {
                let state = simulate_statevector(circ, amps, chi)?;
                Ok(w * prob_zero(&state, circ.measured, circ.n_qubits))
            });
            let mut total = 0.0;
            for p in probs {
                total += p?;
            }
            Ok(total)
        }
    }
}

/// The single-unitary interferometer: ancilla Hadamard, χ phase on the
/// reference arm, controlled-U on the internal register, closing Hadamard.
///
/// The reference-arm phase e^{iχ} on the 0 branch is realized as e^{-iχ}
/// on the 1 branch, the same circuit up to global phase.
pub fn fig_interferometer(internal_qubits: usize, u: CMatrix) -> Result<GateCircuit> {
    let n = 1 + internal_qubits;
    let targets: Vec<usize> = (1..n).collect();
    GateCircuit::new(
        n,
        vec![
            Gate::Hadamard(0),
            Gate::ChiPhase {
                qubit: 0,
                scale: -1.0,
            },
            Gate::ControlledUnitary {
                controls: vec![0],
                targets,
                matrix: u,
            },
            Gate::Hadamard(0),
        ],
        0,
    )
}

/// Gate-level intensity of a mixed-unitary channel: one interferometer run
/// per unitary term, weighted by the mixture probabilities, with mixed ρ
/// handled by rank decomposition.
pub fn channel_intensity_gate_level(
    channel: &MixedUnitaryChannel,
    rho: &DensityMatrix,
    chi: f64,
) -> Result<f64> {
    let internal_qubits = rho.n_qubits();
    let ensemble = rho.ensemble(ENSEMBLE_WEIGHT_FLOOR)?;
    let input = CircuitInput::ensemble_with_ancillas(1, ensemble);
    let mut total = 0.0;
    for (p, u) in channel.terms() {
        let circ = fig_interferometer(internal_qubits, u.clone())?;
        total += p * simulate_gate_circuit(&circ, &input, chi)?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Fringe sampling and fitting

/// Sample a fringe from an explicit probability law `p0(chi)`.
///
/// `shots = 0` records the exact probabilities (a noise-free scan);
/// otherwise each grid point draws `shots` Bernoulli outcomes from one
/// sequential generator seeded by `seed`.
pub fn sample_fringe_law(
    p_of_chi: impl FnMut(f64) -> f64,
    chis: &[f64],
    shots: u64,
    seed: u64,
) -> FringeScan {
    let mut rng = SeededRng::from_seed(seed);
    sample_fringe_law_rng(p_of_chi, chis, shots, &mut rng)
}

/// [`sample_fringe_law`] drawing from a caller-owned generator, for
/// sweeps that assign one sub-stream per circuit.
pub fn sample_fringe_law_rng(
    p_of_chi: impl FnMut(f64) -> f64,
    chis: &[f64],
    shots: u64,
    rng: &mut SeededRng,
) -> FringeScan {
    let mut p_of_chi = p_of_chi;
    let points = chis
        .iter()
        .map(|&chi| {
            let p = p_of_chi(chi);
            let p0 = if shots == 0 {
                p
            } else {
                let mut hits = 0u64;
                for _ in 0..shots {
                    if rng.bernoulli(p) {
                        hits += 1;
                    }
                }
                hits as f64 / shots as f64
            };
            FringePoint { chi, p0, shots }
        })
        .collect();
    FringeScan { points }
}

/// Sample a fringe of the analytic channel law.
pub fn sample_fringe_channel(
    channel: &MixedUnitaryChannel,
    rho: &DensityMatrix,
    chis: &[f64],
    shots: u64,
    seed: u64,
) -> Result<FringeScan> {
    let t = channel.fringe_amplitude(rho)?;
    Ok(sample_fringe_law(
        |chi| 0.5 * (1.0 + (Complex64::new(0.0, -chi).exp() * t).re),
        chis,
        shots,
        seed,
    ))
}

/// Sample a fringe of a gate-level circuit (exact per-point probabilities,
/// then Bernoulli noise).
pub fn sample_fringe_circuit(
    circ: &GateCircuit,
    input: &CircuitInput,
    chis: &[f64],
    shots: u64,
    seed: u64,
) -> Result<FringeScan> {
    let probs: Vec<Result<f64>> = par::map(chis, |&chi| simulate_gate_circuit(circ, input, chi));
    let mut exact = Vec::with_capacity(chis.len());
    for p in probs {
        exact.push(p?);
    }
    let mut k = 0;
    Ok(sample_fringe_law(
        move |_chi| {
            let p = exact[k];
            k += 1;
            p
        },
        chis,
        shots,
        seed,
    ))
}

/// Full least-squares fit of `p0(chi) = a + b cos chi + c sin chi`.
#[derive(Debug, Clone)]
pub struct FringeFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Covariance of (a, b, c); `None` for exact scans.
    pub cov: Option<[[f64; 3]; 3]>,
}

impl FringeFit {
    /// Visibility v = 2√(b² + c²) and phase φ = atan2(c, b), matching the
    /// analytic (v, φ) exactly on noise-free data.
    pub fn estimate(&self) -> VisibilityEstimate {
        let r = (self.b * self.b + self.c * self.c).sqrt();
        let v = 2.0 * r;
        let phi = self.c.atan2(self.b);
        let stderr_v = self.cov.map(|cov| {
            if r < 1e-300 {
                2.0 * (cov[1][1].max(cov[2][2])).sqrt()
            } else {
                let gb = 2.0 * self.b / r;
                let gc = 2.0 * self.c / r;
                (gb * gb * cov[1][1] + 2.0 * gb * gc * cov[1][2] + gc * gc * cov[2][2])
                    .max(0.0)
                    .sqrt()
            }
        });
        VisibilityEstimate { v, phi, stderr_v }
    }

    /// The real signed fringe amplitude 2b with its standard error; the
    /// right estimator when the amplitude is known real (φ ∈ {0, π}).
    pub fn cos_amplitude(&self) -> (f64, Option<f64>) {
        (
            2.0 * self.b,
            self.cov.map(|cov| 2.0 * cov[1][1].max(0.0).sqrt()),
        )
    }
}

fn solve3(m: [[f64; 3]; 3], y: [f64; 3]) -> Option<[f64; 3]> {
    // Gaussian elimination with partial pivoting on a 3x3 system.
    let mut a = [[0.0f64; 4]; 3];
    for r in 0..3 {
        a[r][..3].copy_from_slice(&m[r]);
        a[r][3] = y[r];
    }
    for col in 0..3 {
        let piv =
            (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..4 {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut out = [[0.0f64; 3]; 3];
    for col in 0..3 {
        let mut e = [0.0; 3];
        e[col] = 1.0;
        let x = solve3(m, e)?;
        for r in 0..3 {
            out[r][col] = x[r];
        }
    }
    Some(out)
}

/// Fit a scan and return the full coefficient set.
pub fn fit_fringe_full(scan: &FringeScan) -> Result<FringeFit> {
    let mut distinct: Vec<f64> = Vec::new();
    for p in &scan.points {
        if !distinct.iter().any(|&x| (x - p.chi).abs() < 1e-12) {
            distinct.push(p.chi);
        }
    }
    if distinct.len() < 3 {
        return Err(Error::TooFewPhasePoints(distinct.len()));
    }

    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    let rows: Vec<[f64; 3]> = scan
        .points
        .iter()
        .map(|p| [1.0, p.chi.cos(), p.chi.sin()])
        .collect();
    for (row, p) in rows.iter().zip(&scan.points) {
        for i in 0..3 {
            for j in 0..3 {
                xtx[i][j] += row[i] * row[j];
            }
            xty[i] += row[i] * p.p0;
        }
    }
    let theta = solve3(xtx, xty).ok_or(Error::TooFewPhasePoints(distinct.len()))?;

    let sampled = scan.points.iter().any(|p| p.shots > 0);
    let cov = if sampled {
        let inv = invert3(xtx).ok_or(Error::TooFewPhasePoints(distinct.len()))?;
        // Cov = (X'X)^-1 X' diag(sigma^2) X (X'X)^-1 with binomial plug-in
        // variances per point.
        let mut mid = [[0.0f64; 3]; 3];
        for (row, p) in rows.iter().zip(&scan.points) {
            let var = if p.shots == 0 {
                0.0
            } else {
                let n = p.shots as f64;
                (p.p0 * (1.0 - p.p0)).max(0.25 / n) / n
            };
            for i in 0..3 {
                for j in 0..3 {
                    mid[i][j] += row[i] * row[j] * var;
                }
            }
        }
        let mut cov = [[0.0f64; 3]; 3];
        for (i, row_i) in inv.iter().enumerate() {
            for j in 0..3 {
                let mut acc = 0.0;
                for (k, &ik) in row_i.iter().enumerate() {
                    for (l, inv_l) in inv.iter().enumerate() {
                        acc += ik * mid[k][l] * inv_l[j];
                    }
                }
                cov[i][j] = acc;
            }
        }
        Some(cov)
    } else {
        None
    };

    Ok(FringeFit {
        a: theta[0],
        b: theta[1],
        c: theta[2],
        cov,
    })
}

/// Fit a scan to a [`VisibilityEstimate`].
pub fn fit_fringe(scan: &FringeScan) -> Result<VisibilityEstimate> {
    Ok(fit_fringe_full(scan)?.estimate())
}

/// Haar-ish random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = SeededRng::from_seed(seed);
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| complex_normal(&mut rng)).collect())
        .collect();
    for i in 0..dim {
        for j in 0..i {
            let proj: Complex64 = (0..dim).map(|k| cols[j][k].conj() * cols[i][k]).sum();
            for k in 0..dim {
                let sub = proj * cols[j][k];
                cols[i][k] -= sub;
            }
        }
        let norm: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[i].iter_mut() {
            *z /= norm;
        }
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        for (k, &z) in col.iter().enumerate() {
            m.set(k, j, z);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_named, random_mixed, NamedState};

    fn identity_channel(dim: usize) -> MixedUnitaryChannel {
        MixedUnitaryChannel::unitary(CMatrix::identity(dim)).unwrap()
    }

    #[test]
    fn intensity_identity_channel() {
        let rho = random_mixed(2, 4, 1).unwrap();
        let ch = identity_channel(4);
        let p = intensity_analytic(&ch, &rho, PhaseSetting::new(0.0).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let est = channel_visibility(&ch, &rho).unwrap();
        assert!((est.v - 1.0).abs() < 1e-12);
        assert!(est.phi.abs() < 1e-12);
    }

    #[test]
    fn intensity_flat_fringe_for_orthogonal_expectation() {
        // U = sigma_z on |+><+| has Tr(U rho) = 0.
        let z = CMatrix::diag(&[1.0, -1.0]);
        let half = Complex64::new(0.5, 0.0);
        let plus = CMatrix::from_vec(2, 2, vec![half, half, half, half]).unwrap();
        let rho = DensityMatrix::new(plus, vec![2]).unwrap();
        let est = channel_visibility(&MixedUnitaryChannel::unitary(z).unwrap(), &rho).unwrap();
        assert!(est.v < 1e-12);
    }

    #[test]
    fn intensity_phase_gate_on_max_mixed() {
        // U = diag(1, e^{i theta}) on I/2: Tr(U rho) = (1 + e^{i theta})/2,
        // so v = |cos(theta/2)| and phi = theta/2.
        for &theta in &[0.3f64, 1.2, 2.5] {
            let u = CMatrix::from_vec(
                2,
                2,
                vec![
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, theta).exp(),
                ],
            )
            .unwrap();
            let rho = DensityMatrix::new(CMatrix::identity(2).scale_re(0.5), vec![2]).unwrap();
            let est = channel_visibility(&MixedUnitaryChannel::unitary(u).unwrap(), &rho).unwrap();
            assert!((est.v - (theta / 2.0).cos().abs()).abs() < 1e-12);
            assert!((est.phi - theta / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_level_matches_analytic_fig_interferometer() {
        // Identity U gives P(0) = (1 + cos chi)/2 for any input.
        let circ = fig_interferometer(2, CMatrix::identity(4)).unwrap();
        let rho = random_mixed(2, 4, 3).unwrap();
        let input =
            CircuitInput::ensemble_with_ancillas(1, rho.ensemble(ENSEMBLE_WEIGHT_FLOOR).unwrap());
        for &chi in &[0.0, 0.7, std::f64::consts::PI] {
            let p = simulate_gate_circuit(&circ, &input, chi).unwrap();
            assert!((p - 0.5 * (1.0 + chi.cos())).abs() < 1e-12);
        }

        // Random unitaries against random states, pure and mixed.
        for seed in 0..40 {
            let u = random_unitary(4, seed + 500);
            let ch = MixedUnitaryChannel::unitary(u.clone()).unwrap();
            let rho = random_mixed(2, (seed % 4 + 1) as usize, seed + 600).unwrap();
            let chi = 0.9;
            let direct = intensity_analytic(&ch, &rho, PhaseSetting::new(chi).unwrap()).unwrap();
            let gate = channel_intensity_gate_level(&ch, &rho, chi).unwrap();
            assert!((direct - gate).abs() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn gate_level_matches_analytic_for_mixture_channels() {
        for seed in 0..20 {
            let u1 = random_unitary(4, seed + 700);
            let u2 = random_unitary(4, seed + 800);
            let ch = MixedUnitaryChannel::new(vec![(0.3, u1), (0.7, u2)]).unwrap();
            let rho = random_mixed(2, 4, seed + 900).unwrap();
            let chi = 1.3;
            let direct = intensity_analytic(&ch, &rho, PhaseSetting::new(chi).unwrap()).unwrap();
            let gate = channel_intensity_gate_level(&ch, &rho, chi).unwrap();
            assert!((direct - gate).abs() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn swap_test_purity() {
        // Controlled-SWAP between two single-qubit copies measures
        // (1 + tr rho^2)/2 at chi = 0.
        let rho = random_mixed(1, 2, 42).unwrap();
        let mut swap = CMatrix::zeros(4, 4);
        swap.set(0, 0, Complex64::new(1.0, 0.0));
        swap.set(1, 2, Complex64::new(1.0, 0.0));
        swap.set(2, 1, Complex64::new(1.0, 0.0));
        swap.set(3, 3, Complex64::new(1.0, 0.0));
        let circ = fig_interferometer(2, swap).unwrap();
        let ens = rho.ensemble(ENSEMBLE_WEIGHT_FLOOR).unwrap();
        let mut members = Vec::new();
        for (w1, s1) in &ens {
            for (w2, s2) in &ens {
                let mut amps = Vec::with_capacity(4);
                for a in s1.amps() {
                    for b in s2.amps() {
                        amps.push(a * b);
                    }
                }
                members.push((w1 * w2, amps));
            }
        }
        let input = CircuitInput::Ensemble(members);
        let p = simulate_gate_circuit(&circ, &input, 0.0).unwrap();
        assert!((p - 0.5 * (1.0 + rho.purity())).abs() < 1e-12);
    }

    #[test]
    fn fringe_fit_recovers_exact_parameters() {
        let chis = chi_grid(8);
        let scan = sample_fringe_law(|chi| 0.5 * (1.0 + 0.3 * (chi - 1.0).cos()), &chis, 0, 0);
        let est = fit_fringe(&scan).unwrap();
        assert!((est.v - 0.3).abs() < 1e-10);
        assert!((est.phi - 1.0).abs() < 1e-10);
        assert!(est.stderr_v.is_none());

        // Exact scan of the identity interferometer.
        let rho = random_mixed(2, 4, 7).unwrap();
        let scan = sample_fringe_channel(&identity_channel(4), &rho, &chis, 0, 0).unwrap();
        let est = fit_fringe(&scan).unwrap();
        assert!((est.v - 1.0).abs() < 1e-10);
        assert!(est.phi.abs() < 1e-10);
    }

    #[test]
    fn fringe_fit_matches_channel_visibility() {
        for seed in 0..25 {
            let u = random_unitary(4, seed + 1500);
            let ch = MixedUnitaryChannel::unitary(u).unwrap();
            let rho = random_mixed(2, 4, seed + 1600).unwrap();
            let exact = channel_visibility(&ch, &rho).unwrap();
            let scan = sample_fringe_channel(&ch, &rho, &chi_grid(8), 0, 0).unwrap();
            let est = fit_fringe(&scan).unwrap();
            assert!((est.v - exact.v).abs() < 1e-10);
            if exact.v > 1e-6 {
                let mut dphi = (est.phi - exact.phi).abs();
                dphi = dphi.min(std::f64::consts::TAU - dphi);
                assert!(dphi < 1e-8, "seed {seed}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_near_truth() {
        let v = 0.25;
        let law = |chi: f64| 0.5 * (1.0 + v * chi.cos());
        let chis = [
            0.0,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
            3.0 * std::f64::consts::FRAC_PI_2,
        ];
        let a = sample_fringe_law(law, &chis, 1_000_000, 11);
        let b = sample_fringe_law(law, &chis, 1_000_000, 11);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.p0, y.p0);
        }
        let est = fit_fringe(&a).unwrap();
        assert!((est.v - v).abs() < 0.005);
        let se = est.stderr_v.unwrap();
        assert!(
            (est.v - v).abs() < 4.0 * se,
            "off by {} vs se {}",
            (est.v - v).abs(),
            se
        );
        assert!(est.v <= 1.0 + 3.0 * se);
    }

    #[test]
    fn fit_rejects_degenerate_grids() {
        let scan = sample_fringe_law(|_| 0.5, &[0.0, 1.0], 0, 0);
        assert!(matches!(fit_fringe(&scan), Err(Error::TooFewPhasePoints(2))));
    }

    #[test]
    fn csv_format() {
        let scan = sample_fringe_law(|chi| 0.5 * (1.0 + chi.cos()), &[0.0, 1.5], 0, 0);
        let csv = scan.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "chi,p0,shots");
        assert!(lines.next().unwrap().starts_with("0,1,"));
    }

    #[test]
    fn channel_validation() {
        assert!(MixedUnitaryChannel::new(vec![
            (0.5, CMatrix::identity(2)),
            (0.6, CMatrix::identity(2))
        ])
        .is_err());
        let not_unitary = CMatrix::diag(&[1.0, 2.0]);
        assert!(MixedUnitaryChannel::unitary(not_unitary).is_err());
    }

    #[test]
    fn bell_fringe_example() {
        // Visibility-1 fringe from the Bell projector under the identity
        // channel matches (1 + cos chi)/2 pointwise.
        let bell = make_named(NamedState::BellPhiPlus).unwrap().to_density();
        let ch = identity_channel(4);
        for &chi in &[0.0, 0.4, 2.0] {
            let p = intensity_analytic(&ch, &bell, PhaseSetting::new(chi).unwrap()).unwrap();
            assert!((p - 0.5 * (1.0 + chi.cos())).abs() < 1e-12);
        }
    }
}
