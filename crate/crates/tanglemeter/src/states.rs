//! Validated quantum-state types, canonical and random generators, and the
//! state file format.
//!
//! States are always qubit registers (every subsystem dimension is 2) of at
//! most four qubits. A [`DensityMatrix`] must be Hermitian within 1e-10,
//! have unit trace within 1e-10 and minimum eigenvalue ≥ -1e-10; a
//! [`PureState`] must have unit norm within 1e-10. Construction reports the
//! first violated invariant together with its measured magnitude.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tolerance on Hermiticity, trace and norm checks.
pub const STATE_TOL: f64 = 1e-10;

pub mod rng {
    //! Seedable, reproducible random numbers.
    //!
    //! All randomness in the crate flows through a ChaCha8 generator keyed
    //! by a caller-supplied 64-bit seed, with Gaussian variates produced by
    //! the Box–Muller transform. Sub-streams derived from (seed, index) let
    //! sweeps draw per-trial generators that are independent of iteration
    //! order.

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// ChaCha8 keyed by a 64-bit seed.
    pub struct SeededRng(ChaCha8Rng);

    impl SeededRng {
        pub fn from_seed(seed: u64) -> Self {
            SeededRng(ChaCha8Rng::seed_from_u64(seed))
        }

        /// Independent generator for trial `index` under the same seed.
        pub fn substream(seed: u64, index: u64) -> Self {
            let mut inner = ChaCha8Rng::seed_from_u64(seed);
            inner.set_stream(index.wrapping_add(1));
            SeededRng(inner)
        }

        /// Uniform draw in [0, 1).
        #[inline]
        pub fn uniform(&mut self) -> f64 {
            self.0.random::<f64>()
        }

        /// Bernoulli draw with success probability `p`.
        #[inline]
        pub fn bernoulli(&mut self, p: f64) -> bool {
            self.uniform() < p
        }
    }

    /// One pair of independent standard normals via Box–Muller.
    pub fn standard_normal(rng: &mut SeededRng) -> (f64, f64) {
        let u1 = 1.0 - rng.uniform(); // (0, 1]
        let u2 = rng.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// One standard complex normal (real and imaginary parts N(0,1)).
    pub fn complex_normal(rng: &mut SeededRng) -> num_complex::Complex64 {
        let (a, b) = standard_normal(rng);
        num_complex::Complex64::new(a, b)
    }
}

use rng::{complex_normal, SeededRng};

/// Density matrix over a list of qubit subsystems.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a raw matrix.
    pub fn new(mat: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if mat.rows() != total || mat.cols() != total {
            return Err(Error::DimMismatch {
                context: "density matrix size vs subsystem dims",
                got: mat.rows(),
                expected: total,
            });
        }
        mat.require_hermitian(STATE_TOL)?;
        let tr = mat.trace();
        let tr_dev = (tr - Complex64::new(1.0, 0.0)).norm();
        if tr_dev > STATE_TOL {
            return Err(Error::TraceNotOne { deviation: tr_dev });
        }
        let eig = linalg::herm_eig(&mat)?;
        if let Some(&min) = eig
            .eigenvalues
            .last()
            .filter(|&&w| w < -STATE_TOL)
        {
            return Err(Error::NegativeEigenvalue {
                value: min,
                tolerance: STATE_TOL,
            });
        }
        Ok(DensityMatrix { dims, mat })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_qubits(&self) -> usize {
        self.dims.len()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.mat
            .matmul(&self.mat)
            .expect("square by construction")
            .trace()
            .re
    }

    /// Reduced state over the `keep` subsystems.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = linalg::partial_trace(&self.mat, &self.dims, keep)?;
        let dims = keep.iter().map(|&k| self.dims[k]).collect();
        DensityMatrix::new(m, dims)
    }

    /// Spectral decomposition into pure components with weights above
    /// `weight_floor`. Weights in `[-1e-10, weight_floor)` are dropped.
    pub fn ensemble(&self, weight_floor: f64) -> Result<Vec<(f64, PureState)>> {
        let eig = linalg::herm_eig(&self.mat)?;
        let mut out = Vec::new();
        for (i, &w) in eig.eigenvalues.iter().enumerate() {
            if w < -STATE_TOL {
                return Err(Error::NegativeEigenvalue {
                    value: w,
                    tolerance: STATE_TOL,
                });
            }
            if w < weight_floor {
                continue;
            }
            let amps: Vec<Complex64> = (0..self.dim())
                .map(|r| eig.eigenvectors.at(r, i))
                .collect();
            out.push((w, PureState::new(amps, self.dims.clone())?));
        }
        Ok(out)
    }
}

/// Pure state over a list of qubit subsystems.
#[derive(Debug, Clone)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if amps.len() != total {
            return Err(Error::DimMismatch {
                context: "amplitude count vs subsystem dims",
                got: amps.len(),
                expected: total,
            });
        }
        for (i, a) in amps.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: 0 });
            }
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let dev = (norm - 1.0).abs();
        if dev > STATE_TOL {
            return Err(Error::NormNotOne { deviation: dev });
        }
        Ok(PureState { dims, amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_qubits(&self) -> usize {
        self.dims.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// |ψ⟩⟨ψ| as a validated density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let n = self.amps.len();
        let mut m = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m.set(r, c, self.amps[r] * self.amps[c].conj());
            }
        }
        DensityMatrix::new(m, self.dims.clone()).expect("projector of a unit vector is a state")
    }

    /// Reduced density matrix over the `keep` subsystems.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        self.to_density().reduced(keep)
    }

    /// Relabel subsystems: new subsystem `i` is old subsystem `perm[i]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<PureState> {
        if perm.len() != self.dims.len() {
            return Err(Error::ParamOutOfRange(
                "party permutation length mismatch".into(),
            ));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::ParamOutOfRange(
                    "party permutation is not a bijection".into(),
                ));
            }
            seen[p] = true;
        }
        let n = self.dims.len();
        // All subsystems are qubits, so indices are plain bit strings with
        // subsystem 0 as the most significant bit.
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (idx, &a) in self.amps.iter().enumerate() {
            let mut new_idx = 0usize;
            for (new_pos, &old_pos) in perm.iter().enumerate() {
                let bit = (idx >> (n - 1 - old_pos)) & 1;
                new_idx |= bit << (n - 1 - new_pos);
            }
            amps[new_idx] = a;
        }
        let dims = perm.iter().map(|&p| self.dims[p]).collect();
        PureState::new(amps, dims)
    }
}

/// A state of either kind, as read from a state file.
#[derive(Debug, Clone)]
pub enum StateData {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl StateData {
    pub fn dims(&self) -> &[usize] {
        match self {
            StateData::Pure(p) => p.dims(),
            StateData::Mixed(m) => m.dims(),
        }
    }

    /// View as a density matrix, projecting pure states.
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            StateData::Pure(p) => p.to_density(),
            StateData::Mixed(m) => m.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            StateData::Pure(p) => Some(p),
            StateData::Mixed(_) => None,
        }
    }
}

/// Canonical test states with hand-checkable entanglement values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedState {
    BellPhiPlus,
    Product00,
    /// `p |Φ+⟩⟨Φ+| + (1-p) I/4` with `0 ≤ p ≤ 1`.
    Werner(f64),
    Ghz3,
    W3,
    MaxMixed,
}

/// Parse a state name as used on the command line, e.g. `werner(0.5)`.
pub fn parse_named(name: &str) -> Result<NamedState> {
    let name = name.trim();
    match name {
        "bell_phi_plus" => return Ok(NamedState::BellPhiPlus),
        "product00" => return Ok(NamedState::Product00),
        "ghz3" => return Ok(NamedState::Ghz3),
        "w3" => return Ok(NamedState::W3),
        "max_mixed" => return Ok(NamedState::MaxMixed),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("werner(").and_then(|r| r.strip_suffix(')')) {
        let p: f64 = rest
            .parse()
            .map_err(|_| Error::UnknownState(name.to_string()))?;
        return Ok(NamedState::Werner(p));
    }
    Err(Error::UnknownState(name.to_string()))
}

/// Construct a canonical state.
pub fn make_named(which: NamedState) -> Result<StateData> {
    let c0 = Complex64::new(0.0, 0.0);
    let c1 = Complex64::new(1.0, 0.0);
    match which {
        NamedState::BellPhiPlus => {
            let s = 1.0 / 2f64.sqrt();
            let amps = vec![c1 * s, c0, c0, c1 * s];
            Ok(StateData::Pure(PureState::new(amps, vec![2, 2])?))
        }
        NamedState::Product00 => {
            let amps = vec![c1, c0, c0, c0];
            Ok(StateData::Pure(PureState::new(amps, vec![2, 2])?))
        }
        NamedState::Werner(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ParamOutOfRange(format!(
                    "werner parameter {p} outside [0, 1]"
                )));
            }
            let bell = match make_named(NamedState::BellPhiPlus)? {
                StateData::Pure(b) => b.to_density(),
                StateData::Mixed(_) => unreachable!(),
            };
            let m = bell
                .mat()
                .scale_re(p)
                .add(&CMatrix::identity(4).scale_re((1.0 - p) / 4.0))?;
            Ok(StateData::Mixed(DensityMatrix::new(m, vec![2, 2])?))
        }
        NamedState::Ghz3 => {
            let s = 1.0 / 2f64.sqrt();
            let mut amps = vec![c0; 8];
            amps[0] = c1 * s;
            amps[7] = c1 * s;
            Ok(StateData::Pure(PureState::new(amps, vec![2, 2, 2])?))
        }
        NamedState::W3 => {
            let s = 1.0 / 3f64.sqrt();
            let mut amps = vec![c0; 8];
            amps[0b001] = c1 * s;
            amps[0b010] = c1 * s;
            amps[0b100] = c1 * s;
            Ok(StateData::Pure(PureState::new(amps, vec![2, 2, 2])?))
        }
        NamedState::MaxMixed => {
            let m = CMatrix::identity(4).scale_re(0.25);
            Ok(StateData::Mixed(DensityMatrix::new(m, vec![2, 2])?))
        }
    }
}

/// Haar-random pure state on `n_qubits` qubits.
pub fn random_pure(n_qubits: usize, seed: u64) -> Result<PureState> {
    check_qubits(n_qubits)?;
    let mut rng = SeededRng::from_seed(seed);
    let dim = 1usize << n_qubits;
    let mut amps: Vec<Complex64> = (0..dim).map(|_| complex_normal(&mut rng)).collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    PureState::new(amps, vec![2; n_qubits])
}

/// Random mixed state `G G† / tr(G G†)` with a complex-Gaussian
/// `2^n × rank` factor `G`.
pub fn random_mixed(n_qubits: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    check_qubits(n_qubits)?;
    let dim = 1usize << n_qubits;
    if rank < 1 || rank > dim {
        return Err(Error::ParamOutOfRange(format!(
            "rank {rank} outside 1..={dim}"
        )));
    }
    let mut rng = SeededRng::from_seed(seed);
    let mut g = CMatrix::zeros(dim, rank);
    for r in 0..dim {
        for c in 0..rank {
            g.set(r, c, complex_normal(&mut rng));
        }
    }
    let p = g.matmul(&g.dagger())?;
    let tr = p.trace().re;
    DensityMatrix::new(p.scale_re(1.0 / tr), vec![2; n_qubits])
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if !(1..=4).contains(&n_qubits) {
        return Err(Error::ParamOutOfRange(format!(
            "qubit count {n_qubits} outside 1..=4"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// State file format

/// Serialized form: `{"dims": [...], "kind": "mixed"|"pure",
/// "matrix": [[[re,im],...],...]}` or `"amplitudes": [[re,im],...]`.
#[derive(Debug, Serialize, Deserialize)]
struct RawStateFile {
    dims: Vec<usize>,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitudes: Option<Vec<[f64; 2]>>,
}

/// Parse and validate a state file from JSON text.
pub fn parse_state(json: &str) -> Result<StateData> {
    let raw: RawStateFile = serde_json::from_str(json)?;
    match raw.kind.as_str() {
        "mixed" => {
            let rows = raw
                .matrix
                .ok_or_else(|| Error::BadStateFile("kind is `mixed` but no `matrix`".into()))?;
            let n = rows.len();
            let mut data = Vec::with_capacity(n * n);
            for row in &rows {
                if row.len() != n {
                    return Err(Error::BadStateFile(format!(
                        "matrix is not square: row of length {} in a {}-row matrix",
                        row.len(),
                        n
                    )));
                }
                for &[re, im] in row {
                    data.push(Complex64::new(re, im));
                }
            }
            let mat = CMatrix::from_vec(n, n, data)?;
            Ok(StateData::Mixed(DensityMatrix::new(mat, raw.dims)?))
        }
        "pure" => {
            let amps = raw
                .amplitudes
                .ok_or_else(|| Error::BadStateFile("kind is `pure` but no `amplitudes`".into()))?;
            let amps = amps
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect();
            Ok(StateData::Pure(PureState::new(amps, raw.dims)?))
        }
        other => Err(Error::BadStateFile(format!("unknown kind `{other}`"))),
    }
}

/// Serialize a state to the JSON file format.
pub fn state_to_json(state: &StateData) -> String {
    let raw = match state {
        StateData::Mixed(dm) => {
            let n = dm.dim();
            let matrix = (0..n)
                .map(|r| {
                    (0..n)
                        .map(|c| {
                            let z = dm.mat().at(r, c);
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect();
            RawStateFile {
                dims: dm.dims().to_vec(),
                kind: "mixed".into(),
                matrix: Some(matrix),
                amplitudes: None,
            }
        }
        StateData::Pure(p) => RawStateFile {
            dims: p.dims().to_vec(),
            kind: "pure".into(),
            matrix: None,
            amplitudes: Some(p.amps().iter().map(|a| [a.re, a.im]).collect()),
        },
    };
    serde_json::to_string_pretty(&raw).expect("state file serialization cannot fail")
}

/// Read and validate a state file.
pub fn load_state(path: &std::path::Path) -> Result<StateData> {
    parse_state(&std::fs::read_to_string(path)?)
}
