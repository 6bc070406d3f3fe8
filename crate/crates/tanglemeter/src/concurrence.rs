//! Spin flip, ρρ̃ moments, and the Wootters concurrence oracle.
//!
//! For a two-qubit density matrix ρ the spin-flipped state is
//! ρ̃ = (σ_y⊗σ_y) ρᵀ (σ_y⊗σ_y), with the transpose taken in the
//! computational basis. The same operator expands, for Hermitian unit-trace
//! ρ, into the four-term sum ρ − 1⊗ρ_B − ρ_A⊗1 + 1; [`spin_flip_direct`]
//! and [`spin_flip_sum`] implement the two routes so they can cross-check
//! each other. The concurrence is
//! C = max(λ₁ − λ₂ − λ₃ − λ₄, 0) where the λᵢ are the positive square
//! roots of the eigenvalues of ρρ̃ in decreasing order.
//!
//! ρρ̃ itself is not Hermitian, but its nonzero spectrum equals that of the
//! Hermitian product √ρ·ρ̃·√ρ, so everything here reduces to Hermitian
//! eigensolves.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::states::DensityMatrix;
use num_complex::Complex64;

/// Eigenvalues of ρρ̃ in [-ETA_CLAMP, 0) count as rounding dust and clamp
/// to zero; anything lower signals a logic bug, not noise.
pub const ETA_CLAMP: f64 = 1e-9;

/// The antisymmetric ε matrix and σ_y = iε.
#[derive(Debug, Clone)]
pub struct SpinFlipConstants {
    pub epsilon: CMatrix,
    pub sigma_y: CMatrix,
}

impl SpinFlipConstants {
    pub fn new() -> Self {
        let epsilon = CMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        let sigma_y = epsilon.scale(Complex64::new(0.0, 1.0));
        SpinFlipConstants { epsilon, sigma_y }
    }

    /// σ_y ⊗ σ_y.
    pub fn sigma_y_pair(&self) -> CMatrix {
        self.sigma_y.kron(&self.sigma_y)
    }
}

impl Default for SpinFlipConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Spectrum data behind a concurrence value: η eigenvalues of ρρ̃ and
/// their square roots λ, both descending.
#[derive(Debug, Clone)]
pub struct ConcurrenceSpectrum {
    pub etas: [f64; 4],
    pub lambdas: [f64; 4],
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

/// ρ̃ by the defining conjugation (σ_y⊗σ_y) ρᵀ (σ_y⊗σ_y).
pub fn spin_flip_direct(rho: &DensityMatrix) -> Result<CMatrix> {
    require_two_qubit(rho)?;
    let yy = SpinFlipConstants::new().sigma_y_pair();
    yy.matmul(&rho.mat().transpose())?.matmul(&yy)
}

/// ρ̃ by the four-term expansion ρ − 1⊗ρ_B − ρ_A⊗1 + 1.
pub fn spin_flip_sum(rho: &DensityMatrix) -> Result<CMatrix> {
    require_two_qubit(rho)?;
    let rho_a = linalg::partial_trace(rho.mat(), &[2, 2], &[0])?;
    let rho_b = linalg::partial_trace(rho.mat(), &[2, 2], &[1])?;
    let i2 = CMatrix::identity(2);
    rho.mat()
        .sub(&i2.kron(&rho_b))?
        .sub(&rho_a.kron(&i2))?
        .add(&CMatrix::identity(4))
}

/// The product ρρ̃.
pub fn rho_rhotilde(rho: &DensityMatrix) -> Result<CMatrix> {
    rho.mat().matmul(&spin_flip_direct(rho)?)
}

/// First four moments p_m = Tr((ρρ̃)^m) by repeated matrix products.
pub fn moments_direct(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let m1 = rho_rhotilde(rho)?;
    let mut p = [0.0; 4];
    let mut acc = m1.clone();
    for slot in 0..4 {
        p[slot] = acc.trace().re;
        if slot < 3 {
            acc = acc.matmul(&m1)?;
        }
    }
    debug_assert!(
        {
            let rho_a = linalg::partial_trace(rho.mat(), &[2, 2], &[0]).unwrap();
            let rho_b = linalg::partial_trace(rho.mat(), &[2, 2], &[1]).unwrap();
            let closed = purity_of(rho.mat()) - purity_of(&rho_a) - purity_of(&rho_b) + 1.0;
            (closed - p[0]).abs() < 1e-12
        },
        "first moment disagrees with tr rho^2 - tr rho_A^2 - tr rho_B^2 + 1"
    );
    Ok(p)
}

fn purity_of(m: &CMatrix) -> f64 {
    m.matmul(m).unwrap().trace().re
}

/// Wootters concurrence with the spectrum it came from.
///
/// The η are computed as the Hermitian eigenvalues of √ρ·ρ̃·√ρ, which
/// shares the nonzero spectrum of ρρ̃.
pub fn wootters_concurrence(rho: &DensityMatrix) -> Result<(f64, ConcurrenceSpectrum)> {
    require_two_qubit(rho)?;
    let s = linalg::psd_sqrt(rho.mat())?;
    let tilde = spin_flip_direct(rho)?;
    let herm = s.matmul(&tilde)?.matmul(&s)?;
    let eig = linalg::herm_eig(&herm)?;

    let mut etas = [0.0; 4];
    let mut lambdas = [0.0; 4];
    for (i, &eta) in eig.eigenvalues.iter().enumerate() {
        if eta < -ETA_CLAMP {
            return Err(Error::NegativeEigenvalue {
                value: eta,
                tolerance: ETA_CLAMP,
            });
        }
        etas[i] = eta.max(0.0);
        lambdas[i] = etas[i].sqrt();
    }
    let c = (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0);
    Ok((c, ConcurrenceSpectrum { etas, lambdas }))
}

/// Spectrum measured by the structural-physical-approximation route,
/// i.e. of μρ + νρρ̃, as the Hermitian eigenvalues of √ρ(μ·1 + νρ̃)√ρ.
///
/// Requires μ > ν ≥ 0. The result is dominated by μ·spec(ρ): the
/// concurrence information only enters through the ν-suppressed correction,
/// which is why this route cannot recover it without prior knowledge of ρ.
pub fn spa_spectrum(rho: &DensityMatrix, mu: f64, nu: f64) -> Result<Vec<f64>> {
    require_two_qubit(rho)?;
    if !(mu > nu && nu >= 0.0) {
        return Err(Error::ParamOutOfRange(format!(
            "spa parameters must satisfy mu > nu >= 0, got mu={mu}, nu={nu}"
        )));
    }
    let s = linalg::psd_sqrt(rho.mat())?;
    let tilde = spin_flip_direct(rho)?;
    let inner = CMatrix::identity(4)
        .scale_re(mu)
        .add(&tilde.scale_re(nu))?;
    let herm = s.matmul(&inner)?.matmul(&s)?;
    Ok(linalg::herm_eig(&herm)?.eigenvalues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_named, random_mixed, random_pure, NamedState, StateData};

    fn bell() -> DensityMatrix {
        make_named(NamedState::BellPhiPlus).unwrap().to_density()
    }

    fn product00() -> DensityMatrix {
        make_named(NamedState::Product00).unwrap().to_density()
    }

    fn max_mixed() -> DensityMatrix {
        match make_named(NamedState::MaxMixed).unwrap() {
            StateData::Mixed(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn sigma_y_is_i_epsilon_exactly() {
        let k = SpinFlipConstants::new();
        let i_eps = k.epsilon.scale(Complex64::new(0.0, 1.0));
        assert_eq!(k.sigma_y, i_eps);
    }

    #[test]
    fn spin_flip_fixed_points_and_flip() {
        // Bell state is spin-flip symmetric.
        let b = bell();
        assert!(spin_flip_direct(&b).unwrap().max_abs_diff(b.mat()) < 1e-14);

        // |00><00| flips to |11><11|.
        let p = product00();
        let flipped = spin_flip_direct(&p).unwrap();
        assert!(flipped.max_abs_diff(&CMatrix::diag(&[0.0, 0.0, 0.0, 1.0])) < 1e-14);

        // Maximally mixed state is invariant.
        let mm = max_mixed();
        assert!(spin_flip_direct(&mm).unwrap().max_abs_diff(mm.mat()) < 1e-15);
        assert!(spin_flip_sum(&mm).unwrap().max_abs_diff(mm.mat()) < 1e-15);
    }

    #[test]
    fn spin_flip_sum_product_state() {
        // diag(1,0,0,0) - diag(1,0,1,0) - diag(1,1,0,0) + I = diag(0,0,0,1)
        let p = product00();
        let s = spin_flip_sum(&p).unwrap();
        assert!(s.max_abs_diff(&CMatrix::diag(&[0.0, 0.0, 0.0, 1.0])) < 1e-14);
    }

    #[test]
    fn spin_flip_routes_agree_on_random_states() {
        for seed in 0..200 {
            let rho = random_mixed(2, 4, seed).unwrap();
            let d = spin_flip_direct(&rho).unwrap();
            let s = spin_flip_sum(&rho).unwrap();
            assert!(d.max_abs_diff(&s) < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn moments_of_canonical_states() {
        // Bell: rho rho~ = rho, a projector, so every moment is 1.
        let p = moments_direct(&bell()).unwrap();
        for m in 0..4 {
            assert!((p[m] - 1.0).abs() < 1e-12);
        }

        // Product state: orthogonal projectors multiply to zero.
        let p = moments_direct(&product00()).unwrap();
        for m in 0..4 {
            assert!(p[m].abs() < 1e-14);
        }

        // Maximally mixed: rho rho~ = I/16, so p_m = 4 * 16^-m.
        let p = moments_direct(&max_mixed()).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - 1.0 / 64.0).abs() < 1e-15);
        assert!((p[2] - 1.0 / 1024.0).abs() < 1e-16);
        assert!((p[3] - 1.0 / 16384.0).abs() < 1e-17);
    }

    #[test]
    fn closed_form_first_moment() {
        for seed in 0..200 {
            let rho = random_mixed(2, 4, seed + 1000).unwrap();
            let p = moments_direct(&rho).unwrap();
            let ra = rho.reduced(&[0]).unwrap();
            let rb = rho.reduced(&[1]).unwrap();
            let closed = rho.purity() - ra.purity() - rb.purity() + 1.0;
            assert!((p[0] - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn concurrence_of_canonical_states() {
        let (c, spec) = wootters_concurrence(&bell()).unwrap();
        assert!((c - 1.0).abs() < 1e-10);
        assert!((spec.lambdas[0] - 1.0).abs() < 1e-10);
        for i in 1..4 {
            assert!(spec.lambdas[i].abs() < 1e-8);
        }

        let (c, _) = wootters_concurrence(&product00()).unwrap();
        assert!(c.abs() < 1e-10);

        let (c, spec) = wootters_concurrence(&max_mixed()).unwrap();
        assert!(c.abs() < 1e-14);
        for i in 0..4 {
            assert!((spec.lambdas[i] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn werner_closed_form_curve() {
        // C(werner(p)) = max(0, (3p-1)/2); hand-checkable at p = 1 and 1/3.
        for step in 0..=20 {
            let p = step as f64 * 0.05;
            let rho = match make_named(NamedState::Werner(p)).unwrap() {
                StateData::Mixed(m) => m,
                _ => unreachable!(),
            };
            let (c, _) = wootters_concurrence(&rho).unwrap();
            let expect = (0.0f64).max((3.0 * p - 1.0) / 2.0);
            assert!((c - expect).abs() < 1e-10, "p={p}: {c} vs {expect}");
        }
    }

    #[test]
    fn pure_states_have_rank_one_spectrum() {
        for seed in 0..100 {
            let psi = random_pure(2, seed).unwrap();
            let (c, spec) = wootters_concurrence(&psi.to_density()).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&c));
            for i in 1..4 {
                assert!(spec.lambdas[i] < 1e-8, "seed {seed}: {:?}", spec.lambdas);
            }
        }
    }

    #[test]
    fn spa_limits() {
        // nu = 0 gives exactly mu * spec(rho).
        for seed in 0..50 {
            let rho = random_mixed(2, 4, seed + 2000).unwrap();
            let spa = spa_spectrum(&rho, 0.9, 0.0).unwrap();
            let spec = linalg::herm_eig(rho.mat()).unwrap().eigenvalues;
            for (a, b) in spa.iter().zip(&spec) {
                assert!((a - 0.9 * b).abs() < 1e-10);
            }
        }

        // Bell: rho rho~ = rho so the spectrum is just spec(rho).
        let spa = spa_spectrum(&bell(), 0.9, 0.1).unwrap();
        assert!((spa[0] - 1.0).abs() < 1e-10);
        for v in &spa[1..] {
            assert!(v.abs() < 1e-10);
        }

        // Maximally mixed: all eigenvalues 0.9/4 + 0.1/16.
        let spa = spa_spectrum(&max_mixed(), 0.9, 0.1).unwrap();
        for v in &spa {
            assert!((v - (0.9 / 4.0 + 0.1 / 16.0)).abs() < 1e-12);
        }

        // Continuity in the nu -> 0 limit.
        let rho = random_mixed(2, 4, 77).unwrap();
        let nu = 1e-6;
        let spa = spa_spectrum(&rho, 0.9, nu).unwrap();
        let spec = linalg::herm_eig(rho.mat()).unwrap().eigenvalues;
        for (a, b) in spa.iter().zip(&spec) {
            assert!((a - 0.9 * b).abs() < 10.0 * nu);
        }

        assert!(spa_spectrum(&rho, 0.1, 0.9).is_err());
    }

    #[test]
    fn rejects_wrong_dims() {
        let one_qubit = random_mixed(1, 2, 0).unwrap();
        assert!(spin_flip_direct(&one_qubit).is_err());
        assert!(wootters_concurrence(&one_qubit).is_err());
    }
}
