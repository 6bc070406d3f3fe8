//! Recover the spectrum {η} of ρρ̃, and from it the concurrence, from the
//! first four moments p_m = Tr((ρρ̃)^m).
//!
//! The spectrum has exactly four points, so the inversion is Newton's
//! identities (power sums → elementary symmetric polynomials) followed by a
//! quartic root solve. Roots are found by Durand–Kerner iteration and
//! polished with two Newton steps.
//!
//! Degenerate spectra need one extra step: a root of multiplicity m can
//! only be located to O(ε^(1/m)) by any polynomial-rootfinding route, so an
//! exact quadruple root like η = 1/16 comes back as a tight complex cluster
//! with imaginary dust far above the exact-arithmetic level. Clusters that
//! are small on an absolute scale are therefore collapsed to their centroid
//! (the centroid is pinned by the coefficients themselves and is accurate to
//! O(ε)). Imaginary parts surviving below the noise threshold are dropped;
//! anything larger is reported as an inconsistent moment set.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

/// How a moment set was obtained; sampled sets carry standard errors that
/// widen the inversion tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MomentSource {
    Exact,
    Sampled,
}

/// The first four power sums of ρρ̃.
#[derive(Debug, Clone, Serialize)]
pub struct MomentSet {
    /// p[m-1] = Tr((ρρ̃)^m) for m = 1..4.
    pub p: [f64; 4],
    pub source: MomentSource,
    /// Standard errors of the four moments when sampled.
    pub stderr: Option<[f64; 4]>,
}

impl MomentSet {
    pub fn exact(p: [f64; 4]) -> Self {
        MomentSet {
            p,
            source: MomentSource::Exact,
            stderr: None,
        }
    }

    pub fn sampled(p: [f64; 4], stderr: [f64; 4]) -> Self {
        MomentSet {
            p,
            source: MomentSource::Sampled,
            stderr: Some(stderr),
        }
    }

    /// Largest standard error, zero for exact sets.
    pub fn noise_scale(&self) -> f64 {
        self.stderr
            .map(|s| s.iter().cloned().fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

/// Recovered spectrum and concurrence, with inversion diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    /// Elementary symmetric polynomials e₁..e₄ of the spectrum.
    pub e: [f64; 4],
    /// Spectrum of ρρ̃, descending.
    pub etas: [f64; 4],
    /// λᵢ = √ηᵢ, descending.
    pub lambdas: [f64; 4],
    pub concurrence: f64,
    /// Largest imaginary part left on any root before it was dropped.
    pub max_imag_residue: f64,
    /// |rebuilt p_m - input p_m| for m = 1..4.
    pub rebuild_residual: [f64; 4],
}

/// Newton's identities: power sums p₁..p₄ to elementary symmetric e₁..e₄.
pub fn newton_elementary(moments: &MomentSet) -> [f64; 4] {
    let [p1, p2, p3, p4] = moments.p;
    let e1 = p1;
    let e2 = (e1 * p1 - p2) / 2.0;
    let e3 = (e2 * p1 - e1 * p2 + p3) / 3.0;
    let e4 = (e3 * p1 - e2 * p2 + e1 * p3 - p4) / 4.0;
    [e1, e2, e3, e4]
}

fn poly_eval(e: &[f64; 4], x: Complex64) -> Complex64 {
    // x^4 - e1 x^3 + e2 x^2 - e3 x + e4, Horner form.
    let coeffs = [1.0, -e[0], e[1], -e[2], e[3]];
    let mut acc = Complex64::new(coeffs[0], 0.0);
    for &c in &coeffs[1..] {
        acc = acc * x + Complex64::new(c, 0.0);
    }
    acc
}

fn poly_deriv(e: &[f64; 4], x: Complex64) -> Complex64 {
    // 4x^3 - 3 e1 x^2 + 2 e2 x - e3
    let coeffs = [4.0, -3.0 * e[0], 2.0 * e[1], -e[2]];
    let mut acc = Complex64::new(coeffs[0], 0.0);
    for &c in &coeffs[1..] {
        acc = acc * x + Complex64::new(c, 0.0);
    }
    acc
}

/// Real evaluation of the k-th derivative of x⁴ − e₁x³ + e₂x² − e₃x + e₄.
fn poly_deriv_real(e: &[f64; 4], k: usize, x: f64) -> f64 {
    let base = [1.0, -e[0], e[1], -e[2], e[3]];
    // Coefficient of x^(4-k-i) in p^(k) is base[i] * (4-i)! / (4-i-k)!.
    let mut coeffs = Vec::new();
    for (i, &b) in base.iter().enumerate() {
        let deg = 4 - i;
        if deg < k {
            break;
        }
        let mut f = 1.0;
        for d in 0..k {
            f *= (deg - d) as f64;
        }
        coeffs.push(b * f);
    }
    let mut acc = 0.0;
    for &c in &coeffs {
        acc = acc * x + c;
    }
    acc
}

/// One single-linkage clustering pass at `link_radius`: clusters with a
/// diameter within `diameter_cap` collapse to a refined real center.
/// Returns true when some over-cap cluster was left unmerged, meaning a
/// tighter pass is worth attempting.
fn merge_pass(
    roots: &mut [Complex64],
    e: &[f64; 4],
    link_radius: f64,
    diameter_cap: f64,
) -> bool {
    let n = roots.len();
    let mut group: Vec<usize> = (0..n).collect();
    // Transitive closure by repeated relabeling; n is tiny.
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if (roots[i] - roots[j]).norm() <= link_radius && group[i] != group[j] {
                    let g = group[i].min(group[j]);
                    let h = group[i].max(group[j]);
                    for k in 0..n {
                        if group[k] == h {
                            group[k] = g;
                        }
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut saw_overcap = false;
    for g in 0..n {
        let members: Vec<usize> = (0..n).filter(|&i| group[i] == g).collect();
        if members.len() < 2 {
            continue;
        }
        let mut diameter = 0.0f64;
        for &i in &members {
            for &j in &members {
                diameter = diameter.max((roots[i] - roots[j]).norm());
            }
        }
        if diameter > diameter_cap {
            saw_overcap = true;
            continue;
        }
        let centroid =
            members.iter().map(|&i| roots[i]).sum::<Complex64>() / members.len() as f64;
        let refined = refine_cluster_center(e, members.len(), centroid.re, diameter.max(link_radius));
        for &i in &members {
            roots[i] = Complex64::new(refined, 0.0);
        }
    }
    saw_overcap
}

/// A cluster of `m` near-coincident roots surrounds a simple root of the
/// (m-1)-th derivative, which is well conditioned; polish the cluster
/// centroid there with real Newton steps.
fn refine_cluster_center(e: &[f64; 4], m: usize, start: f64, radius: f64) -> f64 {
    let k = m - 1;
    let mut x = start;
    for _ in 0..60 {
        let f = poly_deriv_real(e, k, x);
        let d = poly_deriv_real(e, k + 1, x);
        if d == 0.0 {
            break;
        }
        let step = f / d;
        x -= step;
        if step.abs() < 1e-17 {
            break;
        }
    }
    // Stay within the cluster if Newton ran off somewhere else.
    if (x - start).abs() <= 10.0 * radius + 1e-9 {
        x
    } else {
        start
    }
}

/// Absolute distance below which two roots count as one cluster, given the
/// observed imaginary dust level.
fn cluster_radius(max_imag: f64) -> f64 {
    (6.0 * max_imag).max(1e-9)
}

/// Clusters larger than this are genuine structure, not rounding dust, and
/// are never collapsed.
const CLUSTER_DIAMETER_CAP: f64 = 1e-3;

/// Recovered eigenvalues below this are rounding dust around zero.
const ZERO_SNAP: f64 = 1e-12;

/// Roots of x⁴ − e₁x³ + e₂x² − e₃x + e₄ for a spectrum of ρρ̃.
///
/// `noise` is the standard-error scale of the moments behind `e` (zero for
/// exact moments); imaginary parts below `max(1e-7, 10·noise)` are dropped.
/// Returns the four roots clamped to [0, 1] and sorted descending, plus the
/// largest imaginary residue seen.
pub fn roots_quartic(e: [f64; 4], noise: f64) -> Result<([f64; 4], f64)> {
    for c in &e {
        if !c.is_finite() {
            return Err(Error::ParamOutOfRange(
                "non-finite elementary symmetric coefficient".into(),
            ));
        }
    }
    let threshold = (1e-7f64).max(10.0 * noise);

    // Durand-Kerner from the standard staggered start.
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (1..=4).map(|k| seed.powu(k)).collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                // Coincident iterates; nudge apart and continue.
                roots[i] += Complex64::new(1e-9, 1e-9);
                continue;
            }
            let step = poly_eval(&e, roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-15 {
            break;
        }
    }

    // Two Newton polish steps per root.
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let d = poly_deriv(&e, *r);
            if d.norm() > 1e-12 {
                *r -= poly_eval(&e, *r) / d;
            }
        }
    }

    let max_imag = |rs: &[Complex64]| rs.iter().map(|r| r.im.abs()).fold(0.0, f64::max);
    let mut residue = max_imag(&roots);

    if residue > threshold {
        // Multiple roots come back as a tight complex cluster; collapse
        // small clusters to their centroid, which the coefficients pin to
        // O(eps). Large clusters are left alone so genuinely complex roots
        // still fail the threshold below. Under sampled noise the dust on a
        // degenerate root grows like sqrt(noise / separation), so the
        // diameter cap widens with the noise scale.
        let radius = cluster_radius(residue);
        let diameter_cap = CLUSTER_DIAMETER_CAP.max(50.0 * noise.sqrt());
        let mut link_radius = radius;
        for _ in 0..24 {
            if !merge_pass(&mut roots, &e, link_radius, diameter_cap) {
                break;
            }
            // A cluster exceeded the cap (a stray simple root got chained
            // in); retry with tighter linkage so the dust pair can still
            // collapse on its own.
            link_radius *= 0.5;
            if link_radius < 1e-9 {
                break;
            }
        }
        residue = max_imag(&roots);
        if residue > threshold {
            return Err(Error::ImagResidue {
                residue,
                threshold,
            });
        }
    }

    // Clamp into [0, 1] and snap sub-rounding dust to exactly zero, so a
    // true zero eigenvalue does not leak O(1e-8) into lambda = sqrt(eta).
    let mut out: Vec<f64> = roots
        .iter()
        .map(|r| {
            let x = r.re.clamp(0.0, 1.0);
            if x < ZERO_SNAP {
                0.0
            } else {
                x
            }
        })
        .collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(([out[0], out[1], out[2], out[3]], residue))
}

/// Full inversion: moments → spectrum → concurrence.
pub fn concurrence_from_moments(moments: &MomentSet) -> Result<SpectrumResult> {
    let e = newton_elementary(moments);
    let (etas, max_imag_residue) = roots_quartic(e, moments.noise_scale())?;
    let lambdas = [
        etas[0].sqrt(),
        etas[1].sqrt(),
        etas[2].sqrt(),
        etas[3].sqrt(),
    ];
    let concurrence = (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0);
    let mut rebuild_residual = [0.0; 4];
    for m in 1..=4 {
        let rebuilt: f64 = etas.iter().map(|x| x.powi(m as i32)).sum();
        rebuild_residual[m - 1] = (rebuilt - moments.p[m - 1]).abs();
    }
    Ok(SpectrumResult {
        e,
        etas,
        lambdas,
        concurrence,
        max_imag_residue,
        rebuild_residual,
    })
}
