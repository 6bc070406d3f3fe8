//! Dense complex matrix kernel.
//!
//! Everything in this artifact is a small dense matrix (4×4 and 8×8
//! operators, statevectors handled elsewhere), so the kernel is a plain
//! row-major `Vec<Complex64>` with products, Kronecker products, partial
//! trace over listed subsystems, a cyclic Jacobi Hermitian eigensolver, and
//! the positive-semidefinite square root built on it.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Off-diagonal norm at which the Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-12;
/// Maximum number of Jacobi sweeps before reporting non-convergence.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Eigenvalues in `[-PSD_CLAMP, 0)` are treated as rounding dust and clamped
/// to zero; anything below is an error.
pub const PSD_CLAMP: f64 = 1e-10;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a flat row-major entry list. Fails on a shape mismatch or
    /// any non-finite entry.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                context: "matrix entry count",
                got: data.len(),
                expected: rows * cols,
            });
        }
        let m = CMatrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    /// Build from real entries (imaginary parts zero).
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    /// Diagonal matrix from real values.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    fn check_finite(&self) -> Result<()> {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let z = self.at(r, c);
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(())
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                context: "matmul inner dimension",
                got: other.rows,
                expected: self.cols,
            });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product with `self` as the slow (left) factor.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = CMatrix::zeros(rows, cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.at(i1, j1);
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out.set(
                            i1 * other.rows + i2,
                            j1 * other.cols + j2,
                            a * other.at(i2, j2),
                        );
                    }
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c).conj());
            }
        }
        out
    }

    /// Transpose without conjugation (computational-basis transpose).
    pub fn transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c));
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.at(i, i)).sum()
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<CMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimMismatch {
                context: "elementwise combine",
                got: other.rows * other.cols,
                expected: self.rows * self.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Largest elementwise absolute difference from `other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from Hermiticity, max |m - m†|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                dev = dev.max((self.at(r, c) - self.at(c, r).conj()).norm());
            }
        }
        dev
    }

    /// Error unless `self` is square and Hermitian within `tol`.
    pub fn require_hermitian(&self, tol: f64) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimMismatch {
                context: "hermitian check on non-square matrix",
                got: self.cols,
                expected: self.rows,
            });
        }
        let dev = self.hermiticity_deviation();
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(())
    }

    /// Deviation from unitarity, max |U†U - 1|.
    pub fn unitarity_deviation(&self) -> f64 {
        match self.dagger().matmul(self) {
            Ok(p) => p.max_abs_diff(&CMatrix::identity(self.rows)),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending; `eigenvectors` holds the matching
/// orthonormal eigenvectors as columns, so `V · diag(w) · V†` reconstructs
/// the input.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermEig {
    /// Rebuild `V · diag(w) · V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::diag(&self.eigenvalues);
        self.eigenvectors
            .matmul(&d)
            .and_then(|m| m.matmul(&self.eigenvectors.dagger()))
            .expect("shapes agree by construction")
    }
}

fn offdiag_norm(m: &CMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += m.at(r, c).norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigendecomposition by cyclic Jacobi with complex rotations.
///
/// Each sweep annihilates every off-diagonal pair (p, q) with a unitary
/// two-sided rotation built from the phase of `a_pq` and the classical
/// symmetric-Schur angle. Iterates until the off-diagonal norm falls below
/// 1e-12 or 100 sweeps elapse.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    m.require_hermitian(1e-10)?;
    let n = m.rows();
    let mut a = m.clone();
    // Symmetrize exactly so rounding in the input cannot bias the rotations.
    for r in 0..n {
        for c in 0..n {
            let h = (a.at(r, c) + a.at(c, r).conj()) * Complex64::new(0.5, 0.0);
            a.set(r, c, h);
        }
    }
    let mut v = CMatrix::identity(n);

    let mut off = offdiag_norm(&a);
    let mut sweeps = 0;
    while off > JACOBI_TOL && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // Phase factor making the pivot real, then the classical
                // Jacobi angle for the real 2x2 block [[app, r], [r, aqq]].
                let phase = apq / r; // e^{i phi}
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Unitary J = diag(1, e^{-i phi}) * [[c, -s], [s, c]] on the
                // (p, q) plane; apply A <- J† A J and accumulate V <- V J.
                let eminus = phase.conj();
                let se = Complex64::new(s, 0.0) * eminus;
                let ce = Complex64::new(c, 0.0) * eminus;
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, akp * c + akq * se);
                    a.set(k, q, akq * ce - akp * s);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, apk * c + aqk * se.conj());
                    a.set(q, k, aqk * ce.conj() - apk * s);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, vkp * c + vkq * se);
                    v.set(k, q, vkq * ce - vkp * s);
                }
                // Keep the working matrix exactly Hermitian on the pivot.
                let d = a.at(p, q);
                let dh = (d + a.at(q, p).conj()) * Complex64::new(0.5, 0.0);
                a.set(p, q, dh);
                a.set(q, p, dh.conj());
            }
        }
        off = offdiag_norm(&a);
        sweeps += 1;
    }
    if off > JACOBI_TOL && off > 1e-8 {
        return Err(Error::NonConvergence { off, sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap());

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(evals[src]);
        for k in 0..n {
            eigenvectors.set(k, dst, v.at(k, src));
        }
    }
    Ok(HermEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Positive-semidefinite square root.
///
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero; anything lower is an
/// error rather than dust.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(m)?;
    let mut roots = Vec::with_capacity(eig.eigenvalues.len());
    for &w in &eig.eigenvalues {
        if w < -PSD_CLAMP {
            return Err(Error::NegativeEigenvalue {
                value: w,
                tolerance: PSD_CLAMP,
            });
        }
        roots.push(w.max(0.0).sqrt());
    }
    let v = &eig.eigenvectors;
    let vd = v.matmul(&CMatrix::diag(&roots))?;
    vd.matmul(&v.dagger())
}

/// Partial trace over the subsystems *not* listed in `keep`.
///
/// `dims` lists the subsystem dimensions (slow index first, matching
/// [`CMatrix::kron`]); `keep` is the set of subsystem indices retained, in
/// increasing order.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.rows() != total || m.cols() != total {
        return Err(Error::DimMismatch {
            context: "partial trace dims product",
            got: m.rows(),
            expected: total,
        });
    }
    if keep.is_empty() {
        return Err(Error::ParamOutOfRange(
            "partial trace keep set is empty".into(),
        ));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::ParamOutOfRange(format!(
            "keep index out of range for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // Mixed-radix digit helpers over the subsystem list.
    let digits = |mut idx: usize, subsys: &[usize]| -> Vec<usize> {
        let mut out = vec![0; subsys.len()];
        for (slot, &s) in subsys.iter().enumerate().rev() {
            out[slot] = idx % dims[s];
            idx /= dims[s];
        }
        out
    };
    let full_index = |kd: &[usize], td: &[usize]| -> usize {
        let mut idx = 0;
        let mut ki = 0;
        let mut ti = 0;
        for (s, &d) in dims.iter().enumerate() {
            let digit = if keep.contains(&s) {
                ki += 1;
                kd[ki - 1]
            } else {
                ti += 1;
                td[ti - 1]
            };
            idx = idx * d + digit;
        }
        idx
    };

    let mut out = CMatrix::zeros(keep_dim, keep_dim);
    for rk in 0..keep_dim {
        let rkd = digits(rk, &keep);
        for ck in 0..keep_dim {
            let ckd = digits(ck, &keep);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..traced_dim {
                let td = digits(t, &traced);
                acc += m.at(full_index(&rkd, &td), full_index(&ckd, &td));
            }
            out.set(rk, ck, acc);
        }
    }
    Ok(out)
}
