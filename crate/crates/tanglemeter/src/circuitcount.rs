//! Counting and canonicalization of the per-term measurement circuits.
//!
//! Measuring the four moments of ρρ̃ term by term naively needs
//! 4¹+4²+4³+4⁴ = 340 circuits. Cyclicity of the trace makes slot words
//! that are rotations of one another the same circuit, cutting the count
//! to the necklace numbers (4, 10, 24, 70 — 108 in total); slots equal to
//! the identity factor pass their rails straight through, which lets some
//! words collapse further onto wirings already counted at other orders.
//! Everything here is enumerated by brute force and cross-checked against
//! the closed-form necklace count.

use crate::error::{Error, Result};
use crate::momentcircuits::{enumerate_terms, eval_term_exact, MAX_MOMENT};
use crate::par;
use crate::states::DensityMatrix;
use serde::Serialize;

/// A slot word with its cyclic canonical form.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalTerm {
    pub moment_order: usize,
    /// Letters per ρ̃ slot: R = ρ, A = ρ_A⊗1, B = 1⊗ρ_B, I = 1.
    pub slot_word: String,
    /// Lexicographically minimal cyclic rotation of `slot_word`.
    pub canonical_form: String,
    /// True when identity slots let the wiring collapse onto a shorter one.
    pub reduced: bool,
}

/// Minimal cyclic rotation of a word.
pub fn canonical_rotation(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let mut best: Option<String> = None;
    for shift in 0..n {
        let rotated: String = (0..n).map(|i| chars[(i + shift) % n]).collect();
        if best.as_ref().is_none_or(|b| rotated < *b) {
            best = Some(rotated);
        }
    }
    best.unwrap_or_default()
}

/// The active wiring of a word once identity slots are deleted: a cyclic
/// sequence over {P, A, B} with one P for each chain copy of ρ and one P
/// for each R slot. Words from different moment orders that share this
/// form share a circuit.
pub fn reduced_word(slot_word: &str) -> String {
    let mut out = String::new();
    for letter in slot_word.chars() {
        out.push('P');
        match letter {
            'R' => out.push('P'),
            'A' => out.push('A'),
            'B' => out.push('B'),
            'I' => {}
            other => panic!("invalid slot letter {other}"),
        }
    }
    canonical_rotation(&out)
}

impl CanonicalTerm {
    pub fn from_word(moment_order: usize, slot_word: &str) -> Self {
        let canonical_form = canonical_rotation(slot_word);
        // The word shrinks when an identity slot hands its rails through.
        let reduced = slot_word.contains('I');
        CanonicalTerm {
            moment_order,
            slot_word: slot_word.to_string(),
            canonical_form,
            reduced,
        }
    }
}

/// Euler's totient by trial division.
fn phi(n: usize) -> usize {
    (1..=n).filter(|&k| gcd(n, k) == 1).count()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Closed-form count of length-m necklaces over a 4-letter alphabet:
/// (1/m) Σ_{d|m} φ(d) 4^{m/d}.
pub fn necklace_count(m: usize) -> usize {
    let total: usize = (1..=m)
        .filter(|d| m % d == 0)
        .map(|d| phi(d) * 4usize.pow((m / d) as u32))
        .sum();
    total / m
}

/// Raw circuit count without any reductions: Σ_m 4^m = 340.
pub fn count_raw() -> usize {
    (1..=MAX_MOMENT).map(|m| 4usize.pow(m as u32)).sum()
}

/// Canonicalization report.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalReport {
    pub raw_total: usize,
    /// Raw term count per moment order.
    pub per_moment_raw: Vec<usize>,
    /// Distinct cyclic classes per moment order.
    pub per_moment_classes: Vec<usize>,
    /// Σ of the per-moment class counts.
    pub canonical_total: usize,
    /// Distinct active wirings after identity-slot pass-through collapses
    /// words across moment orders.
    pub distinct_wirings: usize,
    /// Wirings whose value is identically 1 (no run needed).
    pub trivial_wirings: usize,
}

/// Count distinct circuits: cyclic classes per moment (brute force,
/// checked against the necklace formula) and the cross-moment
/// pass-through reduction.
pub fn count_canonical() -> Result<CanonicalReport> {
    let mut per_moment_raw = Vec::new();
    let mut per_moment_classes = Vec::new();
    let mut wirings = std::collections::BTreeSet::new();
    for m in 1..=MAX_MOMENT {
        let terms = enumerate_terms(m)?;
        per_moment_raw.push(terms.len());
        let mut classes = std::collections::BTreeSet::new();
        for t in &terms {
            let word = t.slot_word();
            classes.insert(canonical_rotation(&word));
            wirings.insert(reduced_word(&word));
        }
        let n_classes = classes.len();
        if n_classes != necklace_count(m) {
            return Err(Error::ParamOutOfRange(format!(
                "class count {n_classes} at moment {m} disagrees with the necklace formula {}",
                necklace_count(m)
            )));
        }
        per_moment_classes.push(n_classes);
    }
    // tr(rho) = 1: the single-P wiring measures nothing.
    let trivial_wirings = usize::from(wirings.contains("P"));
    Ok(CanonicalReport {
        raw_total: count_raw(),
        per_moment_raw,
        canonical_total: per_moment_classes.iter().sum(),
        per_moment_classes,
        distinct_wirings: wirings.len(),
        trivial_wirings,
    })
}

/// Circuits needed for the trace-difference |τ|² route: the first-moment
/// terms (squared classically) plus the canonical second-moment classes.
pub fn count_tau_sq() -> usize {
    necklace_count(1) + necklace_count(2)
}

/// Per-class verification data.
#[derive(Debug, Clone, Serialize)]
pub struct ClassValue {
    pub moment: usize,
    pub canonical_word: String,
    pub class_size: usize,
    pub sample_value: f64,
    /// max − min of the member values; trace cyclicity demands ~0.
    pub spread: f64,
}

/// Evaluate every term of every cyclic class on `rho` and check that
/// members agree (trace cyclicity realized by the wiring engine).
pub fn verify_class_values(rho: &DensityMatrix) -> Result<Vec<ClassValue>> {
    let mut out = Vec::new();
    for m in 1..=MAX_MOMENT {
        let terms = enumerate_terms(m)?;
        let values: Vec<Result<f64>> = par::map(&terms, |t| eval_term_exact(t, rho));
        let mut classes: std::collections::BTreeMap<String, Vec<f64>> =
            std::collections::BTreeMap::new();
        for (t, v) in terms.iter().zip(values) {
            classes
                .entry(canonical_rotation(&t.slot_word()))
                .or_default()
                .push(v?);
        }
        for (word, members) in classes {
            let hi = members.iter().cloned().fold(f64::MIN, f64::max);
            let lo = members.iter().cloned().fold(f64::MAX, f64::min);
            out.push(ClassValue {
                moment: m,
                canonical_word: word,
                class_size: members.len(),
                sample_value: members[0],
                spread: hi - lo,
            });
        }
    }
    Ok(out)
}

/// CSV report: `moment,canonical_word,class_size,sample_value`.
pub fn class_table_csv(rho: &DensityMatrix) -> Result<String> {
    let mut out = String::from("moment,canonical_word,class_size,sample_value\n");
    for c in verify_class_values(rho)? {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.moment, c.canonical_word, c.class_size, c.sample_value
        ));
    }
    Ok(out)
}
