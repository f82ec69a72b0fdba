//! Multiset comparison of two lists of complex frequencies.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::spectral::cmp_complex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedPair {
    pub reference_index: usize,
    pub candidate_index: usize,
    pub reference: [f64; 2],
    pub candidate: [f64; 2],
    /// `|reference − candidate| / scale`.
    pub rel_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    /// Largest magnitude over both sets; the denominator of every deviation.
    pub scale: f64,
    /// Worst pair under the one-to-one matching.
    pub max_rel_deviation: f64,
    /// Symmetric Hausdorff distance between the sets, relative to `scale`.
    pub hausdorff: f64,
    pub matched_pairs: Vec<MatchedPair>,
    /// Indices left over when the lists differ in length.
    pub unmatched: Vec<Unmatched>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Unmatched {
    pub side: String,
    pub index: usize,
    pub value: [f64; 2],
}

impl ComparisonReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.unmatched.is_empty() && self.max_rel_deviation <= tolerance
    }

    pub fn offending(&self, tolerance: f64) -> impl Iterator<Item = &MatchedPair> {
        self.matched_pairs.iter().filter(move |p| p.rel_deviation > tolerance)
    }
}

pub fn pair(v: c64) -> [f64; 2] {
    [v.re, v.im]
}

/// Matches the two multisets one-to-one by repeatedly pairing the globally
/// closest remaining values.
pub fn compare_multisets(n: usize, reference: &[c64], candidate: &[c64]) -> ComparisonReport {
    let scale = reference.iter().chain(candidate).map(|v| v.norm()).fold(0.0, f64::max);
    let denom = if scale > 0.0 { scale } else { 1.0 };

    let mut dists: Vec<(f64, usize, usize)> = Vec::with_capacity(reference.len() * candidate.len());
    for (i, a) in reference.iter().enumerate() {
        for (j, b) in candidate.iter().enumerate() {
            dists.push(((a - b).norm(), i, j));
        }
    }
    dists.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut used_ref = vec![false; reference.len()];
    let mut used_cand = vec![false; candidate.len()];
    let mut matched_pairs = Vec::new();
    let target = reference.len().min(candidate.len());
    for (d, i, j) in dists {
        if matched_pairs.len() == target {
            break;
        }
        if used_ref[i] || used_cand[j] {
            continue;
        }
        used_ref[i] = true;
        used_cand[j] = true;
        matched_pairs.push(MatchedPair {
            reference_index: i,
            candidate_index: j,
            reference: pair(reference[i]),
            candidate: pair(candidate[j]),
            rel_deviation: d / denom,
        });
    }
    matched_pairs.sort_by_key(|p| p.reference_index);
    let max_rel_deviation = matched_pairs.iter().map(|p| p.rel_deviation).fold(0.0, f64::max);

    let mut unmatched = Vec::new();
    for (i, &u) in used_ref.iter().enumerate() {
        if !u {
            unmatched.push(Unmatched {
                side: "reference".into(),
                index: i,
                value: pair(reference[i]),
            });
        }
    }
    for (j, &u) in used_cand.iter().enumerate() {
        if !u {
            unmatched.push(Unmatched {
                side: "candidate".into(),
                index: j,
                value: pair(candidate[j]),
            });
        }
    }

    ComparisonReport {
        n,
        scale,
        max_rel_deviation,
        hausdorff: hausdorff(reference, candidate) / denom,
        matched_pairs,
        unmatched,
    }
}

fn directed(a: &[c64], b: &[c64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance; infinite when exactly one set is empty.
pub fn hausdorff(a: &[c64], b: &[c64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    directed(a, b).max(directed(b, a))
}

/// Sorted copy, `(re, im)` lexicographic.
pub fn sorted(values: &[c64]) -> Vec<c64> {
    let mut v = values.to_vec();
    v.sort_by(cmp_complex);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn identical_sets() {
        let a = [c(-1.0, 2.0), c(-1.0, -2.0), c(0.5, 0.0)];
        let b = [a[2], a[0], a[1]];
        let r = compare_multisets(3, &a, &b);
        assert_eq!(r.max_rel_deviation, 0.0);
        assert_eq!(r.hausdorff, 0.0);
        assert!(r.passed(0.0));
        assert_eq!(r.matched_pairs[0].candidate_index, 1);
    }

    #[test]
    fn multiplicity_matters() {
        // Hausdorff ignores multiplicity, the matching does not.
        let a = [c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        let b = [c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0)];
        let r = compare_multisets(3, &a, &b);
        assert_eq!(r.hausdorff, 0.0);
        assert!((r.max_rel_deviation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perturbed_mode_is_named() {
        let a = [c(-3.0, 100.0), c(-3.0, -100.0), c(-50.0, 0.0)];
        let mut b = a;
        b[1] *= 1.01;
        let r = compare_multisets(3, &a, &b);
        let bad: Vec<_> = r.offending(1e-8).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].reference_index, 1);
        assert!(!r.passed(1e-8));
    }

    #[test]
    fn length_mismatch_reports_unmatched() {
        let r = compare_multisets(2, &[c(1.0, 0.0), c(2.0, 0.0)], &[c(2.0, 0.0)]);
        assert_eq!(r.unmatched.len(), 1);
        assert_eq!(r.unmatched[0].index, 0);
        assert!(!r.passed(1.0));
    }
}
