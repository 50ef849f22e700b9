//! Order-independent reductions.
//!
//! Every sum in the pooling kernels and the overlap scores goes through
//! [`canonical_sum`], which adds the terms in ascending order. The result is
//! a function of the multiset of terms only, so any lattice symmetry that
//! permutes voxels leaves the rounded result bit-identical.

/// Sums `terms` in ascending (IEEE total) order. The slice is reordered.
pub fn canonical_sum_in_place(terms: &mut [f64]) -> f64 {
    if terms.len() <= 32 {
        insertion_sort(terms);
    } else {
        terms.sort_unstable_by(f64::total_cmp);
    }
    terms.iter().fold(0.0, |acc, &t| acc + t)
}

/// Sums `terms` in ascending order without modifying the input.
pub fn canonical_sum(terms: &[f64]) -> f64 {
    let mut scratch = terms.to_vec();
    canonical_sum_in_place(&mut scratch)
}

// Numeric order differs from total order only on signed zeros (and NaN,
// which volumes never hold); zeros of either sign leave the fold unchanged.
fn insertion_sort(terms: &mut [f64]) {
    for i in 1..terms.len() {
        let x = terms[i];
        let mut j = i;
        while j > 0 && terms[j - 1] > x {
            terms[j] = terms[j - 1];
            j -= 1;
        }
        terms[j] = x;
    }
}
