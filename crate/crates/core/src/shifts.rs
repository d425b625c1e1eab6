//! Weighted shift operators on finite truncations.
//!
//! A weighted shift maps e_n to a_n e_{n+1}; on an N-dimensional truncation it
//! is the strictly lower triangular matrix with a_1..a_{N-1} on the first
//! subdiagonal. Shifts are the one matrix family here whose norms are exactly
//! computable by hand: the k-th power is again a (k-step) shift, weighted by
//! sliding products of k consecutive weights, and its spectral norm is the
//! largest absolute window product. That closed form is what lets the rest of
//! the crate certify norm computations against something that cannot drift.
//!
//! Two concrete families are built here. The ruler sequence assigns weight
//! eps_m = M / K^(m-1) to every index whose 2-adic valuation is m - 1, so
//! each level m first appears at n = 2^(m-1) and recurs with period 2^m.
//! Removing a single level punches periodic zeros into the weight line and
//! makes the shift exactly nilpotent. The scalar-plus-shift operator a I +
//! nu (0 (+) J) is the other family; its logarithm exists in closed series
//! form and obeys a clean norm bound.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{FloatScalar, C};

// ── Weight sequences ────────────────────────────────────────────────────

/// How a weight sequence was produced. Ruler-generated sequences remember
/// their parameters so they can be re-generated at a longer truncation, which
/// is what lets power norms detect when a result is an artifact of cutting
/// the sequence off.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance<T> {
    /// Arbitrary caller-supplied weights; no canonical extension exists.
    Explicit,
    /// Ruler weights a_n = eps_(v2(n)+1) with eps_m = amp / ratio^(m-1).
    Kakutani { amp: T, ratio: T },
    /// A single ruler level: eps_level at its positions, zero elsewhere.
    Masked { amp: T, ratio: T, level: usize },
}

/// Subdiagonal weights a_1..a_(N-1) of an N-dimensional truncated shift,
/// 1-indexed to match the basis vectors they act on.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence<T> {
    weights: Vec<T>,
    provenance: Provenance<T>,
}

/// Norm of a shift power together with a marker for values that the
/// truncation, not the weights, is responsible for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerNorm<T> {
    pub value: T,
    /// True when the window search ran out of room: either no window of the
    /// requested length fits inside the truncation, or re-generating the
    /// sequence at a longer truncation changes the answer.
    pub truncation_dominated: bool,
}

/// Outcome of the nilpotency search on a truncated shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nilpotency {
    /// Every window of this length contains an exact zero weight; the power
    /// vanishes identically, truncation or not.
    Exact(usize),
    /// The power vanishes only because the truncation ran out of indices;
    /// within the truncation the shift is not genuinely nilpotent.
    TruncationLimited(usize),
}

impl<T: FloatScalar> WeightSequence<T> {
    /// Wraps caller-supplied weights. No extension is available, so
    /// truncation flags fall back to the no-window-fits rule.
    pub fn explicit(weights: Vec<T>) -> Self {
        WeightSequence { weights, provenance: Provenance::Explicit }
    }

    /// Number of weights, N - 1 for an N-dimensional truncation.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dimension N of the truncation the sequence belongs to.
    pub fn truncation_dim(&self) -> usize {
        self.weights.len() + 1
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn provenance(&self) -> &Provenance<T> {
        &self.provenance
    }

    /// Dense N x N matrix with entry (n+1, n) = a_n (1-indexed), i.e. the
    /// truncated operator e_n -> a_n e_(n+1).
    pub fn to_matrix(&self) -> Matrix<T> {
        let n = self.truncation_dim();
        let mut m = Matrix::zeros(n);
        for (i, &w) in self.weights.iter().enumerate() {
            m[(i + 1, i)] = C::new(w, T::zero());
        }
        m
    }

    /// Largest absolute weight; equals the spectral norm of the shift.
    pub fn sup_weight(&self) -> T {
        self.weights
            .iter()
            .map(|w| w.abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Spectral norm of the k-th power by the sliding-window formula:
    /// the maximum over n of |a_n a_(n+1) .. a_(n+k-1)| with the window kept
    /// fully inside the truncation. Exact for shifts, since the k-th power is
    /// a k-step shift whose nonzero entries are precisely these products.
    ///
    /// A window that would extend past the last weight contributes nothing;
    /// when that censors the true supremum the result is flagged. For
    /// ruler-generated sequences the flag is decided by re-generating the
    /// weights at truncation N + k and comparing; explicit sequences can only
    /// be flagged when no window fits at all.
    pub fn power_norm(&self, k: usize) -> PowerNorm<T> {
        if k == 0 {
            // zeroth power is the identity
            return PowerNorm { value: T::one(), truncation_dominated: false };
        }
        let value = window_sup(&self.weights, k);
        if k > self.weights.len() {
            return PowerNorm { value: T::zero(), truncation_dominated: true };
        }
        let truncation_dominated = match self.extend_to(self.truncation_dim() + k) {
            Some(longer) => window_sup(&longer.weights, k) > value,
            None => false,
        };
        PowerNorm { value, truncation_dominated }
    }

    /// Smallest k >= 1 with vanishing k-th power norm. A power can vanish for
    /// two reasons: every length-k window really contains a zero weight
    /// (exact nilpotency, stable under extension), or k exceeds the number of
    /// weights so no window fits (an artifact of the truncation).
    pub fn nilpotency(&self) -> Nilpotency {
        for k in 1..=self.weights.len() {
            if window_sup(&self.weights, k) == T::zero() {
                return Nilpotency::Exact(k);
            }
        }
        Nilpotency::TruncationLimited(self.truncation_dim())
    }

    /// Re-generates the sequence at a larger truncation dimension. Only
    /// ruler-generated sequences know how to extend; the result restricted
    /// back to the original length is always an exact prefix.
    pub fn extend_to(&self, dim: usize) -> Option<WeightSequence<T>> {
        match &self.provenance {
            Provenance::Explicit => None,
            Provenance::Kakutani { amp, ratio } => {
                Some(kakutani_weights(*amp, *ratio, dim).expect("parameters already validated"))
            }
            Provenance::Masked { amp, ratio, level } => {
                let base = kakutani_weights(*amp, *ratio, dim).expect("parameters already validated");
                Some(base.level_mask(*level).expect("level already validated"))
            }
        }
    }

    /// Keeps a single ruler level: weight eps_level at positions with 2-adic
    /// valuation level - 1, zero everywhere else. The resulting shift has
    /// spectral norm exactly eps_level (a one-hot window at any kept index).
    pub fn level_mask(&self, level: usize) -> Result<WeightSequence<T>> {
        let (amp, ratio) = self.ruler_params("level_mask")?;
        if level == 0 {
            return Err(Error::Parameter("ruler levels are numbered from 1".into()));
        }
        let weights = (1..=self.weights.len())
            .map(|n| {
                if valuation2(n) + 1 == level {
                    eps_level(amp, ratio, level)
                } else {
                    T::zero()
                }
            })
            .collect();
        Ok(WeightSequence { weights, provenance: Provenance::Masked { amp, ratio, level } })
    }

    /// Removes a single ruler level, zeroing its positions and keeping
    /// everything else: the difference between the full ruler shift and the
    /// one-level mask. Zeros then recur with period 2^level, so no window of
    /// length 2^level avoids one and the shift is exactly nilpotent of that
    /// index (once the truncation holds at least 2^level weights).
    pub fn without_level(&self, level: usize) -> Result<WeightSequence<T>> {
        let (amp, ratio) = self.ruler_params("without_level")?;
        if level == 0 {
            return Err(Error::Parameter("ruler levels are numbered from 1".into()));
        }
        let weights = (1..=self.weights.len())
            .map(|n| {
                if valuation2(n) + 1 == level {
                    T::zero()
                } else {
                    eps_level(amp, ratio, valuation2(n) + 1)
                }
            })
            .collect();
        // no dedicated provenance: treated as explicit from here on
        Ok(WeightSequence { weights, provenance: Provenance::Explicit })
    }

    fn ruler_params(&self, what: &str) -> Result<(T, T)> {
        match &self.provenance {
            Provenance::Kakutani { amp, ratio } => Ok((*amp, *ratio)),
            _ => Err(Error::InvalidInput(format!(
                "{what} requires a ruler-generated weight sequence"
            ))),
        }
    }
}

/// Sliding-window sup of absolute products, windows fully inside the slice.
/// Returns 0 when no window of length k fits.
fn window_sup<T: FloatScalar>(w: &[T], k: usize) -> T {
    if k == 0 || k > w.len() {
        return T::zero();
    }
    let mut best = T::zero();
    for start in 0..=(w.len() - k) {
        let mut prod = T::one();
        for x in &w[start..start + k] {
            prod *= x.abs();
            if prod == T::zero() {
                break;
            }
        }
        if prod > best {
            best = prod;
        }
    }
    best
}

/// 2-adic valuation of n >= 1: the exponent of the largest power of two
/// dividing n.
fn valuation2(n: usize) -> usize {
    debug_assert!(n >= 1);
    n.trailing_zeros() as usize
}

fn eps_level<T: FloatScalar>(amp: T, ratio: T, level: usize) -> T {
    amp / ratio.powi(level as i32 - 1)
}

// ── Ruler construction ──────────────────────────────────────────────────

/// Ruler weight sequence for an N-dimensional truncation: a_n = eps_(v2(n)+1)
/// with eps_m = amp / ratio^(m-1). Level m first appears at n = 2^(m-1) and
/// recurs with period 2^m, so the sequence interleaves geometrically decaying
/// plateaus like the tick marks on a ruler. The sup of the weights is amp.
pub fn kakutani_weights<T: FloatScalar>(amp: T, ratio: T, dim: usize) -> Result<WeightSequence<T>> {
    if !(amp > T::zero()) || !amp.is_finite() {
        return Err(Error::Parameter("weight amplitude must be positive and finite".into()));
    }
    if !(ratio > T::one()) || !ratio.is_finite() {
        return Err(Error::Parameter("level decay ratio must exceed 1".into()));
    }
    if dim < 2 {
        return Err(Error::Parameter("truncation dimension must be at least 2".into()));
    }
    let weights = (1..dim).map(|n| eps_level(amp, ratio, valuation2(n) + 1)).collect();
    Ok(WeightSequence { weights, provenance: Provenance::Kakutani { amp, ratio } })
}

// ── Scalar plus shift ───────────────────────────────────────────────────

/// Truncation of a I + nu (0 (+) J): diagonal a, subdiagonal nu except for a
/// leading zero slot occupied by the one-dimensional block of the direct sum.
/// Requires 0 < nu < min(a, 1 - a) with a in (0, 1); under that constraint
/// the operator is a(I - D) with ||D|| = nu/a < 1, so its logarithm has a
/// convergent series and ||log(I - D)|| <= -log(1 - nu/a).
pub fn scalar_plus_shift<T: FloatScalar>(a: T, nu: T, dim: usize) -> Result<Matrix<T>> {
    if !(a > T::zero() && a < T::one()) {
        return Err(Error::Parameter("diagonal value a must lie in (0, 1)".into()));
    }
    let cap = if a < T::one() - a { a } else { T::one() - a };
    if !(nu > T::zero() && nu < cap) {
        return Err(Error::Parameter(format!(
            "shift weight nu must satisfy 0 < nu < min(a, 1 - a) = {cap}"
        )));
    }
    if dim < 1 {
        return Err(Error::Parameter("truncation dimension must be at least 1".into()));
    }
    let mut m = Matrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = C::new(a, T::zero());
    }
    // subdiagonal: first slot stays zero
    for i in 2..dim {
        m[(i, i - 1)] = C::new(nu, T::zero());
    }
    Ok(m)
}

// ── Tests ───────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;

    #[test]
    fn ruler_rule_matches_hand_expansion() {
        let w = kakutani_weights::<f64>(1.0, 2.0, 9).unwrap();
        assert_eq!(w.weights(), &[1.0, 0.5, 1.0, 0.25, 1.0, 0.5, 1.0, 0.125]);
    }

    #[test]
    fn level_first_appears_at_its_power_of_two() {
        let w = kakutani_weights::<f64>(1.0, 2.0, 64).unwrap();
        // eps_3 = 1/4 first shows up at n = 4
        let first = w.weights().iter().position(|&x| x == 0.25).unwrap() + 1;
        assert_eq!(first, 4);
        // and recurs with period 8
        assert_eq!(w.weights()[4 + 8 - 1], 0.25);
    }

    #[test]
    fn sup_weight_is_amplitude() {
        let w = kakutani_weights::<f64>(1.0, 2.0, 33).unwrap();
        assert_eq!(w.sup_weight(), 1.0);
        assert_eq!(w.power_norm(1).value, 1.0);
    }

    #[test]
    fn prefix_property_under_extension() {
        let short = kakutani_weights::<f64>(0.7, 3.0, 17).unwrap();
        let long = short.extend_to(64).unwrap();
        assert_eq!(&long.weights()[..16], short.weights());
    }

    #[test]
    fn single_level_mask_and_complement() {
        let w = kakutani_weights::<f64>(1.0, 2.0, 9).unwrap();
        let l2 = w.level_mask(2).unwrap();
        assert_eq!(l2.weights(), &[0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
        let rest = w.without_level(2).unwrap();
        for ((&a, &b), &c) in l2.weights().iter().zip(rest.weights()).zip(w.weights()) {
            assert_eq!(a + b, c);
        }
    }

    #[test]
    fn mask_norm_is_its_level_weight() {
        let w = kakutani_weights::<f64>(1.0, 2.0, 33).unwrap();
        let l3 = w.level_mask(3).unwrap();
        let dense = operator_norm(&l3.to_matrix()).unwrap();
        assert!((dense - 0.25).abs() < 1e-12);
        assert_eq!(l3.power_norm(1).value, 0.25);
    }

    #[test]
    fn window_formula_matches_dense_powers() {
        let w = kakutani_weights::<f64>(1.0, 2.0, 24).unwrap();
        let m = w.to_matrix();
        for k in 1..=8usize {
            let dense = operator_norm(&m.pow(k)).unwrap();
            let formula = w.power_norm(k).value;
            assert!(
                (dense - formula).abs() <= 1e-10,
                "k = {k}: dense {dense} vs formula {formula}"
            );
        }
    }

    #[test]
    fn punched_shift_is_exactly_nilpotent() {
        let w = kakutani_weights::<f64>(1.0, 2.0, 64).unwrap();
        let punched = w.without_level(3).unwrap();
        assert_eq!(punched.nilpotency(), Nilpotency::Exact(8));
        // the dense 8th power is the zero matrix, entry for entry
        let p = punched.to_matrix().pow(8);
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn full_subdiagonal_is_only_truncation_nilpotent() {
        let w = WeightSequence::explicit(vec![1.0f64; 15]);
        assert_eq!(w.nilpotency(), Nilpotency::TruncationLimited(16));
        let z = WeightSequence::explicit(vec![0.0f64; 7]);
        assert_eq!(z.nilpotency(), Nilpotency::Exact(1));
    }

    #[test]
    fn truncation_flag_fires_when_extension_differs() {
        // level 4 first appears at n = 8, so a dim-8 truncation of its mask
        // is all zeros and the measured norm is pure cutoff artifact
        let w = kakutani_weights::<f64>(1.0, 2.0, 8).unwrap();
        let l4 = w.level_mask(4).unwrap();
        let p = l4.power_norm(1);
        assert_eq!(p.value, 0.0);
        assert!(p.truncation_dominated);
        // the unmasked ruler at dim 4 already attains the true 3-window sup
        // of 1/2 (every third weight is at most 1/2), so no flag
        let short = kakutani_weights::<f64>(1.0, 2.0, 4).unwrap();
        let q = short.power_norm(3);
        assert_eq!(q.value, 0.5);
        assert!(!q.truncation_dominated);
        // no window fits at all
        let r = short.power_norm(9);
        assert_eq!(r.value, 0.0);
        assert!(r.truncation_dominated);
    }

    #[test]
    fn scalar_plus_shift_layout() {
        let m = scalar_plus_shift::<f64>(0.5, 0.25, 3).unwrap();
        let expect = Matrix::<f64>::from_real_rows(&[
            vec![0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.0],
            vec![0.0, 0.25, 0.5],
        ]);
        assert_eq!(m.sub(&expect).max_abs(), 0.0);
        assert!(scalar_plus_shift::<f64>(0.5, 0.6, 3).is_err());
        assert!(scalar_plus_shift::<f64>(0.8, 0.3, 3).is_err());
    }
}
