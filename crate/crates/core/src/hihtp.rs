//! Hierarchically sparse recovery by hard thresholding pursuit.
//!
//! The unknown is split into `blocks` consecutive blocks of `block_size`
//! entries (delay taps of `2Q+1` Doppler bins). A vector is
//! `(s_d, s_D)`-sparse when at most `s_d` blocks are non-zero and each of
//! them has at most `s_D` non-zero entries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::linalg::{least_squares, norm, CMatrix};
use crate::{Error, Result, C64};

/// Iteration cap used when the caller has no preference.
pub const DEFAULT_MAX_ITERATIONS: usize = 20;

/// Proxy entries at most this fraction of the largest one are round-off and
/// never enter the support, so exactly recovered iterates are not padded with
/// noise-level indices.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Block layout and sparsity levels for the hierarchical threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchicalLevels {
    pub blocks: usize,
    pub block_size: usize,
    pub s_d: usize,
    pub s_dd: usize,
}

impl HierarchicalLevels {
    pub fn new(blocks: usize, block_size: usize, s_d: usize, s_dd: usize) -> Result<Self> {
        let lv = Self {
            blocks,
            block_size,
            s_d,
            s_dd,
        };
        lv.validate()?;
        Ok(lv)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.block_size == 0 {
            return Err(Error::invalid("block layout must be non-empty"));
        }
        if !(1..=self.blocks).contains(&self.s_d) {
            return Err(Error::invalid(format!(
                "block sparsity {} outside [1, {}]",
                self.s_d, self.blocks
            )));
        }
        if !(1..=self.block_size).contains(&self.s_dd) {
            return Err(Error::invalid(format!(
                "in-block sparsity {} outside [1, {}]",
                self.s_dd, self.block_size
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.blocks * self.block_size
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Sorted set of flat indices into a blocked vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SupportSet {
    block_size: usize,
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(block_size: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        Self {
            block_size,
            indices: set.into_iter().collect(),
        }
    }

    pub fn empty(block_size: usize) -> Self {
        Self::new(block_size, [])
    }

    /// Indices of the non-zero entries of `x`.
    pub fn of_vector(x: &[C64], block_size: usize) -> Self {
        Self::new(
            block_size,
            x.iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 0.0)
                .map(|(i, _)| i),
        )
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `(block, position within block)` of every member.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.indices
            .iter()
            .map(|&i| (i / self.block_size, i % self.block_size))
            .collect()
    }

    /// Distinct blocks touched, ascending.
    pub fn blocks(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.indices.iter().map(|&i| i / self.block_size).collect();
        b.dedup();
        b
    }

    pub fn is_hierarchical(&self, s_d: usize, s_dd: usize) -> bool {
        let blocks = self.blocks();
        blocks.len() <= s_d
            && blocks.iter().all(|&b| {
                self.indices
                    .iter()
                    .filter(|&&i| i / self.block_size == b)
                    .count()
                    <= s_dd
            })
    }

    /// Keeps the entries of `x` on the support and zeroes the rest.
    pub fn restrict(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); x.len()];
        for &i in &self.indices {
            out[i] = x[i];
        }
        out
    }
}

/// Indices of the `s` largest-modulus non-zero entries among `candidates`,
/// ties going to the lower index.
fn top_by_modulus(x: &[C64], candidates: impl Iterator<Item = usize>, s: usize) -> Vec<usize> {
    let mut c: Vec<usize> = candidates.filter(|&i| x[i].norm() > 0.0).collect();
    c.sort_by(|&a, &b| x[b].norm().total_cmp(&x[a].norm()).then(a.cmp(&b)));
    c.truncate(s);
    c
}

/// Support of the best `(s_d, s_D)`-sparse approximation of `x`: the `s_D`
/// largest entries of each block, then the `s_d` blocks whose kept entries
/// have the largest energy. Exact zeros are never selected.
pub fn hierarchical_threshold(x: &[C64], levels: &HierarchicalLevels) -> Result<SupportSet> {
    levels.validate()?;
    levels.check_len(x.len())?;
    let bs = levels.block_size;
    let mut kept: Vec<(f64, usize, Vec<usize>)> = (0..levels.blocks)
        .map(|b| {
            let k = top_by_modulus(x, b * bs..(b + 1) * bs, levels.s_dd);
            let energy = k.iter().map(|&i| x[i].norm_sqr()).sum();
            (energy, b, k)
        })
        .filter(|(e, _, _)| *e > 0.0)
        .collect();
    kept.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    kept.truncate(levels.s_d);
    Ok(SupportSet::new(
        bs,
        kept.into_iter().flat_map(|(_, _, k)| k),
    ))
}

/// Support of the `s` largest-modulus entries of `x`, ignoring blocks.
pub fn flat_threshold(x: &[C64], s: usize, block_size: usize) -> SupportSet {
    SupportSet::new(block_size, top_by_modulus(x, 0..x.len(), s))
}

/// Least-squares fit of `y` using only the columns of `m` on `support`;
/// entries off the support are exactly zero.
pub fn restricted_least_squares(m: &CMatrix, y: &[C64], support: &SupportSet) -> Result<Vec<C64>> {
    if y.len() != m.rows() {
        return Err(Error::LengthMismatch {
            expected: m.rows(),
            got: y.len(),
        });
    }
    if support.len() > m.rows() {
        return Err(Error::SupportTooLarge {
            support: support.len(),
            rows: m.rows(),
        });
    }
    if let Some(&bad) = support.indices().iter().find(|&&i| i >= m.cols()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: m.cols(),
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); m.cols()];
    if support.is_empty() {
        return Ok(out);
    }
    let sub = m.select_columns(support.indices())?;
    let z = least_squares(&sub, y)?;
    for (&i, v) in support.indices().iter().zip(z) {
        out[i] = v;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The thresholded support repeated.
    SupportFixed,
    /// The iteration cap was reached first.
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub alpha_hat: Vec<C64>,
    pub support: SupportSet,
    pub iterations: usize,
    /// `‖y - M α̂⁽ᵏ⁾‖` after each iteration.
    pub residual_trace: Vec<f64>,
    pub converged_by: StopReason,
}

/// Thresholding pursuit with an arbitrary support-selection rule.
///
/// Starting from `α⁽⁰⁾ = 0`, `Ω⁽⁰⁾ = ∅`, each iteration computes
/// `Ω⁽ᵏ⁺¹⁾ = T(α⁽ᵏ⁾ + Mᴴ(y - Mα⁽ᵏ⁾))` and the least-squares fit on
/// `Ω⁽ᵏ⁺¹⁾`; it stops once `Ω⁽ᵏ⁺¹⁾ = Ω⁽ᵏ⁾` or after `k_max` iterations.
/// `observe` sees every iterate.
pub fn pursuit<T, O>(
    m: &CMatrix,
    y: &[C64],
    block_size: usize,
    k_max: usize,
    mut threshold: T,
    mut observe: O,
) -> Result<RecoveryResult>
where
    T: FnMut(&[C64]) -> Result<SupportSet>,
    O: FnMut(usize, &[C64]),
{
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    if y.len() != m.rows() {
        return Err(Error::LengthMismatch {
            expected: m.rows(),
            got: y.len(),
        });
    }
    let mut alpha = vec![C64::new(0.0, 0.0); m.cols()];
    let mut support = SupportSet::empty(block_size);
    let mut trace = Vec::new();
    for k in 1..=k_max {
        let residual: Vec<C64> = y
            .iter()
            .zip(m.mul_vec(&alpha)?)
            .map(|(a, b)| a - b)
            .collect();
        let step = m.adjoint_mul_vec(&residual)?;
        let mut g: Vec<C64> = alpha.iter().zip(step).map(|(a, s)| a + s).collect();
        let floor = ROUNDOFF_FLOOR * g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in &mut g {
            if z.norm() <= floor {
                *z = C64::new(0.0, 0.0);
            }
        }
        let next = threshold(&g)?;
        alpha = restricted_least_squares(m, y, &next)?;
        let fit = m.mul_vec(&alpha)?;
        trace.push(norm(
            &y.iter().zip(fit).map(|(a, b)| a - b).collect::<Vec<_>>(),
        ));
        observe(k, &alpha);
        if next == support {
            return Ok(RecoveryResult {
                alpha_hat: alpha,
                support: next,
                iterations: k,
                residual_trace: trace,
                converged_by: StopReason::SupportFixed,
            });
        }
        support = next;
    }
    Ok(RecoveryResult {
        alpha_hat: alpha,
        support,
        iterations: k_max,
        residual_trace: trace,
        converged_by: StopReason::MaxIter,
    })
}

/// Hierarchical hard thresholding pursuit.
pub fn hihtp_recover(
    m: &CMatrix,
    y: &[C64],
    levels: &HierarchicalLevels,
    k_max: usize,
) -> Result<RecoveryResult> {
    hihtp_recover_observed(m, y, levels, k_max, |_, _| {})
}

/// [`hihtp_recover`] reporting every iterate to `observe`.
pub fn hihtp_recover_observed<O: FnMut(usize, &[C64])>(
    m: &CMatrix,
    y: &[C64],
    levels: &HierarchicalLevels,
    k_max: usize,
    observe: O,
) -> Result<RecoveryResult> {
    levels.validate()?;
    levels.check_len(m.cols())?;
    pursuit(
        m,
        y,
        levels.block_size,
        k_max,
        |g| hierarchical_threshold(g, levels),
        observe,
    )
}

/// Classical hard thresholding pursuit keeping the `s` largest entries.
pub fn htp_recover(
    m: &CMatrix,
    y: &[C64],
    s: usize,
    block_size: usize,
    k_max: usize,
) -> Result<RecoveryResult> {
    if s == 0 || block_size == 0 {
        return Err(Error::invalid("sparsity and block size must be positive"));
    }
    pursuit(
        m,
        y,
        block_size,
        k_max,
        |g| Ok(flat_threshold(g, s, block_size)),
        |_, _| {},
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sub;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn re(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    /// All supports with at most `s_d` blocks of exactly `min(s_D, block)`
    /// entries each (larger supports never approximate worse).
    fn all_supports(lv: &HierarchicalLevels) -> Vec<Vec<usize>> {
        fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if items.len() < k {
                return vec![];
            }
            let mut with: Vec<Vec<usize>> = subsets(&items[1..], k - 1)
                .into_iter()
                .map(|mut s| {
                    s.insert(0, items[0]);
                    s
                })
                .collect();
            with.extend(subsets(&items[1..], k));
            with
        }
        let blocks: Vec<usize> = (0..lv.blocks).collect();
        let inner: Vec<usize> = (0..lv.block_size).collect();
        let mut out = Vec::new();
        for bs in subsets(&blocks, lv.s_d) {
            let mut acc = vec![vec![]];
            for &b in &bs {
                let mut next = Vec::new();
                for prefix in &acc {
                    for s in subsets(&inner, lv.s_dd) {
                        let mut p: Vec<usize> = prefix.clone();
                        p.extend(s.iter().map(|j| b * lv.block_size + j));
                        next.push(p);
                    }
                }
                acc = next;
            }
            out.extend(acc);
        }
        out
    }

    fn best_approximation(x: &[C64], lv: &HierarchicalLevels) -> Vec<usize> {
        let err = |s: &Vec<usize>| -> f64 {
            let kept: f64 = s.iter().map(|&i| x[i].norm_sqr()).sum();
            x.iter().map(|z| z.norm_sqr()).sum::<f64>() - kept
        };
        let mut supports = all_supports(lv);
        supports.sort_by(|a, b| err(a).total_cmp(&err(b)));
        supports.swap_remove(0)
    }

    #[test]
    fn threshold_worked_examples() {
        let x = re(&[1.0, -3.0, 2.0, 0.5, 0.1, 0.0]);
        let lv = HierarchicalLevels::new(2, 3, 1, 2).unwrap();
        let s = hierarchical_threshold(&x, &lv).unwrap();
        assert_eq!(s.indices(), &[1, 2]);
        assert_eq!(s.restrict(&x), re(&[0.0, -3.0, 2.0, 0.0, 0.0, 0.0]));
        assert_eq!(s.indices(), best_approximation(&x, &lv).as_slice());

        let lv = HierarchicalLevels::new(2, 3, 2, 1).unwrap();
        let s = hierarchical_threshold(&x, &lv).unwrap();
        assert_eq!(s.pairs(), vec![(0, 1), (1, 0)]);
        assert_eq!(s.restrict(&x), re(&[0.0, -3.0, 0.0, 0.5, 0.0, 0.0]));
    }

    #[test]
    fn threshold_ties_go_to_lower_index() {
        let x = re(&[1.0, 1.0, 1.0, 1.0]);
        let lv = HierarchicalLevels::new(2, 2, 1, 1).unwrap();
        assert_eq!(hierarchical_threshold(&x, &lv).unwrap().indices(), &[0]);
        assert_eq!(flat_threshold(&x, 3, 2).indices(), &[0, 1, 2]);
    }

    #[test]
    fn threshold_ignores_zeros() {
        let lv = HierarchicalLevels::new(3, 2, 2, 2).unwrap();
        assert!(hierarchical_threshold(&re(&[0.0; 6]), &lv)
            .unwrap()
            .is_empty());
        let x = re(&[0.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert_eq!(hierarchical_threshold(&x, &lv).unwrap().indices(), &[3]);
    }

    #[test]
    fn threshold_rejects_bad_input() {
        assert!(HierarchicalLevels::new(2, 3, 3, 1).is_err());
        assert!(HierarchicalLevels::new(2, 3, 1, 0).is_err());
        let lv = HierarchicalLevels::new(2, 3, 1, 1).unwrap();
        assert!(matches!(
            hierarchical_threshold(&re(&[1.0; 5]), &lv),
            Err(Error::LengthMismatch {
                expected: 6,
                got: 5
            })
        ));
    }

    proptest! {
        #[test]
        fn threshold_is_optimal(
            blocks in 1usize..=4,
            block_size in 1usize..=4,
            sd_frac in 0.0f64..1.0,
            sdd_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let s_d = 1 + (sd_frac * blocks as f64) as usize % blocks;
            let s_dd = 1 + (sdd_frac * block_size as f64) as usize % block_size;
            let lv = HierarchicalLevels::new(blocks, block_size, s_d, s_dd).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<C64> = (0..lv.len())
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let s = hierarchical_threshold(&x, &lv).unwrap();
            prop_assert!(s.is_hierarchical(s_d, s_dd));
            let best = best_approximation(&x, &lv);
            prop_assert_eq!(s.indices(), best.as_slice());
        }

        #[test]
        fn sparse_vectors_are_fixed_points(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lv = HierarchicalLevels::new(5, 4, 2, 3).unwrap();
            let mut x = vec![C64::new(0.0, 0.0); 20];
            let first = rng.random_range(0..5usize);
            let second = (first + rng.random_range(1..5usize)) % 5;
            for b in [first, second] {
                for _ in 0..3 {
                    x[b * 4 + rng.random_range(0..3usize)] = C64::new(rng.random::<f64>() + 0.1, 0.0);
                }
            }
            let s = hierarchical_threshold(&x, &lv).unwrap();
            prop_assert_eq!(s, SupportSet::of_vector(&x, 4));
        }

        #[test]
        fn recovery_output_is_hierarchically_sparse(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = gaussian_matrix(10, 12, &mut rng);
            let y: Vec<C64> = (0..10).map(|_| C64::new(rng.random(), rng.random())).collect();
            let lv = HierarchicalLevels::new(4, 3, 2, 2).unwrap();
            let r = hihtp_recover(&m, &y, &lv, 10).unwrap();
            prop_assert!(r.support.is_hierarchical(2, 2));
            for (i, z) in r.alpha_hat.iter().enumerate() {
                if !r.support.contains(i) {
                    prop_assert_eq!(*z, C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn least_squares_on_orthonormal_columns_is_the_adjoint() {
        let m = CMatrix::identity(4);
        let y = re(&[1.0, -2.0, 0.5, 3.0]);
        let full = SupportSet::new(4, 0..4);
        assert_eq!(restricted_least_squares(&m, &y, &full).unwrap(), y);
    }

    #[test]
    fn least_squares_recovers_consistent_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = gaussian_matrix(8, 10, &mut rng);
        let mut alpha = vec![C64::new(0.0, 0.0); 10];
        alpha[2] = C64::new(1.0, -0.5);
        alpha[7] = C64::new(-0.3, 0.8);
        let y = m.mul_vec(&alpha).unwrap();
        let z = restricted_least_squares(&m, &y, &SupportSet::new(5, [2, 7, 9])).unwrap();
        assert!(norm(&sub(&z, &alpha)) < 1e-10);
    }

    #[test]
    fn least_squares_matches_pseudo_inverse_when_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut m = gaussian_matrix(6, 4, &mut rng);
        let dup = m.col(1).to_vec();
        m.col_mut(3).copy_from_slice(&dup);
        let y: Vec<C64> = (0..6)
            .map(|_| C64::new(rng.random(), rng.random()))
            .collect();
        let z = restricted_least_squares(&m, &y, &SupportSet::new(4, 0..4)).unwrap();

        let a = nalgebra::DMatrix::from_fn(6, 4, |i, j| m[(i, j)]);
        let pinv = a.svd(true, true).pseudo_inverse(1e-10).unwrap();
        let oracle = pinv * nalgebra::DVector::from_column_slice(&y);
        for (u, v) in z.iter().zip(oracle.iter()) {
            assert!((u - v).norm() < 1e-9, "{u} vs {v}");
        }
    }

    #[test]
    fn oversized_support_is_an_error() {
        let m = CMatrix::identity(3);
        let y = re(&[1.0; 3]);
        let s = SupportSet::new(1, 0..3);
        let wide = CMatrix::zeros(2, 3);
        assert!(restricted_least_squares(&m, &y, &s).is_ok());
        assert!(matches!(
            restricted_least_squares(&wide, &re(&[1.0; 2]), &s),
            Err(Error::SupportTooLarge {
                support: 3,
                rows: 2
            })
        ));
    }

    #[test]
    fn zero_measurements_stop_at_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = gaussian_matrix(6, 8, &mut rng);
        let lv = HierarchicalLevels::new(4, 2, 2, 1).unwrap();
        let r = hihtp_recover(&m, &re(&[0.0; 6]), &lv, 20).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.converged_by, StopReason::SupportFixed);
        assert!(r.alpha_hat.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn full_sparsity_htp_is_plain_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = gaussian_matrix(12, 6, &mut rng);
        let y: Vec<C64> = (0..12)
            .map(|_| C64::new(rng.random(), rng.random()))
            .collect();
        let r = htp_recover(&m, &y, 6, 3, 20).unwrap();
        let ls = least_squares(&m, &y).unwrap();
        assert!(norm(&sub(&r.alpha_hat, &ls)) < 1e-10);
    }

    #[test]
    fn flat_htp_fails_where_hierarchy_helps() {
        // Truth: one entry in block 0 and one in block 1. The second column
        // is correlated enough with the measurement for flat HTP to settle
        // on two entries of block 0.
        let rows = [
            [0.7, 1.0, -0.7, -0.1, 0.0, 1.2],
            [0.7, -1.2, 0.5, 0.7, 2.1, -1.7],
            [-0.5, 1.3, -1.4, -1.2, 0.5, 1.0],
        ];
        let m = CMatrix::from_fn(3, 6, |i, j| C64::new(rows[i][j], 0.0));
        let alpha = re(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let y = m.mul_vec(&alpha).unwrap();

        let flat = htp_recover(&m, &y, 2, 2, 20).unwrap();
        assert_eq!(flat.support.indices(), &[0, 1]);
        assert!(norm(&sub(&flat.alpha_hat, &alpha)) > 0.1);

        let lv = HierarchicalLevels::new(3, 2, 2, 1).unwrap();
        let hi = hihtp_recover(&m, &y, &lv, 20).unwrap();
        assert_eq!(hi.support.indices(), &[0, 3]);
        assert!(norm(&sub(&hi.alpha_hat, &alpha)) < 1e-10);
    }

    #[test]
    fn noise_free_error_decays_geometrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let lv = HierarchicalLevels::new(8, 5, 2, 2).unwrap();
        let m = gaussian_matrix(30, 40, &mut rng);
        let mut m = m;
        let scale = 1.0 / (m.column_norms_sqr().iter().sum::<f64>() / 40.0).sqrt();
        m.scale(scale);
        let mut alpha = vec![C64::new(0.0, 0.0); 40];
        for (i, g) in [(6, 1.0), (8, -0.7), (31, 0.9), (33, 0.5)] {
            alpha[i] = C64::new(g, 0.2);
        }
        let y = m.mul_vec(&alpha).unwrap();
        let mut errors = vec![norm(&alpha)];
        let r = hihtp_recover_observed(&m, &y, &lv, 20, |_, a| errors.push(norm(&sub(a, &alpha))))
            .unwrap();
        assert!(norm(&sub(&r.alpha_hat, &alpha)) < 1e-10);
        for w in errors.windows(2) {
            assert!(w[1] < w[0] || w[1] < 1e-10, "error trace {errors:?}");
        }
    }

    #[test]
    fn exact_recovery_is_not_padded_with_roundoff() {
        // Levels allow six entries but the truth has two; once the fit is
        // exact the spare slots must stay empty.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = gaussian_matrix(20, 12, &mut rng);
        let mut alpha = re(&[0.0; 12]);
        alpha[1] = C64::new(0.8, -0.3);
        alpha[7] = C64::new(-1.1, 0.4);
        let y = m.mul_vec(&alpha).unwrap();
        let lv = HierarchicalLevels::new(4, 3, 3, 2).unwrap();
        let r = hihtp_recover(&m, &y, &lv, 20).unwrap();
        assert_eq!(r.support.indices(), &[1, 7]);
        assert!(norm(&sub(&r.alpha_hat, &alpha)) < 1e-12);
    }
}
