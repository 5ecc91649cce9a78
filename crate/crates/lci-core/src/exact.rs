//! Exact computation of longest common weakly-increasing subsequence
//! lengths, the block-aligned variants, plain LCS, and small brute-force
//! oracles.
//!
//! Word lengths may differ; equal lengths are the usual random-word setting
//! and the one the asymptotics are stated for.

use thiserror::Error;

use crate::model::Word;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("alphabet sizes differ: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("brute force limited to words of length <= {limit}, got {got}")]
    TooLarge { got: usize, limit: usize },
    #[error("composition has {parts} parts summing to {sum}, expected {expected_parts} parts summing to {expected_sum}")]
    BadComposition { parts: usize, sum: usize, expected_parts: usize, expected_sum: usize },
    #[error("block order is not onto {{1..{m}}}")]
    NotOnto { m: usize },
    #[error("block enumeration too large: m^b = {size} exceeds {limit}")]
    TooManyBlocks { size: u128, limit: u128 },
}

/// A slot-to-letter map `alpha: {1..l} -> {1..m}`, onto, with `l >= m`.
/// The identity order `(1, 2, ..., m)` recovers the weakly-increasing case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockOrder {
    alpha: Vec<u8>,
    m: usize,
}

impl BlockOrder {
    pub fn new(alpha: Vec<u8>, m: usize) -> Result<Self, ExactError> {
        let mut seen = vec![false; m];
        for &a in &alpha {
            if a == 0 || a as usize > m {
                return Err(ExactError::NotOnto { m });
            }
            seen[a as usize - 1] = true;
        }
        if alpha.len() < m || !seen.iter().all(|&s| s) {
            return Err(ExactError::NotOnto { m });
        }
        Ok(BlockOrder { alpha, m })
    }

    pub fn identity(m: usize) -> Self {
        BlockOrder { alpha: (1..=m as u8).collect(), m }
    }

    pub fn slots(&self) -> &[u8] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Letter assigned to slot `k` (0-based).
    pub fn letter(&self, k: usize) -> u8 {
        self.alpha[k]
    }
}

/// An ordered composition: `parts` nonnegative integers summing to the
/// length of the word it splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    pub parts: Vec<usize>,
}

impl Composition {
    pub fn new(parts: Vec<usize>) -> Self {
        Composition { parts }
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }
}

fn check_alphabets(x: &Word, y: &Word) -> Result<(), ExactError> {
    if x.m() != y.m() {
        return Err(ExactError::AlphabetMismatch(x.m(), y.m()));
    }
    Ok(())
}

/// Length of the longest common weakly-increasing subsequence.
///
/// DP over `(i, j, c)` where `c` is the largest letter allowed so far:
/// `D[i][j][c] = max(D[i-1][j][c], D[i][j-1][c], D[i][j][c-1],
/// D[i-1][j-1][c] + 1 if x_i = y_j = c)`. O(|x||y|m) time with two rolling
/// rows.
pub fn lci_length(x: &Word, y: &Word) -> Result<usize, ExactError> {
    check_alphabets(x, y)?;
    Ok(block_dp(x.letters(), y.letters(), BlockOrder::identity(x.m()).slots()))
}

/// Block-aligned common subsequence length: the common subsequence must
/// decompose into `l` consecutive (possibly empty) blocks, block `k` using
/// only the letter `alpha(k)`.
pub fn lc_blocks_length(x: &Word, y: &Word, alpha: &BlockOrder) -> Result<usize, ExactError> {
    check_alphabets(x, y)?;
    if alpha.m() != x.m() {
        return Err(ExactError::AlphabetMismatch(alpha.m(), x.m()));
    }
    Ok(block_dp(x.letters(), y.letters(), alpha.slots()))
}

/// Shared DP: letters of the common subsequence follow the block order
/// `slots` (for [`lci_length`] this is the identity, so `c` is just the
/// letter bound).
fn block_dp(x: &[u8], y: &[u8], slots: &[u8]) -> usize {
    let (nx, ny, l) = (x.len(), y.len(), slots.len());
    if nx == 0 || ny == 0 {
        return 0;
    }
    let width = (ny + 1) * (l + 1);
    let mut prev = vec![0u32; width];
    let mut cur = vec![0u32; width];
    let idx = |j: usize, k: usize| j * (l + 1) + k;
    for i in 1..=nx {
        cur[..=l].fill(0);
        for j in 1..=ny {
            for k in 1..=l {
                let mut best = prev[idx(j, k)];
                best = best.max(cur[idx(j - 1, k)]);
                best = best.max(cur[idx(j, k - 1)]);
                if x[i - 1] == slots[k - 1] && y[j - 1] == slots[k - 1] {
                    best = best.max(prev[idx(j - 1, k)] + 1);
                }
                cur[idx(j, k)] = best;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[idx(ny, l)] as usize
}

/// O(|x| + |y|) route for binary alphabets, used by the simulation harness
/// at large `n`. Over `{1,2}` a weakly increasing word is `1^a 2^b`, so it
/// suffices to sweep the number of leading ones; tests pin this against the
/// DP.
pub fn lci_length_m2(x: &Word, y: &Word) -> Result<usize, ExactError> {
    check_alphabets(x, y)?;
    if x.m() != 2 {
        return Err(ExactError::AlphabetMismatch(x.m(), 2));
    }
    let ones = |w: &Word| -> Vec<usize> {
        // positions (0-based, exclusive prefix length) just after each '1'
        let mut v = Vec::new();
        for (i, &l) in w.letters().iter().enumerate() {
            if l == 1 {
                v.push(i + 1);
            }
        }
        v
    };
    let suffix_twos = |w: &Word| -> Vec<usize> {
        let n = w.len();
        let mut v = vec![0usize; n + 1];
        for i in (0..n).rev() {
            v[i] = v[i + 1] + usize::from(w.letters()[i] == 2);
        }
        v
    };
    let (ox, oy) = (ones(x), ones(y));
    let (sx, sy) = (suffix_twos(x), suffix_twos(y));
    let kmax = ox.len().min(oy.len());
    let mut best = 0;
    for k in 0..=kmax {
        let px = if k == 0 { 0 } else { ox[k - 1] };
        let py = if k == 0 { 0 } else { oy[k - 1] };
        best = best.max(k + sx[px].min(sy[py]));
    }
    Ok(best)
}

/// Dispatch to the fastest exact route available for the alphabet size.
pub fn lci_length_fast(x: &Word, y: &Word) -> Result<usize, ExactError> {
    if x.m() == 2 && y.m() == 2 {
        lci_length_m2(x, y)
    } else {
        lci_length(x, y)
    }
}

pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Exhaustive oracle: enumerate every weakly increasing subsequence of both
/// words and intersect. Guarded to short words.
pub fn lci_bruteforce(x: &Word, y: &Word) -> Result<usize, ExactError> {
    check_alphabets(x, y)?;
    for w in [x, y] {
        if w.len() > BRUTE_FORCE_LIMIT {
            return Err(ExactError::TooLarge { got: w.len(), limit: BRUTE_FORCE_LIMIT });
        }
    }
    let xs = increasing_subsequences(x.letters());
    let ys = increasing_subsequences(y.letters());
    Ok(xs.intersection(&ys).map(|s| s.len()).max().unwrap_or(0))
}

fn increasing_subsequences(w: &[u8]) -> std::collections::HashSet<Vec<u8>> {
    let mut out = std::collections::HashSet::new();
    let n = w.len();
    for mask in 0u32..(1 << n) {
        let mut sub = Vec::new();
        let mut ok = true;
        for (i, &l) in w.iter().enumerate() {
            if mask & (1 << i) != 0 {
                if let Some(&last) = sub.last() {
                    if l < last {
                        ok = false;
                        break;
                    }
                }
                sub.push(l);
            }
        }
        if ok {
            out.insert(sub);
        }
    }
    out
}

/// Value of the split-point representation at one pair of compositions:
/// segment `i` of a word spans positions `(prefix_{i-1}, prefix_i]` and
/// contributes `min(#i in x-segment i, #i in y-segment i)`.
pub fn composition_value(
    x: &Word,
    y: &Word,
    lx: &Composition,
    ly: &Composition,
) -> Result<usize, ExactError> {
    check_alphabets(x, y)?;
    let m = x.m();
    for (comp, w) in [(lx, x), (ly, y)] {
        if comp.parts.len() != m || comp.total() != w.len() {
            return Err(ExactError::BadComposition {
                parts: comp.parts.len(),
                sum: comp.total(),
                expected_parts: m,
                expected_sum: w.len(),
            });
        }
    }
    let count = |w: &Word, from: usize, to: usize, letter: u8| {
        w.letters()[from..to].iter().filter(|&&l| l == letter).count()
    };
    let mut total = 0;
    let (mut px, mut py) = (0usize, 0usize);
    for i in 0..m {
        let (ex, ey) = (px + lx.parts[i], py + ly.parts[i]);
        let letter = (i + 1) as u8;
        total += count(x, px, ex, letter).min(count(y, py, ey, letter));
        px = ex;
        py = ey;
    }
    Ok(total)
}

pub const BLOCK_ENUM_LIMIT: u128 = 1_000_000;

/// Max of [`lc_blocks_length`] over every surjection `{1..b} -> {1..m}`.
pub fn lc_b_blocks(x: &Word, y: &Word, b: usize) -> Result<usize, ExactError> {
    check_alphabets(x, y)?;
    let m = x.m();
    if b < m {
        return Err(ExactError::NotOnto { m });
    }
    let size = (m as u128).checked_pow(b as u32).unwrap_or(u128::MAX);
    if size > BLOCK_ENUM_LIMIT {
        return Err(ExactError::TooManyBlocks { size, limit: BLOCK_ENUM_LIMIT });
    }
    let mut best = 0;
    let mut alpha = vec![1u8; b];
    enumerate_onto(&mut alpha, 0, m, &mut |slots| {
        best = best.max(block_dp(x.letters(), y.letters(), slots));
    });
    Ok(best)
}

/// Visit every onto map, pruning branches that cannot cover all letters.
fn enumerate_onto(alpha: &mut [u8], pos: usize, m: usize, visit: &mut impl FnMut(&[u8])) {
    let b = alpha.len();
    if pos == b {
        let mut seen = vec![false; m];
        for &a in alpha.iter() {
            seen[a as usize - 1] = true;
        }
        if seen.iter().all(|&s| s) {
            visit(alpha);
        }
        return;
    }
    let mut seen = vec![false; m];
    for &a in alpha[..pos].iter() {
        seen[a as usize - 1] = true;
    }
    let missing = seen.iter().filter(|&&s| !s).count();
    if missing > b - pos {
        return;
    }
    for letter in 1..=m as u8 {
        alpha[pos] = letter;
        enumerate_onto(alpha, pos + 1, m, visit);
    }
}

/// Classic longest common subsequence, kept as a test utility (LCI can never
/// exceed it).
pub fn lcs_length(x: &Word, y: &Word) -> usize {
    let (a, b) = (x.letters(), y.letters());
    let (nx, ny) = (a.len(), b.len());
    let mut prev = vec![0u32; ny + 1];
    let mut cur = vec![0u32; ny + 1];
    for i in 1..=nx {
        cur[0] = 0;
        for j in 1..=ny {
            cur[j] = if a[i - 1] == b[j - 1] {
                prev[j - 1] + 1
            } else {
                prev[j].max(cur[j - 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[ny] as usize
}

/// All `parts`-part compositions of `total`, in lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(cur: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(cur, pos + 1, left - v, out);
        }
    }
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(&mut cur, 0, total, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_word, validate_pmf, RngConfig, Word};

    fn w(s: &str, m: usize) -> Word {
        Word::parse(s, m).unwrap()
    }

    #[test]
    fn lci_disjoint_letters_is_zero() {
        assert_eq!(lci_length(&w("111", 2), &w("222", 2)).unwrap(), 0);
    }

    #[test]
    fn lci_hand_examples() {
        assert_eq!(lci_length(&w("1122", 2), &w("1212", 2)).unwrap(), 3);
        let v = w("3123", 3);
        assert_eq!(lci_length(&v, &v).unwrap(), 3);
        assert_eq!(lci_length(&w("12", 2), &w("21", 2)).unwrap(), 1);
    }

    #[test]
    fn brute_force_matches_hand_examples() {
        assert_eq!(lci_bruteforce(&w("12", 2), &w("21", 2)).unwrap(), 1);
        assert_eq!(lci_bruteforce(&w("1122", 2), &w("1212", 2)).unwrap(), 3);
        assert_eq!(lci_bruteforce(&w("", 2), &w("12", 2)).unwrap(), 0);
        let long = Word::new(vec![1; 13], 2).unwrap();
        assert!(matches!(
            lci_bruteforce(&long, &w("12", 2)),
            Err(ExactError::TooLarge { .. })
        ));
    }

    #[test]
    fn composition_value_hand_count() {
        // x = 11|22, y = 1|212: min(2,1) + min(2,2) = 3.
        let v = composition_value(
            &w("1122", 2),
            &w("1212", 2),
            &Composition::new(vec![2, 2]),
            &Composition::new(vec![1, 3]),
        )
        .unwrap();
        assert_eq!(v, 3);
    }

    #[test]
    fn composition_single_block_single_letter() {
        let v = composition_value(
            &w("111", 2),
            &w("11", 2),
            &Composition::new(vec![3, 0]),
            &Composition::new(vec![2, 0]),
        )
        .unwrap();
        assert_eq!(v, 2);
    }

    #[test]
    fn composition_rejects_bad_sums() {
        assert!(matches!(
            composition_value(
                &w("1122", 2),
                &w("1212", 2),
                &Composition::new(vec![1, 2]),
                &Composition::new(vec![1, 3]),
            ),
            Err(ExactError::BadComposition { .. })
        ));
    }

    #[test]
    fn max_over_compositions_equals_dp() {
        let px = validate_pmf(&[0.4, 0.3, 0.3]).unwrap();
        for rep in 0..40 {
            let x = sample_word(&px, 7, &RngConfig::new(100 + rep, 0));
            let y = sample_word(&px, 7, &RngConfig::new(100 + rep, 1));
            let dp = lci_length(&x, &y).unwrap();
            let mut best = 0;
            for lx in compositions(x.len(), 3) {
                for ly in compositions(y.len(), 3) {
                    let v = composition_value(
                        &x,
                        &y,
                        &Composition::new(lx.clone()),
                        &Composition::new(ly),
                    )
                    .unwrap();
                    best = best.max(v);
                }
            }
            assert_eq!(best, dp, "x={x} y={y}");
        }
    }

    #[test]
    fn identity_blocks_equal_lci() {
        let px = validate_pmf(&[0.5, 0.2, 0.3]).unwrap();
        let id = BlockOrder::identity(3);
        for rep in 0..30 {
            let x = sample_word(&px, 12, &RngConfig::new(rep, 0));
            let y = sample_word(&px, 12, &RngConfig::new(rep, 1));
            assert_eq!(
                lc_blocks_length(&x, &y, &id).unwrap(),
                lci_length(&x, &y).unwrap()
            );
        }
    }

    #[test]
    fn block_order_212_hand_example() {
        let alpha = BlockOrder::new(vec![2, 1, 2], 2).unwrap();
        assert_eq!(lc_blocks_length(&w("212", 2), &w("212", 2), &alpha).unwrap(), 3);
        assert_eq!(lc_blocks_length(&w("111", 2), &w("222", 2), &alpha).unwrap(), 0);
    }

    #[test]
    fn block_order_must_be_onto() {
        assert!(BlockOrder::new(vec![1, 1], 2).is_err());
        assert!(BlockOrder::new(vec![1], 2).is_err());
        assert!(BlockOrder::new(vec![2, 1, 2], 2).is_ok());
    }

    #[test]
    fn lc_b_blocks_bounds_and_lcs_limit() {
        let px = validate_pmf(&[0.5, 0.5]).unwrap();
        for rep in 0..20 {
            let x = sample_word(&px, 7, &RngConfig::new(rep, 2));
            let y = sample_word(&px, 7, &RngConfig::new(rep, 3));
            let lci = lci_length(&x, &y).unwrap();
            let b3 = lc_b_blocks(&x, &y, 3).unwrap();
            assert!(b3 >= lci);
            // b >= n + m - 2 recovers the unconstrained LCS
            let b = x.len().max(y.len()) + 2 - 2;
            let full = lc_b_blocks(&x, &y, b.max(2)).unwrap();
            assert_eq!(full, lcs_length(&x, &y), "x={x} y={y}");
        }
        assert_eq!(lc_b_blocks(&w("11", 2), &w("22", 2), 2).unwrap(), 0);
    }

    #[test]
    fn lc_b_blocks_guard() {
        assert!(matches!(
            lc_b_blocks(&w("123", 3), &w("123", 3), 20),
            Err(ExactError::TooManyBlocks { .. })
        ));
    }

    #[test]
    fn lcs_basics() {
        assert_eq!(lcs_length(&w("1212", 2), &w("1212", 2)), 4);
        assert_eq!(lcs_length(&w("12", 2), &w("21", 2)), 1);
    }

    #[test]
    fn m2_sweep_matches_dp() {
        let px = validate_pmf(&[0.6, 0.4]).unwrap();
        let py = validate_pmf(&[0.3, 0.7]).unwrap();
        for rep in 0..200 {
            let n = 1 + (rep as usize * 7) % 60;
            let x = sample_word(&px, n, &RngConfig::new(rep, 10));
            let y = sample_word(&py, n, &RngConfig::new(rep, 11));
            assert_eq!(
                lci_length_m2(&x, &y).unwrap(),
                lci_length(&x, &y).unwrap(),
                "x={x} y={y}"
            );
        }
    }

    #[test]
    fn monotone_in_appending() {
        let px = validate_pmf(&[0.5, 0.5]).unwrap();
        for rep in 0..30 {
            let x = sample_word(&px, 9, &RngConfig::new(rep, 20));
            let y = sample_word(&px, 9, &RngConfig::new(rep, 21));
            let base = lci_length(&x, &y).unwrap();
            for letter in 1..=2u8 {
                let mut ext = x.letters().to_vec();
                ext.push(letter);
                let x2 = Word::new(ext, 2).unwrap();
                assert!(lci_length(&x2, &y).unwrap() >= base);
            }
        }
    }
}
