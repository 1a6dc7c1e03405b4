//! Prime pairs `(p_{2i-1}, p_{2i})`, the product family `Y(I)`, the modulus
//! `P(I)` and the weight `g_I`, with exhaustive checks of the combinatorics
//! behind the overlap bound.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rat::{self, Rational};

pub const DEFAULT_GAP_COEFF: u64 = 40;
pub const DEFAULT_J_MIN: u32 = 5;
pub const DEFAULT_Y_CAP: usize = 20;
pub const DEFAULT_BRUTE_LIMIT: u64 = 1_000_000;
/// Largest index set whose δ-count is decided by meet-in-the-middle.
pub const DEFAULT_MITM_CAP: usize = 36;

const MAX_EXP_PREC: u32 = 4096;

pub fn sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i.saturating_mul(i);
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Certified bounds on `e^j`, rounded outward to `prec` fractional bits.
pub fn exp_bounds(j: u32, prec: u32) -> (Rational, Rational) {
    if j == 0 {
        return (Rational::one(), Rational::one());
    }
    let x = rat::int(j as u64);
    let mut term = Rational::one();
    let mut sum = Rational::one();
    let mut n: u64 = 0;
    let target = Rational::new(BigInt::one(), BigInt::one() << (prec + 4));
    loop {
        n += 1;
        term = &term * &x / rat::int(n);
        sum += &term;
        // Once n + 1 > 2j the tail after this term is below the next term times 2.
        if n + 1 > 2 * j as u64 && term < target {
            break;
        }
    }
    let tail = &term * &x / rat::int(n + 1) * rat::int(2);
    (rat::floor_dyadic(&sum, prec), rat::ceil_dyadic(&(sum + tail), prec))
}

/// Exact comparison of an integer with `e^j`, tightening precision until
/// decided. For `j ≥ 1`, `e^j` is irrational so a decision always exists.
pub fn cmp_e_power(p: u64, j: u32) -> Result<Ordering> {
    if j == 0 {
        return Ok(p.cmp(&1));
    }
    let p_r = rat::int(p);
    let mut prec = 32;
    while prec <= MAX_EXP_PREC {
        let (lo, hi) = exp_bounds(j, prec);
        if p_r < lo {
            return Ok(Ordering::Less);
        }
        if p_r > hi {
            return Ok(Ordering::Greater);
        }
        prec *= 2;
    }
    Err(Error::PrecisionExhausted(format!("{p} against e^{j}")))
}

/// The primes up to a sieve limit, indexed from 1.
#[derive(Clone, Debug)]
pub struct PrimePairTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimePairTable {
    pub fn new(limit: u64) -> Self {
        Self { limit, primes: sieve(limit) }
    }

    /// Table large enough for levels up to `k`, i.e. limit ≥ e^{k+1}.
    pub fn for_levels(k: u32) -> Self {
        let (_, hi) = exp_bounds(k + 1, 8);
        let limit = hi.ceil().to_integer().to_u64().expect("sieve limit fits u64");
        Self::new(limit)
    }

    /// Table holding at least the pairs `1..=n`.
    pub fn for_pairs(n: usize) -> Self {
        let mut limit = 64;
        loop {
            let t = Self::new(limit);
            if t.primes.len() >= 2 * n {
                return t;
            }
            limit *= 2;
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `p_i`, 1-indexed.
    pub fn prime(&self, i: usize) -> Option<u64> {
        i.checked_sub(1).and_then(|k| self.primes.get(k)).copied()
    }

    /// `(p_{2i-1}, p_{2i})`.
    pub fn pair(&self, i: usize) -> Option<(u64, u64)> {
        if i == 0 {
            return None;
        }
        Some((self.prime(2 * i - 1)?, self.prime(2 * i)?))
    }

    fn pairs_of(&self, index_set: &[usize]) -> Result<Vec<(u64, u64)>> {
        index_set
            .iter()
            .map(|&i| {
                self.pair(i).ok_or_else(|| Error::SieveTooSmall {
                    limit: self.limit,
                    required: format!("pair index {i}"),
                })
            })
            .collect()
    }

    fn require_level(&self, j: u32) -> Result<()> {
        let (_, hi) = exp_bounds(j + 1, 8);
        if rat::int(self.limit) < hi {
            return Err(Error::SieveTooSmall {
                limit: self.limit,
                required: format!("e^{}", j + 1),
            });
        }
        Ok(())
    }

    /// The level `j` with both pair primes in `[e^j, e^{j+1})`, if any.
    pub fn level_of(&self, i: usize) -> Result<Option<u32>> {
        let (a, b) = self.pair(i).ok_or_else(|| Error::SieveTooSmall {
            limit: self.limit,
            required: format!("pair index {i}"),
        })?;
        let mut j = 0u32;
        while cmp_e_power(a, j + 1)? != Ordering::Less {
            j += 1;
        }
        Ok((cmp_e_power(b, j + 1)? == Ordering::Less).then_some(j))
    }

    /// `I_j = { i : p_{2i-1}, p_{2i} ∈ [e^j, e^{j+1}), p_{2i} − p_{2i-1} ≤ gap_coeff·j }`.
    pub fn build_pairs(&self, j: u32, gap_coeff: u64) -> Result<Vec<usize>> {
        self.require_level(j)?;
        let mut out = Vec::new();
        let mut i = 1;
        while let Some((a, b)) = self.pair(i) {
            if cmp_e_power(a, j + 1)? != Ordering::Less {
                break;
            }
            if cmp_e_power(a, j)? != Ordering::Less
                && cmp_e_power(b, j + 1)? == Ordering::Less
                && b - a <= gap_coeff * j as u64
            {
                out.push(i);
            }
            i += 1;
        }
        Ok(out)
    }

    /// `I = ⋃_{j_min ≤ j ≤ K} I_j`.
    pub fn build_index_set(&self, k: u32, j_min: u32, gap_coeff: u64) -> Result<Vec<usize>> {
        if k < j_min {
            return Err(Error::InvalidArgument(format!("K = {k} below j_min = {j_min}")));
        }
        let mut out = Vec::new();
        for j in j_min..=k {
            out.extend(self.build_pairs(j, gap_coeff)?);
        }
        Ok(out)
    }

    pub fn enumerate_y(&self, index_set: &[usize], cap: usize) -> Result<YSystem> {
        YSystem::new(self, index_set, cap)
    }
}

/// One member of `Y(I)`: the product and which pairs chose their larger prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YEntry {
    pub y: BigUint,
    /// Bit `t` set when the `t`-th pair of `I` contributes `p_{2i}`.
    pub even_mask: u64,
    pub g: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YSystem {
    pub index_set: Vec<usize>,
    pub pairs: Vec<(u64, u64)>,
    /// Sorted by `y`.
    pub entries: Vec<YEntry>,
    pub modulus: BigUint,
}

impl YSystem {
    pub fn new(table: &PrimePairTable, index_set: &[usize], cap: usize) -> Result<Self> {
        let mut index_set = index_set.to_vec();
        index_set.sort_unstable();
        index_set.dedup();
        if index_set.len() > cap.min(63) {
            return Err(Error::CapExceeded { size: index_set.len(), cap });
        }
        let pairs = table.pairs_of(&index_set)?;
        let mut entries: Vec<YEntry> = (0u64..(1u64 << pairs.len()))
            .into_par_iter()
            .map(|mask| {
                let mut y = BigUint::one();
                let mut g = Rational::one();
                for (t, &(odd, even)) in pairs.iter().enumerate() {
                    if mask >> t & 1 == 1 {
                        y *= even;
                        g *= rat::rat(even as i64 - 1, even as i64);
                    } else {
                        y *= odd;
                    }
                }
                YEntry { y, even_mask: mask, g }
            })
            .collect();
        entries.sort_by(|a, b| a.y.cmp(&b.y));
        let modulus = pairs
            .iter()
            .fold(BigUint::one(), |acc, &(a, b)| acc * a * b);
        Ok(Self { index_set, pairs, entries, modulus })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ys(&self) -> impl Iterator<Item = &BigUint> {
        self.entries.iter().map(|e| &e.y)
    }

    pub fn y_min(&self) -> &BigUint {
        &self.entries[0].y
    }

    pub fn y_max(&self) -> &BigUint {
        &self.entries[self.entries.len() - 1].y
    }

    pub fn find(&self, y: &BigUint) -> Option<usize> {
        self.entries.binary_search_by(|e| e.y.cmp(y)).ok()
    }

    /// `g_I(z) = Π_{i ∈ I, p_{2i} | z} (1 − 1/p_{2i})`.
    pub fn g_value(&self, z: &BigUint) -> Rational {
        g_value(&self.pairs, z)
    }

    pub fn is_admissible(&self, x: &BigUint) -> bool {
        x.gcd(&self.modulus).is_one()
    }

    /// `(y_e, y_o)`: the parts of `y` built from larger and smaller pair primes.
    pub fn split(&self, entry: &YEntry) -> (BigUint, BigUint) {
        let mut ye = BigUint::one();
        let mut yo = BigUint::one();
        for (t, &(odd, even)) in self.pairs.iter().enumerate() {
            if entry.even_mask >> t & 1 == 1 {
                ye *= even;
            } else {
                yo *= odd;
            }
        }
        (ye, yo)
    }

    /// `c_t(y) = y · p_{2i-1} / p_{2i}` for the `t`-th pair, when `p_{2i} | y`.
    pub fn conjugate(&self, entry: &YEntry, t: usize) -> Option<BigUint> {
        let (odd, even) = *self.pairs.get(t)?;
        (entry.even_mask >> t & 1 == 1).then(|| &entry.y / even * odd)
    }

    /// `#Y(I, δ) / Σ_y y_min / y` by enumeration.
    pub fn good_ratio(&self, delta: &Rational) -> Rational {
        let count = self.entries.iter().filter(|e| &e.g >= delta).count();
        let y_min = rat::from_biguint(self.y_min());
        let denom = self
            .entries
            .iter()
            .fold(Rational::zero(), |acc, e| acc + &y_min / rat::from_biguint(&e.y));
        rat::int(count as u64) / denom
    }

    /// Line record: header `I`, `P`, `y_min`, `y_max`, then `y g` lines.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let idx: Vec<String> = self.index_set.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "I {}", idx.join(","));
        let _ = writeln!(s, "P {}", self.modulus);
        let _ = writeln!(s, "y_min {}", self.y_min());
        let _ = writeln!(s, "y_max {}", self.y_max());
        for e in &self.entries {
            let _ = writeln!(s, "{} {}", e.y, rat::fmt(&e.g));
        }
        s
    }
}

pub fn g_value(pairs: &[(u64, u64)], z: &BigUint) -> Rational {
    pairs
        .iter()
        .filter(|&&(_, even)| (z % even).is_zero())
        .fold(Rational::one(), |acc, &(_, even)| {
            acc * rat::rat(even as i64 - 1, even as i64)
        })
}

/// `Σ_y y_min/y = Π_i (1 + p_{2i-1}/p_{2i})`.
pub fn harmonic_weight(pairs: &[(u64, u64)]) -> Rational {
    pairs.iter().fold(Rational::one(), |acc, &(odd, even)| {
        acc * (Rational::one() + rat::rat(odd as i64, even as i64))
    })
}

/// `#{T ⊆ I : Π_{i∈T} (1 − 1/p_{2i}) ≥ δ}` without enumerating `Y`.
pub fn count_good(pairs: &[(u64, u64)], delta: &Rational, mitm_cap: usize) -> Result<BigUint> {
    let total = BigUint::one() << pairs.len();
    if *delta > Rational::one() {
        return Ok(BigUint::zero());
    }
    let min_g = pairs.iter().fold(Rational::one(), |acc, &(_, e)| acc * rat::rat(e as i64 - 1, e as i64));
    if *delta <= min_g {
        return Ok(total);
    }
    if pairs.len() > mitm_cap {
        return Err(Error::CapExceeded { size: pairs.len(), cap: mitm_cap });
    }
    let (left, right) = pairs.split_at(pairs.len() / 2);
    let products = |half: &[(u64, u64)]| -> Vec<Rational> {
        (0u64..(1u64 << half.len()))
            .map(|mask| {
                half.iter().enumerate().filter(|(t, _)| mask >> t & 1 == 1).fold(
                    Rational::one(),
                    |acc, (_, &(_, e))| acc * rat::rat(e as i64 - 1, e as i64),
                )
            })
            .collect()
    };
    let lefts = products(left);
    let mut rights = products(right);
    rights.sort();
    let count: u64 = lefts
        .par_iter()
        .map(|a| {
            let need = delta / a;
            let idx = rights.partition_point(|b| *b < need);
            (rights.len() - idx) as u64
        })
        .sum();
    Ok(BigUint::from(count))
}

/// `#Y(I,δ) / Σ_y y_min/y` from the pairs alone.
pub fn good_ratio_by_pairs(pairs: &[(u64, u64)], delta: &Rational, mitm_cap: usize) -> Result<Rational> {
    let count = count_good(pairs, delta, mitm_cap)?;
    Ok(rat::from_biguint(&count) / harmonic_weight(pairs))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoodIndexSet {
    pub k: u32,
    pub index_set: Vec<usize>,
    pub ratio: Rational,
    pub trajectory: Vec<String>,
}

/// Scan `K = j_min..=K_max` for the first `I_K` with ratio `< δ`.
pub fn find_good_index_set(
    table: &PrimePairTable,
    delta: &Rational,
    j_min: u32,
    k_max: u32,
    gap_coeff: u64,
    mitm_cap: usize,
) -> Result<GoodIndexSet> {
    let mut trajectory = Vec::new();
    for k in j_min..=k_max {
        let index_set = table.build_index_set(k, j_min, gap_coeff)?;
        let pairs = table.pairs_of(&index_set)?;
        match good_ratio_by_pairs(&pairs, delta, mitm_cap) {
            Ok(ratio) => {
                trajectory.push(format!("{k} {} {}", index_set.len(), rat::fmt(&ratio)));
                if ratio < *delta {
                    return Ok(GoodIndexSet { k, index_set, ratio, trajectory });
                }
            }
            Err(Error::CapExceeded { .. }) => {
                trajectory.push(format!("{k} {} undecided", index_set.len()));
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::GoodIndexSetNotFound { delta: rat::fmt(delta), k_max, trajectory })
}

/// Distribution of `X_j(y) = #{i ∈ I_j : p_{2i} | y}` for one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelProfile {
    /// `None` groups pairs that straddle a level boundary.
    pub level: Option<u32>,
    pub pairs: usize,
    /// `counts[m] = #{y ∈ Y : X_j(y) = m}`.
    pub counts: Vec<u64>,
}

impl LevelProfile {
    pub fn probabilities(&self) -> Vec<Rational> {
        let total: u64 = self.counts.iter().sum();
        self.counts.iter().map(|&c| rat::rat(c as i64, total as i64)).collect()
    }

    /// Counts of `Bin(n, 1/2)` scaled to `|Y|`.
    pub fn binomial_counts(&self, y_len: u64) -> Vec<u64> {
        let n = self.pairs as u64;
        let scale = y_len >> n;
        (0..=n).map(|m| binomial(n, m) * scale).collect()
    }

    pub fn is_binomial(&self, y_len: u64) -> bool {
        self.counts == self.binomial_counts(y_len)
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub fn xj_profile(table: &PrimePairTable, ys: &YSystem) -> Result<Vec<LevelProfile>> {
    let mut levels: Vec<(Option<u32>, Vec<usize>)> = Vec::new();
    for (t, &i) in ys.index_set.iter().enumerate() {
        let level = table.level_of(i)?;
        match levels.iter_mut().find(|(l, _)| *l == level) {
            Some((_, slots)) => slots.push(t),
            None => levels.push((level, vec![t])),
        }
    }
    levels.sort_by_key(|(l, _)| l.map_or(u64::MAX, u64::from));
    Ok(levels
        .into_iter()
        .map(|(level, slots)| {
            let mut counts = vec![0u64; slots.len() + 1];
            for e in &ys.entries {
                let x = slots.iter().filter(|&&t| e.even_mask >> t & 1 == 1).count();
                counts[x] += 1;
            }
            LevelProfile { level, pairs: slots.len(), counts }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurvivorCount {
    pub y: u64,
    pub count: u64,
    pub bound: Rational,
    pub ok: bool,
}

/// `#{a ∈ Z_y : no y' ∈ Y with y' < y and b with a/y = b/y'}` by checking
/// every residue. `a/y = b/y'` for some `b` iff `y | a·y'` iff
/// `(y / gcd(y, y')) | a`, so each smaller `y'` rules out one residue class.
pub fn survivor_count(ys: &YSystem, y: &BigUint, limit: u64) -> Result<SurvivorCount> {
    let idx = ys
        .find(y)
        .ok_or_else(|| Error::InvalidArgument(format!("{y} is not in Y(I)")))?;
    let y64 = y.to_u64().filter(|&v| v <= limit).ok_or_else(|| Error::BruteForceLimitExceeded {
        modulus: y.to_u64().unwrap_or(u64::MAX),
        limit,
    })?;
    let mut steps: Vec<u64> = ys.entries[..idx]
        .iter()
        .map(|e| {
            let smaller = e.y.to_u64().expect("smaller than y");
            y64 / y64.gcd(&smaller)
        })
        .collect();
    steps.sort_unstable();
    steps.dedup();
    let mut covered = vec![false; y64 as usize];
    for step in steps {
        let mut a = 0u64;
        while a < y64 {
            covered[a as usize] = true;
            a += step;
        }
    }
    let count = covered.iter().filter(|c| !**c).count() as u64;
    let bound = rat::int(y64) * &ys.entries[idx].g;
    let ok = rat::int(count) <= bound;
    Ok(SurvivorCount { y: y64, count, bound, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn table() -> PrimePairTable {
        PrimePairTable::for_levels(6)
    }

    #[test]
    fn pair_indexing() {
        let t = table();
        assert_eq!(t.pair(1), Some((2, 3)));
        assert_eq!(t.pair(2), Some((5, 7)));
        assert_eq!(t.pair(0), None);
    }

    #[test]
    fn e_power_comparisons() {
        assert_eq!(cmp_e_power(2, 1).unwrap(), Ordering::Less);
        assert_eq!(cmp_e_power(3, 1).unwrap(), Ordering::Greater);
        assert_eq!(cmp_e_power(7, 2).unwrap(), Ordering::Less);
        assert_eq!(cmp_e_power(8, 2).unwrap(), Ordering::Greater);
        assert_eq!(cmp_e_power(148, 5).unwrap(), Ordering::Less);
        assert_eq!(cmp_e_power(149, 5).unwrap(), Ordering::Greater);
        assert_eq!(cmp_e_power(1, 0).unwrap(), Ordering::Equal);
    }

    #[test]
    fn first_levels() {
        let t = table();
        assert_eq!(t.build_pairs(1, 40).unwrap(), vec![2]);
        assert_eq!(t.build_pairs(2, 40).unwrap(), vec![3, 4]);
        assert_eq!(t.build_pairs(3, 40).unwrap(), vec![5, 6, 7, 8]);
        assert_eq!(t.level_of(1).unwrap(), None);
        assert_eq!(t.level_of(2).unwrap(), Some(1));
    }

    #[test]
    fn sieve_too_small() {
        let t = PrimePairTable::new(100);
        assert!(matches!(t.build_pairs(5, 40), Err(Error::SieveTooSmall { .. })));
    }

    #[test]
    fn y_system_small() {
        let t = table();
        let ys = t.enumerate_y(&[1, 2], 20).unwrap();
        let vals: Vec<u64> = ys.ys().map(|y| y.to_u64().unwrap()).collect();
        assert_eq!(vals, vec![10, 14, 15, 21]);
        assert_eq!(ys.modulus, BigUint::from(210u32));
        assert_eq!(ys.y_min(), &BigUint::from(10u32));

        let empty = t.enumerate_y(&[], 20).unwrap();
        assert_eq!(empty.len(), 1);
        assert_eq!(empty.y_min(), &BigUint::one());
        assert_eq!(empty.modulus, BigUint::one());

        let many: Vec<usize> = (1..=21).collect();
        assert!(matches!(t.enumerate_y(&many, 20), Err(Error::CapExceeded { size: 21, cap: 20 })));
    }

    #[test]
    fn g_values() {
        let t = table();
        let ys = t.enumerate_y(&[1, 2], 20).unwrap();
        assert_eq!(ys.g_value(&BigUint::from(21u32)), rat(4, 7));
        assert_eq!(ys.g_value(&BigUint::from(10u32)), int(1));
        assert_eq!(ys.g_value(&BigUint::from(15u32)), rat(2, 3));
    }

    #[test]
    fn good_ratio_examples() {
        let t = table();
        let ys = t.enumerate_y(&[1, 2], 20).unwrap();
        assert_eq!(ys.good_ratio(&rat(1, 2)), rat(7, 5));
        assert_eq!(ys.good_ratio(&int(2)), int(0));
        let empty = t.enumerate_y(&[], 20).unwrap();
        assert_eq!(empty.good_ratio(&rat(1, 2)), int(1));
        assert_eq!(good_ratio_by_pairs(&ys.pairs, &rat(1, 2), 36).unwrap(), rat(7, 5));
    }

    #[test]
    fn survivor_examples() {
        let t = table();
        let ys = t.enumerate_y(&[1, 2], 20).unwrap();
        for (y, count) in [(10u32, 10u64), (21, 12), (15, 10)] {
            let s = survivor_count(&ys, &BigUint::from(y), DEFAULT_BRUTE_LIMIT).unwrap();
            assert_eq!(s.count, count, "y = {y}");
            assert_eq!(s.bound, int(count));
            assert!(s.ok);
        }
        assert!(matches!(
            survivor_count(&ys, &BigUint::from(21u32), 20),
            Err(Error::BruteForceLimitExceeded { .. })
        ));
    }

    #[test]
    fn profile_examples() {
        let t = table();
        let one = t.enumerate_y(&[2], 20).unwrap();
        let p = xj_profile(&t, &one).unwrap();
        assert_eq!(p[0].probabilities(), vec![rat(1, 2), rat(1, 2)]);
        let two = t.enumerate_y(&[3, 4], 20).unwrap();
        let p = xj_profile(&t, &two).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].probabilities(), vec![rat(1, 4), rat(1, 2), rat(1, 4)]);
        let empty = t.enumerate_y(&[], 20).unwrap();
        assert!(xj_profile(&t, &empty).unwrap().is_empty());
    }

    #[test]
    fn find_good_reports_trajectory() {
        let t = PrimePairTable::for_levels(7);
        match find_good_index_set(&t, &rat(1, 48), 5, 7, 40, 36) {
            Err(Error::GoodIndexSetNotFound { trajectory, .. }) => assert_eq!(trajectory.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
