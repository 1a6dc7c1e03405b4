//! Exact measure of finite unions of arcs on the circle `[0, 1)`.
//!
//! Arcs are half-open `[lo, hi)`. The approximation sets `A_q^γ(ε)` are open
//! in the usual definition; the two conventions differ by finitely many
//! points, which no measure or subset-of-union computation here can see.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rat::{self, Rational};

/// Canonical finite union of half-open arcs in `[0, 1)`: sorted, disjoint,
/// and maximal (no component ends where the next begins).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TorusIntervalSet {
    components: Vec<(Rational, Rational)>,
}

impl TorusIntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            components: vec![(Rational::zero(), Rational::one())],
        }
    }

    pub fn components(&self) -> &[(Rational, Rational)] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Normalize raw intervals `[lo, hi)` on the real line (taken mod 1).
    /// Intervals may wrap, overlap, or be longer than 1.
    pub fn from_intervals<I>(intervals: I) -> Self
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let one = Rational::one();
        let mut pieces = Vec::new();
        for (lo, hi) in intervals {
            if lo >= hi {
                continue;
            }
            if &hi - &lo >= one {
                return Self::full();
            }
            let shift = lo.floor();
            let lo = &lo - &shift;
            let hi = &hi - &shift;
            if hi > one {
                pieces.push((Rational::zero(), &hi - &one));
                pieces.push((lo, one.clone()));
            } else {
                pieces.push((lo, hi));
            }
        }
        Self::merge_sorted_pieces(pieces)
    }

    fn merge_sorted_pieces(mut pieces: Vec<(Rational, Rational)>) -> Self {
        pieces.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(pieces.len());
        for (lo, hi) in pieces {
            match out.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => out.push((lo, hi)),
            }
        }
        Self { components: out }
    }

    pub fn measure(&self) -> Rational {
        self.components
            .iter()
            .fold(Rational::zero(), |acc, (lo, hi)| acc + (hi - lo))
    }

    pub fn union(&self, other: &Self) -> Self {
        let pieces = self
            .components
            .iter()
            .chain(other.components.iter())
            .cloned()
            .collect();
        Self::merge_sorted_pieces(pieces)
    }

    /// Membership of a point taken mod 1, half-open convention.
    pub fn contains(&self, x: &Rational) -> bool {
        let x = rat::frac(x);
        let idx = self.components.partition_point(|(lo, _)| lo <= &x);
        idx > 0 && x < self.components[idx - 1].1
    }

    /// `self ⊆ other`. Both are canonical, so every component of `self`
    /// must sit inside a single component of `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        let mut j = 0;
        for (lo, hi) in &self.components {
            while j < other.components.len() && other.components[j].1 <= *lo {
                j += 1;
            }
            match other.components.get(j) {
                Some((olo, ohi)) if olo <= lo && hi <= ohi => {}
                _ => return false,
            }
        }
        true
    }

    /// Newline-separated `lo hi` pairs in canonical order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (lo, hi) in &self.components {
            s.push_str(&rat::fmt(lo));
            s.push(' ');
            s.push_str(&rat::fmt(hi));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (a, b) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad interval line {line:?}")))?;
            let lo = rat::parse(a)?;
            let hi = rat::parse(b)?;
            if lo.is_negative() || hi > Rational::one() || lo >= hi {
                return Err(Error::Parse(format!("interval out of range: {line:?}")));
            }
            raw.push((lo, hi));
        }
        Ok(Self::from_intervals(raw))
    }
}

pub fn subset(a: &TorusIntervalSet, b: &TorusIntervalSet) -> bool {
    a.is_subset_of(b)
}

/// Arcs given by center and radius, before normalization.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CenteredArcFamily {
    pub arcs: Vec<(Rational, Rational)>,
}

impl CenteredArcFamily {
    pub fn new(arcs: Vec<(Rational, Rational)>) -> Self {
        Self { arcs }
    }

    /// Radius ≥ 1/2 covers the whole circle.
    pub fn normalize(&self) -> TorusIntervalSet {
        let half = rat::rat(1, 2);
        if self.arcs.iter().any(|(_, r)| *r >= half) {
            return TorusIntervalSet::full();
        }
        TorusIntervalSet::from_intervals(
            self.arcs
                .iter()
                .filter(|(_, r)| r.is_positive())
                .map(|(c, r)| (c - r, c + r)),
        )
    }

    /// Concentric dilation of every arc by the factor `b`.
    pub fn dilate(&self, b: u64) -> Self {
        let b = rat::int(b);
        Self {
            arcs: self.arcs.iter().map(|(c, r)| (c.clone(), r * &b)).collect(),
        }
    }
}

/// `A_q^γ(ε) = { α : ‖qα − γ‖ < ε }`, i.e. `q` arcs of radius `ε/q` centered
/// at `(a + γ)/q`.
pub fn approx_set(q: u64, gamma: &Rational, eps: &Rational) -> TorusIntervalSet {
    assert!(q >= 1, "approx_set needs q >= 1");
    if !eps.is_positive() {
        return TorusIntervalSet::empty();
    }
    if *eps >= rat::rat(1, 2) {
        return TorusIntervalSet::full();
    }
    let qr = rat::int(q);
    let r = eps / &qr;
    let g = rat::frac(gamma);
    TorusIntervalSet::from_intervals((0..q).map(|a| {
        let c = (rat::int(a) + &g) / &qr;
        (&c - &r, &c + &r)
    }))
}

/// One approximation set `A_modulus^γ(radius)` inside a union.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcSpec {
    pub modulus: u64,
    pub radius: Rational,
}

/// Exact `λ(⋃ A_{q_i}^γ(ε_i))` by a streaming k-way merge of the per-modulus
/// arc sequences, each of which is generated in sorted order.
///
/// A common factor `g` of all moduli is divided out first: with `T_g(α) = gα`
/// mod 1, `A_{gq}^γ(ε) = T_g^{-1}(A_q^γ(ε))` and `T_g` preserves measure.
/// `budget` bounds the total number of arcs after that reduction.
pub fn union_measure(specs: &[ArcSpec], gamma: &Rational, budget: u128) -> Result<Rational> {
    let half = rat::rat(1, 2);
    let mut live: Vec<ArcSpec> = specs
        .iter()
        .filter(|s| s.radius.is_positive())
        .cloned()
        .collect();
    if live.is_empty() {
        return Ok(Rational::zero());
    }
    if live.iter().any(|s| s.radius >= half) {
        return Ok(Rational::one());
    }
    if live.iter().any(|s| s.modulus == 0) {
        return Err(Error::InvalidArgument("modulus 0 in arc union".into()));
    }
    let g = live.iter().fold(0u64, |g, s| g.gcd(&s.modulus));
    for s in &mut live {
        s.modulus /= g;
    }
    // A_q(ε) ⊆ A_q(ε') for ε ≤ ε': keep the largest radius per modulus.
    live.sort_by(|a, b| a.modulus.cmp(&b.modulus).then(b.radius.cmp(&a.radius)));
    live.dedup_by(|later, first| later.modulus == first.modulus);

    let arcs: u128 = live.iter().map(|s| s.modulus as u128).sum();
    if arcs > budget {
        return Err(Error::UnionTooLarge { arcs, budget });
    }
    let gamma = rat::frac(gamma);
    match build_streams(&live, &gamma) {
        Some(streams) => Ok(merge_streams(streams)),
        None => Ok(union_measure_slow(&live, &gamma)),
    }
}

fn union_measure_slow(specs: &[ArcSpec], gamma: &Rational) -> Rational {
    let mut acc = TorusIntervalSet::empty();
    for s in specs {
        acc = acc.union(&approx_set(s.modulus, gamma, &s.radius));
    }
    acc.measure()
}

/// Arc generator for one modulus. All endpoints share the denominator
/// `den = q·gd·rd`; numerators are exact integers.
struct ArcStream {
    den: u64,
    q: u64,
    step: i128,
    first_center: i128,
    half_width: i128,
    phase: u8,
    a: u64,
}

impl ArcStream {
    fn center(&self, a: u64) -> i128 {
        self.first_center + self.step * a as i128
    }

    fn next_piece(&mut self) -> Option<(u64, u64)> {
        let den = self.den as i128;
        loop {
            match self.phase {
                0 => {
                    self.phase = 1;
                    let hi = self.center(self.q - 1) + self.half_width;
                    if hi > den {
                        return Some((0, (hi - den) as u64));
                    }
                }
                1 => {
                    if self.a == self.q {
                        self.phase = 2;
                        continue;
                    }
                    let c = self.center(self.a);
                    self.a += 1;
                    let lo = (c - self.half_width).max(0);
                    let hi = (c + self.half_width).min(den);
                    return Some((lo as u64, hi as u64));
                }
                2 => {
                    self.phase = 3;
                    let lo = self.first_center - self.half_width;
                    if lo < 0 {
                        return Some(((lo + den) as u64, den as u64));
                    }
                }
                _ => return None,
            }
        }
    }
}

fn build_streams(specs: &[ArcSpec], gamma: &Rational) -> Option<Vec<ArcStream>> {
    let gn = gamma.numer().to_u64()?;
    let gd = gamma.denom().to_u64()?;
    specs
        .iter()
        .map(|s| {
            let rn = s.radius.numer().to_u64()?;
            let rd = s.radius.denom().to_u64()?;
            let den = s.modulus.checked_mul(gd)?.checked_mul(rd)?;
            // Cross products must fit comfortably in u128.
            if den >= 1u64 << 62 {
                return None;
            }
            Some(ArcStream {
                den,
                q: s.modulus,
                step: gd as i128 * rd as i128,
                first_center: gn as i128 * rd as i128,
                half_width: rn as i128 * gd as i128,
                phase: 0,
                a: 0,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
struct Endpoint {
    num: u64,
    stream: usize,
}

struct HeapItem {
    lo: u64,
    hi: u64,
    den: u64,
    stream: usize,
}

impl HeapItem {
    fn lo_cmp(&self, other: &Self) -> Ordering {
        (self.lo as u128 * other.den as u128).cmp(&(other.lo as u128 * self.den as u128))
    }
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // Reversed: BinaryHeap is a max-heap and we pop the smallest `lo`.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lo_cmp(self)
            .then_with(|| other.stream.cmp(&self.stream))
    }
}

fn merge_streams(mut streams: Vec<ArcStream>) -> Rational {
    let dens: Vec<u64> = streams.iter().map(|s| s.den).collect();
    let mut heap = BinaryHeap::with_capacity(streams.len());
    for (i, s) in streams.iter_mut().enumerate() {
        if let Some((lo, hi)) = s.next_piece() {
            heap.push(HeapItem { lo, hi, den: s.den, stream: i });
        }
    }
    // Σ hi − Σ lo over merged components, kept per denominator.
    let mut acc = vec![0i128; streams.len()];
    let mut current: Option<(Endpoint, Endpoint)> = None;
    let less_eq = |a: Endpoint, b: Endpoint| {
        a.num as u128 * dens[b.stream] as u128 <= b.num as u128 * dens[a.stream] as u128
    };
    while let Some(item) = heap.pop() {
        let sid = item.stream;
        let lo = Endpoint { num: item.lo, stream: sid };
        let hi = Endpoint { num: item.hi, stream: sid };
        if let Some((lo_next, hi_next)) = streams[sid].next_piece() {
            heap.push(HeapItem { lo: lo_next, hi: hi_next, den: item.den, stream: sid });
        }
        match current.as_mut() {
            Some((_, cur_hi)) if less_eq(lo, *cur_hi) => {
                if !less_eq(hi, *cur_hi) {
                    *cur_hi = hi;
                }
            }
            _ => {
                if let Some((l, h)) = current.take() {
                    acc[h.stream] += h.num as i128;
                    acc[l.stream] -= l.num as i128;
                }
                current = Some((lo, hi));
            }
        }
    }
    if let Some((l, h)) = current {
        acc[h.stream] += h.num as i128;
        acc[l.stream] -= l.num as i128;
    }
    acc.iter()
        .zip(&dens)
        .filter(|(n, _)| **n != 0)
        .fold(Rational::zero(), |total, (n, d)| {
            total + Rational::new(BigInt::from(*n), BigInt::from(*d))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn set(pairs: &[(i64, i64, i64, i64)]) -> TorusIntervalSet {
        TorusIntervalSet::from_intervals(
            pairs
                .iter()
                .map(|&(a, b, c, d)| (rat(a, b), rat(c, d))),
        )
    }

    #[test]
    fn wraparound_split() {
        let s = CenteredArcFamily::new(vec![(int(1), rat(1, 4))]).normalize();
        assert_eq!(s, set(&[(0, 1, 1, 4), (3, 4, 1, 1)]));
        let raw = TorusIntervalSet::from_intervals(vec![(rat(3, 4), rat(5, 4))]);
        assert_eq!(raw, s);
        assert_eq!(raw.measure(), rat(1, 2));
    }

    #[test]
    fn overlapping_merge() {
        let s = set(&[(1, 10, 2, 10), (3, 20, 1, 4)]);
        assert_eq!(s.components(), &[(rat(1, 10), rat(1, 4))]);
        assert_eq!(s.measure(), rat(3, 20));
    }

    #[test]
    fn empty_and_full() {
        let e = TorusIntervalSet::from_intervals(Vec::new());
        assert!(e.is_empty());
        assert_eq!(e.measure(), Rational::zero());
        assert_eq!(TorusIntervalSet::full().measure(), int(1));
    }

    #[test]
    fn touching_components_merge() {
        let s = set(&[(0, 1, 1, 4), (1, 4, 1, 2)]);
        assert_eq!(s.components().len(), 1);
    }

    #[test]
    fn approx_set_examples() {
        let a = approx_set(3, &int(0), &rat(1, 4));
        assert_eq!(a.measure(), rat(1, 2));
        assert!(a.contains(&rat(1, 3)));
        assert!(a.contains(&rat(0, 1)));
        assert!(!a.contains(&rat(1, 6)));

        let b = approx_set(2, &rat(1, 2), &rat(1, 8));
        assert_eq!(b, set(&[(3, 16, 5, 16), (11, 16, 13, 16)]));

        assert_eq!(approx_set(5, &int(0), &rat(3, 5)), TorusIntervalSet::full());
        assert!(approx_set(5, &int(0), &int(0)).is_empty());
    }

    #[test]
    fn subset_examples() {
        let a = approx_set(1, &rat(1, 2), &rat(1, 16));
        let b = approx_set(2, &int(0), &rat(1, 4));
        assert_eq!(a, set(&[(7, 16, 9, 16)]));
        assert!(subset(&a, &b));
        assert!(!subset(&b, &a));
        assert!(subset(&b, &b));
        assert!(subset(&TorusIntervalSet::empty(), &a));
    }

    #[test]
    fn dilation_examples() {
        let fam = CenteredArcFamily::new(vec![(rat(3, 20), rat(1, 20)), (rat(1, 5), rat(1, 20))]);
        assert_eq!(fam.normalize().measure(), rat(3, 20));
        assert_eq!(fam.dilate(2).normalize().measure(), rat(1, 4));
        assert_eq!(fam.dilate(1), fam);
        let single = CenteredArcFamily::new(vec![(rat(1, 2), rat(1, 8))]);
        assert_eq!(single.dilate(3).normalize().measure(), rat(3, 4));
    }

    #[test]
    fn text_round_trip() {
        let s = approx_set(4, &rat(1, 3), &rat(1, 5));
        let back = TorusIntervalSet::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
        assert!(TorusIntervalSet::from_text("1/2").is_err());
    }

    fn union_slow(specs: &[ArcSpec], gamma: &Rational) -> Rational {
        let mut acc = TorusIntervalSet::empty();
        for s in specs {
            acc = acc.union(&approx_set(s.modulus, gamma, &s.radius));
        }
        acc.measure()
    }

    #[test]
    fn streaming_union_matches_interval_sets() {
        let specs = vec![
            ArcSpec { modulus: 2, radius: rat(1, 4) },
            ArcSpec { modulus: 3, radius: rat(1, 4) },
        ];
        assert_eq!(union_measure(&specs, &int(0), 1000).unwrap(), rat(3, 4));
        for gamma in [int(0), rat(1, 3), rat(7, 5), rat(22, 7), rat(-1, 9)] {
            let specs: Vec<ArcSpec> = [(4, rat(1, 9)), (6, rat(1, 7)), (9, rat(1, 20)), (10, rat(1, 3))]
                .into_iter()
                .map(|(q, r)| ArcSpec { modulus: q, radius: r })
                .collect();
            assert_eq!(
                union_measure(&specs, &gamma, 1000).unwrap(),
                union_slow(&specs, &gamma)
            );
        }
    }

    #[test]
    fn union_budget_and_saturation() {
        let big = vec![
            ArcSpec { modulus: 1000, radius: rat(1, 1_000_000) },
            ArcSpec { modulus: 999, radius: rat(1, 1_000_000) },
        ];
        assert!(matches!(
            union_measure(&big, &int(0), 10),
            Err(Error::UnionTooLarge { .. })
        ));
        let full = vec![ArcSpec { modulus: 1000, radius: rat(1, 2) }];
        assert_eq!(union_measure(&full, &int(0), 10).unwrap(), int(1));
        assert_eq!(union_measure(&[], &int(0), 10).unwrap(), int(0));
    }

    #[test]
    fn gcd_reduction_is_measure_preserving() {
        let specs: Vec<ArcSpec> = [(12, rat(1, 10)), (18, rat(1, 7)), (30, rat(1, 40))]
            .into_iter()
            .map(|(q, r)| ArcSpec { modulus: q, radius: r })
            .collect();
        let gamma = rat(2, 5);
        assert_eq!(
            union_measure(&specs, &gamma, 1000).unwrap(),
            union_slow(&specs, &gamma)
        );
    }
}
