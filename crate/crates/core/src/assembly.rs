//! Full counterexamples from blocks: a disjoint block sequence with a
//! Borel–Cantelli tail certificate, and a function ψ ≤ f, non-increasing on
//! a support of upper density 1, whose limsup set is null.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::approx::ApproxFunction;
use crate::block::{self, BlockCertificate, BlockConfig, MassRule};
use crate::cert::{self, Check, Record};
use crate::error::{Error, Result};
use crate::rat::{self, Rational};

/// Pointwise checks on `D_j` enumerate at most this many points per block.
pub const D_SCAN_LIMIT: u64 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailCertificate {
    /// `ε_k = 2^{−k}`.
    pub eps: Vec<Rational>,
    /// Per block: the overlap sum, or the exact union when computed.
    pub achieved: Vec<Rational>,
    /// `(K, Σ_{K≤ℓ≤k_max} ε_ℓ + Σ_{ℓ>k_max} 2^{−ℓ}, same with achieved bounds)`.
    pub bounds: Vec<(usize, Rational, Rational)>,
}

impl TailCertificate {
    fn new(eps: Vec<Rational>, achieved: Vec<Rational>) -> Self {
        let k_max = eps.len();
        let beyond = rat::rat(1, 1i64 << k_max.min(62));
        let bounds = (1..=k_max + 1)
            .map(|k| {
                let sched = eps[k - 1..].iter().fold(beyond.clone(), |a, e| a + e);
                let got = achieved[k - 1..].iter().fold(beyond.clone(), |a, e| a + e);
                (k, sched, got)
            })
            .collect();
        Self { eps, achieved, bounds }
    }

    pub fn schedule_bound(&self, k: usize) -> Option<&Rational> {
        self.bounds.iter().find(|(kk, _, _)| *kk == k).map(|(_, s, _)| s)
    }

    pub fn decreasing(&self) -> bool {
        self.bounds.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].2 <= w[0].2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThmA {
    pub blocks: Vec<BlockCertificate>,
    pub tail: TailCertificate,
}

impl ThmA {
    pub fn total_mass(&self) -> Rational {
        self.blocks.iter().fold(Rational::zero(), |a, b| a + &b.params.mass)
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        for pair in self.blocks.windows(2) {
            checks.push(Check::new(
                "blocks disjoint and increasing",
                pair[1].min_s() > pair[0].max_s(),
                format!("{} > {}", pair[1].min_s(), pair[0].max_s()),
            ));
        }
        let lo = self.blocks.first().map_or(Rational::zero(), |b| b.window.0.clone());
        let n = rat::int(self.blocks.len() as u64);
        checks.push(Check::new(
            "total mass ≥ k_max · window low end",
            self.total_mass() >= n * lo,
            rat::fmt(&self.total_mass()),
        ));
        for (i, b) in self.blocks.iter().enumerate() {
            let got = &self.tail.achieved[i];
            checks.push(Check::new(
                &format!("block {} union bound < ε_{}", i + 1, i + 1),
                *got < b.eps,
                format!("{} vs {}", rat::fmt(got), rat::fmt(&b.eps)),
            ));
        }
        checks.push(Check::new("tail bounds decrease in K", self.tail.decreasing(), String::new()));
        checks
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new("thmA");
        r.push("k_max", self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            r.push(
                "block",
                format!(
                    "{} eps={} M={} S_min={} S_max={} S_size={} mass={} overlap_sum={} union={}",
                    i + 1,
                    rat::fmt(&b.eps),
                    b.m,
                    b.min_s(),
                    b.max_s(),
                    b.s_len(),
                    rat::fmt(&b.params.mass),
                    rat::fmt(&b.overlap_sum),
                    b.union_measure.as_ref().map_or("-".into(), rat::fmt)
                ),
            );
        }
        for (k, s, a) in &self.tail.bounds {
            r.push("tail", format!("{k} {} {}", rat::fmt(s), rat::fmt(a)));
        }
        r.push_rat("total_mass", &self.total_mass());
        r
    }
}

/// Blocks for `ε_k = 2^{−k}` with `M_1 = 1` and `M_k = max S_{k−1}`.
pub fn build_thm_a(f: &ApproxFunction, k_max: usize, config: &BlockConfig) -> Result<ThmA> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be ≥ 1".into()));
    }
    let mut blocks: Vec<BlockCertificate> = Vec::new();
    let mut m = BigUint::one();
    for k in 1..=k_max {
        let eps = rat::rat(1, 1i64 << k.min(62));
        let b = block::build_block(f, &eps, &m, config)?;
        m = b.max_s();
        blocks.push(b);
    }
    let eps = blocks.iter().map(|b| b.eps.clone()).collect();
    let achieved = blocks
        .iter()
        .map(|b| b.union_measure.clone().unwrap_or_else(|| b.overlap_sum.clone()))
        .collect();
    Ok(ThmA { blocks, tail: TailCertificate::new(eps, achieved) })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiBlock {
    pub j: usize,
    pub m: BigUint,
    /// `C_j` with `ψ = f` there, sorted.
    pub c: Vec<(BigUint, Rational)>,
    /// `D_j = (max C_j, Q_j]`.
    pub q: BigUint,
}

impl PsiBlock {
    pub fn max_c(&self) -> &BigUint {
        &self.c.last().expect("non-empty block").0
    }

    pub fn mass(&self) -> Rational {
        rat::sum_tree(&self.c.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>())
    }

    pub fn d_len(&self) -> BigUint {
        &self.q - self.max_c()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiFunction {
    pub f: ApproxFunction,
    pub psi_one: Rational,
    pub blocks: Vec<PsiBlock>,
    /// Replacement values on `D_j`, for fault injection.
    pub overrides: BTreeMap<BigUint, Rational>,
}

impl PsiFunction {
    /// `ψ(q)`, `None` off the support.
    pub fn value(&self, q: &BigUint) -> Result<Option<Rational>> {
        if q.is_one() {
            return Ok(Some(self.psi_one.clone()));
        }
        if let Some(v) = self.overrides.get(q) {
            return Ok(Some(v.clone()));
        }
        for b in &self.blocks {
            if let Ok(i) = b.c.binary_search_by(|(x, _)| x.cmp(q)) {
                return Ok(Some(b.c[i].1.clone()));
            }
            if q > b.max_c() && *q <= b.q {
                return Ok(Some(d_value(&self.f, q)?));
            }
        }
        Ok(None)
    }

    /// `|supp ψ ∩ [1, N]|`.
    pub fn support_count(&self, n: &BigUint) -> BigUint {
        if n.is_zero() {
            return BigUint::zero();
        }
        let mut count = BigUint::one();
        for b in &self.blocks {
            count += b.c.iter().filter(|(q, _)| q <= n).count();
            if n > b.max_c() {
                count += n.min(&b.q) - b.max_c();
            }
        }
        count
    }

    pub fn density(&self, n: &BigUint) -> Rational {
        rat::from_biguint(&self.support_count(n)) / rat::from_biguint(n)
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new("psi");
        r.push("f", &self.f).push_rat("psi_1", &self.psi_one).push("j_max", self.blocks.len());
        for b in &self.blocks {
            r.push("block", format!("{} M={} Q={} mass={}", b.j, b.m, b.q, rat::fmt(&b.mass())));
            let entries: Vec<String> = b.c.iter().map(|(q, v)| format!("{q}:{}", rat::fmt(v))).collect();
            r.push("C", format!("{} {}", b.j, entries.join(",")));
        }
        for (q, v) in &self.overrides {
            r.push("override", format!("{q} {}", rat::fmt(v)));
        }
        r
    }

    pub fn from_record(r: &Record) -> Result<Self> {
        let f = ApproxFunction::parse(r.require("f")?)?;
        let psi_one = r.rational("psi_1")?;
        let mut blocks = Vec::new();
        for (line, cline) in r.get_all("block").zip(r.get_all("C")) {
            let mut parts = line.split(' ');
            let j: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad block line {line:?}")))?;
            let mut m = None;
            let mut q = None;
            for p in parts {
                if let Some(v) = p.strip_prefix("M=") {
                    m = Some(cert::parse_biguint(v)?);
                } else if let Some(v) = p.strip_prefix("Q=") {
                    q = Some(cert::parse_biguint(v)?);
                }
            }
            let (_, entries) = cline
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad C line {cline:?}")))?;
            let c = entries
                .split(',')
                .map(|e| {
                    let (q, v) = e.split_once(':').ok_or_else(|| Error::Parse(format!("bad entry {e:?}")))?;
                    Ok((cert::parse_biguint(q)?, rat::parse(v)?))
                })
                .collect::<Result<Vec<_>>>()?;
            if c.is_empty() {
                return Err(Error::DegenerateBlock(j));
            }
            blocks.push(PsiBlock {
                j,
                m: m.ok_or_else(|| Error::Parse("block lacks M".into()))?,
                c,
                q: q.ok_or_else(|| Error::Parse("block lacks Q".into()))?,
            });
        }
        let overrides = r
            .get_all("override")
            .map(|s| {
                let (q, v) = s.split_once(' ').ok_or_else(|| Error::Parse(format!("bad override {s:?}")))?;
                Ok((cert::parse_biguint(q)?, rat::parse(v)?))
            })
            .collect::<Result<_>>()?;
        Ok(Self { f, psi_one, blocks, overrides })
    }
}

/// `min(f(q), q^{−2})`.
fn d_value(f: &ApproxFunction, q: &BigUint) -> Result<Rational> {
    let inv_sq = rat::from_biguint(&(q * q)).recip();
    Ok(rat::min(f.eval(q)?, inv_sq))
}

/// Least `M > after` with `f(M) ≤ target`, by doubling then bisection.
fn first_below(f: &ApproxFunction, after: &BigUint, target: &Rational) -> Result<BigUint> {
    let ok = |x: &BigUint| -> Result<bool> { Ok(f.eval(x)? <= *target) };
    let start = after + 1u32;
    if ok(&start)? {
        return Ok(start);
    }
    let mut lo = start.clone();
    let mut step = BigUint::one();
    let mut hi = loop {
        let cand = &start + &step;
        if ok(&cand)? {
            break cand;
        }
        lo = cand;
        step <<= 1;
        if step.bits() > 4096 {
            return Err(Error::ThresholdUnreachable(format!(
                "f never drops to {} beyond {after}",
                rat::fmt(target)
            )));
        }
    };
    while &hi - &lo > BigUint::one() {
        let mid = (&lo + &hi) >> 1;
        if ok(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Config used for the blocks `C_j`: no pairs, `B = 1`, so `C_j` is a run of
/// consecutive integers above `M_j`.
pub fn thm_c_default_config() -> BlockConfig {
    BlockConfig {
        thresholds: block::Thresholds::Small { x_prime_min: None, b: Some(BigUint::one()) },
        index: block::IndexChoice::Explicit(Vec::new()),
        ..BlockConfig::default()
    }
}

/// `ψ` from blocks `C_j` with `Σ_{C_j} f ∈ [1/2, 1]`, `D_j = (max C_j, Q_j]`
/// and `Q_j = max(j · max C_j, max C_j + 1)`.
pub fn build_thm_c(f: &ApproxFunction, j_max: usize, config: &BlockConfig) -> Result<PsiFunction> {
    if j_max == 0 {
        return Err(Error::InvalidArgument("j_max must be ≥ 1".into()));
    }
    let cfg = BlockConfig {
        mass_rule: MassRule::FunctionSum,
        window: (rat::rat(1, 2), Rational::one()),
        ..config.clone()
    };
    let psi_one = f.eval_u64(1)?;
    let mut blocks: Vec<PsiBlock> = Vec::new();
    let mut q_prev = BigUint::one();
    let mut psi_prev = psi_one.clone();
    for j in 1..=j_max {
        let m = first_below(f, &q_prev, &psi_prev)?;
        let eps = rat::rat(1, 1i64 << j.min(62));
        let b = block::build_block(f, &eps, &m, &cfg)?;
        let s = b.s_values();
        if s.is_empty() {
            return Err(Error::DegenerateBlock(j));
        }
        let c: Vec<(BigUint, Rational)> = s
            .into_iter()
            .map(|q| {
                let v = f.eval(&q)?;
                Ok((q, v))
            })
            .collect::<Result<_>>()?;
        let max_c = c.last().expect("non-empty").0.clone();
        let q = (&max_c * j).max(&max_c + 1u32);
        psi_prev = d_value(f, &q)?;
        q_prev = q.clone();
        blocks.push(PsiBlock { j, m, c, q });
    }
    Ok(PsiFunction { f: f.clone(), psi_one, blocks, overrides: BTreeMap::new() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityReport {
    pub checkpoints: Vec<(BigUint, Rational)>,
}

fn d_points(b: &PsiBlock) -> Result<Vec<BigUint>> {
    let len = b.d_len().to_u64().unwrap_or(u64::MAX);
    if len > D_SCAN_LIMIT {
        return Err(Error::CapExceeded { size: len as usize, cap: D_SCAN_LIMIT as usize });
    }
    Ok((1..=len).map(|t| b.max_c() + t).collect())
}

/// Support in increasing order with the ψ values, `D_j` enumerated in full.
fn support_values(psi: &PsiFunction) -> Result<Vec<(BigUint, Rational)>> {
    let mut out = vec![(BigUint::one(), psi.psi_one.clone())];
    for b in &psi.blocks {
        out.extend(b.c.iter().cloned());
        let pts = d_points(b)?;
        let vals: Vec<(BigUint, Rational)> = pts
            .into_par_iter()
            .map(|q| {
                let v = match psi.overrides.get(&q) {
                    Some(v) => v.clone(),
                    None => d_value(&psi.f, &q)?,
                };
                Ok((q, v))
            })
            .collect::<Result<_>>()?;
        out.extend(vals);
    }
    Ok(out)
}

/// Check `ψ ≤ f`, monotonicity, block masses, the `Σ_D ψ` bound and the
/// densities; failures are reported, not raised.
pub fn verify_psi(
    psi: &PsiFunction,
    f: &ApproxFunction,
    extra_checkpoints: &[BigUint],
) -> Result<(DensityReport, Vec<Check>)> {
    let mut checks = Vec::new();
    let support = support_values(psi)?;

    let le_f: Vec<bool> = support
        .par_iter()
        .map(|(q, v)| Ok(*v <= f.eval(q)?))
        .collect::<Result<_>>()?;
    let bad_f = le_f.iter().filter(|ok| !**ok).count();
    checks.push(Check::new("ψ ≤ f on the support", bad_f == 0, format!("{} points, {bad_f} violations", support.len())));

    let increasing_support = support.windows(2).all(|w| w[0].0 < w[1].0);
    let drops = support.windows(2).filter(|w| w[1].1 > w[0].1).count();
    checks.push(Check::new(
        "ψ non-increasing along its support",
        drops == 0 && increasing_support,
        format!("{drops} increases"),
    ));

    let masses: Vec<Rational> = psi.blocks.par_iter().map(PsiBlock::mass).collect();
    for (b, m) in psi.blocks.iter().zip(masses) {
        checks.push(Check::new(
            &format!("Σ_{{C_{}}} ψ ∈ [1/2, 1]", b.j),
            rat::rat(1, 2) <= m && m <= Rational::one(),
            rat::fmt_brief(&m),
        ));
    }

    let mut d_ok = true;
    for b in &psi.blocks {
        for (q, v) in support.iter().filter(|(q, _)| q > b.max_c() && *q <= b.q) {
            if *v > rat::from_biguint(&(q * q)).recip() {
                d_ok = false;
            }
        }
    }
    // Σ_{q∈(a,b]} q^{−2} ≤ Σ 1/(q(q−1)) = 1/a − 1/b, and these add up to at most 1.
    let telescoped = psi.blocks.iter().fold(Rational::zero(), |acc, b| {
        acc + rat::from_biguint(b.max_c()).recip() - rat::from_biguint(&b.q).recip()
    });
    checks.push(Check::new(
        "Σ_D ψ ≤ Σ_{q≥1} q^{−2}",
        d_ok && telescoped <= Rational::one(),
        format!("ψ ≤ q^−2 termwise; Σ_D ψ ≤ {} ≤ 1 < Σ q^−2", rat::fmt(&telescoped)),
    ));

    let disjoint = psi.blocks.windows(2).all(|w| w[1].c[0].0 > w[0].q)
        && psi.blocks.first().is_none_or(|b| b.c[0].0 > BigUint::one());
    checks.push(Check::new("blocks disjoint and increasing", disjoint, String::new()));

    let mut points: Vec<BigUint> = psi
        .blocks
        .iter()
        .flat_map(|b| [b.max_c().clone(), b.q.clone()])
        .chain(extra_checkpoints.iter().cloned())
        .collect();
    points.sort();
    points.dedup();
    let checkpoints: Vec<(BigUint, Rational)> = points.iter().map(|n| (n.clone(), psi.density(n))).collect();
    for b in &psi.blocks {
        let d = psi.density(&b.q);
        let need = Rational::one() - rat::rat(1, b.j as i64);
        checks.push(Check::new(
            &format!("density at Q_{} ≥ 1 − 1/{}", b.j, b.j),
            d >= need,
            format!("{} at N = {}", rat::fmt(&d), b.q),
        ));
    }
    Ok((DensityReport { checkpoints }, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::Mode;
    use crate::rat::{int, rat};

    fn harmonic() -> ApproxFunction {
        ApproxFunction::parse("power:1:1").unwrap()
    }

    #[test]
    fn thm_c_first_blocks() {
        let psi = build_thm_c(&harmonic(), 2, &thm_c_default_config()).unwrap();
        let c1: Vec<u64> = psi.blocks[0].c.iter().map(|(q, _)| q.to_u64().unwrap()).collect();
        assert_eq!(c1, vec![3, 4]);
        assert_eq!(psi.blocks[0].q, BigUint::from(5u32));
        assert_eq!(psi.blocks[1].m, BigUint::from(25u32));
        assert_eq!(psi.blocks[1].q, psi.blocks[1].max_c() * 2u32);
        assert_eq!(psi.value(&BigUint::from(5u32)).unwrap(), Some(rat(1, 25)));
        assert_eq!(psi.value(&BigUint::from(2u32)).unwrap(), None);
    }

    #[test]
    fn thm_c_verifies_and_tamper_fails() {
        let psi = build_thm_c(&harmonic(), 3, &thm_c_default_config()).unwrap();
        let (report, checks) = verify_psi(&psi, &harmonic(), &[]).unwrap();
        for c in &checks {
            assert!(c.ok, "{c:?}");
        }
        let q2 = psi.blocks[1].q.clone();
        assert!(report.checkpoints.iter().any(|(n, d)| *n == q2 && *d >= rat(1, 2)));

        let mut bad = psi.clone();
        let b = &bad.blocks[1];
        let q = b.max_c() + 2u32;
        let before = d_value(&bad.f, &(b.max_c() + 1u32)).unwrap();
        bad.overrides.insert(q, before * int(2));
        let (_, checks) = verify_psi(&bad, &harmonic(), &[]).unwrap();
        let mono = checks.iter().find(|c| c.name.starts_with("ψ non-increasing")).unwrap();
        assert!(!mono.ok);

        let back = PsiFunction::from_record(&Record::from_text(&bad.to_record().to_text()).unwrap()).unwrap();
        assert_eq!(back, bad);
    }

    #[test]
    fn thm_a_tail() {
        let cfg = BlockConfig::small(vec![1], Mode::Certificate);
        let f = ApproxFunction::parse("scaled:inv_bits:1/8").unwrap();
        let a = build_thm_a(&f, 3, &cfg).unwrap();
        assert_eq!(a.tail.schedule_bound(2), Some(&rat(1, 2)));
        assert!(a.total_mass() >= rat(3, 2));
        assert!(a.blocks.windows(2).all(|w| w[1].min_s() > w[0].max_s()));
        assert!(a.tail.decreasing());
    }
}
