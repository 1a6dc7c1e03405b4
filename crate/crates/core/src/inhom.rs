//! Inhomogeneous blocks: γ-windows, the inclusion and dilation lemmas, towers
//! of nested windows, blocks adapted to a fixed rational γ, and the
//! empirical wild-Liouville threshold.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::approx::ApproxFunction;
use crate::block::{self, BlockCertificate, BlockConfig, MassRule, Mode};
use crate::cert::{Check, Record};
use crate::error::{Error, Result};
use crate::rat::{self, Rational};
use crate::torus::{self, ArcSpec};

/// Default cap on `G_k` during the nesting search.
pub const DEFAULT_G_BUDGET: u32 = 64;
/// Witness enumeration stops beyond this many centers.
pub const WITNESS_LIMIT: u64 = 1_000_000;

/// `⋃_{j∈ℤ} [(j − δ)/b, (j + δ)/b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaWindow {
    pub b: BigUint,
    pub delta: Rational,
}

impl GammaWindow {
    pub fn new(b: BigUint, delta: Rational) -> Result<Self> {
        if b.is_zero() {
            return Err(Error::InvalidModulus(0));
        }
        if delta.is_negative() {
            return Err(Error::InvalidArgument("window δ must be ≥ 0".into()));
        }
        Ok(Self { b, delta })
    }

    /// `‖bγ‖ ≤ δ`; the window is closed.
    pub fn contains(&self, gamma: &Rational) -> bool {
        rat::dist_to_int(&(gamma * rat::from_biguint(&self.b))) <= self.delta
    }

    /// Half-width `δ/b` of each interval.
    pub fn half_width(&self) -> Rational {
        &self.delta / rat::from_biguint(&self.b)
    }

    pub fn center(&self, j: &BigInt) -> Rational {
        Rational::new(j.clone(), BigInt::from(self.b.clone()))
    }

    /// Centers `j/b`, edges `(j ± δ)/b`, and `per_interval` evenly spaced
    /// interior points of each interval with `0 ≤ j < b`.
    pub fn samples(&self, per_interval: u64) -> Vec<Rational> {
        let b = rat::from_biguint(&self.b);
        let mut out = Vec::new();
        let count = self.b.to_u64().unwrap_or(u64::MAX).min(WITNESS_LIMIT);
        let n = per_interval.max(1);
        for j in 0..count {
            let j = rat::int(j);
            for t in 0..=2 * n {
                // Offsets −δ, …, +δ in 2n equal steps.
                let off = &self.delta * (rat::int(t) - rat::int(n)) / rat::int(n);
                out.push(rat::frac(&((&j + off) / &b)));
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// `A_q^γ(ε) ⊆ A_{bq}(2bε)` whenever `‖bγ‖ ≤ bε`.
pub fn inclusion_holds(q: u64, b: u64, gamma: &Rational, eps: &Rational) -> Result<bool> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be ≥ 1".into()));
    }
    if b == 0 {
        return Err(Error::InvalidModulus(0));
    }
    let br = rat::int(b);
    if rat::dist_to_int(&(&br * gamma)) > &br * eps {
        return Err(Error::PreconditionViolated(format!(
            "‖{b}·{}‖ > {b}·{}",
            rat::fmt(gamma),
            rat::fmt(eps)
        )));
    }
    let small = torus::approx_set(q, gamma, eps);
    let big = torus::approx_set(b * q, &Rational::zero(), &(rat::int(2) * &br * eps));
    Ok(torus::subset(&small, &big))
}

/// Requires `f(q) < 1/2` for `q > M` (checked at `M + 1`, `f` non-increasing).
fn check_below_half(f: &ApproxFunction, m: &BigUint) -> Result<()> {
    let v = f.eval(&(m + 1u32))?;
    if v >= rat::rat(1, 2) {
        return Err(Error::HypothesisViolated(format!(
            "f({}) = {} is not below 1/2",
            m + 1u32,
            rat::fmt(&v)
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaSample {
    pub gamma: Rational,
    pub measure: Rational,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InhomBlockCertificate {
    /// Built for `2f` at tolerance `ε/b`, mass rule `Σ 2f ∈ [1, 2]`.
    pub block: BlockCertificate,
    pub f: ApproxFunction,
    pub eps: Rational,
    pub window: GammaWindow,
    /// `Σ_{q∈S} f(q)`.
    pub f_mass: Rational,
    /// `(λ(⋃ A_q(2bf(q))), λ(⋃ A_q(2f(q))))` in empirical mode.
    pub dilation: Option<(Rational, Rational)>,
    pub samples: Vec<GammaSample>,
}

impl InhomBlockCertificate {
    pub fn dilation_ok(&self) -> Option<bool> {
        self.dilation
            .as_ref()
            .map(|(big, small)| *big <= rat::from_biguint(&self.window.b) * small)
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new("inhom");
        r.push("f", &self.f)
            .push_rat("eps_inhom", &self.eps)
            .push("window", format!("{} {}", self.window.b, rat::fmt(&self.window.delta)))
            .push_rat("f_mass", &self.f_mass);
        if let Some((big, small)) = &self.dilation {
            r.push("dilation", format!("{} {}", rat::fmt(big), rat::fmt(small)));
        }
        for s in &self.samples {
            r.push("sample", format!("{} {} {}", rat::fmt(&s.gamma), rat::fmt(&s.measure), s.ok));
        }
        self.block.write_fields(&mut r);
        r
    }

    pub fn from_record(r: &Record) -> Result<Self> {
        let block = BlockCertificate::from_record(r)?;
        let (b, d) = r
            .require("window")?
            .split_once(' ')
            .ok_or_else(|| Error::Parse("window needs `b δ`".into()))?;
        let window = GammaWindow::new(crate::cert::parse_biguint(b)?, rat::parse(d)?)?;
        let dilation = match r.get("dilation") {
            Some(s) => {
                let (a, b) = s.split_once(' ').ok_or_else(|| Error::Parse("dilation".into()))?;
                Some((rat::parse(a)?, rat::parse(b)?))
            }
            None => None,
        };
        let samples = r
            .get_all("sample")
            .map(|s| {
                let parts: Vec<&str> = s.split(' ').collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("bad sample {s:?}")));
                }
                Ok(GammaSample {
                    gamma: rat::parse(parts[0])?,
                    measure: rat::parse(parts[1])?,
                    ok: parts[2] == "true",
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            block,
            f: ApproxFunction::parse(r.require("f")?)?,
            eps: r.rational("eps_inhom")?,
            window,
            f_mass: r.rational("f_mass")?,
            dilation,
            samples,
        })
    }
}

/// Block for `2f` at tolerance `ε/b`; its window is `(b, b·f(max S))`.
/// `config.mass_rule` and `config.window` are overridden.
pub fn build_inhom_block(
    f: &ApproxFunction,
    eps: &Rational,
    m: &BigUint,
    b: &BigUint,
    config: &BlockConfig,
) -> Result<InhomBlockCertificate> {
    if b.is_zero() {
        return Err(Error::InvalidModulus(0));
    }
    check_below_half(f, m)?;
    let two_f = f.clone().scaled(rat::int(2));
    let cfg = BlockConfig {
        mass_rule: MassRule::FunctionSum,
        window: (Rational::one(), rat::int(2)),
        ..config.clone()
    };
    let br = rat::from_biguint(b);
    let block = block::build_block(&two_f, &(eps / &br), m, &cfg)?;
    let delta = &br * f.eval(&block.max_s())?;
    let window = GammaWindow::new(b.clone(), delta)?;
    let f_mass = &block.params.mass / rat::int(2);
    let dilation = match (config.mode, &block.union_measure) {
        (Mode::Empirical, Some(small)) => {
            let s = block.s_values();
            let bf = two_f.clone().scaled(br.clone());
            let big = block::union_measure_exact(&s, &bf, &Rational::zero(), config.interval_budget)?;
            Some((big, small.clone()))
        }
        _ => None,
    };
    Ok(InhomBlockCertificate {
        block,
        f: f.clone(),
        eps: eps.clone(),
        window,
        f_mass,
        dilation,
        samples: Vec::new(),
    })
}

/// Exact `λ(⋃_{q∈S} A_q^γ(f(q)))` for each γ in the window.
pub fn verify_inhom_block(
    cert: &InhomBlockCertificate,
    gammas: &[Rational],
    budget: u128,
) -> Result<Vec<GammaSample>> {
    if let Some(g) = gammas.iter().find(|g| !cert.window.contains(g)) {
        return Err(Error::GammaOutsideWindow(rat::fmt(g)));
    }
    let s = cert.block.s_values();
    let moduli: Vec<u64> = s
        .iter()
        .map(|q| q.to_u64().ok_or(Error::UnionTooLarge { arcs: u128::MAX, budget }))
        .collect::<Result<_>>()?;
    let specs: Vec<ArcSpec> = moduli
        .iter()
        .map(|&q| Ok(ArcSpec { modulus: q, radius: cert.f.eval_u64(q)? }))
        .collect::<Result<_>>()?;
    gammas
        .par_iter()
        .map(|g| {
            let measure = torus::union_measure(&specs, g, budget)?;
            let ok = measure < cert.eps;
            Ok(GammaSample { gamma: g.clone(), measure, ok })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerLevel {
    pub k: usize,
    pub g: u32,
    /// `(p_1 ⋯ p_k)^{G_k}`.
    pub b: BigUint,
    pub window: GammaWindow,
    /// `f(max S_k)`, the half-width of each window interval.
    pub w: Rational,
    pub s_min: BigUint,
    pub s_max: BigUint,
    pub s_len: u64,
    pub f_mass: Rational,
    /// Level-k intervals inside one level-(k−1) interval; `None` at level 1.
    pub nested: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub gamma: Rational,
    /// Membership in each level's window, in order.
    pub memberships: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    pub eps: Vec<Rational>,
    pub levels: Vec<TowerLevel>,
    pub witnesses: Vec<Witness>,
    /// `γ_k = γ_{k−1} + 1/b_k` with the containment flag of each step.
    pub nested_sequence: Vec<(Rational, bool)>,
}

/// Level-k intervals of half-width `w_k` centered at multiples of `1/b_k`
/// that fit inside `[−w_{k−1}, w_{k−1}]`: centers `m/b_k` with
/// `|m|/b_k + w_k ≤ w_{k−1}`, counted exactly.
pub fn nested_count(w_prev: &Rational, w: &Rational, b: &BigUint) -> u64 {
    let room = w_prev - w;
    if room.is_negative() {
        return 0;
    }
    let m = (room * rat::from_biguint(b)).floor().to_integer();
    let m = m.to_u64().unwrap_or(u64::MAX / 2);
    2 * m + 1
}

fn primorial(k: usize) -> BigUint {
    crate::primes::sieve(64 + 16 * k as u64)
        .into_iter()
        .take(k)
        .fold(BigUint::one(), |acc, p| acc * p)
}

/// Tower of inhomogeneous blocks with `b_k = (p_1 ⋯ p_k)^{G_k}`, `ε_k = 2^{−k}`
/// and `M_k = max S_{k−1}`. `G_k` is the least value above `G_{k−1}` for
/// which every level-(k−1) interval holds at least two level-k intervals.
pub fn build_tower(
    f: &ApproxFunction,
    levels: usize,
    config: &BlockConfig,
    g_budget: u32,
) -> Result<Tower> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be ≥ 1".into()));
    }
    let mut out: Vec<TowerLevel> = Vec::new();
    let mut eps_list = Vec::new();
    let mut m = BigUint::zero();
    for k in 1..=levels {
        let eps = rat::rat(1, 1i64 << k.min(62));
        let base = primorial(k);
        let g_prev = out.last().map_or(0, |l| l.g);
        let mut g = g_prev + 1;
        if let Some(prev) = out.last() {
            // Seed with b_k ≥ 1/w_{k−1}.
            let target = prev.w.recip();
            while rat::from_biguint(&base.pow(g)) < target && g < g_budget {
                g += 1;
            }
        }
        let level = loop {
            if g > g_budget {
                return Err(Error::NestingUnreachable {
                    level: k,
                    reason: format!("no G ≤ {g_budget} gives two nested intervals"),
                });
            }
            let b = base.pow(g);
            let cert = build_inhom_block(f, &eps, &m, &b, config)?;
            let w = f.eval(&cert.block.max_s())?;
            let nested = out.last().map(|prev| nested_count(&prev.w, &w, &b));
            if let Some(prev) = out.last() {
                if w >= prev.w {
                    return Err(Error::NestingUnreachable {
                        level: k,
                        reason: format!(
                            "f(max S_{k}) = {} does not drop below f(max S_{}) = {}",
                            rat::fmt(&w),
                            k - 1,
                            rat::fmt(&prev.w)
                        ),
                    });
                }
            }
            if nested.is_none_or(|n| n >= 2) {
                break TowerLevel {
                    k,
                    g,
                    b: b.clone(),
                    window: cert.window.clone(),
                    w,
                    s_min: cert.block.min_s(),
                    s_max: cert.block.max_s(),
                    s_len: cert.block.s_len(),
                    f_mass: cert.f_mass.clone(),
                    nested,
                };
            }
            g += 1;
        };
        m = level.s_max.clone();
        eps_list.push(eps);
        out.push(level);
    }
    let witnesses = tower_witnesses(&out)?;
    let nested_sequence = nested_sequence(&out);
    Ok(Tower { eps: eps_list, levels: out, witnesses, nested_sequence })
}

/// `γ = 0` and the centers of the deepest level reached by nesting inside
/// the level-1 interval around 0 (every other level-1 interval is a
/// translate by a multiple of `1/b_1`).
fn tower_witnesses(levels: &[TowerLevel]) -> Result<Vec<Witness>> {
    let mut centers: Vec<Rational> = vec![Rational::zero()];
    for pair in levels.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let room = &prev.w - &cur.w;
        let m_max = (room * rat::from_biguint(&cur.b)).floor().to_integer().to_u64().unwrap_or(u64::MAX);
        let size = centers.len() as u64 * (2 * m_max + 1);
        if size > WITNESS_LIMIT {
            return Err(Error::CapExceeded { size: size as usize, cap: WITNESS_LIMIT as usize });
        }
        let step = rat::from_biguint(&cur.b).recip();
        let mut next = Vec::with_capacity(size as usize);
        for c in &centers {
            for m in 0..=m_max {
                let off = &step * rat::int(m);
                next.push(c + &off);
                if m > 0 {
                    next.push(c - &off);
                }
            }
        }
        centers = next;
    }
    let mut gammas: Vec<Rational> = centers.iter().map(rat::frac).collect();
    gammas.push(Rational::zero());
    gammas.sort();
    gammas.dedup();
    Ok(gammas
        .into_par_iter()
        .map(|gamma| {
            let memberships = levels.iter().map(|l| l.window.contains(&gamma)).collect();
            Witness { gamma, memberships }
        })
        .collect())
}

fn nested_sequence(levels: &[TowerLevel]) -> Vec<(Rational, bool)> {
    let mut out = Vec::new();
    let mut gamma = Rational::zero();
    let mut prev: Option<&TowerLevel> = None;
    for l in levels {
        let next = match prev {
            None => Rational::zero(),
            Some(_) => &gamma + rat::from_biguint(&l.b).recip(),
        };
        // [next ± w_k] ⊆ [gamma ± w_{k−1}].
        let ok = prev.is_none_or(|p| (&next - &gamma).abs() + &l.w <= p.w);
        gamma = next;
        out.push((gamma.clone(), ok));
        prev = Some(l);
    }
    out
}

impl Tower {
    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        for pair in self.levels.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            checks.push(Check::new(
                &format!("level {} nests in level {}", b.k, a.k),
                b.nested.is_some_and(|n| n >= 2) && nested_count(&a.w, &b.w, &b.b) >= 2,
                format!("{} intervals", b.nested.unwrap_or(0)),
            ));
            checks.push(Check::new(
                &format!("b_{} divides b_{}", a.k, b.k),
                (&b.b % &a.b).is_zero(),
                format!("G = {} → {}", a.g, b.g),
            ));
            checks.push(Check::new(
                &format!("G_{} > G_{}", b.k, a.k),
                b.g > a.g,
                String::new(),
            ));
            checks.push(Check::new(
                &format!("min S_{} > max S_{}", b.k, a.k),
                b.s_min > a.s_max,
                String::new(),
            ));
        }
        for l in &self.levels {
            checks.push(Check::new(
                &format!("Σ f on S_{} ∈ [1/2, 1]", l.k),
                rat::rat(1, 2) <= l.f_mass && l.f_mass <= Rational::one(),
                rat::fmt(&l.f_mass),
            ));
        }
        let members = self.witnesses.iter().filter(|w| w.memberships.iter().all(|m| *m)).count();
        checks.push(Check::new(
            "witnesses lie in every window",
            members == self.witnesses.len(),
            format!("{members}/{} witnesses", self.witnesses.len()),
        ));
        checks.push(Check::new(
            "γ = 0 lies in every window",
            self.levels.iter().all(|l| l.window.contains(&Rational::zero())),
            String::new(),
        ));
        checks.push(Check::new(
            "nested sequence contained",
            self.nested_sequence.iter().all(|(_, ok)| *ok),
            self.nested_sequence.iter().map(|(g, _)| rat::fmt(g)).collect::<Vec<_>>().join(" "),
        ));
        checks
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new("tower");
        r.push("levels", self.levels.len());
        for (l, e) in self.levels.iter().zip(&self.eps) {
            r.push(
                "level",
                format!(
                    "{} G={} b={} delta={} w={} eps={} S_min={} S_max={} S_size={} f_mass={} nested={}",
                    l.k,
                    l.g,
                    l.b,
                    rat::fmt(&l.window.delta),
                    rat::fmt(&l.w),
                    rat::fmt(e),
                    l.s_min,
                    l.s_max,
                    l.s_len,
                    rat::fmt(&l.f_mass),
                    l.nested.map_or("-".into(), |n| n.to_string())
                ),
            );
        }
        for (g, ok) in &self.nested_sequence {
            r.push("gamma_seq", format!("{} {ok}", rat::fmt(g)));
        }
        r.push("witness_count", self.witnesses.len());
        for w in &self.witnesses {
            let flags: Vec<&str> = w.memberships.iter().map(|m| if *m { "1" } else { "0" }).collect();
            r.push("witness", format!("{} {}", rat::fmt(&w.gamma), flags.join("")));
        }
        r.push("note", "membership certified to the finite depth built; the limiting set needs all levels");
        r
    }
}

/// The γ for a γ-adapted union: exact rational, or explicit approximations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GammaInput {
    Rational(Rational),
    /// `(q_n, upper bound on ‖q_n γ‖)`.
    Approximations(Vec<(BigUint, Rational)>),
}

impl GammaInput {
    /// Accepts `a/c` or an integer; decimals are rejected since they do not
    /// pin down an irrational γ.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.contains('.') || t.contains('e') || t.chars().any(|c| c.is_alphabetic()) {
            return Err(Error::UnsupportedInput(format!(
                "γ = {t:?}: give a rational a/c or an explicit approximation sequence"
            )));
        }
        Ok(GammaInput::Rational(rat::parse(t)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SGammaLevel {
    pub n: usize,
    pub q: BigUint,
    /// Upper bound on `‖q_n γ‖`.
    pub dist: Rational,
    pub window: GammaWindow,
    pub s_min: BigUint,
    pub s_max: BigUint,
    pub s_len: u64,
    pub f_mass: Rational,
    pub spacing_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SGamma {
    pub levels: Vec<SGammaLevel>,
    /// `Σ_n 1/q_n`.
    pub tail: Rational,
}

impl SGamma {
    pub fn total_f_mass(&self) -> Rational {
        self.levels.iter().fold(Rational::zero(), |a, l| a + &l.f_mass)
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        for l in &self.levels {
            checks.push(Check::new(
                &format!("‖q_{0} γ‖ ≤ q_{0} f(max S_{0})", l.n),
                l.dist <= l.window.delta,
                format!("{} ≤ {}", rat::fmt(&l.dist), rat::fmt(&l.window.delta)),
            ));
            checks.push(Check::new(
                &format!("spacing 1/q_{} below the previous arc measure", l.n),
                l.spacing_ok,
                format!("q = {}", l.q),
            ));
            checks.push(Check::new(
                &format!("Σ f on S_{} ∈ [1/2, 1]", l.n),
                rat::rat(1, 2) <= l.f_mass && l.f_mass <= Rational::one(),
                rat::fmt(&l.f_mass),
            ));
        }
        for pair in self.levels.windows(2) {
            checks.push(Check::new(
                &format!("min S_{} > max S_{}", pair[1].n, pair[0].n),
                pair[1].s_min > pair[0].s_max,
                String::new(),
            ));
        }
        let n = self.levels.len() as u64;
        checks.push(Check::new(
            "Σ f on S ≥ n/2",
            self.total_f_mass() >= rat::rat(n as i64, 2),
            rat::fmt(&self.total_f_mass()),
        ));
        checks
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new("sgamma");
        for l in &self.levels {
            r.push(
                "level",
                format!(
                    "{} q={} dist={} delta={} S_min={} S_max={} S_size={} f_mass={} spacing={}",
                    l.n,
                    l.q,
                    rat::fmt(&l.dist),
                    rat::fmt(&l.window.delta),
                    l.s_min,
                    l.s_max,
                    l.s_len,
                    rat::fmt(&l.f_mass),
                    l.spacing_ok
                ),
            );
        }
        r.push_rat("tail", &self.tail);
        r
    }
}

/// Blocks `S_n` for `b = q_n`, `ε = 1/q_n`, stacked above each other.
/// For rational `γ = a/c`, `q_n = c·2^{e_n}` with `e_n ≥ n` the least
/// exponent meeting `1/q_n < 2f(max S_{n−1})`, so `‖q_n γ‖ = 0`.
pub fn build_s_gamma(
    f: &ApproxFunction,
    gamma: &GammaInput,
    n_max: usize,
    config: &BlockConfig,
) -> Result<SGamma> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be ≥ 1".into()));
    }
    let mut levels: Vec<SGammaLevel> = Vec::new();
    let mut m = BigUint::zero();
    let mut tail = Rational::zero();
    let mut exp = 0u32;
    for n in 1..=n_max {
        let prev_measure = match levels.last() {
            Some(l) => rat::min(Rational::one(), rat::int(2) * f.eval(&l.s_max)?),
            None => Rational::one(),
        };
        let (q, dist) = match gamma {
            GammaInput::Rational(g) => {
                let c = BigUint::try_from(g.denom().clone()).expect("positive denominator");
                exp = exp.max(n as u32);
                while levels.last().is_some() && rat::from_biguint(&(&c << exp)).recip() >= prev_measure {
                    exp += 1;
                }
                let q = &c << exp;
                exp += 1;
                let dist = rat::dist_to_int(&(rat::from_biguint(&q) * g));
                (q, dist)
            }
            GammaInput::Approximations(seq) => {
                let (q, d) = seq.get(n - 1).cloned().ok_or_else(|| {
                    Error::UnsupportedInput(format!("approximation sequence has no q_{n}"))
                })?;
                (q, d)
            }
        };
        if q.is_zero() {
            return Err(Error::InvalidModulus(0));
        }
        let spacing_ok = levels.is_empty() || rat::from_biguint(&q).recip() < prev_measure;
        let qr = rat::from_biguint(&q);
        let cert = build_inhom_block(f, &qr.recip(), &m, &q, config)?;
        tail += qr.recip();
        m = cert.block.max_s();
        levels.push(SGammaLevel {
            n,
            q,
            dist,
            window: cert.window.clone(),
            s_min: cert.block.min_s(),
            s_max: cert.block.max_s(),
            s_len: cert.block.s_len(),
            f_mass: cert.f_mass,
            spacing_ok,
        });
    }
    Ok(SGamma { levels, tail })
}

/// Step table `1/ε ↦ max S` from recorded builds, made non-decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EmpiricalH {
    table: BTreeMap<Rational, BigUint>,
}

impl EmpiricalH {
    /// Entries `(1/ε, max S)`; values are raised to a running maximum.
    pub fn from_runs<I: IntoIterator<Item = (Rational, BigUint)>>(runs: I) -> Self {
        let mut table: BTreeMap<Rational, BigUint> = BTreeMap::new();
        for (k, v) in runs {
            let e = table.entry(k).or_default();
            if v > *e {
                *e = v;
            }
        }
        let mut running = BigUint::zero();
        for v in table.values_mut() {
            if *v < running {
                *v = running.clone();
            }
            running = v.clone();
        }
        Self { table }
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// `(H(x), extrapolated)`: the value at the least key `≥ x`, or the last
    /// value past the end of the table.
    pub fn eval(&self, x: &Rational) -> Result<(BigUint, bool)> {
        if let Some((_, v)) = self.table.range(x.clone()..).next() {
            return Ok((v.clone(), false));
        }
        self.table
            .values()
            .next_back()
            .map(|v| (v.clone(), true))
            .ok_or(Error::EmptyTable)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Rational, &BigUint)> {
        self.table.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdRow {
    pub q: u64,
    pub h: BigUint,
    /// `1/f(H(q²))`; `None` when `f(H(q²)) = 0`.
    pub l: Option<Rational>,
    pub extrapolated: bool,
}

/// `L(q) = 1/f(H(q²))` along a grid, plus whether it is non-decreasing.
pub fn wild_threshold(f: &ApproxFunction, h: &EmpiricalH, grid: &[u64]) -> Result<(Vec<ThresholdRow>, bool)> {
    if h.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &q in grid {
        let (hv, extrapolated) = h.eval(&rat::int(q).pow(2))?;
        let fv = f.eval(&hv.clone().max(BigUint::one()))?;
        let l = (!fv.is_zero()).then(|| fv.recip());
        rows.push(ThresholdRow { q, h: hv, l, extrapolated });
    }
    let mut sorted: Vec<&ThresholdRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.q);
    let monotone = sorted.windows(2).all(|w| match (&w[0].l, &w[1].l) {
        (Some(a), Some(b)) => a <= b,
        (_, None) => true,
        (None, Some(_)) => false,
    });
    Ok((rows, monotone))
}

/// `a | b`.
pub fn divides(a: &BigUint, b: &BigUint) -> bool {
    !a.is_zero() && b.is_multiple_of(a)
}
