//! Counterexample blocks `S = X·Y`: a finite set of moduli whose arc mass
//! lies in a fixed window while the overlap sum bounding `λ(⋃_{q∈S} A_q)`
//! is small.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::approx::ApproxFunction;
use crate::cert::{self, Check, Record};
use crate::error::{Error, Result};
use crate::primes::{self, PrimePairTable, YSystem};
use crate::rat::{self, Rational};
use crate::torus::{self, ArcSpec};

pub const DEFAULT_TERM_CAP: u64 = 10_000_000;
pub const DEFAULT_INTERVAL_BUDGET: u128 = 50_000_000;
pub const DEFAULT_K_MAX: u32 = 12;
/// Certificates list `S` explicitly up to this size.
pub const S_LISTING_LIMIT: usize = 100_000;
/// Doubling search for `x'_min` gives up beyond this many bits.
const THRESHOLD_MAX_BITS: u64 = 8192;
const BATCH: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Overlap sum only; `certified` iff it is below `ε`.
    Certificate,
    /// Additionally compute the exact union measure.
    Empirical,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Certificate => "certificate",
            Mode::Empirical => "empirical",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certificate" => Ok(Mode::Certificate),
            "empirical" => Ok(Mode::Empirical),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// What the mass window constrains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassRule {
    /// `Σ_{q∈S} λ(A_q) = Σ min(1, 2f(q))`.
    ArcMeasure,
    /// `Σ_{q∈S} f(q)`.
    FunctionSum,
}

impl fmt::Display for MassRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassRule::ArcMeasure => "arc_measure",
            MassRule::FunctionSum => "function_sum",
        })
    }
}

impl std::str::FromStr for MassRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arc_measure" => Ok(MassRule::ArcMeasure),
            "function_sum" => Ok(MassRule::FunctionSum),
            _ => Err(Error::Parse(format!("unknown mass rule {s:?}"))),
        }
    }
}

impl MassRule {
    fn term(self, v: &Rational) -> Rational {
        match self {
            MassRule::ArcMeasure => rat::min(Rational::one(), v * rat::int(2)),
            MassRule::FunctionSum => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BChoice {
    Smallest,
    /// `B = P − 1`, when it clears `x'_min`.
    PMinusOne,
}

/// How `x'_min` and `B` are chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Thresholds {
    /// `x'_min` = least `x > M` with `2P f(x y_min) ≤ δ/2`.
    Rigorous,
    /// `x'_min = M + 1` unless overridden; `B` optionally fixed.
    Small { x_prime_min: Option<BigUint>, b: Option<BigUint> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexChoice {
    Explicit(Vec<usize>),
    /// Search `K` for a `δ`-good `I_K`.
    FromDelta,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockConfig {
    pub mode: Mode,
    pub thresholds: Thresholds,
    pub index: IndexChoice,
    pub mass_rule: MassRule,
    pub window: (Rational, Rational),
    pub b_choice: BChoice,
    pub y_cap: usize,
    pub term_cap: u64,
    pub interval_budget: u128,
    pub k_max: u32,
    pub j_min: u32,
    pub gap_coeff: u64,
    pub mitm_cap: usize,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Certificate,
            thresholds: Thresholds::Rigorous,
            index: IndexChoice::FromDelta,
            mass_rule: MassRule::ArcMeasure,
            window: (Rational::one(), rat::int(2)),
            b_choice: BChoice::Smallest,
            y_cap: primes::DEFAULT_Y_CAP,
            term_cap: DEFAULT_TERM_CAP,
            interval_budget: DEFAULT_INTERVAL_BUDGET,
            k_max: DEFAULT_K_MAX,
            j_min: primes::DEFAULT_J_MIN,
            gap_coeff: primes::DEFAULT_GAP_COEFF,
            mitm_cap: primes::DEFAULT_MITM_CAP,
        }
    }
}

impl BlockConfig {
    /// Small thresholds with an explicit index set and the given mode.
    pub fn small(index_set: Vec<usize>, mode: Mode) -> Self {
        Self {
            mode,
            thresholds: Thresholds::Small { x_prime_min: None, b: None },
            index: IndexChoice::Explicit(index_set),
            ..Self::default()
        }
    }

    /// Apply `DSLAB_INTERVAL_BUDGET`, `DSLAB_TERM_CAP`, `DSLAB_K_MAX`.
    pub fn with_env_caps(mut self) -> Result<Self> {
        fn var<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
            match std::env::var(name) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("{name}={v:?}"))),
                Err(_) => Ok(None),
            }
        }
        if let Some(v) = var("DSLAB_INTERVAL_BUDGET")? {
            self.interval_budget = v;
        }
        if let Some(v) = var("DSLAB_TERM_CAP")? {
            self.term_cap = v;
        }
        if let Some(v) = var("DSLAB_K_MAX")? {
            self.k_max = v;
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parameters {
    pub x_prime_min: BigUint,
    pub b: BigUint,
    pub x_min: BigUint,
    pub x_max: BigUint,
    /// `|X|`.
    pub x_count: u64,
    pub mass: Rational,
    pub overlap_sum: Rational,
}

/// Least `x > M` with `2P f(x y_min) ≤ δ/2`, by doubling then bisection.
pub fn rigorous_threshold(
    ys: &YSystem,
    delta: &Rational,
    f: &ApproxFunction,
    m: &BigUint,
) -> Result<BigUint> {
    let p = rat::from_biguint(&ys.modulus);
    let target = delta / rat::int(2);
    let ok = |x: &BigUint| -> Result<bool> {
        Ok(rat::int(2) * &p * f.eval(&(x * ys.y_min()))? <= target)
    };
    let lo0 = m + 1u32;
    if ok(&lo0)? {
        return Ok(lo0);
    }
    let mut lo = lo0.clone();
    let mut step = BigUint::one();
    let mut hi = loop {
        let cand = &lo0 + &step;
        if ok(&cand)? {
            break cand;
        }
        lo = cand;
        step <<= 1;
        if step.bits() > THRESHOLD_MAX_BITS {
            return Err(Error::ThresholdUnreachable(format!(
                "2P f(x y_min) ≤ δ/2 fails up to x = 2^{THRESHOLD_MAX_BITS}"
            )));
        }
    };
    // Invariant: !ok(lo), ok(hi).
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

/// Least `B ≥ 1` coprime to `P` with `BP + 1 ≥ x'_min`.
pub fn smallest_b(p: &BigUint, x_prime_min: &BigUint) -> BigUint {
    let need = if *x_prime_min > BigUint::one() {
        (x_prime_min - 1u32).div_ceil(p)
    } else {
        BigUint::zero()
    };
    let mut b = need.max(BigUint::one());
    while !b.gcd(p).is_one() {
        b += 1u32;
    }
    b
}

/// Least `x ≥ from` with `x ≡ 1 (mod step)`.
fn first_in_progression(from: &BigUint, step: &BigUint) -> BigUint {
    if *from <= BigUint::one() {
        return BigUint::one();
    }
    let k = (from - 1u32).div_ceil(step);
    k * step + 1u32
}

/// `(mass, overlap)` contributions of one `x`.
fn x_terms(x: &BigUint, ys: &YSystem, f: &ApproxFunction, rule: MassRule) -> Result<(Rational, Rational)> {
    let mut mass = Rational::zero();
    let mut overlap = Rational::zero();
    for e in &ys.entries {
        let v = f.eval(&(x * &e.y))?;
        mass += rule.term(&v);
        overlap += &e.g * &v;
    }
    Ok((mass, overlap * rat::int(2)))
}

fn ln_big(x: &BigUint) -> f64 {
    let shift = x.bits().saturating_sub(64);
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Floating-point run over the whole term budget: rejects configurations
/// whose mass clearly never reaches `lo`, before any exact summation.
fn prescan_mass(
    ys: &YSystem,
    f: &ApproxFunction,
    config: &BlockConfig,
    x_min: &BigUint,
    step: &BigUint,
    lo: &f64,
) -> Result<()> {
    let target = lo * (1.0 - 1e-6);
    let ln_ys: Vec<f64> = ys.entries.iter().map(|e| ln_big(&e.y)).collect();
    let ln_step = ln_big(step);
    let offset = (ln_big(x_min) - ln_step).exp();
    let mut mass = 0.0f64;
    for k in 0..config.term_cap {
        let ln_x = if k == 0 { ln_big(x_min) } else { ln_step + (k as f64 + offset).ln() };
        for ln_y in &ln_ys {
            let v = f.estimate_from_ln(ln_x + ln_y);
            mass += match config.mass_rule {
                MassRule::ArcMeasure => (2.0 * v).min(1.0),
                MassRule::FunctionSum => v,
            };
        }
        if mass >= target {
            return Ok(());
        }
    }
    Err(Error::MassUnreachable(format!(
        "term cap {} reached with mass ≈ {mass:.6}",
        config.term_cap
    )))
}

/// Steps (1)–(3): `x'_min`, `B`, `x_min`, and `x_max` reached by adding
/// progression terms until the mass enters the window.
pub fn choose_parameters(
    ys: &YSystem,
    delta: &Rational,
    f: &ApproxFunction,
    m: &BigUint,
    config: &BlockConfig,
) -> Result<Parameters> {
    let p = &ys.modulus;
    let (x_prime_min, b, x_min) = match &config.thresholds {
        Thresholds::Rigorous => {
            let xp = rigorous_threshold(ys, delta, f, m)?;
            let b = match config.b_choice {
                BChoice::Smallest => smallest_b(p, &xp),
                BChoice::PMinusOne => {
                    if *p <= BigUint::one() {
                        return Err(Error::ThresholdUnreachable("B = P − 1 needs P > 1".into()));
                    }
                    let b = p - 1u32;
                    if &b * p + 1u32 < xp {
                        return Err(Error::ThresholdUnreachable(format!(
                            "B = P − 1 gives BP + 1 below x'_min = {xp}"
                        )));
                    }
                    b
                }
            };
            let x_min = &b * p + 1u32;
            (xp, b, x_min)
        }
        Thresholds::Small { x_prime_min, b } => {
            let xp = x_prime_min.clone().unwrap_or_else(|| m + 1u32);
            let b = match b {
                Some(b) if b.is_zero() => return Err(Error::InvalidArgument("B must be positive".into())),
                Some(b) => b.clone(),
                None => BigUint::one(),
            };
            let x_min = first_in_progression(&xp, &(&b * p));
            (xp, b, x_min)
        }
    };
    let step = &b * p;
    let (lo, hi) = &config.window;
    prescan_mass(ys, f, config, &x_min, &step, &rat::approx_f64(lo))?;
    let mut mass = Rational::zero();
    let mut overlap = Rational::zero();
    let mut count: u64 = 0;
    while count < config.term_cap {
        let n = (config.term_cap - count).min(BATCH as u64);
        let xs: Vec<BigUint> = (0..n).map(|t| &x_min + &step * (count + t)).collect();
        let terms: Vec<(Rational, Rational)> = xs
            .par_iter()
            .map(|x| x_terms(x, ys, f, config.mass_rule))
            .collect::<Result<_>>()?;
        let batch_mass = rat::sum_tree(&terms.iter().map(|t| t.0.clone()).collect::<Vec<_>>());
        if &mass + &batch_mass < *lo && terms.iter().all(|t| !t.0.is_zero()) {
            mass += batch_mass;
            overlap += rat::sum_tree(&terms.iter().map(|t| t.1.clone()).collect::<Vec<_>>());
            count += n;
            continue;
        }
        for (x, (dm, dov)) in xs.into_iter().zip(terms) {
            if dm.is_zero() {
                return Err(Error::MassUnreachable(format!(
                    "f vanishes on S from x = {x} on; mass stalls at {}",
                    rat::fmt(&mass)
                )));
            }
            mass += dm;
            overlap += dov;
            count += 1;
            if mass >= *lo {
                if mass > *hi {
                    return Err(Error::MassUnreachable(format!(
                        "mass jumps past the window to {} at x = {x}",
                        rat::fmt(&mass)
                    )));
                }
                return Ok(Parameters {
                    x_prime_min,
                    b,
                    x_min,
                    x_max: x,
                    x_count: count,
                    mass,
                    overlap_sum: overlap,
                });
            }
        }
    }
    Err(Error::MassUnreachable(format!(
        "term cap {} reached with mass {}",
        config.term_cap,
        rat::fmt(&mass)
    )))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCertificate {
    pub function: ApproxFunction,
    pub eps: Rational,
    pub delta: Rational,
    pub m: BigUint,
    pub ys: YSystem,
    pub params: Parameters,
    pub mass_rule: MassRule,
    pub window: (Rational, Rational),
    pub mode: Mode,
    pub rigorous: bool,
    /// `2 Σ_x Σ_y g_I(y) f(xy)`.
    pub overlap_sum: Rational,
    pub union_measure: Option<Rational>,
    pub input_hash: String,
}

impl BlockCertificate {
    pub fn step(&self) -> BigUint {
        &self.params.b * &self.ys.modulus
    }

    pub fn xs(&self) -> impl Iterator<Item = BigUint> + '_ {
        let step = self.step();
        (0..self.params.x_count).map(move |t| &self.params.x_min + &step * t)
    }

    /// `S = X·Y`, sorted.
    pub fn s_values(&self) -> Vec<BigUint> {
        let mut s: Vec<BigUint> = self
            .xs()
            .flat_map(|x| self.ys.ys().map(move |y| &x * y).collect::<Vec<_>>())
            .collect();
        s.sort();
        s
    }

    pub fn s_len(&self) -> u64 {
        self.params.x_count * self.ys.len() as u64
    }

    pub fn min_s(&self) -> BigUint {
        &self.params.x_min * self.ys.y_min()
    }

    pub fn max_s(&self) -> BigUint {
        &self.params.x_max * self.ys.y_max()
    }

    /// Overlap sum below `ε`.
    pub fn certified(&self) -> bool {
        self.overlap_sum < self.eps
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new("block");
        self.write_fields(&mut r);
        r
    }

    pub(crate) fn write_fields(&self, r: &mut Record) {
        r.push("input_hash", &self.input_hash)
            .push("function", &self.function)
            .push_rat("eps", &self.eps)
            .push_rat("delta", &self.delta)
            .push("M", &self.m)
            .push("mode", self.mode)
            .push("thresholds", if self.rigorous { "rigorous" } else { "small" })
            .push("I", join(&self.ys.index_set))
            .push("P", &self.ys.modulus)
            .push("Y_size", self.ys.len())
            .push("y_min", self.ys.y_min())
            .push("y_max", self.ys.y_max())
            .push("x_prime_min", &self.params.x_prime_min)
            .push("B", &self.params.b)
            .push("x_min", &self.params.x_min)
            .push("x_max", &self.params.x_max)
            .push("X_count", self.params.x_count)
            .push("S_size", self.s_len())
            .push("S_min", self.min_s())
            .push("S_max", self.max_s())
            .push("mass_rule", self.mass_rule)
            .push_rat("window_lo", &self.window.0)
            .push_rat("window_hi", &self.window.1)
            .push_rat("mass", &self.params.mass)
            .push_rat("overlap_sum", &self.overlap_sum)
            .push("certified", self.certified());
        match &self.union_measure {
            Some(u) => r.push_rat("union_measure", u),
            None => r.push("union_measure", "-"),
        };
        if self.s_len() as usize <= S_LISTING_LIMIT {
            r.push("S", self.s_values().iter().map(|q| q.to_string()).collect::<Vec<_>>().join(","));
        } else {
            r.push("S", "elided");
        }
    }

    pub fn from_record(r: &Record) -> Result<Self> {
        let function = ApproxFunction::parse(r.require("function")?)?;
        let index_set = parse_index_list(r.require("I")?)?;
        let table = PrimePairTable::for_pairs(index_set.iter().copied().max().unwrap_or(0));
        let ys = table.enumerate_y(&index_set, index_set.len().max(1))?;
        if ys.modulus != r.biguint("P")? {
            return Err(Error::Parse("P does not match I".into()));
        }
        let params = Parameters {
            x_prime_min: r.biguint("x_prime_min")?,
            b: r.biguint("B")?,
            x_min: r.biguint("x_min")?,
            x_max: r.biguint("x_max")?,
            x_count: r
                .require("X_count")?
                .parse()
                .map_err(|_| Error::Parse("X_count".into()))?,
            mass: r.rational("mass")?,
            overlap_sum: r.rational("overlap_sum")?,
        };
        let union_measure = match r.require("union_measure")? {
            "-" => None,
            s => Some(rat::parse(s)?),
        };
        Ok(Self {
            function,
            eps: r.rational("eps")?,
            delta: r.rational("delta")?,
            m: r.biguint("M")?,
            params: params.clone(),
            ys,
            mass_rule: r.require("mass_rule")?.parse()?,
            window: (r.rational("window_lo")?, r.rational("window_hi")?),
            mode: r.require("mode")?.parse()?,
            rigorous: r.require("thresholds")? == "rigorous",
            overlap_sum: params.overlap_sum,
            union_measure,
            input_hash: r.require("input_hash")?.to_string(),
        })
    }
}

pub(crate) fn join<T: ToString>(v: &[T]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }
}

pub fn parse_index_list(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() || s == "-" || s == "{}" {
        return Ok(Vec::new());
    }
    s.trim_matches(|c| c == '{' || c == '}')
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad index {t:?}"))))
        .collect()
}

fn input_description(f: &ApproxFunction, eps: &Rational, m: &BigUint, config: &BlockConfig) -> String {
    format!("block f={f} eps={} M={m} config={config:?}", rat::fmt(eps))
}

/// Steps (1)–(4): choose `I` (or take it), thresholds, and `X`, and certify.
pub fn build_block(
    f: &ApproxFunction,
    eps: &Rational,
    m: &BigUint,
    config: &BlockConfig,
) -> Result<BlockCertificate> {
    if !eps.is_positive() || *eps >= Rational::one() {
        return Err(Error::InvalidArgument(format!("ε = {} outside (0,1)", rat::fmt(eps))));
    }
    let delta = eps / rat::int(12);
    let index_set = match &config.index {
        IndexChoice::Explicit(i) => i.clone(),
        IndexChoice::FromDelta => {
            let table = PrimePairTable::for_levels(config.k_max);
            primes::find_good_index_set(&table, &delta, config.j_min, config.k_max, config.gap_coeff, config.mitm_cap)?
                .index_set
        }
    };
    let table = PrimePairTable::for_pairs(index_set.iter().copied().max().unwrap_or(0));
    let ys = table.enumerate_y(&index_set, config.y_cap)?;
    let params = choose_parameters(&ys, &delta, f, m, config)?;
    let mut cert = BlockCertificate {
        function: f.clone(),
        eps: eps.clone(),
        delta,
        m: m.clone(),
        ys,
        overlap_sum: params.overlap_sum.clone(),
        params,
        mass_rule: config.mass_rule,
        window: config.window.clone(),
        mode: config.mode,
        rigorous: config.thresholds == Thresholds::Rigorous,
        union_measure: None,
        input_hash: cert::content_hash(&input_description(f, eps, m, config)),
    };
    if config.mode == Mode::Empirical {
        let s = cert.s_values();
        cert.union_measure = Some(union_measure_exact(&s, f, &Rational::zero(), config.interval_budget)?);
    }
    Ok(cert)
}

fn to_moduli(s: &[BigUint], budget: u128) -> Result<Vec<u64>> {
    s.iter()
        .map(|q| {
            q.to_u64().ok_or(Error::UnionTooLarge { arcs: u128::MAX, budget })
        })
        .collect()
}

/// Exact `λ(⋃_{q∈S} A_q^γ(f(q)))`.
pub fn union_measure_exact(
    s: &[BigUint],
    f: &ApproxFunction,
    gamma: &Rational,
    budget: u128,
) -> Result<Rational> {
    let qs = to_moduli(s, budget)?;
    let specs: Vec<ArcSpec> = qs
        .iter()
        .map(|&q| Ok(ArcSpec { modulus: q, radius: f.eval_u64(q)? }))
        .collect::<Result<_>>()?;
    torus::union_measure(&specs, gamma, budget)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapCheck {
    pub bound: Rational,
    pub exact: Rational,
    pub ok: bool,
}

/// `λ(⋃_y A_{xy}(f(xy))) ≤ 2 Σ_y g_I(y) f(xy)` for one `x` coprime to `P`.
pub fn overlap_verify(x: &BigUint, ys: &YSystem, f: &ApproxFunction, budget: u128) -> Result<OverlapCheck> {
    if !ys.is_admissible(x) {
        return Err(Error::HypothesisViolated(format!(
            "gcd({x}, {}) = {}",
            ys.modulus,
            x.gcd(&ys.modulus)
        )));
    }
    overlap_explore(x, ys, f, budget)
}

/// [`overlap_verify`] without the coprimality hypothesis.
pub fn overlap_explore(x: &BigUint, ys: &YSystem, f: &ApproxFunction, budget: u128) -> Result<OverlapCheck> {
    let (_, bound) = x_terms(x, ys, f, MassRule::FunctionSum)?;
    let s: Vec<BigUint> = ys.ys().map(|y| x * y).collect();
    let exact = union_measure_exact(&s, f, &Rational::zero(), budget)?;
    let ok = exact <= bound;
    Ok(OverlapCheck { bound, exact, ok })
}

/// Recompute everything recorded in a certificate.
pub fn verify_block(cert: &BlockCertificate, budget: u128) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let step = cert.step();
    let residue_ok = &cert.params.x_min % &step == BigUint::one() % &step;
    checks.push(Check::new(
        "progression x ≡ 1 mod BP",
        residue_ok && (&cert.params.x_min + &step * (cert.params.x_count - 1)) == cert.params.x_max,
        format!("x_min = {}, step = {}, |X| = {}", cert.params.x_min, step, cert.params.x_count),
    ));
    let xs: Vec<BigUint> = cert.xs().collect();
    let coprime = xs.iter().all(|x| cert.ys.is_admissible(x));
    checks.push(Check::new("gcd(x, P) = 1 on X", coprime, format!("P = {}", cert.ys.modulus)));
    checks.push(Check::new(
        "S above M",
        cert.min_s() > cert.m,
        format!("min S = {}, M = {}", cert.min_s(), cert.m),
    ));
    let s = cert.s_values();
    let distinct = s.windows(2).all(|w| w[0] < w[1]);
    checks.push(Check::new(
        "|S| = |X|·|Y|, products distinct",
        distinct && s.len() as u64 == cert.s_len(),
        format!("|S| = {}", s.len()),
    ));
    let terms: Vec<(Rational, Rational)> = xs
        .par_iter()
        .map(|x| x_terms(x, &cert.ys, &cert.function, cert.mass_rule))
        .collect::<Result<_>>()?;
    let (masses, overlaps): (Vec<Rational>, Vec<Rational>) = terms.into_iter().unzip();
    let (mass, overlap) = (rat::sum_tree(&masses), rat::sum_tree(&overlaps));
    checks.push(Check::new(
        "mass recomputed",
        mass == cert.params.mass,
        rat::fmt(&mass),
    ));
    checks.push(Check::new(
        "mass in window",
        cert.window.0 <= mass && mass <= cert.window.1,
        format!("{} ∈ [{}, {}]", rat::fmt(&mass), rat::fmt(&cert.window.0), rat::fmt(&cert.window.1)),
    ));
    checks.push(Check::new(
        "overlap sum recomputed",
        overlap == cert.overlap_sum,
        rat::fmt(&overlap),
    ));
    checks.push(Check::new(
        "overlap sum < ε",
        overlap < cert.eps,
        format!("{} vs ε = {}", rat::fmt(&overlap), rat::fmt(&cert.eps)),
    ));
    if let Some(recorded) = &cert.union_measure {
        let u = union_measure_exact(&s, &cert.function, &Rational::zero(), budget)?;
        checks.push(Check::new("union measure recomputed", u == *recorded, rat::fmt(&u)));
        checks.push(Check::new(
            "union measure ≤ overlap sum",
            u <= overlap,
            format!("{} ≤ {}", rat::fmt(&u), rat::fmt(&overlap)),
        ));
        checks.push(Check::new(
            "union measure < ε",
            u < cert.eps,
            format!("{} vs ε = {}", rat::fmt(&u), rat::fmt(&cert.eps)),
        ));
    }
    Ok(checks)
}
