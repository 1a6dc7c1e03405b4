//! Approximation functions `f, ψ` and the Khintchine / Koukoulopoulos–Maynard
//! diagnostic series.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rat::{self, Rational};

/// Default working precision (significant bits) for the f_k family.
pub const FK_DEFAULT_PREC: u32 = 96;

/// Built-in non-increasing families.
///
/// Text grammar:
/// - `inv_bits` — `1 / bitlen(q)`
/// - `power:c:s` — `c / q^s`, `c ≥ 0` rational, `s ≥ 0` (`s = 0` is the constant `c`)
/// - `fk:k` or `fk:k:prec` — `1 / (q · log q ⋯ log^(k) q)`, certified upper bound
/// - `scaled:<inner>:<factor>` — `factor · inner(q)`
/// - `trunc:<N>:<inner>` — `inner(q)` for `q ≤ N`, zero beyond
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApproxFunction {
    InvBits,
    Power { c: Rational, s: u32 },
    Fk { k: u32, prec: u32 },
    Scaled { factor: Rational, inner: Box<ApproxFunction> },
    Truncated { cutoff: BigUint, inner: Box<ApproxFunction> },
}

impl ApproxFunction {
    pub fn scaled(self, factor: Rational) -> Self {
        ApproxFunction::Scaled { factor, inner: Box::new(self) }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = |why: &str| Error::Parse(format!("function spec {spec:?}: {why}"));
        if spec == "inv_bits" {
            return Ok(ApproxFunction::InvBits);
        }
        if let Some(rest) = spec.strip_prefix("power:") {
            let (c, s) = rest.split_once(':').ok_or_else(|| bad("expected power:c:s"))?;
            let c = rat::parse(c)?;
            let s: u32 = s.parse().map_err(|_| bad("bad exponent"))?;
            if c.is_negative() {
                return Err(bad("negative coefficient"));
            }
            return Ok(ApproxFunction::Power { c, s });
        }
        if let Some(rest) = spec.strip_prefix("fk:") {
            let mut parts = rest.split(':');
            let k: u32 = parts
                .next()
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| bad("bad k"))?;
            let prec = match parts.next() {
                Some(p) => p.parse().map_err(|_| bad("bad precision"))?,
                None => FK_DEFAULT_PREC,
            };
            if parts.next().is_some() || prec < 8 {
                return Err(bad("expected fk:k[:prec] with prec >= 8"));
            }
            return Ok(ApproxFunction::Fk { k, prec });
        }
        if let Some(rest) = spec.strip_prefix("scaled:") {
            let (inner, factor) = rest.rsplit_once(':').ok_or_else(|| bad("expected scaled:<f>:<factor>"))?;
            let factor = rat::parse(factor)?;
            if factor.is_negative() {
                return Err(bad("negative factor"));
            }
            return Ok(ApproxFunction::parse(inner)?.scaled(factor));
        }
        if let Some(rest) = spec.strip_prefix("trunc:") {
            let (n, inner) = rest.split_once(':').ok_or_else(|| bad("expected trunc:N:<f>"))?;
            let cutoff: BigUint = n.parse().map_err(|_| bad("bad cutoff"))?;
            return Ok(ApproxFunction::Truncated {
                cutoff,
                inner: Box::new(ApproxFunction::parse(inner)?),
            });
        }
        Err(bad("unknown family"))
    }

    /// Values are exact rationals (everything except f_k).
    pub fn is_exact(&self) -> bool {
        match self {
            ApproxFunction::Fk { k, .. } => *k == 0,
            ApproxFunction::Scaled { inner, .. } | ApproxFunction::Truncated { inner, .. } => {
                inner.is_exact()
            }
            _ => true,
        }
    }

    /// Informational only; never proven here.
    pub fn declared_divergent(&self) -> bool {
        match self {
            ApproxFunction::InvBits | ApproxFunction::Fk { .. } => true,
            ApproxFunction::Power { c, s } => *s <= 1 && c.is_positive(),
            ApproxFunction::Scaled { factor, inner } => factor.is_positive() && inner.declared_divergent(),
            ApproxFunction::Truncated { .. } => false,
        }
    }

    pub fn eval(&self, q: &BigUint) -> Result<Rational> {
        if q.is_zero() {
            return Err(Error::InvalidArgument("approximation functions are defined for q >= 1".into()));
        }
        Ok(self.eval_unchecked(q))
    }

    /// Floating-point estimate of `f(q)` from `ln q`; usable far beyond the
    /// `f64` range of `q` itself. Never used for certified quantities.
    pub fn estimate_from_ln(&self, ln_q: f64) -> f64 {
        match self {
            ApproxFunction::InvBits => 1.0 / ((ln_q / std::f64::consts::LN_2 + 1e-12).floor() + 1.0),
            ApproxFunction::Power { c, s } => rat::approx_f64(c) * (-(*s as f64) * ln_q).exp(),
            ApproxFunction::Fk { k, .. } => {
                let mut ln_den = ln_q;
                let mut log_i = ln_q.max(1.0);
                for _ in 0..*k {
                    ln_den += log_i.ln();
                    log_i = log_i.ln().max(1.0);
                }
                (-ln_den).exp()
            }
            ApproxFunction::Scaled { factor, inner } => rat::approx_f64(factor) * inner.estimate_from_ln(ln_q),
            ApproxFunction::Truncated { cutoff, inner } => {
                let ln_cut = rat::approx_f64(&rat::from_biguint(cutoff)).ln();
                let ln_cut = if ln_cut.is_finite() { ln_cut } else { cutoff.bits() as f64 * std::f64::consts::LN_2 };
                if ln_q <= ln_cut + 1e-9 {
                    inner.estimate_from_ln(ln_q)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval_u64(&self, q: u64) -> Result<Rational> {
        self.eval(&BigUint::from(q))
    }

    fn eval_unchecked(&self, q: &BigUint) -> Rational {
        match self {
            ApproxFunction::InvBits => rat::int(q.bits()).recip(),
            ApproxFunction::Power { c, s } => {
                let qs = BigInt::from(q.pow(*s));
                c / Rational::from_integer(qs)
            }
            ApproxFunction::Fk { k, prec } => fk_bounds(*k, q, *prec).1,
            ApproxFunction::Scaled { factor, inner } => factor * inner.eval_unchecked(q),
            ApproxFunction::Truncated { cutoff, inner } => {
                if q <= cutoff {
                    inner.eval_unchecked(q)
                } else {
                    Rational::zero()
                }
            }
        }
    }

    /// Evaluate along a sequence and apply a running minimum in increasing
    /// `q` order, so the returned values never increase.
    pub fn eval_sequence(&self, qs: &[BigUint]) -> Result<Vec<Rational>> {
        let mut order: Vec<usize> = (0..qs.len()).collect();
        order.sort_by(|&a, &b| qs[a].cmp(&qs[b]));
        let mut out = vec![Rational::zero(); qs.len()];
        let mut running: Option<Rational> = None;
        for i in order {
            let v = self.eval(&qs[i])?;
            let v = match running.take() {
                Some(r) if r < v => r,
                _ => v,
            };
            running = Some(v.clone());
            out[i] = v;
        }
        Ok(out)
    }

    /// First adjacent pair `(q, q+1)` among `qs` with `f(q+1) > f(q)`.
    pub fn find_increase(&self, qs: &[u64]) -> Result<Option<u64>> {
        for &q in qs {
            if self.eval_u64(q + 1)? > self.eval_u64(q)? {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }
}

impl fmt::Display for ApproxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxFunction::InvBits => write!(f, "inv_bits"),
            ApproxFunction::Power { c, s } => write!(f, "power:{}:{}", show_short(c), s),
            ApproxFunction::Fk { k, prec } if *prec == FK_DEFAULT_PREC => write!(f, "fk:{k}"),
            ApproxFunction::Fk { k, prec } => write!(f, "fk:{k}:{prec}"),
            ApproxFunction::Scaled { factor, inner } => write!(f, "scaled:{inner}:{}", show_short(factor)),
            ApproxFunction::Truncated { cutoff, inner } => write!(f, "trunc:{cutoff}:{inner}"),
        }
    }
}

fn show_short(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        rat::fmt(r)
    }
}

// ---------------------------------------------------------------------------
// Certified logarithms.

fn round_sig(r: &Rational, prec: u32, up: bool) -> Rational {
    if r.is_zero() {
        return Rational::zero();
    }
    // Keep `prec` significant bits: scale so the leading bit sits at 2^prec.
    let lead = r.numer().bits() as i64 - r.denom().bits() as i64;
    let shift = prec as i64 - lead;
    if shift <= 0 {
        return if up { r.ceil() } else { r.floor() };
    }
    if up {
        rat::ceil_dyadic(r, shift as u32)
    } else {
        rat::floor_dyadic(r, shift as u32)
    }
}

/// Bounds on `atanh(z)` for rational `0 ≤ z ≤ 1/3`, directed rounding at
/// `prec` significant bits.
fn atanh_bounds(z: &Rational, prec: u32) -> (Rational, Rational) {
    let work = prec + 16;
    let eps = Rational::new(BigInt::one(), BigInt::one() << (work + 4));
    let bound = |up: bool| -> Rational {
        let z2 = round_sig(&(z * z), work, up);
        let mut power = z.clone();
        let mut sum = Rational::zero();
        let mut n: u64 = 0;
        loop {
            let term = round_sig(&(&power / rat::int(2 * n + 1)), work, up);
            sum += term;
            power = round_sig(&(&power * &z2), work, up);
            n += 1;
            if power < eps {
                break;
            }
        }
        if up {
            // Remaining tail ≤ power / ((2n+1)(1 − z²)), and z² ≤ 1/9.
            sum += &power * rat::rat(9, 8) / rat::int(2 * n + 1);
        }
        sum
    };
    (bound(false), bound(true))
}

fn ln2_bounds(prec: u32) -> (Rational, Rational) {
    let (lo, hi) = atanh_bounds(&rat::rat(1, 3), prec);
    (lo * rat::int(2), hi * rat::int(2))
}

/// Certified `[lo, hi] ∋ ln x` for rational `x ≥ 1`, rounded outward to
/// `prec` significant bits.
pub fn ln_bounds(x: &Rational, prec: u32) -> (Rational, Rational) {
    assert!(*x >= Rational::one(), "ln_bounds needs x >= 1");
    if x.is_one() {
        return (Rational::zero(), Rational::zero());
    }
    // x = 2^e · m with m ∈ [1, 2).
    let mut e = x.numer().bits() as i64 - x.denom().bits() as i64;
    let pow2 = |e: i64| -> Rational {
        if e >= 0 {
            Rational::from_integer(BigInt::one() << e as usize)
        } else {
            Rational::new(BigInt::one(), BigInt::one() << (-e) as usize)
        }
    };
    let mut m = x / pow2(e);
    if m < Rational::one() {
        e -= 1;
        m = x / pow2(e);
    }
    let work = prec + 16 + (64 - (e.unsigned_abs() | 1).leading_zeros());
    let m_lo = round_sig(&m, work, false).max(Rational::one());
    let m_hi = round_sig(&m, work, true);
    let z = |m: &Rational| (m - Rational::one()) / (m + Rational::one());
    let (a_lo, _) = atanh_bounds(&z(&m_lo), work);
    let (_, a_hi) = atanh_bounds(&z(&m_hi), work);
    let (l2_lo, l2_hi) = ln2_bounds(work);
    let e_r = rat::int(e as u64);
    let lo = &e_r * l2_lo + a_lo * rat::int(2);
    let hi = &e_r * l2_hi + a_hi * rat::int(2);
    (round_sig(&lo, prec, false), round_sig(&hi, prec, true))
}

/// Certified bounds `lo ≤ f_k(q) ≤ hi` with `log^(i)` the i-th iterate of
/// `x ↦ max{1, log x}` (natural log).
pub fn fk_bounds(k: u32, q: &BigUint, prec: u32) -> (Rational, Rational) {
    let q_r = rat::from_biguint(q);
    if k == 0 {
        let r = q_r.recip();
        return (r.clone(), r);
    }
    let one = Rational::one();
    let mut iter_lo = q_r.clone();
    let mut iter_hi = q_r.clone();
    let mut den_lo = q_r.clone();
    let mut den_hi = q_r;
    for _ in 0..k {
        let (l, _) = ln_bounds(&iter_lo.clone().max(one.clone()), prec + 8);
        let (_, h) = ln_bounds(&iter_hi.clone().max(one.clone()), prec + 8);
        iter_lo = l.max(one.clone());
        iter_hi = h.max(one.clone());
        den_lo *= &iter_lo;
        den_hi *= &iter_hi;
    }
    (
        round_sig(&den_hi.recip(), prec, false),
        round_sig(&den_lo.recip(), prec, true),
    )
}

// ---------------------------------------------------------------------------
// Series.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Plain,
    PhiWeighted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesReport {
    pub cutoff: u64,
    pub partial_sum: Rational,
    pub kind: SeriesKind,
}

pub fn euler_phi(n: u64) -> u64 {
    assert!(n >= 1, "euler_phi needs n >= 1");
    let mut n = n;
    let mut result = n;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// `Σ_{q ≤ Q} ψ(q)`, exact.
pub fn khintchine_partial<F>(psi: F, cutoff: u64) -> SeriesReport
where
    F: Fn(u64) -> Rational,
{
    let partial_sum = (1..=cutoff).fold(Rational::zero(), |acc, q| acc + psi(q));
    SeriesReport { cutoff, partial_sum, kind: SeriesKind::Plain }
}

/// `Σ_{q ≤ Q} φ(q) ψ(q) / q`, exact.
pub fn km_partial<F>(psi: F, cutoff: u64) -> SeriesReport
where
    F: Fn(u64) -> Rational,
{
    let partial_sum = (1..=cutoff).fold(Rational::zero(), |acc, q| {
        acc + psi(q) * rat::rat(euler_phi(q) as i64, q as i64)
    });
    SeriesReport { cutoff, partial_sum, kind: SeriesKind::PhiWeighted }
}

pub fn function_series(f: &ApproxFunction, cutoff: u64, kind: SeriesKind) -> Result<SeriesReport> {
    // Surface q = 0 style errors up front; evaluation below cannot fail.
    if cutoff >= 1 {
        f.eval_u64(1)?;
    }
    let psi = |q: u64| f.eval_u64(q).expect("q >= 1");
    Ok(match kind {
        SeriesKind::Plain => khintchine_partial(psi, cutoff),
        SeriesKind::PhiWeighted => km_partial(psi, cutoff),
    })
}

/// ψ given on a finite support.
pub fn sparse(map: &BTreeMap<u64, Rational>) -> impl Fn(u64) -> Rational + '_ {
    move |q| map.get(&q).cloned().unwrap_or_else(Rational::zero)
}

/// `Σ_{q∈S∩[1,Q]} φ(q) f(q) / q` against `Σ_{εQ<q≤Q} 1/q`, for `S` missing
/// fewer than `εQ` integers of `[1, Q]` and `f ≥ 1/φ`.
pub fn km_density_diagnostic<F>(support: &[u64], f: F, cutoff: u64, eps: &Rational) -> (Rational, Rational)
where
    F: Fn(u64) -> Rational,
{
    let lhs = support
        .iter()
        .filter(|&&q| q >= 1 && q <= cutoff)
        .fold(Rational::zero(), |acc, &q| acc + f(q) * rat::rat(euler_phi(q) as i64, q as i64));
    let start = (eps * rat::int(cutoff)).floor().to_integer().to_u64().unwrap_or(0);
    let rhs = ((start + 1)..=cutoff).fold(Rational::zero(), |acc, q| acc + rat::rat(1, q as i64));
    (lhs, rhs)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    #[test]
    fn inv_bits_values() {
        let f = ApproxFunction::InvBits;
        assert_eq!(f.eval_u64(1).unwrap(), int(1));
        assert_eq!(f.eval_u64(2).unwrap(), rat(1, 2));
        assert_eq!(f.eval_u64(8).unwrap(), rat(1, 4));
        assert!(f.eval_u64(0).is_err());
    }

    #[test]
    fn f0_is_reciprocal() {
        let f = ApproxFunction::parse("fk:0").unwrap();
        assert_eq!(f.eval_u64(10).unwrap(), rat(1, 10));
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["inv_bits", "scaled:inv_bits:1/8", "power:1:1", "fk:2", "fk:1:128", "trunc:100:inv_bits", "scaled:power:3/2:1:2"] {
            let f = ApproxFunction::parse(s).unwrap();
            assert_eq!(ApproxFunction::parse(&f.to_string()).unwrap(), f, "{s}");
        }
        assert_eq!(
            ApproxFunction::parse("scaled:inv_bits:1/8").unwrap().eval_u64(8).unwrap(),
            rat(1, 32)
        );
        for bad in ["", "nope", "power:-1:1", "power:1:x", "scaled:inv_bits:-1", "fk:x"] {
            assert!(ApproxFunction::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ln_bounds_bracket_float() {
        for (n, d) in [(2i64, 1i64), (3, 1), (10, 1), (1_000_003, 7), (5, 4)] {
            let x = rat(n, d);
            let (lo, hi) = ln_bounds(&x, 80);
            let v = (n as f64 / d as f64).ln();
            assert!(rat::approx_f64(&lo) <= v + 1e-12 && v - 1e-12 <= rat::approx_f64(&hi));
            assert!(&hi - &lo < rat(1, 1 << 40));
        }
    }

    #[test]
    fn truncation_hits_zero() {
        let f = ApproxFunction::parse("trunc:5:inv_bits").unwrap();
        assert_eq!(f.eval_u64(5).unwrap(), rat(1, 3));
        assert_eq!(f.eval_u64(6).unwrap(), int(0));
    }

    #[test]
    fn running_minimum_sequence() {
        let f = ApproxFunction::parse("fk:2").unwrap();
        let qs: Vec<BigUint> = (1u64..60).map(BigUint::from).collect();
        let vals = f.eval_sequence(&qs).unwrap();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn euler_phi_values() {
        assert_eq!(euler_phi(1), 1);
        assert_eq!(euler_phi(12), 4);
        assert_eq!(euler_phi(210), 48);
        assert_eq!(euler_phi(97), 96);
    }

    #[test]
    fn series_examples() {
        let inv = |q: u64| rat(1, q as i64);
        assert_eq!(khintchine_partial(inv, 3).partial_sum, rat(11, 6));
        assert_eq!(khintchine_partial(inv, 0).partial_sum, int(0));
        let map: BTreeMap<u64, Rational> = [(2, rat(1, 2)), (4, rat(1, 4))].into_iter().collect();
        assert_eq!(khintchine_partial(sparse(&map), 10).partial_sum, rat(3, 4));
        assert_eq!(km_partial(inv, 4).partial_sum, rat(115, 72));
        let one_at_one = |q: u64| if q == 1 { int(1) } else { int(0) };
        assert_eq!(km_partial(one_at_one, 9).partial_sum, int(1));
        let inv_phi = |q: u64| rat(1, euler_phi(q) as i64);
        assert_eq!(km_partial(inv_phi, 3).partial_sum, rat(11, 6));
    }
}
