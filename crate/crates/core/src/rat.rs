//! Helpers around [`BigRational`]: canonical text form, nearest-integer
//! distance, dyadic rounding.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn from_biguint(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

pub fn inv_biguint(n: &BigUint) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(n.clone()))
}

/// Always `num/den`, also for integers.
pub fn fmt(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
    }
}

/// Fractional part in [0, 1).
pub fn frac(r: &Rational) -> Rational {
    r - r.floor()
}

/// Distance to the nearest integer, ‖r‖ ∈ [0, 1/2].
pub fn dist_to_int(r: &Rational) -> Rational {
    let f = frac(r);
    let g = Rational::one() - &f;
    if f < g {
        f
    } else {
        g
    }
}

pub fn min(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

/// Exact sum by pairwise reduction; much cheaper than a running sum when
/// the denominators are many distinct small integers.
pub fn sum_tree(xs: &[Rational]) -> Rational {
    match xs.len() {
        0 => Rational::zero(),
        1 => xs[0].clone(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            sum_tree(a) + sum_tree(b)
        }
    }
}

pub fn floor_dyadic(r: &Rational, prec: u32) -> Rational {
    let scale = BigInt::one() << prec;
    let scaled = (r * Rational::from_integer(scale.clone())).floor();
    Rational::new(scaled.to_integer(), scale)
}

pub fn ceil_dyadic(r: &Rational, prec: u32) -> Rational {
    let scale = BigInt::one() << prec;
    let scaled = (r * Rational::from_integer(scale.clone())).ceil();
    Rational::new(scaled.to_integer(), scale)
}

pub fn to_biguint(r: &Rational) -> Option<BigUint> {
    if r.is_integer() && !r.is_negative() {
        r.numer().to_biguint()
    } else {
        None
    }
}

/// Ceiling of a non-negative rational as an unsigned integer.
pub fn ceil_biguint(r: &Rational) -> BigUint {
    let c = r.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Rough f64 view, for human-readable reports only.
/// Exact text when short, otherwise a decimal approximation for display.
pub fn fmt_brief(r: &Rational) -> String {
    let exact = fmt(r);
    if exact.len() <= 48 {
        exact
    } else {
        format!("≈ {:.9}", approx_f64(r))
    }
}

pub fn approx_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    let n = r.numer();
    let d = r.denom();
    let shift = (n.bits().max(d.bits()) as i64 - 60).max(0) as usize;
    let nf = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let df = (d >> shift).to_f64().unwrap_or(f64::NAN);
    nf / df
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form_is_canonical() {
        assert_eq!(fmt(&rat(6, 8)), "3/4");
        assert_eq!(fmt(&int(2)), "2/1");
        assert_eq!(parse("6/8").unwrap(), rat(3, 4));
        assert_eq!(parse(" -5 ").unwrap(), rat(-5, 1));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
    }

    #[test]
    fn nearest_integer_distance() {
        assert_eq!(dist_to_int(&rat(2, 3)), rat(1, 3));
        assert_eq!(dist_to_int(&rat(-1, 4)), rat(1, 4));
        assert_eq!(dist_to_int(&rat(7, 2)), rat(1, 2));
        assert_eq!(dist_to_int(&int(5)), Rational::zero());
    }

    #[test]
    fn tree_sum_matches_running_sum() {
        let xs: Vec<Rational> = (1..50).map(|q| rat(1, q)).collect();
        let running = xs.iter().fold(Rational::zero(), |a, x| a + x);
        assert_eq!(sum_tree(&xs), running);
        assert_eq!(sum_tree(&[]), Rational::zero());
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let r = rat(1, 3);
        let lo = floor_dyadic(&r, 10);
        let hi = ceil_dyadic(&r, 10);
        assert!(lo <= r && r <= hi);
        assert_eq!(&hi - &lo, rat(1, 1024));
    }
}
