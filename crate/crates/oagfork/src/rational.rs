//! Exact rationals and their textual form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::Serializer;
use num_traits::{One, Signed, Zero};

use crate::error::{OagError, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

/// Parses `"p/q"`, `"p"` or a decimal such as `"-1.25"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || OagError::config(format!("invalid rational literal {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(OagError::config(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let ip: BigInt = if ip.is_empty() { BigInt::zero() } else { ip.parse().map_err(|_| bad())? };
        let fpv: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), fp.len());
        let v = Q::new(ip * &scale + fpv, scale);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

/// Always `"p/q"` with `q >= 1`.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Least common multiple of the denominators.
pub fn common_denom<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Scales a rational vector to a primitive integer vector whose first nonzero entry is positive.
pub fn primitive_integer(v: &[Q]) -> Vec<BigInt> {
    let den = common_denom(v.iter());
    let mut ints: Vec<BigInt> = v.iter().map(|x| (x * qi(&den)).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() {
        for x in ints.iter_mut() {
            *x = &*x / &g;
        }
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in ints.iter_mut() {
                *x = -&*x;
            }
        }
    }
    ints
}

/// A short rational inside the open interval `(lo, hi)`; `lo < hi` is required.
pub fn simplest_between(lo: &Q, hi: &Q) -> Q {
    debug_assert!(lo < hi);
    fn nonneg(lo: &Q, hi: &Q) -> Q {
        let fl = lo.floor();
        let next = &fl + Q::one();
        if &next < hi {
            return next;
        }
        let a = lo - &fl;
        let b = hi - &fl;
        if a.is_zero() {
            return fl + Q::one() / ((Q::one() / b).floor() + Q::one());
        }
        fl + Q::one() / nonneg(&(Q::one() / b), &(Q::one() / a))
    }
    if lo.is_negative() && hi.is_positive() {
        Q::zero()
    } else if !lo.is_negative() {
        nonneg(lo, hi)
    } else {
        -nonneg(&-hi, &-lo)
    }
}

/// Serde helpers writing rationals as "p/q" strings.
pub fn ser_q<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

pub fn ser_vec<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fmt_q))
}

pub fn ser_opt_vec<S: Serializer>(v: &Option<Vec<Q>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_vec(v, s),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/6").unwrap(), qf(1, 2));
        assert_eq!(parse_q("-7").unwrap(), q(-7));
        assert_eq!(parse_q("-1.25").unwrap(), qf(-5, 4));
        assert_eq!(parse_q("0.5").unwrap(), qf(1, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn format_always_has_denominator() {
        assert_eq!(fmt_q(&q(3)), "3/1");
        assert_eq!(fmt_q(&qf(-2, 4)), "-1/2");
    }

    #[test]
    fn primitive_vector() {
        let v = primitive_integer(&[qf(-1, 2), q(1)]);
        assert_eq!(v, vec![BigInt::from(1), BigInt::from(-2)]);
    }

    #[test]
    fn simplest_between_is_inside() {
        let cases = [(qf(1, 3), qf(1, 2)), (q(2), q(3)), (qf(-7, 3), qf(-2, 1)), (qf(141, 100), qf(142, 100)), (q(-1), q(1))];
        for (lo, hi) in cases {
            let x = simplest_between(&lo, &hi);
            assert!(x > lo && x < hi, "{x} not in ({lo}, {hi})");
        }
        assert_eq!(simplest_between(&qf(141, 100), &qf(142, 100)), qf(17, 12));
    }
}
