//! Exact rational scalars.
//!
//! Distances, radii and masses are carried as `Ratio<i128>` so that ball
//! membership at threshold radii and quantization brackets are decided
//! without rounding. Floats only appear at the fitting layer.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Float, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn frac(numer: i128, denom: i128) -> Rational {
    Rational::new(numer, denom)
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64()
        .unwrap_or_else(|| *q.numer() as f64 / *q.denom() as f64)
}

/// Parses `"3"`, `"-2"`, `"1/3"`, `"0.125"`, `"2.5e-3"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::param(format!("not an exact number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(Error::param(format!("zero denominator in {text:?}")));
        }
        return Ok(frac(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fractional) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fractional.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(fractional.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{whole}{fractional}");
    let numer: i128 = if all.is_empty() { 0 } else { all.parse().map_err(|_| bad())? };
    let scale = exponent - fractional.len() as i32;
    let pow = |p: u32| 10i128.checked_pow(p).ok_or_else(bad);
    let mut q = if scale >= 0 {
        int(numer.checked_mul(pow(scale as u32)?).ok_or_else(bad)?)
    } else {
        frac(numer, pow((-scale) as u32)?)
    };
    if negative {
        q = -q;
    }
    Ok(q)
}

/// Exact decimal when the denominator has only factors 2 and 5, otherwise `p/q`.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    let mut d = *q.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let places = twos.max(fives);
    let Some(scale) = 10i128.checked_pow(places) else {
        return format!("{}/{}", q.numer(), q.denom());
    };
    let Some(scaled) = (q * int(scale)).to_integer().checked_abs() else {
        return format!("{}/{}", q.numer(), q.denom());
    };
    let digits = format!("{:0>width$}", scaled, width = places as usize + 1);
    let split = digits.len() - places as usize;
    let sign = if q.is_negative() { "-" } else { "" };
    format!("{sign}{}.{}", &digits[..split], &digits[split..])
}

/// Exact binary value of a finite float, if it fits an `i128` ratio.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::param(format!("non-finite value {x}")));
    }
    if x == 0.0 {
        return Ok(Rational::zero());
    }
    let (mut mantissa, mut exponent, sign) = x.integer_decode();
    let tz = mantissa.trailing_zeros().min(63);
    mantissa >>= tz;
    exponent += tz as i16;
    let m = sign as i128 * mantissa as i128;
    let out_of_range = || Error::param(format!("{x} is not representable as an exact ratio"));
    if exponent >= 0 {
        let f = 1i128.checked_shl(exponent as u32).filter(|_| exponent < 126).ok_or_else(out_of_range)?;
        Ok(int(m.checked_mul(f).ok_or_else(out_of_range)?))
    } else {
        let e = (-exponent) as u32;
        if e > 125 {
            return Err(out_of_range());
        }
        Ok(frac(m, 1i128 << e))
    }
}

pub(crate) fn lcm_all(values: impl IntoIterator<Item = i128>) -> i128 {
    values.into_iter().fold(1, |acc, v| acc.lcm(&v))
}

/// Largest integer `t ≥ 0` with `t ≤ q`, saturating; `None` when `q < 0`.
pub(crate) fn floor_nonneg(q: &Rational) -> Option<u64> {
    if q.is_negative() {
        return None;
    }
    Some(q.to_integer().to_u64().unwrap_or(u64::MAX))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("1/3").unwrap(), frac(1, 3));
        assert_eq!(parse_rational("0.125").unwrap(), frac(1, 8));
        assert_eq!(parse_rational("-2.5e-3").unwrap(), frac(-1, 400));
        assert_eq!(parse_rational(".5").unwrap(), frac(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_forms() {
        assert_eq!(format_rational(&frac(1, 8)), "0.125");
        assert_eq!(format_rational(&frac(-1, 400)), "-0.0025");
        assert_eq!(format_rational(&frac(1, 3)), "1/3");
        assert_eq!(format_rational(&int(7)), "7");
    }

    #[test]
    fn float_conversion_is_exact() {
        assert_eq!(rational_from_f64(0.75).unwrap(), frac(3, 4));
        assert_eq!(rational_from_f64(-8.0).unwrap(), int(-8));
        let third = rational_from_f64(1.0 / 3.0).unwrap();
        assert!(third < frac(1, 3));
        assert!(rational_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn round_trip_format_parse() {
        for q in [frac(7, 3), frac(-3, 40), int(0), frac(1, 1024)] {
            assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
        }
    }
}
