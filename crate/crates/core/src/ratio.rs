//! Arbitrary-precision rational scalars and their text encoding.
//!
//! Rationals cross the CLI boundary as `"num/den"` strings (or plain
//! integer / decimal strings); parsing is exact, never through `f64`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

/// `n/d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The integer `n` as a rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Nearest `f64` (for reports and sampling paths).
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy conversions for huge operands.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Canonical text form: `"3/4"`, or `"5"` when the denominator is one.
pub fn rat_str(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"a/b"`, integer strings and decimal strings (optionally with an
/// exponent, e.g. `"2.5e-3"`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational literal".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (
            m,
            e.parse::<i32>()
                .map_err(|_| format!("bad exponent in {s:?}"))?,
        ),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(format!("bad rational literal {s:?}"));
    }
    let n: BigInt = digits
        .parse()
        .map_err(|_| format!("bad rational literal {s:?}"))?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let scale = ten.pow(shift.unsigned_abs());
    Ok(if shift >= 0 {
        Rational::from_integer(n * scale)
    } else {
        Rational::new(n, scale)
    })
}

/// Exact conversion of a finite `f64` (used for tolerances supplied as
/// floats; the binary value is taken literally).
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-12").unwrap(), rat_int(-12));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("2.5e-3").unwrap(), rat(1, 400));
        assert_eq!(parse_rational(" 7 / 2 ").unwrap(), rat(7, 2));
    }

    #[test]
    fn rejects_malformed_literals() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn round_trips_canonical_strings() {
        for r in [rat(3, 4), rat_int(-5), rat(-7, 3)] {
            assert_eq!(parse_rational(&rat_str(&r)).unwrap(), r);
        }
    }
}
