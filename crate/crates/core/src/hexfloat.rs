//! IEEE-754 doubles in C99 hexadecimal notation (`0x1.8p+0`), used so that
//! serialized rates round-trip bit-exactly.

use crate::error::{Error, Result};

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 {
        (0, -1022)
    } else {
        (1, exp_bits - 1023)
    };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

pub fn parse(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("not a hexadecimal float: {s:?}"));
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(bad)?;
    let (mant, exp) = body.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() || frac_part.len() > 13 {
        return Err(bad());
    }
    let lead = u64::from_str_radix(int_part, 16).map_err(|_| bad())?;
    if lead > 1 {
        return Err(bad());
    }
    let frac = if frac_part.is_empty() {
        0
    } else {
        u64::from_str_radix(frac_part, 16).map_err(|_| bad())? << (4 * (13 - frac_part.len()))
    };
    let bits = if lead == 0 {
        if frac == 0 {
            0
        } else if exp == -1022 {
            frac
        } else {
            return Err(bad());
        }
    } else {
        let biased = exp + 1023;
        if !(1..=2046).contains(&biased) {
            return Err(bad());
        }
        ((biased as u64) << 52) | frac
    };
    let v = f64::from_bits(bits);
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(1.5), "0x1.8p+0");
        assert_eq!(format(-0.25), "-0x1p-2");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(parse("0x1.8p+0").unwrap(), 1.5);
        assert!(parse("1.5").is_err());
    }

    proptest! {
        #[test]
        fn round_trips_bit_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let y = parse(&format(x)).unwrap();
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
