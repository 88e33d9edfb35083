//! Exact edge lengths, serialized as `"p/q"` strings.

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = Ratio<i64>;

pub fn parse(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: i64 = p.parse().map_err(|_| format!("invalid rational {s:?}"))?;
    let q: i64 = q.parse().map_err(|_| format!("invalid rational {s:?}"))?;
    if q == 0 {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rational::new(p, q))
}

pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(r))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    let s = String::deserialize(d)?;
    parse(&s).map_err(serde::de::Error::custom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("2/4").unwrap(), Rational::new(1, 2));
        assert_eq!(parse("3").unwrap(), Rational::from_integer(3));
        assert_eq!(format(&Rational::from_integer(2)), "2/1");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }
}
