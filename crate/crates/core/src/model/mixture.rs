use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Highest supported degree in a mixture.
pub const MAX_DEGREE: u32 = 32;

/// A finite mixture `xi(t) = sum_p a_p t^p` of p-spin interactions.
///
/// Only strictly positive coefficients are stored. The three numbers that
/// every closed-form quantity depends on are cached:
/// `xi(1)`, `xi'(1)` and `xi''(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedModel {
    coeffs: BTreeMap<u32, f64>,
    xi1: f64,
    xi1p: f64,
    xi1pp: f64,
}

impl MixedModel {
    pub fn new<I>(coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut map = BTreeMap::new();
        for (p, a) in coeffs {
            if p == 0 {
                return Err(Error::InvalidModel("degree must be at least 1".into()));
            }
            if p > MAX_DEGREE {
                return Err(Error::InvalidModel(format!(
                    "degree {p} exceeds the supported maximum {MAX_DEGREE}"
                )));
            }
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "coefficient a_{p} = {a} must be finite and nonnegative"
                )));
            }
            if map.contains_key(&p) {
                return Err(Error::InvalidModel(format!("degree {p} given twice")));
            }
            if a > 0.0 {
                map.insert(p, a);
            }
        }
        if !map.keys().any(|&p| p >= 2) {
            return Err(Error::InvalidModel(
                "at least one coefficient with degree >= 2 must be positive".into(),
            ));
        }
        let mut xi1 = 0.0;
        let mut xi1p = 0.0;
        let mut xi1pp = 0.0;
        for (&p, &a) in &map {
            let pf = f64::from(p);
            xi1 += a;
            xi1p += pf * a;
            xi1pp += pf * (pf - 1.0) * a;
        }
        Ok(Self {
            coeffs: map,
            xi1,
            xi1p,
            xi1pp,
        })
    }

    /// Pure p-spin model `xi(t) = a t^p`.
    pub fn pure(p: u32, a: f64) -> Result<Self> {
        Self::new([(p, a)])
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, f64> {
        &self.coeffs
    }

    pub fn max_degree(&self) -> u32 {
        *self
            .coeffs
            .keys()
            .next_back()
            .expect("nonempty by construction")
    }

    /// `xi(1)`
    pub fn xi(&self) -> f64 {
        self.xi1
    }

    /// `xi'(1)`
    pub fn xi_p(&self) -> f64 {
        self.xi1p
    }

    /// `xi''(1)`
    pub fn xi_pp(&self) -> f64 {
        self.xi1pp
    }

    /// Evaluates `xi(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&p, &a)| a * t.powi(p as i32))
            .sum()
    }

    /// True when a single degree `p >= 2` carries all the weight.
    pub fn is_pure(&self) -> bool {
        self.coeffs.len() == 1 && self.max_degree() >= 2
    }

    /// `a = xi'/xi''`.
    pub fn ratio(&self) -> f64 {
        self.xi1p / self.xi1pp
    }
}

impl fmt::Display for MixedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, a) in &self.coeffs {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{p}:{a}")?;
        }
        Ok(())
    }
}

impl FromStr for MixedModel {
    type Err = Error;

    /// Parses the literal format `p:a_p[,p:a_p...]`, e.g. `3:1` or `1:0.5,3:1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidModel("empty mixture literal".into()));
        }
        let mut pairs = Vec::new();
        for item in s.split(',') {
            let (p, a) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::InvalidModel(format!("expected `p:a_p`, found `{item}`")))?;
            let p: u32 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidModel(format!("bad degree `{p}`")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::InvalidModel(format!("bad coefficient `{a}`")))?;
            pairs.push((p, a));
        }
        Self::new(pairs)
    }
}

impl Serialize for MixedModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MixedModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derived_sums() {
        let m: MixedModel = "1:1,3:1".parse().unwrap();
        assert_eq!(m.xi(), 2.0);
        assert_eq!(m.xi_p(), 4.0);
        assert_eq!(m.xi_pp(), 6.0);
        assert!(!m.is_pure());
        assert!(MixedModel::pure(3, 1.0).unwrap().is_pure());
    }

    #[test]
    fn rejects_invalid() {
        assert!("1:1".parse::<MixedModel>().is_err());
        assert!("3:-1".parse::<MixedModel>().is_err());
        assert!("3:1,3:2".parse::<MixedModel>().is_err());
        assert!("33:1".parse::<MixedModel>().is_err());
        assert!("0:1,2:1".parse::<MixedModel>().is_err());
        assert!("3".parse::<MixedModel>().is_err());
        assert!("".parse::<MixedModel>().is_err());
        assert!("2:0".parse::<MixedModel>().is_err());
    }

    #[test]
    fn zero_coefficients_dropped() {
        let m: MixedModel = "1:0,3:1".parse().unwrap();
        assert_eq!(m.to_string(), "3:1");
        assert!(m.is_pure());
    }

    proptest! {
        #[test]
        fn literal_round_trip(
            entries in proptest::collection::btree_map(1u32..=MAX_DEGREE, 1e-6f64..10.0, 1..6),
            extra in 2u32..=MAX_DEGREE,
        ) {
            let mut entries = entries;
            entries.entry(extra).or_insert(0.75);
            let m = MixedModel::new(entries).unwrap();
            let back: MixedModel = m.to_string().parse().unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
