use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite union of closed intervals, kept sorted and disjoint. Endpoints
/// may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new<I: IntoIterator<Item = (f64, f64)>>(intervals: I) -> Result<Self> {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in intervals {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
            }
            v.push((lo, hi));
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn real_line() -> Self {
        Self {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn empty() -> Self {
        Self { intervals: vec![] }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_real_line(&self) -> bool {
        self.intervals == [(f64::NEG_INFINITY, f64::INFINITY)]
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= v && v <= hi)
    }

    /// Pieces of positive length inside `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .filter_map(|&(a, b)| {
                let (a, b) = (a.max(lo), b.min(hi));
                (a < b).then_some((a, b))
            })
            .collect()
    }

    /// Image under `v -> scale * v + shift` with `scale > 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        debug_assert!(scale > 0.0);
        Self {
            intervals: self
                .intervals
                .iter()
                .map(|&(a, b)| (scale * a + shift, scale * b + shift))
                .collect(),
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let (lo, hi) = (a.max(c), b.min(d));
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        Self::new(out).expect("intersection of valid intervals")
    }
}

fn fmt_endpoint(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl fmt::Display for IntervalSet {
    /// `lo:hi[,lo:hi...]`, or `empty`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("empty");
        }
        for (i, &(lo, hi)) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", fmt_endpoint(lo), fmt_endpoint(hi))?;
        }
        Ok(())
    }
}

impl FromStr for IntervalSet {
    type Err = Error;

    /// Parses `lo:hi[,lo:hi...]` where endpoints may be `inf` or `-inf`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "empty" {
            return Ok(Self::empty());
        }
        let parse = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad interval endpoint `{t}`")))
        };
        let mut v = Vec::new();
        for item in s.split(',') {
            let (lo, hi) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Domain(format!("expected `lo:hi`, found `{item}`")))?;
            v.push((parse(lo)?, parse(hi)?));
        }
        Self::new(v)
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Restrictions on overlap `gamma`, radial derivative per site `x` and energy
/// per site `y` of the counted critical points.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSet {
    pub gamma: IntervalSet,
    pub radial: IntervalSet,
    pub energy: IntervalSet,
}

impl RestrictionSet {
    pub fn new(gamma: IntervalSet, radial: IntervalSet, energy: IntervalSet) -> Result<Self> {
        if gamma
            .intervals()
            .iter()
            .any(|&(lo, hi)| lo < -1.0 || hi > 1.0)
        {
            return Err(Error::Domain(format!(
                "overlap restriction {gamma} leaves [-1, 1]"
            )));
        }
        Ok(Self {
            gamma,
            radial,
            energy,
        })
    }

    /// `([-1, 1], R, R)`.
    pub fn full() -> Self {
        Self {
            gamma: IntervalSet::new([(-1.0, 1.0)]).expect("valid"),
            radial: IntervalSet::real_line(),
            energy: IntervalSet::real_line(),
        }
    }

    pub fn with_gamma(gamma: IntervalSet) -> Result<Self> {
        let full = Self::full();
        Self::new(gamma, full.radial, full.energy)
    }
}

impl fmt::Display for RestrictionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gamma={};radial={};energy={}",
            self.gamma, self.radial, self.energy
        )
    }
}

impl Serialize for RestrictionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
