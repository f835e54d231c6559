//! Exact arithmetic on the circle `[0, 1)`.
//!
//! Points of the circle are exact rationals reduced mod 1. Sets on the circle
//! are finite unions of half-open intervals with rational endpoints, stored in
//! a canonical form so that equal sets compare equal structurally. The dual
//! endomorphism of multiplication by `N` on the integers acts here as
//! `x ↦ N·x mod 1`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number, always reduced with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Rat(BigRational);

impl Rat {
    /// Builds `numer / denom`. Panics when `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_integer(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    /// Exact value of a finite binary float. Returns `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rat)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn floor(&self) -> Rat {
        Rat(self.0.floor())
    }

    /// `self mod 1`, in `[0, 1)`.
    pub fn fract_mod1(&self) -> Rat {
        Rat(&self.0 - self.0.floor())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `floor(self)` as an `i64`, if it fits.
    pub fn floor_i64(&self) -> Option<i64> {
        self.0.floor().to_integer().to_i64()
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    fn mul_int(&self, k: usize) -> Rat {
        Rat(&self.0 * BigInt::from(k))
    }

    fn div_int(&self, k: usize) -> Rat {
        Rat(&self.0 / BigInt::from(k))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Rat {
    type Err = Error;

    /// Accepts `p/q`, a bare integer `p`, or a terminating decimal such as `0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseRat(s.to_string());
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Rat(BigRational::new(p, q)));
        }
        if let Some((int, frac)) = t.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let digits: BigInt = format!("{int_digits}{frac}").parse().map_err(|_| bad())?;
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            let value = BigRational::new(digits, scale);
            return Ok(Rat(if negative { -value } else { value }));
        }
        let p: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Rat(BigRational::from_integer(p)))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! rat_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat(self.0.$method(&rhs.0))
            }
        }
    };
}

rat_binop!(Add, add);
rat_binop!(Sub, sub);
rat_binop!(Mul, mul);
rat_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

/// A point of the circle, stored as its representative in `[0, 1)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TorusRat(Rat);

impl TorusRat {
    /// Reduces any rational mod 1.
    pub fn new(value: Rat) -> Self {
        TorusRat(value.fract_mod1())
    }

    pub fn from_frac(numer: i64, denom: i64) -> Self {
        TorusRat::new(Rat::new(numer, denom))
    }

    pub fn zero() -> Self {
        TorusRat(Rat::zero())
    }

    pub fn value(&self) -> &Rat {
        &self.0
    }

    pub fn add(&self, other: &TorusRat) -> TorusRat {
        TorusRat::new(&self.0 + &other.0)
    }

    /// Index of the grid cell `[t/M, (t+1)/M)` containing this point.
    pub fn cell_index(&self, cells: usize) -> usize {
        self.0
            .mul_int(cells)
            .floor_i64()
            .expect("cell index fits in i64") as usize
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

impl fmt::Display for TorusRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The dual endomorphism `x ↦ N·x mod 1`.
pub fn alpha_star(x: &TorusRat, n: usize) -> TorusRat {
    assert!(n >= 2, "dilation must be at least 2");
    TorusRat::new(x.0.mul_int(n))
}

/// The kernel of the `n`-th iterate of [`alpha_star`]: the `N^n` points `k / N^n`, sorted.
pub fn kernel_points(scale: usize, n: u32) -> Vec<TorusRat> {
    assert!(scale >= 2 && n >= 1);
    let order = scale.pow(n);
    (0..order)
        .map(|k| TorusRat::from_frac(k as i64, order as i64))
        .collect()
}

/// An `N`-adic grid with `M = L · N^K` equal cells on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    scale: usize,
    base: usize,
    depth: u32,
}

impl GridSpec {
    pub fn new(scale: usize, base: usize, depth: u32) -> Result<Self> {
        if scale < 2 {
            return Err(Error::InvalidGrid(format!("scale N = {scale} must be at least 2")));
        }
        if base == 0 {
            return Err(Error::InvalidGrid("base L must be positive".into()));
        }
        scale
            .checked_pow(depth)
            .and_then(|p| p.checked_mul(base))
            .filter(|&m| m <= i64::MAX as usize)
            .ok_or_else(|| Error::InvalidGrid("cell count overflows".into()))?;
        Ok(GridSpec { scale, base, depth })
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `M = L · N^K`.
    pub fn cell_count(&self) -> usize {
        self.base * self.scale.pow(self.depth)
    }

    /// The grid one level down (`K - 1`).
    pub fn coarse(&self) -> Result<GridSpec> {
        if self.depth == 0 {
            return Err(Error::Resolution("depth 0 grid has no coarser level".into()));
        }
        Ok(GridSpec { depth: self.depth - 1, ..*self })
    }

    pub fn refine(&self) -> Result<GridSpec> {
        GridSpec::new(self.scale, self.base, self.depth + 1)
    }

    /// Left endpoint `t / M` of cell `t`.
    pub fn point(&self, cell: usize) -> TorusRat {
        TorusRat::from_frac(cell as i64, self.cell_count() as i64)
    }
}

/// A finite union of half-open intervals `[a, b)` on the circle.
///
/// The representation is canonical: intervals lie in `[0, 1]`, are sorted,
/// pairwise disjoint and non-adjacent. A set wrapping through 0 is stored as
/// two pieces `[0, b)` and `[a, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct IntervalSet {
    intervals: Vec<(Rat, Rat)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalSet { intervals: vec![(Rat::zero(), Rat::one())] }
    }

    /// Builds a set from intervals `[a, b)` given in any real coordinates
    /// (for instance `[-1/2, 1/2)`); each is reduced mod 1 and wrap-arounds are
    /// split at 0.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rat, Rat)>,
    {
        let mut raw = Vec::new();
        for (a, b) in pairs {
            match a.cmp(&b) {
                Ordering::Greater => {
                    return Err(Error::InvertedInterval { start: a.to_string(), end: b.to_string() })
                }
                Ordering::Equal => continue,
                Ordering::Less => {}
            }
            let len = &b - &a;
            if len >= Rat::one() {
                return Ok(IntervalSet::full());
            }
            let start = a.fract_mod1();
            let end = &start + &len;
            if end <= Rat::one() {
                raw.push((start, end));
            } else {
                raw.push((start, Rat::one()));
                raw.push((Rat::zero(), end - Rat::one()));
            }
        }
        Ok(IntervalSet::normalized(raw))
    }

    /// Convenience for small literal sets: `&[(p, q, r, s)]` means `[p/q, r/s)`.
    pub fn from_fracs(pairs: &[(i64, i64, i64, i64)]) -> Result<Self> {
        IntervalSet::from_pairs(pairs.iter().map(|&(p, q, r, s)| (Rat::new(p, q), Rat::new(r, s))))
    }

    /// The symmetric set `[-w, w)` about 0.
    pub fn symmetric(half_width: &Rat) -> Result<Self> {
        IntervalSet::from_pairs([(-half_width.clone(), half_width.clone())])
    }

    /// Union of the cells `t` with `mask[t]` on a grid of `mask.len()` cells.
    pub fn from_cell_mask(mask: &[bool]) -> Self {
        let m = mask.len() as i64;
        let mut raw = Vec::new();
        let mut t = 0;
        while t < mask.len() {
            if mask[t] {
                let start = t;
                while t < mask.len() && mask[t] {
                    t += 1;
                }
                raw.push((Rat::new(start as i64, m), Rat::new(t as i64, m)));
            } else {
                t += 1;
            }
        }
        IntervalSet { intervals: raw }
    }

    fn normalized(mut raw: Vec<(Rat, Rat)>) -> Self {
        raw.retain(|(a, b)| a < b);
        raw.sort();
        let mut out: Vec<(Rat, Rat)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        IntervalSet { intervals: out }
    }

    /// Re-normalizes; canonical sets are returned unchanged.
    pub fn normalize(&self) -> Self {
        IntervalSet::normalized(self.intervals.clone())
    }

    pub fn intervals(&self) -> &[(Rat, Rat)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1
            && self.intervals[0].0.is_zero()
            && self.intervals[0].1 == Rat::one()
    }

    pub fn contains(&self, x: &TorusRat) -> bool {
        let v = x.value();
        self.intervals.iter().any(|(a, b)| a <= v && v < b)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut raw = self.intervals.clone();
        raw.extend(other.intervals.iter().cloned());
        IntervalSet::normalized(raw)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a1, b1) = &self.intervals[i];
            let (a2, b2) = &other.intervals[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::normalized(out)
    }

    pub fn complement(&self) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = Rat::zero();
        for (a, b) in &self.intervals {
            if &cursor < a {
                out.push((cursor.clone(), a.clone()));
            }
            cursor = b.clone();
        }
        if cursor < Rat::one() {
            out.push((cursor, Rat::one()));
        }
        IntervalSet { intervals: out }
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        &self.intersection(other) == self
    }

    /// Haar measure (total length).
    pub fn measure(&self) -> Rat {
        self.intervals
            .iter()
            .fold(Rat::zero(), |acc, (a, b)| acc + (b - a))
    }

    /// The exact image `{N·x mod 1 : x ∈ S}`.
    pub fn image_under_alpha_star(&self, scale: usize) -> IntervalSet {
        let mut raw = Vec::new();
        for (a, b) in &self.intervals {
            let len = (b - a).mul_int(scale);
            if len >= Rat::one() {
                return IntervalSet::full();
            }
            let start = a.mul_int(scale);
            raw.push((start.clone(), start + len));
        }
        IntervalSet::from_pairs(raw).expect("forward intervals")
    }

    /// The exact preimage `{x : N·x mod 1 ∈ S}`: `N` shrunken translates of `S`.
    pub fn preimage_under_alpha_star(&self, scale: usize) -> IntervalSet {
        let mut raw = Vec::new();
        for k in 0..scale {
            let shift = Rat::from_integer(k as i64);
            for (a, b) in &self.intervals {
                raw.push(((a + &shift).div_int(scale), (b + &shift).div_int(scale)));
            }
        }
        IntervalSet::normalized(raw)
    }

    /// True iff every endpoint is a multiple of `1 / cells`.
    pub fn aligns_with_cells(&self, cells: usize) -> bool {
        self.intervals.iter().all(|(a, b)| {
            a.mul_int(cells).is_integer() && b.mul_int(cells).is_integer()
        })
    }

    pub fn aligns_with_grid(&self, grid: &GridSpec) -> bool {
        self.aligns_with_cells(grid.cell_count())
    }

    /// Membership of each of the `cells` grid cells; requires alignment.
    pub fn cell_mask(&self, cells: usize) -> Result<Vec<bool>> {
        if !self.aligns_with_cells(cells) {
            return Err(Error::Misaligned { cells });
        }
        let mut mask = vec![false; cells];
        for (a, b) in &self.intervals {
            let lo = a.mul_int(cells).floor_i64().expect("aligned endpoint") as usize;
            let hi = b.mul_int(cells).floor_i64().expect("aligned endpoint") as usize;
            mask[lo..hi].iter_mut().for_each(|m| *m = true);
        }
        Ok(mask)
    }

    /// Smallest `D` such that every endpoint is a multiple of `1 / D`.
    pub fn common_denominator(&self) -> BigInt {
        self.intervals
            .iter()
            .flat_map(|(a, b)| [a.denom().clone(), b.denom().clone()])
            .fold(BigInt::one(), |acc, d| acc.lcm(&d))
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (k, (a, b)) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "[{a}, {b})")?;
        }
        Ok(())
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.intervals.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<(Rat, Rat)>::deserialize(deserializer)?;
        IntervalSet::from_pairs(pairs).map_err(serde::de::Error::custom)
    }
}

/// Nested sets `σ₁ ⊇ σ₂ ⊇ … ⊇ σ_c` encoding a finite multiplicity function
/// `m(ω) = #{i : ω ∈ σᵢ}`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SigmaChain {
    sigmas: Vec<IntervalSet>,
}

impl SigmaChain {
    pub fn new(sigmas: Vec<IntervalSet>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidChain("at least one set is required".into()));
        }
        if sigmas[0].is_empty() {
            return Err(Error::InvalidChain("σ₁ is empty".into()));
        }
        for (i, pair) in sigmas.windows(2).enumerate() {
            if !pair[1].is_subset_of(&pair[0]) {
                return Err(Error::InvalidChain(format!(
                    "σ{} is not contained in σ{}",
                    i + 2,
                    i + 1
                )));
            }
        }
        Ok(SigmaChain { sigmas })
    }

    /// The chain of a constant multiplicity `c` (every σᵢ the full circle).
    pub fn uniform(c: usize) -> Self {
        SigmaChain::new(vec![IntervalSet::full(); c.max(1)]).expect("full sets nest")
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn sigmas(&self) -> &[IntervalSet] {
        &self.sigmas
    }

    pub fn sigma(&self, i: usize) -> &IntervalSet {
        &self.sigmas[i]
    }

    pub fn multiplicity(&self, x: &TorusRat) -> usize {
        self.sigmas.iter().filter(|s| s.contains(x)).count()
    }

    pub fn aligns_with_cells(&self, cells: usize) -> bool {
        self.sigmas.iter().all(|s| s.aligns_with_cells(cells))
    }
}

impl<'de> Deserialize<'de> for SigmaChain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            sigmas: Vec<IntervalSet>,
        }
        let raw = Raw::deserialize(deserializer)?;
        SigmaChain::new(raw.sigmas).map_err(serde::de::Error::custom)
    }
}
