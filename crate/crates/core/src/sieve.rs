//! Tables of prime-factor counting functions and synthetic Gaussian-like
//! sequences.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{normal_quantile, radical_inverse_base2};
use crate::weights::{classify_weight, WeightExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThetaKind {
    BigOmega,
    SmallOmega,
    OmegaSquarefree,
    Synthetic,
}

impl ThetaKind {
    pub fn code(self) -> u8 {
        match self {
            ThetaKind::BigOmega => 0,
            ThetaKind::SmallOmega => 1,
            ThetaKind::OmegaSquarefree => 2,
            ThetaKind::Synthetic => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ThetaKind::BigOmega),
            1 => Some(ThetaKind::SmallOmega),
            2 => Some(ThetaKind::OmegaSquarefree),
            3 => Some(ThetaKind::Synthetic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ThetaKind::BigOmega => "big-omega",
            ThetaKind::SmallOmega => "small-omega",
            ThetaKind::OmegaSquarefree => "omega-squarefree",
            ThetaKind::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for ThetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThetaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "big-omega" | "bigomega" | "omega-big" => Ok(ThetaKind::BigOmega),
            "small-omega" | "smallomega" | "omega" => Ok(ThetaKind::SmallOmega),
            "omega-squarefree" | "squarefree" => Ok(ThetaKind::OmegaSquarefree),
            "synthetic" => Ok(ThetaKind::Synthetic),
            other => Err(Error::arg(format!("unknown theta kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ThetaValues {
    Narrow(Vec<u8>),
    Wide(Vec<u16>),
}

/// Values theta(1), ..., theta(N). Index j of `values` holds theta(j + 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaTable {
    kind: ThetaKind,
    values: ThetaValues,
    meta: Option<String>,
}

impl ThetaTable {
    pub fn new(kind: ThetaKind, values: ThetaValues, meta: Option<String>) -> Result<Self> {
        let len = match &values {
            ThetaValues::Narrow(v) => v.len(),
            ThetaValues::Wide(v) => v.len(),
        };
        if len == 0 {
            return Err(Error::arg("a theta table needs at least one value"));
        }
        Ok(Self { kind, values, meta })
    }

    pub fn from_u8(kind: ThetaKind, values: Vec<u8>) -> Result<Self> {
        Self::new(kind, ThetaValues::Narrow(values), None)
    }

    pub fn kind(&self) -> ThetaKind {
        self.kind
    }

    pub fn limit(&self) -> u64 {
        match &self.values {
            ThetaValues::Narrow(v) => v.len() as u64,
            ThetaValues::Wide(v) => v.len() as u64,
        }
    }

    pub fn meta(&self) -> Option<&str> {
        self.meta.as_deref()
    }

    pub fn storage(&self) -> &ThetaValues {
        &self.values
    }

    /// The 8-bit payload, if the table fits in it.
    pub fn narrow_values(&self) -> Option<&[u8]> {
        match &self.values {
            ThetaValues::Narrow(v) => Some(v),
            ThetaValues::Wide(_) => None,
        }
    }

    /// theta(n) for 1 <= n <= limit.
    ///
    /// # Panics
    /// If n is 0 or beyond the table.
    #[inline]
    pub fn get(&self, n: u64) -> u32 {
        let i = (n - 1) as usize;
        match &self.values {
            ThetaValues::Narrow(v) => v[i] as u32,
            ThetaValues::Wide(v) => v[i] as u32,
        }
    }

    pub fn checked_get(&self, n: u64) -> Option<u32> {
        (n >= 1 && n <= self.limit()).then(|| self.get(n))
    }

    /// theta(1), ..., theta(n).
    pub fn iter_to(&self, n: u64) -> ThetaIter<'_> {
        let n = n.min(self.limit()) as usize;
        match &self.values {
            ThetaValues::Narrow(v) => ThetaIter::Narrow(v[..n].iter()),
            ThetaValues::Wide(v) => ThetaIter::Wide(v[..n].iter()),
        }
    }

    pub fn iter(&self) -> ThetaIter<'_> {
        self.iter_to(self.limit())
    }

    pub fn max_value(&self) -> u32 {
        self.iter().max().unwrap_or(0)
    }
}

pub enum ThetaIter<'a> {
    Narrow(std::slice::Iter<'a, u8>),
    Wide(std::slice::Iter<'a, u16>),
}

impl Iterator for ThetaIter<'_> {
    type Item = u32;

    #[inline]
    fn next(&mut self) -> Option<u32> {
        match self {
            ThetaIter::Narrow(it) => it.next().map(|&v| v as u32),
            ThetaIter::Wide(it) => it.next().map(|&v| v as u32),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            ThetaIter::Narrow(it) => it.size_hint(),
            ThetaIter::Wide(it) => it.size_hint(),
        }
    }
}

fn alloc_zeroed<T: Clone + Default>(len: usize, what: &str) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|e| Error::Resource(format!("cannot allocate {what} of {len} entries: {e}")))?;
    v.resize(len, T::default());
    Ok(v)
}

const SQUAREFREE_FLAG: u8 = 0x80;

/// Linear sieve. For `BigOmega` the entry of n is Omega(n); otherwise it is
/// omega(n) with the top bit set when n is not squarefree.
fn linear_sieve(n: u64, big: bool) -> Result<Vec<u8>> {
    if n > u32::MAX as u64 {
        return Err(Error::arg(format!("sieve bound {n} exceeds 2^32 - 1")));
    }
    let len = n as usize;
    let mut vals: Vec<u8> = alloc_zeroed(len + 1, "sieve table")?;
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=len {
        // composites are written before they are reached, primes never are
        if vals[i] == 0 {
            primes.push(i as u32);
            vals[i] = 1;
        }
        let vi = vals[i];
        for &p in &primes {
            let m = i * p as usize;
            if m > len {
                break;
            }
            if i % p as usize == 0 {
                vals[m] = if big { vi + 1 } else { vi | SQUAREFREE_FLAG };
                break;
            }
            vals[m] = vi + 1;
        }
    }
    vals.remove(0);
    Ok(vals)
}

pub fn sieve_theta(kind: ThetaKind, n: u64) -> Result<ThetaTable> {
    if n == 0 {
        return Err(Error::arg("sieve bound must be at least 1"));
    }
    match kind {
        ThetaKind::BigOmega => ThetaTable::from_u8(kind, linear_sieve(n, true)?),
        ThetaKind::SmallOmega => {
            let mut v = linear_sieve(n, false)?;
            for x in v.iter_mut() {
                *x &= !SQUAREFREE_FLAG;
            }
            ThetaTable::from_u8(kind, v)
        }
        ThetaKind::OmegaSquarefree => {
            let v = linear_sieve(n, false)?;
            let out: Vec<u8> = v.into_iter().filter(|&x| x & SQUAREFREE_FLAG == 0).collect();
            ThetaTable::new(
                kind,
                ThetaValues::Narrow(out),
                Some(format!("squarefree numbers <= {n}")),
            )
        }
        ThetaKind::Synthetic => Err(Error::arg(
            "synthetic tables are built from a scale function, not sieved",
        )),
    }
}

/// k -> |{n <= N : theta(n) = k}|.
pub fn level_set_counts(table: &ThetaTable, n: u64) -> Result<BTreeMap<u32, u64>> {
    if n == 0 || n > table.limit() {
        return Err(Error::arg(format!(
            "N = {n} outside table range 1..={}",
            table.limit()
        )));
    }
    let mut dense: Vec<u64> = vec![0; table.max_value() as usize + 1];
    for v in table.iter_to(n) {
        dense[v as usize] += 1;
    }
    Ok(dense
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(k, c)| (k as u32, c))
        .collect())
}

/// Which scale the quantile construction centres theta(n) on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SyntheticScale {
    /// theta(n) ~ L(n) + sqrt(L(n)) Z(n): a genuine sequence.
    #[default]
    PerIndex,
    /// theta(n) ~ L(N) + sqrt(L(N)) Z(n) for every n <= N: the table is only
    /// meaningful at its own limit.
    Frozen,
}

/// theta(n) = max(1, round(L + sqrt(L) * Phi^-1(v(n)))), v the base-2
/// radical inverse, L = L(n) or L(N) depending on `scale`.
pub fn synthetic_theta(l: &WeightExpr, n: u64, scale: SyntheticScale) -> Result<ThetaTable> {
    if n == 0 {
        return Err(Error::arg("synthetic table length must be at least 1"));
    }
    let probe = n.clamp(1_000, 1_000_000);
    let class = classify_weight(l, probe);
    if !class.in_l {
        return Err(Error::arg(format!(
            "scale {l} is not an unbounded weight with 0/1 increments"
        )));
    }
    let frozen_l = l.eval(n as f64);
    let mut values: Vec<u16> = alloc_zeroed(n as usize, "synthetic table")?;
    for (i, slot) in values.iter_mut().enumerate() {
        let idx = i as u64 + 1;
        let scale_value = match scale {
            SyntheticScale::PerIndex => l.eval(idx as f64),
            SyntheticScale::Frozen => frozen_l,
        }
        .max(0.0);
        let z = normal_quantile(radical_inverse_base2(idx));
        let v = (scale_value + scale_value.sqrt() * z).round().max(1.0);
        if v > u16::MAX as f64 {
            return Err(Error::arg(format!("synthetic value {v} at n = {idx} exceeds 16 bits")));
        }
        *slot = v as u16;
    }
    let meta = match scale {
        SyntheticScale::PerIndex => format!("L = {l}"),
        SyntheticScale::Frozen => format!("L = {l} frozen at N = {n}"),
    };
    ThetaTable::new(ThetaKind::Synthetic, ThetaValues::Wide(values), Some(meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn factor_counts(mut n: u64) -> (u32, u32) {
        let (mut big, mut small) = (0, 0);
        let mut p = 2;
        while p * p <= n {
            if n.is_multiple_of(p) {
                small += 1;
                while n.is_multiple_of(p) {
                    n /= p;
                    big += 1;
                }
            }
            p += 1;
        }
        if n > 1 {
            big += 1;
            small += 1;
        }
        (big, small)
    }

    fn is_squarefree(n: u64) -> bool {
        (2..).take_while(|p| p * p <= n).all(|p| !n.is_multiple_of(p * p))
    }

    #[test]
    fn small_examples() {
        let big = sieve_theta(ThetaKind::BigOmega, 12).unwrap();
        assert_eq!(big.get(12), 3);
        let small = sieve_theta(ThetaKind::SmallOmega, 12).unwrap();
        assert_eq!(small.get(12), 2);
        let one = sieve_theta(ThetaKind::BigOmega, 1).unwrap();
        assert_eq!(one.narrow_values().unwrap(), &[0]);
        let sq = sieve_theta(ThetaKind::OmegaSquarefree, 14).unwrap();
        assert_eq!(sq.limit(), 10);
        assert_eq!(sq.get(10), 2);
        assert!(sieve_theta(ThetaKind::BigOmega, 0).is_err());
    }

    #[test]
    fn matches_trial_factorisation() {
        let n = 20_000;
        let big = sieve_theta(ThetaKind::BigOmega, n).unwrap();
        let small = sieve_theta(ThetaKind::SmallOmega, n).unwrap();
        for m in 1..=n {
            let (b, s) = factor_counts(m);
            assert_eq!(big.get(m), b, "Omega({m})");
            assert_eq!(small.get(m), s, "omega({m})");
            assert!(small.get(m) <= big.get(m));
        }
    }

    #[test]
    fn omega_agree_exactly_on_squarefree() {
        let n = 10_000;
        let big = sieve_theta(ThetaKind::BigOmega, n).unwrap();
        let small = sieve_theta(ThetaKind::SmallOmega, n).unwrap();
        for m in 1..=n {
            assert_eq!(big.get(m) == small.get(m), is_squarefree(m), "n={m}");
        }
    }

    #[test]
    fn squarefree_rank_table() {
        let brute = (1..=100u64).filter(|&m| is_squarefree(m)).count();
        assert_eq!(brute, 61);
        let sq = sieve_theta(ThetaKind::OmegaSquarefree, 100).unwrap();
        assert_eq!(sq.limit(), 61);
        let qs: Vec<u64> = (1..=100u64).filter(|&m| is_squarefree(m)).collect();
        for (j, &q) in qs.iter().enumerate() {
            assert_eq!(sq.get(j as u64 + 1), factor_counts(q).1);
        }
    }

    #[test]
    fn complete_additivity_on_random_pairs() {
        let n = 1_000_000u64;
        let big = sieve_theta(ThetaKind::BigOmega, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let a = rng.gen_range(1..=1000u64);
            let b = rng.gen_range(1..=n / a);
            assert_eq!(big.get(a * b), big.get(a) + big.get(b));
        }
    }

    #[test]
    fn level_sets() {
        let big = sieve_theta(ThetaKind::BigOmega, 10).unwrap();
        let c = level_set_counts(&big, 10).unwrap();
        assert_eq!(c, BTreeMap::from([(0, 1), (1, 4), (2, 4), (3, 1)]));
        let c2 = level_set_counts(&big, 2).unwrap();
        assert_eq!(c2, BTreeMap::from([(0, 1), (1, 1)]));
        assert!(level_set_counts(&big, 11).is_err());
    }

    #[test]
    fn synthetic_counts_sum_to_n() {
        let l: WeightExpr = "floor(sqrt(x))".parse().unwrap();
        for scale in [SyntheticScale::PerIndex, SyntheticScale::Frozen] {
            let t = synthetic_theta(&l, 5000, scale).unwrap();
            let c = level_set_counts(&t, 5000).unwrap();
            assert_eq!(c.values().sum::<u64>(), 5000);
            assert!(t.iter().all(|v| v >= 1));
        }
    }

    #[test]
    fn synthetic_rejects_non_scale_weights() {
        let bad: WeightExpr = "x^2".parse().unwrap();
        assert!(synthetic_theta(&bad, 1000, SyntheticScale::PerIndex).is_err());
    }
}
