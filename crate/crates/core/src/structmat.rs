//! Mixed structured matrices `X = Q + T`: an exact rational fixed part `Q`
//! plus a free-parameter support pattern `T`, with a randomized generic-rank
//! oracle over a large prime field.
//!
//! Free entries stand for independent indeterminates. Rank questions about
//! such matrices ("generic rank") are answered by substituting uniform random
//! nonzero field elements for every free entry and running exact Gaussian
//! elimination mod p; by Schwartz-Zippel a single trial is wrong with
//! probability at most deg/p, and trials are repeated.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::StructError;

/// Default modulus: the Mersenne prime 2^31 - 1.
pub const DEFAULT_PRIME: u64 = (1 << 31) - 1;

/// Primes just below 2^31, used when a fixed entry's denominator is divisible
/// by the current modulus.
pub const FALLBACK_PRIMES: [u64; 4] = [2_147_483_629, 2_147_483_587, 2_147_483_579, 2_147_483_563];

/// Modular arithmetic over a word-sized prime (p < 2^32 so products fit u64
/// via u128 widening is unnecessary for p < 2^31; we widen anyway for safety).
pub mod gf {
    #[inline]
    pub fn add(a: u64, b: u64, p: u64) -> u64 {
        let s = a + b;
        if s >= p {
            s - p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(a: u64, b: u64, p: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + p - b
        }
    }

    #[inline]
    pub fn mul(a: u64, b: u64, p: u64) -> u64 {
        ((a as u128 * b as u128) % p as u128) as u64
    }

    pub fn pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
        let mut acc = 1u64;
        base %= p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul(acc, base, p);
            }
            base = mul(base, base, p);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem. `a` must be nonzero mod p.
    pub fn inv(a: u64, p: u64) -> u64 {
        debug_assert!(!a.is_multiple_of(p));
        pow(a, p - 2, p)
    }
}

/// Deterministic splittable pseudorandom stream (splitmix64 core).
///
/// Substitutions, graph generation, and Monte-Carlo draws all pull from
/// streams forked off a single run seed, so every artifact is reproducible
/// from the seed alone.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream {
            state: seed ^ 0x9e37_79b9_7f4a_7c15,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n` (n > 0) by rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform f64 in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Child stream decorrelated from this one; advancing the child does not
    /// disturb the parent position.
    pub fn fork(&mut self, tag: u64) -> Stream {
        let s = self.next_u64();
        Stream::new(s ^ tag.wrapping_mul(0xd134_2543_de82_ef95))
    }

    /// Uniform nonzero field element.
    pub fn next_nonzero(&mut self, p: u64) -> u64 {
        1 + self.next_below(p - 1)
    }
}

/// Configuration for field substitution and randomized rank trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub prime: u64,
    pub trials: u32,
    pub seed: u64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            prime: DEFAULT_PRIME,
            trials: 3,
            seed: 0,
        }
    }
}

impl FieldConfig {
    pub fn with_seed(seed: u64) -> Self {
        FieldConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), StructError> {
        if self.prime < (1 << 30) {
            return Err(StructError::BadFieldConfig(format!(
                "prime {} below 2^30",
                self.prime
            )));
        }
        if self.trials == 0 {
            return Err(StructError::BadFieldConfig("trials must be >= 1".into()));
        }
        Ok(())
    }

    /// Single-trial Schwartz-Zippel failure bound for a degree-`deg` identity.
    pub fn failure_bound(&self, deg: usize) -> f64 {
        (deg as f64 / self.prime as f64).powi(self.trials as i32)
    }
}

/// Dense matrix over GF(p), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseFieldMatrix {
    pub rows: usize,
    pub cols: usize,
    pub prime: u64,
    pub entries: Vec<u64>,
}

impl DenseFieldMatrix {
    pub fn zero(rows: usize, cols: usize, prime: u64) -> Self {
        DenseFieldMatrix {
            rows,
            cols,
            prime,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, prime: u64) -> Self {
        let mut m = Self::zero(n, n, prime);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.entries[r * self.cols + c] = v % self.prime;
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// Rank over GF(p) by exact Gaussian elimination.
pub fn rank_gf(m: &DenseFieldMatrix) -> usize {
    let mut a = m.entries.clone();
    rank_gf_in_place(&mut a, m.rows, m.cols, m.prime)
}

pub(crate) fn rank_gf_in_place(a: &mut [u64], rows: usize, cols: usize, p: u64) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = (rank..rows).find(|&r| a[r * cols + col] != 0);
        let Some(pr) = pivot else { continue };
        if pr != rank {
            for c in 0..cols {
                a.swap(rank * cols + c, pr * cols + c);
            }
        }
        let inv = gf::inv(a[rank * cols + col], p);
        for r in rank + 1..rows {
            let factor = a[r * cols + col];
            if factor == 0 {
                continue;
            }
            let scale = gf::mul(factor, inv, p);
            for c in col..cols {
                let sub = gf::mul(scale, a[rank * cols + c], p);
                a[r * cols + c] = gf::sub(a[r * cols + c], sub, p);
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of a set of column vectors (all the same length) over GF(p).
pub fn rank_of_columns(cols: &[&[u64]], p: u64) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let rows = cols[0].len();
    let n = cols.len();
    let mut a = vec![0u64; rows * n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            a[i * n + j] = v;
        }
    }
    rank_gf_in_place(&mut a, rows, n, p)
}

/// Mixed structured matrix: exact rational fixed part plus free support.
///
/// A position may carry both a fixed value q and a free marker; the entry is
/// then q + t with t an independent free parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredMatrix {
    pub rows: usize,
    pub cols: usize,
    pub fixed: BTreeMap<(usize, usize), BigRational>,
    pub free: BTreeSet<(usize, usize)>,
}

impl StructuredMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        StructuredMatrix {
            rows,
            cols,
            fixed: BTreeMap::new(),
            free: BTreeSet::new(),
        }
    }

    pub fn set_fixed_int(&mut self, r: usize, c: usize, v: i64) {
        self.check(r, c);
        if v == 0 {
            self.fixed.remove(&(r, c));
        } else {
            self.fixed
                .insert((r, c), BigRational::from_integer(BigInt::from(v)));
        }
    }

    pub fn set_fixed(&mut self, r: usize, c: usize, v: BigRational) {
        self.check(r, c);
        if v.is_zero() {
            self.fixed.remove(&(r, c));
        } else {
            self.fixed.insert((r, c), v);
        }
    }

    pub fn set_free(&mut self, r: usize, c: usize) {
        self.check(r, c);
        self.free.insert((r, c));
    }

    fn check(&self, r: usize, c: usize) {
        assert!(
            r < self.rows && c < self.cols,
            "position ({r},{c}) out of bounds for {}x{}",
            self.rows,
            self.cols
        );
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n, n);
        for i in 0..n {
            m.set_fixed_int(i, i, 1);
        }
        m
    }

    /// Horizontal concatenation [self | other].
    pub fn hconcat(&self, other: &StructuredMatrix) -> StructuredMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = StructuredMatrix::new(self.rows, self.cols + other.cols);
        for (&(r, c), v) in &self.fixed {
            out.fixed.insert((r, c), v.clone());
        }
        for &(r, c) in &self.free {
            out.free.insert((r, c));
        }
        for (&(r, c), v) in &other.fixed {
            out.fixed.insert((r, c + self.cols), v.clone());
        }
        for &(r, c) in &other.free {
            out.free.insert((r, c + self.cols));
        }
        out
    }

    /// Vertical concatenation [self; other].
    pub fn vconcat(&self, other: &StructuredMatrix) -> StructuredMatrix {
        assert_eq!(self.cols, other.cols);
        let mut out = StructuredMatrix::new(self.rows + other.rows, self.cols);
        for (&(r, c), v) in &self.fixed {
            out.fixed.insert((r, c), v.clone());
        }
        for &(r, c) in &self.free {
            out.free.insert((r, c));
        }
        for (&(r, c), v) in &other.fixed {
            out.fixed.insert((r + self.rows, c), v.clone());
        }
        for &(r, c) in &other.free {
            out.free.insert((r + self.rows, c));
        }
        out
    }

    pub fn fixed_at(&self, r: usize, c: usize) -> BigRational {
        self.fixed
            .get(&(r, c))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_free(&self, r: usize, c: usize) -> bool {
        self.free.contains(&(r, c))
    }

    /// Reduce a rational to GF(p). Errors when the denominator vanishes mod p.
    pub fn reduce_mod(v: &BigRational, p: u64) -> Result<u64, StructError> {
        let pb = BigInt::from(p);
        let num = v.numer().mod_floor_big(&pb);
        let den = v.denom().mod_floor_big(&pb);
        if den == 0 {
            return Err(StructError::DenominatorDivisible(p));
        }
        Ok(gf::mul(num, gf::inv(den, p), p))
    }
}

trait ModFloorBig {
    fn mod_floor_big(&self, p: &BigInt) -> u64;
}

impl ModFloorBig for BigInt {
    fn mod_floor_big(&self, p: &BigInt) -> u64 {
        let mut m = self % p;
        if m.is_negative() {
            m += p;
        }
        let (_, digits) = m.to_u64_digits();
        match digits.len() {
            0 => 0,
            1 => digits[0],
            _ => unreachable!("residue exceeds u64"),
        }
    }
}

/// Substitute free entries with independent uniform nonzero field elements,
/// added onto the fixed part reduced mod p. Deterministic given the stream
/// position.
pub fn substitute(
    m: &StructuredMatrix,
    cfg: &FieldConfig,
    draw: &mut Stream,
) -> Result<DenseFieldMatrix, StructError> {
    cfg.validate()?;
    let p = cfg.prime;
    let mut out = DenseFieldMatrix::zero(m.rows, m.cols, p);
    for (&(r, c), v) in &m.fixed {
        out.set(r, c, StructuredMatrix::reduce_mod(v, p)?);
    }
    for &(r, c) in &m.free {
        let t = draw.next_nonzero(p);
        let cur = out.get(r, c);
        out.set(r, c, gf::add(cur, t, p));
    }
    Ok(out)
}

/// Generic (structural) rank: max rank over `cfg.trials` independent
/// substitutions. Falls back to alternate primes when a fixed denominator is
/// divisible by the modulus.
pub fn generic_rank(m: &StructuredMatrix, cfg: &FieldConfig) -> Result<usize, StructError> {
    cfg.validate()?;
    let mut primes = vec![cfg.prime];
    primes.extend(FALLBACK_PRIMES.iter().copied());
    let mut last_err = None;
    for (k, &p) in primes.iter().enumerate() {
        let cfg_p = FieldConfig {
            prime: p,
            ..cfg.clone()
        };
        let mut stream = Stream::new(cfg.seed ^ (k as u64) << 32);
        let mut best = 0;
        let mut ok = true;
        for t in 0..cfg.trials {
            let mut s = stream.fork(t as u64);
            match substitute(m, &cfg_p, &mut s) {
                Ok(d) => best = best.max(rank_gf(&d)),
                Err(e) => {
                    last_err = Some(e);
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(best);
        }
    }
    Err(last_err.unwrap_or_else(|| StructError::BadFieldConfig("no usable prime".into())))
}

/// Exact rank of the fixed part alone (free entries ignored), by rational
/// Gaussian elimination. Test oracle for matrices without free entries.
pub fn exact_rank_fixed(m: &StructuredMatrix) -> usize {
    let mut a: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); m.cols]; m.rows];
    for (&(r, c), v) in &m.fixed {
        a[r][c] = v.clone();
    }
    rational_rank(&mut a)
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn rational_rank(a: &mut [Vec<BigRational>]) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pr) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pr);
        let inv = a[rank][col].recip();
        for r in rank + 1..rows {
            if a[r][col].is_zero() {
                continue;
            }
            let scale = &a[r][col] * &inv;
            for c in col..cols {
                let sub = &scale * &a[rank][c];
                a[r][c] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

fn rational_to_string(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

fn rational_from_string(s: &str) -> Result<BigRational, String> {
    let parse_int =
        |t: &str| BigInt::from_str(t.trim()).map_err(|e| format!("bad integer {t:?}: {e}"));
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(s)?)),
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err("zero denominator".into());
            }
            Ok(BigRational::new(parse_int(n)?, den))
        }
    }
}

impl fmt::Display for StructuredMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{} structured matrix", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let q = self.fixed_at(r, c);
                let t = self.is_free(r, c);
                let cell = match (q.is_zero(), t) {
                    (true, false) => ".".to_string(),
                    (false, false) => rational_to_string(&q),
                    (true, true) => "*".to_string(),
                    (false, true) => format!("{}+*", rational_to_string(&q)),
                };
                write!(f, "{cell:>6} ")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

// JSON schema: {"rows":n,"cols":m,"fixed":[[r,c,"p/q"],...],"free":[[r,c],...]}
#[derive(Serialize, Deserialize)]
struct StructuredMatrixWire {
    rows: usize,
    cols: usize,
    fixed: Vec<(usize, usize, String)>,
    free: Vec<(usize, usize)>,
}

impl Serialize for StructuredMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = StructuredMatrixWire {
            rows: self.rows,
            cols: self.cols,
            fixed: self
                .fixed
                .iter()
                .map(|(&(r, c), v)| (r, c, rational_to_string(v)))
                .collect(),
            free: self.free.iter().copied().collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StructuredMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = StructuredMatrixWire::deserialize(deserializer)?;
        let mut m = StructuredMatrix::new(wire.rows, wire.cols);
        for (r, c, s) in wire.fixed {
            if r >= wire.rows || c >= wire.cols {
                return Err(D::Error::custom(format!(
                    "fixed position ({r},{c}) out of bounds"
                )));
            }
            let v = rational_from_string(&s).map_err(D::Error::custom)?;
            m.set_fixed(r, c, v);
        }
        for (r, c) in wire.free {
            if r >= wire.rows || c >= wire.cols {
                return Err(D::Error::custom(format!(
                    "free position ({r},{c}) out of bounds"
                )));
            }
            m.set_free(r, c);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> FieldConfig {
        FieldConfig::with_seed(seed)
    }

    #[test]
    fn substitute_fixed_only() {
        let mut m = StructuredMatrix::new(1, 1);
        m.set_fixed_int(0, 0, 1);
        let d = substitute(&m, &cfg(1), &mut Stream::new(1)).unwrap();
        assert_eq!(d.get(0, 0), 1);
    }

    #[test]
    fn substitute_all_free_nonzero() {
        let mut m = StructuredMatrix::new(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                m.set_free(r, c);
            }
        }
        let d = substitute(&m, &cfg(7), &mut Stream::new(7)).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_ne!(d.get(r, c), 0);
            }
        }
    }

    #[test]
    fn substitute_deterministic() {
        let mut m = StructuredMatrix::new(3, 3);
        m.set_free(0, 1);
        m.set_free(2, 2);
        m.set_fixed_int(1, 1, -5);
        let a = substitute(&m, &cfg(42), &mut Stream::new(42)).unwrap();
        let b = substitute(&m, &cfg(42), &mut Stream::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rank_identity_and_zero() {
        let p = DEFAULT_PRIME;
        assert_eq!(rank_gf(&DenseFieldMatrix::identity(3, p)), 3);
        assert_eq!(rank_gf(&DenseFieldMatrix::zero(2, 5, p)), 0);
    }

    #[test]
    fn rank_proportional_rows() {
        let p = DEFAULT_PRIME;
        let mut d = DenseFieldMatrix::zero(2, 2, p);
        d.set(0, 0, 1);
        d.set(0, 1, 2);
        d.set(1, 0, 2);
        d.set(1, 1, 4);
        assert_eq!(rank_gf(&d), 1);
    }

    #[test]
    fn generic_rank_diagonal_free() {
        let mut m = StructuredMatrix::new(2, 2);
        m.set_free(0, 0);
        m.set_free(1, 1);
        assert_eq!(generic_rank(&m, &cfg(3)).unwrap(), 2);
    }

    #[test]
    fn generic_rank_fixed_rank_one() {
        let mut m = StructuredMatrix::new(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                m.set_fixed_int(r, c, 1);
            }
        }
        assert_eq!(generic_rank(&m, &cfg(3)).unwrap(), 1);
    }

    /// Brute-force generic rank: maximum rank over every assignment of the
    /// free entries from GF(q). Only usable for a handful of free entries.
    fn brute_generic_rank_gf5(m: &StructuredMatrix) -> usize {
        let q: u64 = 5;
        let free: Vec<(usize, usize)> = m.free.iter().copied().collect();
        let mut best = 0;
        let combos = q.pow(free.len() as u32);
        for mask in 0..combos {
            let mut d = DenseFieldMatrix::zero(m.rows, m.cols, q);
            for (&(r, c), v) in &m.fixed {
                d.set(r, c, StructuredMatrix::reduce_mod(v, q).unwrap());
            }
            let mut k = mask;
            for &(r, c) in &free {
                let t = k % q;
                k /= q;
                let cur = d.get(r, c);
                d.set(r, c, gf::add(cur, t, q));
            }
            best = best.max(rank_gf(&d));
        }
        best
    }

    #[test]
    fn generic_rank_chain_matches_gf5_enumeration() {
        // 3x3 free pattern {(1,0),(2,1)}: expected rank 2 by enumeration.
        let mut m = StructuredMatrix::new(3, 3);
        m.set_free(1, 0);
        m.set_free(2, 1);
        assert_eq!(brute_generic_rank_gf5(&m), 2);
        assert_eq!(generic_rank(&m, &cfg(11)).unwrap(), 2);
    }

    #[test]
    fn generic_rank_matches_enumeration_random_patterns() {
        let mut st = Stream::new(2024);
        for trial in 0..30 {
            let rows = 2 + (st.next_below(3) as usize);
            let cols = 2 + (st.next_below(3) as usize);
            let mut m = StructuredMatrix::new(rows, cols);
            let mut nfree = 0;
            for r in 0..rows {
                for c in 0..cols {
                    match st.next_below(4) {
                        0 => m.set_fixed_int(r, c, (st.next_below(5) as i64) - 2),
                        1 if nfree < 6 => {
                            m.set_free(r, c);
                            nfree += 1;
                        }
                        _ => {}
                    }
                }
            }
            assert_eq!(
                generic_rank(&m, &cfg(trial)).unwrap(),
                brute_generic_rank_gf5(&m),
                "pattern {m}"
            );
        }
    }

    #[test]
    fn generic_rank_monotone_in_free_support() {
        let mut st = Stream::new(55);
        for trial in 0..20 {
            let mut m = StructuredMatrix::new(3, 4);
            for r in 0..3 {
                for c in 0..4 {
                    if st.next_below(3) == 0 {
                        m.set_fixed_int(r, c, (st.next_below(3) as i64) - 1);
                    }
                }
            }
            let base = generic_rank(&m, &cfg(trial)).unwrap();
            let mut bigger = m.clone();
            bigger.set_free(st.next_below(3) as usize, st.next_below(4) as usize);
            let after = generic_rank(&bigger, &cfg(trial)).unwrap();
            assert!(after >= base);
            assert!(after <= 3); // min(rows, cols)
        }
    }

    #[test]
    fn fixed_only_matches_exact_rational_rank() {
        let mut st = Stream::new(77);
        for _ in 0..25 {
            let mut m = StructuredMatrix::new(4, 4);
            for r in 0..4 {
                for c in 0..4 {
                    if st.next_below(2) == 0 {
                        let num = (st.next_below(7) as i64) - 3;
                        let den = 1 + st.next_below(3) as i64;
                        m.set_fixed(r, c, BigRational::new(BigInt::from(num), BigInt::from(den)));
                    }
                }
            }
            assert_eq!(generic_rank(&m, &cfg(9)).unwrap(), exact_rank_fixed(&m));
        }
    }

    #[test]
    fn fallback_prime_on_divisible_denominator() {
        let mut m = StructuredMatrix::new(1, 1);
        m.set_fixed(
            0,
            0,
            BigRational::new(BigInt::from(1), BigInt::from(DEFAULT_PRIME)),
        );
        // substitution with the default prime fails...
        assert!(matches!(
            substitute(&m, &cfg(0), &mut Stream::new(0)),
            Err(StructError::DenominatorDivisible(_))
        ));
        // ...but generic_rank falls back to an alternate prime.
        assert_eq!(generic_rank(&m, &cfg(0)).unwrap(), 1);
    }

    #[test]
    fn serde_round_trip_exact() {
        let mut m = StructuredMatrix::new(3, 4);
        m.set_fixed(0, 0, BigRational::new(BigInt::from(-7), BigInt::from(3)));
        m.set_fixed_int(2, 3, 11);
        m.set_free(1, 2);
        m.set_free(0, 0);
        let json = serde_json::to_string(&m).unwrap();
        let back: StructuredMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        assert!(json.contains("\"-7/3\""));
    }

    #[test]
    fn serde_round_trip_randomized() {
        let mut st = Stream::new(404);
        for _ in 0..50 {
            let rows = 1 + st.next_below(5) as usize;
            let cols = 1 + st.next_below(5) as usize;
            let mut m = StructuredMatrix::new(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    if st.next_below(3) == 0 {
                        let num = (st.next_below(19) as i64) - 9;
                        let den = 1 + st.next_below(6) as i64;
                        m.set_fixed(r, c, BigRational::new(BigInt::from(num), BigInt::from(den)));
                    }
                    if st.next_below(3) == 0 {
                        m.set_free(r, c);
                    }
                }
            }
            let json = serde_json::to_string(&m).unwrap();
            let back: StructuredMatrix = serde_json::from_str(&json).unwrap();
            assert_eq!(m, back);
        }
    }
}
