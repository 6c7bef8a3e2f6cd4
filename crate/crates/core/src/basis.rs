//! Fixed-Hamming-weight bases: enumeration, ranking and RBS partner pairs.
//!
//! Bitstrings are stored as the low `n` bits of a `u64` with qubit 0 in the
//! most significant position, so the canonical basis order (ascending binary
//! value) is plain integer order. Ranks use the combinatorial number system:
//! for a string whose set bits sit at integer positions `c_1 < ... < c_k`
//! (counted from the least significant bit), `rank = sum_i C(c_i, i)`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported qubit count.
pub const MAX_QUBITS: usize = 64;
/// Largest supported basis dimension.
pub const MAX_DIM: u64 = 1 << 32;

fn pascal() -> &'static [[u64; 65]; 65] {
    static TABLE: OnceLock<Box<[[u64; 65]; 65]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[0u64; 65]; 65]);
        for n in 0..=64 {
            t[n][0] = 1;
            for k in 1..=n {
                // C(64, k) peaks at C(64, 32) < 2^61, so no entry overflows.
                t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            }
        }
        t
    })
}

/// Exact binomial coefficient, `0` when `k > n`.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if n > MAX_QUBITS {
        return Err(Error::BinomialOverflow { n, k });
    }
    if k > n {
        return Ok(0);
    }
    Ok(pascal()[n][k])
}

#[inline]
fn choose(n: usize, k: usize) -> u64 {
    if k > n {
        0
    } else {
        pascal()[n][k]
    }
}

/// An `n`-qubit computational basis string.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: u64,
    n: u8,
}

impl BitString {
    /// Wraps the low `n` bits of `bits`; qubit 0 is bit `n - 1`.
    pub fn from_bits(bits: u64, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::UnsupportedScale { n, k: 0 });
        }
        if n < 64 && bits >> n != 0 {
            return Err(Error::QubitOutOfRange {
                qubit: 64 - bits.leading_zeros() as usize,
                n,
            });
        }
        Ok(BitString { bits, n: n as u8 })
    }

    /// Builds the string with exactly the listed qubits set.
    pub fn from_qubits(qubits: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let mut b = BitString::from_bits(0, n)?;
        for q in qubits {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, n });
            }
            b.bits |= 1u64 << (n - 1 - q);
        }
        Ok(b)
    }

    #[inline]
    pub(crate) fn from_raw(bits: u64, n: usize) -> Self {
        BitString { bits, n: n as u8 }
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn hamming_weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Value of qubit `q` (0 = leftmost).
    #[inline]
    pub fn qubit(&self, q: usize) -> bool {
        (self.bits >> (self.n as usize - 1 - q)) & 1 == 1
    }

    /// Indices of the set qubits, ascending.
    pub fn set_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&q| self.qubit(q))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.len() {
            f.write_str(if self.qubit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}>")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            bits = (bits << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::parse(i, format!("invalid bit character {c:?}"))),
                };
        }
        BitString::from_bits(bits, s.len())
    }
}

/// Next integer with the same popcount (Gosper's hack); `x` must be nonzero.
#[inline]
fn next_same_weight(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x.wrapping_add(c);
    (((r ^ x) >> 2) / c) | r
}

/// Bijection between `n`-bit strings of weight `k` and `0..C(n,k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndexer {
    n: usize,
    k: usize,
    dim: usize,
}

impl BasisIndexer {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS || k > n {
            return Err(Error::UnsupportedScale { n, k });
        }
        let dim = binomial(n, k)?;
        if dim > MAX_DIM {
            return Err(Error::UnsupportedScale { n, k });
        }
        Ok(BasisIndexer {
            n,
            k,
            dim: dim as usize,
        })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Position of `b` in ascending basis order.
    pub fn rank(&self, b: BitString) -> Result<usize> {
        if b.len() != self.n {
            return Err(Error::UnsupportedScale { n: b.len(), k: self.k });
        }
        let w = b.hamming_weight();
        if w != self.k {
            return Err(Error::WrongWeight {
                expected: self.k,
                got: w,
            });
        }
        Ok(self.rank_bits(b.bits))
    }

    #[inline]
    pub(crate) fn rank_bits(&self, mut bits: u64) -> usize {
        let mut r = 0u64;
        let mut i = 1;
        while bits != 0 {
            let c = bits.trailing_zeros() as usize;
            r += choose(c, i);
            i += 1;
            bits &= bits - 1;
        }
        r as usize
    }

    pub fn unrank(&self, index: usize) -> Result<BitString> {
        if index >= self.dim {
            return Err(Error::IndexOutOfRange { index, dim: self.dim });
        }
        let mut ordinal = index as u64;
        let mut ones = self.k;
        let mut bits = 0u64;
        for pos in (0..self.n).rev() {
            if ones == 0 {
                break;
            }
            let c = choose(pos, ones);
            if ordinal >= c {
                ordinal -= c;
                bits |= 1u64 << pos;
                ones -= 1;
            }
        }
        Ok(BitString::from_raw(bits, self.n))
    }

    /// All basis strings in ascending order.
    pub fn iter(&self) -> BasisIter {
        BasisIter {
            next: match self.k {
                0 => 0,
                64 => u64::MAX,
                k => (1u64 << k) - 1,
            },
            remaining: self.dim,
            n: self.n,
        }
    }

    /// Partner pairs of an RBS gate on qubits `(p, q)`.
    ///
    /// Each pair `(i, j)` has `unrank(i)` with `(bit_p, bit_q) = (0, 1)` and
    /// `unrank(j)` the same string with those two bits swapped to `(1, 0)`.
    /// Every other index is listed in `fixed`.
    pub fn rbs_partner_pairs(&self, p: usize, q: usize) -> Result<PartnerPairs> {
        if p == q {
            return Err(Error::SameQubit(p));
        }
        for x in [p, q] {
            if x >= self.n {
                return Err(Error::QubitOutOfRange { qubit: x, n: self.n });
            }
        }
        let mp = 1u64 << (self.n - 1 - p);
        let mq = 1u64 << (self.n - 1 - q);
        let n_pairs = if self.k == 0 || self.n < 2 {
            0
        } else {
            choose(self.n - 2, self.k - 1) as usize
        };
        let mut pairs = Vec::with_capacity(n_pairs);
        let mut fixed = Vec::with_capacity(self.dim - n_pairs * 2);
        for (i, b) in self.iter().enumerate() {
            let bits = b.bits;
            match (bits & mp != 0, bits & mq != 0) {
                (false, true) => pairs.push((i, self.rank_bits((bits | mp) & !mq))),
                (true, false) => {}
                _ => fixed.push(i),
            }
        }
        Ok(PartnerPairs { pairs, fixed })
    }
}

/// Result of [`BasisIndexer::rbs_partner_pairs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartnerPairs {
    pub pairs: Vec<(usize, usize)>,
    pub fixed: Vec<usize>,
}

pub struct BasisIter {
    next: u64,
    remaining: usize,
    n: usize,
}

impl Iterator for BasisIter {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        if self.remaining == 0 {
            return None;
        }
        let cur = self.next;
        self.remaining -= 1;
        if self.remaining > 0 {
            self.next = next_same_weight(cur);
        }
        Some(BitString::from_raw(cur, self.n))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for BasisIter {}

/// All `n`-bit strings of weight `k` in ascending order.
pub fn enumerate_basis(n: usize, k: usize) -> Result<Vec<BitString>> {
    Ok(BasisIndexer::new(n, k)?.iter().collect())
}
