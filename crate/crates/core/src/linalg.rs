//! Exact integer linear algebra: ranks over Q and GF(p), binary vector
//! families and MDS (Vandermonde) generator matrices.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_dims<V: AsRef<[i64]>>(vectors: &[V]) -> Result<usize> {
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    if let Some(v) = vectors.iter().find(|v| v.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} among vectors of length {dim}",
            v.as_ref().len()
        )));
    }
    Ok(dim)
}

/// Rank over the rationals of the span of `vectors` (all of equal length).
///
/// Fraction-free Bareiss elimination in `i128`; on overflow the elimination
/// restarts in arbitrary precision.
pub fn rank_exact<V: AsRef<[i64]>>(vectors: &[V]) -> Result<usize> {
    check_dims(vectors)?;
    let rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.as_ref().iter().map(|&x| x as i128).collect())
        .collect();
    match bareiss_i128(rows) {
        Some(r) => Ok(r),
        None => {
            let rows = vectors
                .iter()
                .map(|v| v.as_ref().iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            Ok(bareiss_big(rows))
        }
    }
}

fn bareiss_i128(mut a: Vec<Vec<i128>>) -> Option<usize> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut prev: i128 = 1;
    let mut rank = 0;
    for col in 0..n {
        if rank == m {
            break;
        }
        let Some(p) = (rank..m).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..m {
            for j in col + 1..n {
                let lhs = a[rank][col].checked_mul(a[i][j])?;
                let rhs = a[i][col].checked_mul(a[rank][j])?;
                a[i][j] = lhs.checked_sub(rhs)? / prev;
            }
            a[i][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
    }
    Some(rank)
}

fn bareiss_big(mut a: Vec<Vec<BigInt>>) -> usize {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..n {
        if rank == m {
            break;
        }
        let Some(p) = (rank..m).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..m {
            for j in col + 1..n {
                let v = (&a[rank][col] * &a[i][j] - &a[i][col] * &a[rank][j]) / &prev;
                a[i][j] = v;
            }
            a[i][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Rank over GF(p) of `vectors`, entries reduced modulo the prime `p`.
pub fn rank_gfp<V: AsRef<[i64]>>(vectors: &[V], p: u64) -> Result<usize> {
    check_dims(vectors)?;
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not prime")));
    }
    let p = p as i128;
    let mut a: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.as_ref().iter().map(|&x| (x as i128).rem_euclid(p)).collect())
        .collect();
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..n {
        if rank == m {
            break;
        }
        let Some(piv) = (rank..m).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = mod_pow(a[rank][col], p - 2, p);
        for j in col..n {
            a[rank][j] = a[rank][j] * inv % p;
        }
        for i in rank + 1..m {
            let f = a[i][col];
            if f != 0 {
                for j in col..n {
                    a[i][j] = (a[i][j] - f * a[rank][j]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    Ok(rank)
}

fn mod_pow(mut base: i128, mut exp: i128, p: i128) -> i128 {
    let mut acc = 1;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn smallest_prime_at_least(n: u64) -> u64 {
    (n.max(2)..).find(|&q| is_prime(q)).expect("primes are unbounded")
}

/// The binary vector with index `k` in dimension `dim`: entry `i` is bit `i`
/// of `k`. Indices run over `1..2^dim`.
pub fn binary_vector(k: usize, dim: usize) -> Vec<i64> {
    (0..dim).map(|i| ((k >> i) & 1) as i64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Vandermonde generator over GF(prime); any `dim` columns independent.
    Mds { prime: u64 },
    /// All nonzero 0-1 columns in index order.
    BinaryEnumeration,
}

/// An ordered list of integer columns of common length `dim`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorFamily {
    pub dim: usize,
    pub kind: FamilyKind,
    pub vectors: Vec<Vec<i64>>,
}

impl VectorFamily {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Column for a 1-based color or vector index.
    pub fn column(&self, index: u32) -> &[i64] {
        &self.vectors[index as usize - 1]
    }

    /// For MDS families, exhaustively confirms that every `dim`-subset of
    /// columns has full rank over GF(prime); `C(len, dim)` eliminations.
    /// Binary families always hold by construction.
    pub fn certify(&self) -> bool {
        match self.kind {
            FamilyKind::BinaryEnumeration => true,
            FamilyKind::Mds { prime } => for_each_subset(self.len(), self.dim, &mut |idx| {
                let cols: Vec<&[i64]> = idx.iter().map(|&i| self.vectors[i].as_slice()).collect();
                rank_gfp(&cols, prime).is_ok_and(|rk| rk == self.dim)
            }),
        }
    }
}

/// All `2^dim - 1` nonzero binary vectors, in index order (`1 <= dim <= 16`).
pub fn binary_vectors(dim: usize) -> Result<VectorFamily> {
    if !(1..=16).contains(&dim) {
        return Err(Error::InvalidParameter(format!(
            "binary family dimension must be in 1..=16, got {dim}"
        )));
    }
    Ok(VectorFamily {
        dim,
        kind: FamilyKind::BinaryEnumeration,
        vectors: (1..1usize << dim).map(|k| binary_vector(k, dim)).collect(),
    })
}

/// Largest `K` for which construction runs the exhaustive self-check.
pub const MDS_SELF_CERTIFY_MAX_K: usize = 12;

/// `r x K` Vandermonde generator on the points `0..K` of GF(p), entries kept
/// as integers in `0..p`. Every `r`-subset of columns is nonsingular modulo
/// `p`, hence over Q.
pub fn mds_generator(k: usize, r: usize, p: u64) -> Result<VectorFamily> {
    if r == 0 || r > k {
        return Err(Error::InvalidParameter(format!(
            "MDS code needs 1 <= r <= K, got r={r}, K={k}"
        )));
    }
    if !is_prime(p) || p < k as u64 {
        return Err(Error::InvalidParameter(format!(
            "need a prime p >= K={k} for distinct evaluation points, got {p}"
        )));
    }
    let vectors = (0..k as u64)
        .map(|x| {
            let mut v = Vec::with_capacity(r);
            let mut acc = 1u64;
            for _ in 0..r {
                v.push(acc as i64);
                acc = acc * x % p;
            }
            v
        })
        .collect();
    let family = VectorFamily {
        dim: r,
        kind: FamilyKind::Mds { prime: p },
        vectors,
    };
    if k <= MDS_SELF_CERTIFY_MAX_K && !family.certify() {
        return Err(Error::Uncertified);
    }
    Ok(family)
}

/// [`mds_generator`] over the smallest prime field with at least `K` elements.
pub fn mds_default(k: usize, r: usize) -> Result<VectorFamily> {
    mds_generator(k, r, smallest_prime_at_least(k as u64))
}

fn for_each_subset(k: usize, r: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    fn rec(
        start: usize,
        k: usize,
        r: usize,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == r {
            return f(cur);
        }
        for i in start..k {
            if k - i < r - cur.len() {
                break;
            }
            cur.push(i);
            if !rec(i + 1, k, r, cur, f) {
                return false;
            }
            cur.pop();
        }
        true
    }
    rec(0, k, r, &mut Vec::with_capacity(r), f)
}

/// Largest absolute entry, used to bound arithmetic in tests and logs.
pub fn max_abs_entry<V: AsRef<[i64]>>(vectors: &[V]) -> i64 {
    vectors
        .iter()
        .flat_map(|v| v.as_ref().iter())
        .map(|x| x.abs())
        .max()
        .unwrap_or(0)
}

/// Sum of integer vectors of equal length.
pub fn vector_sum<V: AsRef<[i64]>>(dim: usize, vectors: &[V]) -> Vec<i64> {
    let mut acc = vec![0i64; dim];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v.as_ref()) {
            *a += x;
        }
    }
    acc
}
