//! Segmented factorization sieve and square-free kernels.

use crate::error::{Error, Result};
use crate::par;

/// Largest index any arithmetic sieve will touch.
pub const SIEVE_CAPACITY: u64 = 100_000_000;

const SEGMENT: usize = 1 << 16;

/// Primes `<= limit` by the plain sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub(crate) fn check_capacity(end: u64) -> Result<()> {
    if end > SIEVE_CAPACITY + 1 {
        return Err(Error::Capacity {
            requested: end - 1,
            capacity: SIEVE_CAPACITY,
        });
    }
    Ok(())
}

/// Fold a per-index accumulator over the prime factorization of every
/// `n` in `start..start+len`.
///
/// `apply(acc, p, a)` is called once per prime power `p^a || n`. Index 0
/// keeps `init`. Work is split into segments that may run in parallel; the
/// output is in index order.
pub fn factor_fold<T, F>(start: u64, len: usize, init: T, apply: F) -> Result<Vec<T>>
where
    T: Clone + Send + Sync,
    F: Fn(&mut T, u64, u32) + Sync + Send,
{
    let end = start + len as u64;
    check_capacity(end)?;
    let small = primes_up_to(isqrt(end.saturating_sub(1)));
    let mut out = vec![init.clone(); len];
    par::for_each_chunk(&mut out, SEGMENT, |offset, acc| {
        let lo = start + offset as u64;
        let mut rem: Vec<u64> = (lo..lo + acc.len() as u64).collect();
        let hi = lo + acc.len() as u64;
        for &p in &small {
            if p * p >= hi {
                break;
            }
            let first = lo.div_ceil(p) * p;
            let mut m = first.max(p);
            while m < hi {
                let i = (m - lo) as usize;
                let mut a = 0;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    a += 1;
                }
                apply(&mut acc[i], p, a);
                m += p;
            }
        }
        for (i, r) in rem.iter().enumerate() {
            if *r > 1 {
                apply(&mut acc[i], *r, 1);
            }
        }
    });
    Ok(out)
}

/// `mu[n]` for `0 <= n <= limit`, with `mu[0] = 0`.
pub fn moebius_sieve(limit: u64) -> Result<Vec<i8>> {
    if limit < 1 {
        return Err(Error::param("moebius_sieve needs limit >= 1"));
    }
    let mut mu = factor_fold(0, limit as usize + 1, 1i8, |m, _, a| {
        *m = if a >= 2 { 0 } else { -*m };
    })?;
    mu[0] = 0;
    Ok(mu)
}

/// Square-free kernel as the sorted list of primes dividing `n` to an odd
/// power. The empty list means `n` is a perfect square.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Kernel(pub Vec<u64>);

impl Kernel {
    /// Kernel of a product: primes present in exactly one factor.
    pub fn product(&self, other: &Kernel) -> Kernel {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Kernel(out)
    }

    pub fn value(&self) -> u128 {
        self.0.iter().map(|&p| p as u128).product()
    }
}

/// Square-free kernel of `n >= 1` by trial division.
pub fn squarefree_kernel(n: u64) -> Result<Kernel> {
    if n == 0 {
        return Err(Error::param("square-free kernel of 0 is undefined"));
    }
    check_capacity(n + 1)?;
    let mut n = n;
    let mut odd = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut a = 0;
        while n % p == 0 {
            n /= p;
            a += 1;
        }
        if a % 2 == 1 {
            odd.push(p);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        odd.push(n);
    }
    Ok(Kernel(odd))
}

pub fn is_squarefree(n: u64) -> bool {
    let mut n = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    true
}
