//! Iterated Cantor pairing on tuples of naturals.

use crate::error::{domain, Result};

/// `⟨a, b⟩ = (a + b)(a + b + 1)/2 + b`.
pub fn pair(a: u64, b: u64) -> Result<u64> {
    let s = a.checked_add(b).ok_or_else(overflow)?;
    let t = s.checked_mul(s + 1).ok_or_else(overflow)? / 2;
    t.checked_add(b).ok_or_else(overflow)
}

pub fn unpair(n: u64) -> (u64, u64) {
    // Largest s with s(s+1)/2 <= n.
    let mut s = (((8.0 * n as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while s * (s + 1) / 2 > n {
        s -= 1;
    }
    while (s + 1) * (s + 2) / 2 <= n {
        s += 1;
    }
    let b = n - s * (s + 1) / 2;
    (s - b, b)
}

fn overflow() -> crate::Error {
    crate::Error::Domain("tuple code exceeds 64 bits".into())
}

/// `⟨m_0, ..., m_k⟩ = ⟨m_0, ⟨m_1, ..., m_k⟩⟩`, with `⟨m⟩ = m`.
pub fn tuple_encode(ms: &[u64]) -> Result<u64> {
    match ms.split_last() {
        None => domain("cannot encode an empty tuple"),
        Some((last, init)) => init.iter().rev().try_fold(*last, |acc, &m| pair(m, acc)),
    }
}

/// Decode `n` into `k + 1` components. Iterated pairing is a bijection
/// onto each arity, so this only fails when `k + 1` components cannot be
/// re-encoded in 64 bits.
pub fn tuple_decode(n: u64, k: usize) -> Option<Vec<u64>> {
    let mut out = Vec::with_capacity(k + 1);
    let mut rest = n;
    for _ in 0..k {
        let (a, b) = unpair(rest);
        out.push(a);
        rest = b;
    }
    out.push(rest);
    (tuple_encode(&out).ok() == Some(n)).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_codes() {
        assert_eq!(pair(0, 0).unwrap(), 0);
        assert_eq!(pair(1, 0).unwrap(), 1);
        assert_eq!(pair(0, 1).unwrap(), 2);
        for k in 0..=5 {
            assert_eq!(tuple_decode(0, k).unwrap(), vec![0; k + 1]);
        }
        assert!(pair(u64::MAX, 1).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(ms in proptest::collection::vec(0u64..40, 1..5)) {
            let n = tuple_encode(&ms).unwrap();
            prop_assert_eq!(tuple_decode(n, ms.len() - 1).unwrap(), ms);
        }

        #[test]
        fn pair_dominates(z in 0u64..1_000_000, n in 0u64..1_000_000) {
            let c = pair(z, n).unwrap();
            prop_assert!(c >= n && c >= z);
            prop_assert_eq!(unpair(c), (z, n));
        }
    }
}
