//! Block norms, block projections and the joint gcd.

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::types::{Decomposition, NormKind};

pub fn block_norm(v: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::Sup => v.iter().fold(0.0f64, |acc, x| acc.max(x.abs())),
        NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormKind::Taxicab => v.iter().map(|x| x.abs()).sum(),
    }
}

/// Norm of an integer block, exact for sup and taxicab.
pub fn int_block_norm(v: &[i64], kind: NormKind) -> f64 {
    match kind {
        NormKind::Sup => v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64,
        NormKind::Taxicab => v.iter().map(|x| x.unsigned_abs() as f64).sum(),
        NormKind::Euclidean => {
            let s: i128 = v.iter().map(|&x| (x as i128) * (x as i128)).sum();
            (s as f64).sqrt()
        }
    }
}

/// Splits `x` into the blocks of `parts`.
pub fn split_blocks<'a, T>(x: &'a [T], parts: &[usize]) -> Result<Vec<&'a [T]>> {
    let total: usize = parts.iter().sum();
    if x.len() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: x.len(),
        });
    }
    let mut out = Vec::with_capacity(parts.len());
    let mut rest = x;
    for &len in parts {
        let (head, tail) = rest.split_at(len);
        out.push(head);
        rest = tail;
    }
    Ok(out)
}

/// `(rho_1(x), .., rho_k(x))` for `x` of length `m`, or the `rho'_j` blocks
/// for `x` of length `n`. When `m == n` the p-side split is used.
pub fn project_blocks(x: &[f64], dec: &Decomposition) -> Result<Vec<Vec<f64>>> {
    let parts = if x.len() == dec.m() {
        dec.m_parts()
    } else if x.len() == dec.n() {
        dec.n_parts()
    } else {
        return Err(Error::DimensionMismatch {
            expected: dec.m(),
            got: x.len(),
        });
    };
    Ok(split_blocks(x, parts)?
        .into_iter()
        .map(|b| b.to_vec())
        .collect())
}

/// Norms of each block of `x` under `parts`/`kinds`.
pub fn block_norms(x: &[f64], parts: &[usize], kinds: &[NormKind]) -> Vec<f64> {
    let mut off = 0;
    parts
        .iter()
        .zip(kinds)
        .map(|(&len, &kind)| {
            let n = block_norm(&x[off..off + len], kind);
            off += len;
            n
        })
        .collect()
}

pub fn int_block_norms(x: &[i64], parts: &[usize], kinds: &[NormKind]) -> Vec<f64> {
    let mut off = 0;
    parts
        .iter()
        .zip(kinds)
        .map(|(&len, &kind)| {
            let n = int_block_norm(&x[off..off + len], kind);
            off += len;
            n
        })
        .collect()
}

/// gcd of the absolute values; 0 for an empty or all-zero input.
pub fn gcd_all(ints: &[i64]) -> u64 {
    ints.iter()
        .fold(0u64, |g, &x| g.gcd(&x.unsigned_abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KINDS: [NormKind; 3] = [NormKind::Sup, NormKind::Euclidean, NormKind::Taxicab];

    #[test]
    fn norm_examples() {
        assert_eq!(block_norm(&[0.0, 0.0, 0.0], NormKind::Sup), 0.0);
        assert_eq!(block_norm(&[3.0, -4.0], NormKind::Euclidean), 5.0);
        assert_eq!(block_norm(&[1.5, -2.25], NormKind::Sup), 2.25);
        assert_eq!(block_norm(&[1.5, -2.25], NormKind::Taxicab), 3.75);
    }

    #[test]
    fn projection_examples() {
        let dec = Decomposition::new(vec![1, 1], vec![2, 1]).unwrap();
        assert_eq!(
            project_blocks(&[0.5, 0.7], &dec).unwrap(),
            vec![vec![0.5], vec![0.7]]
        );
        let dec = Decomposition::new(vec![1], vec![2, 1]).unwrap();
        assert_eq!(
            project_blocks(&[1.0, 2.0, 3.0], &dec).unwrap(),
            vec![vec![1.0, 2.0], vec![3.0]]
        );
        let dec = Decomposition::new(vec![3], vec![1]).unwrap();
        assert_eq!(
            project_blocks(&[1.0, 2.0, 3.0], &dec).unwrap(),
            vec![vec![1.0, 2.0, 3.0]]
        );
        assert!(project_blocks(&[1.0, 2.0], &dec).is_err());
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd_all(&[6, 10, 15]), 1);
        assert_eq!(gcd_all(&[4, 8, 12]), 4);
        assert_eq!(gcd_all(&[]), 0);
        assert_eq!(gcd_all(&[0, 0]), 0);
        assert_eq!(gcd_all(&[-8, 0]), 8);
    }

    #[test]
    fn integer_vectors_have_norm_at_least_one() {
        for kind in KINDS {
            for a in -3i64..=3 {
                for b in -3i64..=3 {
                    for c in -3i64..=3 {
                        if (a, b, c) != (0, 0, 0) {
                            let v = [a as f64, b as f64, c as f64];
                            assert!(block_norm(&v, kind) >= 1.0);
                            assert_eq!(int_block_norm(&[a, b, c], kind), block_norm(&v, kind));
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn homogeneity_and_triangle(
            v in prop::collection::vec(-1e3f64..1e3, 1..6),
            c in -50f64..50.0,
            w_seed in prop::collection::vec(-1e3f64..1e3, 6),
        ) {
            let w = &w_seed[..v.len()];
            for kind in KINDS {
                let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
                let lhs = block_norm(&scaled, kind);
                let rhs = c.abs() * block_norm(&v, kind);
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
                let sum: Vec<f64> = v.iter().zip(w).map(|(a, b)| a + b).collect();
                prop_assert!(block_norm(&sum, kind) <= block_norm(&v, kind) + block_norm(w, kind) + 1e-9);
            }
        }

        #[test]
        fn projection_partitions(
            parts in prop::collection::vec(1usize..4, 1..4),
            seed in any::<u64>(),
        ) {
            let total: usize = parts.iter().sum();
            let x: Vec<f64> = (0..total).map(|i| (seed.wrapping_mul(i as u64 + 1) % 1000) as f64).collect();
            let dec = Decomposition::new(vec![total + 1], parts.clone()).unwrap();
            let blocks = split_blocks(&x, &parts).unwrap();
            let joined: Vec<f64> = blocks.concat();
            prop_assert_eq!(joined, x.clone());
            prop_assert_eq!(project_blocks(&x, &dec).unwrap().concat(), x);
        }
    }
}
