//! Count-class enumeration over F^p.
//!
//! Exchangeable laws are constant on vectors sharing category counts, so sums
//! over F^p collapse to sums over count vectors weighted by multinomial
//! multiplicities: O(p^m) classes instead of (m+1)^p vectors.

use crate::error::{Error, Result};
use crate::model::{CategoricalVector, SuffStats};
use crate::special::{ln_choose, ln_multinomial};

/// All vectors of `parts` nonnegative integers summing to `total`.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    assert!(parts >= 1);
    let mut out = Vec::new();
    let mut current = vec![0u32; parts];
    fill(total, 0, &mut current, &mut out);
    out
}

fn fill(remaining: u32, idx: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if idx + 1 == current.len() {
        current[idx] = remaining;
        out.push(current.clone());
        return;
    }
    for c in 0..=remaining {
        current[idx] = c;
        fill(remaining - c, idx + 1, current, out);
    }
}

/// A count class with its log multiplicity (number of vectors in it).
#[derive(Debug, Clone)]
pub struct CountClass {
    pub stats: SuffStats,
    pub ln_multiplicity: f64,
}

/// Count classes of F^p for F = {0, …, m}.
pub fn count_classes(p: usize, m: usize) -> Vec<CountClass> {
    compositions(p as u32, m + 1)
        .into_iter()
        .map(|c| CountClass {
            ln_multiplicity: ln_multinomial(&c),
            stats: SuffStats::new(c),
        })
        .collect()
}

/// Count classes of {0,1}^p split after k coordinates.
pub fn split_count_classes(k: usize, p: usize) -> Vec<CountClass> {
    let rest = p - k;
    let mut out = Vec::with_capacity((k + 1) * (rest + 1));
    for s1 in 0..=k {
        for t1 in 0..=rest {
            let stats = SuffStats::with_split(
                k,
                vec![(k - s1) as u32, s1 as u32],
                vec![(rest - t1) as u32, t1 as u32],
            )
            .expect("counts are consistent by construction");
            out.push(CountClass {
                stats,
                ln_multiplicity: ln_choose(k as u64, s1 as u64) + ln_choose(rest as u64, t1 as u64),
            });
        }
    }
    out
}

/// Every vector of F^p in lexicographic order. Exponential; capped at 2^24 vectors.
pub fn all_vectors(p: usize, m: u8) -> Result<Vec<CategoricalVector>> {
    let base = m as u64 + 1;
    let total = base
        .checked_pow(p as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::Resource(format!("(m+1)^p too large for p = {p}, m = {m}")))?;
    let mut out = Vec::with_capacity(total as usize);
    for mut code in 0..total {
        let mut entries = vec![0u8; p];
        for e in entries.iter_mut().rev() {
            *e = (code % base) as u8;
            code /= base;
        }
        out.push(CategoricalVector::new(entries, m)?);
    }
    Ok(out)
}

/// The sorted vector (0…0 1…1 …) with the given counts.
pub fn representative(stats: &SuffStats) -> CategoricalVector {
    let mut entries = Vec::with_capacity(stats.p());
    match stats.split() {
        None => {
            for (j, &c) in stats.counts().iter().enumerate() {
                entries.extend(std::iter::repeat_n(j as u8, c as usize));
            }
        }
        Some(split) => {
            for block in [&split.first, &split.second] {
                for (j, &c) in block.iter().enumerate() {
                    entries.extend(std::iter::repeat_n(j as u8, c as usize));
                }
            }
        }
    }
    CategoricalVector::new(entries, stats.m() as u8).expect("codes bounded by m")
}
