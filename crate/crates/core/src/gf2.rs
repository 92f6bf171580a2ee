//! Sparse Gaussian elimination over GF(2).
//!
//! Rows are sorted column lists. Each stored row is keyed by its lowest
//! column, so a vector lies in the span exactly when repeatedly cancelling
//! its lowest column against the stored rows reduces it to nothing.

use std::collections::HashMap;

#[derive(Debug, Clone, Default)]
pub struct Eliminator {
    pivots: HashMap<usize, Vec<usize>>,
}

impl Eliminator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Residue of `row` after cancelling every leading column that has a
    /// pivot. Empty iff `row` is in the span.
    pub fn reduce(&self, row: &[usize]) -> Vec<usize> {
        let mut row = normalize(row);
        while let Some(&lead) = row.first() {
            match self.pivots.get(&lead) {
                Some(pivot) => row = xor(&row, pivot),
                None => break,
            }
        }
        row
    }

    /// Adds `row`; returns whether it raised the rank.
    pub fn insert(&mut self, row: &[usize]) -> bool {
        let residue = self.reduce(row);
        match residue.first() {
            Some(&lead) => {
                self.pivots.insert(lead, residue);
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, row: &[usize]) -> bool {
        self.reduce(row).is_empty()
    }
}

/// Rank of a set of rows.
pub fn rank<'a>(rows: impl IntoIterator<Item = &'a [usize]>) -> usize {
    let mut e = Eliminator::new();
    rows.into_iter().for_each(|r| {
        e.insert(r);
    });
    e.rank()
}

/// Sorted list with columns that appear an even number of times removed.
fn normalize(row: &[usize]) -> Vec<usize> {
    let mut v = row.to_vec();
    v.sort_unstable();
    let mut out: Vec<usize> = Vec::with_capacity(v.len());
    for c in v {
        if out.last() == Some(&c) {
            out.pop();
        } else {
            out.push(c);
        }
    }
    out
}

fn xor(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
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
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ranks() {
        let rows: [&[usize]; 3] = [&[0, 1], &[1, 2], &[0, 2]];
        assert_eq!(rank(rows), 2);
        let rows: [&[usize]; 3] = [&[0], &[1], &[2]];
        assert_eq!(rank(rows), 3);
        let rows: [&[usize]; 2] = [&[], &[3, 3]];
        assert_eq!(rank(rows), 0);
    }

    #[test]
    fn membership() {
        let mut e = Eliminator::new();
        assert!(e.insert(&[0, 2]));
        assert!(e.insert(&[2, 5]));
        assert!(!e.insert(&[0, 5]));
        assert!(e.contains(&[5, 0]));
        assert!(!e.contains(&[5]));
    }

    #[test]
    fn matches_dense_elimination() {
        // pseudo-random 0/1 rows checked against a dense bitmask rank
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..200 {
            let mut rows = Vec::new();
            let mut masks = Vec::new();
            for _ in 0..8 {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let mask = state & 0x3ff;
                masks.push(mask);
                rows.push((0..10).filter(|c| mask >> c & 1 == 1).collect::<Vec<usize>>());
            }
            let mut dense = 0;
            let mut basis: Vec<u64> = Vec::new();
            for mut m in masks {
                for &b in &basis {
                    m = m.min(m ^ b);
                }
                if m != 0 {
                    basis.push(m);
                    basis.sort_unstable_by(|a, b| b.cmp(a));
                    dense += 1;
                }
            }
            assert_eq!(rank(rows.iter().map(Vec::as_slice)), dense);
        }
    }
}
