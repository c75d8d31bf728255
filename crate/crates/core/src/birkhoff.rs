//! Birkhoff–von Neumann decomposition of bistochastic rational matrices.
//!
//! Each step finds a perfect matching on the positive entries (Hopcroft–Karp
//! with a fixed row/column scan order), subtracts the matching's smallest
//! entry, and repeats until the residual is zero.

use std::collections::VecDeque;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::Rational;

/// Square matrix whose rows and columns each sum to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BistochasticMatrix {
    rows: Vec<Vec<Rational>>,
}

impl BistochasticMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        check_scaled_bistochastic(&rows, &Rational::one())?;
        Ok(Self { rows })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }
}

/// Every row and column sums to `total`, entries in `[0, total]`.
pub fn check_scaled_bistochastic(rows: &[Vec<Rational>], total: &Rational) -> Result<()> {
    let k = rows.len();
    if k == 0 {
        return Err(Error::NotBistochastic("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::NotBistochastic("matrix is not square".into()));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.iter().any(|x| x.is_negative() || x > total) {
            return Err(Error::NotBistochastic(format!(
                "row {r} has an entry out of range"
            )));
        }
        let s: Rational = row.iter().sum();
        if s != *total {
            return Err(Error::NotBistochastic(format!("row {r} sums to {s}")));
        }
    }
    for c in 0..k {
        let s: Rational = rows.iter().map(|r| &r[c]).sum();
        if s != *total {
            return Err(Error::NotBistochastic(format!("column {c} sums to {s}")));
        }
    }
    Ok(())
}

/// Permutation matrix stored as `column[row]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationMatrix {
    column: Vec<usize>,
}

impl PermutationMatrix {
    pub fn new(column: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; column.len()];
        for &c in &column {
            if c >= column.len() || std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        Ok(Self { column })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            column: (0..k).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.column.len()
    }

    pub fn column_of(&self, row: usize) -> usize {
        self.column[row]
    }

    pub fn columns(&self) -> &[usize] {
        &self.column
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        let k = self.size();
        (0..k)
            .map(|r| {
                (0..k)
                    .map(|c| {
                        if self.column[r] == c {
                            Rational::one()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Every 1-entry sits on a positive entry of `m`.
    pub fn is_consistent_with(&self, m: &[Vec<Rational>]) -> bool {
        self.column
            .iter()
            .enumerate()
            .all(|(r, &c)| m[r][c].is_positive())
    }
}

/// Hopcroft–Karp on the bipartite graph with edge `(r, c)` iff `m[r][c] > 0`.
/// Returns `None` when no perfect matching exists.
pub fn perfect_matching(m: &[Vec<Rational>]) -> Option<PermutationMatrix> {
    let adjacency: Vec<Vec<usize>> = m
        .iter()
        .map(|row| (0..row.len()).filter(|&c| row[c].is_positive()).collect())
        .collect();
    hopcroft_karp(&adjacency, m.len()).map(|column| PermutationMatrix { column })
}

const FREE: usize = usize::MAX;

fn hopcroft_karp(adjacency: &[Vec<usize>], cols: usize) -> Option<Vec<usize>> {
    let rows = adjacency.len();
    let mut row_match = vec![FREE; rows];
    let mut col_match = vec![FREE; cols];
    let mut dist = vec![0usize; rows];
    let mut matched = 0;

    loop {
        // layered BFS from free rows
        let mut queue = VecDeque::new();
        for r in 0..rows {
            if row_match[r] == FREE {
                dist[r] = 0;
                queue.push_back(r);
            } else {
                dist[r] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(r) = queue.pop_front() {
            for &c in &adjacency[r] {
                let next = col_match[c];
                if next == FREE {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[r] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        for r in 0..rows {
            if row_match[r] == FREE
                && augment(r, adjacency, &mut row_match, &mut col_match, &mut dist)
            {
                matched += 1;
            }
        }
    }
    (matched == rows).then_some(row_match)
}

fn augment(
    r: usize,
    adjacency: &[Vec<usize>],
    row_match: &mut [usize],
    col_match: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &c in &adjacency[r] {
        let next = col_match[c];
        if next == FREE
            || (dist[next] == dist[r] + 1 && augment(next, adjacency, row_match, col_match, dist))
        {
            row_match[r] = c;
            col_match[c] = r;
            return true;
        }
    }
    dist[r] = usize::MAX;
    false
}

/// One extraction: `residual_after = residual_before - weight * permutation`.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub weight: Rational,
    pub permutation: PermutationMatrix,
}

/// Step-by-step decomposer; exposes the residual between extractions.
#[derive(Debug, Clone)]
pub struct Decomposer {
    residual: Vec<Vec<Rational>>,
    remaining: Rational,
}

impl Decomposer {
    pub fn new(m: &BistochasticMatrix) -> Self {
        Self {
            residual: m.rows.clone(),
            remaining: Rational::one(),
        }
    }

    pub fn residual(&self) -> &[Vec<Rational>] {
        &self.residual
    }

    /// Common row/column sum of the residual (`1 - Σ weights so far`).
    pub fn remaining_mass(&self) -> &Rational {
        &self.remaining
    }

    pub fn is_done(&self) -> bool {
        self.remaining.is_zero()
    }

    /// Extracts `perm` with the smallest residual entry on its support.
    pub fn extract(&mut self, perm: PermutationMatrix) -> Result<Extraction> {
        let row = (0..perm.size()).find(|&r| !self.residual[r][perm.column[r]].is_positive());
        if let Some(row) = row {
            return Err(Error::InconsistentSeed { row });
        }
        let weight = (0..perm.size())
            .map(|r| &self.residual[r][perm.column[r]])
            .min()
            .expect("non-empty permutation")
            .clone();
        for (r, &c) in perm.column.iter().enumerate() {
            self.residual[r][c] -= &weight;
        }
        self.remaining -= &weight;
        Ok(Extraction {
            weight,
            permutation: perm,
        })
    }

    pub fn next_step(&mut self) -> Option<Extraction> {
        if self.is_done() {
            return None;
        }
        let perm = perfect_matching(&self.residual)
            .expect("a positive scaled bistochastic matrix has a perfect matching");
        Some(self.extract(perm).expect("matching uses positive entries"))
    }
}

pub fn birkhoff_decompose(m: &BistochasticMatrix) -> Vec<Extraction> {
    let mut d = Decomposer::new(m);
    std::iter::from_fn(|| d.next_step()).collect()
}

/// Like [`birkhoff_decompose`] but `seed` is extracted first.
pub fn birkhoff_decompose_seeded(
    m: &BistochasticMatrix,
    seed: PermutationMatrix,
) -> Result<Vec<Extraction>> {
    if seed.size() != m.size() {
        return Err(Error::Dimension("seed and matrix sizes differ".into()));
    }
    let mut d = Decomposer::new(m);
    let first = d.extract(seed)?;
    Ok(std::iter::once(first)
        .chain(std::iter::from_fn(|| d.next_step()))
        .collect())
}

/// `Σ weight · permutation`.
pub fn recompose(parts: &[Extraction], k: usize) -> Vec<Vec<Rational>> {
    let mut rows = vec![vec![Rational::zero(); k]; k];
    for part in parts {
        for (r, &c) in part.permutation.column.iter().enumerate() {
            rows[r][c] += &part.weight;
        }
    }
    rows
}

/// Upper bound `k² − 2k + 2` on the number of extractions.
pub fn extraction_bound(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        (k - 1) * (k - 1) + 1
    }
}
