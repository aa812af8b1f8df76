//! Exponent-sum matrices of equation systems and their rank over ℚ.

use std::fmt;

use num_bigint::{BigInt, Sign};

use crate::error::{Error, Result};
use crate::words::{Alphabet, Gen, Word};

/// Row `i`, column `j` holds the exponent sum of variable `j` in equation `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentMatrix {
    entries: Vec<Vec<i64>>,
    cols: usize,
}

impl ExponentMatrix {
    pub fn from_rows(entries: Vec<Vec<i64>>, cols: usize) -> Result<Self> {
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::Degenerate("ragged matrix".into()));
        }
        Ok(ExponentMatrix { entries, cols })
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i][j]
    }
}

/// Rows of tab-separated integers.
impl fmt::Display for ExponentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(i64::to_string).collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// Letters that are not variables act as group constants and are ignored.
pub fn build_matrix(equations: &[Word], variables: &[Gen]) -> ExponentMatrix {
    let entries = equations
        .iter()
        .map(|w| variables.iter().map(|&x| w.exponent_sum(x)).collect())
        .collect();
    ExponentMatrix { entries, cols: variables.len() }
}

/// Resolves variable names against `alphabet` first.
pub fn build_matrix_named(alphabet: &Alphabet, equations: &[Word], variables: &[&str]) -> Result<ExponentMatrix> {
    let vars = variables
        .iter()
        .map(|name| alphabet.lookup(name).ok_or_else(|| Error::Alphabet(format!("variable `{name}` is not declared"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(build_matrix(equations, &vars))
}

fn is_zero(x: &BigInt) -> bool {
    x.sign() == Sign::NoSign
}

/// Rank over ℚ by fraction-free (Bareiss) elimination, exact for all entries.
pub fn integer_rank(m: &ExponentMatrix) -> usize {
    let mut a: Vec<Vec<BigInt>> = m.entries.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let (rows, cols) = (m.rows(), m.cols());
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&i| !is_zero(&a[i][col])) else {
            continue;
        };
        a.swap(rank, pivot);
        for i in rank + 1..rows {
            for j in col + 1..cols {
                let v = &a[rank][col] * &a[i][j] - &a[i][col] * &a[rank][j];
                // exact division: every intermediate is a minor of the input
                a[i][j] = v / &prev;
            }
            a[i][col] = BigInt::from(0);
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Independence: full row rank.
pub fn is_independent(m: &ExponentMatrix) -> bool {
    m.rows() <= m.cols() && integer_rank(m) == m.rows()
}

pub fn independence_gate(equations: &[Word], variables: &[Gen]) -> bool {
    is_independent(&build_matrix(equations, variables))
}
