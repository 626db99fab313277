//! Exact dense linear algebra over the rationals.
//!
//! Two independent elimination routes live here:
//! - [`rank`] clears denominators row by row and runs fraction-free (Bareiss)
//!   elimination over the integers, with an `i64` fast path that falls back to
//!   arbitrary precision on overflow.
//! - [`reduced_row_echelon`] and [`classify_solve`] run Gauss-Jordan directly
//!   on rationals and classify `A x = b` by comparing `rank(A)` with
//!   `rank(A|b)`.
//!
//! Pivots are always the first nonzero entry in the current column, so every
//! result (including null-space bases) is reproducible.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Dense row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        Ok(m)
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols)?;
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            for (c, v) in row.into_iter().enumerate() {
                m.set(r, c, v);
            }
        }
        Ok(m)
    }

    pub fn from_int_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| rational::int(v)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Rational) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Rational> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows).expect("non-empty");
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn scale_row(&mut self, r: usize, factor: &Rational) {
        for v in &mut self.data[r * self.cols..(r + 1) * self.cols] {
            *v *= factor;
        }
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(Rational::zero(), |acc, (a, v)| acc + a * v)
            })
            .collect())
    }

    /// `(A | b)`.
    pub fn augmented(&self, b: &[Rational]) -> Result<Self> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: b.len(),
            });
        }
        let mut m = Self::zeros(self.rows, self.cols + 1)?;
        for (r, rhs) in b.iter().enumerate() {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c).clone());
            }
            m.set(r, self.cols, rhs.clone());
        }
        Ok(m)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(rational::format).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Exact rank over the rationals.
pub fn rank(m: &Matrix) -> usize {
    let mut ints = Vec::with_capacity(m.rows * m.cols);
    for r in 0..m.rows {
        let row = m.row(r);
        let scale = rational::lcm_of_denominators(row);
        ints.extend(row.iter().map(|v| (v * &scale).numer().clone()));
    }
    IntMatrix::from_big(m.rows, m.cols, ints).rank()
}

/// Integer matrix used for fraction-free elimination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    small: Option<Vec<i64>>,
    big: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), rows * cols, "IntMatrix data length");
        Self {
            rows,
            cols,
            small: Some(data),
            big: Vec::new(),
        }
    }

    fn from_big(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        let small: Option<Vec<i64>> = data.iter().map(ToPrimitive::to_i64).collect();
        match small {
            Some(small) => Self::new(rows, cols, small),
            None => Self {
                rows,
                cols,
                small: None,
                big: data,
            },
        }
    }

    pub fn rank(&self) -> usize {
        if let Some(small) = &self.small {
            let mut work = small.clone();
            if let Some(r) = bareiss_rank_i64(&mut work, self.rows, self.cols) {
                return r;
            }
            let big = small.iter().map(|&v| BigInt::from(v)).collect();
            return bareiss_rank_big(big, self.rows, self.cols);
        }
        bareiss_rank_big(self.big.clone(), self.rows, self.cols)
    }
}

/// Fraction-free elimination in place. `None` on `i64` overflow.
pub fn bareiss_rank_i64(a: &mut [i64], rows: usize, cols: usize) -> Option<usize> {
    let mut prev: i64 = 1;
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r * cols + c] != 0) else {
            continue;
        };
        if p != rank {
            for j in 0..cols {
                a.swap(p * cols + j, rank * cols + j);
            }
        }
        let pivot = a[rank * cols + c];
        for i in rank + 1..rows {
            let lead = a[i * cols + c];
            for j in c + 1..cols {
                let v = pivot
                    .checked_mul(a[i * cols + j])?
                    .checked_sub(lead.checked_mul(a[rank * cols + j])?)?;
                a[i * cols + j] = v / prev;
            }
            a[i * cols + c] = 0;
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

fn bareiss_rank_big(mut a: Vec<BigInt>, rows: usize, cols: usize) -> usize {
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r * cols + c].is_zero()) else {
            continue;
        };
        if p != rank {
            for j in 0..cols {
                a.swap(p * cols + j, rank * cols + j);
            }
        }
        let pivot = a[rank * cols + c].clone();
        for i in rank + 1..rows {
            let lead = a[i * cols + c].clone();
            for j in c + 1..cols {
                let v = &pivot * &a[i * cols + j] - &lead * &a[rank * cols + j];
                a[i * cols + j] = v / &prev;
            }
            a[i * cols + c] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// Reduced row echelon form with its pivot columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    pub reduced: Matrix,
    pub pivot_cols: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }
}

/// Gauss-Jordan elimination. Pivot rows are scaled to a leading one.
pub fn reduced_row_echelon(m: &Matrix) -> Echelon {
    let mut a = m.clone();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for c in 0..a.cols {
        if row == a.rows {
            break;
        }
        let Some(p) = (row..a.rows).find(|&r| !a.get(r, c).is_zero()) else {
            continue;
        };
        a.swap_rows(p, row);
        let inv = a.get(row, c).recip();
        a.scale_row(row, &inv);
        let pivot_row: Vec<Rational> = a.row(row).to_vec();
        for r in 0..a.rows {
            if r == row {
                continue;
            }
            let factor = a.get(r, c).clone();
            if factor.is_zero() {
                continue;
            }
            for (j, pv) in pivot_row.iter().enumerate().skip(c) {
                if pv.is_zero() {
                    continue;
                }
                let idx = r * a.cols + j;
                a.data[idx] -= &factor * pv;
            }
        }
        pivot_cols.push(c);
        row += 1;
    }
    Echelon {
        reduced: a,
        pivot_cols,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolutionKind {
    NoSolution,
    Unique,
    Infinite,
}

impl fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionKind::NoSolution => "no-solution",
            SolutionKind::Unique => "unique",
            SolutionKind::Infinite => "infinite",
        })
    }
}

/// Rouché-Capelli classification of `A x = b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    NoSolution,
    Unique(Vec<Rational>),
    /// Solution set `particular + span(null_basis)`.
    Infinite {
        particular: Vec<Rational>,
        null_basis: Vec<Vec<Rational>>,
    },
}

impl SolveOutcome {
    pub fn kind(&self) -> SolutionKind {
        match self {
            SolveOutcome::NoSolution => SolutionKind::NoSolution,
            SolveOutcome::Unique(_) => SolutionKind::Unique,
            SolveOutcome::Infinite { .. } => SolutionKind::Infinite,
        }
    }

    pub fn nullity(&self) -> Option<usize> {
        match self {
            SolveOutcome::Infinite { null_basis, .. } => Some(null_basis.len()),
            _ => None,
        }
    }

    pub fn unique(&self) -> Option<&[Rational]> {
        match self {
            SolveOutcome::Unique(x) => Some(x),
            _ => None,
        }
    }
}

/// Classifies and solves `a x = b` exactly.
///
/// Free variables of an infinite family are set to zero in the particular
/// solution; the null-space basis has one vector per free column, in column
/// order, with a one in that column.
pub fn classify_solve(a: &Matrix, b: &[Rational]) -> Result<SolveOutcome> {
    let aug = a.augmented(b)?;
    let ech = reduced_row_echelon(&aug);
    let n = a.cols;
    if ech.pivot_cols.last() == Some(&n) {
        return Ok(SolveOutcome::NoSolution);
    }
    let r = &ech.reduced;
    let mut particular = vec![Rational::zero(); n];
    for (row, &pc) in ech.pivot_cols.iter().enumerate() {
        particular[pc] = r.get(row, n).clone();
    }
    if ech.rank() == n {
        return Ok(SolveOutcome::Unique(particular));
    }
    let mut is_pivot = vec![false; n];
    for &pc in &ech.pivot_cols {
        is_pivot[pc] = true;
    }
    let null_basis = (0..n)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![Rational::zero(); n];
            v[free] = Rational::one();
            for (row, &pc) in ech.pivot_cols.iter().enumerate() {
                v[pc] = -r.get(row, free).clone();
            }
            v
        })
        .collect();
    Ok(SolveOutcome::Infinite {
        particular,
        null_basis,
    })
}
