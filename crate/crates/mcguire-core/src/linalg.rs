//! Dense complex linear algebra: LU factorization with partial pivoting,
//! determinants, and linear solves.
//!
//! The Fredholm determinants in this crate reduce to determinants of
//! matrices of order ≤ ~10³, for which an unblocked LU is entirely
//! adequate; keeping it in-repo makes the determinant path dependency-free
//! and bit-reproducible across platforms.

use crate::params::CoreError;
use crate::C64;

/// Square complex matrix in row-major storage.
#[derive(Clone, Debug)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    /// Zero matrix of order n.
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    /// Identity matrix of order n.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Build from a closure over (row, col).
    pub fn from_fn<F: FnMut(usize, usize) -> C64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization PA = LU with partial pivoting, stored packed.
pub struct LuFactors {
    lu: CMatrix,
    /// Row permutation: pivot row chosen at each elimination step.
    perm: Vec<usize>,
    /// +1 or -1, the sign of the permutation.
    parity: f64,
    /// True when a pivot column had no usable entry (matrix singular to
    /// working precision).
    singular: bool,
}

/// Factor a copy of `m`. Singularity is recorded, not an error: the
/// determinant of a singular matrix is a perfectly good zero.
pub fn lu_factor(m: &CMatrix) -> LuFactors {
    let n = m.order();
    let mut lu = m.clone();
    let mut perm = Vec::with_capacity(n);
    let mut parity = 1.0;
    let mut singular = false;
    for col in 0..n {
        // Partial pivoting on |entry|.
        let mut pivot_row = col;
        let mut pivot_mag = lu[(col, col)].norm();
        for row in col + 1..n {
            let mag = lu[(row, col)].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        perm.push(pivot_row);
        if pivot_mag == 0.0 {
            singular = true;
            continue;
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            parity = -parity;
        }
        let inv_pivot = C64::new(1.0, 0.0) / lu[(col, col)];
        for row in col + 1..n {
            let factor = lu[(row, col)] * inv_pivot;
            lu[(row, col)] = factor;
            if factor.norm() != 0.0 {
                for j in col + 1..n {
                    let delta = factor * lu[(col, j)];
                    lu[(row, j)] -= delta;
                }
            }
        }
    }
    LuFactors { lu, perm, parity, singular }
}

impl LuFactors {
    /// det A = parity · Π diag(U).
    pub fn det(&self) -> C64 {
        if self.singular {
            return C64::new(0.0, 0.0);
        }
        let mut d = C64::new(self.parity, 0.0);
        for i in 0..self.lu.order() {
            d *= self.lu[(i, i)];
        }
        d
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solve A y = rhs for one right-hand side.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>, CoreError> {
        if self.singular {
            return Err(CoreError::Domain(
                "cannot solve with a singular LU factorization".into(),
            ));
        }
        let n = self.lu.order();
        assert_eq!(rhs.len(), n, "right-hand side length mismatch");
        let mut y = rhs.to_vec();
        // Apply the recorded row swaps, then forward/back substitution.
        for (col, &p) in self.perm.iter().enumerate() {
            if p != col {
                y.swap(col, p);
            }
        }
        for col in 0..n {
            let yc = y[col];
            if yc.norm() != 0.0 {
                for row in col + 1..n {
                    let delta = self.lu[(row, col)] * yc;
                    y[row] -= delta;
                }
            }
        }
        for col in (0..n).rev() {
            let mut acc = y[col];
            for j in col + 1..n {
                let delta = self.lu[(col, j)] * y[j];
                acc -= delta;
            }
            y[col] = acc / self.lu[(col, col)];
        }
        Ok(y)
    }
}

/// Determinant of a complex matrix.
pub fn det(m: &CMatrix) -> C64 {
    lu_factor(m).det()
}
