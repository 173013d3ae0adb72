//! Complex LU solve with partial pivoting.

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::numerics::CMat;

/// Solve A X = Y for X, where A is square. Factorizes on every call; the
/// MMSE path relies on that so its per-frame operation count reflects the
/// full solve.
pub fn lu_solve(a: &CMat, y: &CMat) -> Result<CMat> {
    lu_solve_counted(a, y, None)
}

pub fn lu_solve_counted(a: &CMat, y: &CMat, counter: Option<&mut FlopCounter>) -> Result<CMat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimMismatch(format!(
            "lu_solve needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if y.rows() != n {
        return Err(Error::DimMismatch(format!(
            "lu_solve rhs rows {} do not match system size {n}",
            y.rows()
        )));
    }
    let k = y.cols();
    let mut lu = a.clone();
    let mut x = y.clone();
    let mut muls: u64 = 0;
    let mut adds: u64 = 0;
    let mut divs: u64 = 0;

    for col in 0..n {
        // Partial pivot on column magnitude.
        let mut pivot_row = col;
        let mut best = lu[(col, col)].norm_sqr();
        for r in col + 1..n {
            let mag = lu[(r, col)].norm_sqr();
            if mag > best {
                best = mag;
                pivot_row = r;
            }
        }
        if best == 0.0 {
            return Err(Error::Singular("lu_solve"));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            for j in 0..k {
                let tmp = x[(col, j)];
                x[(col, j)] = x[(pivot_row, j)];
                x[(pivot_row, j)] = tmp;
            }
        }
        let pivot = lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] / pivot;
            divs += 1;
            lu[(r, col)] = factor;
            for j in col + 1..n {
                let v = lu[(col, j)];
                lu[(r, j)] -= factor * v;
            }
            for j in 0..k {
                let v = x[(col, j)];
                x[(r, j)] -= factor * v;
            }
            muls += (n - col - 1 + k) as u64;
            adds += (n - col - 1 + k) as u64;
        }
    }

    // Back substitution.
    for col in (0..n).rev() {
        let pivot = lu[(col, col)];
        for j in 0..k {
            let mut acc = x[(col, j)];
            for l in col + 1..n {
                acc -= lu[(col, l)] * x[(l, j)];
            }
            x[(col, j)] = acc / pivot;
        }
        muls += ((n - col - 1) * k) as u64;
        adds += ((n - col - 1) * k) as u64;
        divs += k as u64;
    }

    if let Some(cnt) = counter {
        cnt.complex_mul += muls;
        cnt.complex_add += adds;
        cnt.complex_div += divs;
    }
    Ok(x)
}
