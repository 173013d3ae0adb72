//! Real Householder QR least squares.
//!
//! The workhorse behind the closed-form ELM training: for a tall
//! full-column-rank system the solution equals the pseudoinverse route, the
//! operation count is deterministic in the matrix shape, and the cost is a
//! fraction of the SVD's. Rank deficiency is detected from the R diagonal
//! and reported so callers can fall back to the minimum-norm SVD path.

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::numerics::RMat;

/// Solve min ||A X - Y||_F for tall real A (rows >= cols) by Householder
/// QR. Returns `Error::Singular` when a diagonal of R falls below
/// max(m, n) * eps * |R| scale, signalling rank deficiency.
pub fn qr_lstsq(a: &RMat, y: &RMat, counter: Option<&mut FlopCounter>) -> Result<RMat> {
    let (m, n) = (a.rows(), a.cols());
    if y.rows() != m {
        return Err(Error::DimMismatch(format!(
            "qr_lstsq rows {} vs {}",
            m,
            y.rows()
        )));
    }
    if m < n {
        return Err(Error::DimMismatch(
            "qr_lstsq needs at least as many rows as columns".into(),
        ));
    }
    let k = y.cols();
    let mut r = a.clone();
    let mut b = y.clone();
    let mut muls: u64 = 0;
    let mut adds: u64 = 0;
    let mut v = vec![0.0; m];

    let mut max_diag: f64 = 0.0;
    for j in 0..n {
        // Householder vector for column j below the diagonal.
        let mut norm_sq = 0.0;
        for i in j..m {
            let x = r[(i, j)];
            norm_sq += x * x;
        }
        muls += (m - j) as u64;
        adds += (m - j) as u64;
        let norm = norm_sq.sqrt();
        max_diag = max_diag.max(norm);
        if norm <= f64::EPSILON * m.max(n) as f64 * max_diag {
            return Err(Error::Singular("qr_lstsq rank deficiency"));
        }
        let alpha = if r[(j, j)] >= 0.0 { -norm } else { norm };
        for i in j..m {
            v[i] = r[(i, j)];
        }
        v[j] -= alpha;
        let beta = alpha * (alpha - r[(j, j)]);
        // beta = v'v / 2 sign-adjusted; nonzero because norm > 0.
        r[(j, j)] = alpha;
        for i in j + 1..m {
            r[(i, j)] = 0.0;
        }
        let scale = -1.0 / beta;
        for c in j + 1..n {
            let mut dot = 0.0;
            for i in j..m {
                dot += v[i] * r[(i, c)];
            }
            let s = dot * scale;
            for i in j..m {
                r[(i, c)] += s * v[i];
            }
        }
        for c in 0..k {
            let mut dot = 0.0;
            for i in j..m {
                dot += v[i] * b[(i, c)];
            }
            let s = dot * scale;
            for i in j..m {
                b[(i, c)] += s * v[i];
            }
        }
        let span = (m - j) as u64;
        let cols = (n - j - 1 + k) as u64;
        muls += cols * (2 * span + 1);
        adds += cols * 2 * span;
    }

    // Back substitution on the top n x n triangle.
    let mut x = RMat::zeros(n, k);
    for c in 0..k {
        for row in (0..n).rev() {
            let mut acc = b[(row, c)];
            for l in row + 1..n {
                acc -= r[(row, l)] * x[(l, c)];
            }
            x[(row, c)] = acc / r[(row, row)];
        }
    }
    muls += (n * (n - 1) / 2 * k) as u64 + (n * k) as u64;
    adds += (n * (n - 1) / 2 * k) as u64;

    if let Some(cnt) = counter {
        cnt.real_mul += muls;
        cnt.real_add += adds;
        cnt.activation += n as u64; // square roots of the column norms
    }
    Ok(x)
}
