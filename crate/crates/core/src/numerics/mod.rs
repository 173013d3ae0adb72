//! Dependency-free numerical kernel.
//!
//! Complex vectors and matrices, the unitary DFT/IDFT pair, linear and
//! circular convolution, an SVD-based Moore-Penrose pseudoinverse, a
//! minimum-norm least-squares solver, an LU solver, and seeded RNG streams.
//! Everything here is a pure function over immutable inputs; `RngStream`
//! instances are single-owner and parallelism is obtained by allocating
//! distinct stream ids, never by sharing one stream.

mod fft;
mod lu;
mod mat;
mod qr;
mod rng;
mod svd;

pub use fft::{circular_convolve, convolve, dft, idft};
pub use lu::{lu_solve, lu_solve_counted};
pub use mat::{CMat, RMat};
pub use qr::qr_lstsq;
pub use rng::RngStream;
pub use svd::{lstsq, lstsq_counted, pinv, pinv_counted, pinv_with_tol, svd, svd_counted, Svd};

pub use num_complex::Complex64;

/// Contiguous complex vector, the working currency of the frequency domain.
pub type CVec = Vec<Complex64>;
