//! Complex dense and sparse matrices used throughout the engine.
//!
//! Operators are stored sparse (CSR); density matrices and small effective
//! operators are dense. Decompositions are delegated to `faer`.

mod dense;
mod sparse;

pub use dense::CMatrix;
pub use sparse::SparseMatrix;

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub const fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn vec_norm(v: &[C64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
