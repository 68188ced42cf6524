//! Dense complex linear algebra primitives shared by every other module.
//!
//! Matrices are plain [`nalgebra::DMatrix`] values over [`Complex64`]. The
//! multi-subsystem convention is that of the Kronecker product: in
//! `tensor(a, b)` subsystem 0 is `a` and carries the most significant index.
//!
//! Vectorization is column-stacking, so that
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QrcError, Result};

mod basis;
mod density;
mod eigen;
mod expm;
pub mod random;

pub use basis::fock_quadratures;
pub use basis::{make_basis, BasisKind, ExpectationVector, OperatorBasis};
pub use density::DensityMatrix;
pub use eigen::{eigen_decompose, hermitian_eigenvalues, EigenDecomposition};
pub use expm::matrix_exp;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Single-qubit Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMat {
        match self {
            Pauli::I => identity(2),
            Pauli::X => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(s: char) -> Option<Pauli> {
        match s.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Matrix of a Pauli string such as `"XZI"` (qubit 0 first).
pub fn pauli_string(label: &str) -> Result<CMat> {
    let mut out = identity(1);
    for ch in label.chars() {
        let p = Pauli::from_symbol(ch)
            .ok_or_else(|| QrcError::InvalidArgument(format!("bad Pauli symbol `{ch}`")))?;
        out = tensor(&out, &p.matrix());
    }
    if label.is_empty() {
        return Err(QrcError::InvalidArgument("empty Pauli string".into()));
    }
    Ok(out)
}

/// Single-qubit lowering operator |0⟩⟨1|.
pub fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

/// Kronecker product.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a CMat>) -> CMat {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| tensor(&acc, f))
}

/// Embed a single-subsystem operator at position `site` of a register.
pub fn embed(op: &CMat, site: usize, dims: &[usize]) -> Result<CMat> {
    if site >= dims.len() || op.nrows() != dims[site] || !op.is_square() {
        return Err(QrcError::DimensionMismatch(format!(
            "cannot embed {}x{} operator at site {site} of {dims:?}",
            op.nrows(),
            op.ncols()
        )));
    }
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    Ok(tensor(&tensor(&identity(left), op), &identity(right)))
}

pub fn ket(dim: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[index] = ONE;
    v
}

/// |a⟩⟨b|
pub fn ket_bra(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Largest entrywise deviation from Hermiticity, `max |A − A†|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn check_square(m: &CMat, what: &str) -> Result<usize> {
    if m.nrows() == 0 || !m.is_square() {
        return Err(QrcError::DimensionMismatch(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `Tr[B ρ]` without forming the product.
pub fn expectation(rho: &CMat, b: &CMat) -> Result<C64> {
    if rho.shape() != b.shape() || !rho.is_square() {
        return Err(QrcError::DimensionMismatch(format!(
            "expectation of {:?} operator in {:?} state",
            b.shape(),
            rho.shape()
        )));
    }
    let n = rho.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += b[(i, j)] * rho[(j, i)];
        }
    }
    Ok(acc)
}

/// Column-stacking vectorization.
pub fn vectorize(a: &CMat) -> CVec {
    // nalgebra stores column-major, so the storage order is already vec(A).
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`] for square matrices.
pub fn devectorize(v: &CVec) -> Result<CMat> {
    let len = v.len();
    let d = (len as f64).sqrt().round() as usize;
    if d * d != len || d == 0 {
        return Err(QrcError::NotSquareLength(len));
    }
    Ok(CMat::from_column_slice(d, d, v.as_slice()))
}

fn split_index(mut index: usize, dims: &[usize], digits: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        digits[k] = index % dims[k];
        index /= dims[k];
    }
}

fn join_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Partial trace of an arbitrary square matrix over all subsystems not in
/// `keep`. Kept subsystems retain their relative order.
pub fn partial_trace_matrix(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total || dims.iter().any(|&d| d == 0) {
        return Err(QrcError::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not match a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(QrcError::InvalidArgument(format!(
            "keep set {keep:?} is not a set of subsystem indices for {dims:?}"
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    let mut full = vec![0usize; dims.len()];
    let mut kd = vec![0usize; kept.len()];
    let mut td = vec![0usize; traced.len()];
    let mut index_of = |k_index: usize, t_index: usize, full: &mut [usize]| {
        split_index(k_index, &kept_dims, &mut kd);
        split_index(t_index, &traced_dims, &mut td);
        for (pos, &site) in kept.iter().enumerate() {
            full[site] = kd[pos];
        }
        for (pos, &site) in traced.iter().enumerate() {
            full[site] = td[pos];
        }
        join_index(full, dims)
    };

    let mut out = CMat::zeros(dk, dk);
    for t in 0..dt {
        let rows: Vec<usize> = (0..dk).map(|k| index_of(k, t, &mut full)).collect();
        for (a, &ra) in rows.iter().enumerate() {
            for (b, &rb) in rows.iter().enumerate() {
                out[(a, b)] += m[(ra, rb)];
            }
        }
    }
    Ok(out)
}

/// Reduced state on the subsystems listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), rho.dims(), keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let dims = kept.iter().map(|&k| rho.dims()[k]).collect();
    DensityMatrix::new(m, dims)
}

/// Superoperator matrix of `ρ ↦ A ρ B` in the column-stacking convention.
pub fn sandwich_superop(a: &CMat, b: &CMat) -> CMat {
    tensor(&b.transpose(), a)
}
