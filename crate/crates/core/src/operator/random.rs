//! Random matrices and states used for prior sampling and property tests.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMat, CVec, C64};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / 2f64.sqrt()
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Hermitian matrix `(G + G†)/2` from a Ginibre draw.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre_matrix(dim, dim, rng);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-random unit vector.
pub fn haar_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(dim, |_, _| gaussian_c64(rng));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Full-rank Ginibre-induced mixed state `G G† / Tr[G G†]`.
pub fn ginibre_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre_matrix(dim, dim, rng);
    let m = &g * g.adjoint();
    let tr = super::trace(&m).re;
    let mut out = m / C64::new(tr, 0.0);
    // Enforce exact Hermiticity against rounding in the product.
    out = (&out + out.adjoint()) * C64::new(0.5, 0.0);
    out
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with the
/// phase ambiguity of R removed.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre_matrix(dim, dim, rng);
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}
