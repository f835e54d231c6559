//! Thin wrappers over `faer` for the dense kernels used by the crate.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Singular values in non-increasing order. An empty matrix has none.
pub(crate) fn singular_values(m: &Mat<Complex64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return Ok(vec![m[(0, 0)].norm()]);
    }
    let mut s = m
        .singular_values()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Operator (spectral) norm; zero for an empty block.
pub(crate) fn spectral_norm(m: &Mat<Complex64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Smallest singular value of a square matrix.
pub(crate) fn min_singular(m: &Mat<Complex64>) -> Result<f64> {
    Ok(singular_values(m)?.last().copied().unwrap_or(0.0))
}

/// Eigenvalues and right eigenvectors (as columns) of a dense complex matrix.
pub(crate) fn eigen(m: &Mat<Complex64>) -> Result<(Vec<Complex64>, Mat<Complex64>)> {
    let evd = m.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S();
    let values = (0..m.nrows()).map(|k| s[k]).collect();
    Ok((values, evd.U().to_owned()))
}

/// A Haar-ish random unitary: QR of `bias·I + G` with complex Gaussian `G`.
/// Larger `bias` pulls the result toward the identity.
pub(crate) fn random_unitary<R: Rng>(n: usize, bias: f64, rng: &mut R) -> Mat<Complex64> {
    let g = Mat::<Complex64>::from_fn(n, n, |i, j| {
        let z = Complex64::new(gaussian(rng), gaussian(rng));
        if i == j {
            z + bias
        } else {
            z
        }
    });
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    // fix column phases so the diagonal of R is real positive
    Mat::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q[(i, j)] * phase
    })
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// A point uniformly distributed on the closed unit disk.
pub(crate) fn unit_disk<R: Rng>(rng: &mut R) -> Complex64 {
    let radius = rng.gen::<f64>().sqrt();
    let angle = std::f64::consts::TAU * rng.gen::<f64>();
    Complex64::from_polar(radius, angle)
}
