//! Block-condition purity certificates.
//!
//! Split `H(x)` into `[[A, B], [C, D]]` with `A` the top-left `a × a` block.
//! If on a set `F` with `|F ∩ N·F| > 0` the block `A` is expansive,
//! `σ_min(A) ≥ 1 + δ`, and `‖B‖, ‖C‖, ‖D‖ < min(1/8, δ/8)` in operator norm,
//! then `S_H` has no eigenvector. Step filters are checked cell by cell, so
//! a successful check is a statement about the continuous operator.

use std::f64::consts::SQRT_2;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{make_journe_family, FilterMatrix, JourneParams};
use crate::linalg;
use crate::torus::{GridSpec, IntervalSet, Rat};

/// Worst-case values of the three conditions over `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub min_singular_on_f: f64,
    pub max_offblock_norm_on_f: f64,
    pub measure_f_cap_alpha_f: Rat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub block_size_a: usize,
    pub delta: f64,
    /// Always `min(1/8, δ/8)`.
    pub eps: f64,
    pub f: IntervalSet,
    pub margins: Margins,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, thiserror::Error)]
pub enum CertificateFailure {
    #[error("block A is not expansive at cell {cell}: σ_min = {sigma_min} < {required}")]
    NotExpansive { cell: usize, sigma_min: f64, required: f64 },
    #[error("off-diagonal block norm {norm} at cell {cell} is not below ε = {eps}")]
    OffBlockTooLarge { cell: usize, norm: f64, eps: f64 },
    #[error("F ∩ α*(F) has measure zero")]
    MeasureCondition,
    #[error("invalid certificate input: {0}")]
    InvalidInput(String),
}

/// `min(1/8, δ/8)`.
pub fn eps_for(delta: f64) -> f64 {
    0.125f64.min(delta / 8.0)
}

/// `(σ_min(A), max(‖B‖, ‖C‖, ‖D‖))` at every cell.
fn block_profile(h: &FilterMatrix, a: usize) -> Result<Vec<(f64, f64)>> {
    let c = h.size();
    (0..h.cell_count())
        .into_par_iter()
        .map(|t| {
            let m = h.matrix_at(t);
            let block = |r0: usize, r1: usize, c0: usize, c1: usize| {
                Mat::<Complex64>::from_fn(r1 - r0, c1 - c0, |i, j| m[(r0 + i, c0 + j)])
            };
            let sigma = linalg::min_singular(&block(0, a, 0, a))?;
            let off = [block(0, a, a, c), block(a, c, 0, a), block(a, c, a, c)]
                .iter()
                .map(linalg::spectral_norm)
                .try_fold(0.0f64, |acc, n| n.map(|n| acc.max(n)))?;
            Ok((sigma, off))
        })
        .collect()
}

fn cells_of(f: &IntervalSet, h: &FilterMatrix) -> std::result::Result<Vec<usize>, CertificateFailure> {
    let mask = f.cell_mask(h.cell_count()).map_err(|_| {
        CertificateFailure::InvalidInput(format!("F = {f} is not aligned with the filter grid"))
    })?;
    Ok(mask.iter().enumerate().filter(|(_, &m)| m).map(|(t, _)| t).collect())
}

pub fn check_certificate(
    h: &FilterMatrix,
    a: usize,
    delta: f64,
    f: &IntervalSet,
) -> std::result::Result<Certificate, CertificateFailure> {
    if a == 0 || a > h.size() {
        return Err(CertificateFailure::InvalidInput(format!("block size {a} outside 1..={}", h.size())));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CertificateFailure::InvalidInput(format!("δ = {delta} must be positive")));
    }
    let cells = cells_of(f, h)?;
    if cells.is_empty() {
        return Err(CertificateFailure::MeasureCondition);
    }
    let profile = block_profile(h, a).map_err(|e| CertificateFailure::InvalidInput(e.to_string()))?;
    let eps = eps_for(delta);
    let required = 1.0 + delta;
    let mut min_singular = f64::INFINITY;
    let mut max_off: f64 = 0.0;
    for &t in &cells {
        let (sigma, off) = profile[t];
        if !(sigma >= required) {
            return Err(CertificateFailure::NotExpansive { cell: t, sigma_min: sigma, required });
        }
        if !(off < eps) {
            return Err(CertificateFailure::OffBlockTooLarge { cell: t, norm: off, eps });
        }
        min_singular = min_singular.min(sigma);
        max_off = max_off.max(off);
    }
    let overlap = f.intersection(&f.image_under_alpha_star(h.scale())).measure();
    if overlap <= Rat::zero() {
        return Err(CertificateFailure::MeasureCondition);
    }
    Ok(Certificate {
        block_size_a: a,
        delta,
        eps,
        f: f.clone(),
        margins: Margins {
            min_singular_on_f: min_singular,
            max_offblock_norm_on_f: max_off,
            measure_f_cap_alpha_f: overlap,
        },
    })
}

/// `[−k/M, k/M)` on a grid of `M` cells.
fn symmetric_cells(k: usize, m: usize) -> IntervalSet {
    IntervalSet::symmetric(&Rat::new(k as i64, m as i64)).expect("k ≤ M/2")
}

/// Best certificate over block sizes `a = 1..=c` and symmetric sets
/// `F = [−k/M, k/M)`, `k = 1..=M/2`.
///
/// Prefers larger `δ`, then larger `|F|`, then smaller `a`. The chosen
/// candidate is re-checked with [`check_certificate`].
pub fn search_certificate(h: &FilterMatrix) -> Option<Certificate> {
    let m = h.cell_count();
    let mut best: Option<(f64, usize, usize)> = None;
    for a in 1..=h.size() {
        let profile = block_profile(h, a).ok()?;
        let mut min_sigma = f64::INFINITY;
        let mut max_off: f64 = 0.0;
        for k in 1..=m / 2 {
            for t in [k - 1, m - k] {
                min_sigma = min_sigma.min(profile[t].0);
                max_off = max_off.max(profile[t].1);
            }
            let delta = safe_delta(min_sigma);
            if !(delta > 0.0) {
                break;
            }
            if !(max_off < eps_for(delta)) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bk, _)) => delta > bd || (delta == bd && k > bk),
            };
            if better {
                best = Some((delta, k, a));
            }
        }
    }
    let (delta, k, a) = best?;
    check_certificate(h, a, delta, &symmetric_cells(k, m)).ok()
}

/// Largest `δ` with `1 + δ ≤ σ` in floating point.
fn safe_delta(sigma: f64) -> f64 {
    let mut delta = sigma - 1.0;
    while delta > 0.0 && 1.0 + delta > sigma {
        delta = delta.next_down();
    }
    delta
}

/// `(r₁, r₂, r)` with `r₁ = min(1/16, δ/16)/2`,
/// `r₂ = √((√2 − (1+δ))/(1+δ))` and `r = min(r₁, r₂)`.
pub fn journe_radii(delta: f64) -> Result<(f64, f64, f64)> {
    if !(delta > 0.0 && delta < SQRT_2 - 1.0) {
        return Err(Error::InvalidParameter(format!(
            "δ = {delta} must satisfy 0 < δ < √2 − 1"
        )));
    }
    let r1 = (1.0f64 / 16.0).min(delta / 16.0) / 2.0;
    let r2 = ((SQRT_2 - (1.0 + delta)) / (1.0 + delta)).sqrt();
    Ok((r1, r2, r1.min(r2)))
}

/// One inequality of the parameter derivation, `lhs < rhs` or `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; positive when the inequality holds with room to spare.
    pub margin: f64,
    pub holds: bool,
}

impl Check {
    fn strict(name: &str, lhs: f64, rhs: f64) -> Self {
        Check { name: name.into(), lhs, rhs, margin: rhs - lhs, holds: lhs < rhs }
    }

    fn weak(name: &str, lhs: f64, rhs: f64) -> Self {
        Check { name: name.into(), lhs, rhs, margin: rhs - lhs, holds: lhs <= rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JourneDerivation {
    pub delta: f64,
    /// `F = [−1/n, 1/n)`.
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub r: f64,
    pub f: IntervalSet,
    pub params: JourneParams,
    pub checks: Vec<Check>,
}

impl JourneDerivation {
    pub fn filter(&self) -> Result<FilterMatrix> {
        make_journe_family(&self.params)
    }

    pub fn all_checks_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Chooses `r` from `δ`, builds the Journé filter on `grid`, and finds the
/// smallest grid-aligned `n ≥ 7` for which `q > √2·√(1 − 2r²)` and
/// `|h₁₂| < min(1/8, δ/8)` hold on `[−1/n, 1/n)`.
pub fn derive_journe(delta: f64, grid: GridSpec) -> Result<JourneDerivation> {
    let (r1, r2, r) = journe_radii(delta)?;
    let r_exact = Rat::from_f64(r).ok_or_else(|| Error::InvalidParameter("r is not finite".into()))?;
    let params = JourneParams { grid, ..JourneParams::with_r(r_exact) };
    let h = make_journe_family(&params)?;
    let m = h.cell_count();
    let eps = eps_for(delta);
    let threshold = SQRT_2 * (1.0 - 2.0 * r * r).sqrt();
    let bounds_on = |k: usize| {
        let cells = (0..k).chain(m - k..m);
        cells.fold((f64::INFINITY, 0.0f64), |(q, b), t| {
            (q.min(h.value(0, 0, t).norm()), b.max(h.value(0, 1, t).norm()))
        })
    };
    let (n, (q_min, h12_max)) = (7..=m)
        .filter(|n| m % n == 0)
        .map(|n| (n, bounds_on(m / n)))
        .find(|&(_, (q, b))| q > threshold && b < eps)
        .ok_or_else(|| {
            Error::Resolution(format!(
                "no n ≥ 7 dividing {m} gives q > √2·√(1 − 2r²) and |h₁₂| < {eps} on [−1/n, 1/n)"
            ))
        })?;
    let checks = vec![
        Check::strict("r1 < min(1/16, δ/16)", r1, (1.0f64 / 16.0).min(delta / 16.0)),
        Check::weak("r ≤ r2", r, r2),
        Check::weak(
            "1/(√2·√(1−2r²)) ≤ 1/(1+δ)",
            1.0 / (SQRT_2 * (1.0 - 2.0 * r * r).sqrt()),
            1.0 / (1.0 + delta),
        ),
        Check::strict("2r < min(1/8, δ/8)", 2.0 * r, eps),
        Check::strict("√2·√(1−2r²) < min q on F", threshold, q_min),
        Check::strict("max |h12| on F < min(1/8, δ/8)", h12_max, eps),
        Check::weak("7 ≤ n", 7.0, n as f64),
    ];
    Ok(JourneDerivation {
        delta,
        n,
        r1,
        r2,
        r,
        f: symmetric_cells(m / n, m),
        params,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{make_constant, make_haar};

    #[test]
    fn eps_law() {
        assert_eq!(eps_for(0.1), 0.1 / 8.0);
        assert_eq!(eps_for(2.0), 0.125);
    }

    #[test]
    fn haar_certificate_on_an_eighth() {
        let h = make_haar(GridSpec::new(2, 1, 4).unwrap()).unwrap();
        let f = IntervalSet::from_fracs(&[(-1, 8, 1, 8)]).unwrap();
        let cert = check_certificate(&h, 1, 0.3, &f).unwrap();
        let expected = 2.0 * (std::f64::consts::PI / 8.0).cos() / SQRT_2;
        assert!((cert.margins.min_singular_on_f - expected).abs() < 1e-12);
        assert_eq!(cert.margins.measure_f_cap_alpha_f, Rat::new(1, 4));
    }

    #[test]
    fn constant_has_no_certificate() {
        let h = make_constant(GridSpec::new(2, 1, 4).unwrap()).unwrap();
        let f = IntervalSet::from_fracs(&[(-1, 8, 1, 8)]).unwrap();
        assert!(matches!(
            check_certificate(&h, 1, 0.1, &f),
            Err(CertificateFailure::NotExpansive { cell: 0, .. })
        ));
        assert!(search_certificate(&h).is_none());
    }

    #[test]
    fn invalid_inputs() {
        let h = make_haar(GridSpec::new(2, 1, 2).unwrap()).unwrap();
        let f = IntervalSet::from_fracs(&[(-1, 8, 1, 8)]).unwrap();
        assert!(matches!(check_certificate(&h, 1, 0.1, &f), Err(CertificateFailure::InvalidInput(_))));
        let g = IntervalSet::from_fracs(&[(-1, 4, 1, 4)]).unwrap();
        assert!(matches!(check_certificate(&h, 2, 0.1, &g), Err(CertificateFailure::InvalidInput(_))));
        assert!(matches!(check_certificate(&h, 1, 0.0, &g), Err(CertificateFailure::InvalidInput(_))));
    }

    #[test]
    fn safe_delta_never_overshoots() {
        for sigma in [1.0, 1.1, 1.3065629648763766, SQRT_2, 1.0 + 1e-17] {
            let d = safe_delta(sigma);
            assert!(d <= 0.0 || 1.0 + d <= sigma);
        }
    }

    #[test]
    fn journe_radii_at_one_tenth() {
        let (r1, r2, r) = journe_radii(0.1).unwrap();
        assert_eq!(r1, 0.003125);
        assert!((r2 - ((SQRT_2 - 1.1) / 1.1).sqrt()).abs() < 1e-15);
        assert_eq!(r, r1);
        assert!(journe_radii(SQRT_2 - 1.0).is_err());
        assert!(journe_radii(0.0).is_err());
    }
}
