//! The Ruelle operator `S_H f(x) = Hᵗ(x)·f(N·x)` on step fields, its adjoint,
//! and purity classification by exact eigen-analysis on the step space.
//!
//! `S_H` maps fields on the coarse grid (`K − 1`) to fields on the fine grid
//! (`K`). Composing its adjoint with the inclusion of coarse steps into fine
//! steps gives an endomorphism `T` of the fine step space. An `S_H`
//! eigenvector `f` with `|λ| = 1` lifts to a `T` eigenvector with eigenvalue
//! `conj(λ)`, and conversely every unimodular eigenvalue of `T` comes from one.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{filter_equation_residual, FilterMatrix, StepFn};
use crate::linalg;
use crate::lowpass::Certificate;
use crate::torus::{GridSpec, SigmaChain};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default cap on the dimension of the assembled transfer matrix.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// An element of `⊕ᵢ L²(σᵢ)` at step resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct VecField {
    chain: SigmaChain,
    grid: GridSpec,
    components: Vec<StepFn>,
}

impl VecField {
    /// Checks that there is one component per `σᵢ`, all on `grid`, and that
    /// component `i` vanishes outside `σᵢ`.
    pub fn new(chain: SigmaChain, grid: GridSpec, components: Vec<StepFn>) -> Result<Self> {
        if components.len() != chain.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} components, got {}",
                chain.len(),
                components.len()
            )));
        }
        for (i, f) in components.iter().enumerate() {
            if *f.grid() != grid {
                return Err(Error::GridMismatch { expected: grid.cell_count(), found: f.grid().cell_count() });
            }
            let mask = chain.sigma(i).cell_mask(grid.cell_count())?;
            if let Some(t) = f.samples().iter().zip(&mask).position(|(z, &m)| !m && *z != ZERO) {
                return Err(Error::InvalidParameter(format!(
                    "component {} is nonzero at cell {t}, outside σ{}",
                    i + 1,
                    i + 1
                )));
            }
        }
        Ok(VecField { chain, grid, components })
    }

    fn masked(chain: &SigmaChain, grid: GridSpec, mut value: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let components = (0..chain.len())
            .map(|i| {
                let mask = chain.sigma(i).cell_mask(grid.cell_count())?;
                Ok(StepFn::from_fn(grid, |t| if mask[t] { value(i, t) } else { ZERO }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VecField { chain: chain.clone(), grid, components })
    }

    pub fn zeros(chain: &SigmaChain, grid: GridSpec) -> Result<Self> {
        Self::masked(chain, grid, |_, _| ZERO)
    }

    /// Every component equal to `value` on its `σᵢ`.
    pub fn constant(chain: &SigmaChain, grid: GridSpec, value: Complex64) -> Result<Self> {
        Self::masked(chain, grid, |_, _| value)
    }

    /// Components i.i.d. uniform on the closed unit disk, masked to `σᵢ`.
    pub fn random<R: Rng>(chain: &SigmaChain, grid: GridSpec, rng: &mut R) -> Result<Self> {
        Self::masked(chain, grid, |_, _| linalg::unit_disk(rng))
    }

    pub fn chain(&self) -> &SigmaChain {
        &self.chain
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[StepFn] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &StepFn {
        &self.components[i]
    }

    /// Quadrature inner product `⟨f|g⟩ = (1/M)·Σᵢ Σ_t fᵢ(t)·conj(gᵢ(t))`.
    pub fn inner(&self, other: &VecField) -> Result<Complex64> {
        self.check_compatible(other)?;
        let m = self.grid.cell_count() as f64;
        let sum: Complex64 = self
            .components
            .iter()
            .zip(&other.components)
            .flat_map(|(f, g)| f.samples().iter().zip(g.samples()).map(|(a, b)| a * b.conj()))
            .sum();
        Ok(sum / m)
    }

    pub fn norm_sqr(&self) -> f64 {
        let m = self.grid.cell_count() as f64;
        self.components
            .iter()
            .flat_map(|f| f.samples().iter().map(Complex64::norm_sqr))
            .sum::<f64>()
            / m
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Euclidean norm of the vector `(f₁(t), …, f_c(t))`.
    pub fn cell_norm(&self, cell: usize) -> f64 {
        self.components.iter().map(|f| f.value(cell).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Same field on the grid one level finer.
    pub fn include(&self) -> Result<VecField> {
        let components = self.components.iter().map(StepFn::refine).collect::<Result<Vec<_>>>()?;
        Ok(VecField { chain: self.chain.clone(), grid: self.grid.refine()?, components })
    }

    /// `self − z·other`.
    pub fn sub_scaled(&self, z: Complex64, other: &VecField) -> Result<VecField> {
        self.check_compatible(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(f, g)| {
                StepFn::from_fn(self.grid, |t| f.value(t) - z * g.value(t))
            })
            .collect();
        Ok(VecField { chain: self.chain.clone(), grid: self.grid, components })
    }

    pub fn scale(&self, z: Complex64) -> VecField {
        let components = self
            .components
            .iter()
            .map(|f| StepFn::from_fn(self.grid, |t| z * f.value(t)))
            .collect();
        VecField { chain: self.chain.clone(), grid: self.grid, components }
    }

    fn map_samples(&self, op: impl Fn(Complex64) -> Complex64) -> VecField {
        let components = self
            .components
            .iter()
            .map(|f| StepFn::from_fn(self.grid, |t| op(f.value(t))))
            .collect();
        VecField { chain: self.chain.clone(), grid: self.grid, components }
    }

    fn check_compatible(&self, other: &VecField) -> Result<()> {
        if self.grid != other.grid || self.chain != other.chain {
            return Err(Error::GridMismatch {
                expected: self.grid.cell_count(),
                found: other.grid.cell_count(),
            });
        }
        Ok(())
    }
}

fn expect_grid(f: &VecField, grid: &GridSpec, chain: &SigmaChain) -> Result<()> {
    if f.grid() != grid || f.chain() != chain {
        return Err(Error::GridMismatch { expected: grid.cell_count(), found: f.grid().cell_count() });
    }
    Ok(())
}

/// `[S_H f]_j(x) = Σᵢ H_{i,j}(x)·fᵢ(N·x)`, from the coarse grid to the fine grid.
pub fn ruelle_apply(h: &FilterMatrix, f: &VecField) -> Result<VecField> {
    expect_grid(f, &h.grid().coarse()?, h.chain())?;
    let c = h.size();
    let coarse = h.coarse_cell_count();
    let components = (0..c)
        .map(|j| {
            StepFn::from_fn(*h.grid(), |x| {
                (0..c).map(|i| h.value(i, j, x) * f.component(i).value(x % coarse)).sum()
            })
        })
        .collect();
    VecField::new(h.chain().clone(), *h.grid(), components)
}

/// `[S_H* g]ᵢ(y) = (1/N)·Σ_{N·x = y} Σ_j conj(H_{i,j}(x))·g_j(x)`, restricted to `σᵢ`.
pub fn transfer_apply(h: &FilterMatrix, g: &VecField) -> Result<VecField> {
    expect_grid(g, h.grid(), h.chain())?;
    let c = h.size();
    let n = h.scale();
    let coarse = h.coarse_cell_count();
    let inv = 1.0 / n as f64;
    let grid = h.grid().coarse()?;
    let components = (0..c)
        .map(|i| {
            let mask = h.coarse_mask(i);
            StepFn::from_fn(grid, |s| {
                if !mask[s] {
                    return ZERO;
                }
                let mut sum = ZERO;
                for k in 0..n {
                    let x = s + k * coarse;
                    for j in 0..c {
                        sum += h.value(i, j, x).conj() * g.component(j).value(x);
                    }
                }
                sum * inv
            })
        })
        .collect();
    Ok(VecField { chain: h.chain().clone(), grid, components })
}

/// Largest `|‖S_H f‖² − ‖f‖²|` over `trials` seeded random coarse fields.
pub fn isometry_residual(h: &FilterMatrix, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let grid = h.grid().coarse()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = VecField::random(h.chain(), grid, &mut rng)?;
        let sf = ruelle_apply(h, &f)?;
        worst = worst.max((sf.norm_sqr() - f.norm_sqr()).abs());
    }
    Ok(worst)
}

/// `include ∘ S_H*` as a dense matrix on the fine step space.
///
/// The basis is `(i, t)` with `t` a fine cell in `σᵢ`, ordered
/// lexicographically; with equal quadrature weights the matrix adjoint is the
/// operator adjoint.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub basis: Vec<(usize, usize)>,
    pub matrix: Mat<Complex64>,
}

impl TransferMatrix {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of a fine field in the basis.
    pub fn vectorize(&self, g: &VecField) -> Vec<Complex64> {
        self.basis.iter().map(|&(i, t)| g.component(i).value(t)).collect()
    }

    /// The fine field with the given coordinates.
    pub fn field(&self, h: &FilterMatrix, coords: &[Complex64]) -> Result<VecField> {
        let mut components = vec![StepFn::zeros(*h.grid()); h.size()];
        for (&(i, t), z) in self.basis.iter().zip(coords) {
            components[i].samples_mut()[t] = *z;
        }
        VecField::new(h.chain().clone(), *h.grid(), components)
    }
}

pub fn assemble_transfer_matrix(h: &FilterMatrix, cap: usize) -> Result<TransferMatrix> {
    let c = h.size();
    let n = h.scale();
    let coarse = h.coarse_cell_count();
    let basis: Vec<(usize, usize)> = (0..c)
        .flat_map(|i| {
            h.fine_mask(i).iter().enumerate().filter(|(_, &m)| m).map(move |(t, _)| (i, t))
        })
        .collect();
    let dim = basis.len();
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let mut position = vec![vec![usize::MAX; h.cell_count()]; c];
    for (k, &(i, t)) in basis.iter().enumerate() {
        position[i][t] = k;
    }
    let inv = 1.0 / n as f64;
    // column (j, x) feeds the N fine cells over the coarse cell x mod M/N
    let columns: Vec<Vec<(usize, Complex64)>> = basis
        .par_iter()
        .map(|&(j, x)| {
            let s = x % coarse;
            let mut col = Vec::new();
            for i in 0..c {
                let v = h.value(i, j, x).conj() * inv;
                if v == ZERO || !h.coarse_mask(i)[s] {
                    continue;
                }
                for r in 0..n {
                    let row = position[i][s * n + r];
                    if row != usize::MAX {
                        col.push((row, v));
                    }
                }
            }
            col
        })
        .collect();
    let mut matrix = Mat::<Complex64>::zeros(dim, dim);
    for (col, entries) in columns.into_iter().enumerate() {
        for (row, v) in entries {
            matrix[(row, col)] = v;
        }
    }
    Ok(TransferMatrix { basis, matrix })
}

/// Thresholds used by [`classify_purity`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Width of the annulus `1 − tol_eig ≤ |λ| ≤ 1 + tol_eig` that is tested.
    pub tol_eig: f64,
    /// Relative bound on `‖S_H f − λf‖ / ‖f‖` for a certified eigenpair.
    pub tol_res: f64,
    /// Bound on `|‖f(cell)‖ − 1|` for a unit eigenvector.
    pub tol_norm: f64,
    /// Bound on the filter-equation residual required before classifying.
    pub tol_filter: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_eig: 1e-8, tol_res: 1e-9, tol_norm: 1e-6, tol_filter: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurityStatus {
    /// No eigenvector, backed by a low-pass certificate.
    PureCertified,
    /// No unit-modulus eigenpair on the step space; says nothing about
    /// eigenvectors that are not step functions at this resolution.
    PureAtResolution,
    /// An exhibited eigenvector with `|λ| = 1`.
    NotPureCertified,
    /// A near-unit eigenvalue whose eigenvector failed the direct check.
    Inconclusive,
}

/// A verified eigenpair `S_H f = λ·f` on the coarse grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub lambda: Complex64,
    pub vector: VecField,
    /// `‖S_H f − λf‖ / ‖f‖`.
    pub residual: f64,
    /// `max |‖f(cell)‖ − 1|` over cells with `m ≥ 1`.
    pub cell_norm_deviation: f64,
}

/// One eigenvalue of the transfer matrix with the outcome of the direct check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub value: Complex64,
    pub near_unit: bool,
    pub passes_eigen_test: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRow {
    pub n: u32,
    /// `max_cell |X_n(cell) − ‖f‖²|` for the first certified eigenvector.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `‖Tⁿ 1‖` for the constant field on `⊕ L²(σᵢ)`.
    pub decay_curve: Vec<f64>,
    pub martingale_table: Vec<MartingaleRow>,
    pub sigma1_full_circle: bool,
    pub max_abs_eigenvalue: f64,
    pub dimension: usize,
}

#[derive(Clone, Debug)]
pub struct PurityVerdict {
    pub status: PurityStatus,
    pub eigenpairs: Vec<Eigenpair>,
    pub spectrum: Vec<SpectrumEntry>,
    pub diagnostics: Diagnostics,
    pub certificate: Option<Certificate>,
    /// Results that contradict a theorem-level expectation.
    pub anomalies: Vec<String>,
    pub resolution: GridSpec,
    pub tolerances: Tolerances,
}

impl PurityVerdict {
    /// Attaches a low-pass certificate. Pure and inconclusive verdicts become
    /// `PureCertified`; a certificate next to an exhibited eigenvector is
    /// recorded as an anomaly and leaves the status unchanged.
    pub fn upgrade_with(mut self, certificate: Certificate) -> Self {
        match self.status {
            PurityStatus::PureAtResolution | PurityStatus::Inconclusive => {
                self.status = PurityStatus::PureCertified;
            }
            PurityStatus::NotPureCertified => self.anomalies.push(
                "a low-pass certificate was found although an eigenvector was exhibited".into(),
            ),
            PurityStatus::PureCertified => {}
        }
        self.certificate = Some(certificate);
        self
    }
}

pub fn classify_purity(h: &FilterMatrix, tols: &Tolerances) -> Result<PurityVerdict> {
    classify_purity_with_cap(h, tols, DEFAULT_DIMENSION_CAP)
}

pub fn classify_purity_with_cap(h: &FilterMatrix, tols: &Tolerances, cap: usize) -> Result<PurityVerdict> {
    let residual = filter_equation_residual(h).max_abs_residual;
    if !(residual <= tols.tol_filter) {
        return Err(Error::NotAFilter { residual, tolerance: tols.tol_filter });
    }
    let t = assemble_transfer_matrix(h, cap)?;
    let (values, vectors) = if t.dimension() == 0 {
        (Vec::new(), Mat::zeros(0, 0))
    } else {
        linalg::eigen(&t.matrix)?
    };
    let coarse_grid = h.grid().coarse()?;
    let mut spectrum = Vec::with_capacity(values.len());
    let mut eigenpairs = Vec::new();
    let mut anomalies = Vec::new();
    let mut failed_near_unit = false;
    for (k, &mu) in values.iter().enumerate() {
        let near_unit = (mu.norm() - 1.0).abs() <= tols.tol_eig;
        let mut passes = false;
        if near_unit {
            let coords: Vec<Complex64> = (0..t.dimension()).map(|r| vectors[(r, k)]).collect();
            let fine = t.field(h, &coords)?;
            let candidate = block_average(&fine, coarse_grid)?;
            if let Some(pair) = check_eigenpair(h, candidate, mu.conj(), tols)? {
                passes = true;
                if pair.cell_norm_deviation > tols.tol_norm {
                    anomalies.push(format!(
                        "eigenvector for λ = {} deviates from unit pointwise norm by {:e}",
                        pair.lambda, pair.cell_norm_deviation
                    ));
                }
                eigenpairs.push(pair);
            } else {
                failed_near_unit = true;
            }
        }
        spectrum.push(SpectrumEntry { value: mu, near_unit, passes_eigen_test: passes });
    }
    let status = if !eigenpairs.is_empty() {
        PurityStatus::NotPureCertified
    } else if failed_near_unit {
        PurityStatus::Inconclusive
    } else {
        PurityStatus::PureAtResolution
    };
    let ones = VecField::constant(h.chain(), *h.grid(), Complex64::new(1.0, 0.0))?;
    let decay_curve = decay_probe(h, &ones, 8)?;
    let martingale_table = match eigenpairs.first() {
        Some(pair) => martingale_deviation(&pair.vector)?,
        None => Vec::new(),
    };
    let diagnostics = Diagnostics {
        decay_curve,
        martingale_table,
        sigma1_full_circle: h.chain().sigma(0).is_full(),
        max_abs_eigenvalue: values.iter().map(|z| z.norm()).fold(0.0, f64::max),
        dimension: t.dimension(),
    };
    Ok(PurityVerdict {
        status,
        eigenpairs,
        spectrum,
        diagnostics,
        certificate: None,
        anomalies,
        resolution: *h.grid(),
        tolerances: *tols,
    })
}

/// Reads a fine field as a coarse one by averaging over blocks of `N` cells.
fn block_average(fine: &VecField, coarse: GridSpec) -> Result<VecField> {
    let n = coarse.scale();
    let components = fine
        .components()
        .iter()
        .map(|f| {
            StepFn::from_fn(coarse, |s| {
                f.samples()[s * n..(s + 1) * n].iter().sum::<Complex64>() / n as f64
            })
        })
        .collect();
    VecField::new(fine.chain().clone(), coarse, components)
}

/// Direct check of `S_H f = λ·f` after normalization; keeps a snapped copy
/// when rounding to a coarse dyadic lattice does not increase the residual.
fn check_eigenpair(h: &FilterMatrix, f: VecField, lambda: Complex64, tols: &Tolerances) -> Result<Option<Eigenpair>> {
    let norm = f.norm();
    if norm == 0.0 {
        return Ok(None);
    }
    let pivot = f
        .components()
        .iter()
        .flat_map(|c| c.samples().iter().copied())
        .fold(ZERO, |best, z| if z.norm() > best.norm() { z } else { best });
    let f = f.scale(pivot.conj() / (pivot.norm() * norm));
    let residual = eigen_residual(h, &f, lambda)?;
    let snap = |z: Complex64| {
        const GRID: f64 = (1u64 << 24) as f64;
        Complex64::new((z.re * GRID).round() / GRID, (z.im * GRID).round() / GRID)
    };
    let snapped = f.map_samples(snap);
    let snapped_lambda = snap(lambda);
    let snapped_residual = if snapped.norm() > 0.0 {
        eigen_residual(h, &snapped, snapped_lambda)?
    } else {
        f64::INFINITY
    };
    let (vector, lambda, residual) = if snapped_residual <= residual {
        (snapped, snapped_lambda, snapped_residual)
    } else {
        (f, lambda, residual)
    };
    if !(residual <= tols.tol_res) {
        return Ok(None);
    }
    let masks = h.coarse_mask(0);
    let cell_norm_deviation = (0..vector.grid().cell_count())
        .filter(|&s| masks[s])
        .map(|s| (vector.cell_norm(s) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(Some(Eigenpair { lambda, vector, residual, cell_norm_deviation }))
}

/// `‖S_H f − λ·include(f)‖ / ‖f‖`.
fn eigen_residual(h: &FilterMatrix, f: &VecField, lambda: Complex64) -> Result<f64> {
    let sf = ruelle_apply(h, f)?;
    Ok(sf.sub_scaled(lambda, &f.include()?)?.norm() / f.norm())
}

fn martingale_deviation(f: &VecField) -> Result<Vec<MartingaleRow>> {
    let n = f.grid().scale();
    let cells = f.grid().cell_count();
    let mut n_max = 0u32;
    while cells % n.pow(n_max + 1) == 0 {
        n_max += 1;
    }
    let norm_sqr = f.norm_sqr();
    Ok(martingale_sequence(f, f, n, n_max)?
        .iter()
        .enumerate()
        .map(|(k, x)| MartingaleRow {
            n: k as u32,
            max_deviation: x.samples().iter().map(|z| (z - norm_sqr).norm()).fold(0.0, f64::max),
        })
        .collect())
}

/// `X_n(ω) = N^{-n}·Σ_{α*ⁿ(ζ) = 1} ⟨f(ωζ) | g(ωζ)⟩` for `n = 0..=n_max`.
pub fn martingale_sequence(f: &VecField, g: &VecField, n: usize, n_max: u32) -> Result<Vec<StepFn>> {
    f.check_compatible(g)?;
    if n != f.grid().scale() {
        return Err(Error::InvalidParameter(format!(
            "dilation {n} differs from the grid's N = {}",
            f.grid().scale()
        )));
    }
    let cells = f.grid().cell_count();
    let pointwise: Vec<Complex64> = (0..cells)
        .map(|t| {
            f.components()
                .iter()
                .zip(g.components())
                .map(|(a, b)| a.value(t) * b.value(t).conj())
                .sum()
        })
        .collect();
    (0..=n_max)
        .map(|k| {
            let order = n.checked_pow(k).filter(|o| cells % o == 0).ok_or_else(|| {
                Error::Resolution(format!("{n}^{k} does not divide the {cells} cells of the grid"))
            })?;
            let shift = cells / order;
            let inv = 1.0 / order as f64;
            Ok(StepFn::from_fn(*f.grid(), |t| {
                let base = t % shift;
                (0..order).map(|z| pointwise[base + z * shift]).sum::<Complex64>() * inv
            }))
        })
        .collect()
}

/// `‖(include ∘ S_H*)ⁿ f‖` for `n = 0..=n_max`, with `f` on the fine grid.
pub fn decay_probe(h: &FilterMatrix, f: &VecField, n_max: usize) -> Result<Vec<f64>> {
    let mut current = f.clone();
    let mut norms = Vec::with_capacity(n_max + 1);
    norms.push(current.norm());
    for _ in 0..n_max {
        current = transfer_apply(h, &current)?.include()?;
        norms.push(current.norm());
    }
    Ok(norms)
}
