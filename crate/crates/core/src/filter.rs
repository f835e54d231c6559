//! Step-function filter matrices and the filter equations.
//!
//! A [`FilterMatrix`] holds `c × c` complex step functions `h_{i,j}` on a
//! common grid of `M = L·N^K` cells (`K ≥ 1`), relative to a [`SigmaChain`].
//! Cell `t` is `[t/M, (t+1)/M)`; its image under `x ↦ N·x` is coarse cell
//! `t mod M/N` of the grid one level down, so the kernel coset of fine cell
//! `t` is `{t + k·M/N : 0 ≤ k < N}`.
//!
//! Step filters are honest Borel functions, so every identity checked here
//! holds exactly on the continuous circle, not only at sample points.

use std::f64::consts::{SQRT_2, TAU};

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::torus::{alpha_star, GridSpec, IntervalSet, Rat, SigmaChain, TorusRat};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A complex step function: one value per grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFn {
    grid: GridSpec,
    samples: Vec<Complex64>,
}

impl StepFn {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.cell_count() {
            return Err(Error::GridMismatch { expected: grid.cell_count(), found: samples.len() });
        }
        Ok(StepFn { grid, samples })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        StepFn { grid, samples: vec![ZERO; grid.cell_count()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl FnMut(usize) -> Complex64) -> Self {
        StepFn { grid, samples: (0..grid.cell_count()).map(f).collect() }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn value(&self, cell: usize) -> Complex64 {
        self.samples[cell]
    }

    /// Value at an exact point (the cell containing it).
    pub fn at(&self, x: &TorusRat) -> Complex64 {
        self.samples[x.cell_index(self.samples.len())]
    }

    /// Union of the cells where the function is nonzero.
    pub fn support(&self) -> IntervalSet {
        let mask: Vec<bool> = self.samples.iter().map(|z| *z != ZERO).collect();
        IntervalSet::from_cell_mask(&mask)
    }

    /// Same function on the grid one level finer.
    pub fn refine(&self) -> Result<StepFn> {
        let grid = self.grid.refine()?;
        let n = grid.scale();
        Ok(StepFn::from_fn(grid, |t| self.samples[t / n]))
    }

    /// True iff the samples are constant on blocks of `N` consecutive cells.
    pub fn is_coarse(&self) -> bool {
        let n = self.grid.scale();
        self.samples.chunks(n).all(|block| block.iter().all(|z| *z == block[0]))
    }
}

/// How the `e^{2πiχ_E}` factors of the Journé systems are realized on `E`.
///
/// `Literal` takes the factor as printed (`≡ 1` on `E`); `Sign` uses
/// `(-1)^{χ_E}`. In both cases the entry vanishes off `E`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    #[default]
    Literal,
    Sign,
}

impl PhaseConvention {
    fn factor(self) -> f64 {
        match self {
            PhaseConvention::Literal => 1.0,
            PhaseConvention::Sign => -1.0,
        }
    }
}

/// The matrix `H = [h_{i,j}]` of a filter relative to a multiplicity chain.
#[derive(Clone, Debug)]
pub struct FilterMatrix {
    chain: SigmaChain,
    grid: GridSpec,
    entries: Vec<StepFn>,
    fine_masks: Vec<Vec<bool>>,
    coarse_masks: Vec<Vec<bool>>,
}

impl PartialEq for FilterMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.chain == other.chain && self.grid == other.grid && self.entries == other.entries
    }
}

impl FilterMatrix {
    /// Builds a filter matrix from row-major entries `entries[i][j] = h_{i,j}`.
    ///
    /// Checks shapes, `K ≥ 1`, alignment of every `σᵢ` with the coarse grid,
    /// and that `h_{i,j}` vanishes outside `σ_j`.
    pub fn new(chain: SigmaChain, grid: GridSpec, entries: Vec<Vec<StepFn>>) -> Result<Self> {
        let c = chain.len();
        if grid.depth() < 1 {
            return Err(Error::InvalidFilter("grid depth must be at least 1".into()));
        }
        if entries.len() != c || entries.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidFilter(format!("entries must form a {c}×{c} matrix")));
        }
        let coarse = grid.coarse()?;
        let mut fine_masks = Vec::with_capacity(c);
        let mut coarse_masks = Vec::with_capacity(c);
        for (i, sigma) in chain.sigmas().iter().enumerate() {
            let coarse_mask = sigma.cell_mask(coarse.cell_count()).map_err(|_| {
                Error::InvalidFilter(format!(
                    "σ{} = {sigma} is not aligned with the coarse grid of {} cells",
                    i + 1,
                    coarse.cell_count()
                ))
            })?;
            fine_masks.push(sigma.cell_mask(grid.cell_count())?);
            coarse_masks.push(coarse_mask);
        }
        let mut flat = Vec::with_capacity(c * c);
        for (i, row) in entries.into_iter().enumerate() {
            for (j, h) in row.into_iter().enumerate() {
                if *h.grid() != grid {
                    return Err(Error::GridMismatch {
                        expected: grid.cell_count(),
                        found: h.grid().cell_count(),
                    });
                }
                if let Some(t) = h
                    .samples()
                    .iter()
                    .zip(&fine_masks[j])
                    .position(|(z, &inside)| !inside && *z != ZERO)
                {
                    return Err(Error::InvalidFilter(format!(
                        "h_{{{},{}}} is nonzero at cell {t}, outside σ{}",
                        i + 1,
                        j + 1,
                        j + 1
                    )));
                }
                flat.push(h);
            }
        }
        Ok(FilterMatrix { chain, grid, entries: flat, fine_masks, coarse_masks })
    }

    pub fn chain(&self) -> &SigmaChain {
        &self.chain
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The dilation `N`.
    pub fn scale(&self) -> usize {
        self.grid.scale()
    }

    /// The matrix size `c` (maximal multiplicity).
    pub fn size(&self) -> usize {
        self.chain.len()
    }

    pub fn cell_count(&self) -> usize {
        self.grid.cell_count()
    }

    pub fn coarse_cell_count(&self) -> usize {
        self.grid.cell_count() / self.grid.scale()
    }

    pub fn entry(&self, i: usize, j: usize) -> &StepFn {
        &self.entries[i * self.size() + j]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, cell: usize) -> Complex64 {
        self.entries[i * self.size() + j].samples[cell]
    }

    /// `H` on cell `t` as a dense `c × c` matrix.
    pub fn matrix_at(&self, cell: usize) -> Mat<Complex64> {
        Mat::from_fn(self.size(), self.size(), |i, j| self.value(i, j, cell))
    }

    /// Membership of fine cells in `σᵢ`.
    pub fn fine_mask(&self, i: usize) -> &[bool] {
        &self.fine_masks[i]
    }

    /// Membership of coarse cells in `σᵢ`.
    pub fn coarse_mask(&self, i: usize) -> &[bool] {
        &self.coarse_masks[i]
    }

    /// Same filter with every cell split into `N` equal cells.
    pub fn refine(&self) -> Result<FilterMatrix> {
        let c = self.size();
        let entries = (0..c)
            .map(|i| (0..c).map(|j| self.entry(i, j).refine()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        FilterMatrix::new(self.chain.clone(), self.grid.refine()?, entries)
    }

    /// True iff every entry is constant on blocks of `N` cells, i.e. the filter
    /// is already representable one level down.
    pub fn coarsen_check(&self) -> bool {
        self.entries.iter().all(StepFn::is_coarse)
    }

    /// Replaces the sample of `h_{i,j}` at `cell`. Used to build corrupted
    /// variants in negative tests; support is rechecked.
    pub fn with_sample(&self, i: usize, j: usize, cell: usize, value: Complex64) -> Result<FilterMatrix> {
        let c = self.size();
        let mut rows: Vec<Vec<StepFn>> = (0..c)
            .map(|r| (0..c).map(|s| self.entry(r, s).clone()).collect())
            .collect();
        rows[i][j].samples_mut()[cell] = value;
        FilterMatrix::new(self.chain.clone(), self.grid, rows)
    }

    /// Checks the support law cell by cell: `h_{i,j}(t) ≠ 0` implies `t ⊆ σ_j`
    /// and `N·t ⊆ σᵢ`. Returns the first violation `(i, j, cell)`.
    pub fn support_violation(&self) -> Option<(usize, usize, usize)> {
        let c = self.size();
        let coarse = self.coarse_cell_count();
        for i in 0..c {
            for j in 0..c {
                for (t, z) in self.entry(i, j).samples().iter().enumerate() {
                    if *z != ZERO && (!self.fine_masks[j][t] || !self.coarse_masks[i][t % coarse]) {
                        return Some((i, j, t));
                    }
                }
            }
        }
        None
    }
}

/// Worst-case deviation of an identity over cells and index pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_abs_residual: f64,
    /// Evaluation point `u / resolution` where the maximum is attained.
    pub argmax_cell: usize,
    pub argmax_pair: (usize, usize),
    /// Number of cells of the evaluation grid.
    pub resolution: usize,
    /// `per_pair[a][b]`: maximum over cells for the index pair `(a, b)`.
    pub per_pair: Vec<Vec<f64>>,
}

impl ResidualReport {
    /// Folds per-cell residual tables in cell order; ties keep the lowest
    /// cell, then the lowest pair.
    fn from_cells(c: usize, resolution: usize, cells: Vec<(usize, Vec<f64>)>) -> Self {
        let mut report = ResidualReport {
            max_abs_residual: 0.0,
            argmax_cell: 0,
            argmax_pair: (0, 0),
            resolution,
            per_pair: vec![vec![0.0; c]; c],
        };
        for (cell, table) in cells {
            for a in 0..c {
                for b in 0..c {
                    let r = table[a * c + b];
                    if r > report.per_pair[a][b] {
                        report.per_pair[a][b] = r;
                    }
                    if r > report.max_abs_residual {
                        report.max_abs_residual = r;
                        report.argmax_cell = cell;
                        report.argmax_pair = (a, b);
                    }
                }
            }
        }
        report
    }
}

/// Residual of the filter equation
/// `Σ_{ζ} Σ_j h_{i,j}(ωζ) conj(h_{i',j}(ωζ)) = N·δ_{i,i'}·χ_{σᵢ}(N·ω)`,
/// evaluated on every kernel coset of the fine grid.
pub fn filter_equation_residual(h: &FilterMatrix) -> ResidualReport {
    let c = h.size();
    let n = h.scale();
    let coarse = h.coarse_cell_count();
    let cells: Vec<(usize, Vec<f64>)> = (0..coarse)
        .into_par_iter()
        .map(|t| {
            let mut table = vec![0.0; c * c];
            for i in 0..c {
                for ip in 0..c {
                    let mut sum = ZERO;
                    for k in 0..n {
                        let x = t + k * coarse;
                        for j in 0..c {
                            sum += h.value(i, j, x) * h.value(ip, j, x).conj();
                        }
                    }
                    let target = if i == ip && h.coarse_masks[i][t] { n as f64 } else { 0.0 };
                    table[i * c + ip] = (sum - target).norm();
                }
            }
            (t, table)
        })
        .collect();
    ResidualReport::from_cells(c, h.cell_count(), cells)
}

/// The ordered product `Hᵗ(x) · Hᵗ(N·x) ⋯ Hᵗ(N^{n-1}·x)` at an exact point.
pub fn cocycle_product(h: &FilterMatrix, x: &TorusRat, n: usize) -> Mat<Complex64> {
    let c = h.size();
    let mut product = Mat::<Complex64>::identity(c, c);
    let mut point = x.clone();
    for _ in 0..n {
        let cell = point.cell_index(h.cell_count());
        let ht = Mat::from_fn(c, c, |i, j| h.value(j, i, cell));
        product = &product * &ht;
        point = alpha_star(&point, h.scale());
    }
    product
}

/// Residual of the `n`-step identity
/// `N^{-n} Σ_{ζ ∈ ker α*ⁿ} Σ_i [Π]_{i,j} conj([Π]_{i,j'}) = δ_{j,j'} χ_{σ_j}(α*ⁿ ω)`
/// with `Π = Π_{k<n} Hᵗ(α*ᵏ(ωζ))`.
///
/// The product is a step function on the grid `M·N^{n-1}`, so the identity is
/// checked at every point of that grid, not only at the left endpoints of the
/// filter's own cells.
pub fn generalized_filter_residual(h: &FilterMatrix, n: u32) -> Result<ResidualReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > h.grid().depth() {
        return Err(Error::Resolution(format!(
            "n = {n} exceeds the grid depth K = {}",
            h.grid().depth()
        )));
    }
    let c = h.size();
    let scale = h.scale();
    let cells = h.cell_count();
    let sub = scale.pow(n - 1);
    let resolution = cells * sub;
    let order = scale.pow(n);
    let shift = cells / scale;
    let inv = 1.0 / order as f64;
    let rows: Vec<(usize, Vec<f64>)> = (0..shift)
        .into_par_iter()
        .map(|u| {
            let mut gram = vec![ZERO; c * c];
            for k in 0..order {
                let p = (u + k * shift) % resolution;
                let prod = product_on_grid(h, p, n, resolution, sub);
                for j in 0..c {
                    for jp in 0..c {
                        let mut s = ZERO;
                        for i in 0..c {
                            s += prod[(i, j)] * prod[(i, jp)].conj();
                        }
                        gram[j * c + jp] += s;
                    }
                }
            }
            let mut image = u;
            for _ in 0..n {
                image = (image * scale) % resolution;
            }
            let image_cell = image / sub;
            let table = (0..c * c)
                .map(|idx| {
                    let (j, jp) = (idx / c, idx % c);
                    let target = if j == jp && h.fine_masks[j][image_cell] { 1.0 } else { 0.0 };
                    (gram[idx] * inv - target).norm()
                })
                .collect();
            (u, table)
        })
        .collect();
    Ok(ResidualReport::from_cells(c, resolution, rows))
}

/// `Π_{k<n} Hᵗ(α*ᵏ p)` for the grid point `p / resolution`.
fn product_on_grid(h: &FilterMatrix, p: usize, n: u32, resolution: usize, sub: usize) -> Mat<Complex64> {
    let c = h.size();
    let mut product = Mat::<Complex64>::identity(c, c);
    let mut point = p;
    for _ in 0..n {
        let cell = point / sub;
        let ht = Mat::from_fn(c, c, |i, j| h.value(j, i, cell));
        product = &product * &ht;
        point = (point * h.scale()) % resolution;
    }
    product
}

fn require_scale(grid: &GridSpec, scale: usize, name: &str) -> Result<()> {
    if grid.scale() != scale {
        return Err(Error::InvalidParameter(format!(
            "{name} is defined for N = {scale}, got N = {}",
            grid.scale()
        )));
    }
    Ok(())
}

fn require_depth(grid: &GridSpec) -> Result<()> {
    if grid.depth() < 1 {
        return Err(Error::InvalidParameter("grid depth K must be at least 1".into()));
    }
    Ok(())
}

/// Haar low-pass filter `h(x) = (1 + e^{2πix})/√2`, `N = 2`, `m ≡ 1`.
///
/// Cells of `[0, 1/2)` take the formula at their left endpoint; the partner
/// cell `t + M/2` keeps the formula's phase with modulus `√(2 − |h(t)|²)`, so
/// `|h(t)|² + |h(t + M/2)|² = 2` on every coset.
pub fn make_haar(grid: GridSpec) -> Result<FilterMatrix> {
    require_scale(&grid, 2, "the Haar filter")?;
    require_depth(&grid)?;
    let m = grid.cell_count();
    let half = m / 2;
    let formula = |t: usize| {
        let x = t as f64 / m as f64;
        (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, TAU * x)) / SQRT_2
    };
    let mut samples = vec![ZERO; m];
    for t in 0..half {
        let v = formula(t);
        samples[t] = v;
        let partner = formula(t + half);
        let deficit = 2.0 - v.norm_sqr();
        let modulus = if deficit > 8.0 * f64::EPSILON { deficit.sqrt() } else { 0.0 };
        samples[t + half] = if partner.norm() > 0.0 {
            partner / partner.norm() * modulus
        } else {
            Complex64::new(modulus, 0.0)
        };
    }
    FilterMatrix::new(SigmaChain::uniform(1), grid, vec![vec![StepFn::new(grid, samples)?]])
}

/// The constant filter `h ≡ 1`, `m ≡ 1`: `S_H f(x) = f(N·x)`.
pub fn make_constant(grid: GridSpec) -> Result<FilterMatrix> {
    require_depth(&grid)?;
    let h = StepFn::from_fn(grid, |_| Complex64::new(1.0, 0.0));
    FilterMatrix::new(SigmaChain::uniform(1), grid, vec![vec![h]])
}

/// Shannon filter `h = √2·χ_{[-1/4, 1/4)}`, `N = 2`, `m ≡ 1`.
pub fn make_shannon(grid: GridSpec) -> Result<FilterMatrix> {
    require_scale(&grid, 2, "the Shannon filter")?;
    require_depth(&grid)?;
    let support = IntervalSet::from_fracs(&[(-1, 4, 1, 4)])?;
    let mask = support
        .cell_mask(grid.cell_count())
        .map_err(|_| Error::InvalidParameter("Shannon filter needs 4 | M".into()))?;
    let h = StepFn::from_fn(grid, |t| if mask[t] { Complex64::new(SQRT_2, 0.0) } else { ZERO });
    FilterMatrix::new(SigmaChain::uniform(1), grid, vec![vec![h]])
}

/// `σ₁ = [-1/2,-3/7) ∪ [-2/7,2/7) ∪ [3/7,1/2)`, `σ₂ = [-1/7,1/7)`.
pub fn journe_chain() -> SigmaChain {
    let s1 = IntervalSet::from_fracs(&[(-1, 2, -3, 7), (-2, 7, 2, 7), (3, 7, 1, 2)])
        .expect("literal set");
    let s2 = IntervalSet::from_fracs(&[(-1, 7, 1, 7)]).expect("literal set");
    SigmaChain::new(vec![s1, s2]).expect("σ₂ ⊆ σ₁")
}

fn aligned_mask(set: &IntervalSet, grid: &GridSpec, what: &str) -> Result<Vec<bool>> {
    set.cell_mask(grid.cell_count()).map_err(|_| {
        Error::InvalidParameter(format!(
            "{what} = {set} is not aligned with the grid of {} cells",
            grid.cell_count()
        ))
    })
}

/// The classical 2×2 Journé system: `h₁₁ = √2 on E₁`, `h₂₁ = √2 on E₂`,
/// `h₁₂ = h₂₂ = 0`, with `E₁ = [-2/7,-1/4) ∪ [-1/7,1/7) ∪ [1/4,2/7)` and
/// `E₂ = [-1/2,-3/7) ∪ [3/7,1/2)`.
pub fn make_bcm_journe(grid: GridSpec, phase: PhaseConvention) -> Result<FilterMatrix> {
    require_scale(&grid, 2, "the Journé system")?;
    require_depth(&grid)?;
    let e1 = IntervalSet::from_fracs(&[(-2, 7, -1, 4), (-1, 7, 1, 7), (1, 4, 2, 7)])?;
    let e2 = IntervalSet::from_fracs(&[(-1, 2, -3, 7), (3, 7, 1, 2)])?;
    let m1 = aligned_mask(&e1, &grid, "E₁")?;
    let m2 = aligned_mask(&e2, &grid, "E₂")?;
    let value = SQRT_2 * phase.factor();
    let on = |mask: &[bool]| {
        let mask = mask.to_vec();
        StepFn::from_fn(grid, move |t| if mask[t] { Complex64::new(value, 0.0) } else { ZERO })
    };
    let entries = vec![
        vec![on(&m1), StepFn::zeros(grid)],
        vec![on(&m2), StepFn::zeros(grid)],
    ];
    FilterMatrix::new(journe_chain(), grid, entries)
}

/// Monotone transition profile `θ: [0,1] → [0,1]` with `θ(0) = 0`, `θ(1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// `g(t)/(g(t)+g(1-t))` with `g(t) = e^{-1/t}`; smooth, flat at both ends.
    #[default]
    ExpBump,
    /// `6t⁵ − 15t⁴ + 10t³`.
    PolynomialC2,
}

impl Transition {
    pub fn eval(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Transition::ExpBump => {
                let g = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
                let (a, b) = (g(t), g(1.0 - t));
                if a + b == 0.0 {
                    0.0
                } else {
                    a / (a + b)
                }
            }
            Transition::PolynomialC2 => t * t * t * (t * (6.0 * t - 15.0) + 10.0),
        }
    }
}

/// Parameters of the smooth Journé family `H^q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JourneParams {
    /// `q(1/2) = √2·r`, `q(0) = √2·√(1 − r²)`.
    pub r: Rat,
    /// Half-width `ε` of the flat zones around the breakpoints.
    pub eps_smooth: Rat,
    pub transition: Transition,
    pub grid: GridSpec,
    pub phase: PhaseConvention,
}

impl JourneParams {
    /// `ε = 1/56`, `L = 56`, `K = 2`, exp-bump transition, literal phases.
    pub fn with_r(r: Rat) -> Self {
        JourneParams {
            r,
            eps_smooth: Rat::new(1, 56),
            transition: Transition::ExpBump,
            grid: GridSpec::new(2, 56, 2).expect("default grid"),
            phase: PhaseConvention::Literal,
        }
    }

    /// Breakpoints of `q` on `[0, 1/2]`, in increasing order:
    /// `1/7−ε, 3/14+ε, 2/7−ε, 5/14+ε, 3/7−ε, 3/7+ε`.
    pub fn breakpoints(&self) -> [Rat; 6] {
        let e = &self.eps_smooth;
        [
            Rat::new(1, 7) - e,
            Rat::new(3, 14) + e,
            Rat::new(2, 7) - e,
            Rat::new(5, 14) + e,
            Rat::new(3, 7) - e,
            Rat::new(3, 7) + e,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.r <= Rat::zero() || self.r >= Rat::one() {
            return Err(Error::InvalidParameter(format!("r = {} must lie in (0, 1)", self.r)));
        }
        if self.eps_smooth <= Rat::zero() || self.eps_smooth >= Rat::new(1, 28) {
            return Err(Error::InvalidParameter(format!(
                "ε = {} must lie in (0, 1/28)",
                self.eps_smooth
            )));
        }
        require_scale(&self.grid, 2, "the Journé family")?;
        require_depth(&self.grid)?;
        let m = self.grid.cell_count();
        for b in self.breakpoints() {
            let scaled = &b * &Rat::from_integer(m as i64);
            if !scaled.is_integer() {
                return Err(Error::InvalidParameter(format!(
                    "breakpoint {b} is not aligned with the grid of {m} cells"
                )));
            }
        }
        Ok(())
    }
}

impl Default for JourneParams {
    /// `r` derived from `δ = 0.1`, other fields as in [`JourneParams::with_r`].
    fn default() -> Self {
        let (_, _, r) = crate::lowpass::journe_radii(0.1).expect("0.1 is in range");
        JourneParams::with_r(Rat::from_f64(r).expect("finite"))
    }
}

/// Samples of the profile `q` on every cell (left-endpoint convention).
///
/// On `[0, 1/2)` the pieces are: `q(0) = √2√(1−r²)`, decreasing to 0 at
/// `1/7−ε`, zero up to `3/14+ε`, increasing to `√2` at `2/7−ε`, flat `√2` up to
/// `5/14+ε`, decreasing to 0 at `3/7−ε`, zero up to `3/7+ε`, increasing toward
/// `√2·r` at `1/2`. On `[1/2, 1)` each cell takes `√(2 − q(t − M/2)²)`.
pub fn journe_profile(params: &JourneParams) -> Result<Vec<f64>> {
    params.validate()?;
    let m = params.grid.cell_count();
    let half = m / 2;
    let r = params.r.to_f64();
    let q0 = SQRT_2 * (1.0 - r * r).sqrt();
    let [b1, b2, b3, b4, b5, b6] = params.breakpoints();
    let theta = |x: &Rat, lo: &Rat, hi: &Rat| {
        params.transition.eval(((x - lo) / (hi - lo)).to_f64())
    };
    let zero = Rat::zero();
    let half_point = Rat::new(1, 2);
    let mut q = vec![0.0; m];
    for (t, slot) in q.iter_mut().enumerate().take(half) {
        let x = Rat::new(t as i64, m as i64);
        *slot = if x.is_zero() {
            q0
        } else if x < b1 {
            q0 * (1.0 - theta(&x, &zero, &b1))
        } else if x <= b2 {
            0.0
        } else if x < b3 {
            SQRT_2 * theta(&x, &b2, &b3)
        } else if x <= b4 {
            SQRT_2
        } else if x < b5 {
            SQRT_2 * (1.0 - theta(&x, &b4, &b5))
        } else if x <= b6 {
            0.0
        } else {
            SQRT_2 * r * theta(&x, &b6, &half_point)
        };
    }
    for t in half..m {
        let partner = q[t - half];
        q[t] = (2.0 - partner * partner).max(0.0).sqrt();
    }
    Ok(q)
}

/// The smooth Journé system `H^q`:
/// `h₁₁ = q·χ_{[-2/7,2/7)}`, `h₁₂ = q(·+1/2)·χ_{[-1/7,1/7)}`,
/// `h₂₁ = √2·χ_{[-1/2,-3/7) ∪ [3/7,1/2)}`, `h₂₂ = 0`,
/// each multiplied by the chosen phase on its set.
pub fn make_journe_family(params: &JourneParams) -> Result<FilterMatrix> {
    let q = journe_profile(params)?;
    let grid = params.grid;
    let m = grid.cell_count();
    let chain = journe_chain();
    aligned_mask(chain.sigma(0), &grid.coarse()?, "σ₁")?;
    let a = aligned_mask(&IntervalSet::from_fracs(&[(-2, 7, 2, 7)])?, &grid, "[-2/7, 2/7)")?;
    let b = aligned_mask(&IntervalSet::from_fracs(&[(-1, 7, 1, 7)])?, &grid, "[-1/7, 1/7)")?;
    let e2 = aligned_mask(&IntervalSet::from_fracs(&[(-1, 2, -3, 7), (3, 7, 1, 2)])?, &grid, "E₂")?;
    let phase = params.phase.factor();
    let h11 = StepFn::from_fn(grid, |t| if a[t] { Complex64::new(phase * q[t], 0.0) } else { ZERO });
    let h12 = StepFn::from_fn(grid, |t| {
        if b[t] {
            Complex64::new(phase * q[(t + m / 2) % m], 0.0)
        } else {
            ZERO
        }
    });
    let h21 = StepFn::from_fn(grid, |t| if e2[t] { Complex64::new(phase * SQRT_2, 0.0) } else { ZERO });
    FilterMatrix::new(chain, grid, vec![vec![h11, h12], vec![h21, StepFn::zeros(grid)]])
}

/// A seeded random filter with `m ≡ c` (all `σᵢ` the full circle).
///
/// On each kernel coset the `c × (N·c)` block `[H(t) H(t + M/N) …]` is
/// `√N` times the first `c` rows of a random unitary, which is exactly the
/// filter equation. With `lowpass_bias > 0` the unitary is pulled toward a
/// permutation that puts `√N·I` on the cell of each coset nearest 0, which
/// makes low-pass certificates likely.
pub fn make_random(grid: GridSpec, c: usize, lowpass_bias: f64, seed: u64) -> Result<FilterMatrix> {
    require_depth(&grid)?;
    if c == 0 {
        return Err(Error::InvalidParameter("c must be at least 1".into()));
    }
    let n = grid.scale();
    let m = grid.cell_count();
    let coarse = m / n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![vec![ZERO; m]; c * c];
    for t in 0..coarse {
        let u = linalg::random_unitary(n * c, lowpass_bias, &mut rng);
        // block `k` of the identity-leaning unitary goes to the coset member
        // `dominant` positions away from the cell nearest 0
        let dominant = if t < coarse / 2 { 0 } else { n - 1 };
        for k in 0..n {
            let block = (k + n - dominant) % n;
            let x = t + k * coarse;
            for i in 0..c {
                for j in 0..c {
                    samples[i * c + j][x] = u[(i, block * c + j)] * (n as f64).sqrt();
                }
            }
        }
    }
    let mut flat = samples.into_iter();
    let entries = (0..c)
        .map(|_| (0..c).map(|_| StepFn::new(grid, flat.next().expect("c² entries"))).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    FilterMatrix::new(SigmaChain::uniform(c), grid, entries)
}
