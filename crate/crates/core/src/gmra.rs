//! Finite resolution towers `V_0 ⊂ V_1 ⊂ …` and the intersection report.
//!
//! Level `k` is the step space on `(M/N)·N^k` cells, restricted to the `σᵢ`;
//! level 0 is the coarse grid of the filter. The embedding of level `k` into
//! level `k + 1` is `S_H` with `H` refined `k` times.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{filter_equation_residual, FilterMatrix};
use crate::lowpass::search_certificate;
use crate::ruelle::{
    classify_purity, isometry_residual, ruelle_apply, Eigenpair, PurityStatus, PurityVerdict,
    Tolerances, VecField, DEFAULT_DIMENSION_CAP,
};
use crate::torus::GridSpec;

const EMBEDDING_TRIALS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerLevel {
    pub grid: GridSpec,
    /// `Σᵢ #(cells in σᵢ)`.
    pub dimension: usize,
    /// `|‖S_H f‖² − ‖f‖²|` over random probes for the embedding into the
    /// next level; `None` on the top level.
    pub embedding_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Tower {
    filter: FilterMatrix,
    levels: Vec<TowerLevel>,
    /// `embeddings[k]` is `H` refined `k` times.
    embeddings: Vec<FilterMatrix>,
}

impl Tower {
    pub fn filter(&self) -> &FilterMatrix {
        &self.filter
    }

    pub fn depth(&self) -> usize {
        self.embeddings.len()
    }

    pub fn levels(&self) -> &[TowerLevel] {
        &self.levels
    }

    /// Embeds a field on level `k` into level `k + 1`.
    pub fn embed(&self, k: usize, f: &VecField) -> Result<VecField> {
        let h = self.embeddings.get(k).ok_or_else(|| {
            Error::InvalidParameter(format!("level {k} has no embedding in a tower of depth {}", self.depth()))
        })?;
        ruelle_apply(h, f)
    }

    /// Embeds a field on level `from` into level `to ≥ from`.
    pub fn embed_to(&self, from: usize, to: usize, f: &VecField) -> Result<VecField> {
        (from..to).try_fold(f.clone(), |g, k| self.embed(k, &g))
    }
}

pub fn build_tower(h: &FilterMatrix, depth: usize, seed: u64) -> Result<Tower> {
    build_tower_with_cap(h, depth, seed, DEFAULT_DIMENSION_CAP)
}

pub fn build_tower_with_cap(h: &FilterMatrix, depth: usize, seed: u64, cap: usize) -> Result<Tower> {
    if depth == 0 {
        return Err(Error::InvalidParameter("tower depth must be at least 1".into()));
    }
    let tolerance = Tolerances::default().tol_filter;
    let residual = filter_equation_residual(h).max_abs_residual;
    if !(residual <= tolerance) {
        return Err(Error::NotAFilter { residual, tolerance });
    }
    let mut embeddings = Vec::with_capacity(depth);
    let mut current = h.clone();
    for _ in 0..depth {
        let next = current.refine()?;
        embeddings.push(std::mem::replace(&mut current, next));
    }
    let mut levels = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        let grid = match embeddings.get(k) {
            Some(e) => e.grid().coarse()?,
            None => *embeddings[k - 1].grid(),
        };
        let dimension = h
            .chain()
            .sigmas()
            .iter()
            .map(|s| s.cell_mask(grid.cell_count()).map(|m| m.iter().filter(|&&b| b).count()))
            .sum::<Result<usize>>()?;
        if dimension > cap {
            return Err(Error::DimensionCap { dim: dimension, cap });
        }
        let embedding_residual = embeddings
            .get(k)
            .map(|e| isometry_residual(e, EMBEDDING_TRIALS, seed.wrapping_add(k as u64)))
            .transpose()?;
        levels.push(TowerLevel { grid, dimension, embedding_residual });
    }
    Ok(Tower { filter: h.clone(), levels, embeddings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionStatus {
    /// `∩ V_j ≠ {0}`, witnessed by an eigenvector.
    Nontrivial,
    /// `∩ V_j = {0}`, backed by a low-pass certificate.
    Trivial,
    /// No conclusion for the continuous model.
    Inconclusive,
}

/// One row of the equivalence between a nontrivial intersection and the
/// existence of a unit-modulus eigenvector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub condition: String,
    /// `None` when the condition is not decided.
    pub holds: Option<bool>,
    pub evidence: String,
}

#[derive(Clone, Debug)]
pub struct IntersectionReport {
    pub purity: PurityVerdict,
    pub status: IntersectionStatus,
    pub witness: Option<Eigenpair>,
    pub equivalence_table: Vec<EquivalenceRow>,
    pub caveats: Vec<String>,
    /// Present for the constant `1 × 1` filter `h ≡ 1`.
    pub dyadic_narrative: Option<String>,
}

/// Classifies `H`, attaches a certificate when one is found, and phrases the
/// result as a statement about `∩ V_j`.
pub fn intersection_report(h: &FilterMatrix, tols: &Tolerances) -> Result<IntersectionReport> {
    let mut purity = classify_purity(h, tols)?;
    if let Some(cert) = search_certificate(h) {
        purity = purity.upgrade_with(cert);
    }
    Ok(report_from_verdict(h, purity))
}

/// The report is a function of the verdict alone (plus the filter's shape).
pub fn report_from_verdict(h: &FilterMatrix, purity: PurityVerdict) -> IntersectionReport {
    let status = match purity.status {
        PurityStatus::NotPureCertified => IntersectionStatus::Nontrivial,
        PurityStatus::PureCertified => IntersectionStatus::Trivial,
        PurityStatus::PureAtResolution | PurityStatus::Inconclusive => IntersectionStatus::Inconclusive,
    };
    let witness = purity.eigenpairs.first().cloned();
    let decided = match status {
        IntersectionStatus::Nontrivial => Some(true),
        IntersectionStatus::Trivial => Some(false),
        IntersectionStatus::Inconclusive => None,
    };
    let eigen_evidence = match (&witness, &purity.certificate) {
        (Some(pair), _) => format!(
            "S_H f = λ·f with λ = {}, relative residual {:e}",
            format_complex(pair.lambda),
            pair.residual
        ),
        (None, Some(cert)) => format!(
            "low-pass certificate with a = {}, δ = {}, F = {} excludes eigenvectors",
            cert.block_size_a, cert.delta, cert.f
        ),
        (None, None) => format!(
            "no unit-modulus eigenpair of the step operator at {} cells; no certificate",
            purity.resolution.cell_count()
        ),
    };
    let intersection_evidence = match status {
        IntersectionStatus::Nontrivial => {
            "the eigenvector lies in every V_j of the continuous model".to_string()
        }
        IntersectionStatus::Trivial => "S_H is a pure isometry".to_string(),
        IntersectionStatus::Inconclusive => {
            "step eigen-analysis cannot exclude eigenvectors that are not step functions".to_string()
        }
    };
    let equivalence_table = vec![
        EquivalenceRow {
            condition: "m is finite on a set of positive measure".into(),
            holds: Some(true),
            evidence: format!("m ≤ c = {}", h.size()),
        },
        EquivalenceRow {
            condition: "∩ V_j ≠ {0}".into(),
            holds: decided,
            evidence: intersection_evidence,
        },
        EquivalenceRow {
            condition: "S_H has an eigenvector with |λ| = 1".into(),
            holds: decided,
            evidence: eigen_evidence,
        },
    ];
    let mut caveats = vec![
        "density of ∪ V_j is not representable at finite depth and is not checked".to_string(),
    ];
    match status {
        IntersectionStatus::Nontrivial => caveats.push(
            "a nontrivial intersection is infinite-dimensional; only one vector of it is exhibited"
                .into(),
        ),
        IntersectionStatus::Inconclusive => caveats.push(format!(
            "verdict {:?} at {} cells is not a statement about the continuous operator",
            purity.status,
            purity.resolution.cell_count()
        )),
        IntersectionStatus::Trivial => {}
    }
    let dyadic_narrative = is_constant_one(h).then(|| {
        let n = h.scale();
        format!(
            "h ≡ 1 with m ≡ 1 is the filter of V_0 = ℓ²(ℤ) inside ℓ²(D), D the group of \
             {}-adic rationals (dyadic rationals for N = 2). On the Fourier side the dilation \
             acts on V_0 as f(z) ↦ f(z^{n}), so S_H f(x) = f({n}x). The indicator of the \
             origin of D is fixed by the dilation and lies in every V_j; its Fourier image is \
             the constant 1, the eigenvector f ≡ 1 with λ = 1 found here. Hence ∩ V_j ≠ {{0}}.",
            n
        )
    });
    IntersectionReport { purity, status, witness, equivalence_table, caveats, dyadic_narrative }
}

fn is_constant_one(h: &FilterMatrix) -> bool {
    h.size() == 1
        && h.chain().sigma(0).is_full()
        && h.entry(0, 0).samples().iter().all(|z| *z == Complex64::new(1.0, 0.0))
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}
