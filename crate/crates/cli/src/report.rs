//! Versioned JSON reports.
//!
//! Every number is a decimal string (shortest round-trip form) and every
//! pass/fail claim sits next to the tolerance it was checked under.
//! `timings` is the only field allowed to differ between identical runs.

use std::collections::BTreeMap;

use num_complex::Complex64;
use purefilter::filter::{FilterMatrix, ResidualReport};
use purefilter::gmra::{EquivalenceRow, IntersectionReport, IntersectionStatus, Tower};
use purefilter::lowpass::{Certificate, Check, JourneDerivation};
use purefilter::ruelle::{Eigenpair, PurityStatus, PurityVerdict, Tolerances};
use purefilter::torus::{GridSpec, IntervalSet, Rat};
use serde::Serialize;

use crate::bundle::{self, Provenance};

pub const REPORT_FORMAT_VERSION: &str = "purefilter-report/1";

/// Shortest round-trip decimal with `-0` reported as `0`.
pub fn decimal(x: f64) -> String {
    bundle::decimal(if x == 0.0 { 0.0 } else { x })
}

fn complex(z: Complex64) -> [String; 2] {
    [decimal(z.re), decimal(z.im)]
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub format_version: String,
    pub command: String,
    pub filter: FilterShape,
    pub tolerances: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, String>,
    pub sections: Sections,
    pub outcome: Outcome,
    pub timings: BTreeMap<String, String>,
}

impl Report {
    pub fn new(command: &str, h: &FilterMatrix, provenance: Option<&Provenance>) -> Self {
        Report {
            format_version: REPORT_FORMAT_VERSION.into(),
            command: command.into(),
            filter: FilterShape::of(h, provenance),
            tolerances: BTreeMap::new(),
            seeds: BTreeMap::new(),
            sections: Sections::default(),
            outcome: Outcome { exit_code: 0, summary: String::new() },
            timings: BTreeMap::new(),
        }
    }

    pub fn record_tolerances(&mut self, tols: &Tolerances, isometry: f64) {
        let t = &mut self.tolerances;
        t.insert("tol_eig".into(), decimal(tols.tol_eig));
        t.insert("tol_res".into(), decimal(tols.tol_res));
        t.insert("tol_norm".into(), decimal(tols.tol_norm));
        t.insert("tol_filter".into(), decimal(tols.tol_filter));
        t.insert("tol_isometry".into(), decimal(isometry));
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterShape {
    #[serde(rename = "N")]
    pub scale: usize,
    #[serde(rename = "L")]
    pub base: usize,
    #[serde(rename = "K")]
    pub depth: u32,
    pub cells: usize,
    pub size: usize,
    pub sigmas: Vec<IntervalSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl FilterShape {
    fn of(h: &FilterMatrix, provenance: Option<&Provenance>) -> Self {
        let g = h.grid();
        FilterShape {
            scale: g.scale(),
            base: g.base(),
            depth: g.depth(),
            cells: g.cell_count(),
            size: h.size(),
            sigmas: h.chain().sigmas().to_vec(),
            provenance: provenance.cloned(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Sections {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_equation: Option<ResidualSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generalized_equation: Option<GeneralizedSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isometry: Option<IsometrySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<PuritySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub journe_derivation: Option<DerivationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_variant: Option<PhaseVariantSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmra: Option<GmraSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection: Option<IntersectionSection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
}

/// Location of the largest residual.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub cell: usize,
    /// Left endpoint of the cell as an exact rational.
    pub point: Rat,
    /// 1-based `(i, j)` entry of the residual matrix.
    pub pair: [usize; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSection {
    pub max_abs_residual: String,
    pub tolerance: String,
    pub passes: bool,
    pub resolution: usize,
    pub witness: Witness,
}

impl ResidualSection {
    pub fn new(r: &ResidualReport, grid: &GridSpec, tolerance: f64) -> Self {
        ResidualSection {
            max_abs_residual: decimal(r.max_abs_residual),
            tolerance: decimal(tolerance),
            passes: r.max_abs_residual <= tolerance,
            resolution: r.resolution,
            witness: Witness {
                cell: r.argmax_cell,
                point: grid.point(r.argmax_cell).value().clone(),
                pair: [r.argmax_pair.0 + 1, r.argmax_pair.1 + 1],
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneralizedRow {
    pub n: u32,
    #[serde(flatten)]
    pub residual: ResidualSection,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedRow {
    pub n: u32,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GeneralizedSection {
    pub n_max: u32,
    pub rows: Vec<GeneralizedRow>,
    pub skipped: Vec<SkippedRow>,
}

impl GeneralizedSection {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.residual.passes)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometrySection {
    pub trials: usize,
    pub seed: u64,
    pub max_abs_residual: String,
    pub tolerance: String,
    pub passes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenpairSection {
    pub lambda: [String; 2],
    pub residual: String,
    pub tol_res: String,
    pub cell_norm_deviation: String,
    pub tol_norm: String,
    /// `‖f(cell)‖ = 1` at every cell, compared exactly.
    pub unit_norm_everywhere: bool,
    /// `vector[i][t]` is component `i + 1` at cell `t` of the coarse grid.
    pub vector: Vec<Vec<[String; 2]>>,
}

impl EigenpairSection {
    fn new(pair: &Eigenpair, tols: &Tolerances) -> Self {
        let f = &pair.vector;
        let cells = f.grid().cell_count();
        EigenpairSection {
            lambda: complex(pair.lambda),
            residual: decimal(pair.residual),
            tol_res: decimal(tols.tol_res),
            cell_norm_deviation: decimal(pair.cell_norm_deviation),
            tol_norm: decimal(tols.tol_norm),
            unit_norm_everywhere: (0..cells).all(|t| f.cell_norm(t) == 1.0),
            vector: f
                .components()
                .iter()
                .map(|c| c.samples().iter().map(|z| complex(*z)).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleRowSection {
    pub n: u32,
    pub max_deviation: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PuritySection {
    pub status: PurityStatus,
    pub dimension: usize,
    pub resolution: usize,
    pub max_abs_eigenvalue: String,
    /// Eigenvalues with `||μ| − 1| ≤ tol_eig`.
    pub near_unit: usize,
    pub tol_eig: String,
    pub eigenpairs: Vec<EigenpairSection>,
    pub anomalies: Vec<String>,
    pub decay_curve: Vec<String>,
    pub martingale_table: Vec<MartingaleRowSection>,
}

impl PuritySection {
    pub fn new(v: &PurityVerdict) -> Self {
        let d = &v.diagnostics;
        PuritySection {
            status: v.status,
            dimension: d.dimension,
            resolution: v.resolution.cell_count(),
            max_abs_eigenvalue: decimal(d.max_abs_eigenvalue),
            near_unit: v.spectrum.iter().filter(|s| s.near_unit).count(),
            tol_eig: decimal(v.tolerances.tol_eig),
            eigenpairs: v.eigenpairs.iter().map(|p| EigenpairSection::new(p, &v.tolerances)).collect(),
            anomalies: v.anomalies.clone(),
            decay_curve: d.decay_curve.iter().map(|x| decimal(*x)).collect(),
            martingale_table: d
                .martingale_table
                .iter()
                .map(|r| MartingaleRowSection { n: r.n, max_deviation: decimal(r.max_deviation) })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateSection {
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_size_a: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<IntervalSet>,
    /// Must be at least `required_min_singular = 1 + δ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_singular_on_f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_min_singular: Option<String>,
    /// Must stay below `eps = min(1/8, δ/8)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_offblock_norm_on_f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    /// Must be positive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure_f_cap_alpha_f: Option<Rat>,
}

impl CertificateSection {
    pub fn new(cert: Option<&Certificate>) -> Self {
        match cert {
            None => CertificateSection {
                found: false,
                block_size_a: None,
                delta: None,
                f: None,
                min_singular_on_f: None,
                required_min_singular: None,
                max_offblock_norm_on_f: None,
                eps: None,
                measure_f_cap_alpha_f: None,
            },
            Some(c) => CertificateSection {
                found: true,
                block_size_a: Some(c.block_size_a),
                delta: Some(decimal(c.delta)),
                f: Some(c.f.clone()),
                min_singular_on_f: Some(decimal(c.margins.min_singular_on_f)),
                required_min_singular: Some(decimal(1.0 + c.delta)),
                max_offblock_norm_on_f: Some(decimal(c.margins.max_offblock_norm_on_f)),
                eps: Some(decimal(c.eps)),
                measure_f_cap_alpha_f: Some(c.margins.measure_f_cap_alpha_f.clone()),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSection {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub margin: String,
    pub holds: bool,
}

impl From<&Check> for CheckSection {
    fn from(c: &Check) -> Self {
        CheckSection {
            name: c.name.clone(),
            lhs: decimal(c.lhs),
            rhs: decimal(c.rhs),
            margin: decimal(c.margin),
            holds: c.holds,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivationSection {
    pub delta: String,
    pub n: usize,
    pub r1: String,
    pub r2: String,
    pub r: String,
    pub f: IntervalSet,
    pub checks: Vec<CheckSection>,
}

impl From<&JourneDerivation> for DerivationSection {
    fn from(d: &JourneDerivation) -> Self {
        DerivationSection {
            delta: decimal(d.delta),
            n: d.n,
            r1: decimal(d.r1),
            r2: decimal(d.r2),
            r: decimal(d.r),
            f: d.f.clone(),
            checks: d.checks.iter().map(CheckSection::from).collect(),
        }
    }
}

/// The same filter under the other phase convention (`Sign` is exactly `−H`).
#[derive(Clone, Debug, Serialize)]
pub struct PhaseVariantSection {
    pub variant: String,
    pub status: PurityStatus,
    pub agrees: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSection {
    pub level: usize,
    pub cells: usize,
    pub dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_residual: Option<String>,
    pub tolerance: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GmraSection {
    pub depth: usize,
    pub seed: u64,
    pub levels: Vec<LevelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GmraSection {
    pub fn new(tower: &Tower, seed: u64, tolerance: f64) -> Self {
        GmraSection {
            depth: tower.depth(),
            seed,
            levels: tower
                .levels()
                .iter()
                .enumerate()
                .map(|(k, l)| LevelSection {
                    level: k,
                    cells: l.grid.cell_count(),
                    dimension: l.dimension,
                    embedding_residual: l.embedding_residual.map(decimal),
                    tolerance: decimal(tolerance),
                })
                .collect(),
            error: None,
        }
    }

    pub fn failed(depth: usize, seed: u64, error: String) -> Self {
        GmraSection { depth, seed, levels: Vec::new(), error: Some(error) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionSection {
    pub status: IntersectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_lambda: Option<[String; 2]>,
    pub equivalence_table: Vec<EquivalenceRow>,
    pub caveats: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyadic_narrative: Option<String>,
}

impl From<&IntersectionReport> for IntersectionSection {
    fn from(r: &IntersectionReport) -> Self {
        IntersectionSection {
            status: r.status,
            witness_lambda: r.witness.as_ref().map(|w| complex(w.lambda)),
            equivalence_table: r.equivalence_table.clone(),
            caveats: r.caveats.clone(),
            dyadic_narrative: r.dyadic_narrative.clone(),
        }
    }
}
