//! The filter bundle: a JSON file holding one step filter exactly.
//!
//! Complex samples are written as `[re, im]` pairs of decimal strings using
//! the shortest representation that parses back to the same `f64`, so
//! `emit(parse(emit(x))) == emit(x)` byte for byte.

use std::collections::BTreeMap;

use num_complex::Complex64;
use purefilter::filter::{FilterMatrix, StepFn};
use purefilter::torus::{GridSpec, IntervalSet, SigmaChain};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const BUNDLE_FORMAT_VERSION: &str = "purefilter-bundle/1";

/// Where a bundle came from; informational only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

/// One filter entry `h_{i,j}`, with 1-based indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub i: usize,
    pub j: usize,
    pub samples: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBundle {
    pub format_version: String,
    #[serde(rename = "N")]
    pub scale: usize,
    #[serde(rename = "L")]
    pub base: usize,
    #[serde(rename = "K")]
    pub depth: u32,
    pub sigmas: Vec<IntervalSet>,
    pub entries: Vec<BundleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Shortest decimal that parses back to `x`.
pub fn decimal(x: f64) -> String {
    format!("{x}")
}

fn parse_decimal(text: &str) -> Result<f64, CliError> {
    text.parse::<f64>()
        .map_err(|_| CliError::Parse(format!("`{text}` is not a decimal number")))
}

impl FilterBundle {
    pub fn from_filter(h: &FilterMatrix, provenance: Option<Provenance>) -> Self {
        let grid = h.grid();
        let c = h.size();
        let entries = (0..c)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| BundleEntry {
                i: i + 1,
                j: j + 1,
                samples: h
                    .entry(i, j)
                    .samples()
                    .iter()
                    .map(|z| [decimal(z.re), decimal(z.im)])
                    .collect(),
            })
            .collect();
        FilterBundle {
            format_version: BUNDLE_FORMAT_VERSION.into(),
            scale: grid.scale(),
            base: grid.base(),
            depth: grid.depth(),
            sigmas: h.chain().sigmas().to_vec(),
            entries,
            provenance,
        }
    }

    /// Validates shapes and rebuilds the filter.
    pub fn to_filter(&self) -> Result<FilterMatrix, CliError> {
        if self.format_version != BUNDLE_FORMAT_VERSION {
            return Err(CliError::Parse(format!(
                "unsupported format_version `{}` (expected `{BUNDLE_FORMAT_VERSION}`)",
                self.format_version
            )));
        }
        let grid = GridSpec::new(self.scale, self.base, self.depth)?;
        let chain = SigmaChain::new(self.sigmas.clone())?;
        let c = chain.len();
        let m = grid.cell_count();
        let mut slots: Vec<Option<StepFn>> = vec![None; c * c];
        for entry in &self.entries {
            if entry.i == 0 || entry.j == 0 || entry.i > c || entry.j > c {
                return Err(CliError::Parse(format!("entry ({}, {}) outside 1..={c}", entry.i, entry.j)));
            }
            if entry.samples.len() != m {
                return Err(CliError::Parse(format!(
                    "entry ({}, {}) has {} samples, expected {m}",
                    entry.i,
                    entry.j,
                    entry.samples.len()
                )));
            }
            let samples = entry
                .samples
                .iter()
                .map(|[re, im]| Ok(Complex64::new(parse_decimal(re)?, parse_decimal(im)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let slot = &mut slots[(entry.i - 1) * c + entry.j - 1];
            if slot.is_some() {
                return Err(CliError::Parse(format!("entry ({}, {}) given twice", entry.i, entry.j)));
            }
            *slot = Some(StepFn::new(grid, samples)?);
        }
        let mut flat = slots.into_iter();
        let rows = (0..c)
            .map(|i| {
                (0..c)
                    .map(|j| {
                        flat.next().flatten().ok_or_else(|| {
                            CliError::Parse(format!("entry ({}, {}) is missing", i + 1, j + 1))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FilterMatrix::new(chain, grid, rows)?)
    }

    pub fn emit(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("bundle serializes");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("bundle: {e}")))
    }
}
