//! Command orchestration. Numeric work is delegated to `purefilter`; this
//! module only sequences checks, fills reports and maps them to exit codes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use purefilter::filter::{
    filter_equation_residual, generalized_filter_residual, make_bcm_journe, make_constant,
    make_haar, make_journe_family, make_shannon, FilterMatrix, JourneParams, PhaseConvention,
    StepFn, Transition,
};
use purefilter::gmra::{build_tower_with_cap, report_from_verdict};
use purefilter::lowpass::{derive_journe, eps_for, search_certificate, JourneDerivation};
use purefilter::ruelle::{
    classify_purity_with_cap, isometry_residual, PurityStatus, Tolerances, DEFAULT_DIMENSION_CAP,
};
use purefilter::torus::{GridSpec, Rat};

use crate::bundle::{FilterBundle, Provenance};
use crate::report::{
    decimal,
    CertificateSection, DerivationSection, GeneralizedRow, GeneralizedSection, GmraSection,
    IntersectionSection, IsometrySection, PhaseVariantSection, PuritySection, Report,
    ResidualSection, SkippedRow,
};
use crate::{
    CliError, DIMENSION_CAP_ENV, EXIT_INCONCLUSIVE, EXIT_NOT_PURE, EXIT_OK,
    EXIT_VERIFY_FAILED,
};

const ISOMETRY_TRIALS: usize = 100;
const TOWER_DEPTH: usize = 2;

#[derive(Parser, Debug)]
#[command(name = "purefilter", version, about = "Generate, verify and classify generalized wavelet filters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a filter bundle for a built-in generator.
    Generate(GenerateArgs),
    /// Check the filter equations and the isometry property of a bundle.
    Verify(VerifyArgs),
    /// Decide whether the Ruelle operator of a bundle is a pure isometry.
    Classify(ClassifyArgs),
    /// Export the transfer-matrix spectrum of a bundle as CSV.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Generator {
    Haar,
    Shannon,
    Constant,
    BcmJourne,
    Journe,
}

impl Generator {
    fn id(self) -> &'static str {
        match self {
            Generator::Haar => "haar",
            Generator::Shannon => "shannon",
            Generator::Constant => "constant",
            Generator::BcmJourne => "bcm_journe",
            Generator::Journe => "journe",
        }
    }

    /// Default `(L, K)`; the smallest grids on which each generator is exact.
    fn default_grid(self) -> (usize, u32) {
        match self {
            Generator::Haar | Generator::Constant => (1, 4),
            Generator::Shannon => (4, 2),
            Generator::BcmJourne => (28, 2),
            Generator::Journe => (56, 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Literal,
    Sign,
}

impl From<PhaseArg> for PhaseConvention {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Literal => PhaseConvention::Literal,
            PhaseArg::Sign => PhaseConvention::Sign,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum TransitionArg {
    ExpBump,
    PolynomialC2,
}

impl From<TransitionArg> for Transition {
    fn from(t: TransitionArg) -> Self {
        match t {
            TransitionArg::ExpBump => Transition::ExpBump,
            TransitionArg::PolynomialC2 => Transition::PolynomialC2,
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    /// Dilation factor N.
    #[arg(long = "n", default_value_t = 2)]
    pub scale: usize,
    /// Base cell count L; the grid has L·N^K cells.
    #[arg(long)]
    pub base: Option<usize>,
    /// Resolution depth K.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Certificate margin δ for `journe`; r is derived from it.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Explicit r for `journe` (rational "p/q" or terminating decimal).
    #[arg(long)]
    pub r: Option<String>,
    /// Half-width of the flat zones of the `journe` profile.
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long, value_enum)]
    pub transition: Option<TransitionArg>,
    /// Phase convention for `bcm_journe` and `journe`.
    #[arg(long, value_enum, default_value_t = PhaseArg::Literal)]
    pub phase: PhaseArg,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    pub bundle: PathBuf,
    /// Largest n for the n-step filter identity.
    #[arg(long, default_value_t = 3)]
    pub nmax: u32,
    /// Seed for the random isometry probes and the tower embeddings.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_filter: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_isometry: f64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub check: CheckArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub check: CheckArgs,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_eig: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_res: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_norm: f64,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub check: CheckArgs,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_eig: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_res: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_norm: f64,
    /// CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("purefilter: {e}");
        e.exit_code()
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_rat(flag: &str, text: &str) -> Result<Rat, CliError> {
    Rat::from_str(text)
        .ok()
        .or_else(|| text.parse::<f64>().ok().and_then(Rat::from_f64))
        .ok_or_else(|| CliError::Usage(format!("--{flag}: `{text}` is not a number")))
}

fn dimension_cap() -> Result<usize, CliError> {
    match std::env::var(DIMENSION_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{DIMENSION_CAP_ENV}=`{v}` is not a positive integer"))),
        Err(_) => Ok(DEFAULT_DIMENSION_CAP),
    }
}

fn millis(start: Instant) -> String {
    format!("{:.3}", start.elapsed().as_secs_f64() * 1e3)
}

/// Builds the filter and its provenance record.
pub fn generate(a: &GenerateArgs) -> Result<(FilterMatrix, Provenance), CliError> {
    let (base, depth) = a.generator.default_grid();
    let grid = GridSpec::new(a.scale, a.base.unwrap_or(base), a.depth.unwrap_or(depth))?;
    let mut params = BTreeMap::new();
    params.insert("N".to_string(), grid.scale().to_string());
    params.insert("L".to_string(), grid.base().to_string());
    params.insert("K".to_string(), grid.depth().to_string());
    let phase: PhaseConvention = a.phase.into();
    let h = match a.generator {
        Generator::Haar => make_haar(grid)?,
        Generator::Shannon => make_shannon(grid)?,
        Generator::Constant => make_constant(grid)?,
        Generator::BcmJourne => {
            params.insert("phase".into(), phase_name(phase).into());
            make_bcm_journe(grid, phase)?
        }
        Generator::Journe => {
            let mut jp = match &a.r {
                None => {
                    let d = derive_journe(a.delta, grid)?;
                    require_checks(&d)?;
                    params.insert("n".into(), d.n.to_string());
                    params.insert("r1".into(), decimal(d.r1));
                    params.insert("r2".into(), decimal(d.r2));
                    d.params
                }
                Some(text) => {
                    let r = parse_rat("r", text)?;
                    require_explicit_r(&r, a.delta)?;
                    JourneParams { grid, ..JourneParams::with_r(r) }
                }
            };
            if let Some(e) = &a.eps {
                jp.eps_smooth = parse_rat("eps", e)?;
            }
            if let Some(t) = a.transition {
                jp.transition = t.into();
            }
            jp.phase = phase;
            params.insert("delta".into(), decimal(a.delta));
            params.insert("r".into(), decimal(jp.r.to_f64()));
            params.insert("r_exact".into(), jp.r.to_string());
            params.insert("eps_smooth".into(), jp.eps_smooth.to_string());
            params.insert("transition".into(), transition_name(jp.transition).into());
            params.insert("phase".into(), phase_name(phase).into());
            make_journe_family(&jp)?
        }
    };
    Ok((h, Provenance { generator: a.generator.id().into(), params }))
}

fn phase_name(p: PhaseConvention) -> &'static str {
    match p {
        PhaseConvention::Literal => "literal",
        PhaseConvention::Sign => "sign",
    }
}

fn transition_name(t: Transition) -> &'static str {
    match t {
        Transition::ExpBump => "exp_bump",
        Transition::PolynomialC2 => "polynomial_c2",
    }
}

fn require_checks(d: &JourneDerivation) -> Result<(), CliError> {
    let failed: Vec<&str> = d.checks.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("violated inequality: {}", failed.join("; "))))
    }
}

/// The two inequalities tying an explicit `r` to `δ`.
fn require_explicit_r(r: &Rat, delta: f64) -> Result<(), CliError> {
    let r = r.to_f64();
    if !(delta > 0.0 && delta < std::f64::consts::SQRT_2 - 1.0) {
        return Err(CliError::Usage(format!("violated inequality: 0 < δ < √2 − 1 (δ = {delta})")));
    }
    if !(2.0 * r < eps_for(delta)) {
        return Err(CliError::Usage(format!(
            "violated inequality: 2r < min(1/8, δ/8) (2r = {}, bound {})",
            2.0 * r,
            eps_for(delta)
        )));
    }
    let lhs = 1.0 / (std::f64::consts::SQRT_2 * (1.0 - 2.0 * r * r).sqrt());
    if !(lhs <= 1.0 / (1.0 + delta)) {
        return Err(CliError::Usage(format!(
            "violated inequality: 1/(√2·√(1−2r²)) ≤ 1/(1+δ) ({lhs} > {})",
            1.0 / (1.0 + delta)
        )));
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> Result<i32, CliError> {
    let (h, provenance) = generate(a)?;
    write_output(a.out.as_deref(), &FilterBundle::from_filter(&h, Some(provenance)).emit())?;
    Ok(EXIT_OK)
}

/// Reads a bundle and rebuilds its filter; every failure is a parse error.
pub fn load_bundle(path: &Path) -> Result<(FilterMatrix, Option<Provenance>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let bundle = FilterBundle::parse(&text)?;
    let h = bundle.to_filter().map_err(|e| match e {
        CliError::Core(inner) => CliError::Parse(inner.to_string()),
        other => other,
    })?;
    Ok((h, bundle.provenance))
}

/// Runs the filter-equation, n-step and isometry checks into `report`.
/// Returns whether all of them pass.
pub fn run_checks(h: &FilterMatrix, a: &CheckArgs, report: &mut Report) -> Result<bool, CliError> {
    report.seeds.insert("isometry".into(), a.seed.to_string());
    let grid = *h.grid();

    let start = Instant::now();
    let fe = ResidualSection::new(&filter_equation_residual(h), &grid, a.tol_filter);
    report.timings.insert("filter_equation_ms".into(), millis(start));

    let start = Instant::now();
    let mut gen = GeneralizedSection { n_max: a.nmax, ..Default::default() };
    for n in 1..=a.nmax {
        if n > grid.depth() {
            gen.skipped.push(SkippedRow {
                n,
                reason: format!("n exceeds the resolution depth K = {}", grid.depth()),
            });
            continue;
        }
        let r = generalized_filter_residual(h, n)?;
        gen.rows.push(GeneralizedRow { n, residual: ResidualSection::new(&r, &grid, a.tol_filter) });
    }
    report.timings.insert("generalized_equation_ms".into(), millis(start));

    let start = Instant::now();
    let iso = isometry_residual(h, ISOMETRY_TRIALS, a.seed)?;
    let iso = IsometrySection {
        trials: ISOMETRY_TRIALS,
        seed: a.seed,
        max_abs_residual: decimal(iso),
        tolerance: decimal(a.tol_isometry),
        passes: iso <= a.tol_isometry,
    };
    report.timings.insert("isometry_ms".into(), millis(start));

    let ok = fe.passes && gen.passes() && iso.passes;
    report.sections.filter_equation = Some(fe);
    report.sections.generalized_equation = Some(gen);
    report.sections.isometry = Some(iso);
    Ok(ok)
}

fn verify_summary(report: &Report) -> String {
    let s = &report.sections;
    let mut failures = Vec::new();
    if let Some(fe) = s.filter_equation.as_ref().filter(|f| !f.passes) {
        failures.push(format!(
            "filter equation residual {} > {} at cell {} (x = {}), entry ({}, {})",
            fe.max_abs_residual, fe.tolerance, fe.witness.cell, fe.witness.point, fe.witness.pair[0], fe.witness.pair[1]
        ));
    }
    if let Some(gen) = &s.generalized_equation {
        for row in gen.rows.iter().filter(|r| !r.residual.passes) {
            failures.push(format!(
                "{}-step identity residual {} > {} at cell {}",
                row.n, row.residual.max_abs_residual, row.residual.tolerance, row.residual.witness.cell
            ));
        }
    }
    if let Some(iso) = s.isometry.as_ref().filter(|i| !i.passes) {
        failures.push(format!("isometry residual {} > {}", iso.max_abs_residual, iso.tolerance));
    }
    if failures.is_empty() {
        "all filter and isometry checks pass".into()
    } else {
        failures.join("; ")
    }
}

fn finish(report: &mut Report, exit_code: i32, summary: String, out: Option<&Path>) -> Result<i32, CliError> {
    report.outcome.exit_code = exit_code;
    report.outcome.summary = summary;
    eprintln!("purefilter {}: {}", report.command, report.outcome.summary);
    write_output(out, &report.to_json())?;
    Ok(exit_code)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32, CliError> {
    let (h, provenance) = load_bundle(&a.check.bundle)?;
    let mut report = Report::new("verify", &h, provenance.as_ref());
    report.record_tolerances(&Tolerances::default(), a.check.tol_isometry);
    report.tolerances.insert("tol_filter".into(), decimal(a.check.tol_filter));
    let ok = run_checks(&h, &a.check, &mut report)?;
    let summary = verify_summary(&report);
    finish(&mut report, if ok { EXIT_OK } else { EXIT_VERIFY_FAILED }, summary, a.out.as_deref())
}

fn tolerances(check: &CheckArgs, tol_eig: f64, tol_res: f64, tol_norm: f64) -> Tolerances {
    Tolerances { tol_eig, tol_res, tol_norm, tol_filter: check.tol_filter }
}

fn negated(h: &FilterMatrix) -> Result<FilterMatrix, CliError> {
    let rows = (0..h.size())
        .map(|i| {
            (0..h.size())
                .map(|j| {
                    let e = h.entry(i, j);
                    StepFn::new(*e.grid(), e.samples().iter().map(|z| -z).collect())
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FilterMatrix::new(h.chain().clone(), *h.grid(), rows)?)
}

fn exit_for(status: PurityStatus) -> i32 {
    match status {
        PurityStatus::PureCertified => EXIT_OK,
        PurityStatus::NotPureCertified => EXIT_NOT_PURE,
        PurityStatus::PureAtResolution | PurityStatus::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn cmd_classify(a: &ClassifyArgs) -> Result<i32, CliError> {
    let (h, provenance) = load_bundle(&a.check.bundle)?;
    let cap = dimension_cap()?;
    let tols = tolerances(&a.check, a.tol_eig, a.tol_res, a.tol_norm);
    let mut report = Report::new("classify", &h, provenance.as_ref());
    report.record_tolerances(&tols, a.check.tol_isometry);
    report.tolerances.insert("dimension_cap".into(), cap.to_string());
    if !run_checks(&h, &a.check, &mut report)? {
        let summary = format!("verification failed: {}", verify_summary(&report));
        return finish(&mut report, EXIT_VERIFY_FAILED, summary, a.out.as_deref());
    }

    let start = Instant::now();
    let verdict = classify_purity_with_cap(&h, &tols, cap)?;
    report.timings.insert("purity_ms".into(), millis(start));
    let start = Instant::now();
    let certificate = search_certificate(&h);
    report.timings.insert("certificate_ms".into(), millis(start));
    let verdict = match &certificate {
        Some(c) => verdict.upgrade_with(c.clone()),
        None => verdict,
    };
    report.sections.purity = Some(PuritySection::new(&verdict));
    report.sections.certificate = Some(CertificateSection::new(certificate.as_ref()));

    if let Some(p) = &provenance {
        let variant_of = matches!(p.generator.as_str(), "journe" | "bcm_journe");
        if p.generator == "journe" {
            if let Some(delta) = p.params.get("delta").and_then(|d| d.parse::<f64>().ok()) {
                if let Ok(d) = derive_journe(delta, *h.grid()) {
                    report.sections.journe_derivation = Some(DerivationSection::from(&d));
                }
            }
        }
        if variant_of {
            let start = Instant::now();
            let other = negated(&h)?;
            let base = classify_purity_with_cap(&other, &tols, cap)?;
            let status = match search_certificate(&other) {
                Some(c) => base.upgrade_with(c).status,
                None => base.status,
            };
            let current = p.params.get("phase").map(String::as_str).unwrap_or("literal");
            report.sections.phase_variant = Some(PhaseVariantSection {
                variant: if current == "sign" { "literal".into() } else { "sign".into() },
                status,
                agrees: status == verdict.status,
            });
            report.timings.insert("phase_variant_ms".into(), millis(start));
        }
    }

    let start = Instant::now();
    report.seeds.insert("gmra".into(), a.check.seed.to_string());
    report.sections.gmra = Some(match build_tower_with_cap(&h, TOWER_DEPTH, a.check.seed, cap) {
        Ok(tower) => GmraSection::new(&tower, a.check.seed, a.check.tol_isometry),
        Err(e) => GmraSection::failed(TOWER_DEPTH, a.check.seed, e.to_string()),
    });
    report.timings.insert("gmra_ms".into(), millis(start));

    let status = verdict.status;
    let intersection = report_from_verdict(&h, verdict);
    report.sections.intersection = Some(IntersectionSection::from(&intersection));
    let summary = match status {
        PurityStatus::PureCertified => "S_H is a pure isometry (certified)".to_string(),
        PurityStatus::NotPureCertified => {
            let w = intersection.witness.as_ref().map(|w| w.lambda).unwrap_or(Complex64::new(0.0, 0.0));
            format!("S_H is not pure: eigenvalue {} + {}i with a verified eigenvector", w.re, w.im)
        }
        PurityStatus::PureAtResolution => "no eigenvector at this resolution and no certificate".to_string(),
        PurityStatus::Inconclusive => "a near-unit eigenvalue failed the eigenvector checks".to_string(),
    };
    finish(&mut report, exit_for(status), summary, a.out.as_deref())
}

/// CSV of every transfer-matrix eigenvalue with its eigen-test flag.
pub fn spectrum_csv(h: &FilterMatrix, tols: &Tolerances, cap: usize) -> Result<String, CliError> {
    let verdict = classify_purity_with_cap(h, tols, cap)?;
    let mut csv = String::from("lambda_re,lambda_im,abs_lambda,passes_eigen_test\n");
    for s in &verdict.spectrum {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            decimal(s.value.re),
            decimal(s.value.im),
            decimal(s.value.norm()),
            s.passes_eigen_test
        ));
    }
    Ok(csv)
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<i32, CliError> {
    let (h, provenance) = load_bundle(&a.check.bundle)?;
    let cap = dimension_cap()?;
    let mut report = Report::new("spectrum", &h, provenance.as_ref());
    if !run_checks(&h, &a.check, &mut report)? {
        eprintln!("purefilter spectrum: verification failed: {}", verify_summary(&report));
        return Ok(EXIT_VERIFY_FAILED);
    }
    let tols = tolerances(&a.check, a.tol_eig, a.tol_res, a.tol_norm);
    write_output(a.out.as_deref(), &spectrum_csv(&h, &tols, cap)?)?;
    Ok(EXIT_OK)
}
