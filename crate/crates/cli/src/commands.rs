//! The single-module subcommands. Each one writes into an output directory
//! through an [`OutputSink`] and finishes with a manifest.

use std::path::{Path, PathBuf};

use ikegmres::bounds::{compute_cm_composite, unperturbed_residual, write_bounds_csv, BoundContext, CompositePolynomial};
use ikegmres::matgen::io::{read_factors_json, write_matrix_csv, DenseRecord, FactorsRecord};
use ikegmres::matgen::{assemble, families, random_perturbation};
use ikegmres::pde::{broyden_solve, discretize, ilut, BroydenOptions, BroydenTrace, DiscreteProblem, IlutOptions};
use ikegmres::pseudospectra::{asymptotic_disks, Disk};
use ikegmres::ContourSet;
use ikegmres::spectral::{reduced_problem, sensitivity_report, DEFAULT_ANGLE_THRESHOLD, DEFAULT_KAPPA_THRESHOLD};
use ikegmres::{gmres_solve, Complex64, DMatrix, DVector, EigConditioning, GmresOptions, GmresTrace, LowRankFactors, RhsMode, TolMode};
use serde::Serialize;

use crate::error::{CliError, StageExt};
use crate::output::OutputSink;
use crate::svg::{plot_csv, PlotKind};

/// A CSV file kept in memory so it can also be plotted.
pub type Csv = (String, String);

/// Writes a CSV through the sink and returns it for plotting.
pub fn emit(
    sink: &mut OutputSink,
    name: &str,
    fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> Result<Csv, CliError> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    sink.write(name, &buf)?;
    Ok((name.to_string(), String::from_utf8(buf).expect("CSV output is UTF-8")))
}

pub fn emit_plot(
    sink: &mut OutputSink,
    name: &str,
    kind: PlotKind,
    title: &str,
    inputs: &[&Csv],
) -> Result<(), CliError> {
    let owned: Vec<Csv> = inputs.iter().map(|c| (*c).clone()).collect();
    let svg = plot_csv(kind, title, &owned)?;
    sink.write(name, svg.as_bytes())?;
    Ok(())
}

pub fn emit_json<T: Serialize>(sink: &mut OutputSink, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    sink.write(name, text.as_bytes())?;
    Ok(())
}

/// `1e-2`, `1e-2.5` for decimal powers with at most one decimal digit,
/// otherwise scientific notation.
pub fn level_label(x: f64) -> String {
    let e = x.log10();
    let tenth = (e * 10.0).round() / 10.0;
    if (e - tenth).abs() < 1e-9 {
        format!("1e{tenth}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_conditioning(out: &mut Vec<u8>, cond: &EigConditioning) -> std::io::Result<()> {
    use std::io::Write;
    writeln!(out, "re,im,multiplicity,kappa")?;
    for j in 0..cond.len() {
        let z = cond.eigenvalues[j];
        writeln!(out, "{:e},{:e},{},{:e}", z.re, z.im, cond.multiplicities[j], cond.kappas[j])?;
    }
    Ok(())
}

pub fn write_disks(out: &mut Vec<u8>, disks: &[Disk]) -> std::io::Result<()> {
    use std::io::Write;
    writeln!(out, "re,im,radius")?;
    for d in disks {
        writeln!(out, "{:e},{:e},{:e}", d.center.re, d.center.im, d.radius)?;
    }
    Ok(())
}

pub fn write_points(out: &mut Vec<u8>, points: &[Complex64]) -> std::io::Result<()> {
    use std::io::Write;
    writeln!(out, "re,im")?;
    for z in points {
        writeln!(out, "{:e},{:e}", z.re, z.im)?;
    }
    Ok(())
}

/// Mode of a list of counts, ties going to the smaller count.
pub fn mode(values: &[usize]) -> Option<usize> {
    let mut hist = std::collections::BTreeMap::new();
    for &v in values {
        *hist.entry(v).or_insert(0usize) += 1;
    }
    hist.into_iter().max_by_key(|&(v, c)| (c, std::cmp::Reverse(v))).map(|(v, _)| v)
}

fn zeros(n: usize) -> DVector<f64> {
    DVector::zeros(n)
}

pub fn load_factors(path: &Path) -> Result<LowRankFactors, CliError> {
    read_factors_json(path).stage(&format!("reading {}", path.display()))
}

pub fn load_perturbation(path: &Path, n: usize) -> Result<DMatrix<f64>, CliError> {
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let record: DenseRecord = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let e = record.matrix.to_matrix().stage("reading perturbation")?;
    if e.shape() != (n, n) {
        return Err(bad(format!("perturbation is {}x{}, factors have n = {n}", e.nrows(), e.ncols())));
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fig1,
    #[value(alias = "ex1")]
    Example1,
    #[value(alias = "ex2")]
    Example2,
}

impl Family {
    pub fn build(self, seed: u64) -> Result<LowRankFactors, CliError> {
        match self {
            Self::Fig1 => families::fig1(seed),
            Self::Example1 => families::example1(seed),
            Self::Example2 => families::example2(seed),
        }
        .stage("building the matrix family")
    }
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "fig1")]
    pub family: Family,
    #[arg(long, default_value_t = families::DEFAULT_SEED)]
    pub seed: u64,
    /// Also draw a perturbation with this spectral norm.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn gen(args: &GenArgs) -> Result<(), CliError> {
    let f = args.family.build(args.seed)?;
    let mut sink = OutputSink::create(&args.out)?;
    let provenance = format!("{:?} family, seed {}", args.family, args.seed).to_lowercase();
    emit_json(&mut sink, "factors.json", &FactorsRecord::from_factors(&f, &provenance))?;
    let mut a = f.identity_plus_k();
    if let Some(eps) = args.eps {
        let e = random_perturbation(f.n, eps, args.seed).stage("drawing the perturbation")?;
        a += &e.e;
        emit_json(&mut sink, "perturbation.json", &DenseRecord::from_perturbation(&e, args.seed, "gaussian, rescaled"))?;
    }
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, &a).stage("writing the matrix")?;
    sink.write("matrix.csv", &buf)?;
    sink.finish(args, vec![args.seed])?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Rhs {
    /// Gaussian, normalized to unit norm.
    Random,
    Ones,
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct GmresArgs {
    /// Factors JSON written by `gen` or `pde`.
    #[arg(long)]
    pub factors: PathBuf,
    /// Perturbation JSON written by `gen --eps`.
    #[arg(long)]
    pub perturbation: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random")]
    pub rhs: Rhs,
    #[arg(long, default_value_t = families::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Measure the tolerance relative to the initial residual.
    #[arg(long)]
    pub relative: bool,
    /// Defaults to the dimension.
    #[arg(long)]
    pub maxit: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct GmresSummary {
    status: ikegmres::GmresStatus,
    iterations: usize,
    converged_at: Option<usize>,
    tol: f64,
    mode: TolMode,
    r0_norm: f64,
    final_residual: f64,
    explicit_residual: f64,
}

pub fn summarize(trace: &GmresTrace) -> impl Serialize {
    GmresSummary {
        status: trace.status,
        iterations: trace.iterations(),
        converged_at: trace.converged_at,
        tol: trace.tol,
        mode: trace.mode,
        r0_norm: trace.r0_norm,
        final_residual: *trace.residual_norms.last().expect("nonempty trace"),
        explicit_residual: trace.explicit_residual,
    }
}

pub fn gmres(args: &GmresArgs) -> Result<(), CliError> {
    if !(args.tol >= 0.0) {
        return Err(CliError::Validation(format!("tol {} must be nonnegative", args.tol)));
    }
    let f = load_factors(&args.factors)?;
    let rhs = match args.rhs {
        Rhs::Random => RhsMode::RandomUnit,
        Rhs::Ones => RhsMode::Ones,
    };
    let sys = assemble(&f, None, rhs, args.seed).stage("assembling the system")?;
    let mut a = sys.a;
    if let Some(p) = &args.perturbation {
        a += load_perturbation(p, f.n)?;
    }
    let maxit = args.maxit.unwrap_or(f.n);
    let opts = if args.relative { GmresOptions::relative(args.tol, maxit) } else { GmresOptions::absolute(args.tol, maxit) };
    let trace = gmres_solve(&a, &sys.b, &zeros(f.n), &opts).stage("GMRES")?;
    let mut sink = OutputSink::create(&args.out)?;
    let csv = emit(&mut sink, "trace.csv", |b| trace.write_csv(b))?;
    emit_json(&mut sink, "gmres.json", &summarize(&trace))?;
    emit_plot(&mut sink, "convergence.svg", PlotKind::Convergence, "GMRES residual norms", &[&csv])?;
    sink.finish(args, vec![args.seed])?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct PseudoArgs {
    #[arg(long)]
    pub factors: PathBuf,
    /// Levels δ of the pseudospectra.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 10f64.powf(-2.5), 1e-3])]
    pub delta: Vec<f64>,
    /// Grid nodes along the long side of each window.
    #[arg(long, default_value_t = 129)]
    pub resolution: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct LevelSummary {
    pub delta: f64,
    pub components: usize,
    pub polylines: usize,
    pub arc_length: f64,
    pub vertices: usize,
}

pub fn pseudo(args: &PseudoArgs) -> Result<(), CliError> {
    if let Some(d) = args.delta.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(CliError::Validation(format!("delta {d} must be positive")));
    }
    let f = load_factors(&args.factors)?;
    let ctx = BoundContext::identity_plus_low_rank(&f).stage("eigenvalue conditioning")?;
    let mut sink = OutputSink::create(&args.out)?;
    let levels = contour_levels(&mut sink, &ctx, &args.delta, args.resolution, "pseudospectra")?;
    emit_json(&mut sink, "pseudo.json", &serde_json::json!({ "delta0": ctx.delta0, "levels": levels }))?;
    sink.finish(args, vec![f.seed])?;
    Ok(())
}

/// Contours, disks and one plane plot per level; shared with the figure
/// reproduction.
pub fn contour_levels(
    sink: &mut OutputSink,
    ctx: &BoundContext,
    deltas: &[f64],
    resolution: usize,
    prefix: &str,
) -> Result<Vec<LevelSummary>, CliError> {
    let cond = emit(sink, "conditioning.csv", |b| write_conditioning(b, &ctx.cond))?;
    let mut levels = Vec::new();
    for &delta in deltas {
        let label = level_label(delta);
        let set = ctx.contours(delta, resolution).stage(&format!("contours at delta {label}"))?;
        let curves = emit(sink, &format!("contours_{label}.csv"), |b| set.write_csv(b))?;
        let mut layers = vec![&curves, &cond];
        let disks;
        if !ctx.cond.any_defective() {
            let d = asymptotic_disks(&ctx.cond, delta).stage("asymptotic disks")?;
            disks = emit(sink, &format!("disks_{label}.csv"), |b| write_disks(b, &d))?;
            layers.push(&disks);
        }
        emit_plot(sink, &format!("{prefix}_{label}.svg"), PlotKind::Plane, &format!("delta = {label}"), &layers)?;
        for (j, panel) in zoomed_panels(&ctx.cond, &set, delta)?.into_iter().enumerate() {
            if let Some(inputs) = panel {
                let z = ctx.cond.eigenvalues[j];
                let title = format!("delta = {label}, near {:.4}{:+.4}i", z.re, z.im);
                let refs: Vec<&Csv> = inputs.iter().collect();
                emit_plot(sink, &format!("{prefix}_{label}_{j}.svg"), PlotKind::Plane, &title, &refs)?;
            }
        }
        levels.push(LevelSummary {
            delta,
            components: set.components,
            polylines: set.polylines.len(),
            arc_length: set.total_arc_length,
            vertices: set.vertex_count(),
        });
    }
    Ok(levels)
}

/// Per eigenvalue cluster, the curves whose centroid is nearest to it with
/// its disk and the eigenvalues inside their bounding box. `None` for
/// clusters that own no curve.
fn zoomed_panels(cond: &EigConditioning, set: &ContourSet, delta: f64) -> Result<Vec<Option<Vec<Csv>>>, CliError> {
    let mut owned: Vec<Vec<Vec<Complex64>>> = vec![Vec::new(); cond.len()];
    for line in &set.polylines {
        let body = &line[..line.len() - 1];
        let centroid = body.iter().sum::<Complex64>() / body.len() as f64;
        if let Some(j) = cond.nearest(centroid) {
            owned[j].push(line.clone());
        }
    }
    owned
        .into_iter()
        .enumerate()
        .map(|(j, lines)| {
            if lines.is_empty() {
                return Ok(None);
            }
            let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
            for z in lines.iter().flatten() {
                lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
                hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
            }
            let inside: Vec<usize> = (0..cond.len())
                .filter(|&k| {
                    let z = cond.eigenvalues[k];
                    k == j || (lo.re..=hi.re).contains(&z.re) && (lo.im..=hi.im).contains(&z.im)
                })
                .collect();
            let sub = EigConditioning {
                eigenvalues: inside.iter().map(|&k| cond.eigenvalues[k]).collect(),
                multiplicities: inside.iter().map(|&k| cond.multiplicities[k]).collect(),
                kappas: inside.iter().map(|&k| cond.kappas[k]).collect(),
                defective: inside.iter().map(|&k| cond.defective[k]).collect(),
            };
            let csv = |name: &str, fill: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<Csv, CliError> {
                let mut buf = Vec::new();
                fill(&mut buf)?;
                Ok((name.to_string(), String::from_utf8(buf).expect("CSV output is UTF-8")))
            };
            let curves = ContourSet::from_polylines(delta, lines);
            let mut out = vec![csv("contours", &|b| curves.write_csv(b))?, csv("eigenvalues", &|b| write_conditioning(b, &sub))?];
            if !sub.any_defective() {
                let disks = asymptotic_disks(&sub, delta).stage("asymptotic disks")?;
                out.push(csv("disks", &|b| write_disks(b, &disks))?);
            }
            Ok(Some(out))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub factors: PathBuf,
    /// Perturbation norms; each must lie below every δ.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 10f64.powf(-2.5), 1e-3])]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub m_max: usize,
    #[arg(long, default_value_t = 129)]
    pub resolution: usize,
    #[arg(long, default_value_t = families::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn bound(args: &BoundArgs) -> Result<(), CliError> {
    let min_delta = args.delta.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(e) = args.eps.iter().find(|e| !(**e > 0.0 && **e < min_delta)) {
        return Err(CliError::Validation(format!("eps {e} must be positive and below every delta (smallest {min_delta})")));
    }
    if args.m_max == 0 {
        return Err(CliError::Validation("m_max must be at least 1".into()));
    }
    let f = load_factors(&args.factors)?;
    let ctx = BoundContext::identity_plus_low_rank(&f).stage("eigenvalue conditioning")?;
    if let Some(d) = args.delta.iter().find(|d| **d >= ctx.delta0) {
        return Err(CliError::Validation(format!("delta {d} is not below delta0 = {:e}", ctx.delta0)));
    }
    let sys = assemble(&f, None, RhsMode::RandomUnit, args.seed).stage("assembling the system")?;
    let base = gmres_solve(&sys.a, &sys.b, &zeros(f.n), &GmresOptions::absolute(args.tol, f.n)).stage("GMRES")?;
    let mut sink = OutputSink::create(&args.out)?;
    let unperturbed = emit(&mut sink, "unperturbed.csv", |b| base.write_csv(b))?;
    let evaluations = bound_curves(&ctx, &sys.a, &sys.b, &base, &args.delta, args.m_max, args.resolution)?;
    let mut all = Vec::new();
    for &eps in &args.eps {
        let label = level_label(eps);
        let evals = with_eps(&evaluations, eps)?;
        let csv = emit(&mut sink, &format!("bounds_eps_{label}.csv"), |b| write_bounds_csv(b, &evals))?;
        emit_plot(&mut sink, &format!("bounds_eps_{label}.svg"), PlotKind::Convergence, &format!("eps = {label}"), &[&unperturbed, &csv])?;
        all.extend(evals);
    }
    emit_json(&mut sink, "bounds.json", &all)?;
    sink.finish(args, vec![args.seed])?;
    Ok(())
}

/// `C_m(δ)` and `‖φ_m(A) b‖` for `m = 1..=m_max` on every level, with the
/// contours of each level computed once.
pub fn bound_curves(
    ctx: &BoundContext,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    base: &GmresTrace,
    deltas: &[f64],
    m_max: usize,
    resolution: usize,
) -> Result<Vec<(f64, ikegmres::bounds::BoundEvaluation)>, CliError> {
    let polys = (1..=m_max)
        .map(|m| {
            let p = CompositePolynomial::from_trace(base, m).stage(&format!("residual polynomial of degree {m}"))?;
            let rho = unperturbed_residual(a, b, &p);
            Ok((p, rho))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut out = Vec::new();
    for &delta in deltas {
        let label = level_label(delta);
        let set = ctx.contours(delta, resolution).stage(&format!("contours at delta {label}"))?;
        for (p, rho) in &polys {
            let cm = compute_cm_composite(b.norm(), p, delta, &set).stage(&format!("C_m at delta {label}"))?;
            out.push((*rho, cm));
        }
    }
    Ok(out)
}

/// The curves of all levels above `eps`, completed with the residual bound.
pub fn with_eps(
    curves: &[(f64, ikegmres::bounds::BoundEvaluation)],
    eps: f64,
) -> Result<Vec<ikegmres::bounds::BoundEvaluation>, CliError> {
    curves
        .iter()
        .filter(|(_, cm)| eps < cm.delta)
        .map(|(rho, cm)| cm.clone().with_residual(Some(*rho), eps).stage("residual bound"))
        .collect()
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub factors: PathBuf,
    #[arg(long, default_value_t = DEFAULT_KAPPA_THRESHOLD)]
    pub kappa_threshold: f64,
    /// Principal angles below this count as small, in radians.
    #[arg(long, default_value_t = DEFAULT_ANGLE_THRESHOLD)]
    pub angle_threshold: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let f = load_factors(&args.factors)?;
    let mut sink = OutputSink::create(&args.out)?;
    analyze_into(&mut sink, &f, args.kappa_threshold, args.angle_threshold)?;
    sink.finish(args, vec![f.seed])?;
    Ok(())
}

/// Sensitivity report, eigenvalue conditioning and a spectrum plot.
pub fn analyze_into(
    sink: &mut OutputSink,
    f: &LowRankFactors,
    kappa_threshold: f64,
    angle_threshold: f64,
) -> Result<ikegmres::SensitivityReport, CliError> {
    let a = f.identity_plus_k();
    let r = reduced_problem(f).stage("reduced problem")?;
    let report = sensitivity_report(&a, f, &r, kappa_threshold, angle_threshold).stage("sensitivity report")?;
    sink.write("sensitivity.json", report.to_json().stage("serializing the report")?.as_bytes())?;
    let cond = ikegmres::pseudospectra::eigen_condition_numbers(&a, None).stage("eigenvalue conditioning")?;
    let csv = emit(sink, "conditioning.csv", |b| write_conditioning(b, &cond))?;
    let sensitive: Vec<Complex64> = report.sensitive.iter().map(|s| s.lambda).collect();
    let marked = emit(sink, "sensitive.csv", |b| write_points(b, &sensitive))?;
    emit_plot(sink, "spectrum.svg", PlotKind::Plane, "eigenvalues of I + K", &[&csv, &marked])?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct PdeArgs {
    /// Mesh parameter N, with h = 1/N.
    #[arg(long, default_value_t = 201)]
    pub mesh: usize,
    #[arg(long, default_value_t = ikegmres::pde::DEFAULT_DROPTOL)]
    pub droptol: f64,
    #[arg(long, default_value_t = BroydenOptions::default().nl_tol)]
    pub nl_tol: f64,
    #[arg(long, default_value_t = crate::config::PDE_NL_MAXIT)]
    pub nl_maxit: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Step whose spectrum is plotted next to the last one.
pub const SPECTRUM_STEP: usize = 7;

pub fn pde(args: &PdeArgs) -> Result<(), CliError> {
    let mut sink = OutputSink::create(&args.out)?;
    pde_into(&mut sink, args.mesh, args.droptol, args.nl_tol, args.nl_maxit)?;
    sink.finish(args, vec![])?;
    Ok(())
}

pub fn pde_into(
    sink: &mut OutputSink,
    mesh: usize,
    droptol: f64,
    nl_tol: f64,
    nl_maxit: usize,
) -> Result<BroydenTrace, CliError> {
    if mesh < 4 {
        return Err(CliError::Validation(format!("mesh {mesh} is below the minimum of 4")));
    }
    if !(droptol >= 0.0) || !(nl_tol > 0.0) {
        return Err(CliError::Validation("droptol must be nonnegative and nl_tol positive".into()));
    }
    let problem: DiscreteProblem = discretize(mesh).stage("discretization")?;
    let pre = ilut(&problem.jacobian0(), &IlutOptions::new(droptol)).stage("ILUT")?;
    let opts = BroydenOptions { nl_tol, nl_maxit, ..BroydenOptions::default() };
    let trace = broyden_solve(&problem, &pre, &opts).stage("Broyden")?;
    let csv = emit(sink, "broyden_trace.csv", |b| trace.write_csv(b))?;
    sink.write("broyden_trace.json", trace.to_json().stage("serializing the trace")?.as_bytes())?;
    emit_plot(sink, "broyden.svg", PlotKind::Convergence, "Broyden residual norms", &[&csv])?;

    let Some(last) = trace.steps.last() else {
        return Ok(trace);
    };
    let mut spectra = Vec::new();
    let mut ranks = vec![SPECTRUM_STEP.min(last.rank), last.rank];
    ranks.dedup();
    for rank in ranks {
        let f = trace.k_factors(rank, 1e-13).stage(&format!("K factors at step {rank}"))?;
        let r = reduced_problem(&f).stage(&format!("reduced problem at step {rank}"))?;
        let lambdas: Vec<Complex64> = r.gammas.iter().map(|g| Complex64::new(1.0, 0.0) + g).collect();
        spectra.push(emit(sink, &format!("spectrum_step{rank}.csv"), |b| write_points(b, &lambdas))?);
        if rank == last.rank {
            let provenance = format!("Broyden K at step {rank}, mesh {mesh}");
            emit_json(sink, "k_factors.json", &FactorsRecord::from_factors(&f, &provenance))?;
        }
    }
    let layers: Vec<&Csv> = spectra.iter().collect();
    emit_plot(sink, "spectrum.svg", PlotKind::Plane, "outlying eigenvalues 1 + gamma", &layers)?;
    Ok(trace)
}

#[derive(Debug, Clone, clap::Args)]
pub struct PlotArgs {
    #[arg(long, value_enum, default_value = "convergence")]
    pub kind: PlotKind,
    #[arg(long, default_value = "")]
    pub title: String,
    /// SVG file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// CSV files in any of the exported formats.
    pub inputs: Vec<PathBuf>,
}

pub fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let inputs = args
        .inputs
        .iter()
        .map(|p| {
            std::fs::read_to_string(p)
                .map(|t| (p.display().to_string(), t))
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let svg = plot_csv(args.kind, &args.title, &inputs)?;
    crate::output::write_atomic(&args.output, svg.as_bytes())?;
    Ok(())
}
