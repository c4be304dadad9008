//! Figure and example reproductions driven by an [`ExperimentConfig`].

use std::io::Write;
use std::path::PathBuf;

use ikegmres::bounds::{write_bounds_csv, BoundContext};
use ikegmres::matgen::{assemble, families, random_perturbation};
use ikegmres::spectral::{DEFAULT_ANGLE_THRESHOLD, DEFAULT_KAPPA_THRESHOLD};
use ikegmres::{gmres_solve, DVector, GmresOptions, GmresTrace, LowRankFactors, RhsMode};
use serde::Serialize;

use crate::commands::{
    analyze_into, bound_curves, contour_levels, emit, emit_json, emit_plot, level_label, mode, pde_into, with_eps,
};
use crate::config::{ExperimentConfig, ExperimentId};
use crate::error::{CliError, StageExt};
use crate::output::OutputSink;
use crate::svg::PlotKind;

pub fn run(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let mut sink = OutputSink::create(&cfg.output_dir)?;
    let seeds = match cfg.experiment {
        ExperimentId::Fig1 => fig1(&mut sink, cfg)?,
        ExperimentId::Fig2 => fig2(&mut sink, cfg)?,
        ExperimentId::Ex1 => example(&mut sink, cfg, families::example1(cfg.seed).stage("building the matrix")?)?,
        ExperimentId::Ex2 => example(&mut sink, cfg, families::example2(cfg.seed).stage("building the matrix")?)?,
        ExperimentId::Pde => {
            let trace = pde_into(&mut sink, cfg.mesh, cfg.droptol, cfg.nl_tol, cfg.nl_maxit)?;
            emit_json(
                &mut sink,
                "summary.json",
                &serde_json::json!({
                    "steps": trace.steps.len(),
                    "converged": trace.converged,
                    "relative_residual": trace.final_f_norm / trace.f0_norm,
                    "eps_estimate": trace.eps_estimate,
                    "gmres_iterations": trace.steps.iter().map(|s| s.gmres_iterations).collect::<Vec<_>>(),
                }),
            )?;
            vec![]
        }
    };
    sink.finish(cfg, seeds)
}

fn fig1(sink: &mut OutputSink, cfg: &ExperimentConfig) -> Result<Vec<u64>, CliError> {
    let f = families::fig1(cfg.seed).stage("building the matrix")?;
    let ctx = BoundContext::identity_plus_low_rank(&f).stage("eigenvalue conditioning")?;
    let levels = contour_levels(sink, &ctx, &cfg.delta, cfg.resolution, "fig1")?;
    emit_json(sink, "summary.json", &serde_json::json!({ "delta0": ctx.delta0, "levels": levels }))?;
    Ok(vec![cfg.seed])
}

#[derive(Serialize)]
struct TrialStats {
    eps: f64,
    trials: usize,
    converged: usize,
    min_iterations: Option<usize>,
    max_iterations: Option<usize>,
    mode_iterations: Option<usize>,
}

fn zeros(n: usize) -> DVector<f64> {
    DVector::zeros(n)
}

/// GMRES on `A + E` for `trials` perturbations drawn from seeds
/// `seed, seed + 1, …`.
fn perturbed_traces(
    f: &LowRankFactors,
    a: &ikegmres::DMatrix<f64>,
    b: &DVector<f64>,
    eps: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<GmresTrace>, CliError> {
    (0..cfg.trials as u64)
        .map(|i| {
            let e = random_perturbation(f.n, eps, cfg.seed + i).stage("drawing a perturbation")?;
            let opts = GmresOptions::absolute(cfg.tol, f.n);
            gmres_solve(&(a + &e.e), b, &zeros(f.n), &opts).stage(&format!("GMRES on trial {i}"))
        })
        .collect()
}

fn trials_csv(out: &mut Vec<u8>, traces: &[GmresTrace]) -> std::io::Result<()> {
    writeln!(out, "trial,iteration,residual_norm")?;
    for (t, tr) in traces.iter().enumerate() {
        for (m, r) in tr.residual_norms.iter().enumerate() {
            writeln!(out, "{t},{m},{r:e}")?;
        }
    }
    Ok(())
}

fn stats(eps: f64, traces: &[GmresTrace]) -> TrialStats {
    let counts: Vec<usize> = traces.iter().filter_map(|t| t.converged_at).collect();
    TrialStats {
        eps,
        trials: traces.len(),
        converged: counts.len(),
        min_iterations: counts.iter().min().copied(),
        max_iterations: counts.iter().max().copied(),
        mode_iterations: mode(&counts),
    }
}

fn fig2(sink: &mut OutputSink, cfg: &ExperimentConfig) -> Result<Vec<u64>, CliError> {
    let f = families::fig1(cfg.seed).stage("building the matrix")?;
    let sys = assemble(&f, None, RhsMode::RandomUnit, cfg.seed).stage("assembling the system")?;
    let base = gmres_solve(&sys.a, &sys.b, &zeros(f.n), &GmresOptions::absolute(cfg.tol, f.n)).stage("GMRES")?;
    let ctx = BoundContext::identity_plus_low_rank(&f).stage("eigenvalue conditioning")?;
    let deltas: Vec<f64> = cfg.delta.iter().copied().filter(|d| *d < ctx.delta0).collect();
    let curves = bound_curves(&ctx, &sys.a, &sys.b, &base, &deltas, cfg.m_max, cfg.resolution)?;

    let unperturbed = emit(sink, "unperturbed.csv", |b| base.write_csv(b))?;
    let mut summary = Vec::new();
    for &eps in &cfg.eps {
        let label = level_label(eps);
        let traces = perturbed_traces(&f, &sys.a, &sys.b, eps, cfg)?;
        let trials = emit(sink, &format!("perturbed_eps_{label}.csv"), |b| trials_csv(b, &traces))?;
        let evals = with_eps(&curves, eps)?;
        let bounds = emit(sink, &format!("bounds_eps_{label}.csv"), |b| write_bounds_csv(b, &evals))?;
        emit_plot(
            sink,
            &format!("fig2_eps_{label}.svg"),
            PlotKind::Convergence,
            &format!("eps = {label}"),
            &[&trials, &bounds, &unperturbed],
        )?;
        summary.push(stats(eps, &traces));
    }
    emit_json(
        sink,
        "summary.json",
        &serde_json::json!({
            "delta0": ctx.delta0,
            "deltas": deltas,
            "unperturbed_iterations": base.converged_at,
            "perturbed": summary,
        }),
    )?;
    Ok((0..cfg.trials as u64).map(|i| cfg.seed + i).collect())
}

fn example(sink: &mut OutputSink, cfg: &ExperimentConfig, f: LowRankFactors) -> Result<Vec<u64>, CliError> {
    let report = analyze_into(sink, &f, DEFAULT_KAPPA_THRESHOLD, DEFAULT_ANGLE_THRESHOLD)?;
    let sys = assemble(&f, None, RhsMode::RandomUnit, cfg.seed).stage("assembling the system")?;
    let base = gmres_solve(&sys.a, &sys.b, &zeros(f.n), &GmresOptions::absolute(cfg.tol, f.n)).stage("GMRES")?;
    let unperturbed = emit(sink, "unperturbed.csv", |b| base.write_csv(b))?;
    let mut counts = Vec::new();
    writeln!(counts, "eps,trial,iterations,converged")?;
    let mut summary = Vec::new();
    for &eps in &cfg.eps {
        let label = level_label(eps);
        let traces = perturbed_traces(&f, &sys.a, &sys.b, eps, cfg)?;
        for (t, tr) in traces.iter().enumerate() {
            writeln!(counts, "{eps:e},{t},{},{}", tr.iterations(), u8::from(tr.converged_at.is_some()))?;
        }
        let trials = emit(sink, &format!("perturbed_eps_{label}.csv"), |b| trials_csv(b, &traces))?;
        emit_plot(
            sink,
            &format!("convergence_eps_{label}.svg"),
            PlotKind::Convergence,
            &format!("eps = {label}"),
            &[&trials, &unperturbed],
        )?;
        summary.push(stats(eps, &traces));
    }
    sink.write("counts.csv", &counts)?;
    emit_json(
        sink,
        "summary.json",
        &serde_json::json!({
            "sensitive_eigenvalues": report.sensitive.iter().map(|s| [s.lambda.re, s.lambda.im]).collect::<Vec<_>>(),
            "unperturbed_iterations": base.converged_at,
            "perturbed": summary,
        }),
    )?;
    Ok((0..cfg.trials as u64).map(|i| cfg.seed + i).collect())
}
