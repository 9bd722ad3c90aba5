//! The experiment recipes.
//!
//! Each recipe splits into independent `(seed, loss)` cells that run on the
//! rayon pool. A failing cell becomes a [`Failure`] and the remaining rows are
//! still produced. Rows are sorted before they leave [`compute`], so results
//! do not depend on the thread count.

use rand::Rng as _;
use rayon::prelude::*;
use uic_core::bayes::{verify_uic_limit, FCurve};
use uic_core::diagnostics::{
    fit_newton, influence, metric_report, mixture_auc, retrain_influence, DEFAULT_FPR_CAP, DEFAULT_FPR_POINT,
};
use uic_core::limits::{limit_alpha_with, limit_erf_with, limit_square, LimitResult, SimplexSolver, SolverOptions};
use uic_core::math::{cosine, norm2};
use uic_core::train::{decision_boundary_2d, fit_linear, Objective};
use uic_core::{rng, Dataset, Label, LabeledSample, LinearClassifier, LossFamily, LossSpec, Task};

use crate::config::{
    AlphaSweepParams, BoundaryParams, CAblationParams, ExperimentConfig, FcurveParams, InfluenceParams,
    LimitCheckParams, Recipe, ResolvedTask,
};
use crate::error::CliError;
use crate::io::{format_float, CurvePoint, PlotData};
use crate::output::{hyperparameter_string, Failure, ResultRow, ResultTable, RunOutcome};

/// Stream tag for label flips in the C ablation.
const LABEL_NOISE_STREAM: u64 = 0x4e4f;

/// Test samples use this offset from the training seed.
const TEST_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Suppress progress lines on stderr.
    pub quiet: bool,
}

/// Runs the recipe on a pool with `opts.threads` workers.
pub fn run_recipe(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Data(format!("cannot start the thread pool: {e}")))?;
    pool.install(|| compute(cfg, opts.quiet))
}

/// Runs the recipe on the current rayon pool.
pub fn compute(cfg: &ExperimentConfig, quiet: bool) -> Result<RunOutcome, CliError> {
    let resolved = cfg.task.resolve()?;
    let ctx = Ctx { cfg, quiet };
    let parts = match &cfg.recipe {
        Recipe::Boundary(p) => boundary(&ctx, &resolved, p),
        Recipe::AlphaSweep(p) => alpha_sweep(&ctx, &resolved, p),
        Recipe::Fcurve(p) => fcurve(&ctx, p),
        Recipe::LimitCheck(p) => limit_check(&ctx, &resolved, p),
        Recipe::CAblation(p) => c_ablation(&ctx, &resolved, p),
        Recipe::InfluenceDemo(p) => influence_demo(&ctx, &resolved, p),
    }?;
    let mut plots = parts.plots;
    plots.sort_by(|a, b| a.0.cmp(&b.0));
    let mut failures = parts.failures;
    failures.sort_by(|a, b| a.cell.cmp(&b.cell));
    Ok(RunOutcome {
        table: ResultTable::new(cfg.hash(), parts.rows),
        plots,
        samples: parts.samples,
        failures,
    })
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    quiet: bool,
}

impl Ctx<'_> {
    fn note(&self, msg: impl FnOnce() -> String) {
        if !self.quiet {
            eprintln!("{}", msg());
        }
    }
}

#[derive(Default)]
struct Parts {
    rows: Vec<ResultRow>,
    plots: Vec<(String, PlotData)>,
    samples: Vec<(String, Dataset)>,
    failures: Vec<Failure>,
}

impl Parts {
    fn fail(&mut self, cell: String, e: CliError) {
        self.failures.push(Failure {
            cell,
            numerical: matches!(e, CliError::Numerical(_)),
            error: e.to_string(),
        });
    }
}

/// File-name friendly loss tag, e.g. `tbl-alpha0.5-cpen0.3`.
pub fn slug(spec: &LossSpec) -> String {
    let mut s = spec.family.name().to_string();
    for (k, v) in spec.hyperparameters() {
        s += &format!("-{k}{}", format_float(v));
    }
    s
}

fn cell_name(recipe: &str, spec: &LossSpec, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("{recipe}/{}/seed={s}", spec.label()),
        None => format!("{recipe}/{}", spec.label()),
    }
}

fn sample_per_seed(
    ctx: &Ctx,
    resolved: &ResolvedTask,
    n_pos: usize,
    n_neg: usize,
) -> Result<Vec<(u64, Dataset)>, CliError> {
    ctx.cfg
        .seeds
        .par_iter()
        .map(|&s| Ok((s, resolved.task.sample_counts(n_pos, n_neg, s)?)))
        .collect()
}

/// Runs `f` on every `(seed, spec)` cell and collects rows and failures.
fn run_cells<T, F>(ctx: &Ctx, recipe: &str, cells: Vec<(u64, LossSpec)>, f: F) -> (Vec<(u64, LossSpec, T)>, Parts)
where
    T: Send,
    F: Fn(u64, &LossSpec) -> Result<(Vec<ResultRow>, T), CliError> + Sync,
{
    let done: Vec<_> = cells
        .into_par_iter()
        .map(|(seed, spec)| {
            let r = f(seed, &spec);
            ctx.note(|| {
                let status = if r.is_ok() { "ok" } else { "failed" };
                format!("{}: {status}", cell_name(recipe, &spec, Some(seed)))
            });
            (seed, spec, r)
        })
        .collect();
    let mut parts = Parts::default();
    let mut out = Vec::new();
    for (seed, spec, r) in done {
        match r {
            Ok((rows, t)) => {
                parts.rows.extend(rows);
                out.push((seed, spec, t));
            }
            Err(e) => parts.fail(cell_name(recipe, &spec, Some(seed)), e),
        }
    }
    (out, parts)
}

fn classifier_rows(experiment: &str, seed: u64, spec: &LossSpec, clf: &LinearClassifier) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = clf
        .w
        .iter()
        .enumerate()
        .map(|(j, w)| ResultRow::new(experiment, Some(seed), spec, &format!("w{}", j + 1), *w))
        .collect();
    rows.push(ResultRow::new(experiment, Some(seed), spec, "b", clf.b));
    if clf.dim() == 2 {
        rows.push(ResultRow::new(
            experiment,
            Some(seed),
            spec,
            "normal_angle_deg",
            clf.normal_angle_2d(),
        ));
    }
    rows
}

fn boundary(ctx: &Ctx, resolved: &ResolvedTask, p: &BoundaryParams) -> Result<Parts, CliError> {
    const EXP: &str = "boundary";
    let cfg = ctx.cfg;
    let data = sample_per_seed(ctx, resolved, resolved.n_minority, resolved.n_majority)?;
    let task = &resolved.task;
    // leading axis of the minority covariance
    let eig = task.minority.total_covariance().symmetric_eigen();
    let lead: Vec<f64> = eig
        .eigenvectors
        .column(eig.eigenvalues.imax())
        .iter()
        .copied()
        .collect();

    let cells = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.losses.iter().map(move |l| (s, *l)))
        .collect();
    let (fits, mut parts) = run_cells(ctx, EXP, cells, |seed, spec| {
        let d = &data.iter().find(|(s, _)| *s == seed).expect("sampled").1;
        let fit = fit_linear(Objective::Empirical(d), spec, &cfg.train_for(spec, seed))?;
        let clf = fit.classifier;
        let mut rows = classifier_rows(EXP, seed, spec, &clf);
        rows.push(ResultRow::new(
            EXP,
            Some(seed),
            spec,
            "population_auc",
            mixture_auc(&clf.w, &task.minority, &task.majority)?,
        ));
        rows.push(ResultRow::new(
            EXP,
            Some(seed),
            spec,
            "lead_axis_abs_cos",
            cosine(&clf.w, &lead).abs(),
        ));
        rows.push(ResultRow::new(
            EXP,
            Some(seed),
            spec,
            "grad_norm_final",
            fit.grad_norm_final,
        ));
        if let Some(v) = fit.loss_trace.last() {
            rows.push(ResultRow::new(EXP, Some(seed), spec, "final_objective", *v));
        }
        let pts = decision_boundary_2d(&clf, (p.x_range[0], p.x_range[1]), p.n_points)?;
        Ok((rows, (clf, pts)))
    });

    for (seed, spec, (clf, pts)) in &fits {
        parts.plots.push((
            format!("boundary_{}_seed{seed}.csv", slug(spec)),
            PlotData::Boundary(pts.clone()),
        ));
        if spec.family != LossFamily::Ce {
            let ce = fits
                .iter()
                .find(|(s, l, _)| s == seed && l.family == LossFamily::Ce)
                .map(|f| &f.2 .0);
            if let Some(ce) = ce {
                parts.rows.push(ResultRow::new(
                    EXP,
                    Some(*seed),
                    spec,
                    "angle_to_ce_deg",
                    clf.angle_to(ce),
                ));
            }
        }
    }
    if p.write_samples {
        for (s, d) in data {
            parts.samples.push((format!("samples_seed{s}.csv"), d));
        }
    }
    Ok(parts)
}

/// Mean over seeds for each distinct `x`, as a curve sorted by `x`.
fn curve(points: &[(f64, f64)]) -> Vec<CurvePoint> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.iter()
        .map(|&x| {
            let v: Vec<f64> = points.iter().filter(|p| p.0 == x).map(|p| p.1).collect();
            CurvePoint::aggregate(x, &v)
        })
        .collect()
}

fn alpha_sweep(ctx: &Ctx, resolved: &ResolvedTask, p: &AlphaSweepParams) -> Result<Parts, CliError> {
    const EXP: &str = "alpha_sweep";
    let cfg = ctx.cfg;
    let data = sample_per_seed(ctx, resolved, resolved.n_minority, resolved.n_majority)?;
    let task = &resolved.task;
    let specs: Vec<LossSpec> = p
        .alphas
        .iter()
        .map(|&a| LossSpec::alpha(a))
        .chain(cfg.losses.iter().copied())
        .collect();
    let cells = cfg
        .seeds
        .iter()
        .flat_map(|&s| specs.iter().map(move |l| (s, *l)))
        .collect();
    let (fits, mut parts) = run_cells(ctx, EXP, cells, |seed, spec| {
        let d = &data.iter().find(|(s, _)| *s == seed).expect("sampled").1;
        let clf = fit_linear(Objective::Empirical(d), spec, &cfg.train_for(spec, seed))?.classifier;
        let auc = mixture_auc(&clf.w, &task.minority, &task.majority)?;
        let mut rows = classifier_rows(EXP, seed, spec, &clf);
        rows.push(ResultRow::new(EXP, Some(seed), spec, "population_auc", auc));
        Ok((rows, auc))
    });

    let sweep: Vec<(f64, f64)> = p
        .alphas
        .iter()
        .flat_map(|&a| {
            fits.iter()
                .filter(move |(_, l, _)| l.family == LossFamily::Alpha && l.alpha == a)
                .map(move |f| (a, f.2))
        })
        .collect();
    let c = curve(&sweep);
    for pt in &c {
        parts.rows.push(ResultRow::new(
            EXP,
            None,
            &LossSpec::alpha(pt.x),
            "mean_population_auc",
            pt.mean,
        ));
        parts.rows.push(ResultRow::new(
            EXP,
            None,
            &LossSpec::alpha(pt.x),
            "std_population_auc",
            pt.std,
        ));
    }
    if let Some(best) = c.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)) {
        parts.rows.push(ResultRow {
            experiment: format!("{EXP}_summary"),
            seed: None,
            loss: "alpha".into(),
            hyperparameters: String::new(),
            metric: "argmax_alpha_mean_auc".into(),
            value: best.x,
        });
    }
    for spec in &cfg.losses {
        let v: Vec<f64> = fits.iter().filter(|f| f.1 == *spec).map(|f| f.2).collect();
        if !v.is_empty() {
            let pt = CurvePoint::aggregate(0.0, &v);
            parts
                .rows
                .push(ResultRow::new(EXP, None, spec, "mean_population_auc", pt.mean));
            parts
                .rows
                .push(ResultRow::new(EXP, None, spec, "std_population_auc", pt.std));
        }
    }
    parts.plots.push(("alpha_sweep_auc.csv".into(), PlotData::Curve(c)));
    Ok(parts)
}

fn fcurve(ctx: &Ctx, p: &FcurveParams) -> Result<Parts, CliError> {
    const EXP: &str = "fcurve";
    let cfg = ctx.cfg;
    let done: Vec<(LossSpec, Result<Parts, CliError>)> = cfg
        .losses
        .par_iter()
        .map(|spec| {
            let r = (|| {
                let mut parts = Parts::default();
                let fc = FCurve::compute(spec, &p.pi_grid, &p.t_grid)?;
                for (i, pi) in p.pi_grid.iter().enumerate() {
                    let pts = p
                        .t_grid
                        .iter()
                        .zip(&fc.exact[i])
                        .map(|(t, f)| CurvePoint::aggregate(*t, &[*f]))
                        .collect();
                    parts.plots.push((
                        format!("fcurve_{}_exact_pi{}.csv", slug(spec), format_float(*pi)),
                        PlotData::Curve(pts),
                    ));
                }
                if fc.asymptotic.is_none() {
                    return Ok(parts);
                }
                for &t in &p.check_t {
                    let ratios = verify_uic_limit(spec, t, &p.pi_grid)?;
                    let tag = format_float(t);
                    for (pi, r) in p.pi_grid.iter().zip(&ratios) {
                        let m = format!("ratio_t{tag}_pi{}", format_float(*pi));
                        parts.rows.push(ResultRow::new(EXP, None, spec, &m, *r));
                    }
                    let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
                    let ok = (0.9..=1.1).contains(&last) && (last - 1.0).abs() < (first - 1.0).abs();
                    parts.rows.push(ResultRow::new(
                        EXP,
                        None,
                        spec,
                        &format!("limit_holds_t{tag}"),
                        if ok { 1.0 } else { 0.0 },
                    ));
                    let pts = p
                        .pi_grid
                        .iter()
                        .zip(&ratios)
                        .map(|(pi, r)| CurvePoint::aggregate(*pi, &[*r]))
                        .collect();
                    parts
                        .plots
                        .push((format!("fcurve_{}_ratio_t{tag}.csv", slug(spec)), PlotData::Curve(pts)));
                }
                Ok(parts)
            })();
            ctx.note(|| {
                format!(
                    "{}: {}",
                    cell_name(EXP, spec, None),
                    if r.is_ok() { "ok" } else { "failed" }
                )
            });
            (*spec, r)
        })
        .collect();
    let mut parts = Parts::default();
    for (spec, r) in done {
        match r {
            Ok(p) => {
                parts.rows.extend(p.rows);
                parts.plots.extend(p.plots);
            }
            Err(e) => parts.fail(cell_name(EXP, &spec, None), e),
        }
    }
    Ok(parts)
}

fn limit_for(task: &Task, spec: &LossSpec, opts: &SolverOptions) -> Result<LimitResult, CliError> {
    Ok(match spec.family {
        LossFamily::Square => limit_square(task)?,
        LossFamily::Erf => limit_erf_with(task, SimplexSolver::FixedPoint, opts)?,
        LossFamily::Alpha => limit_alpha_with(task, spec.alpha, SimplexSolver::FixedPoint, opts)?,
        other => return Err(CliError::Data(format!("no limiting classifier for {other}"))),
    })
}

fn limit_check(ctx: &Ctx, resolved: &ResolvedTask, p: &LimitCheckParams) -> Result<Parts, CliError> {
    const EXP: &str = "limit_check";
    let cfg = ctx.cfg;
    let base = &resolved.task;
    let opts = SolverOptions {
        max_iter: p.solver_max_iter,
        ..SolverOptions::default()
    };
    let cells: Vec<(u64, LossSpec, f64)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| {
            cfg.losses
                .iter()
                .flat_map(move |l| p.rhos.iter().map(move |r| (s, *l, *r)))
        })
        .collect();
    let done: Vec<_> = cells
        .into_par_iter()
        .map(|(seed, spec, rho)| {
            let r = (|| {
                let task = Task::with_rho(rho, base.minority.clone(), base.majority.clone(), spec)?;
                let lim = limit_for(&task, &spec, &opts)?;
                let fit = fit_linear(
                    Objective::Population {
                        task: &task,
                        mc_n: p.mc_n,
                    },
                    &spec,
                    &cfg.train_for(&spec, seed),
                )?;
                Ok::<_, CliError>((lim, fit.classifier))
            })();
            ctx.note(|| {
                format!(
                    "{} rho={rho}: {}",
                    cell_name(EXP, &spec, Some(seed)),
                    if r.is_ok() { "ok" } else { "failed" }
                )
            });
            (seed, spec, rho, r)
        })
        .collect();

    let mut parts = Parts::default();
    let mut angles: Vec<(LossSpec, f64, f64)> = Vec::new();
    for (seed, spec, rho, r) in done {
        let hp = {
            let h = hyperparameter_string(&spec);
            let r = format!("rho={}", format_float(rho));
            if h.is_empty() {
                r
            } else {
                format!("{h};{r}")
            }
        };
        let row = |metric: &str, value: f64| ResultRow {
            experiment: EXP.into(),
            seed: Some(seed),
            loss: spec.family.name().into(),
            hyperparameters: hp.clone(),
            metric: metric.into(),
            value,
        };
        let (lim, fit) = match r {
            Ok(v) => v,
            Err(e) => {
                parts.fail(
                    format!("{} rho={}", cell_name(EXP, &spec, Some(seed)), format_float(rho)),
                    e,
                );
                continue;
            }
        };
        let angle = lim.classifier.angle_to(&fit);
        angles.push((spec, rho, angle));
        parts.rows.push(row("angle_deg", angle));
        let scale = norm2(&lim.classifier.w);
        for (j, (wf, wl)) in fit.w.iter().zip(&lim.classifier.w).enumerate() {
            parts.rows.push(row(&format!("fit_w{}", j + 1), *wf));
            parts.rows.push(row(&format!("limit_w{}", j + 1), *wl));
            // relative to the coordinate itself, and to the whole limit vector
            if *wl != 0.0 {
                parts
                    .rows
                    .push(row(&format!("rel_err_w{}", j + 1), (wf - wl) / wl.abs()));
            }
            parts
                .rows
                .push(row(&format!("norm_rel_err_w{}", j + 1), (wf - wl) / scale));
        }
        parts.rows.push(row("fit_b", fit.b));
        parts.rows.push(row("limit_b", lim.classifier.b));
        parts.rows.push(row("fit_b_over_ln_rho", fit.b / rho.ln()));
        parts.rows.push(row("limit_b_over_ln_rho", lim.classifier.b / rho.ln()));
        parts.rows.push(row("solver_residual", lim.residual));
        parts.rows.push(row("solver_iterations", lim.iterations as f64));
        if spec.family == LossFamily::Square {
            parts.rows.push(row("abs_err_b_plus_1", (fit.b + 1.0).abs()));
        }
    }
    for spec in &cfg.losses {
        let pts: Vec<(f64, f64)> = angles.iter().filter(|a| a.0 == *spec).map(|a| (a.1, a.2)).collect();
        if !pts.is_empty() {
            parts.plots.push((
                format!("limit_check_{}_angle.csv", slug(spec)),
                PlotData::Curve(curve(&pts)),
            ));
        }
    }
    Ok(parts)
}

/// Flips each label independently with probability `p`.
fn flip_labels(data: &Dataset, p: f64, seed: u64) -> Result<Dataset, CliError> {
    if p == 0.0 {
        return Ok(data.clone());
    }
    let mut r = rng::substream(seed, LABEL_NOISE_STREAM, 0);
    let samples = data
        .iter()
        .map(|s| {
            let flip = r.random::<f64>() < p;
            let y = match (s.y, flip) {
                (Label::Positive, true) => Label::Negative,
                (Label::Negative, true) => Label::Positive,
                (y, false) => y,
            };
            LabeledSample::new(s.x.clone(), y)
        })
        .collect();
    Ok(Dataset::new(samples)?)
}

fn c_ablation(ctx: &Ctx, resolved: &ResolvedTask, p: &CAblationParams) -> Result<Parts, CliError> {
    const EXP: &str = "c_ablation";
    let cfg = ctx.cfg;
    let task = &resolved.task;
    let data: Vec<(u64, Dataset, Dataset)> = cfg
        .seeds
        .par_iter()
        .map(|&s| {
            let clean = task.sample_counts(resolved.n_minority, resolved.n_majority, s)?;
            let test = task.sample_counts(p.n_test_minority, p.n_test_majority, s.wrapping_add(TEST_SEED_OFFSET))?;
            Ok((s, flip_labels(&clean, p.label_noise, s)?, test))
        })
        .collect::<Result<_, CliError>>()?;
    let specs: Vec<LossSpec> = p
        .cpens
        .iter()
        .map(|&c| LossSpec::tbl(p.alpha, c))
        .chain(cfg.losses.iter().copied())
        .collect();
    let cells = cfg
        .seeds
        .iter()
        .flat_map(|&s| specs.iter().map(move |l| (s, *l)))
        .collect();
    let (fits, mut parts) = run_cells(ctx, EXP, cells, |seed, spec| {
        let (_, train, test) = data.iter().find(|d| d.0 == seed).expect("sampled");
        let clf = fit_linear(Objective::Empirical(train), spec, &cfg.train_for(spec, seed))?.classifier;
        let rep = metric_report(test, &clf, DEFAULT_FPR_CAP, DEFAULT_FPR_POINT)?;
        let pop = mixture_auc(&clf.w, &task.minority, &task.majority)?;
        let mut rows = classifier_rows(EXP, seed, spec, &clf);
        rows.push(ResultRow::new(EXP, Some(seed), spec, "population_auc", pop));
        rows.push(ResultRow::new(EXP, Some(seed), spec, "test_auc", rep.auc));
        rows.push(ResultRow::new(EXP, Some(seed), spec, "test_op_auc", rep.op_auc));
        rows.push(ResultRow::new(
            EXP,
            Some(seed),
            spec,
            "test_recall_at_fpr",
            rep.recall_at_fpr,
        ));
        Ok((rows, [pop, rep.auc, rep.op_auc]))
    });
    for (k, name) in ["population_auc", "test_auc", "test_op_auc"].iter().enumerate() {
        let pts: Vec<(f64, f64)> = fits
            .iter()
            .filter(|f| f.1.family == LossFamily::Tbl && f.1.alpha == p.alpha && p.cpens.contains(&f.1.cpen))
            .map(|f| (f.1.cpen, f.2[k]))
            .collect();
        let c = curve(&pts);
        for pt in &c {
            let spec = LossSpec::tbl(p.alpha, pt.x);
            parts
                .rows
                .push(ResultRow::new(EXP, None, &spec, &format!("mean_{name}"), pt.mean));
            parts
                .rows
                .push(ResultRow::new(EXP, None, &spec, &format!("std_{name}"), pt.std));
        }
        parts.plots.push((format!("c_ablation_{name}.csv"), PlotData::Curve(c)));
    }
    Ok(parts)
}

fn influence_demo(ctx: &Ctx, resolved: &ResolvedTask, p: &InfluenceParams) -> Result<Parts, CliError> {
    const EXP: &str = "influence_demo";
    let cfg = ctx.cfg;
    let data = sample_per_seed(ctx, resolved, p.n_minority, p.n_majority)?;
    let cells = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.losses.iter().map(move |l| (s, *l)))
        .collect();
    let (fits, mut parts) = run_cells(ctx, EXP, cells, |seed, spec| {
        let d = &data.iter().find(|(s, _)| *s == seed).expect("sampled").1;
        let clf = fit_newton(d, spec, None, p.tol)?;
        let mut rows = classifier_rows(EXP, seed, spec, &clf);
        let mut minority: Vec<usize> = (0..d.len()).filter(|&i| d.samples()[i].y == Label::Positive).collect();
        minority.sort_by(|&a, &b| clf.margin(&d.samples()[a].x).total_cmp(&clf.margin(&d.samples()[b].x)));
        let (poor, well) = (minority[0], minority[minority.len() - 1]);
        let mut norms = [0.0; 2];
        for (k, (tag, i)) in [("poor", poor), ("well", well)].into_iter().enumerate() {
            let rep = influence(d, &clf, spec, &d.samples()[i])?;
            let fd = retrain_influence(d, spec, i, p.eps, p.tol)?;
            let diff: Vec<f64> = rep.influence_oracle.iter().zip(&fd).map(|(a, b)| a - b).collect();
            norms[k] = norm2(&rep.influence_oracle);
            rows.push(ResultRow::new(
                EXP,
                Some(seed),
                spec,
                &format!("margin_{tag}"),
                clf.margin(&d.samples()[i].x),
            ));
            rows.push(ResultRow::new(
                EXP,
                Some(seed),
                spec,
                &format!("influence_norm_{tag}"),
                norms[k],
            ));
            rows.push(ResultRow::new(
                EXP,
                Some(seed),
                spec,
                &format!("retrain_abs_err_{tag}"),
                norm2(&diff),
            ));
            if norms[k] > 0.0 {
                rows.push(ResultRow::new(
                    EXP,
                    Some(seed),
                    spec,
                    &format!("retrain_rel_err_{tag}"),
                    norm2(&diff) / norms[k],
                ));
            }
            rows.push(ResultRow::new(
                EXP,
                Some(seed),
                spec,
                &format!("hessian_singular_{tag}"),
                rep.hessian_singular as u8 as f64,
            ));
            if let Some(c) = rep.cosine {
                rows.push(ResultRow::new(
                    EXP,
                    Some(seed),
                    spec,
                    &format!("closed_form_cosine_{tag}"),
                    c,
                ));
                rows.push(ResultRow::new(
                    EXP,
                    Some(seed),
                    spec,
                    &format!("flagged_{tag}"),
                    rep.flagged as u8 as f64,
                ));
            }
        }
        let poor_wins = norms[0] > norms[1];
        rows.push(ResultRow::new(
            EXP,
            Some(seed),
            spec,
            "poor_exceeds_well",
            poor_wins as u8 as f64,
        ));
        // influence of every training point against its margin
        let mut pts: Vec<CurvePoint> = d
            .iter()
            .map(|s| {
                Ok(CurvePoint::aggregate(
                    clf.margin(&s.x),
                    &[norm2(&influence(d, &clf, spec, s)?.influence_oracle)],
                ))
            })
            .collect::<Result<_, CliError>>()?;
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.mean.total_cmp(&b.mean)));
        Ok((rows, (poor_wins, pts)))
    });
    for spec in &cfg.losses {
        let mine: Vec<_> = fits.iter().filter(|f| f.1 == *spec).collect();
        if mine.is_empty() {
            continue;
        }
        let wins = mine.iter().filter(|f| f.2 .0).count();
        parts
            .rows
            .push(ResultRow::new(EXP, None, spec, "poor_exceeds_well_count", wins as f64));
        parts
            .rows
            .push(ResultRow::new(EXP, None, spec, "instances", mine.len() as f64));
    }
    for (seed, spec, (_, pts)) in fits {
        parts.plots.push((
            format!("influence_{}_seed{seed}.csv", slug(&spec)),
            PlotData::Curve(pts),
        ));
    }
    Ok(parts)
}
