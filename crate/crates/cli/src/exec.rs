//! Subcommand execution: input loading, estimator plumbing, artifact
//! emission, and the exit-code mapping.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use robrank::{
    aligned_mse, build_design, concomitant_scale, consistency_report, cv_lambda, entry_order_csv,
    fmt_float, gen_flip, gen_gaussian, gen_image, grid_csv, lasso_path, lbi_path, lbi_run,
    outlier_rows, path_csv, ranking_csv, refit_scores, run_grid, solve_l2, solve_lasso,
    to_canonical_json, top_fraction, truth_csv, tsr, ComparisonDataset, CsvSchema,
    CyclicProjection, DesignOperator, GridMethod, LbiConfig, LbiVariant, Method, RefitMode,
    RegularizationPath, StopCondition, DEFAULT_CG_TOL, DEFAULT_HUBER_M,
};
use serde::Serialize;

use crate::report::{rank_rows, report_timing, OutlierReport, Parameters, RunReport, Timer};
use crate::{Cli, Cmd, GenArg, GridMethodArg, LbiArgs, MethodArg, SelectionArgs, SolverArg};

/// A failed run, bucketed by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flag value or combination (exit 1).
    Usage(String),
    /// File-system problem (exit 2).
    Io { path: PathBuf, source: io::Error },
    /// Library rejection: data problems exit 2, numerical failures exit 3.
    Lib(robrank::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io { .. } => 2,
            Failure::Lib(err) => {
                if err.is_data_error() {
                    2
                } else {
                    3
                }
            }
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Failure::Lib(err) => write!(f, "{err}"),
        }
    }
}

impl From<robrank::Error> for Failure {
    fn from(err: robrank::Error) -> Self {
        Failure::Lib(err)
    }
}

/// Shared run context: output directory and the global knobs.
struct Ctx {
    out: PathBuf,
    quiet: bool,
    seed: u64,
    tol: f64,
    max_iters: Option<usize>,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|source| Failure::Io { path, source })
    }

    fn say(&self, line: String) {
        if !self.quiet {
            println!("{line}");
        }
    }

    fn base_params(&self, intercept: bool) -> Parameters {
        Parameters {
            tol: self.tol,
            seed: self.seed,
            intercept,
            ..Parameters::default()
        }
    }

    /// Iteration cap for the sparse-outlier solves.
    fn lasso_iters(&self) -> usize {
        self.max_iters.unwrap_or(50_000)
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let Cli {
        cmd,
        out,
        quiet,
        seed,
        tol,
        max_iters,
    } = cli;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!(
            "--tol must be positive and finite, got {tol}"
        )));
    }
    if max_iters == Some(0) {
        return Err(Failure::Usage("--max-iters must be at least 1".into()));
    }
    fs::create_dir_all(&out).map_err(|source| Failure::Io {
        path: out.clone(),
        source,
    })?;
    let ctx = Ctx {
        out,
        quiet,
        seed,
        tol,
        max_iters,
    };
    match cmd {
        Cmd::Rank {
            input,
            method,
            intercept,
            selection,
            lbi,
        } => rank_cmd(&ctx, &input, method, intercept, &selection, &lbi),
        Cmd::Detect {
            input,
            intercept,
            selection,
        } => detect_cmd(&ctx, &input, intercept, &selection),
        Cmd::Path {
            input,
            solver,
            intercept,
            selection,
            lbi,
        } => path_cmd(&ctx, &input, solver, intercept, &selection, &lbi),
        Cmd::Simulate {
            gen,
            n,
            sn,
            op,
            sigma,
            mag,
        } => simulate_cmd(&ctx, gen, n, sn, op, sigma, mag),
        Cmd::Grid {
            method,
            n,
            sn,
            op,
            repeats,
            lbi,
        } => grid_cmd(&ctx, method, n, &sn, &op, repeats, &lbi),
        Cmd::ImageSim {
            width,
            height,
            radius,
            sigma,
            op,
            mag,
            lbi,
        } => image_sim_cmd(&ctx, width, height, radius, sigma, op, mag, &lbi),
        Cmd::Check {
            input,
            support,
            sigma,
            truth,
            kappa,
            intercept,
        } => check_cmd(&ctx, &input, &support, sigma, truth.as_deref(), kappa, intercept),
        Cmd::Tsr { input } => tsr_cmd(&ctx, &input),
    }
}

// ---------------------------------------------------------------------------
// Input plumbing

fn load_dataset(path: &Path) -> Result<ComparisonDataset, Failure> {
    let file = fs::File::open(path).map_err(|source| Failure::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ComparisonDataset::load_csv(file, &CsvSchema::default())?)
}

/// Read candidate comparison indices from the first column of a CSV
/// (a header row is skipped; entry_order.csv is accepted as-is).
fn read_support(path: &Path) -> Result<Vec<usize>, Failure> {
    let text = fs::read_to_string(path).map_err(|source| Failure::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut support = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = line.split(',').next().unwrap_or("").trim();
        match first.parse::<usize>() {
            Ok(idx) => support.push(idx),
            Err(_) if i == 0 => continue, // header row
            Err(_) => {
                return Err(Failure::Lib(robrank::Error::MalformedRow {
                    line: i + 1,
                    reason: format!("expected a comparison index, got {first:?}"),
                }))
            }
        }
    }
    Ok(support)
}

/// Read a planted-corruption sidecar (`comparison_index,gamma_star`).
fn read_truth(path: &Path) -> Result<Vec<(usize, f64)>, Failure> {
    let text = fs::read_to_string(path).map_err(|source| Failure::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut truth = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let first = fields.next().unwrap_or("").trim();
        let second = fields.next().unwrap_or("").trim();
        match (first.parse::<usize>(), second.parse::<f64>()) {
            (Ok(idx), Ok(value)) => truth.push((idx, value)),
            _ if i == 0 => continue, // header row
            _ => {
                return Err(Failure::Lib(robrank::Error::MalformedRow {
                    line: i + 1,
                    reason: format!("expected `comparison_index,gamma_star`, got {line:?}"),
                }))
            }
        }
    }
    Ok(truth)
}

// ---------------------------------------------------------------------------
// Lambda selection and the sparse-outlier drive

/// Outcome of the sparse-outlier stage: the full path for entry ranks plus
/// the operating-point estimate chosen by the selection flags.
struct Detection {
    path: RegularizationPath,
    /// Sparse operating-point estimate, index-sorted.
    gamma: Vec<(usize, f64)>,
    /// Rows to drop for the debiased refit.
    support: Vec<usize>,
}

fn validate_selection(sel: &SelectionArgs) -> Result<(), Failure> {
    if let Some(l) = sel.lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Failure::Usage(format!(
                "--lambda must be positive and finite, got {l}"
            )));
        }
    }
    if let Some(p) = sel.top_frac {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Failure::Usage(format!(
                "--top-frac must lie in [0, 1], got {p}"
            )));
        }
    }
    Ok(())
}

/// Run the sparse-outlier stage under the documented selection precedence:
/// `--lambda` over `--top-frac` over `--cv` over the dichotomous rule
/// (lambda = 1 on +/-1 data) over joint noise-scale estimation.
fn detect_outliers(
    op: &DesignOperator,
    data: &ComparisonDataset,
    y: &[f64],
    sel: &SelectionArgs,
    ctx: &Ctx,
    params: &mut Parameters,
) -> Result<Detection, Failure> {
    validate_selection(sel)?;
    let max_it = ctx.lasso_iters();
    params.max_iters = Some(max_it);
    let proj = CyclicProjection::new(op, DEFAULT_CG_TOL)?;
    let path = lasso_path(&proj, y, None, ctx.tol, max_it)?;

    if let Some(p) = sel.top_frac.filter(|_| sel.lambda.is_none()) {
        params.selection = Some("top-frac".into());
        params.top_frac = Some(p);
        let support = top_fraction(&path, p)?;
        // Report the gamma values seen at the path floor; a selected row
        // that is inactive there keeps an explicit zero.
        let floor: BTreeMap<usize, f64> = path
            .points
            .last()
            .map(|pt| pt.gamma.iter().copied().collect())
            .unwrap_or_default();
        let mut gamma: Vec<(usize, f64)> = support
            .iter()
            .map(|&r| (r, floor.get(&r).copied().unwrap_or(0.0)))
            .collect();
        gamma.sort_unstable_by_key(|&(r, _)| r);
        let mut support_sorted = support;
        support_sorted.sort_unstable();
        return Ok(Detection {
            path,
            gamma,
            support: support_sorted,
        });
    }

    let lambda = if let Some(l) = sel.lambda {
        params.selection = Some("explicit-lambda".into());
        l
    } else if sel.cv {
        params.selection = Some("cross-validation".into());
        params.cv_folds = Some(5);
        let cv = cv_lambda(&proj, y, 5, None, ctx.seed, ctx.tol, max_it)?;
        cv.selected
    } else if data.is_dichotomous() {
        params.selection = Some("dichotomous".into());
        1.0
    } else {
        params.selection = Some("concomitant-scale".into());
        let fit = concomitant_scale(op, y, DEFAULT_HUBER_M, 1e-6, 50, ctx.tol, max_it)?;
        params.lambda = Some(fit.lambda);
        params.sigma = Some(fit.sigma);
        let support = fit.outliers.support();
        return Ok(Detection {
            path,
            gamma: fit.outliers.gamma,
            support,
        });
    };
    params.lambda = Some(lambda);
    let est = solve_lasso(&proj, y, lambda, ctx.tol, max_it, None)?;
    let support = est.support();
    Ok(Detection {
        path,
        gamma: est.gamma,
        support,
    })
}

// ---------------------------------------------------------------------------
// Iteration-dynamics configuration

/// Build an iteration-dynamics configuration from the CLI knobs. Without a
/// preset the projected variant runs under a support budget:
/// `ceil(budget_frac * m)` rows, where `--top-frac` overrides the given
/// default fraction. Presets run the joint dynamics to their own caps.
fn lbi_setup(
    args: &LbiArgs,
    top_frac: Option<f64>,
    ctx: &Ctx,
    op: &DesignOperator,
    params: &mut Parameters,
    default_budget_frac: f64,
) -> Result<LbiConfig, Failure> {
    if !(args.kappa > 0.0 && args.kappa.is_finite()) {
        return Err(Failure::Usage(format!(
            "--kappa must be positive and finite, got {}",
            args.kappa
        )));
    }
    if let Some(dt) = args.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Failure::Usage(format!(
                "--dt must be positive and finite, got {dt}"
            )));
        }
    }
    if let Some(p) = top_frac {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Failure::Usage(format!(
                "--top-frac must lie in [0, 1], got {p}"
            )));
        }
    }
    let mut config = match args.preset.as_deref() {
        Some(name @ ("pcvqa" | "nba" | "tennis")) => LbiConfig::preset(name)?,
        Some(other) => {
            return Err(Failure::Usage(format!(
                "--preset must be pcvqa, nba, or tennis, got {other:?}"
            )))
        }
        None => LbiConfig::new(args.kappa),
    };
    if let Some(dt) = args.dt {
        config.delta_t = Some(dt);
    }
    if let Some(cap) = ctx.max_iters {
        config.max_iters = cap;
    }
    if args.preset.is_none() {
        let m = op.n_rows();
        let frac = top_frac.unwrap_or(default_budget_frac);
        let budget = ((frac * m as f64).ceil() as usize).clamp(1, m);
        config.stop = vec![StopCondition::SupportBudget(budget)];
    }
    config.cg_tol = DEFAULT_CG_TOL;

    params.kappa = Some(config.kappa);
    let dt = config.resolved_delta_t(op);
    params.delta_t = Some(dt);
    params.h = Some(config.kappa * dt);
    params.preset = args.preset.clone();
    params.max_iters = Some(config.max_iters);
    params.stop = Some(match config.stop.first() {
        Some(StopCondition::SupportBudget(k)) => {
            format!("support budget {k} or {} iterations", config.max_iters)
        }
        _ => format!("{} iterations", config.max_iters),
    });
    Ok(config)
}

// ---------------------------------------------------------------------------
// Subcommands

fn method_label(method: Method) -> &'static str {
    match method {
        Method::L2 => "L2",
        Method::Hlasso => "HLASSO",
        Method::Lbi => "LBI",
        Method::LassoL2 => "LASSO+L2",
    }
}

fn rank_cmd(
    ctx: &Ctx,
    input: &Path,
    method: MethodArg,
    intercept: bool,
    sel: &SelectionArgs,
    lbi: &LbiArgs,
) -> Result<(), Failure> {
    let mut timer = Timer::start();
    let data = load_dataset(input)?;
    let op = build_design(&data, intercept)?;
    let y = data.values();
    timer.mark("load");

    let mut params = ctx.base_params(intercept);
    let (fit, outliers) = match method {
        MethodArg::L2 => (solve_l2(&op, &y, ctx.tol)?, Vec::new()),
        MethodArg::Hlasso | MethodArg::LassoL2 => {
            let det = detect_outliers(&op, &data, &y, sel, ctx, &mut params)?;
            let fit = if method == MethodArg::Hlasso {
                refit_scores(&op, &y, RefitMode::CorrectedData { gamma: &det.gamma }, ctx.tol)?
            } else {
                refit_scores(&op, &y, RefitMode::Drop { support: &det.support }, ctx.tol)?
            };
            let rows = outlier_rows(&data, &det.gamma, &det.path)?;
            (fit, rows)
        }
        MethodArg::Lbi => {
            let config = lbi_setup(lbi, sel.top_frac, ctx, &op, &mut params, 0.05)?;
            let outcome = lbi_run(&op, &y, &config)?;
            let rows = outlier_rows(&data, &outcome.outliers.gamma, &outcome.path)?;
            (outcome.ranking, rows)
        }
    };
    timer.mark("solve");

    let label = method_label(fit.method);
    let mut report = RunReport {
        method: label.to_string(),
        parameters: params,
        ranking: rank_rows(&fit, data.items()),
        intercept: fit.intercept,
        outliers,
        timing: Vec::new(),
    };
    ctx.write("ranking.csv", &ranking_csv(&fit, data.items())?)?;
    ctx.write("report.json", &to_canonical_json(&report))?;
    timer.mark("write");

    ctx.say(format!(
        "{label}: ranked {} items from {} comparisons; {} comparisons flagged",
        data.n_items(),
        data.n_comparisons(),
        report.outliers.len()
    ));
    if let Some(c) = report.intercept {
        ctx.say(format!("host advantage {}", fmt_float(c)));
    }
    ctx.say(format!(
        "wrote ranking.csv and report.json to {}",
        ctx.out.display()
    ));
    report.timing = timer.into_phases();
    report_timing(&report.timing);
    Ok(())
}

fn detect_cmd(
    ctx: &Ctx,
    input: &Path,
    intercept: bool,
    sel: &SelectionArgs,
) -> Result<(), Failure> {
    let mut timer = Timer::start();
    let data = load_dataset(input)?;
    let op = build_design(&data, intercept)?;
    let y = data.values();
    timer.mark("load");

    let mut params = ctx.base_params(intercept);
    let det = detect_outliers(&op, &data, &y, sel, ctx, &mut params)?;
    let rows = outlier_rows(&data, &det.gamma, &det.path)?;
    timer.mark("solve");

    let report = OutlierReport {
        method: "HLASSO".into(),
        parameters: params,
        outliers: rows,
    };
    ctx.write("outliers.json", &to_canonical_json(&report))?;
    timer.mark("write");

    ctx.say(format!(
        "flagged {} of {} comparisons",
        report.outliers.len(),
        data.n_comparisons()
    ));
    ctx.say(format!("wrote outliers.json to {}", ctx.out.display()));
    report_timing(&timer.into_phases());
    Ok(())
}

fn path_cmd(
    ctx: &Ctx,
    input: &Path,
    solver: SolverArg,
    intercept: bool,
    sel: &SelectionArgs,
    lbi: &LbiArgs,
) -> Result<(), Failure> {
    let mut timer = Timer::start();
    let data = load_dataset(input)?;
    let op = build_design(&data, intercept)?;
    let y = data.values();
    timer.mark("load");

    validate_selection(sel)?;
    let path = match solver {
        SolverArg::Lasso => {
            let proj = CyclicProjection::new(&op, DEFAULT_CG_TOL)?;
            let grid = sel.lambda.map(|l| vec![l]);
            lasso_path(&proj, &y, grid.as_deref(), ctx.tol, ctx.lasso_iters())?
        }
        SolverArg::Lbi => {
            let mut params = Parameters::default();
            let config = lbi_setup(lbi, sel.top_frac, ctx, &op, &mut params, 0.25)?;
            lbi_path(&op, &y, &config)?
        }
    };
    timer.mark("solve");

    ctx.write("path.csv", &path_csv(&path))?;
    ctx.write("entry_order.csv", &entry_order_csv(&path))?;
    timer.mark("write");

    ctx.say(format!(
        "path: {} points, {} of {} comparisons entered",
        path.points.len(),
        path.entry.iter().flatten().count(),
        data.n_comparisons()
    ));
    ctx.say(format!(
        "wrote path.csv and entry_order.csv to {}",
        ctx.out.display()
    ));
    report_timing(&timer.into_phases());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    ctx: &Ctx,
    gen: GenArg,
    n: usize,
    sn: usize,
    op_frac: f64,
    sigma: f64,
    mag: f64,
) -> Result<(), Failure> {
    let mut timer = Timer::start();
    let instance = match gen {
        GenArg::Flip => gen_flip(n, sn, op_frac, ctx.seed)?,
        GenArg::Gaussian => gen_gaussian(n, sn, sigma, op_frac, mag, ctx.seed)?,
    };
    timer.mark("generate");

    let mut csv = Vec::new();
    instance.dataset.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("comparison CSV is UTF-8");
    ctx.write("comparisons.csv", &csv)?;
    ctx.write("truth.csv", &truth_csv(&instance.truth_gamma))?;
    timer.mark("write");

    let family = match gen {
        GenArg::Flip => "flip",
        GenArg::Gaussian => "gaussian",
    };
    ctx.say(format!(
        "{family} instance: {} items, {} comparisons, {} planted outliers (seed {})",
        instance.dataset.n_items(),
        instance.dataset.n_comparisons(),
        instance.truth_gamma.len(),
        ctx.seed
    ));
    ctx.say(format!(
        "wrote comparisons.csv and truth.csv to {}",
        ctx.out.display()
    ));
    report_timing(&timer.into_phases());
    Ok(())
}

fn grid_cmd(
    ctx: &Ctx,
    method: GridMethodArg,
    n: usize,
    sn: &[usize],
    op_fracs: &[f64],
    repeats: usize,
    lbi: &LbiArgs,
) -> Result<(), Failure> {
    let mut timer = Timer::start();
    let grid_method = match method {
        GridMethodArg::Lasso => GridMethod::Lasso,
        GridMethodArg::Lbi => {
            if !(lbi.kappa > 0.0 && lbi.kappa.is_finite()) {
                return Err(Failure::Usage(format!(
                    "--kappa must be positive and finite, got {}",
                    lbi.kappa
                )));
            }
            let mut config = match lbi.preset.as_deref() {
                Some(name @ ("pcvqa" | "nba" | "tennis")) => LbiConfig::preset(name)?,
                Some(other) => {
                    return Err(Failure::Usage(format!(
                        "--preset must be pcvqa, nba, or tennis, got {other:?}"
                    )))
                }
                None => {
                    let mut c = LbiConfig::new(lbi.kappa);
                    // The joint dynamics cost O(m) per step, which suits the
                    // grid's many medium-size instances.
                    c.variant = LbiVariant::Full;
                    c.max_iters = 500_000;
                    c
                }
            };
            if let Some(dt) = lbi.dt {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Failure::Usage(format!(
                        "--dt must be positive and finite, got {dt}"
                    )));
                }
                config.delta_t = Some(dt);
            }
            if let Some(cap) = ctx.max_iters {
                config.max_iters = cap;
            }
            GridMethod::Lbi(config)
        }
    };
    let cells = run_grid(&grid_method, n, sn, op_fracs, repeats, ctx.seed)?;
    timer.mark("run");

    ctx.write("grid.csv", &grid_csv(&cells))?;
    timer.mark("write");

    for cell in &cells {
        ctx.say(format!(
            "SN {} OP {:.2}: mean AUC {:.4} (sd {:.4}) over {} repeats",
            cell.sn, cell.op_frac, cell.mean_auc, cell.sd_auc, cell.repeats
        ));
    }
    ctx.say(format!("wrote grid.csv to {}", ctx.out.display()));
    report_timing(&timer.into_phases());
    Ok(())
}

/// Artifact of `image-sim`: reconstruction errors of plain least squares
/// versus the early-stopped dynamics with the detected rows dropped.
#[derive(Serialize)]
struct ImageReport {
    width: usize,
    height: usize,
    radius: usize,
    sigma: f64,
    outlier_frac: f64,
    outlier_mag: f64,
    seed: u64,
    kappa: f64,
    support_budget: usize,
    planted_outliers: usize,
    detected_support: usize,
    mse_l2: f64,
    mse_lbi_drop: f64,
    /// `mse_lbi_drop / mse_l2` (infinite when the plain fit is exact).
    ratio: f64,
}

#[allow(clippy::too_many_arguments)]
fn image_sim_cmd(
    ctx: &Ctx,
    width: usize,
    height: usize,
    radius: usize,
    sigma: f64,
    op_frac: f64,
    mag: f64,
    lbi: &LbiArgs,
) -> Result<(), Failure> {
    let mut timer = Timer::start();
    let instance = gen_image(width, height, radius, sigma, op_frac, mag, None, ctx.seed)?;
    let op = build_design(&instance.dataset, false)?;
    let y = instance.dataset.values();
    let m = op.n_rows();
    timer.mark("generate");

    let l2 = solve_l2(&op, &y, ctx.tol)?;
    let mse_l2 = aligned_mse(&l2.theta, &instance.truth_theta)?;
    timer.mark("least-squares");

    // Budget the support at 1.5x the corrupted fraction so every planted
    // outlier has room to enter before the refit.
    let budget = (((1.5 * op_frac).max(0.002) * m as f64).ceil() as usize).clamp(64.min(m), m);
    let mut params = Parameters::default();
    let config = {
        let mut config = lbi_setup(lbi, None, ctx, &op, &mut params, 0.0)?;
        config.variant = LbiVariant::Full;
        config.stop = vec![StopCondition::SupportBudget(budget)];
        if ctx.max_iters.is_none() {
            config.max_iters = 500_000;
        }
        config
    };
    let outcome = lbi_run(&op, &y, &config)?;
    let support = outcome.outliers.support();
    let dropped = refit_scores(&op, &y, RefitMode::Drop { support: &support }, ctx.tol)?;
    let mse_lbi = aligned_mse(&dropped.theta, &instance.truth_theta)?;
    timer.mark("dynamics");

    let report = ImageReport {
        width,
        height,
        radius,
        sigma,
        outlier_frac: op_frac,
        outlier_mag: mag,
        seed: ctx.seed,
        kappa: config.kappa,
        support_budget: budget,
        planted_outliers: instance.truth_gamma.len(),
        detected_support: support.len(),
        mse_l2,
        mse_lbi_drop: mse_lbi,
        ratio: mse_lbi / mse_l2,
    };
    ctx.write("image_report.json", &to_canonical_json(&report))?;

    let mut recon = String::from("pixel,truth,l2,lbi_drop\n");
    for (i, t) in instance.truth_theta.iter().enumerate() {
        recon.push_str(&format!(
            "{i},{},{},{}\n",
            fmt_float(*t),
            fmt_float(l2.theta[i]),
            fmt_float(dropped.theta[i])
        ));
    }
    ctx.write("reconstruction.csv", &recon)?;
    timer.mark("write");

    ctx.say(format!(
        "image {}x{} radius {}: aligned mse {} (least squares) vs {} (dynamics + drop refit)",
        width,
        height,
        radius,
        fmt_float(mse_l2),
        fmt_float(mse_lbi)
    ));
    ctx.say(format!(
        "wrote image_report.json and reconstruction.csv to {}",
        ctx.out.display()
    ));
    report_timing(&timer.into_phases());
    Ok(())
}

fn check_cmd(
    ctx: &Ctx,
    input: &Path,
    support_file: &Path,
    sigma: Option<f64>,
    truth_file: Option<&Path>,
    kappa: Option<f64>,
    intercept: bool,
) -> Result<(), Failure> {
    if let Some(s) = sigma {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Failure::Usage(format!(
                "--sigma must be finite and nonnegative, got {s}"
            )));
        }
    }
    if let Some(k) = kappa {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Failure::Usage(format!(
                "--kappa must be positive and finite, got {k}"
            )));
        }
    }
    let mut timer = Timer::start();
    let data = load_dataset(input)?;
    let op = build_design(&data, intercept)?;
    let y = data.values();
    let support = read_support(support_file)?;
    let truth = truth_file.map(read_truth).transpose()?;
    timer.mark("load");

    // Default noise scale: the least-squares residual spread over the
    // cyclic dimension. Inflated when the data holds strong outliers;
    // pass --sigma for a trusted value.
    let sigma = match sigma {
        Some(s) => s,
        None => {
            let proj = CyclicProjection::new(&op, DEFAULT_CG_TOL)?;
            let l = proj.cyclic_dim();
            if l == 0 {
                0.0
            } else {
                solve_l2(&op, &y, ctx.tol)?.residual_l2 / (l as f64).sqrt()
            }
        }
    };
    let report = consistency_report(&op, &support, sigma, truth.as_deref(), kappa)?;
    timer.mark("diagnose");

    ctx.write("consistency.json", &to_canonical_json(&report))?;
    timer.mark("write");

    let verdict = |ok: bool| if ok { "pass" } else { "fail" };
    ctx.say(format!(
        "support {} of {} rows (cyclic dimension {}): restricted-eigenvalue {}, irrepresentability {}, signal-strength {}",
        report.support.len(),
        data.n_comparisons(),
        report.l,
        verdict(report.c1_holds),
        verdict(report.c2_holds),
        verdict(report.c3_holds)
    ));
    ctx.say(format!("wrote consistency.json to {}", ctx.out.display()));
    report_timing(&timer.into_phases());
    Ok(())
}

/// Artifact of `tsr`.
#[derive(Serialize)]
struct TsrReport {
    items: usize,
    comparisons: usize,
    tsr: f64,
}

fn tsr_cmd(ctx: &Ctx, input: &Path) -> Result<(), Failure> {
    let mut timer = Timer::start();
    let data = load_dataset(input)?;
    timer.mark("load");
    let value = tsr(&data)?;
    timer.mark("count");

    let report = TsrReport {
        items: data.n_items(),
        comparisons: data.n_comparisons(),
        tsr: value,
    };
    ctx.write("tsr.json", &to_canonical_json(&report))?;
    timer.mark("write");

    ctx.say(format!(
        "transitivity satisfaction rate {} over {} items",
        fmt_float(value),
        data.n_items()
    ));
    ctx.say(format!("wrote tsr.json to {}", ctx.out.display()));
    report_timing(&timer.into_phases());
    Ok(())
}
