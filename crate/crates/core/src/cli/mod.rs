//! Command-line front end: fitting, diagnostics, traced alternating
//! minimization, the three studies and a self test.

mod selftest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::ao::{contraction_step_violations, write_trace_csv};
use crate::btl::{
    fit_penalized_mle, read_observation, read_scores, write_scores, BtlError, FitSolver,
    PenaltySpec,
};
use crate::expansions::{write_residual_csv, write_residual_records};
use crate::experiments::{
    ao_instance, emit, run_ao_study, run_expansion_study, run_rho_study, study_summaries,
    sup_expansion_check, ExperimentConfig, ExperimentError, Format, PRule, PenaltyKind,
};
use crate::tol;

pub use selftest::{run_selftest, SelftestOutcome};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for a structured failure (non-convergence, violated bound).
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for a usage or input error.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "perturbopt",
    version,
    about = "Perturbed convex optimization and BTL ranking experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Random seed; falls back to the config file, then PERTURBOPT_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: machine parallelism].
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON experiment configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exit with status 1 on non-convergence or a violated asserted bound.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the penalized maximum-likelihood scores of an observation file.
    Fit(FitArgs),
    /// Sup-norm expansion diagnostics of an observation against known scores.
    Diagnose(DiagnoseArgs),
    /// One traced alternating-minimization run on a sampled instance.
    Ao(AoArgs),
    /// Dual-norm coupling of the Fisher matrix across sizes.
    StudyRho(StudyArgs),
    /// Leading term and remainder of the penalized MLE across sizes.
    StudyExpansion(StudyArgs),
    /// Alternating-minimization rates and certificates across sizes.
    StudyAo(StudyArgs),
    /// Invariant checks on small built-in instances.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Observation CSV `j,m,N,S` with 1-based items.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV `item,score`.
    #[arg(long)]
    out: PathBuf,
    /// Penalty: mean_shift, ridge or none.
    #[arg(long, default_value = "mean_shift")]
    penalty: String,
    /// Penalty strength g^2.
    #[arg(long, default_value_t = tol::DEFAULT_GSQ)]
    gsq: f64,
    /// Solver: newton or coordinate.
    #[arg(long, default_value = "newton")]
    solver: String,
    /// Gradient sup-norm tolerance.
    #[arg(long, default_value_t = tol::SOLVER_TOL)]
    tol: f64,
    /// Number of items [default: largest index in the file].
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Observation CSV `j,m,N,S` with 1-based items.
    #[arg(long)]
    input: PathBuf,
    /// True scores CSV `item,score`.
    #[arg(long)]
    truth: PathBuf,
    /// Residual report CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Diagnostics CSV `name,value` [default: <out>.diagnostics.csv].
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Penalty: mean_shift or ridge.
    #[arg(long, default_value = "mean_shift")]
    penalty: String,
    /// Penalty strength g^2.
    #[arg(long, default_value_t = tol::DEFAULT_GSQ)]
    gsq: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct AoArgs {
    /// Number of items.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Sup-norm size of the start perturbation.
    #[arg(long, default_value_t = 0.001)]
    gap: f64,
    /// Alternating-minimization rounds.
    #[arg(long, default_value_t = 25)]
    steps: usize,
    /// Run on the quadratic model at the joint minimizer.
    #[arg(long)]
    surrogate: bool,
    /// Write the per-step trace CSV here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Comma-separated item counts [default: 100,200,400].
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Replications per size [default: 20].
    #[arg(long)]
    reps: Option<usize>,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Fixed edge probability [default: min(1, ln(n)^3 / n)].
    #[arg(long)]
    p: Option<f64>,
    /// Comparisons per edge [default: 1].
    #[arg(long = "L")]
    l: Option<u32>,
    /// Penalty strength g^2 [default: 1].
    #[arg(long)]
    gsq: Option<f64>,
    /// mean_shift or ridge [default: mean_shift].
    #[arg(long)]
    penalty: Option<String>,
    /// Start perturbation of the alternating-minimization study [default: 0.001].
    #[arg(long)]
    gap: Option<f64>,
    /// Steps of the alternating-minimization study [default: 25].
    #[arg(long)]
    steps: Option<usize>,
    /// Quadratic model in the alternating-minimization study.
    #[arg(long)]
    surrogate: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl From<BtlError> for CliError {
    fn from(e: BtlError) -> Self {
        match e {
            BtlError::NotConverged(_) | BtlError::NotIdentifiable(_) | BtlError::Solve(_) => {
                CliError::Failure(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(_) | ExperimentError::Io { .. } => {
                CliError::Usage(e.to_string())
            }
            ExperimentError::Btl(b) => b.into(),
            other => CliError::Failure(other.to_string()),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match &cli.command {
        Command::Fit(a) => a.common.threads,
        Command::Diagnose(a) => a.common.threads,
        Command::Ao(a) => a.common.threads,
        Command::StudyRho(a) | Command::StudyExpansion(a) | Command::StudyAo(a) => a.common.threads,
        Command::Selftest(a) => a.common.threads,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Failure(m)) => {
            eprintln!("failure: {m}");
            EXIT_FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Fit(a) => fit(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Ao(a) => ao(a),
        Command::StudyRho(a) => study(a, "rho"),
        Command::StudyExpansion(a) => study(a, "expansion"),
        Command::StudyAo(a) => study(a, "ao"),
        Command::Selftest(a) => {
            let out = run_selftest(resolve_seed(&a.common, None)?);
            for (name, ok, detail) in &out.checks {
                println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
            }
            Ok(if out.all_pass() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            })
        }
    }
}

fn resolve_seed(common: &Common, config_seed: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = common.seed {
        return Ok(s);
    }
    if let Some(s) = config_seed {
        return Ok(s);
    }
    match std::env::var("PERTURBOPT_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("PERTURBOPT_SEED is not an integer: {v}"))),
        Err(_) => Ok(0),
    }
}

fn parse_penalty(kind: &str, gsq: f64) -> Result<PenaltySpec, CliError> {
    let p =
        PenaltySpec::parse(kind, gsq).ok_or_else(|| usage(format!("unknown penalty {kind}")))?;
    p.validate()?;
    Ok(p)
}

fn fit(a: FitArgs) -> Result<i32, CliError> {
    let penalty = parse_penalty(&a.penalty, a.gsq)?;
    let solver = match a.solver.as_str() {
        "newton" => FitSolver::Newton,
        "coordinate" => FitSolver::Coordinate,
        other => return Err(usage(format!("unknown solver {other}"))),
    };
    let (obs, has_wins) = read_observation(&a.input, a.n)?;
    if !has_wins {
        return Err(usage(format!(
            "{}: the S column is required for fitting",
            a.input.display()
        )));
    }
    match fit_penalized_mle(&obs, penalty, solver, a.tol) {
        Ok(r) => {
            write_scores(&a.out, &r.argmin)?;
            println!(
                "converged in {} iterations, gradient sup-norm {:.3e}",
                r.iterations, r.final_grad_supnorm
            );
            Ok(EXIT_OK)
        }
        Err(BtlError::NotConverged(r)) => {
            write_scores(&a.out, &r.argmin)?;
            eprintln!(
                "warning: not converged ({:?}) after {} iterations; last iterate written",
                r.stop, r.iterations
            );
            Ok(if a.common.strict {
                EXIT_FAILURE
            } else {
                EXIT_OK
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn diagnose(a: DiagnoseArgs) -> Result<i32, CliError> {
    let penalty = parse_penalty(&a.penalty, a.gsq)?;
    let truth = read_scores(&a.truth)?.into_array();
    let (obs, has_wins) = read_observation(&a.input, Some(truth.len()))?;
    if !has_wins {
        return Err(usage(format!(
            "{}: the S column is required",
            a.input.display()
        )));
    }
    let (check, constants) =
        sup_expansion_check(&obs, &truth, penalty, resolve_seed(&a.common, None)?)?;

    let mut rows = vec![
        ("rho_dual".to_string(), Some(check.rho_dual)),
        ("rho_dual_l2".to_string(), Some(check.rho_dual_l2)),
        ("a_scaled".to_string(), Some(check.a_scaled)),
        ("tau3".to_string(), Some(constants.tau3)),
        ("d12".to_string(), Some(constants.d12)),
        ("d21".to_string(), Some(constants.d21)),
    ];
    if let Some(dg) = &check.diagnostics {
        rows.extend(
            dg.entries()
                .into_iter()
                .filter(|(k, _)| *k != "rho_dual")
                .map(|(k, v)| (k.to_string(), v)),
        );
    }
    let diag_text =
        std::iter::once("name,value".to_string())
            .chain(rows.iter().map(|(k, v)| {
                format!("{k},{}", v.map(|x| format!("{x:.16e}")).unwrap_or_default())
            }))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
    match &a.out {
        Some(out) => {
            write_residual_csv(out, &check.reports).map_err(usage)?;
            let side = a.diagnostics.clone().unwrap_or_else(|| {
                let mut s = out.as_os_str().to_owned();
                s.push(".diagnostics.csv");
                PathBuf::from(s)
            });
            std::fs::write(&side, &diag_text)
                .map_err(|e| usage(format!("{}: {e}", side.display())))?;
        }
        None => {
            write_residual_records(std::io::stdout().lock(), &check.reports).map_err(usage)?;
            if let Some(p) = &a.diagnostics {
                std::fs::write(p, &diag_text)
                    .map_err(|e| usage(format!("{}: {e}", p.display())))?;
            } else {
                print!("{diag_text}");
            }
        }
    }
    let violated = check.reports.iter().any(|r| r.violated());
    Ok(if violated && a.common.strict {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn ao(a: AoArgs) -> Result<i32, CliError> {
    let cfg = ExperimentConfig {
        n_list: vec![a.n],
        reps: 1,
        seed: resolve_seed(&a.common, None)?,
        ao_gap: a.gap,
        ao_steps: a.steps,
        ao_surrogate: a.surrogate,
        ..Default::default()
    };
    cfg.validate()?;
    let inst = ao_instance(&cfg, a.n, 0)?;
    if let Some(p) = &a.trace_out {
        write_trace_csv(p, &inst.trace).map_err(usage)?;
    }
    println!("ppT {:.6}", inst.trace.ppt_norm);
    match &inst.rate {
        Ok(r) => println!("rate {r:.6}"),
        Err(e) => println!("rate unavailable: {e}"),
    }
    let mut bad = false;
    match &inst.certificate {
        Ok(c) => {
            let viol = contraction_step_violations(&inst.trace, c, &inst.d, 1e-6);
            println!(
                "certificate {} (rho2 {:.4}, delta_nano {:.4}, radii {:.3e}/{:.3e}); contraction violations {}",
                if c.holds() { "holds" } else { "fails" },
                c.rho2,
                c.delta_nano,
                c.radii.0,
                c.radii.1,
                viol.len()
            );
            bad = c.holds() && !viol.is_empty();
        }
        Err(e) => println!("certificate unavailable: {e}"),
    }
    for (t, e) in inst.trace.theta_err_norms.iter().enumerate() {
        println!("{t} {e:.6e}");
    }
    Ok(if bad && a.common.strict {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn load_config(common: &Common) -> Result<(ExperimentConfig, Option<u64>), CliError> {
    let Some(p) = &common.config else {
        return Ok((ExperimentConfig::default(), None));
    };
    let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    let seed = value.get("seed").and_then(|s| s.as_u64());
    Ok((ExperimentConfig::from_json(&text)?, seed))
}

fn study(a: StudyArgs, which: &str) -> Result<i32, CliError> {
    let format: Format = a.format.parse()?;
    let (mut cfg, config_seed) = load_config(&a.common)?;
    cfg.seed = resolve_seed(&a.common, config_seed)?;
    if let Some(v) = a.n_list.clone() {
        cfg.n_list = v;
    }
    if let Some(v) = a.reps {
        cfg.reps = v;
    }
    if let Some(p) = a.p {
        cfg.p_rule = PRule::Fixed(p);
    }
    if let Some(v) = a.l {
        cfg.l = v;
    }
    if let Some(v) = a.gsq {
        cfg.gsq = v;
    }
    if let Some(k) = &a.penalty {
        cfg.penalty = match k.as_str() {
            "mean_shift" => PenaltyKind::MeanShift,
            "ridge" => PenaltyKind::Ridge,
            other => return Err(usage(format!("unknown penalty {other}"))),
        };
    }
    if let Some(v) = a.gap {
        cfg.ao_gap = v;
    }
    if let Some(v) = a.steps {
        cfg.ao_steps = v;
    }
    cfg.ao_surrogate |= a.surrogate;
    cfg.validate()?;

    let start = Instant::now();
    let (summaries, failures) = match which {
        "rho" => {
            let recs = run_rho_study(&cfg)?;
            let keep = |v: Option<f64>, c: bool| if c { v } else { None };
            let s = json!({
                "rho_dual": summaries_json(&study_summaries(&recs, |r| keep(r.rho_dual, r.connected))),
                "rho_dual_l2": summaries_json(&study_summaries(&recs, |r| keep(r.rho_dual_l2, r.connected))),
            });
            let fails = recs.iter().filter(|r| !r.connected).count();
            write_study(&recs, format, &a.out, &cfg, which, &s, start)?;
            (s, fails)
        }
        "expansion" => {
            let recs = run_expansion_study(&cfg)?;
            let s = json!({
                "lead_fish": summaries_json(&study_summaries(&recs, |r| r.converged.then_some(r.lead_fish).flatten())),
                "lead_diag": summaries_json(&study_summaries(&recs, |r| r.converged.then_some(r.lead_diag).flatten())),
                "rem_fish": summaries_json(&study_summaries(&recs, |r| r.rem_fish)),
                "rem_diag": summaries_json(&study_summaries(&recs, |r| r.rem_diag)),
            });
            let fails = recs.iter().filter(|r| !r.converged).count();
            write_study(&recs, format, &a.out, &cfg, which, &s, start)?;
            (s, fails)
        }
        _ => {
            let recs = run_ao_study(&cfg)?;
            let s = json!({
                "rate": summaries_json(&study_summaries(&recs, |r| r.rate)),
                "ppT": summaries_json(&study_summaries(&recs, |r| r.ppt)),
            });
            let fails = recs.iter().filter(|r| r.rate.is_none()).count();
            write_study(&recs, format, &a.out, &cfg, which, &s, start)?;
            (s, fails)
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&summaries).unwrap_or_default()
    );
    if failures > 0 {
        eprintln!("{failures} replication(s) excluded from summaries");
    }
    Ok(if failures > 0 && a.common.strict {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn summaries_json(
    s: &std::collections::BTreeMap<usize, (Option<crate::experiments::Summary>, usize)>,
) -> serde_json::Value {
    serde_json::Value::Array(
        s.iter()
            .map(|(n, (sum, excluded))| json!({"n": n, "summary": sum, "excluded": excluded}))
            .collect(),
    )
}

fn write_study<R: crate::experiments::StudyRecord>(
    recs: &[R],
    format: Format,
    out: &Path,
    cfg: &ExperimentConfig,
    which: &str,
    summaries: &serde_json::Value,
    start: Instant,
) -> Result<(), CliError> {
    let meta = json!({
        "study": which,
        "config": cfg,
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "records": recs.len(),
        "summaries": summaries,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    emit(recs, format, out, &meta)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn s(p: &Path) -> String {
        p.display().to_string()
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(["perturbopt", "bogus"]), EXIT_USAGE);
        assert_eq!(dispatch(["perturbopt", "fit", "--nope"]), EXIT_USAGE);
        assert_eq!(dispatch(["perturbopt", "fit", "--help"]), EXIT_OK);
    }

    #[test]
    fn fit_symmetric_pair() {
        let d = dir();
        let input = d.path().join("obs.csv");
        let out = d.path().join("scores.csv");
        std::fs::write(&input, "j,m,N,S\n1,2,2,1\n").unwrap();
        assert_eq!(
            dispatch([
                "perturbopt",
                "fit",
                "--input",
                &s(&input),
                "--out",
                &s(&out)
            ]),
            EXIT_OK
        );
        let v = read_scores(&out).unwrap().into_array();
        assert!(v.iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn fit_unbounded_is_failure_only_when_strict() {
        let d = dir();
        let input = d.path().join("obs.csv");
        let out = d.path().join("scores.csv");
        std::fs::write(&input, "j,m,N,S\n1,2,2,2\n").unwrap();
        let args = [
            "perturbopt",
            "fit",
            "--input",
            &s(&input),
            "--out",
            &s(&out),
        ];
        assert_eq!(dispatch(args), EXIT_OK);
        let mut strict = args.to_vec();
        strict.push("--strict");
        assert_eq!(dispatch(strict), EXIT_FAILURE);
    }

    #[test]
    fn study_rho_reproducible() {
        let d = dir();
        let a = d.path().join("a.csv");
        let b = d.path().join("b.csv");
        for p in [&a, &b] {
            let code = dispatch([
                "perturbopt",
                "study-rho",
                "--n-list",
                "30",
                "--reps",
                "3",
                "--seed",
                "1",
                "--out",
                &s(p),
            ]);
            assert_eq!(code, EXIT_OK);
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 4);
    }

    #[test]
    fn config_file_overridden_by_flags() {
        let d = dir();
        let cfg = d.path().join("cfg.json");
        std::fs::write(&cfg, r#"{"n_list": [12], "reps": 2, "seed": 5}"#).unwrap();
        let out = d.path().join("r.json");
        let code = dispatch([
            "perturbopt",
            "study-rho",
            "--config",
            &s(&cfg),
            "--reps",
            "3",
            "--format",
            "json",
            "--out",
            &s(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        let recs: Vec<crate::experiments::RhoRecord> =
            crate::experiments::read_records(Format::Json, &out).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.n == 12));
        assert_eq!(recs[0].seed, crate::experiments::replication_seed(5, 12, 0));
    }
}
