//! The six subcommands. Each returns the rendered output plus the verdicts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dudley::flow::PathSample;
use dudley::levy::{self, LevyMeasure};
use dudley::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{AsymptoticsRecord, Experiment, LyapunovRecord, StableRecord};
use crate::config::{Format, RunConfig};
use crate::report::{fraction, to_json, Ensemble, EnsembleReport, Verdict};
use crate::{check, CliError};

/// Output of a command: `text` goes to stdout (or to `--out`), `lines` are
/// human-readable verdict lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub lines: Vec<String>,
    pub pass: bool,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `text` to `--out` if set and returns what should go to stdout.
fn emit(cfg: &RunConfig, text: String) -> Result<String, CliError> {
    match &cfg.out {
        Some(p) => {
            write_file(Path::new(p), &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn closed_form(exp: &Experiment) -> Option<f64> {
    levy::closed_form_alpha(&exp.spec).ok()
}

#[derive(Debug, Clone, Serialize)]
struct AlphaReport {
    config: RunConfig,
    /// None when the tail integral diverges.
    alpha: Option<f64>,
    diffusive: f64,
    jump: Option<f64>,
    sphere_averaged: Option<f64>,
    tail_integrable: bool,
}

pub fn alpha(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::new(cfg.clone())?;
    let spec = &exp.spec;
    let diffusive = (spec.d as f64 - 1.0) * spec.sigma * spec.sigma / 2.0;
    let mut lines = Vec::new();
    let mut report = AlphaReport {
        config: cfg.clone(),
        alpha: None,
        diffusive,
        jump: None,
        sphere_averaged: None,
        tail_integrable: spec.tail_integrable(),
    };
    match levy::alpha_breakdown(spec) {
        Ok(b) => {
            lines.push(format!("alpha = {:?} (diffusive {:?}, jump {:?})", b.total(), b.diffusive, b.jump));
            report.alpha = Some(b.total());
            report.jump = Some(b.jump);
            if spec.d != 3 && spec.nu != LevyMeasure::Zero {
                let s = levy::sphere_averaged_alpha(spec)?;
                lines.push(format!(
                    "sphere-averaged drift of alpha_t for d = {}: {:?} (jump {:?})",
                    spec.d,
                    s.total(),
                    s.jump
                ));
                report.sphere_averaged = Some(s.total());
            }
        }
        Err(Error::NotTailIntegrable) => {
            lines.push("alpha = +inf (the integral of r nu(dr) over [1, inf) diverges)".into());
        }
        Err(e) => return Err(e.into()),
    }
    let text = match cfg.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let f = |x: Option<f64>| x.map_or("inf".to_string(), |v| format!("{v:e}"));
            format!(
                "alpha,diffusive,jump,sphere_averaged,tail_integrable\n{},{},{},{},{}\n",
                f(report.alpha),
                format_args!("{diffusive:e}"),
                f(report.jump),
                report.sphere_averaged.map_or(String::new(), |v| format!("{v:e}")),
                report.tail_integrable
            )
        }
    };
    if let Some(p) = &cfg.out {
        write_file(Path::new(p), &text)?;
    }
    Ok(Outcome { text: lines.join("\n") + "\n", lines, pass: true })
}

/// Column names of the path export for space dimension d.
pub fn path_columns(d: usize) -> Vec<String> {
    let mut c = vec!["t".to_string()];
    for i in 0..=d {
        for j in 0..=d {
            c.push(if d < 10 { format!("g{i}{j}") } else { format!("g{i}_{j}") });
        }
    }
    c.extend((0..=d).map(|i| format!("xi{i}")));
    c.push("alpha_t".into());
    c.extend((1..d).map(|i| format!("b{i}")));
    c.push("is_jump".into());
    c
}

fn path_rows(path: &PathSample, stride: usize) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
    let last = path.len() - 1;
    (0..path.len()).filter(move |&i| i % stride == 0 || i == last || path.is_jump(i)).map(move |i| {
        let g = path.g(i);
        let m = g.matrix();
        let d = path.dim();
        let mut row = vec![path.times()[i]];
        for a in 0..=d {
            for b in 0..=d {
                row.push(m[(a, b)]);
            }
        }
        row.extend(path.xi(i).as_slice());
        row.push(path.u(i));
        row.extend(path.b(i));
        (i, row)
    })
}

pub fn render_path(path: &PathSample, index: usize, stride: usize, format: Format) -> String {
    let d = path.dim();
    match format {
        Format::Csv => {
            let mut s = path_columns(d).join(",");
            s.push('\n');
            for (i, row) in path_rows(path, stride) {
                for x in row {
                    let _ = write!(s, "{x:e},");
                }
                s.push_str(if path.is_jump(i) { "1\n" } else { "0\n" });
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct PathJson<'a> {
                index: usize,
                seed: u64,
                jumps: usize,
                columns: Vec<String>,
                rows: &'a [Vec<f64>],
            }
            let rows: Vec<Vec<f64>> = path_rows(path, stride)
                .map(|(i, mut r)| {
                    r.push(if path.is_jump(i) { 1.0 } else { 0.0 });
                    r
                })
                .collect();
            to_json(&PathJson { index, seed: path.seed, jumps: path.jumps.len(), columns: path_columns(d), rows: &rows })
        }
    }
}

pub fn path_file_name(index: usize, format: Format) -> String {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    format!("path_{index:05}.{ext}")
}

/// One file per path under `--out` (a directory), or stdout for a single path.
pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::new(cfg.clone())?;
    let dir = match &cfg.out {
        Some(p) => Some(PathBuf::from(p)),
        None if cfg.n_paths == 1 => None,
        None => return Err(CliError::Config("simulate with n_paths > 1 needs --out <directory>".into())),
    };
    let chunk = rayon::current_num_threads().max(1);
    let mut stdout = String::new();
    let mut lines = Vec::new();
    for start in (0..cfg.n_paths).step_by(chunk) {
        let end = (start + chunk).min(cfg.n_paths);
        let rendered: Vec<(usize, String)> = (start..end)
            .into_par_iter()
            .map(|i| Ok((i, render_path(&exp.simulate(i)?, i, cfg.stride, cfg.format))))
            .collect::<Result<_, CliError>>()?;
        for (i, text) in rendered {
            match &dir {
                Some(d) => {
                    let p = d.join(path_file_name(i, cfg.format));
                    write_file(&p, &text)?;
                    lines.push(format!("wrote {}", p.display()));
                }
                None => stdout = text,
            }
        }
    }
    Ok(Outcome { text: stdout, lines, pass: true })
}

pub fn asymptotics_records(exp: &Experiment) -> Result<Vec<AsymptoticsRecord>, CliError> {
    exp.run(|i| {
        let path = exp.simulate(i)?;
        Ok(AsymptoticsRecord::compute(i, &exp.analysis(&path)?))
    })
}

pub fn asymptotics_verdicts(exp: &Experiment, records: &[AsymptoticsRecord]) -> Vec<Verdict> {
    let e = Ensemble::of(records);
    let a = e.mean("alpha_hat");
    let tol = exp.config.alpha_tolerance;
    let mut v = Vec::new();
    if let Some(cf) = closed_form(exp) {
        v.push(Verdict::at_most(
            "alpha_vs_closed_form",
            (e.mean("alpha_rate") - cf).abs() / cf,
            tol,
            format!("|mean alpha_T/T - {cf:.6}| / {cf:.6}"),
        ));
        if exp.spec.d != 3 && exp.spec.nu != LevyMeasure::Zero {
            if let Ok(s) = levy::sphere_averaged_alpha(&exp.spec) {
                let s = s.total();
                v.push(Verdict::at_most(
                    "alpha_vs_sphere_average",
                    (e.mean("alpha_rate") - s).abs() / s,
                    tol,
                    format!("|mean alpha_T/T - {s:.6}| / {s:.6}"),
                ));
            }
        }
    }
    v.push(Verdict::at_least(
        "nilpotent_rate",
        fraction(records.iter().map(|r| r.nilpotent_slope / r.alpha_hat), |x| x <= -0.8),
        0.9,
        "fraction of paths with slope log|b_t - b_inf| <= -0.8 alpha_hat",
    ));
    v.push(Verdict::at_least(
        "lambda_positive",
        fraction(records.iter().map(|r| r.lambda_inf_hat), |x| x > 0.0),
        0.95,
        "fraction of paths with lambda_inf_hat > 0",
    ));
    v.push(Verdict::at_most(
        "lambda_rate",
        e.mean("lambda_slope") / a,
        -0.8,
        "mean slope log|lambda - eta^-| / mean alpha_hat",
    ));
    v.push(Verdict::at_most(
        "eta_zero_growth",
        e.mean("eta_zero_slope") / a,
        0.1,
        "mean slope log|eta^0| / mean alpha_hat",
    ));
    v.push(Verdict::at_most(
        "eta_plus_growth",
        e.mean("eta_plus_slope") / a,
        1.1,
        "mean slope log eta^+ / mean alpha_hat",
    ));
    v.push(Verdict::at_most(
        "residual_rotation",
        e.mean("rotation_slope") / a,
        0.1,
        "mean slope r(h_t) / mean alpha_hat",
    ));
    v.push(Verdict::at_least(
        "residual_rotation_control",
        e.mean("wrong_alpha_slope") / a,
        0.25,
        "mean slope r(h_t) with 1.5 alpha_hat / mean alpha_hat",
    ));
    v
}

fn finish<R: crate::analysis::Record>(
    command: &str,
    exp: &Experiment,
    per_path: Vec<R>,
    verdicts: Vec<Verdict>,
) -> Result<Outcome, CliError> {
    let report = EnsembleReport {
        command: command.into(),
        config: exp.config.clone(),
        ensemble: Ensemble::of(&per_path),
        per_path,
        closed_form_alpha: closed_form(exp),
        verdicts,
    };
    let lines = report.verdicts.iter().map(|v| v.line()).collect();
    let pass = report.passed();
    Ok(Outcome { text: emit(&exp.config, report.render(exp.config.format))?, lines, pass })
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::new(cfg.clone())?;
    let records = asymptotics_records(&exp)?;
    let verdicts = asymptotics_verdicts(&exp, &records);
    finish("asymptotics", &exp, records, verdicts)
}

pub fn lyapunov_records(exp: &Experiment) -> Result<Vec<LyapunovRecord>, CliError> {
    exp.run(|i| {
        let path = exp.simulate(i)?;
        Ok(LyapunovRecord::compute(i, &exp.analysis(&path)?, &exp.probes(i), &exp.metric))
    })
}

/// Tolerance on each Lyapunov cluster, in units of the mean alpha_hat.
pub const CLUSTER_TOLERANCE: f64 = 0.15;

pub fn lyapunov_verdicts(records: &[LyapunovRecord]) -> Vec<Verdict> {
    let e = Ensemble::of(records);
    let a = e.mean("alpha_hat");
    let (m, z, g) = (e.mean("slope_minus"), e.mean("slope_zero"), e.mean("slope_generic"));
    let rule = |w: &str| format!("|mean slope ({w}) - target| / mean alpha_hat");
    vec![
        Verdict::at_most("lyapunov_minus", (m + a).abs() / a, CLUSTER_TOLERANCE, rule("V-, target -alpha")),
        Verdict::at_most("lyapunov_zero", z.abs() / a, CLUSTER_TOLERANCE, rule("V0 minus V-, target 0")),
        Verdict::at_most("lyapunov_generic", (g - a).abs() / a, CLUSTER_TOLERANCE, rule("generic, target +alpha")),
        Verdict::at_least(
            "lyapunov_separation",
            (z - m).min(g - z) / a,
            0.5,
            "smallest gap between cluster means / mean alpha_hat",
        ),
    ]
}

pub fn lyapunov(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::new(cfg.clone())?;
    let records = lyapunov_records(&exp)?;
    let verdicts = lyapunov_verdicts(&records);
    finish("lyapunov", &exp, records, verdicts)
}

pub fn stable_records(exp: &Experiment) -> Result<Vec<StableRecord>, CliError> {
    exp.run(|i| {
        let path = exp.simulate(i)?;
        Ok(StableRecord::compute(i, &exp.analysis(&path)?, &exp.probes(i), &exp.metric))
    })
}

/// Required tail minimum of the lower distance bound for separating pairs.
pub const SEPARATION_FLOOR: f64 = 1e-3;

pub fn stable_verdicts(records: &[StableRecord]) -> Vec<Verdict> {
    let e = Ensemble::of(records);
    let a = e.mean("alpha_hat");
    // a missing value counts as a failure
    let worst = |f: fn(&StableRecord) -> f64| {
        records.iter().map(f).map(|x| if x.is_nan() { f64::NEG_INFINITY } else { x }).fold(f64::INFINITY, f64::min)
    };
    vec![
        Verdict::at_most("stable_decay", e.mean("decay_slope") / a, -0.8, "mean slope log(upper), Y in V-, / mean alpha_hat"),
        Verdict::at_least(
            "stable_separation_abelian",
            worst(|r| r.abelian_lower_min),
            SEPARATION_FLOOR,
            "smallest tail minimum of lower, Y with an A component",
        ),
        Verdict::at_least(
            "stable_separation_u0",
            worst(|r| r.u0_lower_min),
            SEPARATION_FLOOR,
            "smallest tail minimum of lower, Y with a U0 component",
        ),
        Verdict::at_least(
            "control_unanchored_not_decaying",
            e.mean("control_slope") / a,
            -0.8,
            "mean slope log(upper), U+ direction without Ad(g_inf), / mean alpha_hat",
        ),
        Verdict::at_least(
            "control_contracting_lower_collapses",
            fraction(records.iter().map(|r| r.contracting_lower_min), |x| x < SEPARATION_FLOOR),
            0.9,
            "fraction of paths where lower, Y in V-, falls below the floor",
        ),
    ]
}

pub fn stable(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::new(cfg.clone())?;
    let records = stable_records(&exp)?;
    let verdicts = stable_verdicts(&records);
    finish("stable", &exp, records, verdicts)
}

#[derive(Debug, Clone, Serialize)]
struct CheckReport {
    config: RunConfig,
    checks: Vec<Verdict>,
}

pub fn check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::new(cfg.clone())?;
    let checks = check::run(&exp)?;
    let lines: Vec<String> = checks.iter().map(|v| v.line()).collect();
    let pass = checks.iter().all(|v| v.pass);
    let file = match cfg.format {
        Format::Json => to_json(&CheckReport { config: cfg.clone(), checks }),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "value", "bound", "rule", "pass"]).expect("in-memory write");
            for c in &checks {
                w.write_record([c.name.clone(), format!("{:e}", c.value), format!("{:e}", c.bound), c.rule.clone(), c.pass.to_string()])
                    .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
    };
    if let Some(p) = &cfg.out {
        write_file(Path::new(p), &file)?;
    }
    Ok(Outcome { text: lines.join("\n") + "\n", lines, pass })
}
